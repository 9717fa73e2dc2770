#pragma once
// Brute-force reference metrics used to cross-check the library.

#include <cmath>
#include <cstddef>
#include <vector>

namespace inrsteg::oracle {

struct Pixel {
    double mae = 0.0;
    double rmse = 0.0;
    double psnr = 0.0;
};

inline Pixel pixel(const std::vector<float>& a, const std::vector<float>& b)
{
    double abs_sum = 0.0, sq = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = static_cast<double>(b[i]) - static_cast<double>(a[i]);
        abs_sum += std::fabs(d);
        sq += d * d;
    }
    Pixel p;
    p.mae = abs_sum / static_cast<double>(a.size());
    p.rmse = std::sqrt(sq / static_cast<double>(a.size()));
    p.psnr = p.rmse == 0.0 ? 99.0 : std::min(99.0, 10.0 * std::log10(255.0 * 255.0 / (p.rmse * p.rmse)));
    return p;
}

/// Direct 2-D Gaussian window with two-pass moments per position.
inline double ssim(const std::vector<float>& a, const std::vector<float>& b, std::size_t h, std::size_t w,
                   std::size_t c)
{
    const int r = 5;
    const double sigma = 1.5;
    double kernel[11][11];
    double ksum = 0.0;
    for (int i = -r; i <= r; ++i)
        for (int j = -r; j <= r; ++j) {
            kernel[i + r][j + r] = std::exp(-(i * i + j * j) / (2.0 * sigma * sigma));
            ksum += kernel[i + r][j + r];
        }
    const double c1 = 0.01 * 255 * 0.01 * 255;
    const double c2 = 0.03 * 255 * 0.03 * 255;
    double total = 0.0;
    for (std::size_t ch = 0; ch < c; ++ch) {
        double sum = 0.0;
        std::size_t count = 0;
        for (std::size_t y = 0; y + 11 <= h; ++y)
            for (std::size_t x = 0; x + 11 <= w; ++x) {
                auto at = [&](const std::vector<float>& v, std::size_t i, std::size_t j) {
                    return static_cast<double>(v[((y + i) * w + (x + j)) * c + ch]);
                };
                double ma = 0.0, mb = 0.0;
                for (std::size_t i = 0; i < 11; ++i)
                    for (std::size_t j = 0; j < 11; ++j) {
                        const double k = kernel[i][j] / ksum;
                        ma += k * at(a, i, j);
                        mb += k * at(b, i, j);
                    }
                double va = 0.0, vb = 0.0, cov = 0.0;
                for (std::size_t i = 0; i < 11; ++i)
                    for (std::size_t j = 0; j < 11; ++j) {
                        const double k = kernel[i][j] / ksum;
                        const double da = at(a, i, j) - ma, db = at(b, i, j) - mb;
                        va += k * da * da;
                        vb += k * db * db;
                        cov += k * da * db;
                    }
                sum += (2 * ma * mb + c1) * (2 * cov + c2) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
                ++count;
            }
        total += sum / static_cast<double>(count);
    }
    return total / static_cast<double>(c);
}

inline double snr(const std::vector<float>& x, const std::vector<float>& y)
{
    double sig = 0.0, err = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sig += static_cast<double>(x[i]) * x[i];
        const double d = static_cast<double>(x[i]) - y[i];
        err += d * d;
    }
    if (err == 0.0) return 99.0;
    return std::min(99.0, 10.0 * std::log10(sig / err));
}

}  // namespace inrsteg::oracle
