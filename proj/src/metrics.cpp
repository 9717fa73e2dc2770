#include "inrsteg/metrics.hpp"

#include <array>
#include <cmath>
#include <iomanip>
#include <vector>

namespace inrsteg {

namespace {

constexpr int kWindow = 11;
constexpr double kSigma = 1.5;

std::array<double, kWindow> gaussian_taps()
{
    std::array<double, kWindow> g{};
    double sum = 0.0;
    for (int i = 0; i < kWindow; ++i) {
        const double d = i - kWindow / 2;
        g[static_cast<std::size_t>(i)] = std::exp(-d * d / (2.0 * kSigma * kSigma));
        sum += g[static_cast<std::size_t>(i)];
    }
    for (auto& v : g) v /= sum;
    return g;
}

// Valid-region separable filter of an h x w plane.
std::vector<double> filter_valid(const std::vector<double>& plane, std::size_t h, std::size_t w)
{
    static const auto taps = gaussian_taps();
    const std::size_t ow = w - kWindow + 1, oh = h - kWindow + 1;
    std::vector<double> horiz(h * ow);
    for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < ow; ++x) {
            double s = 0.0;
            for (std::size_t k = 0; k < kWindow; ++k) s += taps[k] * plane[y * w + x + k];
            horiz[y * ow + x] = s;
        }
    std::vector<double> out(oh * ow);
    for (std::size_t y = 0; y < oh; ++y)
        for (std::size_t x = 0; x < ow; ++x) {
            double s = 0.0;
            for (std::size_t k = 0; k < kWindow; ++k) s += taps[k] * horiz[(y + k) * ow + x];
            out[y * ow + x] = s;
        }
    return out;
}

void require_same(std::span<const float> a, std::span<const float> b)
{
    if (a.size() != b.size())
        throw ShapeError("metric inputs differ in size (" + std::to_string(a.size()) + " vs " +
                         std::to_string(b.size()) + ")");
    if (a.empty()) throw ShapeError("metric inputs are empty");
}

}  // namespace

double psnr_from_rmse(double rmse)
{
    if (rmse < 255.0 * std::pow(10.0, -kMetricCapDb / 20.0)) return kMetricCapDb;
    return 20.0 * std::log10(255.0 / rmse);
}

PixelMetrics pixel_metrics(std::span<const float> a, std::span<const float> b)
{
    require_same(a, b);
    double abs_sum = 0.0, sq_sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
        abs_sum += std::abs(d);
        sq_sum += d * d;
    }
    const double n = static_cast<double>(a.size());
    PixelMetrics m;
    m.mae = abs_sum / n;
    m.rmse = std::sqrt(sq_sum / n);
    m.psnr = psnr_from_rmse(m.rmse);
    m.apd = m.mae;
    return m;
}

double ssim(std::span<const float> a, std::span<const float> b, std::size_t height, std::size_t width,
            std::size_t channels)
{
    require_same(a, b);
    if (a.size() != height * width * channels) throw ShapeError("SSIM input size does not match H x W x C");
    if (height < kWindow || width < kWindow)
        throw ShapeError("SSIM needs images of at least 11x11, got " + std::to_string(height) + "x" +
                         std::to_string(width));
    constexpr double L = 255.0;
    constexpr double c1 = (0.01 * L) * (0.01 * L);
    constexpr double c2 = (0.03 * L) * (0.03 * L);

    const std::size_t n = height * width;
    double total = 0.0;
    for (std::size_t c = 0; c < channels; ++c) {
        std::vector<double> x(n), y(n), xx(n), yy(n), xy(n);
        for (std::size_t i = 0; i < n; ++i) {
            x[i] = a[i * channels + c];
            y[i] = b[i * channels + c];
            xx[i] = x[i] * x[i];
            yy[i] = y[i] * y[i];
            xy[i] = x[i] * y[i];
        }
        const auto mx = filter_valid(x, height, width);
        const auto my = filter_valid(y, height, width);
        const auto exx = filter_valid(xx, height, width);
        const auto eyy = filter_valid(yy, height, width);
        const auto exy = filter_valid(xy, height, width);
        double sum = 0.0;
        for (std::size_t i = 0; i < mx.size(); ++i) {
            const double vx = exx[i] - mx[i] * mx[i];
            const double vy = eyy[i] - my[i] * my[i];
            const double cov = exy[i] - mx[i] * my[i];
            sum += ((2.0 * mx[i] * my[i] + c1) * (2.0 * cov + c2)) /
                   ((mx[i] * mx[i] + my[i] * my[i] + c1) * (vx + vy + c2));
        }
        total += sum / static_cast<double>(mx.size());
    }
    return total / static_cast<double>(channels);
}

double ssim(const MediaTensor& a, const MediaTensor& b)
{
    if (a.shape != b.shape) throw ShapeError("SSIM inputs differ in shape");
    if (a.modality == Modality::image) return ssim(a.values, b.values, a.shape[0], a.shape[1], a.shape[2]);
    if (a.modality != Modality::video) throw ArgumentError("SSIM is defined for image and video only");
    const std::size_t frames = a.shape[0];
    const std::size_t frame = a.values.size() / frames;
    double sum = 0.0;
    for (std::size_t t = 0; t < frames; ++t) {
        const std::span<const float> fa(a.values.data() + t * frame, frame);
        const std::span<const float> fb(b.values.data() + t * frame, frame);
        sum += ssim(fa, fb, a.shape[1], a.shape[2], a.shape[3]);
    }
    return sum / static_cast<double>(frames);
}

double snr(std::span<const float> reference, std::span<const float> estimate)
{
    require_same(reference, estimate);
    double signal = 0.0, noise = 0.0;
    for (std::size_t i = 0; i < reference.size(); ++i) {
        const double x = reference[i];
        const double d = x - static_cast<double>(estimate[i]);
        signal += x * x;
        noise += d * d;
    }
    if (signal == 0.0) throw ArgumentError("SNR is undefined for an all-zero reference signal");
    if (noise == 0.0) return kMetricCapDb;
    return std::min(kMetricCapDb, 10.0 * std::log10(signal / noise));
}

double pcm16_to_byte_scale(double v) { return (v + 32768.0) * 255.0 / 65535.0; }

MetricReport evaluate(const MediaTensor& reference, const MediaTensor& test)
{
    if (reference.modality != test.modality) throw ShapeError("cannot compare media of different modalities");
    if (reference.shape != test.shape) throw ShapeError("cannot compare media of different shapes");
    MetricReport r;
    switch (reference.modality) {
        case Modality::image: {
            const auto m = pixel_metrics(reference.values, test.values);
            r.mae = m.mae;
            r.rmse = m.rmse;
            r.psnr = m.psnr;
            if (reference.shape[0] >= 11 && reference.shape[1] >= 11) r.ssim = ssim(reference, test);
            break;
        }
        case Modality::video: {
            const auto m = pixel_metrics(reference.values, test.values);
            r.mae = m.mae;
            r.rmse = m.rmse;
            r.psnr = m.psnr;
            r.apd = m.apd;
            if (reference.shape[1] >= 11 && reference.shape[2] >= 11) r.ssim = ssim(reference, test);
            break;
        }
        case Modality::audio: {
            std::vector<float> ra(reference.values.size()), rb(test.values.size());
            for (std::size_t i = 0; i < ra.size(); ++i) {
                ra[i] = static_cast<float>(pcm16_to_byte_scale(reference.values[i]));
                rb[i] = static_cast<float>(pcm16_to_byte_scale(test.values[i]));
            }
            const auto m = pixel_metrics(ra, rb);
            r.mae = m.mae;
            r.rmse = m.rmse;
            r.psnr = m.psnr;
            r.snr = snr(reference.values, test.values);
            r.snr_255 = snr(ra, rb);
            break;
        }
        case Modality::sdf: {
            const auto m = pixel_metrics(reference.values, test.values);
            r.mae = m.mae;
            r.rmse = m.rmse;
            break;
        }
    }
    return r;
}

void write_report(std::ostream& out, const MetricReport& report)
{
    const auto flags = out.flags();
    const auto precision = out.precision();
    out << std::fixed << std::setprecision(6);
    auto line = [&](const char* key, const std::optional<double>& v) {
        if (v) out << key << '=' << *v << '\n';
    };
    line("mae", report.mae);
    line("rmse", report.rmse);
    line("psnr", report.psnr);
    line("ssim", report.ssim);
    line("snr", report.snr);
    line("snr_255", report.snr_255);
    line("apd", report.apd);
    out.flags(flags);
    out.precision(precision);
}

}  // namespace inrsteg
