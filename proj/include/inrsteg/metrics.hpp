#pragma once

#include <optional>
#include <ostream>
#include <span>

#include "inrsteg/media.hpp"

namespace inrsteg {

/// PSNR and SNR saturate here so identical inputs give a finite number.
inline constexpr double kMetricCapDb = 99.0;

struct PixelMetrics {
    double mae = 0.0;
    double rmse = 0.0;
    double psnr = 0.0;
    double apd = 0.0;
};

/// Metrics on the 0..255 scale. apd is the mean absolute difference over the
/// whole tensor (identical to mae; video reports it under its own name).
PixelMetrics pixel_metrics(std::span<const float> a, std::span<const float> b);

/// 20 log10(255 / rmse), capped at kMetricCapDb.
double psnr_from_rmse(double rmse);

/// Mean SSIM of an H x W x C image (row-major, channels interleaved):
/// 11x11 Gaussian window with sigma 1.5, K1 = 0.01, K2 = 0.03, L = 255, over
/// valid window positions only, averaged over channels.
double ssim(std::span<const float> a, std::span<const float> b, std::size_t height, std::size_t width,
            std::size_t channels);

/// SSIM for images, mean over frames for video.
double ssim(const MediaTensor& a, const MediaTensor& b);

/// 10 log10(sum x^2 / sum (x - y)^2), capped at kMetricCapDb.
double snr(std::span<const float> reference, std::span<const float> estimate);

/// PCM16 sample -> 0..255.
double pcm16_to_byte_scale(double v);

struct MetricReport {
    std::optional<double> mae;
    std::optional<double> rmse;
    std::optional<double> psnr;
    std::optional<double> ssim;
    std::optional<double> snr;
    /// SNR on the 0..255 remapped scale, audio only.
    std::optional<double> snr_255;
    std::optional<double> apd;
};

/// Modality-appropriate report: image {mae, rmse, psnr, ssim}; video
/// {psnr, ssim, apd, mae, rmse}; audio {mae (0..255 scale), snr, snr_255, rmse, psnr};
/// sdf {mae, rmse}.
MetricReport evaluate(const MediaTensor& reference, const MediaTensor& test);

/// Fixed-order `key=value` lines; absent metrics are omitted.
void write_report(std::ostream& out, const MetricReport& report);

}  // namespace inrsteg
