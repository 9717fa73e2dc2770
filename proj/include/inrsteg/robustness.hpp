#pragma once

#include <cstdint>
#include <ostream>
#include <vector>

#include "inrsteg/media.hpp"
#include "inrsteg/siren.hpp"
#include "inrsteg/train.hpp"

namespace inrsteg {

/// Affine int8 tensor: w' = scale * (q - zero_point).
struct QuantizedTensor {
    double scale = 1.0;
    std::int32_t zero_point = 0;
    std::vector<std::int8_t> values;
    friend bool operator==(const QuantizedTensor&, const QuantizedTensor&) = default;
};

/// Tensors in flat order: W0, b0, W1, b1, ...
struct QuantizedModel {
    SirenSpec spec;
    std::vector<QuantizedTensor> tensors;
    friend bool operator==(const QuantizedModel&, const QuantizedModel&) = default;
};

/// s = (max - min) / 254, z = round(-128 - min / s),
/// q = clamp(round(w / s) + z, -128, 127). A constant tensor c gets s = |c|
/// (1 when c = 0) and dequantizes to exactly c.
QuantizedTensor quantize_tensor(std::span<const float> values);
std::vector<float> dequantize_tensor(const QuantizedTensor& t);

QuantizedModel quantize_int8(const SirenSpec& spec, const WeightSet& ws);
WeightSet dequantize(const QuantizedModel& qm);

struct PruneSchedule {
    double start_rate = 0.001;
    double step = 0.001;
    double max_rate = 0.10;
    std::uint64_t finetune_steps = 300;

    void validate() const;
    /// start, start + step, ... up to and including max_rate.
    std::vector<double> rates() const;
};

struct PruneStep {
    double rate = 0.0;
    std::size_t pruned = 0;
    double psnr = 0.0;
    /// NaN when the cover has no SSIM (audio, sdf).
    double ssim = 0.0;
};

struct PruneResult {
    WeightSet weights;
    /// 1 where an entry has been pruned to zero.
    FreezeMask pruned;
    std::vector<PruneStep> report;
};

/// Number of entries that must be pruned at `rate` out of `eligible`.
std::size_t prune_target(double rate, std::size_t eligible);

/// Zeroes the smallest-magnitude eligible weights (not secret, not already
/// pruned; lowest flat index first on ties) until `target` entries are
/// pruned in total. Only weight matrices are pruned, never biases.
void prune_to(WeightSet& ws, const FreezeMask& secret, FreezeMask& pruned, std::size_t target);

/// Iterative magnitude pruning with a cover finetune after every rate.
/// Secret and pruned entries stay frozen throughout.
PruneResult prune_iterative(const SirenSpec& spec, const WeightSet& stego, const FreezeMask& secret,
                            const MediaTensor& cover, const PruneSchedule& schedule, const TrainConfig& cfg);

/// Count of prunable (non-secret weight-matrix) entries.
std::size_t prune_eligible(const WeightSet& ws, const FreezeMask& secret);

void write_prune_report(std::ostream& out, const std::vector<PruneStep>& report);

struct HistogramBin {
    double left = 0.0;
    double right = 0.0;
    std::size_t count = 0;
};

/// Equal-width histogram over all parameters. With log_scale each value is
/// first mapped to ln(|w| + 1e-12).
std::vector<HistogramBin> weight_histogram(const WeightSet& ws, std::size_t bins, bool log_scale);

void write_histogram_csv(std::ostream& out, const std::vector<HistogramBin>& hist);

}  // namespace inrsteg
