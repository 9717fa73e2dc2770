#pragma once

#include <cstdint>
#include <vector>

#include "inrsteg/siren.hpp"

namespace inrsteg {

struct TrainConfig {
    double learning_rate = 1e-4;
    std::uint64_t steps = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    /// Samples per step. 0 selects the full grid up to kMaxFullBatch samples.
    std::size_t batch_size = 0;
    std::uint64_t seed = 0;
    /// Stop once the best loss has not improved by a relative 1e-6 for this
    /// many steps. 0 disables early stopping.
    std::uint64_t early_stop_patience = 0;
    unsigned threads = 1;

    static constexpr std::size_t kMaxFullBatch = 65536;

    void validate() const;
};

/// Adam first and second moments, shaped like the weights.
struct AdamState {
    ParamSet<float> m;
    ParamSet<float> v;

    static AdamState zeros(const SirenSpec& spec) { return {ParamSet<float>::zeros(spec), ParamSet<float>::zeros(spec)}; }
};

/// One bias-corrected Adam update at step `t` (1-based). Entries flagged in
/// `mask` are skipped entirely: neither the weight nor its moments change.
void adam_step(WeightSet& ws, AdamState& state, const Gradients& grads, const FreezeMask* mask,
               const TrainConfig& cfg, std::uint64_t t);

struct FitResult {
    WeightSet weights;
    /// Batch loss evaluated before each update.
    std::vector<float> loss_trace;
    bool stopped_early = false;
};

/// Raised when the loss becomes non-finite. Carries the last weights whose
/// loss was finite.
class DivergenceError : public Error {
public:
    DivergenceError(std::uint64_t step, WeightSet last_finite);

    std::uint64_t step() const { return step_; }
    const WeightSet& last_finite() const { return last_finite_; }

private:
    std::uint64_t step_;
    WeightSet last_finite_;
};

/// Trains `ws` on `data` with Adam. With a mask, frozen entries of the
/// returned weights are bit-identical to the input.
FitResult fit(const SirenSpec& spec, WeightSet ws, const CoordDataset& data, const TrainConfig& cfg,
              const FreezeMask* mask = nullptr);

/// Worker count from the INRSTEG_THREADS environment variable, or `fallback`.
unsigned threads_from_env(unsigned fallback = 1);

}  // namespace inrsteg
