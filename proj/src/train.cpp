#include "inrsteg/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <numeric>
#include <random>
#include <string>

#include "rng.hpp"

namespace inrsteg {

void TrainConfig::validate() const
{
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw ArgumentError("learning rate must be > 0");
    if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0))
        throw ArgumentError("Adam betas must lie in [0, 1)");
    if (!(epsilon > 0.0)) throw ArgumentError("Adam epsilon must be > 0");
}

DivergenceError::DivergenceError(std::uint64_t step, WeightSet last_finite)
    : Error("training diverged (non-finite loss) at step " + std::to_string(step)),
      step_(step),
      last_finite_(std::move(last_finite))
{
}

void adam_step(WeightSet& ws, AdamState& state, const Gradients& grads, const FreezeMask* mask,
               const TrainConfig& cfg, std::uint64_t t)
{
    if (t == 0) throw ArgumentError("Adam step index starts at 1");
    if (!ws.same_shape(grads) || !ws.same_shape(state.m) || !ws.same_shape(state.v) ||
        (mask && !ws.same_shape(*mask)))
        throw ShapeError("Adam operands have mismatched shapes");

    const double b1 = cfg.beta1, b2 = cfg.beta2;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(t));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(t));
    const float step = static_cast<float>(cfg.learning_rate / c1);
    const float inv_c2 = static_cast<float>(1.0 / c2);
    const float fb1 = static_cast<float>(b1), fb2 = static_cast<float>(b2);
    const float eps = static_cast<float>(cfg.epsilon);

    auto update = [&](std::vector<float>& w, std::vector<float>& m, std::vector<float>& v,
                      const std::vector<float>& g, const std::vector<std::uint8_t>* frozen) {
        for (std::size_t i = 0; i < w.size(); ++i) {
            if (frozen && (*frozen)[i]) continue;
            m[i] = fb1 * m[i] + (1.0f - fb1) * g[i];
            v[i] = fb2 * v[i] + (1.0f - fb2) * g[i] * g[i];
            w[i] -= step * m[i] / (std::sqrt(v[i] * inv_c2) + eps);
        }
    };
    for (std::size_t l = 0; l < ws.layers.size(); ++l) {
        auto& L = ws.layers[l];
        const auto* fm = mask ? &mask->layers[l] : nullptr;
        update(L.weight, state.m.layers[l].weight, state.v.layers[l].weight, grads.layers[l].weight,
               fm ? &fm->weight : nullptr);
        update(L.bias, state.m.layers[l].bias, state.v.layers[l].bias, grads.layers[l].bias,
               fm ? &fm->bias : nullptr);
    }
}

namespace {

class BatchSchedule {
public:
    BatchSchedule(const CoordDataset& data, std::size_t batch_size, std::uint64_t seed)
        : data_(data), rng_(seed), order_(data.size())
    {
        const std::size_t n = data.size();
        if (batch_size == 0) batch_size = n <= TrainConfig::kMaxFullBatch ? n : TrainConfig::kMaxFullBatch;
        batch_ = std::min(batch_size, n);
        full_ = batch_ == n;
        std::iota(order_.begin(), order_.end(), std::size_t{0});
        cursor_ = n;  // forces a shuffle on first use
    }

    bool full() const { return full_; }

    /// Fills coords/targets with the next mini-batch, reshuffling per epoch.
    void next(std::vector<float>& coords, std::vector<float>& targets)
    {
        const std::size_t in = data_.in_dim, out = data_.out_dim;
        coords.resize(batch_ * in);
        targets.resize(batch_ * out);
        for (std::size_t k = 0; k < batch_; ++k) {
            if (cursor_ >= order_.size()) shuffle();
            const std::size_t idx = order_[cursor_++];
            std::copy_n(data_.coords.begin() + idx * in, in, coords.begin() + k * in);
            std::copy_n(data_.targets.begin() + idx * out, out, targets.begin() + k * out);
        }
    }

private:
    void shuffle()
    {
        for (std::size_t i = order_.size(); i > 1; --i) {
            const std::size_t j = detail::uniform_index(rng_, i);
            std::swap(order_[i - 1], order_[j]);
        }
        cursor_ = 0;
    }

    const CoordDataset& data_;
    std::mt19937_64 rng_;
    std::vector<std::size_t> order_;
    std::size_t cursor_ = 0;
    std::size_t batch_ = 0;
    bool full_ = false;
};

}  // namespace

FitResult fit(const SirenSpec& spec, WeightSet ws, const CoordDataset& data, const TrainConfig& cfg,
              const FreezeMask* mask)
{
    spec.validate();
    cfg.validate();
    data.validate();
    if (data.size() == 0) throw ShapeError("cannot fit an empty dataset");
    if (data.in_dim != spec.in_dim || data.out_dim != spec.out_dim)
        throw ShapeError("dataset dims do not match the network spec");
    if (!ws.conforms(spec)) throw ShapeError("weight set does not conform to the network spec");
    if (mask && !ws.same_shape(*mask)) throw ShapeError("freeze mask does not conform to the weight set");

    FitResult result;
    result.loss_trace.reserve(cfg.steps);
    AdamState state = AdamState::zeros(spec);
    BatchSchedule schedule(data, cfg.batch_size, cfg.seed);
    std::vector<float> coords, targets;

    double best = std::numeric_limits<double>::infinity();
    std::uint64_t since_best = 0;
    WeightSet previous;  // weights evaluated at the previous step
    for (std::uint64_t t = 1; t <= cfg.steps; ++t) {
        LossAndGrads<float> lg;
        if (schedule.full()) {
            lg = loss_and_grads<float>(spec, ws, data.coords, data.targets, cfg.threads);
        } else {
            schedule.next(coords, targets);
            lg = loss_and_grads<float>(spec, ws, coords, targets, cfg.threads);
        }
        if (!std::isfinite(lg.loss)) throw DivergenceError(t, t == 1 ? std::move(ws) : std::move(previous));
        result.loss_trace.push_back(lg.loss);
        previous = ws;
        adam_step(ws, state, lg.grads, mask, cfg, t);

        if (cfg.early_stop_patience > 0) {
            if (lg.loss < best * (1.0 - 1e-6)) {
                best = lg.loss;
                since_best = 0;
            } else if (++since_best >= cfg.early_stop_patience) {
                result.stopped_early = true;
                break;
            }
        }
    }
    result.weights = std::move(ws);
    return result;
}

unsigned threads_from_env(unsigned fallback)
{
    const char* env = std::getenv("INRSTEG_THREADS");
    if (!env || !*env) return fallback;
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (*end != '\0' || v < 1) return fallback;
    return static_cast<unsigned>(v);
}

}  // namespace inrsteg
