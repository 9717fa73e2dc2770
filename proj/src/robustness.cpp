#include "inrsteg/robustness.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>

#include "inrsteg/metrics.hpp"

namespace inrsteg {

// --- quantization ---------------------------------------------------------

QuantizedTensor quantize_tensor(std::span<const float> values)
{
    QuantizedTensor q;
    q.values.resize(values.size());
    if (values.empty()) return q;
    const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
    const double lo = *lo_it, hi = *hi_it;
    // A constant tensor c uses s = |c| so that q - z = sign(c) restores it exactly.
    q.scale = hi > lo ? (hi - lo) / 254.0 : lo != 0.0 ? std::abs(lo) : 1.0;
    // nearbyint rounds half to even under the default rounding mode.
    q.zero_point = static_cast<std::int32_t>(std::nearbyint(-128.0 - lo / q.scale));
    for (std::size_t i = 0; i < values.size(); ++i) {
        const double v = std::nearbyint(static_cast<double>(values[i]) / q.scale) + q.zero_point;
        q.values[i] = static_cast<std::int8_t>(std::clamp(v, -128.0, 127.0));
    }
    return q;
}

std::vector<float> dequantize_tensor(const QuantizedTensor& t)
{
    std::vector<float> out(t.values.size());
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = static_cast<float>(t.scale * (static_cast<double>(t.values[i]) - t.zero_point));
    return out;
}

QuantizedModel quantize_int8(const SirenSpec& spec, const WeightSet& ws)
{
    if (!ws.conforms(spec)) throw ShapeError("weight set does not conform to the network spec");
    if (!all_finite(ws)) throw ArgumentError("cannot quantize non-finite weights");
    QuantizedModel qm;
    qm.spec = spec;
    for (const auto& layer : ws.layers) {
        qm.tensors.push_back(quantize_tensor(layer.weight));
        qm.tensors.push_back(quantize_tensor(layer.bias));
    }
    return qm;
}

WeightSet dequantize(const QuantizedModel& qm)
{
    WeightSet ws = WeightSet::zeros(qm.spec);
    if (qm.tensors.size() != 2 * ws.layers.size()) throw ShapeError("quantized model has the wrong tensor count");
    for (std::size_t l = 0; l < ws.layers.size(); ++l) {
        auto w = dequantize_tensor(qm.tensors[2 * l]);
        auto b = dequantize_tensor(qm.tensors[2 * l + 1]);
        if (w.size() != ws.layers[l].weight.size() || b.size() != ws.layers[l].bias.size())
            throw ShapeError("quantized tensor sizes do not match the spec");
        ws.layers[l].weight = std::move(w);
        ws.layers[l].bias = std::move(b);
    }
    return ws;
}

// --- pruning --------------------------------------------------------------

void PruneSchedule::validate() const
{
    if (!(start_rate > 0.0) || !(start_rate <= max_rate) || !(max_rate <= 1.0))
        throw ArgumentError("prune schedule needs 0 < start <= max <= 1");
    if (!(step > 0.0)) throw ArgumentError("prune schedule step must be > 0");
}

std::vector<double> PruneSchedule::rates() const
{
    validate();
    std::vector<double> out;
    // Multiples of the step avoid accumulating rounding error.
    for (std::size_t i = 0;; ++i) {
        const double r = start_rate + static_cast<double>(i) * step;
        if (r > max_rate + 1e-12) break;
        out.push_back(std::min(r, max_rate));
    }
    return out;
}

std::size_t prune_target(double rate, std::size_t eligible)
{
    // 0.003 * 1000 evaluates to 3.0000000000000004; don't let that round up.
    const double exact = rate * static_cast<double>(eligible);
    return std::min(eligible, static_cast<std::size_t>(std::ceil(exact - 1e-9)));
}

std::size_t prune_eligible(const WeightSet& ws, const FreezeMask& secret)
{
    if (!ws.same_shape(secret)) throw ShapeError("secret mask does not match the weights");
    std::size_t n = 0;
    for (const auto& m : secret.layers)
        for (auto v : m.weight) n += v == 0;
    return n;
}

void prune_to(WeightSet& ws, const FreezeMask& secret, FreezeMask& pruned, std::size_t target)
{
    if (!ws.same_shape(secret) || !ws.same_shape(pruned)) throw ShapeError("prune masks do not match the weights");
    struct Candidate {
        float magnitude;
        std::size_t layer;
        std::size_t index;
        std::size_t flat;
    };
    std::vector<Candidate> candidates;
    std::size_t already = 0;
    std::size_t flat = 0;
    for (std::size_t l = 0; l < ws.layers.size(); ++l) {
        const auto& w = ws.layers[l].weight;
        for (std::size_t i = 0; i < w.size(); ++i, ++flat) {
            if (secret.layers[l].weight[i]) continue;
            if (pruned.layers[l].weight[i]) {
                ++already;
                continue;
            }
            candidates.push_back({std::abs(w[i]), l, i, flat});
        }
        flat += ws.layers[l].bias.size();
    }
    if (target <= already) return;
    const std::size_t need = std::min(target - already, candidates.size());
    auto less = [](const Candidate& a, const Candidate& b) {
        return a.magnitude != b.magnitude ? a.magnitude < b.magnitude : a.flat < b.flat;
    };
    std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(need), candidates.end(), less);
    for (std::size_t k = 0; k < need; ++k) {
        const auto& c = candidates[k];
        ws.layers[c.layer].weight[c.index] = 0.0f;
        pruned.layers[c.layer].weight[c.index] = 1;
    }
}

PruneResult prune_iterative(const SirenSpec& spec, const WeightSet& stego, const FreezeMask& secret,
                            const MediaTensor& cover, const PruneSchedule& schedule, const TrainConfig& cfg)
{
    if (!stego.conforms(spec) || !stego.same_shape(secret)) throw ShapeError("stego weights or mask do not match the spec");
    const auto rates = schedule.rates();
    const CoordDataset data = coord_dataset(cover);

    PruneResult result;
    result.weights = stego;
    result.pruned = FreezeMask::zeros(spec);
    const std::size_t eligible = prune_eligible(stego, secret);

    TrainConfig tune = cfg;
    tune.steps = schedule.finetune_steps;
    FreezeMask frozen = secret;
    for (double rate : rates) {
        const std::size_t target = prune_target(rate, eligible);
        prune_to(result.weights, secret, result.pruned, target);
        for (std::size_t l = 0; l < frozen.layers.size(); ++l)
            for (std::size_t i = 0; i < frozen.layers[l].weight.size(); ++i)
                frozen.layers[l].weight[i] = secret.layers[l].weight[i] | result.pruned.layers[l].weight[i];

        result.weights = fit(spec, std::move(result.weights), data, tune, &frozen).weights;

        const MediaTensor recon = reconstruct(spec, result.weights, cover.modality, cover.shape, cover.range, cover.points);
        PruneStep step;
        step.rate = rate;
        step.pruned = target;
        const bool visual = cover.modality == Modality::image || cover.modality == Modality::video;
        if (cover.modality == Modality::audio) {
            std::vector<float> a(cover.values.size()), b(recon.values.size());
            for (std::size_t i = 0; i < a.size(); ++i) {
                a[i] = static_cast<float>(pcm16_to_byte_scale(cover.values[i]));
                b[i] = static_cast<float>(pcm16_to_byte_scale(recon.values[i]));
            }
            step.psnr = pixel_metrics(a, b).psnr;
        } else {
            step.psnr = pixel_metrics(cover.values, recon.values).psnr;
        }
        step.ssim = visual ? ssim(cover, recon) : std::numeric_limits<double>::quiet_NaN();
        result.report.push_back(step);
    }
    return result;
}

void write_prune_report(std::ostream& out, const std::vector<PruneStep>& report)
{
    out << "rate,pruned,psnr,ssim\n";
    for (const auto& s : report) {
        out << std::setprecision(6) << s.rate << ',' << s.pruned << ',' << std::setprecision(8) << s.psnr << ',';
        if (std::isnan(s.ssim))
            out << "nan";
        else
            out << s.ssim;
        out << '\n';
    }
}

// --- histogram ------------------------------------------------------------

std::vector<HistogramBin> weight_histogram(const WeightSet& ws, std::size_t bins, bool log_scale)
{
    if (bins == 0) throw ArgumentError("histogram needs at least one bin");
    std::vector<double> v;
    v.reserve(ws.size());
    ws.for_each([&](float w) { v.push_back(log_scale ? std::log(std::abs(static_cast<double>(w)) + 1e-12) : w); });

    std::vector<HistogramBin> hist(bins);
    if (v.empty()) return hist;
    const auto [lo_it, hi_it] = std::minmax_element(v.begin(), v.end());
    const double lo = *lo_it;
    const double hi = *hi_it > lo ? *hi_it : lo + 1.0;
    const double width = (hi - lo) / static_cast<double>(bins);
    for (std::size_t b = 0; b < bins; ++b) {
        hist[b].left = lo + width * static_cast<double>(b);
        hist[b].right = b + 1 == bins ? hi : lo + width * static_cast<double>(b + 1);
    }
    for (double x : v) {
        auto b = static_cast<std::size_t>((x - lo) / width);
        hist[std::min(b, bins - 1)].count++;
    }
    return hist;
}

void write_histogram_csv(std::ostream& out, const std::vector<HistogramBin>& hist)
{
    out << "bin_left,bin_right,count\n" << std::setprecision(9);
    for (const auto& b : hist) out << b.left << ',' << b.right << ',' << b.count << '\n';
}

}  // namespace inrsteg
