#include "inrsteg/siren.hpp"

#include <Eigen/Core>

#include <bit>
#include <cmath>
#include <random>
#include <string>
#include <thread>

#include "rng.hpp"

namespace inrsteg {

namespace {

template <typename T>
using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
template <typename T>
using RowMajorMap = Eigen::Map<const Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
template <typename T>
using ColMap = Eigen::Map<const Mat<T>>;
template <typename T>
using VecMap = Eigen::Map<const Eigen::Matrix<T, Eigen::Dynamic, 1>>;

void check_weights(const SirenSpec& spec, const auto& ws)
{
    if (!ws.conforms(spec)) throw ShapeError("weight set does not conform to the network spec");
}

// Activations are stored with one sample per column.
template <typename T>
struct Trace {
    std::vector<Mat<T>> inputs;  // input of layer l, cols(l) x B
    std::vector<Mat<T>> phases;  // omega0 * (W x + b) for hidden layers
};

template <typename T>
Mat<T> run_forward(const SirenSpec& spec, const ParamSet<T>& ws, Mat<T> x, Trace<T>* trace)
{
    const T omega = static_cast<T>(spec.omega0);
    const std::size_t n = spec.hidden_layers;
    for (std::size_t l = 0; l <= n; ++l) {
        const auto& layer = ws.layers[l];
        RowMajorMap<T> w(layer.weight.data(), layer.rows, layer.cols);
        VecMap<T> b(layer.bias.data(), layer.rows);
        Mat<T> z = w * x;
        z.colwise() += b;
        if (trace) trace->inputs.push_back(std::move(x));
        if (l == n) return z;
        z *= omega;
        x = z.array().sin().matrix();
        if (trace) trace->phases.push_back(std::move(z));
    }
    return x;  // unreachable
}

template <typename T>
void backward_chunk(const SirenSpec& spec, const ParamSet<T>& ws, std::span<const T> coords,
                    std::span<const T> targets, std::size_t begin, std::size_t end, T scale,
                    T& loss_sum, ParamSet<T>& grads)
{
    const std::size_t count = end - begin;
    const std::size_t in = spec.in_dim;
    const std::size_t out = spec.out_dim;
    Mat<T> x = ColMap<T>(coords.data() + begin * in, in, count);
    Mat<T> y = ColMap<T>(targets.data() + begin * out, out, count);

    Trace<T> trace;
    Mat<T> pred = run_forward(spec, ws, std::move(x), &trace);
    Mat<T> resid = pred - y;
    loss_sum = resid.squaredNorm();

    const T omega = static_cast<T>(spec.omega0);
    Mat<T> delta = resid * (T{2} * scale);
    for (std::size_t l = spec.hidden_layers + 1; l-- > 0;) {
        const auto& layer = ws.layers[l];
        auto& g = grads.layers[l];
        if (l < spec.hidden_layers) {
            // d sin(omega z') / dz' where z' = omega * pre-activation
            delta.array() *= trace.phases[l].array().cos() * omega;
        }
        Mat<T> gw = delta * trace.inputs[l].transpose();
        // gw is column-major; store row-major.
        for (std::size_t r = 0; r < g.rows; ++r)
            for (std::size_t c = 0; c < g.cols; ++c) g.weight[r * g.cols + c] = gw(r, c);
        Eigen::Matrix<T, Eigen::Dynamic, 1> gb = delta.rowwise().sum();
        for (std::size_t r = 0; r < g.rows; ++r) g.bias[r] = gb(r);
        if (l > 0) {
            RowMajorMap<T> w(layer.weight.data(), layer.rows, layer.cols);
            delta = w.transpose() * delta;
        }
    }
}

}  // namespace

void SirenSpec::validate() const
{
    if (in_dim == 0 || out_dim == 0) throw ArgumentError("network input and output dims must be >= 1");
    if (hidden_layers == 0) throw ArgumentError("network needs at least one hidden layer");
    if (width == 0) throw ArgumentError("hidden width must be >= 1");
    if (!(omega0 > 0.0f) || !std::isfinite(omega0)) throw ArgumentError("omega0 must be positive and finite");
}

std::size_t SirenSpec::parameter_count() const
{
    const std::size_t i = in_dim, o = out_dim, n = hidden_layers, d = width;
    return d * i + (n - 1) * d * d + o * d + n * d + o;
}

bool bitwise_equal(const WeightSet& a, const WeightSet& b)
{
    if (!a.same_shape(b)) return false;
    for (std::size_t l = 0; l < a.layers.size(); ++l) {
        const auto& x = a.layers[l];
        const auto& y = b.layers[l];
        for (std::size_t i = 0; i < x.weight.size(); ++i)
            if (std::bit_cast<std::uint32_t>(x.weight[i]) != std::bit_cast<std::uint32_t>(y.weight[i])) return false;
        for (std::size_t i = 0; i < x.bias.size(); ++i)
            if (std::bit_cast<std::uint32_t>(x.bias[i]) != std::bit_cast<std::uint32_t>(y.bias[i])) return false;
    }
    return true;
}

bool all_finite(const WeightSet& ws)
{
    bool ok = true;
    ws.for_each([&](float v) { ok = ok && std::isfinite(v); });
    return ok;
}

std::size_t count_frozen(const FreezeMask& mask)
{
    std::size_t n = 0;
    mask.for_each([&](std::uint8_t v) { n += v != 0; });
    return n;
}

void CoordDataset::validate() const
{
    if (in_dim == 0 || out_dim == 0) throw ShapeError("dataset dims must be >= 1");
    if (coords.size() % in_dim != 0 || targets.size() % out_dim != 0 ||
        coords.size() / in_dim != targets.size() / out_dim)
        throw ShapeError("dataset coords and targets have different lengths");
    for (float v : coords)
        if (!std::isfinite(v)) throw ShapeError("dataset contains non-finite coordinates");
    for (float v : targets)
        if (!std::isfinite(v)) throw ShapeError("dataset contains non-finite targets");
}

WeightSet init_siren(const SirenSpec& spec, std::uint64_t seed)
{
    spec.validate();
    WeightSet ws = WeightSet::zeros(spec);
    std::mt19937_64 rng(seed);
    for (std::size_t l = 0; l < ws.layers.size(); ++l) {
        auto& t = ws.layers[l];
        const double fan_in = static_cast<double>(t.cols);
        const double bound = l == 0 ? 1.0 / fan_in : std::sqrt(6.0 / fan_in) / spec.omega0;
        for (auto& v : t.weight) v = static_cast<float>(detail::uniform(rng, -bound, bound));
    }
    return ws;
}

template <typename T>
std::vector<T> forward(const SirenSpec& spec, const ParamSet<T>& ws, std::span<const T> points)
{
    check_weights(spec, ws);
    if (points.size() % spec.in_dim != 0)
        throw ShapeError("point buffer length " + std::to_string(points.size()) +
                         " is not a multiple of the input dim " + std::to_string(spec.in_dim));
    const std::size_t count = points.size() / spec.in_dim;
    std::vector<T> out(count * spec.out_dim);
    if (count == 0) return out;
    Mat<T> x = ColMap<T>(points.data(), spec.in_dim, count);
    Mat<T> y = run_forward<T>(spec, ws, std::move(x), nullptr);
    Eigen::Map<Mat<T>>(out.data(), spec.out_dim, count) = y;
    return out;
}

template <typename T>
LossAndGrads<T> loss_and_grads(const SirenSpec& spec, const ParamSet<T>& ws, std::span<const T> coords,
                               std::span<const T> targets, unsigned threads)
{
    check_weights(spec, ws);
    if (coords.size() % spec.in_dim != 0 || targets.size() % spec.out_dim != 0 ||
        coords.size() / spec.in_dim != targets.size() / spec.out_dim)
        throw ShapeError("batch coords/targets do not match the network dims");
    const std::size_t count = coords.size() / spec.in_dim;
    if (count == 0) throw ShapeError("empty batch");

    const T scale = T{1} / static_cast<T>(count);
    const std::size_t chunks = std::max<std::size_t>(1, std::min<std::size_t>(threads, count));

    LossAndGrads<T> result;
    if (chunks == 1) {
        result.grads = ParamSet<T>::zeros(spec);
        T sum{};
        backward_chunk(spec, ws, coords, targets, 0, count, scale, sum, result.grads);
        result.loss = sum * scale;
        return result;
    }

    std::vector<ParamSet<T>> partial(chunks, ParamSet<T>::zeros(spec));
    std::vector<T> sums(chunks);
    {
        std::vector<std::jthread> workers;
        for (std::size_t c = 0; c < chunks; ++c) {
            const std::size_t b = count * c / chunks;
            const std::size_t e = count * (c + 1) / chunks;
            workers.emplace_back([&, c, b, e] {
                backward_chunk(spec, ws, coords, targets, b, e, scale, sums[c], partial[c]);
            });
        }
    }
    result.grads = std::move(partial[0]);
    T sum = sums[0];
    for (std::size_t c = 1; c < chunks; ++c) {
        sum += sums[c];
        for (std::size_t l = 0; l < result.grads.layers.size(); ++l) {
            auto& dst = result.grads.layers[l];
            const auto& src = partial[c].layers[l];
            for (std::size_t i = 0; i < dst.weight.size(); ++i) dst.weight[i] += src.weight[i];
            for (std::size_t i = 0; i < dst.bias.size(); ++i) dst.bias[i] += src.bias[i];
        }
    }
    result.loss = sum * scale;
    return result;
}

template std::vector<float> forward(const SirenSpec&, const ParamSet<float>&, std::span<const float>);
template std::vector<double> forward(const SirenSpec&, const ParamSet<double>&, std::span<const double>);
template LossAndGrads<float> loss_and_grads(const SirenSpec&, const ParamSet<float>&, std::span<const float>,
                                            std::span<const float>, unsigned);
template LossAndGrads<double> loss_and_grads(const SirenSpec&, const ParamSet<double>&, std::span<const double>,
                                             std::span<const double>, unsigned);

}  // namespace inrsteg
