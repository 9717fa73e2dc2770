#pragma once

// Sine-activated MLP (SIREN) representation: architecture, parameter
// containers, initialization, forward evaluation and exact gradients.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "inrsteg/error.hpp"

namespace inrsteg {

/// Architecture of a fixed-width sine MLP.
///
/// Layer l (0 <= l <= n) maps `cols(l)` inputs to `rows(l)` outputs. Layers
/// 0..n-1 are followed by sin(omega0 * z); layer n is affine.
struct SirenSpec {
    std::uint32_t in_dim = 0;
    std::uint32_t out_dim = 0;
    std::uint32_t hidden_layers = 0;
    std::uint32_t width = 0;
    float omega0 = 30.0f;

    /// Throws ArgumentError when any field is out of range.
    void validate() const;

    std::size_t layer_count() const { return std::size_t{hidden_layers} + 1; }
    std::size_t rows(std::size_t layer) const { return layer == hidden_layers ? out_dim : width; }
    std::size_t cols(std::size_t layer) const { return layer == 0 ? in_dim : width; }

    /// D*I + (n-1)*D^2 + O*D + n*D + O
    std::size_t parameter_count() const;

    friend bool operator==(const SirenSpec&, const SirenSpec&) = default;
};

/// One dense layer: row-major `rows x cols` weight matrix plus `rows` biases.
template <typename T>
struct LayerTensor {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<T> weight;
    std::vector<T> bias;

    T& w(std::size_t r, std::size_t c) { return weight[r * cols + c]; }
    const T& w(std::size_t r, std::size_t c) const { return weight[r * cols + c]; }

    friend bool operator==(const LayerTensor&, const LayerTensor&) = default;
};

/// Per-layer tensors shaped after a SirenSpec. Used for weights, gradients,
/// optimizer moments and freeze masks alike.
///
/// Flat indexing walks layers in order and, within a layer, the weight
/// matrix (row-major) before the bias vector. This is also the file order.
template <typename T>
struct ParamSet {
    std::vector<LayerTensor<T>> layers;

    static ParamSet filled(const SirenSpec& spec, T value)
    {
        ParamSet p;
        p.layers.resize(spec.layer_count());
        for (std::size_t l = 0; l < p.layers.size(); ++l) {
            auto& t = p.layers[l];
            t.rows = spec.rows(l);
            t.cols = spec.cols(l);
            t.weight.assign(t.rows * t.cols, value);
            t.bias.assign(t.rows, value);
        }
        return p;
    }

    static ParamSet zeros(const SirenSpec& spec) { return filled(spec, T{}); }

    bool conforms(const SirenSpec& spec) const
    {
        if (layers.size() != spec.layer_count()) return false;
        for (std::size_t l = 0; l < layers.size(); ++l) {
            const auto& t = layers[l];
            if (t.rows != spec.rows(l) || t.cols != spec.cols(l) ||
                t.weight.size() != t.rows * t.cols || t.bias.size() != t.rows)
                return false;
        }
        return true;
    }

    bool same_shape(const auto& other) const
    {
        if (layers.size() != other.layers.size()) return false;
        for (std::size_t l = 0; l < layers.size(); ++l) {
            if (layers[l].weight.size() != other.layers[l].weight.size() ||
                layers[l].bias.size() != other.layers[l].bias.size())
                return false;
        }
        return true;
    }

    std::size_t size() const
    {
        std::size_t n = 0;
        for (const auto& t : layers) n += t.weight.size() + t.bias.size();
        return n;
    }

    /// Calls f(value&) for every entry in flat order.
    template <typename F>
    void for_each(F&& f)
    {
        for (auto& t : layers) {
            for (auto& v : t.weight) f(v);
            for (auto& v : t.bias) f(v);
        }
    }

    template <typename F>
    void for_each(F&& f) const
    {
        for (const auto& t : layers) {
            for (const auto& v : t.weight) f(v);
            for (const auto& v : t.bias) f(v);
        }
    }

    std::vector<T> flatten() const
    {
        std::vector<T> out;
        out.reserve(size());
        for_each([&](const T& v) { out.push_back(v); });
        return out;
    }

    friend bool operator==(const ParamSet&, const ParamSet&) = default;
};

using WeightSet = ParamSet<float>;
using Gradients = ParamSet<float>;
/// true (non-zero) marks a frozen entry.
using FreezeMask = ParamSet<std::uint8_t>;

template <typename To, typename From>
ParamSet<To> param_cast(const ParamSet<From>& p)
{
    ParamSet<To> out;
    out.layers.resize(p.layers.size());
    for (std::size_t l = 0; l < p.layers.size(); ++l) {
        const auto& s = p.layers[l];
        auto& d = out.layers[l];
        d.rows = s.rows;
        d.cols = s.cols;
        d.weight.assign(s.weight.begin(), s.weight.end());
        d.bias.assign(s.bias.begin(), s.bias.end());
    }
    return out;
}

/// Bitwise comparison; distinguishes -0.0f from 0.0f.
bool bitwise_equal(const WeightSet& a, const WeightSet& b);

/// True when every entry is finite.
bool all_finite(const WeightSet& ws);

/// Number of frozen entries.
std::size_t count_frozen(const FreezeMask& mask);

/// Training pairs: `size()` points of `in_dim` coordinates and `out_dim`
/// targets, both stored row-major.
struct CoordDataset {
    std::uint32_t in_dim = 0;
    std::uint32_t out_dim = 0;
    std::vector<float> coords;
    std::vector<float> targets;

    std::size_t size() const { return in_dim == 0 ? 0 : coords.size() / in_dim; }
    void validate() const;
};

/// SIREN initialization: first layer U(-1/I, 1/I), deeper layers
/// U(-sqrt(6/fan_in)/omega0, +sqrt(6/fan_in)/omega0), zero biases.
WeightSet init_siren(const SirenSpec& spec, std::uint64_t seed);

/// Evaluates the network on `points` (row-major, `count x I`). Returns
/// `count x O` outputs.
template <typename T>
std::vector<T> forward(const SirenSpec& spec, const ParamSet<T>& ws, std::span<const T> points);

template <typename T>
struct LossAndGrads {
    T loss{};
    ParamSet<T> grads;
};

/// Mean over the batch of the squared L2 residual, with exact reverse-mode
/// gradients. `threads` > 1 splits the batch into that many contiguous chunks
/// that are reduced in chunk order, so results depend only on the thread count.
template <typename T>
LossAndGrads<T> loss_and_grads(const SirenSpec& spec, const ParamSet<T>& ws,
                               std::span<const T> coords, std::span<const T> targets,
                               unsigned threads = 1);

}  // namespace inrsteg
