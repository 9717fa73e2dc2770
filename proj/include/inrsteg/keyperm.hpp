#pragma once

// Key-derived hidden-node permutations. Reordering the nodes of a hidden
// layer (rows of the incoming matrix and bias, columns of the outgoing
// matrix) leaves the network function unchanged while scattering whatever
// block structure the weights had.

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "inrsteg/siren.hpp"

namespace inrsteg {

struct PrivateKey {
    std::array<std::uint8_t, 16> bytes{};

    /// Throws ArgumentError unless `raw` has exactly 16 bytes.
    static PrivateKey from_bytes(std::span<const std::uint8_t> raw);
    /// 32 hex characters, either case.
    static PrivateKey from_hex(std::string_view hex);
    std::string to_hex() const;

    friend bool operator==(const PrivateKey&, const PrivateKey&) = default;
};

/// perm[i] is the old index of the node that ends up at position i.
using Permutation = std::vector<std::uint32_t>;

/// One permutation per hidden layer; perms[k] acts on hidden layer k+1,
/// i.e. the output nodes of weight matrix k.
struct LayerPerms {
    std::vector<Permutation> perms;
    friend bool operator==(const LayerPerms&, const LayerPerms&) = default;
};

/// RFC 5869 HKDF with SHA-256.
std::vector<std::uint8_t> hkdf_sha256(std::span<const std::uint8_t> ikm, std::span<const std::uint8_t> salt,
                                      std::span<const std::uint8_t> info, std::size_t length);

/// Salt fed to HKDF for every layer.
inline constexpr std::string_view kPermSalt = "INRSTEG1";

/// For hidden layer l (1-based), expands 8*D_l bytes with info = u32le(l),
/// reads them as D_l little-endian u64 sort keys and returns their argsort
/// (ties resolved by index).
LayerPerms derive_layer_perms(const PrivateKey& key, std::uint32_t hidden_layers,
                              std::span<const std::uint32_t> widths);
LayerPerms derive_layer_perms(const PrivateKey& key, const SirenSpec& spec);

bool is_permutation(const Permutation& p);

/// Throws ShapeError when perms do not fit the spec's hidden layers.
WeightSet apply_perms(const SirenSpec& spec, const WeightSet& ws, const LayerPerms& perms);

LayerPerms invert_perms(const LayerPerms& perms);

/// Perms equivalent to applying `first` and then `second`.
LayerPerms compose_perms(const LayerPerms& first, const LayerPerms& second);

}  // namespace inrsteg
