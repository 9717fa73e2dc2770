#include "inrsteg/keyperm.hpp"

#include <openssl/core_names.h>
#include <openssl/kdf.h>
#include <openssl/params.h>

#include <algorithm>
#include <memory>
#include <numeric>

namespace inrsteg {

PrivateKey PrivateKey::from_bytes(std::span<const std::uint8_t> raw)
{
    if (raw.size() != 16)
        throw ArgumentError("private key must be 128 bits (16 bytes), got " + std::to_string(raw.size()) + " bytes");
    PrivateKey k;
    std::copy(raw.begin(), raw.end(), k.bytes.begin());
    return k;
}

PrivateKey PrivateKey::from_hex(std::string_view hex)
{
    if (hex.size() != 32)
        throw ArgumentError("private key must be 32 hex characters, got " + std::to_string(hex.size()));
    auto nibble = [](char c) -> int {
        if (c >= '0' && c <= '9') return c - '0';
        if (c >= 'a' && c <= 'f') return c - 'a' + 10;
        if (c >= 'A' && c <= 'F') return c - 'A' + 10;
        return -1;
    };
    PrivateKey k;
    for (std::size_t i = 0; i < 16; ++i) {
        const int hi = nibble(hex[2 * i]), lo = nibble(hex[2 * i + 1]);
        if (hi < 0 || lo < 0) throw ArgumentError("private key contains a non-hex character");
        k.bytes[i] = static_cast<std::uint8_t>(hi * 16 + lo);
    }
    return k;
}

std::string PrivateKey::to_hex() const
{
    static constexpr char digits[] = "0123456789abcdef";
    std::string s;
    for (auto b : bytes) {
        s.push_back(digits[b >> 4]);
        s.push_back(digits[b & 15]);
    }
    return s;
}

std::vector<std::uint8_t> hkdf_sha256(std::span<const std::uint8_t> ikm, std::span<const std::uint8_t> salt,
                                      std::span<const std::uint8_t> info, std::size_t length)
{
    std::unique_ptr<EVP_KDF, decltype(&EVP_KDF_free)> kdf(EVP_KDF_fetch(nullptr, "HKDF", nullptr), &EVP_KDF_free);
    if (!kdf) throw Error("HKDF unavailable in the crypto provider");
    std::unique_ptr<EVP_KDF_CTX, decltype(&EVP_KDF_CTX_free)> ctx(EVP_KDF_CTX_new(kdf.get()), &EVP_KDF_CTX_free);
    if (!ctx) throw Error("cannot allocate HKDF context");

    char digest[] = "SHA256";
    // OSSL_PARAM wants non-const pointers but does not write through them.
    auto octets = [](const char* name, std::span<const std::uint8_t> s) {
        return OSSL_PARAM_construct_octet_string(name, const_cast<std::uint8_t*>(s.data()), s.size());
    };
    OSSL_PARAM params[] = {
        OSSL_PARAM_construct_utf8_string(OSSL_KDF_PARAM_DIGEST, digest, 0),
        octets(OSSL_KDF_PARAM_KEY, ikm),
        octets(OSSL_KDF_PARAM_SALT, salt),
        octets(OSSL_KDF_PARAM_INFO, info),
        OSSL_PARAM_construct_end(),
    };
    std::vector<std::uint8_t> out(length);
    if (length > 0 && EVP_KDF_derive(ctx.get(), out.data(), out.size(), params) != 1)
        throw Error("HKDF derivation failed");
    return out;
}

LayerPerms derive_layer_perms(const PrivateKey& key, std::uint32_t hidden_layers, std::span<const std::uint32_t> widths)
{
    if (hidden_layers == 0) throw ArgumentError("need at least one hidden layer to permute");
    if (widths.size() != hidden_layers)
        throw ArgumentError("expected " + std::to_string(hidden_layers) + " layer widths, got " +
                            std::to_string(widths.size()));
    const std::span<const std::uint8_t> salt(reinterpret_cast<const std::uint8_t*>(kPermSalt.data()), kPermSalt.size());

    LayerPerms out;
    out.perms.reserve(hidden_layers);
    for (std::uint32_t layer = 1; layer <= hidden_layers; ++layer) {
        const std::size_t width = widths[layer - 1];
        const std::uint8_t info[4] = {static_cast<std::uint8_t>(layer), static_cast<std::uint8_t>(layer >> 8),
                                      static_cast<std::uint8_t>(layer >> 16), static_cast<std::uint8_t>(layer >> 24)};
        const auto okm = hkdf_sha256(key.bytes, salt, info, 8 * width);
        std::vector<std::uint64_t> keys(width);
        for (std::size_t i = 0; i < width; ++i) {
            std::uint64_t v = 0;
            for (int b = 7; b >= 0; --b) v = (v << 8) | okm[8 * i + static_cast<std::size_t>(b)];
            keys[i] = v;
        }
        Permutation p(width);
        std::iota(p.begin(), p.end(), 0u);
        std::stable_sort(p.begin(), p.end(), [&](std::uint32_t a, std::uint32_t b) { return keys[a] < keys[b]; });
        out.perms.push_back(std::move(p));
    }
    return out;
}

LayerPerms derive_layer_perms(const PrivateKey& key, const SirenSpec& spec)
{
    const std::vector<std::uint32_t> widths(spec.hidden_layers, spec.width);
    return derive_layer_perms(key, spec.hidden_layers, widths);
}

bool is_permutation(const Permutation& p)
{
    std::vector<bool> seen(p.size(), false);
    for (auto v : p) {
        if (v >= p.size() || seen[v]) return false;
        seen[v] = true;
    }
    return true;
}

WeightSet apply_perms(const SirenSpec& spec, const WeightSet& ws, const LayerPerms& perms)
{
    if (!ws.conforms(spec)) throw ShapeError("weight set does not conform to the network spec");
    if (perms.perms.size() != spec.hidden_layers)
        throw ShapeError("expected " + std::to_string(spec.hidden_layers) + " layer permutations, got " +
                         std::to_string(perms.perms.size()));
    for (const auto& p : perms.perms)
        if (p.size() != spec.width || !is_permutation(p)) throw ShapeError("layer permutation is not a bijection on the hidden width");

    WeightSet out = ws;
    for (std::size_t k = 0; k < perms.perms.size(); ++k) {
        const auto& p = perms.perms[k];
        // Output nodes of matrix k: rows of W^(k) and b^(k).
        const auto& src = ws.layers[k];
        auto& dst = out.layers[k];
        for (std::size_t r = 0; r < p.size(); ++r) {
            std::copy_n(src.weight.begin() + static_cast<std::ptrdiff_t>(p[r] * src.cols), src.cols,
                        dst.weight.begin() + static_cast<std::ptrdiff_t>(r * src.cols));
            dst.bias[r] = src.bias[p[r]];
        }
    }
    for (std::size_t k = 0; k < perms.perms.size(); ++k) {
        const auto& p = perms.perms[k];
        // Input nodes of matrix k+1: its columns. Rows were already handled above.
        auto& next = out.layers[k + 1];
        std::vector<float> row(next.cols);
        for (std::size_t r = 0; r < next.rows; ++r) {
            float* w = next.weight.data() + r * next.cols;
            for (std::size_t c = 0; c < next.cols; ++c) row[c] = w[p[c]];
            std::copy(row.begin(), row.end(), w);
        }
    }
    return out;
}

LayerPerms invert_perms(const LayerPerms& perms)
{
    LayerPerms out;
    for (const auto& p : perms.perms) {
        if (!is_permutation(p)) throw ArgumentError("cannot invert a non-bijective permutation");
        Permutation inv(p.size());
        for (std::uint32_t i = 0; i < p.size(); ++i) inv[p[i]] = i;
        out.perms.push_back(std::move(inv));
    }
    return out;
}

LayerPerms compose_perms(const LayerPerms& first, const LayerPerms& second)
{
    if (first.perms.size() != second.perms.size()) throw ShapeError("cannot compose perms of different depth");
    LayerPerms out;
    for (std::size_t k = 0; k < first.perms.size(); ++k) {
        const auto& p = first.perms[k];
        const auto& q = second.perms[k];
        if (p.size() != q.size()) throw ShapeError("cannot compose perms of different width");
        Permutation c(p.size());
        for (std::size_t i = 0; i < c.size(); ++i) c[i] = p[q[i]];
        out.perms.push_back(std::move(c));
    }
    return out;
}

}  // namespace inrsteg
