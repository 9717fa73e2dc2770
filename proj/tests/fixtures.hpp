#pragma once

// Deterministic synthetic media shared by the unit and acceptance suites.

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "inrsteg/media.hpp"

namespace inrsteg::fixtures {

/// 32x32 RGB: red ramp with ripples, green ramp, soft blue disk with a
/// diagonal stripe texture.
inline MediaTensor cover_image(std::size_t size = 32)
{
    MediaTensor t;
    t.modality = Modality::image;
    t.shape = {size, size, 3};
    t.range = kPixelRange;
    t.values.resize(size * size * 3);
    const double s = static_cast<double>(size - 1);
    for (std::size_t y = 0; y < size; ++y)
        for (std::size_t x = 0; x < size; ++x) {
            const double u = x / s, v = y / s;
            const double r2 = (u - 0.55) * (u - 0.55) + (v - 0.45) * (v - 0.45);
            float* px = &t.values[(y * size + x) * 3];
            px[0] = static_cast<float>(std::round(40.0 + 160.0 * u + 25.0 * std::sin(9.0 * v) * std::cos(7.0 * u)));
            px[1] = static_cast<float>(std::round(30.0 + 170.0 * v + 20.0 * std::sin(11.0 * (u + v))));
            px[2] = static_cast<float>(std::round(60.0 + 140.0 * std::exp(-r2 / 0.05) + 30.0 * std::sin(14.0 * (u - v))));
        }
    return t;
}

/// 32x32 grayscale ramp.
inline MediaTensor gradient_gray(std::size_t size = 32)
{
    MediaTensor t;
    t.modality = Modality::image;
    t.shape = {size, size, 1};
    t.range = kPixelRange;
    t.values.resize(size * size);
    for (std::size_t y = 0; y < size; ++y)
        for (std::size_t x = 0; x < size; ++x)
            t.values[y * size + x] = static_cast<float>(std::round(255.0 * (x + y) / (2.0 * (size - 1))));
    return t;
}

/// High-contrast 32x32 RGB secret: colored quadrants with a bright cross.
inline MediaTensor secret_image(std::size_t size = 32)
{
    MediaTensor t;
    t.modality = Modality::image;
    t.shape = {size, size, 3};
    t.range = kPixelRange;
    t.values.resize(size * size * 3);
    for (std::size_t y = 0; y < size; ++y)
        for (std::size_t x = 0; x < size; ++x) {
            float* px = &t.values[(y * size + x) * 3];
            const bool left = x < size / 2, top = y < size / 2;
            px[0] = left ? 240.0f : 15.0f;
            px[1] = top ? 230.0f : 20.0f;
            px[2] = left == top ? 20.0f : 235.0f;
            const auto cx = static_cast<long>(x) - static_cast<long>(size / 2);
            const auto cy = static_cast<long>(y) - static_cast<long>(size / 2);
            if (std::labs(cx) <= 1 || std::labs(cy) <= 1) px[0] = px[1] = px[2] = 250.0f;
        }
    return t;
}

/// Mono PCM16 chirp with a harmonic: `seconds` at `rate` Hz.
inline MediaTensor audio_clip(std::size_t samples = 8000, std::uint32_t rate = 8000)
{
    MediaTensor t;
    t.modality = Modality::audio;
    t.shape = {samples, 1};
    t.range = kPcm16Range;
    t.sample_rate = rate;
    t.values.resize(samples);
    constexpr double kPi = 3.14159265358979323846;
    for (std::size_t i = 0; i < samples; ++i) {
        const double s = static_cast<double>(i) / rate;
        const double v = 0.5 * std::sin(2 * kPi * (3.0 + 4.0 * s) * s) + 0.2 * std::sin(2 * kPi * 11.0 * s);
        t.values[i] = static_cast<float>(std::round(v * 20000.0));
    }
    return t;
}

/// T frames of a drifting color ramp.
inline MediaTensor video_clip(std::size_t frames = 4, std::size_t size = 16)
{
    MediaTensor t;
    t.modality = Modality::video;
    t.shape = {frames, size, size, 3};
    t.range = kPixelRange;
    t.values.resize(frames * size * size * 3);
    for (std::size_t f = 0; f < frames; ++f)
        for (std::size_t y = 0; y < size; ++y)
            for (std::size_t x = 0; x < size; ++x) {
                float* px = &t.values[((f * size + y) * size + x) * 3];
                const double u = (x + 2.0 * f) / (size + 2.0 * frames), v = static_cast<double>(y) / size;
                px[0] = static_cast<float>(std::round(255.0 * u));
                px[1] = static_cast<float>(std::round(255.0 * v));
                px[2] = static_cast<float>(std::round(127.0 + 100.0 * std::sin(3.0 * u + 2.0 * v)));
            }
    return t;
}

/// Random points in [-1,1]^3 with their signed distance to a sphere of radius 0.5.
inline MediaTensor sphere_sdf(std::size_t count = 2048, std::uint64_t seed = 7)
{
    MediaTensor t;
    t.modality = Modality::sdf;
    t.shape = {count};
    t.values.resize(count);
    t.points.resize(3 * count);
    std::mt19937_64 rng(seed);
    for (std::size_t i = 0; i < count; ++i) {
        double r2 = 0.0;
        for (int c = 0; c < 3; ++c) {
            const double p = -1.0 + 2.0 * static_cast<double>(rng() >> 11) * 0x1.0p-53;
            t.points[3 * i + static_cast<std::size_t>(c)] = static_cast<float>(p);
            r2 += p * p;
        }
        t.values[i] = static_cast<float>(std::sqrt(r2) - 0.5);
    }
    t.range = {-0.5, std::sqrt(3.0) - 0.5};
    return t;
}

}  // namespace inrsteg::fixtures
