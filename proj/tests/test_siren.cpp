#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdlib>

#include "fixtures.hpp"
#include "inrsteg/media.hpp"
#include "inrsteg/siren.hpp"
#include "inrsteg/train.hpp"
#include "test_util.hpp"

using namespace inrsteg;
using inrsteg::testing::random_points;
using inrsteg::testing::random_weights;

namespace {

SirenSpec tiny(float omega0 = 1.0f) { return {1, 1, 1, 1, omega0}; }

CoordDataset constant_data(std::size_t count, float target)
{
    CoordDataset d{1, 1, {}, {}};
    for (std::size_t i = 0; i < count; ++i) {
        d.coords.push_back(static_cast<float>(i) / static_cast<float>(count));
        d.targets.push_back(target);
    }
    return d;
}

}  // namespace

TEST_CASE("spec validation and parameter count")
{
    const SirenSpec s{2, 3, 5, 128};
    CHECK(s.parameter_count() == 128 * 2 + 4 * 128 * 128 + 3 * 128 + 5 * 128 + 3);
    CHECK(WeightSet::zeros(s).size() == s.parameter_count());
    CHECK_THROWS_AS((SirenSpec{0, 1, 1, 1}.validate()), ArgumentError);
    CHECK_THROWS_AS((SirenSpec{1, 1, 0, 1}.validate()), ArgumentError);
    CHECK_THROWS_AS((SirenSpec{1, 1, 1, 0}.validate()), ArgumentError);
    CHECK_THROWS_AS((SirenSpec{1, 1, 1, 1, -1.0f}.validate()), ArgumentError);
}

TEST_CASE("init bounds follow the sine initialization")
{
    const SirenSpec s{2, 3, 5, 128};
    const WeightSet ws = init_siren(s, 0);
    for (float v : ws.layers[0].weight) CHECK(std::abs(v) <= 0.5f);
    const double hidden = std::sqrt(6.0 / 128.0) / 30.0;
    CHECK(hidden == doctest::Approx(0.0072169).epsilon(1e-5));
    float widest = 0.0f;
    for (std::size_t l = 1; l < ws.layers.size(); ++l) {
        for (float v : ws.layers[l].weight) widest = std::max(widest, std::abs(v));
        for (float b : ws.layers[l].bias) CHECK(b == 0.0f);
    }
    CHECK(widest <= hidden);
    CHECK(widest > 0.9 * hidden);
    for (float b : ws.layers[0].bias) CHECK(b == 0.0f);
}

TEST_CASE("init is deterministic per seed")
{
    const SirenSpec s{2, 3, 5, 128};
    CHECK(bitwise_equal(init_siren(s, 0), init_siren(s, 0)));
    CHECK_FALSE(bitwise_equal(init_siren(s, 0), init_siren(s, 1)));
}

TEST_CASE("forward closed forms")
{
    SUBCASE("single sine node")
    {
        WeightSet ws = WeightSet::zeros(tiny());
        ws.layers[0].weight[0] = 1.0f;
        ws.layers[1].weight[0] = 1.0f;
        const std::vector<float> x{0.5f};
        const auto y = forward<float>(tiny(), ws, x);
        REQUIRE(y.size() == 1);
        CHECK(y[0] == doctest::Approx(0.4794255).epsilon(1e-6));
    }
    SUBCASE("all-zero net outputs zero")
    {
        const SirenSpec s{2, 3, 3, 16};
        std::mt19937_64 rng(5);
        const auto pts = random_points(50, 2, rng);
        for (float v : forward<float>(s, WeightSet::zeros(s), pts)) CHECK(v == 0.0f);
    }
    SUBCASE("zero input with zero first bias yields the output bias")
    {
        const SirenSpec s{2, 2, 1, 8};
        std::mt19937_64 rng(9);
        WeightSet ws = random_weights(s, rng, 1.0);
        for (auto& b : ws.layers[0].bias) b = 0.0f;
        const std::vector<float> x{0.0f, 0.0f};
        const auto y = forward<float>(s, ws, x);
        CHECK(y[0] == ws.layers[1].bias[0]);
        CHECK(y[1] == ws.layers[1].bias[1]);
    }
}

TEST_CASE("forward matches the loop reference and is pure")
{
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 20; ++trial) {
        const SirenSpec s = inrsteg::testing::random_spec(rng, 24, 4);
        const WeightSet ws = init_siren(s, static_cast<std::uint64_t>(trial));
        const auto wd = param_cast<double>(ws);
        const auto pts = random_points(16, s.in_dim, rng);
        const auto y = forward<float>(s, ws, pts);
        CHECK(y == forward<float>(s, ws, pts));
        for (std::size_t i = 0; i < 16; ++i) {
            std::vector<double> p(pts.begin() + static_cast<std::ptrdiff_t>(i * s.in_dim),
                                  pts.begin() + static_cast<std::ptrdiff_t>((i + 1) * s.in_dim));
            const auto ref = inrsteg::testing::reference_forward(s, wd, p);
            for (std::size_t o = 0; o < s.out_dim; ++o) CHECK(std::abs(y[i * s.out_dim + o] - ref[o]) < 1e-4);
        }
    }
}

TEST_CASE("forward rejects mismatched shapes")
{
    const SirenSpec s{2, 1, 2, 4};
    const std::vector<float> odd{0.1f, 0.2f, 0.3f};
    CHECK_THROWS_AS(forward<float>(s, WeightSet::zeros(s), odd), ShapeError);
    const std::vector<float> ok{0.1f, 0.2f};
    CHECK_THROWS_AS(forward<float>(s, WeightSet::zeros({2, 1, 3, 4}), ok), ShapeError);
}

TEST_CASE("loss closed forms")
{
    const SirenSpec s = tiny();
    WeightSet ws = WeightSet::zeros(s);
    ws.layers[1].bias[0] = 3.0f;
    const std::vector<float> x{-0.5f, 0.0f, 0.25f, 0.9f};

    const std::vector<float> exact(4, 3.0f);
    const auto perfect = loss_and_grads<float>(s, ws, x, exact);
    CHECK(perfect.loss == 0.0f);
    perfect.grads.for_each([](float g) { CHECK(g == 0.0f); });

    const std::vector<float> below(4, 1.0f);
    CHECK(loss_and_grads<float>(s, ws, x, below).loss == doctest::Approx(4.0));

    const std::vector<float> none;
    CHECK_THROWS_AS(loss_and_grads<float>(s, ws, none, none), ShapeError);
}

TEST_CASE("gradients match central finite differences in double")
{
    std::mt19937_64 rng(3);
    const SirenSpec s{2, 1, 2, 3};
    for (int trial = 0; trial < 5; ++trial) {
        const auto wd = param_cast<double>(init_siren(s, static_cast<std::uint64_t>(trial)));
        std::vector<double> coords(10 * 2), targets(10);
        for (auto& v : coords) v = inrsteg::testing::uniform(rng, -1.0, 1.0);
        for (auto& v : targets) v = inrsteg::testing::uniform(rng, -1.0, 1.0);
        const auto lg = loss_and_grads<double>(s, wd, coords, targets);
        CHECK(lg.loss == doctest::Approx(inrsteg::testing::reference_loss(s, wd, coords, targets)).epsilon(1e-12));
        const auto check = inrsteg::testing::finite_difference_check(s, wd, lg.grads, coords, targets);
        CHECK(check.entries == s.parameter_count());
        CHECK(check.worst <= 1e-6);
    }
}

TEST_CASE("chunked gradients agree with the single pass")
{
    const SirenSpec s{2, 3, 3, 16};
    const WeightSet ws = init_siren(s, 4);
    std::mt19937_64 rng(4);
    const auto x = random_points(37, 2, rng);
    const auto y = random_points(37, 3, rng);
    const auto one = loss_and_grads<float>(s, ws, x, y, 1);
    const auto four = loss_and_grads<float>(s, ws, x, y, 4);
    CHECK(four.loss == doctest::Approx(one.loss).epsilon(1e-5));
    const auto a = one.grads.flatten();
    const auto b = four.grads.flatten();
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(std::abs(a[i] - b[i]) <= 1e-4f * (1.0f + std::abs(a[i])));
    const auto again = loss_and_grads<float>(s, ws, x, y, 4);
    CHECK(again.grads.flatten() == b);
}

TEST_CASE("adam step")
{
    const SirenSpec s = tiny();
    TrainConfig cfg;

    SUBCASE("all-frozen mask leaves weights and moments untouched")
    {
        const SirenSpec big{2, 3, 2, 8};
        WeightSet ws = init_siren(big, 1);
        const WeightSet before = ws;
        AdamState st = AdamState::zeros(big);
        const Gradients g = Gradients::filled(big, 0.5f);
        const FreezeMask mask = FreezeMask::filled(big, 1);
        adam_step(ws, st, g, &mask, cfg, 1);
        CHECK(bitwise_equal(ws, before));
        st.m.for_each([](float v) { CHECK(v == 0.0f); });
        st.v.for_each([](float v) { CHECK(v == 0.0f); });
    }
    SUBCASE("unit gradient moves one learning rate")
    {
        WeightSet ws = WeightSet::filled(s, 0.25f);
        AdamState st = AdamState::zeros(s);
        Gradients g = Gradients::zeros(s);
        g.layers[0].weight[0] = 1.0f;
        adam_step(ws, st, g, nullptr, cfg, 1);
        CHECK(0.25 - ws.layers[0].weight[0] == doctest::Approx(1e-4).epsilon(1e-3));
        CHECK(ws.layers[0].bias[0] == 0.25f);
        CHECK(ws.layers[1].weight[0] == 0.25f);
    }
    SUBCASE("errors")
    {
        WeightSet ws = WeightSet::zeros(s);
        AdamState st = AdamState::zeros(s);
        CHECK_THROWS_AS(adam_step(ws, st, Gradients::zeros(s), nullptr, cfg, 0), ArgumentError);
        CHECK_THROWS_AS(adam_step(ws, st, Gradients::zeros({1, 1, 1, 2}), nullptr, cfg, 1), ShapeError);
    }
}

TEST_CASE("fit with zero steps returns the input")
{
    const SirenSpec s{1, 1, 2, 8};
    const WeightSet ws = init_siren(s, 2);
    TrainConfig cfg;
    cfg.steps = 0;
    const auto r = fit(s, ws, constant_data(16, 0.3f), cfg);
    CHECK(bitwise_equal(r.weights, ws));
    CHECK(r.loss_trace.empty());
}

TEST_CASE("fit on the gray ramp reduces the loss tenfold")
{
    const MediaTensor img = fixtures::gradient_gray(32);
    const SirenSpec s{2, 1, 3, 64};
    TrainConfig cfg;
    cfg.steps = 2000;
    const auto r = fit(s, init_siren(s, 0), coord_dataset(img), cfg);
    REQUIRE(r.loss_trace.size() == 2000);
    CHECK(r.loss_trace.back() * 10.0f <= r.loss_trace.front());
}

TEST_CASE("masked fit keeps frozen entries bitwise")
{
    const MediaTensor img = fixtures::cover_image(16);
    const SirenSpec s{2, 3, 3, 24};
    const WeightSet ws = init_siren(s, 6);
    FreezeMask mask = FreezeMask::zeros(s);
    std::mt19937_64 rng(6);
    mask.for_each([&](std::uint8_t& m) { m = (rng() % 3) == 0; });
    TrainConfig cfg;
    cfg.steps = 500;
    const auto r = fit(s, ws, coord_dataset(img), cfg, &mask);
    const auto before = ws.flatten();
    const auto after = r.weights.flatten();
    const auto flags = mask.flatten();
    std::size_t moved = 0;
    for (std::size_t i = 0; i < flags.size(); ++i) {
        if (flags[i])
            CHECK(std::bit_cast<std::uint32_t>(before[i]) == std::bit_cast<std::uint32_t>(after[i]));
        else
            moved += before[i] != after[i];
    }
    CHECK(moved > 0);
}

TEST_CASE("fit is deterministic, including mini-batches and threads")
{
    const MediaTensor img = fixtures::cover_image(16);
    const SirenSpec s{2, 3, 2, 16};
    TrainConfig cfg;
    cfg.steps = 50;
    cfg.batch_size = 64;
    cfg.seed = 3;
    const auto a = fit(s, init_siren(s, 1), coord_dataset(img), cfg);
    const auto b = fit(s, init_siren(s, 1), coord_dataset(img), cfg);
    CHECK(bitwise_equal(a.weights, b.weights));
    CHECK(a.loss_trace == b.loss_trace);

    cfg.batch_size = 0;
    cfg.threads = 3;
    const auto c = fit(s, init_siren(s, 1), coord_dataset(img), cfg);
    const auto d = fit(s, init_siren(s, 1), coord_dataset(img), cfg);
    CHECK(bitwise_equal(c.weights, d.weights));
}

TEST_CASE("early stopping ends a converged fit")
{
    const SirenSpec s = tiny();
    WeightSet ws = WeightSet::zeros(s);
    ws.layers[1].bias[0] = 0.5f;
    TrainConfig cfg;
    cfg.steps = 1000;
    cfg.early_stop_patience = 5;
    cfg.learning_rate = 1e-12;
    const auto r = fit(s, ws, constant_data(8, 0.5f), cfg);
    CHECK(r.stopped_early);
    CHECK(r.loss_trace.size() < 1000);
}

TEST_CASE("divergence reports the last finite state")
{
    const SirenSpec s{1, 1, 1, 4};
    const WeightSet ws = init_siren(s, 0);
    TrainConfig cfg;
    cfg.steps = 200;
    cfg.learning_rate = 1e30;
    try {
        fit(s, ws, constant_data(8, 1.0f), cfg);
        FAIL("expected divergence");
    } catch (const DivergenceError& e) {
        CHECK(e.step() == 2);
        CHECK(bitwise_equal(e.last_finite(), ws));
        CHECK(e.last_finite().conforms(s));
    }
}

TEST_CASE("train config validation")
{
    TrainConfig cfg;
    cfg.learning_rate = 0.0;
    CHECK_THROWS_AS(cfg.validate(), ArgumentError);
    const SirenSpec s = tiny();
    CoordDataset bad{1, 1, {0.0f, 1.0f}, {0.0f}};
    CHECK_THROWS_AS(fit(s, WeightSet::zeros(s), bad, TrainConfig{}), ShapeError);
}

TEST_CASE("thread count from the environment")
{
    ::setenv("INRSTEG_THREADS", "3", 1);
    CHECK(threads_from_env(1) == 3);
    ::setenv("INRSTEG_THREADS", "junk", 1);
    CHECK(threads_from_env(2) == 2);
    ::unsetenv("INRSTEG_THREADS");
    CHECK(threads_from_env(1) == 1);
}
