#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstring>

#include "inrsteg/modelio.hpp"
#include "test_util.hpp"

using namespace inrsteg;

namespace {

Recipe two_secret_recipe()
{
    const std::vector<SirenSpec> specs{{1, 1, 2, 6}, {2, 3, 2, 5}};
    PlanOptions o;
    o.hidden_layers = 3;
    const StegoPlan plan = plan_stego(specs, Modality::image, o);
    Recipe r;
    r.stego_spec = plan.stego_spec;
    r.placements = plan.placements;
    r.media = {SecretMedia{Modality::audio, {8000, 1}, kPcm16Range, 8000, 0},
               SecretMedia{Modality::image, {32, 32, 3}, kPixelRange, 0, 0}};
    return r;
}

std::string_view as_text(const std::vector<std::uint8_t>& b)
{
    return {reinterpret_cast<const char*>(b.data()), b.size()};
}

}  // namespace

TEST_CASE("model round trip is bitwise")
{
    std::mt19937_64 rng(1);
    for (int trial = 0; trial < 10; ++trial) {
        const SirenSpec s = inrsteg::testing::random_spec(rng, 20, 4, static_cast<float>(trial + 1));
        WeightSet ws = inrsteg::testing::random_weights(s, rng, 2.0);
        ws.layers[0].bias[0] = -0.0f;
        const auto bytes = encode_model(s, ws);
        CHECK(bytes.size() == kModelHeaderSize + 4 * s.parameter_count());
        const Model m = decode_model(bytes);
        CHECK(m.spec == s);
        CHECK(bitwise_equal(m.weights, ws));
    }
}

TEST_CASE("model header layout")
{
    const SirenSpec s{2, 3, 1, 4, 30.0f};
    const auto b = encode_model(s, WeightSet::zeros(s));
    CHECK(std::memcmp(b.data(), "INRW", 4) == 0);
    CHECK(b[4] == 1);
    CHECK(b[5] == 2);
    CHECK(b[9] == 3);
    CHECK(b[13] == 1);
    CHECK(b[17] == 4);
    float omega = 0.0f;
    std::memcpy(&omega, b.data() + 21, 4);
    CHECK(omega == 30.0f);
}

TEST_CASE("malformed model files")
{
    const SirenSpec s{1, 1, 2, 3};
    const auto good = encode_model(s, init_siren(s, 0));

    auto magic = good;
    std::memcpy(magic.data(), "XXXX", 4);
    CHECK_THROWS_WITH_AS(decode_model(magic), doctest::Contains("bad magic"), FormatError);

    auto cut = good;
    cut.resize(cut.size() - 5);
    const std::string expected = "expected " + std::to_string(good.size()) + " bytes, got " + std::to_string(cut.size());
    CHECK_THROWS_WITH_AS(decode_model(cut), doctest::Contains(expected.c_str()), FormatError);

    auto header_only = good;
    header_only.resize(10);
    CHECK_THROWS_AS(decode_model(header_only), FormatError);

    auto version = good;
    version[4] = 2;
    CHECK_THROWS_WITH_AS(decode_model(version), doctest::Contains("version"), FormatError);

    auto trailing = good;
    trailing.push_back(0);
    CHECK_THROWS_AS(decode_model(trailing), FormatError);

    auto nan = good;
    const float bad = NAN;
    std::memcpy(nan.data() + kModelHeaderSize, &bad, 4);
    CHECK_THROWS_WITH_AS(decode_model(nan), doctest::Contains("non-finite"), FormatError);

    auto width_field = [&](std::uint8_t fill) {
        auto b = good;
        for (std::size_t i = 17; i < 21; ++i) b.at(i) = fill;
        return b;
    };
    CHECK_THROWS_AS(decode_model(width_field(0)), FormatError);
    CHECK_THROWS_AS(decode_model(width_field(0xff)), FormatError);
}

TEST_CASE("model files on disk")
{
    const auto dir = inrsteg::testing::scratch_dir("modelio");
    const SirenSpec s{2, 3, 2, 8};
    const WeightSet ws = init_siren(s, 4);
    save_model(s, ws, dir / "m.inrw");
    const Model m = load_model(dir / "m.inrw");
    CHECK(bitwise_equal(m.weights, ws));
    CHECK_THROWS_AS(load_model(dir / "missing.inrw"), Error);
}

TEST_CASE("quantized model round trip")
{
    const SirenSpec s{2, 1, 2, 6};
    const QuantizedModel qm = quantize_int8(s, init_siren(s, 2));
    const auto bytes = encode_quantized(qm);
    CHECK(std::memcmp(bytes.data(), "INRQ", 4) == 0);
    CHECK(decode_quantized(bytes) == qm);

    auto cut = bytes;
    cut.pop_back();
    CHECK_THROWS_AS(decode_quantized(cut), FormatError);
    auto extra = bytes;
    extra.push_back(0);
    CHECK_THROWS_AS(decode_quantized(extra), FormatError);
    CHECK_THROWS_AS(decode_quantized(encode_model(s, init_siren(s, 2))), FormatError);
}

TEST_CASE("stego and plain files are structurally identical")
{
    const std::vector<SirenSpec> specs{{1, 1, 2, 6}};
    PlanOptions o;
    o.hidden_layers = 3;
    const StegoPlan plan = plan_stego(specs, Modality::image, o);
    std::mt19937_64 rng(3);
    const std::vector<WeightSet> secrets{inrsteg::testing::random_weights(specs[0], rng, 1.0)};
    const Allocation al = allocate(plan, secrets, 0);
    const auto stego = encode_model(plan.stego_spec, al.weights);
    const auto plain = encode_model(plan.stego_spec, init_siren(plan.stego_spec, 7));
    CHECK(stego.size() == plain.size());
    CHECK(std::equal(stego.begin(), stego.begin() + kModelHeaderSize, plain.begin()));
}

TEST_CASE("recipe round trip")
{
    const Recipe r = two_secret_recipe();
    const std::string text = recipe_to_json(r);
    const Recipe back = recipe_from_json(text);
    CHECK(back.stego_spec == r.stego_spec);
    CHECK(back.placements == r.placements);
    CHECK(back.media == r.media);
    CHECK(recipe_to_json(back) == text);

    const auto dir = inrsteg::testing::scratch_dir("recipe");
    save_recipe(r, dir / "r.json");
    CHECK(load_recipe(dir / "r.json").placements == r.placements);
    CHECK(as_text(read_file(dir / "r.json")).find("\"format\": \"inrsteg-recipe\"") != std::string_view::npos);
}

TEST_CASE("inconsistent recipes are rejected")
{
    SUBCASE("overlapping placements")
    {
        Recipe r = two_secret_recipe();
        r.placements[1].row_offset = 3;
        for (auto& c : r.placements[1].cells) {
            if (c.stego_layer != 0) c.weight.col0 = 3;
            if (c.stego_layer != r.stego_spec.hidden_layers) c.weight.row0 = 3;
        }
        CHECK_THROWS_AS(recipe_from_json(recipe_to_json(r)), PlanError);
    }
    SUBCASE("secret wider than the stego net")
    {
        Recipe r = two_secret_recipe();
        r.placements[0].spec.width = r.stego_spec.width + 1;
        CHECK_THROWS_AS(recipe_from_json(recipe_to_json(r)), PlanError);
    }
    SUBCASE("schema violations")
    {
        CHECK_THROWS_AS(recipe_from_json("{"), FormatError);
        CHECK_THROWS_AS(recipe_from_json(R"({"format":"other","version":1})"), FormatError);
        std::string text = recipe_to_json(two_secret_recipe());
        text.replace(text.find("\"version\": 1"), 12, "\"version\": 9");
        CHECK_THROWS_AS(recipe_from_json(text), FormatError);
        std::string missing = recipe_to_json(two_secret_recipe());
        missing.replace(missing.find("\"row_offset\""), 12, "\"row_offzet\"");
        CHECK_THROWS_AS(recipe_from_json(missing), FormatError);
    }
}
