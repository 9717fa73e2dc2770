#include "inrsteg/cli.hpp"

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>

#include "CLI11.hpp"
#include "inrsteg/keyperm.hpp"
#include "inrsteg/media.hpp"
#include "inrsteg/metrics.hpp"
#include "inrsteg/modelio.hpp"
#include "inrsteg/robustness.hpp"
#include "inrsteg/steg.hpp"
#include "inrsteg/train.hpp"

namespace inrsteg::cli {

namespace fs = std::filesystem;

namespace {

class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Common {
    std::uint64_t seed = 0;
    unsigned threads = 0;  // 0: INRSTEG_THREADS or 1
};

struct TrainFlags {
    std::uint64_t steps = 2000;
    double lr = 1e-4;
    std::size_t batch = 0;
    std::uint64_t patience = 0;
};

void add_train_flags(CLI::App* cmd, TrainFlags& t)
{
    cmd->add_option("--steps", t.steps, "Optimization steps")->capture_default_str();
    cmd->add_option("--lr", t.lr, "Adam learning rate")->capture_default_str()->check(CLI::PositiveNumber);
    cmd->add_option("--batch", t.batch, "Samples per step (0 = full grid up to 65536)")->capture_default_str();
    cmd->add_option("--patience", t.patience, "Early-stopping patience in steps (0 = off)")->capture_default_str();
}

TrainConfig make_train_config(const TrainFlags& t, const Common& c)
{
    TrainConfig cfg;
    cfg.learning_rate = t.lr;
    cfg.steps = t.steps;
    cfg.batch_size = t.batch;
    cfg.early_stop_patience = t.patience;
    cfg.seed = c.seed;
    cfg.threads = c.threads ? c.threads : threads_from_env(1);
    return cfg;
}

std::vector<std::size_t> parse_dims(std::string_view text)
{
    std::vector<std::size_t> dims;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t next = std::min(text.find('x', pos), text.size());
        std::size_t v = 0;
        const auto part = text.substr(pos, next - pos);
        const auto [ptr, ec] = std::from_chars(part.data(), part.data() + part.size(), v);
        if (ec != std::errc{} || ptr != part.data() + part.size() || v == 0)
            throw UsageError("bad dimension list '" + std::string(text) + "'");
        dims.push_back(v);
        pos = next + 1;
    }
    return dims;
}

/// "image:HxWxC", "audio:N[@RATE]", "video:TxHxWxC" or "sdf:RES".
SecretMedia parse_media_desc(std::string_view desc)
{
    const auto colon = desc.find(':');
    if (colon == std::string_view::npos) throw UsageError("media descriptor '" + std::string(desc) + "' lacks ':'");
    SecretMedia m;
    try {
        m.modality = parse_modality(desc.substr(0, colon));
    } catch (const ArgumentError& e) {
        throw UsageError(e.what());
    }
    std::string_view rest = desc.substr(colon + 1);
    switch (m.modality) {
        case Modality::image:
        case Modality::video: {
            m.shape = parse_dims(rest);
            const std::size_t rank = m.modality == Modality::image ? 3 : 4;
            if (m.shape.size() == rank - 1) m.shape.push_back(3);
            if (m.shape.size() != rank || (m.shape.back() != 1 && m.shape.back() != 3))
                throw UsageError("bad " + std::string(to_string(m.modality)) + " shape '" + std::string(rest) + "'");
            m.range = kPixelRange;
            break;
        }
        case Modality::audio: {
            const auto at = rest.find('@');
            const auto n = parse_dims(rest.substr(0, at));
            if (n.size() != 1) throw UsageError("audio descriptor needs a sample count");
            m.shape = {n[0], 1};
            m.sample_rate = 8000;
            if (at != std::string_view::npos) m.sample_rate = static_cast<std::uint32_t>(parse_dims(rest.substr(at + 1)).at(0));
            m.range = kPcm16Range;
            break;
        }
        case Modality::sdf: {
            const auto r = parse_dims(rest);
            if (r.size() != 1) throw UsageError("sdf descriptor needs a lattice resolution");
            m.sdf_resolution = static_cast<std::uint32_t>(r[0]);
            m.shape = {r[0] * r[0] * r[0]};
            m.range = {-1.0, 1.0};
            break;
        }
    }
    return m;
}

PrivateKey parse_key(const std::string& hex)
{
    try {
        return PrivateKey::from_hex(hex);
    } catch (const ArgumentError& e) {
        throw UsageError(e.what());
    }
}

Modality parse_modality_flag(const std::string& name)
{
    try {
        return parse_modality(name);
    } catch (const ArgumentError& e) {
        throw UsageError(e.what());
    }
}

std::string media_extension(Modality m)
{
    switch (m) {
        case Modality::image: return ".ppm";
        case Modality::audio: return ".wav";
        case Modality::video: return "";
        case Modality::sdf: return ".sdfs";
    }
    return "";
}

FreezeMask permute_mask(const SirenSpec& spec, const FreezeMask& mask, const LayerPerms& perms)
{
    const WeightSet as_float = apply_perms(spec, param_cast<float>(mask), perms);
    return param_cast<std::uint8_t>(as_float);
}

void print_spec(std::ostream& err, const char* prefix, const SirenSpec& s)
{
    err << "# " << prefix << "=(in=" << s.in_dim << ", out=" << s.out_dim << ", layers=" << s.hidden_layers
        << ", width=" << s.width << ", omega0=" << s.omega0 << ")\n";
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Hide neural representations of media inside other neural representations", "inrsteg"};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all", "Show help for every subcommand");

    Common common;
    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--seed", common.seed, "Seed for every random choice")->capture_default_str();
        cmd->add_option("--threads", common.threads, "Worker threads (default: INRSTEG_THREADS or 1)");
    };

    // Each subcommand registers an action that runs after parsing.
    std::function<void()> action;
    std::vector<std::pair<std::string, std::string>> config;
    auto show = [&](std::string key, auto value) {
        std::ostringstream s;
        s << value;
        config.emplace_back(std::move(key), s.str());
    };

    // fit ------------------------------------------------------------------
    struct {
        std::string modality, in, out;
        std::uint32_t width = 128, layers = 5;
        float omega0 = 30.0f;
        TrainFlags train;
    } fit_o;
    auto* fit_cmd = app.add_subcommand("fit", "Fit a SIREN to a media file");
    fit_cmd->add_option("--modality", fit_o.modality, "image | audio | video | sdf")->required();
    fit_cmd->add_option("--in", fit_o.in, "Input media")->required();
    fit_cmd->add_option("--out", fit_o.out, "Output .inrw")->required();
    fit_cmd->add_option("--width", fit_o.width, "Hidden width")->capture_default_str()->check(CLI::PositiveNumber);
    fit_cmd->add_option("--layers", fit_o.layers, "Hidden layers")->capture_default_str()->check(CLI::PositiveNumber);
    fit_cmd->add_option("--omega0", fit_o.omega0, "Sine frequency scale")->capture_default_str()->check(CLI::PositiveNumber);
    add_train_flags(fit_cmd, fit_o.train);
    add_common(fit_cmd);
    fit_cmd->callback([&] {
        action = [&] {
            const Modality m = parse_modality_flag(fit_o.modality);
            const MediaTensor media = load_media(fit_o.in, m);
            SirenSpec spec{modality_in_dim(m), modality_out_dim(m, media.channels()), fit_o.layers, fit_o.width, fit_o.omega0};
            const TrainConfig cfg = make_train_config(fit_o.train, common);
            print_spec(err, "spec", spec);
            const auto result = fit(spec, init_siren(spec, common.seed), coord_dataset(media), cfg);
            if (!result.loss_trace.empty())
                err << "# loss first=" << result.loss_trace.front() << " last=" << result.loss_trace.back()
                    << " steps=" << result.loss_trace.size() << '\n';
            save_model(spec, result.weights, fit_o.out);
        };
        show("command", "fit");
        show("modality", fit_o.modality);
        show("in", fit_o.in);
        show("out", fit_o.out);
        show("width", fit_o.width);
        show("layers", fit_o.layers);
        show("omega0", fit_o.omega0);
        show("steps", fit_o.train.steps);
        show("lr", fit_o.train.lr);
        show("batch", fit_o.train.batch);
        show("patience", fit_o.train.patience);
    });

    // hide -----------------------------------------------------------------
    struct {
        std::string cover, modality, out, recipe;
        std::vector<std::string> secrets, secret_media;
        double padding = 1.0;
        std::uint32_t layers = 5, offset = 0, width = 0;
        float omega0 = 30.0f;
        TrainFlags train;
    } hide_o;
    auto* hide_cmd = app.add_subcommand("hide", "Embed secret .inrw models in a stego model fitted to a cover");
    hide_cmd->add_option("--cover", hide_o.cover, "Cover media")->required();
    hide_cmd->add_option("--modality", hide_o.modality, "Cover modality")->required();
    hide_cmd->add_option("--secret", hide_o.secrets, "Secret .inrw (repeatable)")->required();
    hide_cmd->add_option("--secret-media", hide_o.secret_media,
                         "Per secret: image:HxWxC | audio:N[@RATE] | video:TxHxWxC | sdf:RES")
        ->required();
    hide_cmd->add_option("--out", hide_o.out, "Output stego .inrw")->required();
    hide_cmd->add_option("--recipe", hide_o.recipe, "Output recipe .json")->required();
    hide_cmd->add_option("--padding", hide_o.padding, "Padded width / summed secret widths")->capture_default_str();
    hide_cmd->add_option("--layers", hide_o.layers, "Stego hidden layers")->capture_default_str()->check(CLI::PositiveNumber);
    hide_cmd->add_option("--width", hide_o.width, "Explicit stego width (overrides --padding)");
    hide_cmd->add_option("--offset", hide_o.offset, "First hidden node of the first secret band")->capture_default_str();
    hide_cmd->add_option("--omega0", hide_o.omega0, "Stego sine frequency scale")->capture_default_str();
    add_train_flags(hide_cmd, hide_o.train);
    add_common(hide_cmd);
    hide_cmd->callback([&] {
        action = [&] {
            if (hide_o.secrets.size() != hide_o.secret_media.size())
                throw UsageError("give one --secret-media per --secret");
            const Modality cm = parse_modality_flag(hide_o.modality);
            const MediaTensor cover = load_media(hide_o.cover, cm);
            std::vector<SirenSpec> specs;
            std::vector<WeightSet> weights;
            Recipe recipe;
            for (std::size_t i = 0; i < hide_o.secrets.size(); ++i) {
                Model m = load_model(hide_o.secrets[i]);
                specs.push_back(m.spec);
                weights.push_back(std::move(m.weights));
                recipe.media.push_back(parse_media_desc(hide_o.secret_media[i]));
            }
            PlanOptions opts;
            opts.padding_rate = hide_o.padding;
            opts.hidden_layers = hide_o.layers;
            opts.omega0 = hide_o.omega0;
            opts.row_offset = hide_o.offset;
            opts.cover_channels = cover.channels();
            if (hide_o.width) opts.width = hide_o.width;
            const StegoPlan plan = plan_stego(specs, cm, opts);
            print_spec(err, "stego", plan.stego_spec);
            err << "# padding_rate_effective=" << plan.padding_rate << '\n';
            recipe.stego_spec = plan.stego_spec;
            recipe.placements = plan.placements;
            recipe.validate();

            Allocation alloc = allocate(plan, weights, common.seed);
            const TrainConfig cfg = make_train_config(hide_o.train, common);
            const auto result = hide(plan.stego_spec, std::move(alloc.weights), alloc.mask, cover, cfg);
            if (!result.loss_trace.empty())
                err << "# loss first=" << result.loss_trace.front() << " last=" << result.loss_trace.back() << '\n';
            save_model(plan.stego_spec, result.weights, hide_o.out);
            save_recipe(recipe, hide_o.recipe);
        };
        show("command", "hide");
        show("cover", hide_o.cover);
        show("modality", hide_o.modality);
        show("secrets", hide_o.secrets.size());
        show("padding", hide_o.padding);
        show("layers", hide_o.layers);
        show("width", hide_o.width);
        show("offset", hide_o.offset);
        show("steps", hide_o.train.steps);
        show("lr", hide_o.train.lr);
        show("out", hide_o.out);
        show("recipe", hide_o.recipe);
    });

    // permute / unpermute --------------------------------------------------
    struct {
        std::string in, out, key;
    } perm_o;
    auto add_perm = [&](const char* name, const char* help, bool inverse) {
        auto* cmd = app.add_subcommand(name, help);
        cmd->add_option("--in", perm_o.in, "Input .inrw")->required();
        cmd->add_option("--out", perm_o.out, "Output .inrw")->required();
        cmd->add_option("--key", perm_o.key, "128-bit key as 32 hex characters")->required();
        add_common(cmd);
        cmd->callback([&, name, inverse] {
            action = [&, inverse] {
                const PrivateKey key = parse_key(perm_o.key);
                const Model m = load_model(perm_o.in);
                LayerPerms perms = derive_layer_perms(key, m.spec);
                if (inverse) perms = invert_perms(perms);
                save_model(m.spec, apply_perms(m.spec, m.weights, perms), perm_o.out);
            };
            show("command", name);
            show("in", perm_o.in);
            show("out", perm_o.out);
            show("key", "<redacted>");
        });
    };
    add_perm("permute", "Scramble hidden nodes with a key-derived permutation", false);
    add_perm("unpermute", "Undo a key-derived permutation", true);

    // reveal ---------------------------------------------------------------
    struct {
        std::string stego, key, recipe, out_dir;
        bool save_models = false;
    } rev_o;
    auto* rev_cmd = app.add_subcommand("reveal", "Extract and render the secrets of a stego model");
    rev_cmd->add_option("--stego", rev_o.stego, "Stego .inrw (permuted unless --key is omitted)")->required();
    rev_cmd->add_option("--key", rev_o.key, "128-bit key as 32 hex characters");
    rev_cmd->add_option("--recipe", rev_o.recipe, "Recipe .json")->required();
    rev_cmd->add_option("--out-dir", rev_o.out_dir, "Directory for secret_<i> media")->required();
    rev_cmd->add_flag("--save-models", rev_o.save_models, "Also write secret_<i>.inrw");
    add_common(rev_cmd);
    rev_cmd->callback([&] {
        action = [&] {
            const Recipe recipe = load_recipe(rev_o.recipe);
            Model stego = load_model(rev_o.stego);
            if (stego.spec != recipe.stego_spec) throw Error("stego model does not match the recipe's architecture");
            if (!rev_o.key.empty()) {
                const auto perms = invert_perms(derive_layer_perms(parse_key(rev_o.key), stego.spec));
                stego.weights = apply_perms(stego.spec, stego.weights, perms);
            }
            const auto secrets = extract(stego.weights, recipe);
            fs::create_directories(rev_o.out_dir);
            for (std::size_t i = 0; i < secrets.size(); ++i) {
                const auto& spec = recipe.placements[i].spec;
                const std::string base = "secret_" + std::to_string(i);
                const MediaTensor media = render_secret(spec, secrets[i], recipe.media[i]);
                const fs::path path = fs::path(rev_o.out_dir) / (base + media_extension(media.modality));
                save_media(media, path);
                out << path.string() << '\n';
                if (rev_o.save_models) save_model(spec, secrets[i], fs::path(rev_o.out_dir) / (base + ".inrw"));
            }
        };
        show("command", "reveal");
        show("stego", rev_o.stego);
        show("recipe", rev_o.recipe);
        show("key", rev_o.key.empty() ? "<none>" : "<redacted>");
        show("out_dir", rev_o.out_dir);
    });

    // render ---------------------------------------------------------------
    struct {
        std::string in, media, out;
    } ren_o;
    auto* ren_cmd = app.add_subcommand("render", "Evaluate a model on a media grid");
    ren_cmd->add_option("--in", ren_o.in, "Model .inrw")->required();
    ren_cmd->add_option("--media", ren_o.media, "image:HxWxC | audio:N[@RATE] | video:TxHxWxC | sdf:RES")->required();
    ren_cmd->add_option("--out", ren_o.out, "Output media path")->required();
    add_common(ren_cmd);
    ren_cmd->callback([&] {
        action = [&] {
            const Model m = load_model(ren_o.in);
            save_media(render_secret(m.spec, m.weights, parse_media_desc(ren_o.media)), ren_o.out);
        };
        show("command", "render");
        show("in", ren_o.in);
        show("media", ren_o.media);
        show("out", ren_o.out);
    });

    // eval -----------------------------------------------------------------
    struct {
        std::string modality, ref, test;
    } eval_o;
    auto* eval_cmd = app.add_subcommand("eval", "Compare two media files");
    eval_cmd->add_option("--modality", eval_o.modality, "image | audio | video | sdf")->required();
    eval_cmd->add_option("--ref", eval_o.ref, "Reference media")->required();
    eval_cmd->add_option("--test", eval_o.test, "Media under test")->required();
    add_common(eval_cmd);
    eval_cmd->callback([&] {
        action = [&] {
            const Modality m = parse_modality_flag(eval_o.modality);
            write_report(out, evaluate(load_media(eval_o.ref, m), load_media(eval_o.test, m)));
        };
        show("command", "eval");
        show("modality", eval_o.modality);
        show("ref", eval_o.ref);
        show("test", eval_o.test);
    });

    // quantize / dequantize ------------------------------------------------
    struct {
        std::string in, out;
    } q_o;
    auto* q_cmd = app.add_subcommand("quantize", "Convert .inrw to per-tensor int8 .inrq");
    q_cmd->add_option("--in", q_o.in, "Input .inrw")->required();
    q_cmd->add_option("--out", q_o.out, "Output .inrq")->required();
    add_common(q_cmd);
    q_cmd->callback([&] {
        action = [&] {
            const Model m = load_model(q_o.in);
            save_quantized(quantize_int8(m.spec, m.weights), q_o.out);
        };
        show("command", "quantize");
        show("in", q_o.in);
        show("out", q_o.out);
    });
    auto* dq_cmd = app.add_subcommand("dequantize", "Convert .inrq back to float .inrw");
    dq_cmd->add_option("--in", q_o.in, "Input .inrq")->required();
    dq_cmd->add_option("--out", q_o.out, "Output .inrw")->required();
    add_common(dq_cmd);
    dq_cmd->callback([&] {
        action = [&] {
            const QuantizedModel qm = load_quantized(q_o.in);
            save_model(qm.spec, dequantize(qm), q_o.out);
        };
        show("command", "dequantize");
        show("in", q_o.in);
        show("out", q_o.out);
    });

    // prune ----------------------------------------------------------------
    struct {
        std::string stego, recipe, cover, modality, out, report, key;
        PruneSchedule sched;
        double lr = 1e-4;
    } pr_o;
    auto* pr_cmd = app.add_subcommand("prune", "Iterative magnitude pruning that spares secret weights");
    pr_cmd->add_option("--stego", pr_o.stego, "Stego .inrw")->required();
    pr_cmd->add_option("--recipe", pr_o.recipe, "Recipe marking the secret weights")->required();
    pr_cmd->add_option("--key", pr_o.key, "Key, when the stego model is permuted");
    pr_cmd->add_option("--cover", pr_o.cover, "Cover media for finetuning")->required();
    pr_cmd->add_option("--modality", pr_o.modality, "Cover modality")->required();
    pr_cmd->add_option("--out", pr_o.out, "Pruned .inrw")->required();
    pr_cmd->add_option("--report", pr_o.report, "CSV report (rate,pruned,psnr,ssim); stdout if omitted");
    pr_cmd->add_option("--start", pr_o.sched.start_rate, "First pruning rate")->capture_default_str();
    pr_cmd->add_option("--step", pr_o.sched.step, "Rate increment")->capture_default_str();
    pr_cmd->add_option("--max", pr_o.sched.max_rate, "Final pruning rate")->capture_default_str();
    pr_cmd->add_option("--finetune-steps", pr_o.sched.finetune_steps, "Cover steps after each rate")->capture_default_str();
    pr_cmd->add_option("--lr", pr_o.lr, "Finetune learning rate")->capture_default_str();
    add_common(pr_cmd);
    pr_cmd->callback([&] {
        action = [&] {
            try {
                pr_o.sched.validate();
            } catch (const ArgumentError& e) {
                throw UsageError(e.what());
            }
            const Recipe recipe = load_recipe(pr_o.recipe);
            const Model stego = load_model(pr_o.stego);
            if (stego.spec != recipe.stego_spec) throw Error("stego model does not match the recipe's architecture");
            FreezeMask mask = secret_mask(recipe.stego_spec, recipe.placements);
            if (!pr_o.key.empty()) mask = permute_mask(stego.spec, mask, derive_layer_perms(parse_key(pr_o.key), stego.spec));
            const MediaTensor cover = load_media(pr_o.cover, parse_modality_flag(pr_o.modality));
            TrainFlags tf;
            tf.lr = pr_o.lr;
            const auto result = prune_iterative(stego.spec, stego.weights, mask, cover, pr_o.sched, make_train_config(tf, common));
            save_model(stego.spec, result.weights, pr_o.out);
            if (pr_o.report.empty()) {
                write_prune_report(out, result.report);
            } else {
                std::ofstream f(pr_o.report);
                if (!f) throw Error("cannot write report '" + pr_o.report + "'");
                write_prune_report(f, result.report);
            }
        };
        show("command", "prune");
        show("stego", pr_o.stego);
        show("cover", pr_o.cover);
        show("start", pr_o.sched.start_rate);
        show("step", pr_o.sched.step);
        show("max", pr_o.sched.max_rate);
        show("finetune_steps", pr_o.sched.finetune_steps);
        show("lr", pr_o.lr);
    });

    // hist -----------------------------------------------------------------
    struct {
        std::string in, out;
        std::size_t bins = 100;
        bool log = false;
    } h_o;
    auto* h_cmd = app.add_subcommand("hist", "Weight histogram as CSV (bin_left,bin_right,count)");
    h_cmd->add_option("--in", h_o.in, "Model .inrw")->required();
    h_cmd->add_option("--out", h_o.out, "CSV path; stdout if omitted");
    h_cmd->add_option("--bins", h_o.bins, "Bin count")->capture_default_str()->check(CLI::PositiveNumber);
    h_cmd->add_flag("--log", h_o.log, "Histogram of ln(|w| + 1e-12)");
    add_common(h_cmd);
    h_cmd->callback([&] {
        action = [&] {
            const Model m = load_model(h_o.in);
            const auto hist = weight_histogram(m.weights, h_o.bins, h_o.log);
            if (h_o.out.empty()) {
                write_histogram_csv(out, hist);
            } else {
                std::ofstream f(h_o.out);
                if (!f) throw Error("cannot write '" + h_o.out + "'");
                write_histogram_csv(f, hist);
            }
        };
        show("command", "hist");
        show("in", h_o.in);
        show("bins", h_o.bins);
        show("log", h_o.log);
    });

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    }

    show("seed", common.seed);
    show("threads", common.threads ? common.threads : threads_from_env(1));
    for (const auto& [k, v] : config) err << "# " << k << '=' << v << '\n';

    try {
        if (action) action();
        return 0;
    } catch (const UsageError& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
}

}  // namespace inrsteg::cli
