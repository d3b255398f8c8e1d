#include "jcnp/cli.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <thread>

#include "jcnp/checkpoint.hpp"
#include "jcnp/config.hpp"
#include "jcnp/eval.hpp"
#include "jcnp/train.hpp"

namespace fs = std::filesystem;

namespace jcnp {

namespace {

/// Raised for invalid flag combinations found after parsing.
class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

template <typename T>
std::vector<T> split_list(const std::string& text, const std::string& what) {
    std::vector<T> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        if constexpr (std::is_same_v<T, std::string>) {
            out.push_back(item);
        } else {
            try {
                std::size_t used = 0;
                out.push_back(std::stoi(item, &used));
                if (used != item.size()) throw std::invalid_argument(item);
            } catch (const std::exception&) {
                throw UsageError(what + ": '" + item + "' is not an integer");
            }
        }
    }
    return out;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    out << text;
    if (!out) throw DataError(path.string() + ": cannot write");
}

std::string comment_block(const std::vector<std::string>& lines) {
    std::string out;
    for (const auto& l : lines) out += "# " + l + "\n";
    return out;
}

/// Runs fn(i) for i in [0, n) on up to `workers` threads; rethrows the first failure by index.
template <typename Fn>
void parallel_for(std::size_t n, int workers, Fn fn) {
    std::vector<std::exception_ptr> errors(n);
    auto work = [&](std::size_t first, std::size_t stride) {
        for (std::size_t i = first; i < n; i += stride) {
            try {
                fn(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const auto w = static_cast<std::size_t>(std::max(1, workers));
    if (w == 1 || n < 2) {
        work(0, 1);
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t t = 0; t < std::min(w, n); ++t) pool.emplace_back(work, t, w);
    }
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

struct MakeDataArgs {
    fs::path out;
    int count = 10;
    int size = 128;
    std::uint64_t seed = 1;
    std::string name = "synth";
    int workers = 1;
};

int cmd_make_data(const MakeDataArgs& a, std::ostream& out) {
    if (a.count < 0) throw UsageError("--count must be non-negative");
    if (a.size < 16 || a.size % 16 != 0) throw UsageError("--size must be a positive multiple of 16");
    fs::create_directories(a.out);
    Manifest m;
    m.dataset = a.name;
    m.entries.resize(static_cast<std::size_t>(a.count));
    parallel_for(m.entries.size(), a.workers, [&](std::size_t i) {
        const std::uint64_t scene_seed = a.seed + i;
        const auto pair = synth_scene(scene_seed, a.size);
        const std::string stem = fmt::format("scene_{:04d}", i);
        PnmWriteOptions opts;
        opts.maxval = 65535;
        opts.comments = {fmt::format("jcnp make-data seed={} index={} size={}", a.seed, i, a.size)};
        m.entries[i] = {a.out / (stem + "_guide.pgm"), a.out / (stem + "_depth.pgm")};
        write_image(pair.guidance, m.entries[i].guidance, opts);
        write_image(pair.gt_target, m.entries[i].target, opts);
    });
    save_manifest(m, a.out / "manifest.txt");
    out << fmt::format("wrote {} pairs and {}\n", a.count, (a.out / "manifest.txt").string());
    return kExitOk;
}

struct TrainArgs {
    fs::path config;
    std::string preset = "desk";
    fs::path data;
    fs::path out;
    fs::path log;
    int log_every = 100;
    int checkpoint_every = 0;
    int workers = 1;
    std::map<std::string, std::string> overrides;
};

RunConfig effective_config(const TrainArgs& a) {
    RunConfig c = a.preset == "full" ? RunConfig::full() : RunConfig{};
    if (!a.config.empty()) {
        if (a.preset != "desk") throw UsageError("--preset and --config are mutually exclusive");
        c = parse_config(a.config);
    }
    for (const auto& [key, value] : a.overrides) {
        try {
            c.set(key, value);
        } catch (const ConfigError& e) {
            throw ConfigError(std::string("--") + e.what());
        }
    }
    c.validate();
    return c;
}

int cmd_train(const TrainArgs& a, std::ostream& out, std::ostream& err) {
    const RunConfig config = effective_config(a);
    const Manifest manifest = load_manifest(a.data);
    if (manifest.entries.empty()) throw DataError(a.data.string() + ": manifest lists no pairs");

    std::vector<std::vector<PatchTriple>> per_pair(manifest.entries.size());
    parallel_for(per_pair.size(), a.workers, [&](std::size_t i) {
        const auto& entry = manifest.entries[i];
        const SamplePair pair = load_pair(entry, config.factor, config.guidance_channels);
        try {
            per_pair[i] = sample_patches(pair, config.patch_size, config.patches_per_pair, config.augment,
                                         config.seed * 1000003u + i);
        } catch (const std::invalid_argument& e) {
            throw DataError(entry.target.string() + ": " + e.what());
        }
    });
    std::vector<PatchTriple> patches;
    for (auto& p : per_pair) std::move(p.begin(), p.end(), std::back_inserter(patches));

    std::vector<std::string> header{"jcnp train", "data=" + a.data.string()};
    for (const auto& line : config.to_lines()) header.push_back(line);

    JcnpModel<float> model(JcnpSpec::with_levels(config.levels, config.guidance_channels), config.seed);
    TrainOptions opts;
    opts.steps = config.steps;
    opts.batch_size = config.batch_size;
    opts.schedule = config.schedule();
    opts.optimizer = config.optimizer;
    opts.seed = config.seed;
    opts.log_every = std::max(1, a.log_every);
    opts.on_log = [&](int step, double loss) { out << fmt::format("step {} loss {:.6g}\n", step, loss) << std::flush; };
    if (a.checkpoint_every > 0) {
        opts.checkpoint_every = a.checkpoint_every;
        opts.on_checkpoint = [&](int step, const JcnpModel<float>& m) {
            save_checkpoint(m, static_cast<std::uint32_t>(config.factor), a.out.string() + fmt::format(".step{}", step));
        };
    }
    out << fmt::format("training on {} patches from {} pairs\n", patches.size(), manifest.entries.size());

    const fs::path log = a.log.empty() ? fs::path(a.out.string() + ".log") : a.log;
    TrainResult result;
    try {
        result = train(model, patches, opts);
    } catch (const NumericError&) {
        write_text(log, comment_block(header) + "aborted: non-finite loss\n");
        throw;
    }
    save_checkpoint(model, static_cast<std::uint32_t>(config.factor), a.out);
    std::string body = "step\tloss\n";
    for (const auto& r : result.history) body += fmt::format("{}\t{:.9g}\n", r.step, r.loss);
    write_text(log, comment_block(header) + body);
    write_text(a.out.string() + ".cfg", comment_block({"effective config of " + a.out.filename().string()}) +
                                            fmt::format("{}\n", fmt::join(config.to_lines(), "\n")));
    out << fmt::format("wrote {} ({} steps, last loss {:.6g})\n", a.out.string(), result.steps_run, result.last_loss);
    (void)err;
    return kExitOk;
}

struct SrArgs {
    fs::path ckpt, target, guidance, out;
    int factor = 4;
    int maxval = 65535;
};

int cmd_sr(const SrArgs& a, std::ostream& out, std::ostream& err) {
    if (a.maxval != 255 && a.maxval != 65535) throw UsageError("--maxval must be 255 or 65535");
    const Checkpoint ckpt = load_checkpoint(a.ckpt);
    const Image target = read_image(a.target);
    const Image guidance = read_image(a.guidance);
    SrResult r;
    try {
        r = super_resolve(ckpt.model, static_cast<int>(ckpt.meta.factor), target, guidance, a.factor);
    } catch (const DimensionError& e) {
        throw DimensionError("dimension mismatch: " + a.target.string() + " / " + a.guidance.string() + ": " + e.what());
    }
    if (r.factor_mismatch) {
        err << fmt::format("warning: {} was trained for factor {}, running at factor {}\n", a.ckpt.string(),
                           ckpt.meta.factor, a.factor);
    }
    PnmWriteOptions opts;
    opts.maxval = a.maxval;
    opts.comments = {"jcnp sr", "ckpt=" + a.ckpt.string(), fmt::format("levels={}", ckpt.meta.levels),
                     fmt::format("trained_factor={}", ckpt.meta.factor), fmt::format("factor={}", a.factor),
                     fmt::format("guidance_channels={}", ckpt.meta.guidance_channels)};
    write_image(r.image, a.out, opts);
    out << fmt::format("wrote {} ({}x{})\n", a.out.string(), r.image.width, r.image.height);
    return kExitOk;
}

struct EvalArgs {
    std::vector<fs::path> data;
    std::string methods;
    std::string factors = "4";
    fs::path out;
    int workers = 1;
    std::optional<int> gf_radius;
    std::optional<double> gf_eps;
    std::optional<double> jbu_sigma_spatial, jbu_sigma_range;
    std::optional<int> jbu_radius;
};

int cmd_eval(const EvalArgs& a, std::ostream& out) {
    const auto methods = split_list<std::string>(a.methods, "--methods");
    const auto factors = split_list<int>(a.factors, "--factors");
    for (const auto& m : methods) {
        MethodSpec spec;
        try {
            spec = MethodSpec::parse(m);
        } catch (const std::invalid_argument& e) {
            throw UsageError(std::string("--methods: ") + e.what());
        }
        if (spec.is_jcnp() && !fs::exists(spec.checkpoint)) {
            throw DataError(spec.checkpoint.string() + ": checkpoint not found");
        }
    }
    for (int f : factors) {
        if (f != 2 && f != 4 && f != 8 && f != 16) throw UsageError(fmt::format("--factors: {} is not 2, 4, 8 or 16", f));
    }
    std::vector<Manifest> manifests;
    for (const auto& d : a.data) manifests.push_back(load_manifest(d));

    BenchmarkOptions opts;
    opts.workers = a.workers;
    opts.header = {"jcnp eval", "methods=" + a.methods, "factors=" + a.factors};
    for (const auto& d : a.data) opts.header.push_back("data=" + d.string());
    if (a.gf_radius || a.gf_eps) {
        // A single override applies to every factor; the other field keeps its x4 default.
        GuidedFilterParams p = GuidedFilterParams::defaults_for(4);
        if (a.gf_radius) p.radius = *a.gf_radius;
        if (a.gf_eps) p.eps = *a.gf_eps;
        opts.guided_filter = p;
    }
    if (a.jbu_sigma_spatial || a.jbu_sigma_range || a.jbu_radius) {
        JbuParams p = JbuParams::defaults_for(4);
        if (a.jbu_sigma_spatial) p.sigma_spatial = *a.jbu_sigma_spatial;
        if (a.jbu_sigma_range) p.sigma_range = *a.jbu_sigma_range;
        if (a.jbu_radius) p.radius = *a.jbu_radius;
        opts.jbu = p;
    }
    const auto records = run_benchmark(manifests, methods, factors, a.out, opts);
    out << format_benchmark_table(records);
    out << fmt::format("wrote {} and {}.txt\n", a.out.string(), a.out.string());
    return kExitOk;
}

struct AnalyzeArgs {
    std::string levels = "0,1,2,3";
    int steps = 100;
    int size = 128;
    bool no_time = false;
};

int cmd_analyze(const AnalyzeArgs& a, std::ostream& out) {
    const auto levels = split_list<int>(a.levels, "--levels");
    for (int n : levels) {
        if (n < 0 || n > 4) throw UsageError(fmt::format("--levels: {} is outside 0..4", n));
    }
    if (a.steps < 1) throw UsageError("--steps must be at least 1");
    if (a.size < 16 || a.size % 16 != 0) throw UsageError("--size must be a positive multiple of 16");
    CostOptions opts;
    opts.steps = a.steps;
    opts.size = a.size;
    opts.measure_time = !a.no_time;
    out << format_cost_report(cost_report(levels, opts), opts);
    return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Joint convolutional neural pyramid for guided depth super-resolution", "jcnp"};
    app.require_subcommand(1);
    app.failure_message(CLI::FailureMessage::help);

    MakeDataArgs md;
    auto* make_data = app.add_subcommand("make-data", "Write synthetic guidance/depth pairs and a manifest");
    make_data->add_option("--out", md.out, "Output directory")->required();
    make_data->add_option("--count", md.count, "Number of pairs")->capture_default_str();
    make_data->add_option("--size", md.size, "Side length in pixels, a multiple of 16")->capture_default_str();
    make_data->add_option("--seed", md.seed, "Seed of the first scene; scene i uses seed + i")->capture_default_str();
    make_data->add_option("--name", md.name, "Dataset id written to the manifest")->capture_default_str();
    make_data->add_option("--workers", md.workers, "Threads")->capture_default_str();

    TrainArgs tr;
    auto* train_cmd = app.add_subcommand("train", "Train a model on the pairs of a manifest");
    train_cmd->add_option("--config", tr.config, "key=value config file")->check(CLI::ExistingFile);
    train_cmd->add_option("--preset", tr.preset, "Built-in defaults when no config file is given")
        ->check(CLI::IsMember({"desk", "full"}))
        ->capture_default_str();
    train_cmd->add_option("--data", tr.data, "Training manifest")->required();
    train_cmd->add_option("--out", tr.out, "Checkpoint path; also writes <out>.log and <out>.cfg")->required();
    train_cmd->add_option("--log", tr.log, "Loss log path (default <out>.log)");
    train_cmd->add_option("--log-every", tr.log_every, "Steps between loss records")->capture_default_str();
    train_cmd->add_option("--checkpoint-every", tr.checkpoint_every, "Write <out>.step<N> every N steps (0 = off)")
        ->capture_default_str();
    train_cmd->add_option("--workers", tr.workers, "Threads for loading pairs")->capture_default_str();
    const std::map<std::string, std::string> key_help{
        {"levels", "Pyramid levels N"},
        {"factor", "Super-resolution factor (2, 4, 8, 16)"},
        {"steps", "Training steps"},
        {"batch_size", "Patches per step"},
        {"patch_size", "Patch side in pixels"},
        {"base_lr", "Initial learning rate"},
        {"decay_factor", "Learning-rate multiplier per decay interval"},
        {"decay_interval", "Steps per learning-rate decay"},
        {"seed", "Seed for initialisation, patch sampling and batching"},
        {"optimizer", "adam or sgd"},
        {"guidance_channels", "1 (luminance) or 3 (RGB)"},
        {"patches_per_pair", "Random crops drawn from each pair"},
        {"augment", "Random rotation/mirror of crops (true/false)"}};
    for (const auto& key : config_keys()) {
        train_cmd->add_option_function<std::string>(
            "--" + key, [&tr, key](const std::string& v) { tr.overrides[key] = v; },
            key_help.at(key) + "; overrides the config file");
    }

    SrArgs sr;
    auto* sr_cmd = app.add_subcommand("sr", "Super-resolve one low-resolution target");
    sr_cmd->add_option("--ckpt", sr.ckpt, "Checkpoint")->required();
    sr_cmd->add_option("--target", sr.target, "Low-resolution target image (PGM/PPM)")->required();
    sr_cmd->add_option("--guidance", sr.guidance, "High-resolution guidance image (PGM/PPM)")->required();
    sr_cmd->add_option("--factor", sr.factor, "Upsampling factor")->capture_default_str();
    sr_cmd->add_option("--out", sr.out, "Output PGM")->required();
    sr_cmd->add_option("--maxval", sr.maxval, "Output sample range, 255 or 65535")->capture_default_str();

    EvalArgs ev;
    auto* eval_cmd = app.add_subcommand("eval", "Benchmark methods on one or more manifests");
    eval_cmd->add_option("--data", ev.data, "Manifest (repeatable)")->required();
    eval_cmd->add_option("--methods", ev.methods, "Comma list of bicubic, guided_filter, jbu, jcnp:<ckpt>")->required();
    eval_cmd->add_option("--factors", ev.factors, "Comma list of factors")->capture_default_str();
    eval_cmd->add_option("--out", ev.out, "Record file (TSV); the table goes to <out>.txt")->required();
    eval_cmd->add_option("--workers", ev.workers, "Threads across pairs")->capture_default_str();
    eval_cmd->add_option("--gf_radius", ev.gf_radius, "Guided filter radius (default 2 x factor)");
    eval_cmd->add_option("--gf_eps", ev.gf_eps, "Guided filter eps (default 1e-4)");
    eval_cmd->add_option("--jbu_sigma_spatial", ev.jbu_sigma_spatial, "JBU spatial sigma in HR pixels (default factor / 2)");
    eval_cmd->add_option("--jbu_sigma_range", ev.jbu_sigma_range, "JBU range sigma (default 0.05)");
    eval_cmd->add_option("--jbu_radius", ev.jbu_radius, "JBU window radius in HR pixels (default 2 x factor)");

    AnalyzeArgs an;
    auto* analyze = app.add_subcommand("analyze", "Receptive fields, parameter counts and step times per level");
    analyze->add_option("--levels", an.levels, "Comma list of levels in 0..4")->capture_default_str();
    analyze->add_option("--steps", an.steps, "Timed forward+backward steps")->capture_default_str();
    analyze->add_option("--size", an.size, "Input side in pixels")->capture_default_str();
    analyze->add_flag("--no-time", an.no_time, "Skip the timing column");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (make_data->parsed()) return cmd_make_data(md, out);
        if (train_cmd->parsed()) return cmd_train(tr, out, err);
        if (sr_cmd->parsed()) return cmd_sr(sr, out, err);
        if (eval_cmd->parsed()) return cmd_eval(ev, out);
        return cmd_analyze(an, out);
    } catch (const NumericError& e) {
        err << "error: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const UsageError& e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const DataError& e) {
        err << "error: " << e.what() << "\n";
        return kExitData;
    } catch (const DimensionError& e) {
        err << "error: " << e.what() << "\n";
        return kExitData;
    } catch (const fs::filesystem_error& e) {
        err << "error: " << e.what() << "\n";
        return kExitData;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitData;
    }
}

}  // namespace jcnp
