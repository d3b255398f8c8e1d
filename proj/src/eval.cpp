#include "jcnp/eval.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <exception>
#include <map>
#include <optional>
#include <sstream>
#include <thread>
#include <tuple>

#include "jcnp/analysis.hpp"
#include "jcnp/baselines.hpp"
#include "jcnp/checkpoint.hpp"
#include "jcnp/ops.hpp"
#include "jcnp/train.hpp"

namespace jcnp {

double rmse_255(const Image& pred, const Image& gt, double range_lo, double range_hi) {
    if (!pred.same_size(gt) || pred.channels != 1 || gt.channels != 1) {
        throw DimensionError("rmse_255 needs two single-channel images of equal size, got " +
                             std::to_string(pred.width) + "x" + std::to_string(pred.height) + "x" +
                             std::to_string(pred.channels) + " and " + std::to_string(gt.width) + "x" +
                             std::to_string(gt.height) + "x" + std::to_string(gt.channels));
    }
    if (!(range_hi > range_lo)) throw std::invalid_argument("rmse_255: empty depth range");
    if (pred.values.empty()) return 0.0;
    double sq = 0;
    for (std::size_t i = 0; i < pred.values.size(); ++i) {
        const double d = pred.values[i] - gt.values[i];
        sq += d * d;
    }
    return 255.0 / (range_hi - range_lo) * std::sqrt(sq / static_cast<double>(pred.values.size()));
}

MethodSpec MethodSpec::parse(const std::string& id) {
    if (id == "bicubic" || id == "guided_filter" || id == "jbu") return {id, {}};
    if (id.rfind("jcnp:", 0) == 0 && id.size() > 5) return {id, id.substr(5)};
    throw std::invalid_argument("unknown method '" + id +
                                "' (expected bicubic, guided_filter, jbu or jcnp:<checkpoint>)");
}

namespace {

using Clock = std::chrono::steady_clock;

struct LoadedMethod {
    MethodSpec spec;
    std::optional<Checkpoint> checkpoint;
    std::size_t params = 0;
};

struct PairScore {
    double rmse = 0;
    double seconds = 0;
};

GuidedFilterParams gf_params(const BenchmarkOptions& o, int factor) {
    return o.guided_filter.value_or(GuidedFilterParams::defaults_for(factor));
}

JbuParams jbu_params(const BenchmarkOptions& o, int factor) {
    return o.jbu.value_or(JbuParams::defaults_for(factor));
}

Image run_method(const LoadedMethod& m, const BenchmarkOptions& o, const Image& lr, const Image& guide_gray,
                 const Image& guide_native, int factor) {
    if (m.checkpoint) {
        return super_resolve(m.checkpoint->model, static_cast<int>(m.checkpoint->meta.factor), lr,
                             guide_native, factor)
            .image;
    }
    if (m.spec.id == "bicubic") return bicubic_sr(lr, factor);
    if (m.spec.id == "guided_filter") {
        return guided_filter(bicubic_sr(lr, factor), guide_gray, gf_params(o, factor));
    }
    return joint_bilateral_upsample(lr, guide_gray, factor, jbu_params(o, factor));
}

std::string header_block(const std::vector<std::string>& header) {
    std::string out;
    for (const auto& line : header) out += "# " + line + "\n";
    return out;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    out << text;
    if (!out) throw DataError(path.string() + ": cannot write");
}

}  // namespace

std::vector<BenchmarkRecord> run_benchmark(const std::vector<Manifest>& manifests,
                                           const std::vector<std::string>& methods,
                                           const std::vector<int>& factors,
                                           const std::filesystem::path& out_path,
                                           const BenchmarkOptions& options) {
    std::vector<LoadedMethod> loaded;
    bool need_rgb = false;
    for (const auto& id : methods) {
        LoadedMethod m{MethodSpec::parse(id), std::nullopt, 0};
        if (m.spec.is_jcnp()) {
            if (!std::filesystem::exists(m.spec.checkpoint)) {
                throw DataError(m.spec.checkpoint.string() + ": checkpoint not found");
            }
            m.checkpoint = load_checkpoint(m.spec.checkpoint);
            m.params = m.checkpoint->model.network().parameter_count();
            need_rgb = need_rgb || m.checkpoint->meta.guidance_channels == 3;
        }
        loaded.push_back(std::move(m));
    }
    for (int f : factors) {
        if (f < 1) throw std::invalid_argument("factor must be positive, got " + std::to_string(f));
    }

    std::vector<BenchmarkRecord> records;
    for (const auto& manifest : manifests) {
        auto entries = manifest.entries;
        std::ranges::sort(entries, [](const ManifestEntry& a, const ManifestEntry& b) {
            return std::tie(a.guidance, a.target) < std::tie(b.guidance, b.target);
        });
        const std::string dataset = manifest.dataset.empty() ? manifest.path.stem().string() : manifest.dataset;

        // scores[pair][method][factor]
        const std::size_t nm = loaded.size(), nf = factors.size();
        std::vector<PairScore> scores(entries.size() * nm * nf);
        std::vector<std::exception_ptr> errors(entries.size());
        auto work = [&](std::size_t first, std::size_t stride) {
            for (std::size_t p = first; p < entries.size(); p += stride) {
                try {
                    const SamplePair pair = load_pair(entries[p], 1, need_rgb ? 3 : 1);
                    const Image gray = to_luminance(pair.guidance);
                    for (std::size_t fi = 0; fi < nf; ++fi) {
                        const int f = factors[fi];
                        const int w = pair.gt_target.width / f * f, h = pair.gt_target.height / f * f;
                        if (w == 0 || h == 0) {
                            throw DataError(entries[p].target.string() + ": smaller than factor " + std::to_string(f));
                        }
                        const Image gt = crop(pair.gt_target, 0, 0, w, h);
                        const Image g_gray = crop(gray, 0, 0, w, h);
                        const Image g_native = crop(pair.guidance, 0, 0, w, h);
                        const Image lr = downsample_nearest(gt, f);
                        for (std::size_t mi = 0; mi < nm; ++mi) {
                            const auto t0 = Clock::now();
                            const Image out = run_method(loaded[mi], options, lr, g_gray, g_native, f);
                            const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
                            scores[(p * nm + mi) * nf + fi] = {
                                rmse_255(out, gt, manifest.range_lo, manifest.range_hi), secs};
                        }
                    }
                } catch (...) {
                    errors[p] = std::current_exception();
                }
            }
        };
        const auto workers = static_cast<std::size_t>(std::max(1, options.workers));
        if (workers == 1 || entries.size() < 2) {
            work(0, 1);
        } else {
            std::vector<std::jthread> pool;
            for (std::size_t t = 0; t < std::min(workers, entries.size()); ++t) pool.emplace_back(work, t, workers);
        }
        for (const auto& e : errors) {
            if (e) std::rethrow_exception(e);
        }

        for (std::size_t mi = 0; mi < nm; ++mi) {
            for (std::size_t fi = 0; fi < nf; ++fi) {
                double rmse = 0, secs = 0;
                for (std::size_t p = 0; p < entries.size(); ++p) {
                    rmse += scores[(p * nm + mi) * nf + fi].rmse;
                    secs += scores[(p * nm + mi) * nf + fi].seconds;
                }
                const double n = static_cast<double>(std::max<std::size_t>(1, entries.size()));
                records.push_back({dataset, loaded[mi].spec.id, factors[fi], rmse / n, secs / n, loaded[mi].params});
            }
        }
    }

    if (!out_path.empty()) {
        auto header = options.header;
        for (int f : factors) {
            const auto gf = gf_params(options, f);
            const auto jb = jbu_params(options, f);
            header.push_back(fmt::format("x{}: guided_filter radius={} eps={}; jbu sigma_spatial={} sigma_range={} radius={}",
                                         f, gf.radius, gf.eps, jb.sigma_spatial, jb.sigma_range, jb.radius));
        }
        write_text(out_path, header_block(header) + format_records(records));
        write_text(out_path.string() + ".txt", header_block(header) + format_benchmark_table(records));
    }
    return records;
}

std::string format_records(const std::vector<BenchmarkRecord>& records) {
    std::string out = "dataset\tmethod\tfactor\trmse\ttime_s\tparams\n";
    for (const auto& r : records) {
        out += fmt::format("{}\t{}\t{}\t{:.17g}\t{:.17g}\t{}\n", r.dataset, r.method, r.factor, r.rmse_255,
                           r.wall_time_s, r.param_count);
    }
    return out;
}

std::vector<BenchmarkRecord> parse_records(const std::string& text) {
    std::vector<BenchmarkRecord> records;
    std::istringstream in(text);
    std::string line;
    bool header_seen = false;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        if (!header_seen) {
            header_seen = true;
            continue;
        }
        std::istringstream fields(line);
        BenchmarkRecord r;
        std::string factor, rmse, secs, params;
        if (!std::getline(fields, r.dataset, '\t') || !std::getline(fields, r.method, '\t') ||
            !std::getline(fields, factor, '\t') || !std::getline(fields, rmse, '\t') ||
            !std::getline(fields, secs, '\t') || !std::getline(fields, params, '\t')) {
            throw DataError("malformed benchmark record: " + line);
        }
        r.factor = std::stoi(factor);
        r.rmse_255 = std::stod(rmse);
        r.wall_time_s = std::stod(secs);
        r.param_count = std::stoull(params);
        records.push_back(std::move(r));
    }
    return records;
}

std::string format_benchmark_table(const std::vector<BenchmarkRecord>& records) {
    std::vector<std::pair<std::string, int>> columns;
    std::vector<std::string> rows;
    std::map<std::pair<std::string, std::pair<std::string, int>>, double> cell;
    std::map<std::string, std::size_t> params;
    for (const auto& r : records) {
        const std::pair<std::string, int> col{r.dataset, r.factor};
        if (std::ranges::find(columns, col) == columns.end()) columns.push_back(col);
        if (std::ranges::find(rows, r.method) == rows.end()) rows.push_back(r.method);
        cell[{r.method, col}] = r.rmse_255;
        params[r.method] = r.param_count;
    }
    if (rows.empty()) return "";

    std::vector<std::vector<std::string>> grid;
    grid.push_back({"method"});
    for (const auto& [ds, f] : columns) grid[0].push_back(fmt::format("{} x{}", ds, f));
    grid[0].push_back("params");
    for (const auto& m : rows) {
        std::vector<std::string> line{m};
        for (const auto& col : columns) {
            const auto it = cell.find({m, col});
            if (it == cell.end()) {
                line.push_back("-");
                continue;
            }
            double best = it->second;
            for (const auto& other : rows) {
                const auto jt = cell.find({other, col});
                if (jt != cell.end()) best = std::min(best, jt->second);
            }
            line.push_back(fmt::format("{:.2f}{}", it->second, it->second == best ? "*" : " "));
        }
        line.push_back(std::to_string(params[m]));
        grid.push_back(std::move(line));
    }

    std::vector<std::size_t> width(grid[0].size(), 0);
    for (const auto& line : grid)
        for (std::size_t c = 0; c < line.size(); ++c) width[c] = std::max(width[c], line[c].size());
    std::string out;
    for (const auto& line : grid) {
        for (std::size_t c = 0; c < line.size(); ++c) {
            out += c == 0 ? fmt::format("{:<{}}", line[c], width[c]) : fmt::format("  {:>{}}", line[c], width[c]);
        }
        out += "\n";
    }
    out += "* best (lowest) RMSE in the column\n";
    return out;
}

namespace {

double time_training_steps(int levels, const CostOptions& options) {
    const auto scene = synth_scene(1, options.size);
    JcnpModel<float> model(JcnpSpec::with_levels(levels), 42);
    Optimizer<float> optimizer(model.network().parameters(), LearningRateSchedule{});
    const Tensor<float> target = image_to_tensor(make_lr_target(scene.gt_target, 4));
    const Tensor<float> guidance = image_to_tensor(scene.guidance);
    const Tensor<float> gt = image_to_tensor(scene.gt_target);
    auto step = [&] {
        optimizer.zero_grad();
        Tape<float> tape;
        const auto loss = mse_loss(tape, model.forward(tape, target, guidance), gt);
        tape.backward(loss);
        optimizer.step();
    };
    step();  // warm-up
    const auto t0 = Clock::now();
    for (int i = 0; i < options.steps; ++i) step();
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

}  // namespace

std::vector<CostRow> cost_report(const std::vector<int>& levels, const CostOptions& options) {
    std::vector<CostRow> rows;
    for (int n : levels) {
        if (n < 0) throw std::invalid_argument("levels must be >= 0, got " + std::to_string(n));
        if (options.size % (1 << n) != 0) {
            throw std::invalid_argument("input size " + std::to_string(options.size) +
                                        " is not divisible by 2^" + std::to_string(n));
        }
        const auto spec = JcnpSpec::with_levels(n);
        const auto rf = receptive_field(spec);
        const auto count = count_params(build_jcnp(spec));
        CostRow row{n, rf.pyramid_path_rf, rf.end_to_end_rf, count.total,
                    std::round(count.millions() * 100) / 100, 0.0};
        if (options.measure_time) row.time_s = time_training_steps(n, options);
        rows.push_back(row);
    }
    return rows;
}

std::string format_cost_report(const std::vector<CostRow>& rows, const CostOptions& options) {
    std::string out = fmt::format("{:>6}  {:>4}  {:>12}  {:>10}  {:>10}  {:>9}  {:>10}\n", "levels", "RF",
                                  "pyramid_rf", "end_to_end", "params", "params_M",
                                  fmt::format("time_{}", options.steps));
    for (const auto& r : rows) {
        const long shown = r.levels == 0 ? r.end_to_end_rf : r.pyramid_path_rf;
        out += fmt::format("{:>6}  {:>4}  {:>12}  {:>10}  {:>10}  {:>8.2f}M  {:>10}\n", r.levels, shown,
                           r.pyramid_path_rf, r.end_to_end_rf, r.params, r.params_millions,
                           options.measure_time ? fmt::format("{:.2f}", r.time_s) : std::string("-"));
    }
    out += fmt::format("RF: end-to-end for levels 0, pyramid path otherwise. time: {} forward+backward steps, "
                       "batch 1, {}x{} input.\n",
                       options.steps, options.size, options.size);
    return out;
}

}  // namespace jcnp
