#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "jcnp/baselines.hpp"
#include "jcnp/dataset.hpp"
#include "jcnp/image.hpp"

namespace jcnp {

/**
 * RMSE on the 8-bit depth scale: both images are mapped so that the dataset
 * range [range_lo, range_hi] spans [0, 255], i.e.
 *   255 / (range_hi - range_lo) * sqrt(mean((pred - gt)^2)).
 * Images must be single-channel and equally sized.
 */
double rmse_255(const Image& pred, const Image& gt, double range_lo = 0.0, double range_hi = 1.0);

struct BenchmarkRecord {
    std::string dataset;
    std::string method;
    int factor = 4;
    double rmse_255 = 0.0;
    /// Mean seconds per pair, excluding I/O.
    double wall_time_s = 0.0;
    std::size_t param_count = 0;

    bool operator==(const BenchmarkRecord&) const = default;
};

/// Method ids: bicubic, guided_filter, jbu, or jcnp:<checkpoint path>.
struct MethodSpec {
    std::string id;
    std::filesystem::path checkpoint;  // jcnp only

    static MethodSpec parse(const std::string& id);
    bool is_jcnp() const { return !checkpoint.empty(); }
};

struct BenchmarkOptions {
    /// Threads across pairs. Results do not depend on this.
    int workers = 1;
    /// Lines written as '#' comments at the top of both output files.
    std::vector<std::string> header;
    /// Baseline parameters; unset means the per-factor defaults.
    std::optional<GuidedFilterParams> guided_filter;
    std::optional<JbuParams> jbu;
};

/**
 * For every manifest, method and factor: crops each pair to a multiple of
 * the factor, builds the LR target with downsample_nearest, runs the method
 * and scores rmse_255 with the manifest range; scores and times are averaged
 * over the manifest's pairs. Pairs are processed in path order, so the result
 * does not depend on manifest line order.
 *
 * Writes out_path (tab-separated records) and out_path + ".txt" (aligned
 * table, best value of each column marked with '*') unless out_path is empty.
 * Both files also list the baseline parameters used per factor. Checkpoints
 * are loaded before any work; a missing one throws DataError.
 */
std::vector<BenchmarkRecord> run_benchmark(const std::vector<Manifest>& manifests,
                                           const std::vector<std::string>& methods,
                                           const std::vector<int>& factors,
                                           const std::filesystem::path& out_path,
                                           const BenchmarkOptions& options = {});

/// Record file: "dataset method factor rmse time_s params", tab-separated.
std::string format_records(const std::vector<BenchmarkRecord>& records);
std::vector<BenchmarkRecord> parse_records(const std::string& text);

/// Methods as rows, one "dataset xF" column per dataset and factor.
std::string format_benchmark_table(const std::vector<BenchmarkRecord>& records);

struct CostRow {
    int levels = 0;
    long pyramid_path_rf = 0;
    long end_to_end_rf = 0;
    std::size_t params = 0;
    double params_millions = 0.0;
    /// Seconds for `steps` forward+backward+update steps, warm-up excluded.
    double time_s = 0.0;
};

struct CostOptions {
    int steps = 100;
    int size = 128;
    /// Skip timing; time_s stays 0.
    bool measure_time = true;
};

/// Structural numbers and timed training steps at batch 1 for each level count.
std::vector<CostRow> cost_report(const std::vector<int>& levels, const CostOptions& options = {});

/// The RF column shows end_to_end_rf for N = 0 and pyramid_path_rf otherwise.
std::string format_cost_report(const std::vector<CostRow>& rows, const CostOptions& options = {});

}  // namespace jcnp
