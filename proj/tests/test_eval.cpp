#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "jcnp/checkpoint.hpp"
#include "jcnp/eval.hpp"

namespace fs = std::filesystem;
using namespace jcnp;

namespace {

Image noise_image(int w, int h, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0, 1);
    Image img = Image::zeros(w, h);
    for (double& v : img.values) v = u(rng);
    return img;
}

fs::path scratch_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("jcnp_test_eval_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

/// Writes `count` synthetic pairs and returns their manifest.
Manifest write_pairs(const fs::path& dir, int count, int size) {
    Manifest m;
    m.path = dir / "manifest.txt";
    m.dataset = "synth";
    for (int i = 0; i < count; ++i) {
        const auto pair = synth_scene(static_cast<std::uint64_t>(100 + i), size);
        const std::string stem = "pair" + std::to_string(i);
        write_image(pair.guidance, dir / (stem + "_guide.pgm"), {65535});
        write_image(pair.gt_target, dir / (stem + "_depth.pgm"), {65535});
        m.entries.push_back({dir / (stem + "_guide.pgm"), dir / (stem + "_depth.pgm")});
    }
    save_manifest(m, m.path);
    return load_manifest(m.path);
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST(Rmse255, ClosedFormExamples) {
    std::mt19937_64 rng(1);
    const Image gt = noise_image(8, 6, rng);
    EXPECT_EQ(rmse_255(gt, gt), 0.0);

    Image shifted = gt;
    for (double& v : shifted.values) v += 1.0 / 255;
    EXPECT_NEAR(rmse_255(shifted, gt), 1.0, 1e-12);

    Image zeros = Image::zeros(4, 4), checker = Image::zeros(4, 4);
    for (int y = 0; y < 4; ++y)
        for (int x = 0; x < 4; ++x) checker.at(x, y) = (x + y) % 2;
    EXPECT_NEAR(rmse_255(checker, zeros), 255.0 / std::sqrt(2.0), 1e-12);
    EXPECT_NEAR(rmse_255(checker, zeros), 180.31, 5e-3);
}

TEST(Rmse255, DatasetRangeScalesTheError) {
    std::mt19937_64 rng(2);
    const Image a = noise_image(5, 5, rng), b = noise_image(5, 5, rng);
    EXPECT_NEAR(rmse_255(a, b, 0.25, 0.75), 2 * rmse_255(a, b), 1e-12);
    EXPECT_THROW(rmse_255(a, b, 0.5, 0.5), std::invalid_argument);
}

TEST(Rmse255, IsAMetricOnRandomTriples) {
    std::mt19937_64 rng(3);
    for (int i = 0; i < 200; ++i) {
        const Image a = noise_image(6, 5, rng), b = noise_image(6, 5, rng), c = noise_image(6, 5, rng);
        const double ab = rmse_255(a, b), ba = rmse_255(b, a), bc = rmse_255(b, c), ac = rmse_255(a, c);
        EXPECT_EQ(ab, ba);
        EXPECT_GT(ab, 0.0);
        EXPECT_LE(ac, ab + bc + 1e-12);
    }
}

TEST(Rmse255, RejectsMismatchedImages) {
    EXPECT_THROW(rmse_255(Image::zeros(4, 4), Image::zeros(4, 5)), DimensionError);
    EXPECT_THROW(rmse_255(Image::zeros(4, 4, 3), Image::zeros(4, 4, 3)), DimensionError);
}

TEST(MethodSpec, ParsesKnownIds) {
    EXPECT_FALSE(MethodSpec::parse("jbu").is_jcnp());
    EXPECT_EQ(MethodSpec::parse("jcnp:/a/b.ckpt").checkpoint, fs::path("/a/b.ckpt"));
    EXPECT_THROW(MethodSpec::parse("nearest"), std::invalid_argument);
    EXPECT_THROW(MethodSpec::parse("jcnp:"), std::invalid_argument);
}

TEST(RunBenchmark, BicubicOnOnePairMatchesDirectComputation) {
    const auto dir = scratch_dir("single");
    const auto m = write_pairs(dir, 1, 48);
    const auto records = run_benchmark({m}, {"bicubic"}, {4}, dir / "out.tsv");
    ASSERT_EQ(records.size(), 1u);
    EXPECT_EQ(records[0].dataset, "synth");
    EXPECT_EQ(records[0].method, "bicubic");
    EXPECT_EQ(records[0].param_count, 0u);

    // Direct: subsample every 4th pixel, upsample, squared error on [0,255].
    const Image gt = read_image(m.entries[0].target);
    Image lr = Image::zeros(12, 12);
    for (int y = 0; y < 12; ++y)
        for (int x = 0; x < 12; ++x) lr.at(x, y) = gt.at(4 * x, 4 * y);
    const Image up = upsample_bicubic(lr, 4);
    double sq = 0;
    for (std::size_t i = 0; i < gt.values.size(); ++i) {
        const double d = 255 * up.values[i] - 255 * gt.values[i];
        sq += d * d;
    }
    EXPECT_NEAR(records[0].rmse_255, std::sqrt(sq / static_cast<double>(gt.values.size())), 1e-9);

    EXPECT_EQ(parse_records(slurp(dir / "out.tsv")).at(0).rmse_255, records[0].rmse_255);
    const std::string table = slurp(dir / "out.tsv.txt");
    EXPECT_NE(table.find("synth x4"), std::string::npos);
    EXPECT_NE(table.find("guided_filter radius=8 eps=0.0001"), std::string::npos);
}

TEST(RunBenchmark, EmptyMethodListGivesNoRecords) {
    const auto dir = scratch_dir("empty");
    const auto m = write_pairs(dir, 1, 32);
    EXPECT_TRUE(run_benchmark({m}, {}, {4}, dir / "out.tsv").empty());
    EXPECT_TRUE(parse_records(slurp(dir / "out.tsv")).empty());
}

TEST(RunBenchmark, IdenticalMethodsScoreIdentically) {
    const auto dir = scratch_dir("twice");
    const auto m = write_pairs(dir, 2, 32);
    const auto r = run_benchmark({m}, {"jbu", "jbu"}, {2, 4}, "");
    ASSERT_EQ(r.size(), 4u);
    EXPECT_EQ(r[0].rmse_255, r[2].rmse_255);
    EXPECT_EQ(r[1].rmse_255, r[3].rmse_255);
}

TEST(RunBenchmark, InvariantToManifestOrderAndWorkers) {
    const auto dir = scratch_dir("order");
    auto m = write_pairs(dir, 4, 32);
    const std::vector<std::string> methods{"bicubic", "guided_filter", "jbu"};
    const auto base = run_benchmark({m}, methods, {2, 4}, "");
    std::reverse(m.entries.begin(), m.entries.end());
    std::swap(m.entries[0], m.entries[2]);
    BenchmarkOptions opts;
    opts.workers = 3;
    const auto other = run_benchmark({m}, methods, {2, 4}, "", opts);
    ASSERT_EQ(base.size(), other.size());
    for (std::size_t i = 0; i < base.size(); ++i) EXPECT_EQ(base[i].rmse_255, other[i].rmse_255);
}

TEST(RunBenchmark, MissingCheckpointNamesThePath) {
    const auto dir = scratch_dir("missing");
    const auto m = write_pairs(dir, 1, 32);
    try {
        run_benchmark({m}, {"bicubic", "jcnp:" + (dir / "nope.ckpt").string()}, {4}, dir / "out.tsv");
        FAIL();
    } catch (const DataError& e) {
        EXPECT_NE(std::string(e.what()).find("nope.ckpt"), std::string::npos);
    }
    EXPECT_FALSE(fs::exists(dir / "out.tsv"));
}

TEST(RunBenchmark, IdentityNetworkScoresLikeBicubic) {
    const auto dir = scratch_dir("identity");
    const auto m = write_pairs(dir, 2, 48);
    JcnpModel<float> model(JcnpSpec::with_levels(1), 3);
    model.make_target_identity();
    save_checkpoint(model, 4, dir / "id.ckpt");
    const auto r = run_benchmark({m}, {"bicubic", "jcnp:" + (dir / "id.ckpt").string()}, {4}, "");
    ASSERT_EQ(r.size(), 2u);
    EXPECT_NEAR(r[1].rmse_255, r[0].rmse_255, 1e-4);
    EXPECT_EQ(r[1].param_count, model.network().parameter_count());
}

TEST(BenchmarkTable, FlagsTheLowestValuePerColumn) {
    const std::vector<BenchmarkRecord> recs{{"a", "m1", 4, 3.0, 0, 0}, {"a", "m2", 4, 2.0, 0, 5},
                                            {"a", "m1", 8, 1.0, 0, 0}, {"a", "m2", 8, 4.0, 0, 5}};
    const std::string t = format_benchmark_table(recs);
    EXPECT_NE(t.find("2.00*"), std::string::npos);
    EXPECT_NE(t.find("1.00*"), std::string::npos);
    EXPECT_EQ(t.find("3.00*"), std::string::npos);
    EXPECT_EQ(t.find("4.00*"), std::string::npos);
    EXPECT_EQ(parse_records(format_records(recs)), recs);
}

TEST(CostReport, StructuralColumns) {
    CostOptions opts;
    opts.measure_time = false;
    const auto rows = cost_report({0, 1, 2, 3, 4}, opts);
    ASSERT_EQ(rows.size(), 5u);
    EXPECT_EQ(rows[0].end_to_end_rf, 17);
    EXPECT_EQ(rows[1].pyramid_path_rf, 26);
    EXPECT_EQ(rows[2].pyramid_path_rf, 56);
    EXPECT_EQ(rows[3].pyramid_path_rf, 116);
    const double millions[] = {0.15, 0.42, 0.68, 0.95, 1.21};
    for (int n = 0; n < 5; ++n) EXPECT_DOUBLE_EQ(rows[static_cast<std::size_t>(n)].params_millions, millions[n]);
    const std::string text = format_cost_report(rows, opts);
    EXPECT_NE(text.find("0.15M"), std::string::npos);
    EXPECT_THROW(cost_report({-1}, opts), std::invalid_argument);
}

TEST(CostReport, TimesTrainingSteps) {
    CostOptions opts;
    opts.steps = 2;
    opts.size = 32;
    const auto rows = cost_report({0, 2}, opts);
    EXPECT_GT(rows[0].time_s, 0.0);
    EXPECT_GT(rows[1].time_s, rows[0].time_s);
}
