#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "jcnp/config.hpp"
#include "jcnp/image.hpp"

using namespace jcnp;

namespace {

std::string error_of(const std::string& text) {
    try {
        parse_config_text(text, "c.cfg");
    } catch (const ConfigError& e) {
        return e.what();
    }
    return "";
}

}  // namespace

TEST(RunConfig, DeskDefaults) {
    const RunConfig c;
    EXPECT_EQ(c.levels, 2);
    EXPECT_EQ(c.factor, 4);
    EXPECT_EQ(c.steps, 20000);
    EXPECT_EQ(c.batch_size, 8);
    EXPECT_EQ(c.patch_size, 64);
    EXPECT_DOUBLE_EQ(c.base_lr, 1e-3);
    EXPECT_DOUBLE_EQ(c.decay_factor, 0.8);
    EXPECT_EQ(c.decay_interval, 10000);
    EXPECT_EQ(c.seed, 42u);
    EXPECT_EQ(c.optimizer, OptimizerKind::Adam);
    EXPECT_EQ(c.guidance_channels, 1);
    EXPECT_NO_THROW(c.validate());
}

TEST(ParseConfig, EmptyTextGivesDefaults) {
    EXPECT_EQ(parse_config_text(""), RunConfig{});
    EXPECT_EQ(parse_config_text("# only a comment\n\n   \n"), RunConfig{});
}

TEST(ParseConfig, KeysCommentsAndWhitespace) {
    const auto c = parse_config_text("levels = 1  # fewer levels\nbase_lr=5e-4\r\noptimizer=sgd\naugment=false\n");
    EXPECT_EQ(c.levels, 1);
    EXPECT_DOUBLE_EQ(c.base_lr, 5e-4);
    EXPECT_EQ(c.optimizer, OptimizerKind::Sgd);
    EXPECT_FALSE(c.augment);
    EXPECT_EQ(c.steps, 20000);
}

TEST(ParseConfig, ErrorsCarryLineNumbers) {
    EXPECT_EQ(error_of("\nlevels=-1\n"), "c.cfg:2: levels: -1 is outside 0..8");
    EXPECT_NE(error_of("steps=10\nwidth=3\n").find("c.cfg:2: unknown key 'width'"), std::string::npos);
    EXPECT_NE(error_of("steps\n").find("c.cfg:1: expected key=value"), std::string::npos);
    EXPECT_NE(error_of("steps=1e3\n").find("c.cfg:1: steps: '1e3' is not a valid number"), std::string::npos);
    EXPECT_NE(error_of("seed=1\nseed=2\n").find("c.cfg:2: duplicate key"), std::string::npos);
    EXPECT_NE(error_of("optimizer=rmsprop\n").find("c.cfg:1:"), std::string::npos);
}

TEST(ParseConfig, ValidationRules) {
    EXPECT_NE(error_of("factor=3").find("factor"), std::string::npos);
    EXPECT_NE(error_of("levels=3\npatch_size=36").find("c.cfg:2: patch_size"), std::string::npos);
    EXPECT_NE(error_of("decay_factor=1.5").find("decay_factor"), std::string::npos);
    EXPECT_NE(error_of("base_lr=0").find("base_lr"), std::string::npos);
    EXPECT_NE(error_of("guidance_channels=2").find("guidance_channels"), std::string::npos);
    EXPECT_NE(error_of("batch_size=0").find("batch_size"), std::string::npos);
}

TEST(ParseConfig, LinesRoundTrip) {
    RunConfig c = RunConfig::full();
    c.base_lr = 3.3e-4;
    c.optimizer = OptimizerKind::Sgd;
    c.seed = 18446744073709551615u;
    std::string text;
    for (const auto& l : c.to_lines()) text += l + "\n";
    EXPECT_EQ(parse_config_text(text), c);
    EXPECT_EQ(c.to_lines().size(), config_keys().size());
}

TEST(ParseConfig, FullPresetFile) {
    const auto path = std::filesystem::path(JCNP_SOURCE_DIR) / "configs" / "full.cfg";
    const auto c = parse_config(path);
    EXPECT_EQ(c, RunConfig::full());
    EXPECT_EQ(c.steps, 200000);
    EXPECT_EQ(c.batch_size, 36);
    EXPECT_EQ(c.patch_size, 128);
    EXPECT_EQ(parse_config(std::filesystem::path(JCNP_SOURCE_DIR) / "configs" / "desk.cfg"), RunConfig{});
}

TEST(ParseConfig, MissingFileNamesThePath) {
    try {
        parse_config("/nonexistent/x.cfg");
        FAIL();
    } catch (const DataError& e) {
        EXPECT_NE(std::string(e.what()).find("/nonexistent/x.cfg"), std::string::npos);
    }
}
