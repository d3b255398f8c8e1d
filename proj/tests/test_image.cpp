#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <random>
#include <string>

#include "jcnp/image.hpp"

namespace fs = std::filesystem;
using namespace jcnp;

namespace {

fs::path scratch_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("jcnp_test_image_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void spit(const fs::path& p, const std::string& bytes) {
    std::ofstream out(p, std::ios::binary);
    out << bytes;
}

Image ramp(int w, int h) {
    Image img = Image::zeros(w, h);
    for (int i = 0; i < w * h; ++i) img.values[static_cast<std::size_t>(i)] = i;
    return img;
}

}  // namespace

TEST(Pnm, Max8BitSampleReadsAsOne) {
    const auto dir = scratch_dir("max8");
    spit(dir / "a.pgm", std::string("P5\n2 1\n255\n") + char(255) + char(0));
    const Image img = read_image(dir / "a.pgm");
    EXPECT_EQ(img.width, 2);
    EXPECT_EQ(img.channels, 1);
    EXPECT_DOUBLE_EQ(img.values[0], 1.0);
    EXPECT_DOUBLE_EQ(img.values[1], 0.0);
}

TEST(Pnm, CanonicalBinaryPgmRoundTripsByteForByte) {
    const auto dir = scratch_dir("roundtrip");
    std::string bytes = "P5\n7 5\n255\n";
    std::mt19937 rng(3);
    for (int i = 0; i < 35; ++i) bytes.push_back(static_cast<char>(rng() & 0xff));
    spit(dir / "in.pgm", bytes);
    write_image(read_image(dir / "in.pgm"), dir / "out.pgm");
    EXPECT_EQ(slurp(dir / "out.pgm"), bytes);
}

TEST(Pnm, SixteenBitDepthRoundTrip) {
    const auto dir = scratch_dir("sixteen");
    Image img = Image::zeros(4, 3);
    for (std::size_t i = 0; i < img.values.size(); ++i) img.values[i] = (i * 4099 % 65536) / 65535.0;
    PnmWriteOptions opts;
    opts.maxval = 65535;
    write_image(img, dir / "d.pgm", opts);
    const Image back = read_image(dir / "d.pgm");
    for (std::size_t i = 0; i < img.values.size(); ++i) EXPECT_DOUBLE_EQ(back.values[i], img.values[i]);
    // Big-endian: first sample 0, second 4099 = 0x1003.
    const std::string raw = slurp(dir / "d.pgm");
    const std::size_t data = raw.size() - 24;
    EXPECT_EQ(static_cast<unsigned char>(raw[data + 2]), 0x10);
    EXPECT_EQ(static_cast<unsigned char>(raw[data + 3]), 0x03);
}

TEST(Pnm, AsciiAndColourVariants) {
    const auto dir = scratch_dir("ascii");
    spit(dir / "a.ppm", "P3\n# comment\n2 1\n10\n10 0 0  5 5 5\n");
    const Image img = read_image(dir / "a.ppm");
    EXPECT_EQ(img.channels, 3);
    EXPECT_DOUBLE_EQ(img.at(0, 0, 0), 1.0);
    EXPECT_DOUBLE_EQ(img.at(1, 0, 2), 0.5);

    PnmWriteOptions opts;
    opts.binary = false;
    write_image(img, dir / "b.ppm", opts);
    const Image back = read_image(dir / "b.ppm");
    EXPECT_EQ(back.channels, 3);
    EXPECT_DOUBLE_EQ(back.at(0, 0, 0), 1.0);
    EXPECT_NEAR(back.at(1, 0, 1), 0.5, 0.5 / 255);
}

TEST(Pnm, MalformedInputsNameThePath) {
    const auto dir = scratch_dir("bad");
    spit(dir / "magic.pgm", "P9\n1 1\n255\n\0");
    spit(dir / "maxval.pgm", "P5\n1 1\n70000\n\0\0");
    spit(dir / "short.pgm", "P5\n4 4\n255\nab");
    for (const char* name : {"magic.pgm", "maxval.pgm", "short.pgm", "missing.pgm"}) {
        try {
            read_image(dir / name);
            ADD_FAILURE() << name << " was accepted";
        } catch (const DataError& e) {
            EXPECT_NE(std::string(e.what()).find(name), std::string::npos) << e.what();
        }
    }
}

TEST(Luminance, Rec601Weights) {
    EXPECT_DOUBLE_EQ(to_luminance(Image::filled(1, 1, 1.0, 3)).values[0], 1.0);
    Image red = Image::zeros(1, 1, 3);
    red.values[0] = 1.0;
    EXPECT_DOUBLE_EQ(to_luminance(red).values[0], 0.299);
    EXPECT_NEAR(to_luminance(Image::filled(2, 2, 0.37, 3)).values[3], 0.37, 1e-15);
    const Image gray = ramp(3, 2);
    EXPECT_EQ(to_luminance(gray), gray);
}

TEST(Downsample, TopLeftSampleOfEachBlock) {
    const Image out = downsample_nearest(ramp(4, 4), 2);
    ASSERT_EQ(out.width, 2);
    EXPECT_EQ(out.values, (std::vector<double>{0, 2, 8, 10}));
    EXPECT_EQ(downsample_nearest(Image::filled(8, 4, 0.3), 4), Image::filled(2, 1, 0.3));
    EXPECT_EQ(downsample_nearest(ramp(3, 5), 1), ramp(3, 5));
    EXPECT_THROW(downsample_nearest(ramp(6, 4), 4), std::invalid_argument);
}

TEST(Bicubic, KernelValues) {
    EXPECT_DOUBLE_EQ(catmull_rom_weight(0.0), 1.0);
    EXPECT_DOUBLE_EQ(catmull_rom_weight(1.0), 0.0);
    EXPECT_DOUBLE_EQ(catmull_rom_weight(2.0), 0.0);
    EXPECT_DOUBLE_EQ(catmull_rom_weight(0.5), 0.5625);
    EXPECT_DOUBLE_EQ(catmull_rom_weight(-1.5), -0.0625);
    // Partition of unity at an arbitrary phase.
    const double f = 0.3;
    EXPECT_NEAR(catmull_rom_weight(1 + f) + catmull_rom_weight(f) + catmull_rom_weight(1 - f) +
                    catmull_rom_weight(2 - f),
                1.0, 1e-15);
}

TEST(Bicubic, ConstantStaysConstant) {
    for (int factor : {2, 4, 8, 16}) {
        const Image up = upsample_bicubic(Image::filled(3, 5, 0.42), factor);
        ASSERT_EQ(up.width, 3 * factor);
        ASSERT_EQ(up.height, 5 * factor);
        for (double v : up.values) EXPECT_NEAR(v, 0.42, 1e-12);
    }
}

TEST(Bicubic, LinearRampExactInInterior) {
    // Catmull-Rom reproduces affine functions wherever no tap is clamped.
    const int w = 10, h = 6, factor = 4;
    Image lr = Image::zeros(w, h);
    auto f = [](double u, double v) { return 0.1 + 0.05 * u + 0.03 * v; };
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) lr.at(x, y) = f(x, y);
    const Image up = upsample_bicubic(lr, factor);
    int checked = 0;
    for (int y = 0; y < h * factor; ++y) {
        for (int x = 0; x < w * factor; ++x) {
            const double u = (x + 0.5) / factor - 0.5, v = (y + 0.5) / factor - 0.5;
            if (std::floor(u) < 1 || std::floor(u) + 2 > w - 1) continue;
            if (std::floor(v) < 1 || std::floor(v) + 2 > h - 1) continue;
            EXPECT_NEAR(up.at(x, y), f(u, v), 1e-12);
            ++checked;
        }
    }
    EXPECT_GT(checked, 100);
}

TEST(Bicubic, FactorOneIsIdentityAndOutputIsClamped) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0, 1);
    Image img = Image::zeros(7, 4);
    for (double& v : img.values) v = u(rng);
    const Image same = upsample_bicubic(img, 1);
    for (std::size_t i = 0; i < img.values.size(); ++i) EXPECT_NEAR(same.values[i], img.values[i], 1e-15);

    // A step overshoots with a = -0.5; results must stay in [0, 1].
    Image step = Image::zeros(8, 1);
    for (int x = 4; x < 8; ++x) step.at(x, 0) = 1.0;
    for (double v : upsample_bicubic(step, 4).values) {
        EXPECT_GE(v, 0.0);
        EXPECT_LE(v, 1.0);
    }
}

TEST(Bicubic, NearestDownOfUpsampledConstantIsIdentity) {
    const Image c = Image::filled(4, 4, 0.8);
    EXPECT_EQ(downsample_nearest(upsample_bicubic(c, 4), 4).values.size(), c.values.size());
    for (double v : downsample_nearest(upsample_bicubic(c, 4), 4).values) EXPECT_NEAR(v, 0.8, 1e-12);
}
