#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "normalfield/error.hpp"
#include "normalfield/metrics.hpp"

using namespace nf;

namespace {

Image filled(int w, int h, int c, float v) { return Image(w, h, c, v); }

Image normal_map(int w, int h, const Vec3& n) {
    Image img(w, h, 3);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int c = 0; c < 3; ++c) img.at(x, y, c) = static_cast<float>(n[c]);
    return img;
}

}  // namespace

TEST(Psnr, Definition) {
    const Image a = filled(8, 8, 3, 0.5f);
    EXPECT_EQ(psnr(a, a), kPsnrCap);
    EXPECT_EQ(kPsnrCap, 99.0);
    // float storage of 0.6 / 0.51 leaves a ~1e-6 dB discrepancy
    EXPECT_NEAR(psnr(filled(8, 8, 3, 0.6f), a), 20.0, 1e-5);
    EXPECT_NEAR(psnr(filled(8, 8, 3, 0.51f), a), 40.0, 1e-4);
    EXPECT_THROW(psnr(filled(8, 4, 3, 0.5f), a), InvalidInput);
}

TEST(Psnr, DecreasesWithNoise) {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<float> u(0.2f, 0.8f);
    Image base(32, 32, 3);
    for (float& v : base.data) v = u(rng);
    double last = kPsnrCap;
    for (double sigma : {0.01, 0.02, 0.05}) {
        std::mt19937_64 r2(2);
        std::normal_distribution<double> g(0.0, sigma);
        Image noisy = base;
        for (float& v : noisy.data) v = static_cast<float>(std::clamp(v + g(r2), 0.0, 1.0));
        const double p = psnr(noisy, base);
        EXPECT_LT(p, last);
        last = p;
    }
}

TEST(Mae, ExactPerpendicularAndOpposite) {
    const Image alpha = filled(4, 4, 1, 1.0f);
    const Image up = normal_map(4, 4, {0, 0, 1});
    EXPECT_NEAR(mae_degrees(up, up, alpha), 0.0, 1e-6);
    EXPECT_NEAR(mae_degrees(normal_map(4, 4, {1, 0, 0}), up, alpha), 90.0, 1e-9);
    Image half = up;
    for (int y = 0; y < 2; ++y)
        for (int x = 0; x < 4; ++x) half.at(x, y, 2) = -1.0f;
    EXPECT_NEAR(mae_degrees(half, up, alpha), 90.0, 1e-9);
}

TEST(Mae, MasksAndPenalties) {
    Image alpha = filled(4, 1, 1, 0.0f);
    alpha.at(0, 0, 0) = 1.0f;
    alpha.at(1, 0, 0) = 0.6f;
    const Image up = normal_map(4, 1, {0, 0, 1});
    Image pred = normal_map(4, 1, {1, 0, 0});  // wrong everywhere
    pred.at(0, 0, 0) = 0.0f;
    pred.at(0, 0, 2) = 1.0f;   // pixel 0 exact
    pred.at(1, 0, 0) = 0.0f;   // pixel 1 missing: penalized as 90
    EXPECT_NEAR(mae_degrees(pred, up, alpha), 45.0, 1e-9);
    EXPECT_THROW(mae_degrees(pred, up, filled(4, 1, 1, 0.0f)), InvalidInput);
    EXPECT_THROW(mae_degrees(pred, normal_map(3, 1, {0, 0, 1}), alpha), InvalidInput);
}

TEST(Mae, InvariantUnderGlobalRotation) {
    std::mt19937_64 rng(6);
    std::normal_distribution<double> g;
    Image a(16, 16, 3), b(16, 16, 3);
    std::vector<Vec3> na, nb;
    for (int i = 0; i < 256; ++i) {
        na.push_back(normalized({g(rng), g(rng), g(rng)}));
        nb.push_back(normalized(na.back() + Vec3{g(rng), g(rng), g(rng)} * 0.3));
    }
    const Image alpha = filled(16, 16, 1, 1.0f);
    auto fill = [](Image& img, const std::vector<Vec3>& ns, const Mat3& r) {
        for (int i = 0; i < 256; ++i) {
            const Vec3 v = r * ns[i];
            for (int c = 0; c < 3; ++c) img.at(i % 16, i / 16, c) = static_cast<float>(v[c]);
        }
    };
    fill(a, na, Mat3{});
    fill(b, nb, Mat3{});
    const double before = mae_degrees(a, b, alpha);
    // A rotation by a multiple of 90 degrees about z permutes components exactly.
    const Mat3 r = rotation_axis_angle({0, 0, 1}, kPi / 2);
    Mat3 exact;
    exact.m = {0, -1, 0, 1, 0, 0, 0, 0, 1};
    for (int k = 0; k < 9; ++k) ASSERT_NEAR(r.m[k], exact.m[k], 1e-15);
    fill(a, na, exact);
    fill(b, nb, exact);
    EXPECT_LT(std::abs(mae_degrees(a, b, alpha) - before), 1e-9);
    // A generic rotation moves values only by float rounding.
    const Mat3 q = rotation_axis_angle({1, 2, 3}, 0.7);
    fill(a, na, q);
    fill(b, nb, q);
    EXPECT_LT(std::abs(mae_degrees(a, b, alpha) - before), 1e-3);
}

TEST(RenderModes, ParseAndConvert) {
    EXPECT_EQ(parse_render_mode("normal-trans"), RenderMode::normal_trans);
    EXPECT_EQ(parse_render_mode("depth"), RenderMode::depth);
    EXPECT_THROW(parse_render_mode("normals"), InvalidInput);
    RenderedImage img;
    img.width = 2;
    img.height = 1;
    img.pixels.resize(2);
    img.pixels[0].normal_trans = Vec3{0, 0, -1};
    img.pixels[0].depth = 2.0;
    img.pixels[1].depth = 4.0;
    const Image n = to_image(img, RenderMode::normal_trans);
    EXPECT_EQ(n.at(0, 0, 2), -1.0f);
    EXPECT_EQ(n.at(1, 0, 2), 0.0f);
    const Image prev = normal_preview(n);
    EXPECT_EQ(prev.at(0, 0, 2), 0.0f);
    EXPECT_EQ(prev.at(0, 0, 0), 0.5f);
    EXPECT_EQ(prev.at(1, 0, 0), 0.0f);
    const Image d = to_image(img, RenderMode::depth);
    EXPECT_EQ(d.channels, 1);
    EXPECT_EQ(depth_preview(d).at(0, 0, 1), 0.5f);
}

TEST(MetricReport, CsvLayout) {
    MetricReport r;
    r.extra_columns = {"mae_density"};
    r.rows.push_back({"0000", 20.0, 10.0, 100, {30.0}});
    r.rows.push_back({"0001", 30.0, 20.0, 50, {50.0}});
    EXPECT_DOUBLE_EQ(r.mean_psnr(), 25.0);
    EXPECT_DOUBLE_EQ(r.mean_mae(), 15.0);
    EXPECT_DOUBLE_EQ(r.mean_extra()[0], 40.0);
    const auto path = std::filesystem::temp_directory_path() / "nf_metrics.csv";
    r.write_csv(path);
    std::ifstream in(path);
    std::string header, a, b, mean;
    std::getline(in, header);
    std::getline(in, a);
    std::getline(in, b);
    std::getline(in, mean);
    EXPECT_EQ(header, "view,psnr,mae_deg,foreground_pixels,mae_density");
    EXPECT_EQ(a.substr(0, 5), "0000,");
    EXPECT_EQ(mean.substr(0, 5), "mean,");
    std::filesystem::remove(path);
}
