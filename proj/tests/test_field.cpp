#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "normalfield/error.hpp"
#include "normalfield/field.hpp"

using namespace nf;

TEST(DualActivate, KnownValues) {
    const DualDensity d5 = dual_activate(5.0);
    EXPECT_NEAR(d5.sigma_sharp, 148.41316, 1e-5);
    EXPECT_NEAR(d5.sigma_smooth, 5.0067153, 1e-7);
    const DualDensity d0 = dual_activate(0.0);
    EXPECT_DOUBLE_EQ(d0.sigma_sharp, 1.0);
    EXPECT_NEAR(d0.sigma_smooth, std::log(2.0), 1e-15);
    EXPECT_NEAR(d0.d_smooth_db, 0.5, 1e-15);
    EXPECT_NEAR(dual_activate(2.0).sigma_smooth, 2.1269280, 1e-7);
    EXPECT_NEAR(dual_activate(2.0).d_smooth_db, 0.8807971, 1e-7);
}

TEST(DualActivate, SharpDominatesSmooth) {
    // exp(b) > log(1 + exp(b)) everywhere; in double precision the two
    // coincide once exp(b) is below ~1e-16, so the strict check stops there.
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-80.0, 30.0);
    for (int i = 0; i < 10000; ++i) {
        const double b = u(rng);
        const DualDensity d = dual_activate(b);
        EXPECT_GE(d.sigma_sharp, d.sigma_smooth);
        if (b > -30.0) EXPECT_GT(d.sigma_sharp, d.sigma_smooth) << b;
        EXPECT_GT(d.sigma_smooth, 0.0);
        EXPECT_GT(d.d_smooth_db, 0.0);
        EXPECT_LT(d.d_smooth_db, 1.0 + 1e-15);
    }
}

TEST(DualActivate, DerivativesMatchCentralDifferences) {
    for (double b : {-6.0, -1.0, 0.0, 0.7, 4.0}) {
        const double h = 1e-6;
        const DualDensity d = dual_activate(b);
        const DualDensity p = dual_activate(b + h), m = dual_activate(b - h);
        EXPECT_NEAR(d.d_sharp_db, (p.sigma_sharp - m.sigma_sharp) / (2 * h), 1e-6 * std::max(1.0, d.sigma_sharp));
        EXPECT_NEAR(d.d_smooth_db, (p.sigma_smooth - m.sigma_smooth) / (2 * h), 1e-8);
    }
}

TEST(DualActivate, RejectsNonFinite) {
    EXPECT_THROW(dual_activate(std::nan("")), InvalidInput);
    EXPECT_THROW(dual_activate(INFINITY), InvalidInput);
}

TEST(VoxelGrid, TrilinearReproducesAffineFunctions) {
    GridShape shape{{5, 4, 6}, {-1, -0.5, 0}, {1, 1.5, 2}};
    VoxelGrid grid("g", shape, 2);
    auto f0 = [](const Vec3& p) { return 0.3 + 2 * p.x - p.y + 0.5 * p.z; };
    auto f1 = [](const Vec3& p) { return -1.0 + p.z; };
    for (int k = 0; k < 6; ++k)
        for (int j = 0; j < 4; ++j)
            for (int i = 0; i < 5; ++i) {
                const Vec3 p = shape.vertex_position(i, j, k);
                grid.at(i, j, k, 0) = f0(p);
                grid.at(i, j, k, 1) = f1(p);
            }
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(0, 1);
    for (int n = 0; n < 200; ++n) {
        const Vec3 x{-1 + 2 * u(rng), -0.5 + 2 * u(rng), 2 * u(rng)};
        const GridSample s = grid.query(x);
        EXPECT_NEAR(s.values[0], f0(x), 1e-12);
        EXPECT_NEAR(s.values[1], f1(x), 1e-12);
        EXPECT_NEAR(s.gradients[0].x, 2.0, 1e-11);
        EXPECT_NEAR(s.gradients[0].y, -1.0, 1e-11);
        EXPECT_NEAR(s.gradients[0].z, 0.5, 1e-11);
        EXPECT_NEAR(s.gradients[1].z, 1.0, 1e-11);
    }
}

TEST(VoxelGrid, GradientMatchesCentralDifferencesInsideCells) {
    GridShape shape{{4, 4, 4}, {0, 0, 0}, {1, 1, 1}};
    VoxelGrid grid("g", shape, 1);
    std::mt19937_64 rng(9);
    grid.fill_uniform(-1, 1, rng);
    const Vec3 x{0.41, 0.52, 0.27};
    const double h = 1e-6;
    const Vec3 g = grid.query(x).gradients[0];
    for (int a = 0; a < 3; ++a) {
        Vec3 p = x, m = x;
        p[a] += h;
        m[a] -= h;
        EXPECT_NEAR(g[a], (grid.query(p).values[0] - grid.query(m).values[0]) / (2 * h), 1e-7);
    }
}

TEST(VoxelGrid, EmptyModeOutsideBox) {
    GridShape shape{{3, 3, 3}, {0, 0, 0}, {1, 1, 1}};
    VoxelGrid grid("density", shape, 1, OutsideMode::empty, -10.0);
    for (double& v : grid.data()) v = 2.0;
    EXPECT_DOUBLE_EQ(grid.query({0.5, 0.5, 0.5}).values[0], 2.0);
    EXPECT_DOUBLE_EQ(grid.query({1.5, 0.5, 0.5}).values[0], -10.0);
}

TEST(GridShape, ValidateRejectsDegenerate) {
    GridShape bad{{1, 4, 4}, {0, 0, 0}, {1, 1, 1}};
    EXPECT_THROW(bad.validate(), InvalidInput);
    GridShape flat{{4, 4, 4}, {0, 0, 0}, {1, 0, 1}};
    EXPECT_THROW(flat.validate(), InvalidInput);
}

TEST(AnalyticField, GaussianSlabValueAndGradient) {
    const AnalyticField slab = AnalyticField::gaussian_slab({0, 0, 0}, {1, 0, 0}, 4.0, 0.1);
    const DensityProbe p = slab.query({0.1, 0.3, -0.2});
    EXPECT_NEAR(p.sigma, 4.0 * std::exp(-0.5), 1e-12);  // 2.4261
    EXPECT_NEAR(p.sigma, 2.4261, 1e-4);
    EXPECT_NEAR(p.grad_sigma.x, -24.261, 1e-3);
    EXPECT_NEAR(p.grad_sigma.y, 0.0, 1e-15);
}

TEST(AnalyticField, TranslationOfFieldAndRayIsExact) {
    const AnalyticField a = AnalyticField::gaussian_slab({0, 0, 0}, {1, 0, 0}, 4.0, 0.1);
    const AnalyticField b = AnalyticField::gaussian_slab({8, -4, 2}, {1, 0, 0}, 4.0, 0.1);
    for (double t : {0.0, 0.25, 0.5, 0.8125}) {
        const DensityProbe pa = a.query_ray({-0.5, 0, 0}, {1, 0, 0}, t);
        const DensityProbe pb = b.query_ray({7.5, -4, 2}, {1, 0, 0}, t);
        EXPECT_EQ(pa.sigma, pb.sigma);
        EXPECT_EQ(pa.grad_sigma, pb.grad_sigma);
    }
}
