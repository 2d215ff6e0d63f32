#include <gtest/gtest.h>

#include <algorithm>
#include <sstream>

#include "normalfield/probe.hpp"
#include "normalfield/render.hpp"

using namespace nf;

namespace {

std::vector<ProbeRow> slab_probe(int samples) {
    const AnalyticField slab = AnalyticField::gaussian_slab({0, 0, 0}, {1, 0, 0}, 4.0, 0.1);
    const Ray ray{{-1, 0, 0}, {1, 0, 0}};
    return probe_rows(trace_analytic(slab, ray, sample_stratified(0.0, 2.0, samples)), {-1, 0, 0});
}

}  // namespace

TEST(Probe, SlabTransmittanceNormalsConsistent) {
    const auto rows = slab_probe(256);
    ASSERT_EQ(rows.size(), 256u);
    const ProbeSummary s = summarize_probe(rows);
    EXPECT_GT(s.significant, 0u);
    EXPECT_EQ(s.trans_consistent, s.significant);
    EXPECT_GE(s.density_sign_flips, 1);
}

TEST(Probe, DensityNormalFlipsAtPeak) {
    const auto rows = slab_probe(256);
    for (const ProbeRow& r : rows) {
        if (!r.n_density_dot || std::abs(r.t - 1.0) < 1e-9) continue;
        // Before the peak the density gradient points along the ray, after it against.
        EXPECT_NEAR(*r.n_density_dot, r.t < 1.0 ? 1.0 : -1.0, 1e-12) << r.t;
        EXPECT_NEAR(*r.angle_density_deg, r.t < 1.0 ? 0.0 : 180.0, 1e-4);
    }
}

TEST(Probe, RowsSatisfyTrackInvariants) {
    const auto rows = slab_probe(128);
    double sum = 0.0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (i) EXPECT_LE(rows[i].transmittance, rows[i - 1].transmittance);
        EXPECT_GE(rows[i].weight, 0.0);
        EXPECT_GE(rows[i].sigma_sharp, rows[i].sigma_smooth);
        sum += rows[i].weight;
    }
    const double final_t = rows.back().transmittance * (1.0 - rows.back().weight / rows.back().transmittance);
    EXPECT_NEAR(sum + final_t, 1.0, 1e-12);
}

TEST(Probe, EmptyFieldHasNoWeight) {
    const AnalyticField empty = AnalyticField::gaussian_slab({5, 0, 0}, {1, 0, 0}, 0.0, 0.1);
    const auto rows = probe_rows(trace_analytic(empty, {{-1, 0, 0}, {1, 0, 0}}, sample_stratified(0, 2, 32)),
                                 {-1, 0, 0});
    for (const ProbeRow& r : rows) {
        EXPECT_EQ(r.weight, 0.0);
        EXPECT_EQ(r.transmittance, 1.0);
    }
    EXPECT_EQ(summarize_probe(rows).significant, 0u);
}

TEST(Probe, CsvHeaderAndEmptyCells) {
    const auto rows = slab_probe(16);
    std::ostringstream out;
    write_probe_csv(out, rows);
    std::istringstream in(out.str());
    std::string header, first;
    std::getline(in, header);
    std::getline(in, first);
    EXPECT_EQ(header, "t,b,sigma_sharp,sigma_smooth,T,w,n_density_dot,n_trans_dot,angle_density_deg,angle_trans_deg");
    EXPECT_EQ(std::count(first.begin(), first.end(), ','), 9);
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream row(first + ",");
    while (std::getline(row, cell, ',')) cells.push_back(cell);
    ASSERT_EQ(cells.size(), 10u);
    // No transmittance normal exists before the first sample.
    EXPECT_TRUE(cells[7].empty());
    EXPECT_TRUE(cells[9].empty());
}
