#pragma once

#include <optional>
#include <ostream>
#include <vector>

#include "normalfield/render.hpp"

namespace nf {

/// One sample of a probed ray, with both normal estimates compared against a
/// reference axis. Missing normals leave the comparison columns empty.
struct ProbeRow {
    double t = 0.0;
    double b = 0.0;
    double sigma_sharp = 0.0;
    double sigma_smooth = 0.0;
    double transmittance = 1.0;
    double weight = 0.0;
    std::optional<double> n_density_dot, n_trans_dot;
    std::optional<double> angle_density_deg, angle_trans_deg;
};

std::vector<ProbeRow> probe_rows(const RaySampleTrack& track, const Vec3& axis);

/// Header `t,b,sigma_sharp,sigma_smooth,T,w,n_density_dot,n_trans_dot,angle_density_deg,angle_trans_deg`.
void write_probe_csv(std::ostream& out, const std::vector<ProbeRow>& rows);

struct ProbeSummary {
    std::size_t significant = 0;      // samples with w above 1% of the maximum
    std::size_t trans_consistent = 0; // of those, n_trans . axis > 0.999
    int density_sign_flips = 0;       // sign changes of n_density . axis along the ray
};

ProbeSummary summarize_probe(const std::vector<ProbeRow>& rows);

}  // namespace nf
