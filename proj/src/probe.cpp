#include "normalfield/probe.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace nf {

namespace {

double degrees_between(double cosine) { return std::acos(std::clamp(cosine, -1.0, 1.0)) * 180.0 / kPi; }

}  // namespace

std::vector<ProbeRow> probe_rows(const RaySampleTrack& track, const Vec3& axis) {
    const Vec3 a = normalized(axis);
    const NormalTrack normals = estimate_normals(track);
    std::vector<ProbeRow> rows(track.size());
    for (std::size_t i = 0; i < track.size(); ++i) {
        ProbeRow& r = rows[i];
        r.t = track.t[i];
        r.b = track.b[i];
        r.sigma_sharp = track.sigma_sharp[i];
        r.sigma_smooth = track.sigma_smooth[i];
        r.transmittance = track.transmittance[i];
        r.weight = track.weights[i];
        if (normals.density[i]) {
            r.n_density_dot = dot(*normals.density[i], a);
            r.angle_density_deg = degrees_between(*r.n_density_dot);
        }
        if (normals.transmittance[i]) {
            r.n_trans_dot = dot(*normals.transmittance[i], a);
            r.angle_trans_deg = degrees_between(*r.n_trans_dot);
        }
    }
    return rows;
}

void write_probe_csv(std::ostream& out, const std::vector<ProbeRow>& rows) {
    out << "t,b,sigma_sharp,sigma_smooth,T,w,n_density_dot,n_trans_dot,angle_density_deg,angle_trans_deg\n";
    char buf[64];
    auto put = [&](double v) {
        std::snprintf(buf, sizeof buf, "%.12g", v);
        out << buf;
    };
    auto opt = [&](const std::optional<double>& v) {
        out << ",";
        if (v) put(*v);
    };
    for (const ProbeRow& r : rows) {
        put(r.t);
        for (double v : {r.b, r.sigma_sharp, r.sigma_smooth, r.transmittance, r.weight}) {
            out << ",";
            put(v);
        }
        opt(r.n_density_dot);
        opt(r.n_trans_dot);
        opt(r.angle_density_deg);
        opt(r.angle_trans_deg);
        out << "\n";
    }
}

ProbeSummary summarize_probe(const std::vector<ProbeRow>& rows) {
    ProbeSummary s;
    double w_max = 0.0;
    for (const ProbeRow& r : rows) w_max = std::max(w_max, r.weight);
    int last_sign = 0;
    for (const ProbeRow& r : rows) {
        if (w_max > 0.0 && r.weight > 0.01 * w_max) {
            ++s.significant;
            if (r.n_trans_dot && *r.n_trans_dot > 0.999) ++s.trans_consistent;
        }
        if (r.n_density_dot && *r.n_density_dot != 0.0) {
            const int sign = *r.n_density_dot > 0.0 ? 1 : -1;
            if (last_sign != 0 && sign != last_sign) ++s.density_sign_flips;
            last_sign = sign;
        }
    }
    return s;
}

}  // namespace nf
