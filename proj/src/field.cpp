#include "normalfield/field.hpp"

#include <cmath>

#include "normalfield/error.hpp"

namespace nf {

DualDensity dual_activate(double b) {
    if (!std::isfinite(b)) throw InvalidInput("dual_activate: non-finite pre-activation density");
    DualDensity d;
    d.sigma_sharp = std::exp(b);
    d.sigma_smooth = softplus(b);
    d.d_sharp_db = d.sigma_sharp;
    d.d_smooth_db = sigmoid(b);
    return d;
}

Vec3 GridShape::vertex_position(int i, int j, int k) const {
    const Vec3 h = cell_size();
    return {lo.x + i * h.x, lo.y + j * h.y, lo.z + k * h.z};
}

bool GridShape::contains(const Vec3& x) const {
    return x.x >= lo.x && x.x <= hi.x && x.y >= lo.y && x.y <= hi.y && x.z >= lo.z && x.z <= hi.z;
}

void GridShape::validate() const {
    for (int a = 0; a < 3; ++a) {
        if (res[a] < 2) throw InvalidInput("grid resolution must be at least 2 along every axis");
        if (!(hi[a] > lo[a])) throw InvalidInput("grid bounding box max must exceed min along every axis");
    }
}

CellLookup locate(const GridShape& shape, const Vec3& x) {
    CellLookup lk;
    lk.outside = !shape.contains(x);
    std::array<int, 3> base{};
    std::array<double, 3> frac{};
    std::array<double, 3> scale{};
    for (int a = 0; a < 3; ++a) {
        const double extent = shape.hi[a] - shape.lo[a];
        const int cells = shape.res[a] - 1;
        double g = (x[a] - shape.lo[a]) / extent * cells;
        scale[a] = cells / extent;
        if (g <= 0.0) {
            g = 0.0;
            if (x[a] < shape.lo[a]) scale[a] = 0.0;
        } else if (g >= cells) {
            g = cells;
            if (x[a] > shape.hi[a]) scale[a] = 0.0;
        }
        int i = static_cast<int>(std::floor(g));
        if (i > cells - 1) i = cells - 1;
        base[a] = i;
        frac[a] = g - i;
    }
    for (int c = 0; c < 8; ++c) {
        const int dx = c & 1, dy = (c >> 1) & 1, dz = (c >> 2) & 1;
        const double wx = dx ? frac[0] : 1.0 - frac[0];
        const double wy = dy ? frac[1] : 1.0 - frac[1];
        const double wz = dz ? frac[2] : 1.0 - frac[2];
        const double sx = dx ? scale[0] : -scale[0];
        const double sy = dy ? scale[1] : -scale[1];
        const double sz = dz ? scale[2] : -scale[2];
        lk.vertex[c] = static_cast<std::uint32_t>(shape.vertex_index(base[0] + dx, base[1] + dy, base[2] + dz));
        lk.weight[c] = wx * wy * wz;
        lk.dweight[c] = {sx * wy * wz, wx * sy * wz, wx * wy * sz};
    }
    return lk;
}

VoxelGrid::VoxelGrid(std::string name, GridShape shape, int channels, OutsideMode mode, double empty_value)
    : name_(std::move(name)), shape_(shape), channels_(channels), mode_(mode), empty_value_(empty_value) {
    shape_.validate();
    if (channels < 1) throw InvalidInput("grid needs at least one channel");
    data_.assign(shape_.vertex_count() * channels_, 0.0);
}

double VoxelGrid::interpolate(const CellLookup& lk, int channel) const {
    if (lk.outside && mode_ == OutsideMode::empty) return empty_value_;
    double v = 0.0;
    for (int c = 0; c < 8; ++c) v += lk.weight[c] * data_[lk.vertex[c] * channels_ + channel];
    return v;
}

Vec3 VoxelGrid::interpolate_gradient(const CellLookup& lk, int channel) const {
    if (lk.outside && mode_ == OutsideMode::empty) return {};
    Vec3 g;
    for (int c = 0; c < 8; ++c) g += lk.dweight[c] * data_[lk.vertex[c] * channels_ + channel];
    return g;
}

GridSample VoxelGrid::query(const Vec3& x) const {
    const CellLookup lk = locate(shape_, x);
    GridSample s;
    s.values.resize(channels_);
    s.gradients.resize(channels_);
    for (int ch = 0; ch < channels_; ++ch) {
        s.values[ch] = interpolate(lk, ch);
        s.gradients[ch] = interpolate_gradient(lk, ch);
    }
    return s;
}

void VoxelGrid::fill_uniform(double lo, double hi, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> dist(lo, hi);
    for (double& v : data_) v = dist(rng);
}

AnalyticField AnalyticField::gaussian_slab(const Vec3& point_on_plane, const Vec3& normal, double amplitude,
                                           double width) {
    AnalyticField f;
    f.kind = Kind::gaussian_slab;
    f.center = point_on_plane;
    f.axis = normalized(normal);
    f.amplitude = amplitude;
    f.width = width;
    return f;
}

AnalyticField AnalyticField::solid_sphere(const Vec3& center, double radius, double amplitude,
                                          double steepness) {
    AnalyticField f;
    f.kind = Kind::solid_sphere;
    f.center = center;
    f.radius = radius;
    f.amplitude = amplitude;
    f.steepness = steepness;
    return f;
}

AnalyticField AnalyticField::double_bump(const Vec3& center, const Vec3& half_separation, double amplitude,
                                         double width) {
    AnalyticField f;
    f.kind = Kind::double_bump;
    f.center = center;
    f.axis = half_separation;
    f.amplitude = amplitude;
    f.width = width;
    return f;
}

DensityProbe AnalyticField::at_local(const Vec3& local) const {
    DensityProbe p;
    switch (kind) {
        case Kind::gaussian_slab: {
            const double u = dot(axis, local);
            p.sigma = amplitude * std::exp(-0.5 * u * u / (width * width));
            p.grad_sigma = axis * (-p.sigma * u / (width * width));
            break;
        }
        case Kind::solid_sphere: {
            const double r = norm(local);
            const double s = sigmoid(steepness * (radius - r));
            p.sigma = amplitude * s;
            if (r > 0.0) p.grad_sigma = local * (-amplitude * steepness * s * (1.0 - s) / r);
            break;
        }
        case Kind::double_bump: {
            const double inv = 1.0 / (width * width);
            for (const Vec3& q : {local - axis, local + axis}) {
                const double e = amplitude * std::exp(-0.5 * dot(q, q) * inv);
                p.sigma += e;
                p.grad_sigma += q * (-e * inv);
            }
            break;
        }
    }
    return p;
}

Preactivation preactivation_of(const DensityProbe& p) {
    constexpr double kFloor = -80.0;
    Preactivation pre;
    if (p.sigma > std::exp(kFloor)) {
        pre.b = std::log(p.sigma);
        pre.grad_b = p.grad_sigma / p.sigma;
    } else {
        pre.b = kFloor;
    }
    return pre;
}

AnalyticField::Kind parse_analytic_kind(const std::string& name) {
    if (name == "gaussian_slab") return AnalyticField::Kind::gaussian_slab;
    if (name == "solid_sphere") return AnalyticField::Kind::solid_sphere;
    if (name == "double_bump") return AnalyticField::Kind::double_bump;
    throw InvalidInput("unknown analytic field kind '" + name + "'");
}

}  // namespace nf
