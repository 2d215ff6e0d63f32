#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "normalfield/math.hpp"

namespace nf {

// ---------------------------------------------------------------------------
// Dual density activation
// ---------------------------------------------------------------------------

/// Sharp (exp) and smooth (softplus) activations of one pre-activation value,
/// together with their derivatives with respect to it.
struct DualDensity {
    double sigma_sharp = 0.0;
    double sigma_smooth = 0.0;
    double d_sharp_db = 0.0;
    double d_smooth_db = 0.0;
};

/// Throws InvalidInput for non-finite b.
DualDensity dual_activate(double b);

// ---------------------------------------------------------------------------
// Dense voxel grids
// ---------------------------------------------------------------------------

/// Vertex-aligned grid geometry: vertex (i, j, k) sits at lo + (i, j, k) * cell_size().
struct GridShape {
    std::array<int, 3> res{2, 2, 2};
    Vec3 lo{-1, -1, -1};
    Vec3 hi{1, 1, 1};

    std::size_t vertex_count() const {
        return static_cast<std::size_t>(res[0]) * res[1] * res[2];
    }
    Vec3 cell_size() const {
        return {(hi.x - lo.x) / (res[0] - 1), (hi.y - lo.y) / (res[1] - 1), (hi.z - lo.z) / (res[2] - 1)};
    }
    std::size_t vertex_index(int i, int j, int k) const {
        return static_cast<std::size_t>(i) + static_cast<std::size_t>(res[0]) * (j + static_cast<std::size_t>(res[1]) * k);
    }
    Vec3 vertex_position(int i, int j, int k) const;
    bool contains(const Vec3& x) const;

    /// Throws InvalidInput if any resolution is below 2 or the box is degenerate.
    void validate() const;

    bool operator==(const GridShape&) const = default;
};

/// The eight vertices enclosing a point with their trilinear weights and the
/// world-space derivatives of those weights. Shared by every grid with the
/// same shape, so the search happens once per sample.
struct CellLookup {
    std::array<std::uint32_t, 8> vertex{};
    std::array<double, 8> weight{};
    std::array<Vec3, 8> dweight{};
    bool outside = false;
};

/// Positions outside the box are clamped onto it; derivatives along clamped
/// axes are zero.
CellLookup locate(const GridShape& shape, const Vec3& x);

enum class OutsideMode { clamp, empty };

struct GridSample {
    std::vector<double> values;
    std::vector<Vec3> gradients;
};

class VoxelGrid {
  public:
    VoxelGrid() = default;
    VoxelGrid(std::string name, GridShape shape, int channels, OutsideMode mode = OutsideMode::clamp,
              double empty_value = -10.0);

    const std::string& name() const { return name_; }
    const GridShape& shape() const { return shape_; }
    int channels() const { return channels_; }
    OutsideMode outside_mode() const { return mode_; }
    double empty_value() const { return empty_value_; }

    /// Channel-interleaved vertex data, x fastest.
    std::span<double> data() { return data_; }
    std::span<const double> data() const { return data_; }

    double& at(int i, int j, int k, int c) { return data_[shape_.vertex_index(i, j, k) * channels_ + c]; }
    double at(int i, int j, int k, int c) const {
        return data_[shape_.vertex_index(i, j, k) * channels_ + c];
    }

    /// Trilinear value and exact spatial gradient of every channel at x.
    GridSample query(const Vec3& x) const;

    /// Interpolates one channel using a precomputed lookup.
    double interpolate(const CellLookup& lk, int channel) const;
    Vec3 interpolate_gradient(const CellLookup& lk, int channel) const;

    void fill_uniform(double lo, double hi, std::mt19937_64& rng);

  private:
    std::string name_;
    GridShape shape_;
    int channels_ = 1;
    OutsideMode mode_ = OutsideMode::clamp;
    double empty_value_ = -10.0;
    std::vector<double> data_;
};

// ---------------------------------------------------------------------------
// Analytic density profiles
// ---------------------------------------------------------------------------

struct DensityProbe {
    double sigma = 0.0;
    Vec3 grad_sigma;
};

/// Closed-form density fields used as ground truth for normal-estimation experiments.
///
/// Every profile is expressed relative to `center`; evaluating along a ray
/// forms (origin - center) + t * direction before touching the profile, so a
/// common translation of field and ray with exactly representable offsets
/// leaves results bit-identical.
struct AnalyticField {
    enum class Kind { gaussian_slab, solid_sphere, double_bump };

    Kind kind = Kind::gaussian_slab;
    Vec3 center;
    Vec3 axis{1, 0, 0};  // slab normal, or half-separation of the two bumps
    double amplitude = 4.0;
    double width = 0.1;      // Gaussian standard deviation
    double radius = 0.5;     // solid_sphere
    double steepness = 40.0; // solid_sphere edge sharpness

    static AnalyticField gaussian_slab(const Vec3& point_on_plane, const Vec3& normal, double amplitude,
                                       double width);
    static AnalyticField solid_sphere(const Vec3& center, double radius, double amplitude, double steepness);
    static AnalyticField double_bump(const Vec3& center, const Vec3& half_separation, double amplitude,
                                     double width);

    DensityProbe at_local(const Vec3& local) const;
    DensityProbe query(const Vec3& x) const { return at_local(x - center); }
    DensityProbe query_ray(const Vec3& origin, const Vec3& direction, double t) const {
        return at_local((origin - center) + direction * t);
    }
};

inline DensityProbe analytic_query(const AnalyticField& field, const Vec3& x) { return field.query(x); }

/// Pre-activation value b = ln(sigma) and its gradient for an analytic density,
/// so that exp(b) reproduces the profile. Floors at b = -80.
struct Preactivation {
    double b = 0.0;
    Vec3 grad_b;
};
Preactivation preactivation_of(const DensityProbe& p);

AnalyticField::Kind parse_analytic_kind(const std::string& name);

}  // namespace nf
