#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "normalfield/field.hpp"
#include "normalfield/math.hpp"
#include "normalfield/model.hpp"
#include "normalfield/normal.hpp"

namespace nf {

// ---------------------------------------------------------------------------
// Cameras and rays
// ---------------------------------------------------------------------------

struct Ray {
    Vec3 origin;
    Vec3 direction;  // unit
};

/// Pinhole camera. Columns of `rotation` are the camera x (right), y (up) and
/// z (backward) axes in world space; the camera looks along -z, image rows
/// grow downward.
struct Camera {
    Mat3 rotation;
    Vec3 position;
    double fov_y = 0.8;
    int width = 64;
    int height = 64;

    /// Throws InvalidInput unless the rotation is orthonormal to 1e-8 and the
    /// intrinsics are sane.
    void validate() const;
    double focal() const;
    Vec3 forward() const { return -rotation.col(2); }

    static Camera look_at(const Vec3& position, const Vec3& target, const Vec3& up, double fov_y, int width,
                          int height);
};

/// Ray through pixel (px, py) at in-pixel offset `jitter` in [0, 1)^2.
Ray generate_ray(const Camera& camera, int px, int py, double jitter_x = 0.5, double jitter_y = 0.5);

/// Parametric entry and exit of a ray with an axis-aligned box, if any.
std::optional<std::pair<double, double>> intersect_box(const Ray& ray, const Vec3& lo, const Vec3& hi);

// ---------------------------------------------------------------------------
// Sampling and quadrature
// ---------------------------------------------------------------------------

struct Samples {
    std::vector<double> t;
    std::vector<double> delta;
};

/// One sample per equal bin of [near, far]; uniform within the bin when an
/// rng is supplied, bin centers otherwise. The last spacing is the bin width.
Samples sample_stratified(double near, double far, int n, std::mt19937_64* rng = nullptr);

struct CompositeResult {
    Vec3 color;  // linear
    double alpha = 0.0;
    std::vector<double> transmittance;  // T_i before sample i
    std::vector<double> weights;
    double final_transmittance = 1.0;
};

/// Quadrature of the volume-rendering integral for per-sample densities and
/// linear colors, with the background seen through the remaining
/// transmittance. Non-finite density throws NumericalError naming the index.
CompositeResult composite(std::span<const double> sigma, std::span<const double> delta,
                          std::span<const Vec3> colors, const Vec3& background);

double srgb_gamma(double linear);
/// Clamps to [0, 1] and applies the sRGB transfer curve per channel.
Vec3 tone_map(const Vec3& linear);

// ---------------------------------------------------------------------------
// Full pixel pipeline
// ---------------------------------------------------------------------------

struct RenderConfig {
    int samples = 128;
    Vec3 background{1, 1, 1};
    bool deterministic = false;  // bin-center samples
    std::uint64_t seed = 0;
    std::uint64_t iteration = 0;
};

/// Per-sample quantities along one ray.
struct RaySampleTrack {
    std::vector<double> t, delta;
    std::vector<Vec3> position;
    std::vector<double> b;
    std::vector<Vec3> grad_b;
    std::vector<double> sigma_sharp, sigma_smooth;
    std::vector<Vec3> grad_sigma_smooth;
    std::vector<double> transmittance;  // before each sample
    std::vector<double> weights;
    double final_transmittance = 1.0;

    std::size_t size() const { return t.size(); }
};

struct RenderOutput {
    Vec3 color;  // sRGB
    double alpha = 0.0;
    double depth = 0.0;
    MaybeNormal normal_density;
    MaybeNormal normal_trans;
    MaybeNormal normal_pred;
};

/// Densities and weights for a ray through the learned fields at given samples.
RaySampleTrack trace_track(const SceneFields& fields, const Ray& ray, const Samples& samples);

/// Densities and weights for a ray through an analytic profile. The profile
/// value is treated as the sharp density exp(b).
RaySampleTrack trace_analytic(const AnalyticField& field, const Ray& ray, const Samples& samples);

/// Normal estimators along a track (predicted normals are left empty).
NormalTrack estimate_normals(const RaySampleTrack& track);

/// Per-ray RNG seed, independent of evaluation order.
std::uint64_t ray_seed(std::uint64_t seed, std::uint64_t pixel, std::uint64_t iteration);

RenderOutput render_ray(const SceneFields& fields, const Ray& ray, const RenderConfig& config,
                        std::uint64_t pixel_index);
RenderOutput render_pixel(const SceneFields& fields, const Camera& camera, int px, int py,
                          const RenderConfig& config);

/// Samples for a ray clipped to the field box, or nothing when it misses.
std::optional<Samples> samples_for_ray(const GridShape& shape, const Ray& ray, const RenderConfig& config,
                                       std::uint64_t pixel_index);

struct RenderedImage {
    int width = 0, height = 0;
    std::vector<RenderOutput> pixels;  // row-major, top row first
};

/// Renders every pixel, fanned out over worker threads.
RenderedImage render_image(const SceneFields& fields, const Camera& camera, const RenderConfig& config);

}  // namespace nf
