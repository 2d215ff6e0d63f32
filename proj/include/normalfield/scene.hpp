#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "normalfield/appearance.hpp"
#include "normalfield/field.hpp"
#include "normalfield/image_io.hpp"
#include "normalfield/metrics.hpp"
#include "normalfield/model.hpp"
#include "normalfield/render.hpp"

namespace nf {

enum class SceneKind { gaussian_slab, matte_sphere, shiny_sphere, two_spheres };

SceneKind parse_scene_kind(const std::string& name);
std::string to_string(SceneKind kind);

struct Sphere {
    Vec3 center;
    double radius = 1.0;
};

/// Everything needed to re-render a synthetic scene; serialized into transforms.json.
struct SceneParams {
    SceneKind kind = SceneKind::shiny_sphere;
    std::vector<Sphere> spheres;
    Vec3 diffuse{0.05, 0.05, 0.05};  // linear, in (0, 1)
    Vec3 tint{0.75, 0.75, 0.75};     // linear, in (0, 1)
    Vec3 background{1, 1, 1};
    // Gaussian slab through the origin.
    Vec3 slab_normal{0, 0, 1};
    double slab_amplitude = 4.0;
    double slab_width = 0.1;
    Vec3 slab_color{0.8, 0.35, 0.2};
    // Scene box; learned fields live on a grid spanning it.
    Vec3 box_lo{-1.25, -1.25, -1.25};
    Vec3 box_hi{1.25, 1.25, 1.25};
    double fov_y = 0.0;  // 0: default
    double bounding_radius = 1.0;

    static SceneParams defaults(SceneKind kind);
};

/// Ground-truth environment: softplus of a sky gradient plus one cubic lobe,
/// projected exactly onto degree-3 SH.
EnvMapSH ground_truth_environment();

struct SyntheticScene {
    SceneParams params;
    EnvMapSH env_gt;
    std::vector<Camera> cameras;       // training views
    std::vector<Camera> test_cameras;  // held-out views
};

/// Field of view that makes a unit sphere at distance 3 fill 60% of the frame height.
double default_fov_y();

/// Cameras on the upper hemisphere (Fibonacci lattice) looking at the origin,
/// at the distance where the bounding sphere spans ~60% of the vertical field.
/// The seed rotates the lattice about the vertical axis.
SyntheticScene make_scene(SceneKind kind, const SceneParams& params, int n_views, int n_test_views,
                          int resolution, std::uint64_t seed);
SyntheticScene make_scene(SceneKind kind, int n_views, int n_test_views, int resolution, std::uint64_t seed);

struct GroundTruthView {
    Image rgb;     // sRGB in [0, 1]
    Image normal;  // unit on foreground, zero elsewhere
    Image alpha;   // 1 channel
    Image depth;   // 1 channel, 0 on background
};

GroundTruthView render_ground_truth(const SyntheticScene& scene, const Camera& camera);

/// Linear color and alpha of one ray through the slab by bin-center quadrature.
struct SlabResult {
    Vec3 color;
    double alpha = 0.0;
};
SlabResult slab_quadrature(const SceneParams& params, const Ray& ray, int samples);

/// Fields that reproduce the scene within the model family: a sharp density
/// from the scaled signed distance, analytic normals, constant materials and
/// the exact environment. Sphere scenes only.
SceneFields oracle_fields(const SyntheticScene& scene, const GridShape& shape, double sharpness_per_cell = 10.0);

// ---------------------------------------------------------------------------
// Dataset on disk
// ---------------------------------------------------------------------------

struct Frame {
    Camera camera;
    bool test = false;
    std::string rgb_path, normal_path, alpha_path;
    Image8 rgb;
    Image normal;
    Image alpha;
};

struct Dataset {
    SceneParams params;
    std::vector<Frame> frames;

    std::vector<const Frame*> split(bool test) const;
};

/// Writes transforms.json, rgb/####.png, normal/####.pfm, alpha/####.pfm.
void write_dataset(const SyntheticScene& scene, const std::filesystem::path& dir);
Dataset read_dataset(const std::filesystem::path& dir);

/// Renders every frame of one split and scores it against the stored ground
/// truth: PSNR, transmittance-normal MAE, and extra columns mae_density and
/// mae_pred.
MetricReport evaluate_split(const SceneFields& fields, const Dataset& dataset, bool test, int samples);

}  // namespace nf
