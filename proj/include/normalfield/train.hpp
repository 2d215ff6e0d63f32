#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "normalfield/autodiff.hpp"
#include "normalfield/error.hpp"
#include "normalfield/image_io.hpp"
#include "normalfield/model.hpp"
#include "normalfield/pipeline.hpp"
#include "normalfield/render.hpp"
#include "normalfield/scene.hpp"

namespace nf {

// ---------------------------------------------------------------------------
// Losses
// ---------------------------------------------------------------------------

/// Squared error summed over the three channels of one ray.
template <class Ops>
typename Ops::Value color_loss(Ops& ops, const Triple<Ops>& pred, const Vec3& target) {
    typename Ops::Value sum{};
    for (int a = 0; a < 3; ++a) {
        const auto d = ops.add(pred[a], -target[a]);
        const auto sq = ops.mul(d, d);
        sum = a == 0 ? sq : ops.add(sum, sq);
    }
    return sum;
}

template <class Ops>
typename Ops::Value squared_distance(Ops& ops, const Triple<Ops>& a, const Triple<Ops>& b) {
    typename Ops::Value sum{};
    for (int i = 0; i < 3; ++i) {
        const auto d = ops.sub(a[i], b[i]);
        const auto sq = ops.mul(d, d);
        sum = i == 0 ? sq : ops.add(sum, sq);
    }
    return sum;
}

/// lambda * sum w |n_p - n_t|^2 + (1 - lambda) * sum sg(w) |n_p - sg(n_t)|^2
/// over samples whose target normal is defined. The two sums have equal
/// values; only the paths gradients may take differ. Returns nothing when no
/// target is defined.
template <class Ops>
std::optional<typename Ops::Value> predicted_normal_loss(Ops& ops, std::span<const typename Ops::Value> weights,
                                                         std::span<const Triple<Ops>> n_pred,
                                                         std::span<const std::optional<Triple<Ops>>> n_target,
                                                         double lambda_n) {
    using Value = typename Ops::Value;
    if (!(lambda_n >= 0.0 && lambda_n <= 1.0)) throw InvalidInput("predicted_normal_loss: lambda_n must lie in [0, 1]");
    if (n_pred.size() < weights.size() || n_target.size() < weights.size())
        throw InvalidInput("predicted_normal_loss: sample arrays differ in length");
    Value full{}, detached{};
    bool any = false;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        if (!n_target[i]) continue;
        const Triple<Ops>& target = *n_target[i];
        Triple<Ops> target_sg;
        for (int a = 0; a < 3; ++a) target_sg[a] = ops.stop_gradient(target[a]);
        const Value f = ops.mul(weights[i], squared_distance(ops, n_pred[i], target));
        const Value d = ops.mul(ops.stop_gradient(weights[i]), squared_distance(ops, n_pred[i], target_sg));
        full = any ? ops.add(full, f) : f;
        detached = any ? ops.add(detached, d) : d;
        any = true;
    }
    if (!any) return std::nullopt;
    return ops.add(ops.mul(full, lambda_n), ops.mul(detached, 1.0 - lambda_n));
}

/// Plain-value convenience form.
double predicted_normal_loss(std::span<const double> weights, std::span<const Vec3> n_pred,
                             std::span<const MaybeNormal> n_target, double lambda_n);

// ---------------------------------------------------------------------------
// Schedules and optimizer
// ---------------------------------------------------------------------------

struct LogSchedule {
    double start = 1.0;
    double end = 1.0;
    int steps = 1;
};

/// exp(lerp(ln start, ln end, min(k, total) / total)).
double log_decay(long k, double start, double end, long total);
inline double log_decay(long k, const LogSchedule& s) { return log_decay(k, s.start, s.end, s.steps); }

struct DecayRange {
    double start = 1.0;
    double end = 1.0;
};

struct AdamConfig {
    double beta1 = 0.9;
    double beta2 = 0.99;
    double eps = 1e-15;
};

/// One bias-corrected Adam update of a block at 1-based step k, then zeroes
/// the block's adjoints.
void adam_step(ParamBlock& block, double lr, const AdamConfig& adam, long k);

/// weight * mean over axis-neighbour vertex pairs of the squared channel
/// difference. Adds its gradient into `adjoints` and returns the value.
double add_smoothness(std::span<const double> values, std::span<double> adjoints, const GridShape& shape,
                      int channels, double weight);

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

enum class Supervision { transmittance, density, none };

Supervision parse_supervision(const std::string& name);
std::string to_string(Supervision s);

struct TrainConfig {
    int iterations = 2000;
    int rays_per_batch = 4096;
    int samples_per_ray = 128;
    // Learning rates decay over the whole run.
    DecayRange lr_grid{1e-1, 1e-3};
    DecayRange lr_env{5e-3, 1e-4};
    LogSchedule lambda_n{0.01, 1.0, 800};
    LogSchedule normal_weight{6e-2, 3e-3, 800};
    AdamConfig adam;
    std::uint64_t seed = 0;
    Vec3 background{1, 1, 1};
    Supervision supervision = Supervision::transmittance;
    int grid_resolution = 48;
    int sh_degree = 3;
    double grid_l2 = 0.0;
    double tv_density = 0.1;
    double tv_appearance = 0.1;  // normal, diffuse and tint grids
    int probe_every = 100;
    int chunk_rays = 32;
    double min_transmittance = 1e-4;

    /// lambda_n(k); the schedule is a warmup, so k beyond its length holds the end value.
    double lambda_at(long k) const { return log_decay(k, lambda_n); }
    double normal_weight_at(long k) const { return log_decay(k, normal_weight); }
    double lr_grid_at(long k) const { return log_decay(k, lr_grid.start, lr_grid.end, iterations); }
    double lr_env_at(long k) const { return log_decay(k, lr_env.start, lr_env.end, iterations); }
    void validate() const;
};

/// Applies `key = value` lines (TOML subset: numbers, quoted strings,
/// booleans, flat arrays, `#` comments). Unknown keys are usage errors.
void apply_config_text(TrainConfig& cfg, const std::string& text, const std::string& source);
void apply_config_file(TrainConfig& cfg, const std::filesystem::path& path);
/// A single override such as "rays_per_batch=1024".
void apply_config_override(TrainConfig& cfg, const std::string& assignment);
/// Every field in the same syntax, so the output parses back to the same config.
std::string to_config_text(const TrainConfig& cfg);

// ---------------------------------------------------------------------------
// Batch evaluation
// ---------------------------------------------------------------------------

struct RayTarget {
    Ray ray;
    Vec3 color;  // sRGB target
    std::uint64_t pixel = 0;
};

struct LossSettings {
    double lambda_n = 1.0;
    double normal_weight = 0.0;
    Supervision supervision = Supervision::transmittance;
    RenderConfig render;  // samples, background, jitter seed and iteration
    int chunk_rays = 32;
    double min_transmittance = 0.0;
};

struct BatchLoss {
    double color = 0.0;   // mean over rays
    double normal = 0.0;  // mean over rays, unweighted
    double total = 0.0;
};

/// Mean color loss plus weighted mean normal loss over the rays. When
/// `adjoints` is non-empty the gradient with respect to every parameter of
/// `params` is added into it. Chunks run in parallel; their contributions are
/// merged in chunk order, so results do not depend on the thread count.
BatchLoss evaluate_batch(const SceneFields& fields, const ParamSet& params, std::span<const RayTarget> rays,
                         const LossSettings& settings, std::span<double> adjoints);

// ---------------------------------------------------------------------------
// Training loop
// ---------------------------------------------------------------------------

struct TrainView {
    Camera camera;
    Image target;  // sRGB
};

struct TrainData {
    GridShape box;  // grid resolution filled from the config
    std::vector<TrainView> views;
    std::optional<TrainView> probe;
};

TrainData train_data_from(const Dataset& dataset);

struct LogRow {
    long iter = 0;
    double loss_c = 0.0;
    double loss_n = 0.0;
    double lambda_n = 0.0;
    double lr_grid = 0.0;
    std::optional<double> psnr_probe;
};

class Trainer {
  public:
    Trainer(TrainData data, TrainConfig cfg);
    Trainer(const Trainer&) = delete;
    Trainer& operator=(const Trainer&) = delete;

    /// Runs one iteration; throws NumericalError when the loss is not finite.
    LogRow step();
    long iteration() const { return iter_; }
    bool done() const { return iter_ >= cfg_.iterations; }

    const SceneFields& fields() const { return fields_; }
    const TrainConfig& config() const { return cfg_; }
    const std::vector<LogRow>& log() const { return log_; }

  private:
    std::vector<RayTarget> sample_batch();
    double probe_psnr() const;

    TrainData data_;
    TrainConfig cfg_;
    SceneFields fields_;
    ParamSet params_;
    long iter_ = 0;
    std::vector<LogRow> log_;
};

/// Runs every iteration; `on_row` sees each log row as it is produced.
SceneFields train(const TrainData& data, const TrainConfig& cfg, std::vector<LogRow>* log = nullptr,
                  const std::function<void(const LogRow&)>& on_row = {});

void write_log_csv(const std::filesystem::path& path, std::span<const LogRow> rows);

}  // namespace nf
