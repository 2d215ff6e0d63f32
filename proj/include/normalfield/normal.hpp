#pragma once

#include <optional>
#include <span>
#include <vector>

#include "normalfield/math.hpp"

namespace nf {

/// Gradients below this norm yield no normal.
inline constexpr double kGradientEpsilon = 1e-12;
/// Softening term of the predicted-normal normalization.
inline constexpr double kPredictedNormalEpsilon = 1e-12;
/// Minimum accumulated weight of a normal-map pixel.
inline constexpr double kForegroundWeight = 0.5;

using MaybeNormal = std::optional<Vec3>;

struct NormalTrack {
    std::vector<MaybeNormal> density;
    std::vector<MaybeNormal> transmittance;
    std::vector<Vec3> predicted;
};

/// -g / |g|, or nothing for a vanishing gradient.
MaybeNormal density_gradient_normal(const Vec3& grad_sigma);

/// Normalized negative running sum of smooth-density gradients times spacing,
/// excluding the current sample. One pass over the track. Entry 0 and entries
/// with a vanishing sum are empty.
std::vector<MaybeNormal> transmittance_gradient_normals(std::span<const Vec3> grad_sigma_smooth,
                                                        std::span<const double> delta);

/// raw / sqrt(|raw|^2 + eps); finite and differentiable at the origin.
Vec3 predicted_normal(const Vec3& raw);

/// Weighted average of the defined normals, renormalized. Empty when the
/// weight carried by defined normals is below kForegroundWeight.
MaybeNormal composite_normal_map(std::span<const double> weights, std::span<const MaybeNormal> normals);
MaybeNormal composite_normal_map(std::span<const double> weights, std::span<const Vec3> normals);

}  // namespace nf
