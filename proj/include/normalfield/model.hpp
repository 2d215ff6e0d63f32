#pragma once

#include <cstdint>

#include "normalfield/appearance.hpp"
#include "normalfield/autodiff.hpp"
#include "normalfield/field.hpp"

namespace nf {

/// Everything the optimizer touches: pre-activation density, raw predicted
/// normals, raw diffuse and specular tint, and the SH environment.
struct SceneFields {
    VoxelGrid density;  // 1 channel, empty outside the box
    VoxelGrid normal;   // 3 channels
    VoxelGrid diffuse;  // 3 channels, sigmoid-activated
    VoxelGrid tint;     // 3 channels, sigmoid-activated
    EnvMapSH env;

    /// Zero-filled fields on one shared grid shape.
    static SceneFields zeros(const GridShape& shape, int sh_degree, double empty_density = -10.0);

    /// Training start: b ~ U[-4.5, -3.5], raw normals ~ U[-0.1, 0.1],
    /// material logits ~ U[-1, 1], environment zero.
    static SceneFields random_init(const GridShape& shape, int sh_degree, std::uint64_t seed);

    const GridShape& shape() const { return density.shape(); }

    /// Registers the five blocks in a fixed order: density, normal, diffuse, tint, env_sh.
    ParamSet make_params();
};

/// Parameter views for the pipeline. Offsets come from `params` when given.
struct FieldViews {
    const GridShape* shape = nullptr;
    ParamView density, normal, diffuse, tint, env;
    int sh_degree = 3;
};

FieldViews make_views(const SceneFields& fields, const ParamSet* params = nullptr);

}  // namespace nf
