#include "normalfield/model.hpp"

#include <random>

namespace nf {

SceneFields SceneFields::zeros(const GridShape& shape, int sh_degree, double empty_density) {
    SceneFields f;
    f.density = VoxelGrid("density", shape, 1, OutsideMode::empty, empty_density);
    f.normal = VoxelGrid("normal", shape, 3);
    f.diffuse = VoxelGrid("diffuse", shape, 3);
    f.tint = VoxelGrid("tint", shape, 3);
    f.env = EnvMapSH(sh_degree);
    return f;
}

SceneFields SceneFields::random_init(const GridShape& shape, int sh_degree, std::uint64_t seed) {
    SceneFields f = zeros(shape, sh_degree);
    std::mt19937_64 rng(seed);
    f.density.fill_uniform(-4.5, -3.5, rng);
    f.normal.fill_uniform(-0.1, 0.1, rng);
    f.diffuse.fill_uniform(-1.0, 1.0, rng);
    f.tint.fill_uniform(-1.0, 1.0, rng);
    return f;
}

ParamSet SceneFields::make_params() {
    ParamSet p;
    p.add("density", density.data());
    p.add("normal", normal.data());
    p.add("diffuse", diffuse.data());
    p.add("tint", tint.data());
    p.add("env_sh", env.coeffs);
    return p;
}

FieldViews make_views(const SceneFields& fields, const ParamSet* params) {
    auto offset = [&](const char* name) -> std::uint32_t { return params ? params->block(name).offset : 0u; };
    FieldViews v;
    v.shape = &fields.shape();
    v.density = ParamView{fields.density.data(), offset("density"), 1,
                          fields.density.outside_mode() == OutsideMode::empty, fields.density.empty_value()};
    v.normal = ParamView{fields.normal.data(), offset("normal"), 3};
    v.diffuse = ParamView{fields.diffuse.data(), offset("diffuse"), 3};
    v.tint = ParamView{fields.tint.data(), offset("tint"), 3};
    v.env = fields.env.view(offset("env_sh"));
    v.sh_degree = fields.env.degree;
    return v;
}

}  // namespace nf
