#pragma once

#include <vector>

#include "normalfield/autodiff.hpp"
#include "normalfield/math.hpp"
#include "normalfield/sh.hpp"

namespace nf {

/// Mirror of v about n: 2 (v . n) n - v. v points from the surface toward
/// the viewer, i.e. the negated ray direction.
inline Vec3 reflect(const Vec3& v, const Vec3& n) { return n * (2.0 * dot(v, n)) - v; }

/// Learnable environment radiance: softplus of a real SH expansion per channel.
struct EnvMapSH {
    int degree = 3;
    std::vector<double> coeffs;  // coefficient k, channel c at k * 3 + c

    EnvMapSH() : EnvMapSH(3) {}
    explicit EnvMapSH(int degree_);

    int coeff_count() const { return sh_coeff_count(degree); }
    ParamView view(std::uint32_t offset = 0) const { return ParamView{coeffs, offset, 3}; }
};

/// Pre-softplus SH expansion value per channel.
Vec3 env_logit(const EnvMapSH& env, const Vec3& dir);
Vec3 env_radiance(const EnvMapSH& env, const Vec3& dir);

struct MaterialSample {
    Vec3 diffuse;
    Vec3 tint;
};

MaterialSample material_from_raw(const Vec3& raw_diffuse, const Vec3& raw_tint);

/// Linear-space color: diffuse + tint * env(reflect(view, n_pred)).
Vec3 shade(const MaterialSample& material, const EnvMapSH& env, const Vec3& n_pred, const Vec3& view);

// ---------------------------------------------------------------------------
// Backend-generic forms used by the differentiable pipeline.
// ---------------------------------------------------------------------------

template <class Ops>
using Triple = std::array<typename Ops::Value, 3>;

template <class Ops>
Triple<Ops> reflect_about(Ops& ops, const Vec3& view, const Triple<Ops>& n) {
    auto vn = ops.add(ops.add(ops.mul(n[0], view.x), ops.mul(n[1], view.y)), ops.mul(n[2], view.z));
    auto twice = ops.mul(vn, 2.0);
    Triple<Ops> r;
    for (int a = 0; a < 3; ++a) r[a] = ops.add(ops.mul(n[a], twice), -view[a]);
    return r;
}

struct ShadeInputs {
    const ParamView* env = nullptr;
    int degree = 3;
};

/// Shades one sample from raw grid outputs. Returns the linear color.
template <class Ops>
Triple<Ops> shade_raw(Ops& ops, const ShadeInputs& in, const Triple<Ops>& n_pred, const Triple<Ops>& raw_diffuse,
                      const Triple<Ops>& raw_tint, const Vec3& view) {
    const Triple<Ops> dir = reflect_about(ops, view, n_pred);
    const Triple<Ops> logit = ops.sh_eval(*in.env, in.degree, dir);
    Triple<Ops> c;
    for (int a = 0; a < 3; ++a) {
        auto radiance = ops.softplus(logit[a]);
        auto spec = ops.mul(ops.sigmoid(raw_tint[a]), radiance);
        c[a] = ops.add(ops.sigmoid(raw_diffuse[a]), spec);
    }
    return c;
}

}  // namespace nf
