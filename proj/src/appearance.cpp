#include "normalfield/appearance.hpp"

#include "normalfield/error.hpp"

namespace nf {

EnvMapSH::EnvMapSH(int degree_) : degree(degree_) {
    if (degree < 0 || degree > kMaxShDegree) throw InvalidInput("environment SH degree must be in [0, 3]");
    coeffs.assign(static_cast<std::size_t>(coeff_count()) * 3, 0.0);
}

Vec3 env_logit(const EnvMapSH& env, const Vec3& dir) {
    const ShBasis basis = sh_basis(env.degree, dir);
    Vec3 s;
    for (int k = 0; k < env.coeff_count(); ++k)
        for (int c = 0; c < 3; ++c) s[c] += env.coeffs[k * 3 + c] * basis.value[k];
    return s;
}

Vec3 env_radiance(const EnvMapSH& env, const Vec3& dir) {
    const Vec3 s = env_logit(env, dir);
    return {softplus(s.x), softplus(s.y), softplus(s.z)};
}

MaterialSample material_from_raw(const Vec3& raw_diffuse, const Vec3& raw_tint) {
    MaterialSample m;
    for (int c = 0; c < 3; ++c) {
        m.diffuse[c] = sigmoid(raw_diffuse[c]);
        m.tint[c] = sigmoid(raw_tint[c]);
    }
    return m;
}

Vec3 shade(const MaterialSample& material, const EnvMapSH& env, const Vec3& n_pred, const Vec3& view) {
    return material.diffuse + mul(material.tint, env_radiance(env, reflect(view, n_pred)));
}

}  // namespace nf
