#pragma once

#include <cmath>
#include <optional>
#include <vector>

#include "normalfield/appearance.hpp"
#include "normalfield/model.hpp"
#include "normalfield/normal.hpp"
#include "normalfield/render.hpp"

namespace nf {

/// Which per-sample normal estimates the caller needs as differentiable values.
struct TraceRequest {
    bool transmittance = true;
    bool density = false;
    bool predicted = true;
    // Stop marching once transmittance falls below this; 0 marches every sample.
    double min_transmittance = 0.0;
};

template <class Ops>
struct TracedRay {
    using Value = typename Ops::Value;

    std::vector<Value> weights;
    std::vector<Triple<Ops>> n_pred;
    std::vector<std::optional<Triple<Ops>>> n_trans;
    std::vector<std::optional<Triple<Ops>>> n_density;
    Triple<Ops> color;  // sRGB
    Value final_transmittance{};
};

template <class Ops>
typename Ops::Value srgb_gamma(Ops& ops, typename Ops::Value u) {
    if (ops.value(u) <= 0.0031308) return ops.mul(u, 12.92);
    return ops.add(ops.mul(ops.pow(u, 1.0 / 2.4), 1.055), -0.055);
}

/// The differentiable per-ray pipeline: query the fields at each sample,
/// activate densities (exp for the quadrature, softplus for the normal
/// estimate), shade, composite in linear space, clamp, tone map.
template <class Ops>
TracedRay<Ops> trace_ray(Ops& ops, const FieldViews& views, const Ray& ray, const Samples& samples,
                         const Vec3& background, const TraceRequest& request) {
    using Value = typename Ops::Value;
    const std::size_t n = samples.t.size();
    TracedRay<Ops> out;
    out.weights.reserve(n);
    if (request.predicted) out.n_pred.reserve(n);
    if (request.transmittance) out.n_trans.resize(n);
    if (request.density) out.n_density.resize(n);

    const ShadeInputs shade_in{&views.env, views.sh_degree};
    const Vec3 view = -ray.direction;

    Value transmittance = ops.constant(1.0);
    Triple<Ops> color_acc{};
    Triple<Ops> prefix{};  // -sum_{j<i} grad(sigma_smooth)_j delta_j
    bool have_prefix = false;

    for (std::size_t i = 0; i < n; ++i) {
        const Vec3 x = ray.origin + ray.direction * samples.t[i];
        const CellLookup lk = locate(*views.shape, x);

        const Value b = ops.gather(views.density, lk, 0);
        const Value sigma_sharp = ops.exp(b);

        Triple<Ops> raw_n, raw_d, raw_t;
        for (int a = 0; a < 3; ++a) {
            raw_n[a] = ops.gather(views.normal, lk, a);
            raw_d[a] = ops.gather(views.diffuse, lk, a);
            raw_t[a] = ops.gather(views.tint, lk, a);
        }
        const Triple<Ops> n_pred = ops.normalize(raw_n, kPredictedNormalEpsilon);
        const Triple<Ops> c = shade_raw(ops, shade_in, n_pred, raw_d, raw_t, view);

        auto [w, next] = ops.composite_step(transmittance, sigma_sharp, samples.delta[i]);
        for (int a = 0; a < 3; ++a) {
            const Value term = ops.mul(w, c[a]);
            color_acc[a] = i == 0 ? term : ops.add(color_acc[a], term);
        }
        out.weights.push_back(w);
        if (request.predicted) out.n_pred.push_back(n_pred);
        transmittance = next;

        if (request.transmittance || request.density) {
            const Triple<Ops> grad_b = ops.gather_gradient(views.density, lk, 0);
            if (request.density) {
                const double g[3] = {ops.value(grad_b[0]), ops.value(grad_b[1]), ops.value(grad_b[2])};
                if (std::sqrt(g[0] * g[0] + g[1] * g[1] + g[2] * g[2]) >= kGradientEpsilon) {
                    Triple<Ops> neg;
                    for (int a = 0; a < 3; ++a) neg[a] = ops.mul(grad_b[a], -1.0);
                    out.n_density[i] = ops.normalize(neg, 0.0);
                }
            }
            if (request.transmittance) {
                if (have_prefix) {
                    const double p[3] = {ops.value(prefix[0]), ops.value(prefix[1]), ops.value(prefix[2])};
                    if (std::sqrt(p[0] * p[0] + p[1] * p[1] + p[2] * p[2]) >= kGradientEpsilon)
                        out.n_trans[i] = ops.normalize(prefix, 0.0);
                }
                // grad(softplus(b)) = sigmoid(b) grad(b)
                const Value smooth_slope = ops.mul(ops.sigmoid(b), -samples.delta[i]);
                for (int a = 0; a < 3; ++a) {
                    const Value term = ops.mul(grad_b[a], smooth_slope);
                    prefix[a] = have_prefix ? ops.add(prefix[a], term) : term;
                }
                have_prefix = true;
            }
        }
        if (ops.value(transmittance) < request.min_transmittance) break;
    }

    out.final_transmittance = transmittance;
    for (int a = 0; a < 3; ++a) {
        const Value bg = ops.mul(transmittance, background[a]);
        const Value lin = n == 0 ? bg : ops.add(color_acc[a], bg);
        out.color[a] = srgb_gamma(ops, ops.clamp(lin, 0.0, 1.0));
    }
    return out;
}

}  // namespace nf
