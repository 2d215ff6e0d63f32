#include "normalfield/normal.hpp"

#include <cmath>

#include "normalfield/error.hpp"

namespace nf {

MaybeNormal density_gradient_normal(const Vec3& grad_sigma) {
    const double n = norm(grad_sigma);
    if (!(n >= kGradientEpsilon)) return std::nullopt;
    return grad_sigma * (-1.0 / n);
}

std::vector<MaybeNormal> transmittance_gradient_normals(std::span<const Vec3> grad_sigma_smooth,
                                                        std::span<const double> delta) {
    if (grad_sigma_smooth.size() != delta.size())
        throw InvalidInput("transmittance_gradient_normals: gradient and spacing counts differ");
    std::vector<MaybeNormal> out(delta.size());
    Vec3 prefix;
    for (std::size_t i = 0; i < delta.size(); ++i) {
        if (i > 0) {
            const double n = norm(prefix);
            if (n >= kGradientEpsilon) out[i] = prefix * (-1.0 / n);
        }
        prefix += grad_sigma_smooth[i] * delta[i];
    }
    return out;
}

Vec3 predicted_normal(const Vec3& raw) { return raw / std::sqrt(dot(raw, raw) + kPredictedNormalEpsilon); }

namespace {
template <class Get>
MaybeNormal composite_impl(std::span<const double> weights, std::size_t count, Get&& get) {
    if (weights.size() != count) throw InvalidInput("composite_normal_map: weight and normal counts differ");
    Vec3 sum;
    double total = 0.0;
    for (std::size_t i = 0; i < count; ++i) {
        const MaybeNormal n = get(i);
        if (!n) continue;
        sum += *n * weights[i];
        total += weights[i];
    }
    if (total < kForegroundWeight) return std::nullopt;
    const double len = norm(sum);
    if (len < kGradientEpsilon) return std::nullopt;
    return sum / len;
}
}  // namespace

MaybeNormal composite_normal_map(std::span<const double> weights, std::span<const MaybeNormal> normals) {
    return composite_impl(weights, normals.size(), [&](std::size_t i) { return normals[i]; });
}

MaybeNormal composite_normal_map(std::span<const double> weights, std::span<const Vec3> normals) {
    return composite_impl(weights, normals.size(), [&](std::size_t i) { return MaybeNormal(normals[i]); });
}

}  // namespace nf
