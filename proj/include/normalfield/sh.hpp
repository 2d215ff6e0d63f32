#pragma once

#include <array>

#include "normalfield/math.hpp"

namespace nf {

inline constexpr int kMaxShDegree = 3;
inline constexpr int kMaxShCoeffs = (kMaxShDegree + 1) * (kMaxShDegree + 1);

constexpr int sh_coeff_count(int degree) { return (degree + 1) * (degree + 1); }

/// Real spherical harmonics (orthonormal over the unit sphere) evaluated as
/// polynomials in the direction components, plus their Cartesian gradients.
/// Ordering is l-major, m = -l..l. Degrees 0..3.
struct ShBasis {
    std::array<double, kMaxShCoeffs> value{};
    std::array<Vec3, kMaxShCoeffs> grad{};
};

ShBasis sh_basis(int degree, const Vec3& d);

}  // namespace nf
