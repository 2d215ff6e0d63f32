#include "normalfield/sh.hpp"

#include "normalfield/error.hpp"

namespace nf {

namespace {
constexpr double kC0 = 0.28209479177387814;
constexpr double kC1 = 0.4886025119029199;
constexpr double kC2[] = {1.0925484305920792, -1.0925484305920792, 0.31539156525252005, -1.0925484305920792,
                          0.5462742152960396};
constexpr double kC3[] = {-0.5900435899266435, 2.890611442640554, -0.4570457994644658, 0.3731763325901154,
                          -0.4570457994644658, 1.445305721320277, -0.5900435899266435};
}  // namespace

ShBasis sh_basis(int degree, const Vec3& d) {
    if (degree < 0 || degree > kMaxShDegree) throw InvalidInput("spherical harmonics degree must be in [0, 3]");
    ShBasis b;
    const double x = d.x, y = d.y, z = d.z;
    b.value[0] = kC0;
    if (degree < 1) return b;

    b.value[1] = -kC1 * y;
    b.grad[1] = {0, -kC1, 0};
    b.value[2] = kC1 * z;
    b.grad[2] = {0, 0, kC1};
    b.value[3] = -kC1 * x;
    b.grad[3] = {-kC1, 0, 0};
    if (degree < 2) return b;

    const double xx = x * x, yy = y * y, zz = z * z;
    b.value[4] = kC2[0] * x * y;
    b.grad[4] = {kC2[0] * y, kC2[0] * x, 0};
    b.value[5] = kC2[1] * y * z;
    b.grad[5] = {0, kC2[1] * z, kC2[1] * y};
    b.value[6] = kC2[2] * (2 * zz - xx - yy);
    b.grad[6] = {-2 * kC2[2] * x, -2 * kC2[2] * y, 4 * kC2[2] * z};
    b.value[7] = kC2[3] * x * z;
    b.grad[7] = {kC2[3] * z, 0, kC2[3] * x};
    b.value[8] = kC2[4] * (xx - yy);
    b.grad[8] = {2 * kC2[4] * x, -2 * kC2[4] * y, 0};
    if (degree < 3) return b;

    b.value[9] = kC3[0] * y * (3 * xx - yy);
    b.grad[9] = {6 * kC3[0] * x * y, kC3[0] * (3 * xx - 3 * yy), 0};
    b.value[10] = kC3[1] * x * y * z;
    b.grad[10] = {kC3[1] * y * z, kC3[1] * x * z, kC3[1] * x * y};
    b.value[11] = kC3[2] * y * (4 * zz - xx - yy);
    b.grad[11] = {-2 * kC3[2] * x * y, kC3[2] * (4 * zz - xx - 3 * yy), 8 * kC3[2] * y * z};
    b.value[12] = kC3[3] * z * (2 * zz - 3 * xx - 3 * yy);
    b.grad[12] = {-6 * kC3[3] * x * z, -6 * kC3[3] * y * z, kC3[3] * (6 * zz - 3 * xx - 3 * yy)};
    b.value[13] = kC3[4] * x * (4 * zz - xx - yy);
    b.grad[13] = {kC3[4] * (4 * zz - 3 * xx - yy), -2 * kC3[4] * x * y, 8 * kC3[4] * x * z};
    b.value[14] = kC3[5] * z * (xx - yy);
    b.grad[14] = {2 * kC3[5] * x * z, -2 * kC3[5] * y * z, kC3[5] * (xx - yy)};
    b.value[15] = kC3[6] * x * (xx - 3 * yy);
    b.grad[15] = {kC3[6] * (3 * xx - 3 * yy), -6 * kC3[6] * x * y, 0};
    return b;
}

}  // namespace nf
