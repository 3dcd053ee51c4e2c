// SPDX-License-Identifier: Apache-2.0
#include "splatstyle/scene.hpp"

namespace splatstyle {

Mat3 covariance_from_rs(const Gaussian3D& g) {
    const Mat3 r = rotation_from_unit_quat(g.rotation.normalized());
    const Vec3 s = g.scale();
    Mat3 m = r;
    for (int i = 0; i < 3; ++i) {
        m(i, 0) *= s.x;
        m(i, 1) *= s.y;
        m(i, 2) *= s.z;
    }
    return m * m.transposed();
}

namespace {

// Cholesky solve of a 3x3 SPD system, enough for the density kernel.
Vec3 spd_solve(const Mat3& a, const Vec3& b) {
    double l00 = std::sqrt(a(0, 0));
    double l10 = a(1, 0) / l00;
    double l20 = a(2, 0) / l00;
    double l11 = std::sqrt(a(1, 1) - l10 * l10);
    double l21 = (a(2, 1) - l20 * l10) / l11;
    double l22 = std::sqrt(a(2, 2) - l20 * l20 - l21 * l21);
    // forward: L y = b
    double y0 = b.x / l00;
    double y1 = (b.y - l10 * y0) / l11;
    double y2 = (b.z - l20 * y0 - l21 * y1) / l22;
    // backward: L^T x = y
    double x2 = y2 / l22;
    double x1 = (y1 - l21 * x2) / l11;
    double x0 = (y0 - l10 * x1 - l20 * x2) / l00;
    return {x0, x1, x2};
}

} // namespace

double gaussian_density(const Gaussian3D& g, const Vec3& x) {
    const Mat3 cov = covariance_from_rs(g);
    const Vec3 d = x - g.position;
    const Vec3 solved = spd_solve(cov, d);
    return std::exp(-0.5 * d.dot(solved));
}

} // namespace splatstyle
