#pragma once

#include <cmath>
#include <cstdint>

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <Eigen/LU>
#include <Eigen/SVD>

#include "aerotele/errors.hpp"

namespace aerotele {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
/// Rotation matrix; the type is a plain 3x3, the SO(3) invariants are kept by the functions below.
using Rot3 = Eigen::Matrix3d;

namespace so3 {

inline constexpr double kSkewTolerance = 1e-9;
inline constexpr int kRenormalizeEvery = 100;

inline Mat3 hat(const Vec3& v) {
    Mat3 m;
    m << 0.0, -v.z(), v.y(),
         v.z(), 0.0, -v.x(),
        -v.y(), v.x(), 0.0;
    return m;
}

/// Inverse of hat(). Throws NotSkew when |S + S^T| exceeds 1e-9.
inline Vec3 vee(const Mat3& s) {
    if ((s + s.transpose()).norm() > kSkewTolerance) throw NotSkew();
    return {s(2, 1), s(0, 2), s(1, 0)};
}

/// (R - R^T)^v / 2, i.e. sin(angle) * axis.
inline Vec3 skew_part_vee(const Rot3& r) {
    return 0.5 * Vec3(r(2, 1) - r(1, 2), r(0, 2) - r(2, 0), r(1, 0) - r(0, 1));
}

/// Rodrigues formula for exp(hat(phi)).
inline Rot3 exp(const Vec3& phi) {
    const double theta = phi.norm();
    const Mat3 k = hat(phi);
    if (theta < 1e-8) {
        return Mat3::Identity() + k + 0.5 * k * k;
    }
    const double a = std::sin(theta) / theta;
    const double b = (1.0 - std::cos(theta)) / (theta * theta);
    return Mat3::Identity() + a * k + b * k * k;
}

inline Rot3 axis_angle(const Vec3& axis, double angle) { return exp(axis.normalized() * angle); }

/// Polar projection onto SO(3). Throws Degenerate for rank-deficient input.
inline Rot3 orthonormalize(const Mat3& m) {
    Eigen::JacobiSVD<Mat3> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Vec3 sv = svd.singularValues();
    if (!(sv(2) > 1e-12 * std::max(sv(0), 1e-300))) {
        throw Degenerate("cannot orthonormalize a rank-deficient matrix");
    }
    Mat3 u = svd.matrixU();
    const Mat3 v = svd.matrixV();
    if ((u * v.transpose()).determinant() < 0.0) u.col(2) *= -1.0;
    return u * v.transpose();
}

/// R * exp(hat(omega_body * dt)).
inline Rot3 integrate_rotation(const Rot3& r, const Vec3& omega_body, double dt) {
    return r * exp(omega_body * dt);
}

/// Frobenius norm of R R^T - I.
inline double orthonormality_error(const Mat3& r) {
    return (r * r.transpose() - Mat3::Identity()).norm();
}

/// Keeps an attitude on SO(3) across long sessions by projecting every
/// kRenormalizeEvery steps.
class AttitudeIntegrator {
public:
    Rot3 step(const Rot3& r, const Vec3& omega_body, double dt) {
        Rot3 next = integrate_rotation(r, omega_body, dt);
        if (++steps_ % kRenormalizeEvery == 0) next = orthonormalize(next);
        return next;
    }

    std::uint64_t steps() const { return steps_; }

private:
    std::uint64_t steps_ = 0;
};

}  // namespace so3
}  // namespace aerotele
