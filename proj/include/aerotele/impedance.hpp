#pragma once

#include <stdexcept>
#include <utility>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "aerotele/errors.hpp"
#include "aerotele/so3.hpp"

namespace aerotele {

using Vector6 = Eigen::Matrix<double, 6, 1>;
using Matrix6 = Eigen::Matrix<double, 6, 6>;

inline constexpr double kOmavMass = 4.82;  // kg

struct Wrench6 {
    Vec3 force = Vec3::Zero();
    Vec3 torque = Vec3::Zero();

    Vector6 stacked() const {
        Vector6 w;
        w << force, torque;
        return w;
    }

    static Wrench6 from(const Vector6& w) { return {w.head<3>(), w.tail<3>()}; }

    friend Wrench6 operator+(const Wrench6& a, const Wrench6& b) {
        return {a.force + b.force, a.torque + b.torque};
    }
};

/// Vehicle body frame B in world W. Linear velocity is world-frame,
/// angular velocity is body-frame.
struct RigidState {
    Vec3 position = Vec3::Zero();
    Rot3 attitude = Rot3::Identity();
    Vec3 velocity = Vec3::Zero();
    Vec3 angular_velocity = Vec3::Zero();
};

struct ReferenceState {
    Vec3 position = Vec3::Zero();
    Rot3 attitude = Rot3::Identity();
    Vec3 velocity = Vec3::Zero();
    Vec3 angular_velocity = Vec3::Zero();  // body frame of the reference
};

struct ErrorVector {
    Vec3 position = Vec3::Zero();
    Vec3 attitude = Vec3::Zero();
    Vec3 velocity = Vec3::Zero();
    Vec3 angular_velocity = Vec3::Zero();

    Vector6 pose() const {
        Vector6 e;
        e << position, attitude;
        return e;
    }
    Vector6 twist() const {
        Vector6 e;
        e << velocity, angular_velocity;
        return e;
    }
};

/// Virtual inertia, damping and stiffness of the closed loop. All three must
/// be symmetric positive definite; this is checked once, here.
class ImpedanceParams {
public:
    ImpedanceParams(const Matrix6& inertia, const Matrix6& damping, const Matrix6& stiffness)
        : inertia_(inertia), damping_(damping), stiffness_(stiffness) {
        require_spd(inertia_, "virtual inertia");
        require_spd(damping_, "damping");
        require_spd(stiffness_, "stiffness");
        inertia_inverse_ = inertia_.llt().solve(Matrix6::Identity());
    }

    static ImpedanceParams diagonal(const Vector6& inertia, const Vector6& damping, const Vector6& stiffness) {
        return {inertia.asDiagonal(), damping.asDiagonal(), stiffness.asDiagonal()};
    }

    /// 4.82 kg translational inertia; gains are this project's own tuning.
    static ImpedanceParams defaults() {
        Vector6 m, d, k;
        m << kOmavMass, kOmavMass, kOmavMass, 0.5, 0.5, 0.5;
        d << 20, 20, 20, 4, 4, 4;
        k << 50, 50, 50, 10, 10, 10;
        return diagonal(m, d, k);
    }

    const Matrix6& inertia() const { return inertia_; }
    const Matrix6& inertia_inverse() const { return inertia_inverse_; }
    const Matrix6& damping() const { return damping_; }
    const Matrix6& stiffness() const { return stiffness_; }

private:
    static void require_spd(const Matrix6& m, const char* name) {
        if (!m.allFinite() || !m.isApprox(m.transpose(), 1e-12)) {
            throw Singular(std::string(name) + " must be symmetric");
        }
        Eigen::LLT<Matrix6> llt(m);
        if (llt.info() != Eigen::Success) {
            throw Singular(std::string(name) + " must be positive definite");
        }
    }

    Matrix6 inertia_;
    Matrix6 damping_;
    Matrix6 stiffness_;
    Matrix6 inertia_inverse_;
};

inline ErrorVector compute_errors(const RigidState& s, const ReferenceState& ref) {
    const Mat3 rt = s.attitude.transpose();
    ErrorVector e;
    e.position = rt * (s.position - ref.position);
    const Mat3 relative = ref.attitude.transpose() * s.attitude;
    e.attitude = so3::skew_part_vee(relative);
    e.velocity = rt * (s.velocity - ref.velocity);
    e.angular_velocity = s.angular_velocity - rt * ref.attitude * ref.angular_velocity;
    return e;
}

struct DynamicsStep {
    RigidState next;
    /// -D e_twist - K e_pose evaluated at the step midpoint (body frame).
    Vector6 control_wrench = Vector6::Zero();
    /// Attitude at the midpoint; the linear acceleration applied was
    /// mid_attitude * (M^-1 w)_lin.
    Rot3 mid_attitude = Rot3::Identity();
    /// Midpoint rates the step advanced the pose with: position moves by
    /// dt * mid_velocity, attitude by exp(dt * mid_angular_velocity).
    Vec3 mid_velocity = Vec3::Zero();
    Vec3 mid_angular_velocity = Vec3::Zero();
};

namespace detail {

struct Acceleration {
    Vec3 linear_world;
    Vec3 angular_body;
    Vector6 control;
};

inline Acceleration closed_loop_acceleration(const RigidState& s, const ReferenceState& ref, const Vector6& tau_ext,
                                             const ImpedanceParams& p) {
    const ErrorVector e = compute_errors(s, ref);
    const Vector6 control = -p.damping() * e.twist() - p.stiffness() * e.pose();
    const Vector6 alpha = p.inertia_inverse() * (tau_ext + control);
    return {s.attitude * alpha.head<3>(), alpha.tail<3>(), control};
}

inline ReferenceState advance_reference(const ReferenceState& ref, double h) {
    ReferenceState r = ref;
    r.position += h * ref.velocity;
    r.attitude = so3::integrate_rotation(ref.attitude, ref.angular_velocity, h);
    return r;
}

}  // namespace detail

/// One step of M_v [a; w_dot] = tau_ext - D_v [e_v; e_w] - K_v [e_p; e_R].
///
/// The wrench and accelerations are body-frame; the linear acceleration is
/// rotated into W before integration. Integration is the explicit midpoint
/// rule, with the reference extrapolated along its own rates to the midpoint.
inline DynamicsStep step_dynamics_detailed(const RigidState& s, const ReferenceState& ref, const Wrench6& tau_ext,
                                           const ImpedanceParams& params, double dt) {
    if (!(dt > 0.0 && dt <= 0.01)) throw std::invalid_argument("dt must lie in (0, 0.01]");
    const Vector6 w_ext = tau_ext.stacked();
    const double h = 0.5 * dt;

    const detail::Acceleration a0 = detail::closed_loop_acceleration(s, ref, w_ext, params);
    RigidState mid;
    mid.position = s.position + h * s.velocity;
    mid.attitude = so3::integrate_rotation(s.attitude, s.angular_velocity, h);
    mid.velocity = s.velocity + h * a0.linear_world;
    mid.angular_velocity = s.angular_velocity + h * a0.angular_body;

    const detail::Acceleration am =
        detail::closed_loop_acceleration(mid, detail::advance_reference(ref, h), w_ext, params);

    DynamicsStep out;
    out.next.velocity = s.velocity + dt * am.linear_world;
    out.next.angular_velocity = s.angular_velocity + dt * am.angular_body;
    out.next.position = s.position + dt * mid.velocity;
    out.next.attitude = so3::integrate_rotation(s.attitude, mid.angular_velocity, dt);
    out.control_wrench = am.control;
    out.mid_attitude = mid.attitude;
    out.mid_velocity = mid.velocity;
    out.mid_angular_velocity = mid.angular_velocity;
    return out;
}

inline RigidState step_dynamics(const RigidState& s, const ReferenceState& ref, const Wrench6& tau_ext,
                                const ImpedanceParams& params, double dt) {
    return step_dynamics_detailed(s, ref, tau_ext, params, dt).next;
}

/// Generalized-momentum residual observer state.
struct ObserverState {
    Vector6 integral = Vector6::Zero();
    Vector6 estimate = Vector6::Zero();
};

/// First-order momentum observer: r = K_I (h(t) - h(0) - int (u + r) dt).
///
/// `velocity_change` is the body-frame generalized velocity increment over the
/// step and `control_wrench` the known (non-external) wrench that acted
/// during it. In steady state r tracks tau_ext with time constant 1/k_I.
inline std::pair<ObserverState, Wrench6> estimate_external_wrench(const ObserverState& state,
                                                                  const Vector6& control_wrench,
                                                                  const Vector6& velocity_change,
                                                                  const Matrix6& inertia, const Matrix6& gain,
                                                                  double dt) {
    ObserverState next = state;
    next.integral += inertia * velocity_change - dt * (control_wrench + state.estimate);
    next.estimate = gain * next.integral;
    return {next, Wrench6::from(next.estimate)};
}

inline Vector6 body_velocity_change(const RigidState& before, const DynamicsStep& step) {
    Vector6 dv;
    dv << step.mid_attitude.transpose() * (step.next.velocity - before.velocity),
        step.next.angular_velocity - before.angular_velocity;
    return dv;
}

inline constexpr double kDefaultObserverGain = 50.0;  // 1/s

}  // namespace aerotele
