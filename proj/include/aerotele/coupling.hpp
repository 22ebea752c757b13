#pragma once

#include <algorithm>
#include <stdexcept>

#include "aerotele/impedance.hpp"
#include "aerotele/so3.hpp"

namespace aerotele {

/// Haptic handle pose in its idle frame M. Position is normalized so each
/// axis of the device workspace maps to [-1, 1].
struct HandleState {
    Vec3 position = Vec3::Zero();
    Rot3 attitude = Rot3::Identity();
    Vec3 velocity = Vec3::Zero();

    bool valid() const {
        return position.allFinite() && velocity.allFinite() && attitude.allFinite() &&
               position.cwiseAbs().maxCoeff() <= 1.0 && so3::orthonormality_error(attitude) < 1e-6;
    }
};

inline HandleState clamp_handle(HandleState h) {
    if (!h.position.allFinite()) h.position.setZero();
    h.position = h.position.cwiseMax(-1.0).cwiseMin(1.0);
    if (!h.velocity.allFinite()) h.velocity.setZero();
    if (!h.attitude.allFinite() || so3::orthonormality_error(h.attitude) > 0.1) {
        h.attitude = Rot3::Identity();
    } else {
        h.attitude = so3::orthonormalize(h.attitude);
    }
    return h;
}

struct CouplingParams {
    double max_velocity = 0.15;        // m/s
    double max_angular_rate = 0.5;     // rad/s
    Mat3 recenter_translational = 10.0 * Mat3::Identity();
    Mat3 recenter_rotational = Mat3::Identity();
    Vector6 external_gain = Vector6::Ones();
    double force_scale = 1.0 / 3.0;
    double force_limit = 12.0;         // N, device maximum
    /// Per-axis mask on the commanded body rate; (0, 0, 1) keeps the vehicle
    /// level and leaves only yaw to the operator.
    Vec3 angular_mask = Vec3::Ones();

    void validate() const {
        if (!(max_velocity > 0.0)) throw std::invalid_argument("max_velocity must be > 0");
        if (!(max_angular_rate >= 0.0)) throw std::invalid_argument("max_angular_rate must be >= 0");
        if (!(force_scale > 0.0 && force_scale <= 1.0)) throw std::invalid_argument("force_scale must lie in (0, 1]");
        if (!(force_limit > 0.0)) throw std::invalid_argument("force_limit must be > 0");
    }
};

struct ReferenceRates {
    Vec3 linear = Vec3::Zero();   // world frame, m/s
    Vec3 angular = Vec3::Zero();  // body frame, rad/s
};

inline ReferenceRates handle_to_reference_rates(const HandleState& h, const CouplingParams& p) {
    ReferenceRates r;
    r.linear = p.max_velocity * h.position;
    r.angular = (p.max_angular_rate * so3::skew_part_vee(h.attitude)).cwiseProduct(p.angular_mask);
    return r;
}

/// Trapezoidal position integral and exponential-map attitude update, both
/// over the average of the stored and new rates. The new rates are stored.
inline ReferenceState integrate_reference(const ReferenceState& ref, const ReferenceRates& rates, double dt) {
    if (!(dt > 0.0)) throw std::invalid_argument("dt must be > 0");
    ReferenceState next;
    next.position = ref.position + 0.5 * dt * (ref.velocity + rates.linear);
    next.attitude = so3::integrate_rotation(ref.attitude, 0.5 * (ref.angular_velocity + rates.angular), dt);
    next.velocity = rates.linear;
    next.angular_velocity = rates.angular;
    return next;
}

inline Wrench6 recentering_wrench(const HandleState& h, const CouplingParams& p) {
    return {-(p.recenter_translational * h.position), -(p.recenter_rotational * so3::skew_part_vee(h.attitude))};
}

/// Recentering plus scaled external wrench; force saturated per axis at the
/// device limit after scaling.
inline Wrench6 feedback_wrench(const Wrench6& external_estimate, const HandleState& h, const CouplingParams& p) {
    const Vector6 ext = p.external_gain.cwiseProduct(p.force_scale * external_estimate.stacked());
    Wrench6 total = recentering_wrench(h, p) + Wrench6::from(ext);
    total.force = total.force.cwiseMax(-p.force_limit).cwiseMin(p.force_limit);
    return total;
}

}  // namespace aerotele
