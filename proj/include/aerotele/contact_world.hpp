#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "aerotele/collision.hpp"
#include "aerotele/errors.hpp"
#include "aerotele/impedance.hpp"

namespace aerotele {

struct ContactModel {
    double stiffness = 5000.0;     // N/m
    double damping = 50.0;         // N s/m
    double slip_threshold = 1e-4;  // m/s, static/kinetic switch
};

struct World {
    std::vector<Body> bodies;
    Vec3 gravity = Vec3(0.0, 0.0, -9.81);
    ContactModel contact;
    /// Contacts and forces from the last evaluation of the last step.
    std::vector<Contact> contacts;
    std::uint64_t steps = 0;

    std::optional<std::size_t> find(const std::string& name) const {
        for (std::size_t i = 0; i < bodies.size(); ++i) {
            if (bodies[i].name == name) return i;
        }
        return std::nullopt;
    }
};

/// Penalty normal force, floored at zero (no adhesion).
inline double contact_force(double depth, double approach_speed, double stiffness, double damping) {
    if (depth <= 0.0) return 0.0;
    return std::max(0.0, stiffness * depth + damping * approach_speed);
}

inline double contact_force(const ContactPoint& p, double approach_speed, const ContactModel& m) {
    return contact_force(p.depth, approach_speed, m.stiffness, m.damping);
}

/// Coulomb friction along one axis. Static while |slip| < threshold and the
/// applied force fits in the cone; otherwise kinetic, opposing the slip (or
/// the applied force when starting from rest).
inline double friction_force(double applied, double normal, double mu_static, double mu_kinetic, double slip,
                             double slip_threshold = 1e-4) {
    if (normal <= 0.0) return 0.0;
    if (std::abs(slip) < slip_threshold) {
        if (std::abs(applied) <= mu_static * normal) return -applied;
        return applied > 0.0 ? -mu_kinetic * normal : mu_kinetic * normal;
    }
    return slip > 0.0 ? -mu_kinetic * normal : mu_kinetic * normal;
}

/// Vector form of friction_force in the contact tangent plane.
inline Vec3 friction_force(const Vec3& applied, double normal, double mu_static, double mu_kinetic, const Vec3& slip,
                           double slip_threshold = 1e-4) {
    if (normal <= 0.0) return Vec3::Zero();
    if (slip.norm() < slip_threshold) {
        if (applied.norm() <= mu_static * normal) return -applied;
        return -mu_kinetic * normal * applied.normalized();
    }
    return -mu_kinetic * normal * slip.normalized();
}

namespace detail {

/// Friction over one kick of length h. `stop` is the force that brings the
/// slip to zero within the kick; a kinetic force that would overshoot past
/// zero slip is replaced by it when the static cone allows.
inline Vec3 kick_friction(const Vec3& applied, const Vec3& slip, double normal, double mu_s, double mu_k,
                          double effective_mass, double h, double threshold) {
    const Vec3 stop = applied + effective_mass * slip / h;
    if (slip.norm() < threshold) return friction_force(stop, normal, mu_s, mu_k, Vec3::Zero(), threshold);
    const Vec3 f = friction_force(applied, normal, mu_s, mu_k, slip, threshold);
    const Vec3 after = slip + h * (applied + f) / effective_mass;
    if (after.dot(slip) < 0.0 && stop.norm() <= mu_s * normal) return -stop;
    return f;
}

struct BodyLoad {
    Vec3 force = Vec3::Zero();
    Vec3 torque = Vec3::Zero();  // about the body position
    double support = 0.0;        // total normal force received
};

inline void add_at(BodyLoad& load, const Body& body, const Vec3& force, const Vec3& point) {
    load.force += force;
    load.torque += (point - body.position).cross(force);
}

/// Forces on all bodies for the current positions and velocities.
inline std::vector<BodyLoad> evaluate_loads(World& w, const std::vector<Wrench6>& applied, double h) {
    const std::size_t n = w.bodies.size();
    std::vector<BodyLoad> load(n);
    for (std::size_t i = 0; i < n; ++i) {
        const Body& b = w.bodies[i];
        if (!b.is_dynamic()) continue;
        load[i].force = b.mass * w.gravity;
        if (i < applied.size()) {
            load[i].force += applied[i].force;
            load[i].torque += applied[i].torque;
        }
    }

    detect_contacts(w.bodies, w.contacts);
    for (Contact& c : w.contacts) {
        const Body& a = w.bodies[c.body_a];
        const Body& b = w.bodies[c.body_b];
        c.normal_force = 0.0;
        for (ContactPoint& p : c.manifold) {
            const Vec3 v_rel = a.point_velocity(p.point) - b.point_velocity(p.point);
            p.normal_force = contact_force(p, -v_rel.dot(p.normal), w.contact);
            c.normal_force += p.normal_force;
            const Vec3 f = p.normal_force * p.normal;
            add_at(load[c.body_a], a, f, p.point);
            add_at(load[c.body_b], b, -f, p.point);
            load[c.body_a].support += p.normal_force;
            load[c.body_b].support += p.normal_force;
        }
    }

    // friction needs the complete non-friction load
    const std::vector<BodyLoad> pre = load;
    for (Contact& c : w.contacts) {
        c.friction_force.setZero();
        if (c.normal_force <= 0.0) continue;
        const Body& a = w.bodies[c.body_a];
        const Body& b = w.bodies[c.body_b];
        if (!a.is_dynamic() && !b.is_dynamic()) continue;
        if (a.rail || b.rail) continue;  // rail friction is handled on the joint
        const double mu_s = std::min(a.static_friction, b.static_friction);
        const double mu_k = std::min(a.kinetic_friction, b.kinetic_friction);
        if (mu_s <= 0.0 && mu_k <= 0.0) continue;

        Vec3 point = Vec3::Zero();
        Vec3 normal = Vec3::Zero();
        for (const auto& p : c.manifold) {
            point += p.normal_force * p.point;
            normal += p.normal_force * p.normal;
        }
        point /= c.normal_force;
        if (normal.norm() < 1e-12) continue;
        normal.normalize();
        const Mat3 tangent = Mat3::Identity() - normal * normal.transpose();

        const Vec3 slip = tangent * (a.point_velocity(point) - b.point_velocity(point));
        const double inv_a = a.is_dynamic() ? 1.0 / a.mass : 0.0;
        const double inv_b = b.is_dynamic() ? 1.0 / b.mass : 0.0;
        const double m_eff = 1.0 / (inv_a + inv_b);
        const std::size_t owner = a.is_dynamic() ? c.body_a : c.body_b;
        const double share = pre[owner].support > 0.0 ? c.normal_force / pre[owner].support : 1.0;
        const Vec3 rel_accel = pre[c.body_a].force * inv_a - pre[c.body_b].force * inv_b;
        const Vec3 applied_t = share * m_eff * (tangent * rel_accel);

        const Vec3 f = kick_friction(applied_t, slip, c.normal_force, mu_s, mu_k, share * m_eff, h,
                                     w.contact.slip_threshold);
        c.friction_force = f;
        add_at(load[c.body_a], a, f, point);
        add_at(load[c.body_b], b, -f, point);
    }

    // prismatic joints: project and apply rail friction
    for (std::size_t i = 0; i < n; ++i) {
        const Body& b = w.bodies[i];
        if (!b.is_dynamic() || !b.rail) continue;
        const Vec3 axis = b.rail->axis.normalized();
        const Vec3 g_perp = w.gravity - w.gravity.dot(axis) * axis;
        const double normal = b.mass * g_perp.norm();
        const double along = load[i].force.dot(axis);
        const double slip = b.velocity.dot(axis);
        const Vec3 f = kick_friction(Vec3(along, 0, 0), Vec3(slip, 0, 0), normal, b.static_friction,
                                     b.kinetic_friction, b.mass, h, w.contact.slip_threshold);
        load[i].force = (along + f.x()) * axis;
        load[i].torque.setZero();
    }
    return load;
}

inline void kick(World& w, const std::vector<BodyLoad>& load, double h) {
    for (std::size_t i = 0; i < w.bodies.size(); ++i) {
        Body& b = w.bodies[i];
        if (!b.is_dynamic()) continue;
        b.velocity += h * load[i].force / b.mass;
        if (b.rail) continue;
        // omega += h I_w^-1 tau, solved in the body frame
        b.angular_velocity += h * (b.attitude * b.inertia.inverse() * (b.attitude.transpose() * load[i].torque));
    }
}

}  // namespace detail

/// Net wrench that contacts exert on a non-dynamic body during the last step,
/// torque about the body position.
struct Reaction {
    Vec3 force = Vec3::Zero();
    Vec3 torque = Vec3::Zero();
};

struct StepReport {
    std::vector<Reaction> reactions;  // per body, averaged over the step
};

/// Velocity Verlet (kick-drift-kick) step of all dynamic bodies under
/// gravity, penalty contacts, Coulomb friction and rail joints. Kinematic
/// bodies hold the pose the caller gave them.
inline StepReport step_world(World& w, const std::vector<Wrench6>& applied, double dt) {
    if (!(dt > 0.0)) throw std::invalid_argument("dt must be > 0");
    const double h = 0.5 * dt;
    StepReport report;
    report.reactions.assign(w.bodies.size(), {});
    const auto accumulate = [&] {
        for (const Contact& c : w.contacts) {
            for (const auto& p : c.manifold) {
                const Vec3 f = p.normal_force * p.normal;
                for (auto [idx, sign] : {std::pair{c.body_a, 1.0}, std::pair{c.body_b, -1.0}}) {
                    const Body& b = w.bodies[idx];
                    if (b.is_dynamic()) continue;
                    report.reactions[idx].force += 0.5 * sign * f;
                    report.reactions[idx].torque += 0.5 * sign * (p.point - b.position).cross(f);
                }
            }
            // friction acts at the force-weighted centroid
            if (c.friction_force.squaredNorm() > 0.0 && c.normal_force > 0.0) {
                Vec3 point = Vec3::Zero();
                for (const auto& p : c.manifold) point += p.normal_force * p.point;
                point /= c.normal_force;
                for (auto [idx, sign] : {std::pair{c.body_a, 1.0}, std::pair{c.body_b, -1.0}}) {
                    const Body& b = w.bodies[idx];
                    if (b.is_dynamic()) continue;
                    report.reactions[idx].force += 0.5 * sign * c.friction_force;
                    report.reactions[idx].torque += 0.5 * sign * (point - b.position).cross(c.friction_force);
                }
            }
        }
    };

    const auto first = detail::evaluate_loads(w, applied, h);
    accumulate();
    detail::kick(w, first, h);

    ++w.steps;
    const bool renormalize = w.steps % so3::kRenormalizeEvery == 0;
    for (Body& b : w.bodies) {
        if (!b.is_dynamic()) continue;
        b.position += dt * b.velocity;
        if (b.rail) continue;
        b.attitude = so3::exp(b.angular_velocity * dt) * b.attitude;
        if (renormalize) b.attitude = so3::orthonormalize(b.attitude);
    }

    const auto second = detail::evaluate_loads(w, applied, h);
    accumulate();
    detail::kick(w, second, h);
    return report;
}

inline double kinetic_energy(const Body& b) {
    if (!b.is_dynamic()) return 0.0;
    return 0.5 * b.mass * b.velocity.squaredNorm() +
           0.5 * b.angular_velocity.dot(b.world_inertia() * b.angular_velocity);
}

/// Kinetic + gravitational potential of dynamic bodies plus penalty spring
/// energy of the stored contacts.
inline double mechanical_energy(const World& w) {
    double e = 0.0;
    for (const Body& b : w.bodies) {
        if (!b.is_dynamic()) continue;
        e += kinetic_energy(b) - b.mass * w.gravity.dot(b.position);
    }
    for (const Contact& c : detect_contacts(w.bodies)) {
        for (const auto& p : c.manifold) e += 0.5 * w.contact.stiffness * p.depth * p.depth;
    }
    return e;
}

// gripper ------------------------------------------------------------------

enum class GripperCommand { None, Latch, Release };

struct GripperState {
    std::optional<std::size_t> attached;
    double latch_distance = 0.05;  // m
    Vec3 offset_position = Vec3::Zero();
    Rot3 offset_attitude = Rot3::Identity();
};

struct EndEffector {
    Vec3 position = Vec3::Zero();
    Rot3 attitude = Rot3::Identity();
    Vec3 velocity = Vec3::Zero();
    Vec3 angular_velocity = Vec3::Zero();  // world frame
};

/// Places the attached body at end-effector pose composed with the latch
/// offset and gives it the end-effector's rigid velocity.
inline void apply_attachment(const GripperState& g, const EndEffector& ee, World& w) {
    if (!g.attached) return;
    Body& b = w.bodies[*g.attached];
    const Vec3 arm = ee.attitude * g.offset_position;
    b.position = ee.position + arm;
    b.attitude = ee.attitude * g.offset_attitude;
    b.velocity = ee.velocity + ee.angular_velocity.cross(arm);
    b.angular_velocity = ee.angular_velocity;
}

/// Latch attaches the nearest grippable body within the latch distance as a
/// fixed joint; release hands it back to the dynamics with its current twist.
inline GripperState gripper_update(const GripperState& g, const EndEffector& ee, World& w, GripperCommand cmd) {
    GripperState next = g;
    if (cmd == GripperCommand::Release) {
        if (g.attached) {
            Body& b = w.bodies[*g.attached];
            b.motion = Motion::Dynamic;
            b.attached = false;
            next.attached.reset();
        }
        return next;
    }
    if (cmd != GripperCommand::Latch || g.attached) return next;

    std::optional<std::size_t> best;
    double best_distance = g.latch_distance;
    for (std::size_t i = 0; i < w.bodies.size(); ++i) {
        const Body& b = w.bodies[i];
        if (!b.grippable || !b.is_dynamic()) continue;
        const double d = collision::distance_to_body(ee.position, b);
        if (d <= best_distance) {
            best_distance = d;
            best = i;
        }
    }
    if (!best) throw NothingInRange();
    Body& b = w.bodies[*best];
    b.motion = Motion::Kinematic;
    b.attached = true;
    next.attached = best;
    next.offset_position = ee.attitude.transpose() * (b.position - ee.position);
    next.offset_attitude = ee.attitude.transpose() * b.attitude;
    apply_attachment(next, ee, w);
    return next;
}

}  // namespace aerotele
