#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "aerotele/so3.hpp"

namespace aerotele {

struct BoxShape {
    Vec3 half_extents = Vec3::Constant(0.5);
};

/// Axis along the local x axis, centered on the body origin.
struct CylinderShape {
    double radius = 0.02;
    double half_length = 0.1;
};

/// Half-space below the plane through the body origin with normal local +z.
struct PlaneShape {};

/// Flat plate with a circular through-hole. Hole axis and plate normal are
/// the local x axis; the front face is at local x = -half_thickness.
struct HoledPlateShape {
    double half_thickness = 0.01;
    double half_width = 0.3;   // local y
    double half_height = 0.3;  // local z
    double hole_radius = 0.025;
};

struct CompoundPart {
    Vec3 offset = Vec3::Zero();
    Rot3 rotation = Rot3::Identity();
    Vec3 half_extents = Vec3::Constant(0.5);
};

/// Rigid union of boxes.
struct CompoundShape {
    std::vector<CompoundPart> parts;
};

using Shape = std::variant<BoxShape, CylinderShape, PlaneShape, HoledPlateShape, CompoundShape>;

enum class Motion { Static, Dynamic, Kinematic };

/// Prismatic joint: position = origin + s * axis, attitude locked.
struct RailJoint {
    Vec3 origin = Vec3::Zero();
    Vec3 axis = Vec3::UnitX();
};

struct Body {
    std::string name;
    Shape shape = BoxShape{};
    Motion motion = Motion::Static;
    Vec3 position = Vec3::Zero();
    Rot3 attitude = Rot3::Identity();
    Vec3 velocity = Vec3::Zero();
    Vec3 angular_velocity = Vec3::Zero();  // world frame
    double mass = 1.0;
    Mat3 inertia = Mat3::Identity();  // body frame, about the center of mass
    double static_friction = 0.0;
    double kinetic_friction = 0.0;
    std::optional<RailJoint> rail;
    bool grippable = false;
    bool attached = false;

    bool is_dynamic() const { return motion == Motion::Dynamic; }

    Vec3 point_velocity(const Vec3& world_point) const {
        return velocity + angular_velocity.cross(world_point - position);
    }

    Mat3 world_inertia() const { return attitude * inertia * attitude.transpose(); }
};

inline Mat3 box_inertia(double mass, const Vec3& half_extents) {
    const Vec3 s = 2.0 * half_extents;
    const Vec3 sq = s.cwiseProduct(s);
    return (mass / 12.0 * Vec3(sq.y() + sq.z(), sq.x() + sq.z(), sq.x() + sq.y())).asDiagonal();
}

inline Mat3 cylinder_inertia(double mass, double radius, double half_length) {
    const double axial = 0.5 * mass * radius * radius;
    const double l = 2.0 * half_length;
    const double trans = mass * (3.0 * radius * radius + l * l) / 12.0;
    return Vec3(axial, trans, trans).asDiagonal();
}

struct ContactPoint {
    Vec3 point = Vec3::Zero();
    Vec3 normal = Vec3::UnitZ();  // from body b toward body a
    double depth = 0.0;
    double normal_force = 0.0;
};

/// All penetration between one body pair. `depth`/`normal` describe the
/// deepest manifold point; forces are filled in by the world step.
struct Contact {
    std::size_t body_a = 0;
    std::size_t body_b = 0;
    double depth = 0.0;
    Vec3 normal = Vec3::UnitZ();
    std::vector<ContactPoint> manifold;
    double normal_force = 0.0;
    Vec3 friction_force = Vec3::Zero();  // acting on a

    Vec3 total_force_on_a() const { return normal_force_vector() + friction_force; }

    Vec3 normal_force_vector() const {
        Vec3 f = Vec3::Zero();
        for (const auto& p : manifold) f += p.normal_force * p.normal;
        return f;
    }
};

namespace collision {

struct Pose {
    Vec3 position;
    Rot3 attitude;
};

inline std::array<Vec3, 8> box_corners(const Pose& pose, const Vec3& half) {
    std::array<Vec3, 8> c;
    for (int i = 0; i < 8; ++i) {
        const Vec3 local((i & 1) ? half.x() : -half.x(), (i & 2) ? half.y() : -half.y(),
                         (i & 4) ? half.z() : -half.z());
        c[static_cast<std::size_t>(i)] = pose.position + pose.attitude * local;
    }
    return c;
}

inline void box_plane(const Pose& box, const Vec3& half, const Pose& plane, std::vector<ContactPoint>& out) {
    const Vec3 n = plane.attitude.col(2);
    for (const Vec3& c : box_corners(box, half)) {
        const double depth = -n.dot(c - plane.position);
        if (depth > 0.0) out.push_back({c, n, depth});
    }
}

/// Corners of box A inside box B. Normals point out of B.
inline void corners_in_box(const Pose& a, const Vec3& half_a, const Pose& b, const Vec3& half_b, double sign,
                           std::vector<ContactPoint>& out) {
    for (const Vec3& c : box_corners(a, half_a)) {
        const Vec3 q = b.attitude.transpose() * (c - b.position);
        const Vec3 slack = half_b - q.cwiseAbs();
        if ((slack.array() <= 0.0).any()) continue;
        Eigen::Index axis = 0;
        slack.minCoeff(&axis);
        Vec3 local_n = Vec3::Zero();
        local_n(axis) = q(axis) >= 0.0 ? 1.0 : -1.0;
        out.push_back({c, sign * (b.attitude * local_n), slack(axis)});
    }
}

inline void box_box(const Pose& a, const Vec3& half_a, const Pose& b, const Vec3& half_b,
                    std::vector<ContactPoint>& out) {
    corners_in_box(a, half_a, b, half_b, 1.0, out);
    corners_in_box(b, half_b, a, half_a, -1.0, out);
}

/// Sphere against box; normal points from the box toward the sphere center.
inline std::optional<ContactPoint> sphere_box(const Vec3& center, double radius, const Pose& box, const Vec3& half) {
    const Vec3 q = box.attitude.transpose() * (center - box.position);
    const Vec3 closest = q.cwiseMax(-half).cwiseMin(half);
    const Vec3 d = q - closest;
    const double dist = d.norm();
    if (dist > 0.0) {
        if (dist >= radius) return std::nullopt;
        const Vec3 n = box.attitude * (d / dist);
        return ContactPoint{box.position + box.attitude * closest, n, radius - dist};
    }
    const Vec3 slack = half - q.cwiseAbs();
    Eigen::Index axis = 0;
    slack.minCoeff(&axis);
    Vec3 local_n = Vec3::Zero();
    local_n(axis) = q(axis) >= 0.0 ? 1.0 : -1.0;
    Vec3 surface = q;
    surface(axis) = local_n(axis) * half(axis);
    return ContactPoint{box.position + box.attitude * surface, box.attitude * local_n, radius + slack(axis)};
}

inline constexpr int kCylinderSamples = 9;

/// Cylinder treated as a swept sphere along its axis; reports the deepest sample.
inline void cylinder_box(const Pose& cyl, const CylinderShape& c, const Pose& box, const Vec3& half,
                         std::vector<ContactPoint>& out) {
    const Vec3 axis = cyl.attitude.col(0);
    std::optional<ContactPoint> best;
    for (int i = 0; i < kCylinderSamples; ++i) {
        const double s = -c.half_length + 2.0 * c.half_length * i / (kCylinderSamples - 1);
        const auto cp = sphere_box(cyl.position + s * axis, c.radius, box, half);
        if (cp && (!best || cp->depth > best->depth)) best = cp;
    }
    if (best) out.push_back(*best);
}

inline void cylinder_plane(const Pose& cyl, const CylinderShape& c, const Pose& plane, std::vector<ContactPoint>& out) {
    const Vec3 n = plane.attitude.col(2);
    const Vec3 axis = cyl.attitude.col(0);
    Vec3 perp = n - n.dot(axis) * axis;
    const double pn = perp.norm();
    perp = pn > 1e-12 ? Vec3(perp / pn) : Vec3::Zero();
    for (double s : {-c.half_length, c.half_length}) {
        const Vec3 rim = cyl.position + s * axis - c.radius * perp;
        const double depth = -n.dot(rim - plane.position);
        if (depth > 0.0) out.push_back({rim, n, depth});
    }
}

/// Cylinder (peg) against a holed plate. The peg is sampled as disks
/// perpendicular to its axis: a disk that has crossed the front face touches
/// the face unless it fits inside the hole; a straddling disk resolves along
/// the shallower of face and hole wall. Normals point from plate to peg.
inline void cylinder_holed_plate(const Pose& cyl, const CylinderShape& c, const Pose& plate, const HoledPlateShape& h,
                                 std::vector<ContactPoint>& out) {
    const Mat3 rt = plate.attitude.transpose();
    const Vec3 axis = rt * cyl.attitude.col(0);
    const Vec3 center = rt * (cyl.position - plate.position);
    const double clearance = h.hole_radius - c.radius;
    const double spacing = std::max(c.radius * 0.5, 1e-3);
    const int samples = std::max(2, static_cast<int>(std::ceil(2.0 * c.half_length / spacing)) + 1);
    for (int i = 0; i < samples; ++i) {
        // Both ends of the peg are candidate tips; plate face is -x.
        const double s = -c.half_length + 2.0 * c.half_length * i / (samples - 1);
        const Vec3 q = center + s * axis;
        const double past_face = q.x() + h.half_thickness;
        const double past_back = q.x() - h.half_thickness;
        if (past_face <= 0.0 || past_back >= 0.0) continue;
        if (std::abs(q.y()) > h.half_width + c.radius || std::abs(q.z()) > h.half_height + c.radius) continue;
        const double rho = std::hypot(q.y(), q.z());
        if (rho <= clearance) continue;
        const Vec3 radial = rho > 1e-12 ? Vec3(0.0, q.y() / rho, q.z() / rho) : Vec3(0.0, 1.0, 0.0);
        const double wall_depth = rho - clearance;
        const bool over_solid = rho >= h.hole_radius + c.radius;
        const Vec3 tip_point = q - c.radius * radial;
        if (over_solid || past_face < wall_depth) {
            // the shallower resolution is to back out of the face
            const Vec3 local_n(-1.0, 0.0, 0.0);
            const Vec3 point(-h.half_thickness, tip_point.y(), tip_point.z());
            out.push_back({plate.position + plate.attitude * point, plate.attitude * local_n, past_face});
        } else {
            const Vec3 point = Vec3(q.x(), 0.0, 0.0) + h.hole_radius * radial;
            out.push_back({plate.position + plate.attitude * point, plate.attitude * (-radial), wall_depth});
        }
    }
}

inline Pose compound_part_pose(const Pose& body, const CompoundPart& part) {
    return {body.position + body.attitude * part.offset, body.attitude * part.rotation};
}

inline double bounding_radius(const Shape& shape) {
    struct Visitor {
        double operator()(const BoxShape& b) const { return b.half_extents.norm(); }
        double operator()(const CylinderShape& c) const { return std::hypot(c.half_length, c.radius); }
        double operator()(const PlaneShape&) const { return std::numeric_limits<double>::infinity(); }
        double operator()(const HoledPlateShape& h) const {
            return Vec3(h.half_thickness, h.half_width, h.half_height).norm();
        }
        double operator()(const CompoundShape& c) const {
            double r = 0.0;
            for (const auto& p : c.parts) r = std::max(r, p.offset.norm() + p.half_extents.norm());
            return r;
        }
    };
    return std::visit(Visitor{}, shape);
}

/// Half-size of the world-aligned box around a shape; infinite for planes.
inline Vec3 aabb_half_extents(const Shape& shape, const Rot3& attitude) {
    const Mat3 abs = attitude.cwiseAbs();
    struct Visitor {
        const Mat3& abs;
        Vec3 operator()(const BoxShape& b) const { return abs * b.half_extents; }
        Vec3 operator()(const CylinderShape& c) const { return abs * Vec3(c.half_length, c.radius, c.radius); }
        Vec3 operator()(const PlaneShape&) const { return Vec3::Constant(std::numeric_limits<double>::infinity()); }
        Vec3 operator()(const HoledPlateShape& h) const {
            return abs * Vec3(h.half_thickness, h.half_width, h.half_height);
        }
        Vec3 operator()(const CompoundShape& c) const {
            double r = 0.0;
            for (const auto& p : c.parts) r = std::max(r, p.offset.norm() + p.half_extents.norm());
            return Vec3::Constant(r);
        }
    };
    return std::visit(Visitor{abs}, shape);
}

/// Manifold for shape pair (a, b) with normals from b toward a. Unsupported
/// pairs yield nothing.
inline void pair_manifold(const Shape& sa, const Pose& pa, const Shape& sb, const Pose& pb,
                          std::vector<ContactPoint>& out) {
    const auto flip_from = [&out](std::size_t first) {
        for (std::size_t i = first; i < out.size(); ++i) out[i].normal = -out[i].normal;
    };
    const auto* box_a = std::get_if<BoxShape>(&sa);
    const auto* box_b = std::get_if<BoxShape>(&sb);
    const auto* cyl_a = std::get_if<CylinderShape>(&sa);
    const auto* cyl_b = std::get_if<CylinderShape>(&sb);
    const auto* comp_a = std::get_if<CompoundShape>(&sa);
    const auto* comp_b = std::get_if<CompoundShape>(&sb);

    if (comp_a) {
        for (const auto& part : comp_a->parts) {
            pair_manifold(BoxShape{part.half_extents}, compound_part_pose(pa, part), sb, pb, out);
        }
        return;
    }
    if (comp_b) {
        for (const auto& part : comp_b->parts) {
            pair_manifold(sa, pa, BoxShape{part.half_extents}, compound_part_pose(pb, part), out);
        }
        return;
    }
    if (box_a && box_b) {
        box_box(pa, box_a->half_extents, pb, box_b->half_extents, out);
    } else if (box_a && std::holds_alternative<PlaneShape>(sb)) {
        box_plane(pa, box_a->half_extents, pb, out);
    } else if (box_b && std::holds_alternative<PlaneShape>(sa)) {
        const std::size_t first = out.size();
        box_plane(pb, box_b->half_extents, pa, out);
        flip_from(first);
    } else if (cyl_a && box_b) {
        cylinder_box(pa, *cyl_a, pb, box_b->half_extents, out);
    } else if (cyl_b && box_a) {
        const std::size_t first = out.size();
        cylinder_box(pb, *cyl_b, pa, box_a->half_extents, out);
        flip_from(first);
    } else if (cyl_a && std::holds_alternative<PlaneShape>(sb)) {
        cylinder_plane(pa, *cyl_a, pb, out);
    } else if (cyl_b && std::holds_alternative<PlaneShape>(sa)) {
        const std::size_t first = out.size();
        cylinder_plane(pb, *cyl_b, pa, out);
        flip_from(first);
    } else if (const auto* plate_b = std::get_if<HoledPlateShape>(&sb); cyl_a && plate_b) {
        cylinder_holed_plate(pa, *cyl_a, pb, *plate_b, out);
    } else if (const auto* plate_a = std::get_if<HoledPlateShape>(&sa); cyl_b && plate_a) {
        const std::size_t first = out.size();
        cylinder_holed_plate(pb, *cyl_b, pa, *plate_a, out);
        flip_from(first);
    }
}

/// Surface distance from a point to a body; zero when inside. Only boxes and
/// cylinders are meaningful gripper targets.
inline double distance_to_body(const Vec3& point, const Body& body) {
    if (const auto* b = std::get_if<BoxShape>(&body.shape)) {
        const Vec3 q = body.attitude.transpose() * (point - body.position);
        return (q - q.cwiseMax(-b->half_extents).cwiseMin(b->half_extents)).norm();
    }
    if (const auto* c = std::get_if<CylinderShape>(&body.shape)) {
        const Vec3 q = body.attitude.transpose() * (point - body.position);
        const double axial = std::max(std::abs(q.x()) - c->half_length, 0.0);
        const double radial = std::max(std::hypot(q.y(), q.z()) - c->radius, 0.0);
        return std::hypot(axial, radial);
    }
    return std::numeric_limits<double>::infinity();
}

}  // namespace collision

inline bool collides(const Body& a, const Body& b) {
    if (a.motion != Motion::Dynamic && b.motion != Motion::Dynamic) {
        // kinematic bodies (tool, carried blocks) still hit static geometry
        const bool one_kinematic = (a.motion == Motion::Kinematic) != (b.motion == Motion::Kinematic);
        if (!one_kinematic) return false;
    }
    // the rail carries a wheeled body's weight
    if ((a.rail && b.motion == Motion::Static) || (b.rail && a.motion == Motion::Static)) return false;
    return true;
}

/// Narrow phase over every colliding body pair, in index order. Reuses the
/// storage already held by `contacts`.
inline void detect_contacts(const std::vector<Body>& bodies, std::vector<Contact>& contacts) {
    thread_local std::vector<Vec3> extent;
    extent.resize(bodies.size());
    for (std::size_t i = 0; i < bodies.size(); ++i) {
        extent[i] = collision::aabb_half_extents(bodies[i].shape, bodies[i].attitude);
    }
    std::size_t count = 0;
    for (std::size_t i = 0; i < bodies.size(); ++i) {
        for (std::size_t j = i + 1; j < bodies.size(); ++j) {
            const Body& a = bodies[i];
            const Body& b = bodies[j];
            if (!collides(a, b)) continue;
            // world-aligned box overlap; infinite extents always pass
            if (((a.position - b.position).cwiseAbs() - extent[i] - extent[j]).maxCoeff() > 0.0) continue;
            if (count == contacts.size()) contacts.emplace_back();
            Contact& c = contacts[count];
            c.manifold.clear();
            collision::pair_manifold(a.shape, {a.position, a.attitude}, b.shape, {b.position, b.attitude}, c.manifold);
            if (c.manifold.empty()) continue;
            c.body_a = i;
            c.body_b = j;
            c.normal_force = 0.0;
            c.friction_force.setZero();
            const auto deepest = std::max_element(c.manifold.begin(), c.manifold.end(),
                                                  [](const auto& x, const auto& y) { return x.depth < y.depth; });
            c.depth = deepest->depth;
            c.normal = deepest->normal;
            ++count;
        }
    }
    contacts.resize(count);
}

inline std::vector<Contact> detect_contacts(const std::vector<Body>& bodies) {
    std::vector<Contact> contacts;
    detect_contacts(bodies, contacts);
    return contacts;
}

}  // namespace aerotele
