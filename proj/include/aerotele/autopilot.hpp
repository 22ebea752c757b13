#pragma once

#include <algorithm>
#include <optional>
#include <vector>

#include "aerotele/protocol.hpp"
#include "aerotele/session.hpp"

namespace aerotele {

/// Scripted input source standing in for an operator. Runs inside the session
/// loop, so its inputs go through submit() and land in the log like any
/// live input.
struct Waypoint {
    Vec3 target = Vec3::Zero();  // vehicle position
    GripperCommand on_arrival = GripperCommand::None;
    double tolerance = 0.02;     // m
    double dwell = 0.0;          // s held after arrival
};

class WaypointPilot {
public:
    WaypointPilot(std::vector<Waypoint> path, double gain = 2.0) : path_(std::move(path)), gain_(gain) {}

    bool finished() const { return index_ >= path_.size(); }
    std::size_t index() const { return index_; }

    protocol::Input next(const Session& s) {
        protocol::Input in;
        if (finished()) return in;
        const Waypoint& w = path_[index_];
        const double vmax = s.scenario().coupling.max_velocity;
        const Vec3 error = w.target - s.vehicle().position;
        if (!arrived_ && error.norm() < w.tolerance && s.vehicle().velocity.norm() < 0.05) {
            arrived_ = true;
            arrived_at_ = s.time();
            in.gripper = w.on_arrival;
        }
        if (arrived_) {
            if (s.time() - arrived_at_ >= w.dwell) {
                ++index_;
                arrived_ = false;
            }
            return in;
        }
        Vec3 rate = gain_ * error;
        if (rate.norm() > vmax) rate *= vmax / rate.norm();
        in.p = (rate / vmax).cwiseMax(-1.0).cwiseMin(1.0);
        return in;
    }

private:
    std::vector<Waypoint> path_;
    double gain_;
    std::size_t index_ = 0;
    bool arrived_ = false;
    double arrived_at_ = 0.0;
};

/// Pick-over-partition-place path for `transfers` blocks, taking the blocks
/// nearest the partition first and dropping each straight across it.
inline std::vector<Waypoint> abbt_path(const Session& s, int transfers) {
    const ScenarioConfig& sc = s.scenario();
    const World& w = s.world();
    const Body& partition = w.bodies[s.status().target];
    const double block_half = 0.0125 * sc.params.scale;
    const double tool = -sc.vehicle.tool_offset.z();
    const double cruise = sc.vehicle.position.z();

    std::vector<std::size_t> blocks = s.status().block_index;
    std::stable_sort(blocks.begin(), blocks.end(), [&](std::size_t a, std::size_t b) {
        return std::abs(w.bodies[a].position.x() - partition.position.x()) <
               std::abs(w.bodies[b].position.x() - partition.position.x());
    });
    std::vector<Waypoint> path;
    for (int i = 0; i < transfers && i < static_cast<int>(blocks.size()); ++i) {
        const Vec3 b = w.bodies[blocks[i]].position;
        const double grab_z = b.z() + block_half + tool + 0.02;
        // mirror across the partition, then place with the block just above the floor
        const Vec3 drop(2.0 * partition.position.x() - b.x(), b.y(), 0.0);
        const double place_z = block_half + 0.03 + (grab_z - b.z());
        path.push_back({{b.x(), b.y(), cruise}, GripperCommand::None, 0.05});
        path.push_back({{b.x(), b.y(), grab_z}, GripperCommand::Latch, 0.01, 0.1});
        path.push_back({{b.x(), b.y(), cruise}, GripperCommand::None, 0.05});
        path.push_back({{drop.x(), drop.y(), cruise}, GripperCommand::None, 0.05});
        path.push_back({{drop.x(), drop.y(), place_z}, GripperCommand::Release, 0.01, 0.1});
        path.push_back({{drop.x(), drop.y(), cruise}, GripperCommand::None, 0.05});
    }
    return path;
}

/// Steps the session to its end, asking `pilot` for an input every `period`
/// ticks.
template <class Pilot>
void run_scripted(Session& s, Pilot& pilot, std::uint64_t period = 8) {
    while (!s.done()) {
        if (s.tick() % period == 0) s.submit(pilot.next(s));
        s.step();
    }
}

/// Constant handle deflection, submitted every period.
struct ConstantPilot {
    protocol::Input input;
    protocol::Input next(const Session&) const { return input; }
};

}  // namespace aerotele
