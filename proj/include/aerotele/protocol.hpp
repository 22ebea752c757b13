#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

#include "aerotele/contact_world.hpp"
#include "aerotele/coupling.hpp"
#include "aerotele/errors.hpp"

// Wire protocol: one JSON object per WebSocket text frame,
//
//   {"v": 1, "kind": "<kind>", "tick": <uint>, "payload": {...}}
//
// Every object is field-exact: missing or extra keys are rejected. Vectors
// are arrays of 3 numbers, rotations arrays of 9 numbers in row-major order.
namespace aerotele::protocol {

inline constexpr int kVersion = 1;

using Json = nlohmann::ordered_json;

struct BodyInfo {
    std::string name;
    std::string shape;          // box | cylinder | plane | holed_plate | compound
    std::vector<double> dims;   // shape parameters in config order
    std::string motion;         // static | dynamic | kinematic
    bool grippable = false;

    friend bool operator==(const BodyInfo&, const BodyInfo&) = default;
};

/// Either side introduces itself. The server answers a console hello with its
/// own, carrying the scene.
struct Hello {
    std::string role;      // server | console
    std::string scenario;
    std::string task;
    std::string display;   // SC | MR
    std::string haptics;   // H | NoH
    double tick_rate = 500.0;  // Hz
    double duration = 0.0;     // s
    std::vector<BodyInfo> bodies;

    friend bool operator==(const Hello&, const Hello&) = default;
};

/// Full handle state plus a one-shot gripper command.
struct Input {
    Vec3 p = Vec3::Zero();
    Rot3 R = Rot3::Identity();
    Vec3 v = Vec3::Zero();
    GripperCommand gripper = GripperCommand::None;

    friend bool operator==(const Input& a, const Input& b) {
        return a.p == b.p && a.R == b.R && a.v == b.v && a.gripper == b.gripper;
    }
};

struct BodyPose {
    std::uint32_t id = 0;  // index into the hello body list
    Vec3 p = Vec3::Zero();
    Rot3 R = Rot3::Identity();

    friend bool operator==(const BodyPose& a, const BodyPose& b) { return a.id == b.id && a.p == b.p && a.R == b.R; }
};

struct State {
    double time = 0.0;
    Vec3 vehicle_p = Vec3::Zero();
    Rot3 vehicle_R = Rot3::Identity();
    Vec3 vehicle_v = Vec3::Zero();
    Vec3 reference_p = Vec3::Zero();
    Rot3 reference_R = Rot3::Identity();
    std::vector<BodyPose> bodies;  // dynamic and attached bodies only
    int blocks = 0;
    int partition_hits = 0;

    friend bool operator==(const State& a, const State& b) {
        return a.time == b.time && a.vehicle_p == b.vehicle_p && a.vehicle_R == b.vehicle_R &&
               a.vehicle_v == b.vehicle_v && a.reference_p == b.reference_p && a.reference_R == b.reference_R &&
               a.bodies == b.bodies && a.blocks == b.blocks && a.partition_hits == b.partition_hits;
    }
};

/// Handle-frame wrench; the external part is zero under NoH.
struct Feedback {
    Vec3 force = Vec3::Zero();
    Vec3 torque = Vec3::Zero();

    friend bool operator==(const Feedback& a, const Feedback& b) { return a.force == b.force && a.torque == b.torque; }
};

struct Event {
    std::string name;
    std::string detail;
    double time = 0.0;

    friend bool operator==(const Event&, const Event&) = default;
};

struct Tlx {
    std::array<double, 6> ratings{};
    std::array<int, 6> weights{};

    friend bool operator==(const Tlx&, const Tlx&) = default;
};

struct End {
    std::string reason;  // duration | client | timeout
    int blocks = 0;
    std::optional<double> energy;  // J/block, null when no block was moved
    double duration = 0.0;

    friend bool operator==(const End&, const End&) = default;
};

using Payload = std::variant<Hello, Input, State, Feedback, Event, Tlx, End>;

struct Message {
    std::uint64_t tick = 0;
    Payload payload;

    friend bool operator==(const Message&, const Message&) = default;
};

inline const char* kind_name(const Payload& p) {
    static constexpr const char* names[] = {"hello", "input", "state", "feedback", "event", "tlx", "end"};
    return names[p.index()];
}

inline const char* to_string(GripperCommand g) {
    switch (g) {
        case GripperCommand::Latch: return "latch";
        case GripperCommand::Release: return "release";
        default: return "none";
    }
}

namespace detail {

inline Json vec(const Vec3& v) { return Json::array({v.x(), v.y(), v.z()}); }

inline Json rot(const Rot3& r) {
    Json a = Json::array();
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) a.push_back(r(i, j));
    }
    return a;
}

/// Field-exact object access.
class Obj {
public:
    Obj(const Json& j, std::string where) : j_(j), where_(std::move(where)) {
        if (!j.is_object()) fail("expected an object");
    }

    void exact(std::initializer_list<const char*> keys) const {
        std::set<std::string> allowed(keys.begin(), keys.end());
        for (const auto& [k, _] : j_.items()) {
            if (!allowed.count(k)) fail("unexpected field '" + k + "'");
        }
        for (const char* k : keys) {
            if (!j_.contains(k)) fail("missing field '" + std::string(k) + "'");
        }
    }

    const Json& at(const char* key) const { return j_.at(key); }

    double number(const char* key) const {
        const Json& v = j_.at(key);
        if (!v.is_number()) fail(std::string(key) + " must be a number");
        return v.get<double>();
    }

    std::int64_t integer(const char* key) const {
        const Json& v = j_.at(key);
        if (!v.is_number_integer()) fail(std::string(key) + " must be an integer");
        return v.get<std::int64_t>();
    }

    std::string string(const char* key) const {
        const Json& v = j_.at(key);
        if (!v.is_string()) fail(std::string(key) + " must be a string");
        return v.get<std::string>();
    }

    bool boolean(const char* key) const {
        const Json& v = j_.at(key);
        if (!v.is_boolean()) fail(std::string(key) + " must be a boolean");
        return v.get<bool>();
    }

    template <int N>
    Eigen::Matrix<double, N, 1> numbers(const char* key) const {
        const Json& v = j_.at(key);
        if (!v.is_array() || v.size() != N) fail(std::string(key) + " must be an array of " + std::to_string(N));
        Eigen::Matrix<double, N, 1> out;
        for (int i = 0; i < N; ++i) {
            if (!v[i].is_number()) fail(std::string(key) + " must hold numbers");
            out[i] = v[i].get<double>();
        }
        return out;
    }

    Vec3 vec3(const char* key) const { return numbers<3>(key); }

    Rot3 rot3(const char* key) const {
        const auto flat = numbers<9>(key);
        Rot3 r;
        for (int i = 0; i < 3; ++i) {
            for (int j = 0; j < 3; ++j) r(i, j) = flat[3 * i + j];
        }
        return r;
    }

    [[noreturn]] void fail(const std::string& msg) const { throw ProtocolError(where_ + ": " + msg); }

private:
    const Json& j_;
    std::string where_;
};

inline Json to_json(const Hello& h) {
    Json bodies = Json::array();
    for (const auto& b : h.bodies) {
        bodies.push_back(
            {{"name", b.name}, {"shape", b.shape}, {"dims", b.dims}, {"motion", b.motion}, {"grippable", b.grippable}});
    }
    return {{"role", h.role},         {"scenario", h.scenario},   {"task", h.task},
            {"display", h.display},   {"haptics", h.haptics},     {"tick_rate", h.tick_rate},
            {"duration", h.duration}, {"bodies", std::move(bodies)}};
}

inline Json to_json(const Input& in) {
    return {{"p", vec(in.p)}, {"R", rot(in.R)}, {"v", vec(in.v)}, {"gripper", to_string(in.gripper)}};
}

inline Json to_json(const State& s) {
    Json bodies = Json::array();
    for (const auto& b : s.bodies) bodies.push_back({{"id", b.id}, {"p", vec(b.p)}, {"R", rot(b.R)}});
    return {{"time", s.time},
            {"vehicle", {{"p", vec(s.vehicle_p)}, {"R", rot(s.vehicle_R)}, {"v", vec(s.vehicle_v)}}},
            {"reference", {{"p", vec(s.reference_p)}, {"R", rot(s.reference_R)}}},
            {"bodies", std::move(bodies)},
            {"blocks", s.blocks},
            {"partition_hits", s.partition_hits}};
}

inline Json to_json(const Feedback& f) { return {{"force", vec(f.force)}, {"torque", vec(f.torque)}}; }

inline Json to_json(const Event& e) { return {{"name", e.name}, {"detail", e.detail}, {"time", e.time}}; }

inline Json to_json(const Tlx& t) { return {{"ratings", t.ratings}, {"weights", t.weights}}; }

inline Json to_json(const End& e) {
    return {{"reason", e.reason},
            {"blocks", e.blocks},
            {"energy", e.energy ? Json(*e.energy) : Json(nullptr)},
            {"duration", e.duration}};
}

inline GripperCommand parse_gripper(const std::string& s, const Obj& where) {
    if (s == "none") return GripperCommand::None;
    if (s == "latch") return GripperCommand::Latch;
    if (s == "release") return GripperCommand::Release;
    where.fail("gripper must be none, latch or release");
}

inline Hello hello_from(const Json& j) {
    const Obj o(j, "hello");
    o.exact({"role", "scenario", "task", "display", "haptics", "tick_rate", "duration", "bodies"});
    Hello h;
    h.role = o.string("role");
    if (h.role != "server" && h.role != "console") o.fail("role must be server or console");
    h.scenario = o.string("scenario");
    h.task = o.string("task");
    h.display = o.string("display");
    h.haptics = o.string("haptics");
    h.tick_rate = o.number("tick_rate");
    h.duration = o.number("duration");
    if (!o.at("bodies").is_array()) o.fail("bodies must be an array");
    for (const Json& b : o.at("bodies")) {
        const Obj ob(b, "hello.bodies[]");
        ob.exact({"name", "shape", "dims", "motion", "grippable"});
        BodyInfo info{ob.string("name"), ob.string("shape"), {}, ob.string("motion"), ob.boolean("grippable")};
        if (!ob.at("dims").is_array()) ob.fail("dims must be an array");
        for (const Json& d : ob.at("dims")) {
            if (!d.is_number()) ob.fail("dims must hold numbers");
            info.dims.push_back(d.get<double>());
        }
        h.bodies.push_back(std::move(info));
    }
    return h;
}

inline Input input_from(const Json& j) {
    const Obj o(j, "input");
    o.exact({"p", "R", "v", "gripper"});
    return {o.vec3("p"), o.rot3("R"), o.vec3("v"), parse_gripper(o.string("gripper"), o)};
}

inline State state_from(const Json& j) {
    const Obj o(j, "state");
    o.exact({"time", "vehicle", "reference", "bodies", "blocks", "partition_hits"});
    State s;
    s.time = o.number("time");
    const Obj v(o.at("vehicle"), "state.vehicle");
    v.exact({"p", "R", "v"});
    s.vehicle_p = v.vec3("p");
    s.vehicle_R = v.rot3("R");
    s.vehicle_v = v.vec3("v");
    const Obj r(o.at("reference"), "state.reference");
    r.exact({"p", "R"});
    s.reference_p = r.vec3("p");
    s.reference_R = r.rot3("R");
    if (!o.at("bodies").is_array()) o.fail("bodies must be an array");
    for (const Json& b : o.at("bodies")) {
        const Obj ob(b, "state.bodies[]");
        ob.exact({"id", "p", "R"});
        const auto id = ob.integer("id");
        if (id < 0 || id > UINT32_MAX) ob.fail("id out of range");
        s.bodies.push_back({static_cast<std::uint32_t>(id), ob.vec3("p"), ob.rot3("R")});
    }
    s.blocks = static_cast<int>(o.integer("blocks"));
    s.partition_hits = static_cast<int>(o.integer("partition_hits"));
    return s;
}

inline Feedback feedback_from(const Json& j) {
    const Obj o(j, "feedback");
    o.exact({"force", "torque"});
    return {o.vec3("force"), o.vec3("torque")};
}

inline Event event_from(const Json& j) {
    const Obj o(j, "event");
    o.exact({"name", "detail", "time"});
    return {o.string("name"), o.string("detail"), o.number("time")};
}

inline Tlx tlx_from(const Json& j) {
    const Obj o(j, "tlx");
    o.exact({"ratings", "weights"});
    Tlx t;
    const auto r = o.numbers<6>("ratings");
    const auto w = o.numbers<6>("weights");
    for (int i = 0; i < 6; ++i) {
        t.ratings[i] = r[i];
        if (w[i] != std::floor(w[i])) o.fail("weights must be integers");
        t.weights[i] = static_cast<int>(w[i]);
    }
    return t;
}

inline End end_from(const Json& j) {
    const Obj o(j, "end");
    o.exact({"reason", "blocks", "energy", "duration"});
    End e;
    e.reason = o.string("reason");
    e.blocks = static_cast<int>(o.integer("blocks"));
    if (!o.at("energy").is_null()) e.energy = o.number("energy");
    e.duration = o.number("duration");
    return e;
}

}  // namespace detail

inline Json to_json(const Message& m) {
    return {{"v", kVersion},
            {"kind", kind_name(m.payload)},
            {"tick", m.tick},
            {"payload", std::visit([](const auto& p) { return detail::to_json(p); }, m.payload)}};
}

inline std::string encode(const Message& m) { return to_json(m).dump(); }

/// Throws MalformedFrame on bad JSON (with the byte offset nlohmann reports)
/// and ProtocolError on a well-formed frame that breaks the schema.
inline Message decode(std::string_view frame) {
    Json j;
    try {
        j = Json::parse(frame);
    } catch (const Json::parse_error& e) {
        throw MalformedFrame(e.byte, e.what());
    }
    const detail::Obj o(j, "frame");
    o.exact({"v", "kind", "tick", "payload"});
    if (o.integer("v") != kVersion) o.fail("unsupported protocol version");
    const auto tick = o.integer("tick");
    if (tick < 0) o.fail("tick must be non-negative");
    Message m;
    m.tick = static_cast<std::uint64_t>(tick);
    const std::string kind = o.string("kind");
    const Json& p = o.at("payload");
    if (kind == "hello") m.payload = detail::hello_from(p);
    else if (kind == "input") m.payload = detail::input_from(p);
    else if (kind == "state") m.payload = detail::state_from(p);
    else if (kind == "feedback") m.payload = detail::feedback_from(p);
    else if (kind == "event") m.payload = detail::event_from(p);
    else if (kind == "tlx") m.payload = detail::tlx_from(p);
    else if (kind == "end") m.payload = detail::end_from(p);
    else o.fail("unknown kind '" + kind + "'");
    return m;
}

}  // namespace aerotele::protocol
