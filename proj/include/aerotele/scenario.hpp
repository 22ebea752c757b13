#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "aerotele/config.hpp"
#include "aerotele/contact_world.hpp"
#include "aerotele/coupling.hpp"
#include "aerotele/errors.hpp"
#include "aerotele/hash.hpp"
#include "aerotele/impedance.hpp"

namespace aerotele {

enum class TaskKind { Push, Peg, Abbt, Race, Catch, Golf };
enum class Display { SC, MR };
enum class Haptics { NoH, H };
enum class Expertise { B, E };

inline const char* to_string(TaskKind k) {
    switch (k) {
        case TaskKind::Push: return "push";
        case TaskKind::Peg: return "peg";
        case TaskKind::Abbt: return "abbt";
        case TaskKind::Race: return "race";
        case TaskKind::Catch: return "catch";
        case TaskKind::Golf: return "golf";
    }
    return "?";
}
inline const char* to_string(Display d) { return d == Display::SC ? "SC" : "MR"; }
inline const char* to_string(Haptics h) { return h == Haptics::H ? "H" : "NoH"; }
inline const char* to_string(Expertise e) { return e == Expertise::B ? "B" : "E"; }

inline std::optional<Display> parse_display(std::string_view s) {
    if (s == "SC") return Display::SC;
    if (s == "MR") return Display::MR;
    return std::nullopt;
}
inline std::optional<Haptics> parse_haptics(std::string_view s) {
    if (s == "H") return Haptics::H;
    if (s == "NoH") return Haptics::NoH;
    return std::nullopt;
}
inline std::optional<Expertise> parse_expertise(std::string_view s) {
    if (s == "B") return Expertise::B;
    if (s == "E") return Expertise::E;
    return std::nullopt;
}

struct Condition {
    Display display = Display::MR;
    Haptics haptics = Haptics::H;

    friend bool operator==(const Condition&, const Condition&) = default;
};

/// The vehicle's collision geometry and tool. The body itself is kinematic in
/// the world; its pose comes from the impedance dynamics.
struct VehicleConfig {
    Vec3 position = Vec3::Zero();
    Rot3 attitude = Rot3::Identity();
    Shape shape = BoxShape{Vec3(0.2, 0.2, 0.05)};
    Vec3 tool_offset = Vec3::Zero();  // end-effector in the body frame
    double latch_distance = 0.05;
    double friction = 0.0;
};

struct TaskParams {
    double duration = 60.0;  // s
    double tick = 0.002;     // s
    int substeps = 8;
    // push
    std::string push_body = "box";
    // peg
    std::string plate_body = "plate";
    double insertion_depth = 0.01;  // m past the front face
    // abbt
    double scale = 16.0;
    int blocks = 16;
    double block_mass = 0.5;
    double settle_speed = 1e-2;  // m/s
    double settle_time = 0.2;    // s
    std::string partition_body = "partition";
    double block_jitter = 0.0;   // m, seeded
};

/// Identity of a loaded config: the text plus each override, NUL separated.
inline std::uint64_t config_hash(std::string_view text, const std::vector<std::string>& overrides) {
    std::string all(text);
    for (const auto& o : overrides) {
        all.push_back('\0');
        all += o;
    }
    return fnv1a(all);
}

struct ScenarioConfig {
    std::string name;
    TaskKind task = TaskKind::Push;
    std::vector<Body> bodies;
    CouplingParams coupling;
    ImpedanceParams impedance = ImpedanceParams::defaults();
    double observer_gain = kDefaultObserverGain;
    ContactModel contact;
    Vec3 gravity = Vec3(0.0, 0.0, -9.81);
    VehicleConfig vehicle;
    TaskParams params;
    Condition condition;
    std::uint64_t seed = 1;
    /// Config text and overrides as loaded; session logs carry both.
    std::string source;
    std::vector<std::string> overrides;

    std::uint64_t hash() const { return config_hash(source, overrides); }
};

// ---------------------------------------------------------------------------
// loading

namespace detail {

/// Allowed keys per section kind.
inline const std::map<std::string, std::set<std::string>>& schema() {
    static const std::map<std::string, std::set<std::string>> s = {
        {"scenario", {"name", "task", "duration", "tick", "substeps", "seed"}},
        {"condition", {"display", "haptics"}},
        {"impedance", {"inertia", "damping", "stiffness", "observer_gain"}},
        {"coupling",
         {"max_velocity", "max_angular_rate", "recenter_translational", "recenter_rotational", "external_gain",
          "force_scale", "force_limit", "angular_mask"}},
        {"contact", {"stiffness", "damping", "slip_threshold", "gravity"}},
        {"vehicle",
         {"position", "rotation", "shape", "half_extents", "radius", "half_length", "tool_offset", "latch_distance",
          "friction"}},
        {"task", {"push_body", "plate_body", "insertion_depth", "settle_speed", "settle_time", "partition_body"}},
        {"abbt", {"scale", "blocks", "block_mass", "block_jitter"}},
        {"body",
         {"shape", "motion", "position", "rotation", "half_extents", "radius", "half_length", "half_thickness",
          "half_width", "half_height", "hole_radius", "mass", "mu_static", "mu_kinetic", "rail_axis", "grippable"}},
    };
    return s;
}

inline std::string section_kind(const std::string& section) {
    const std::size_t space = section.find(' ');
    return space == std::string::npos ? section : section.substr(0, space);
}

inline void check_schema(const config::Document& doc) {
    for (const auto& [section, line] : doc.sections) {
        const std::string kind = section_kind(section);
        if (!schema().contains(kind)) throw ParseError(line, section, "unknown section");
        if (kind == "body" && section == "body") throw ParseError(line, section, "body section needs a name");
    }
    for (const config::Entry& e : doc.entries) {
        const auto it = schema().find(section_kind(e.section));
        if (it == schema().end()) throw ParseError(e.line, e.field(), "unknown section");
        if (!it->second.contains(e.key)) throw ParseError(e.line, e.field(), "unknown key");
    }
}

class Reader {
public:
    Reader(const config::Document& doc, std::string section) : doc_(doc), section_(std::move(section)) {}

    const config::Entry* get(std::string_view key) const { return doc_.find(section_, key); }

    void scalar(std::string_view key, double& out) const {
        if (const auto* e = get(key)) out = config::to_scalar(*e);
    }
    void integer(std::string_view key, int& out) const {
        if (const auto* e = get(key)) out = static_cast<int>(config::to_integer(*e));
    }
    void vec3(std::string_view key, Vec3& out) const {
        if (const auto* e = get(key)) out = config::to_vec3(*e);
    }
    void text(std::string_view key, std::string& out) const {
        if (const auto* e = get(key)) out = e->value;
    }
    void flag(std::string_view key, bool& out) const {
        if (const auto* e = get(key)) out = config::to_bool(*e);
    }
    void rotation(std::string_view key, Rot3& out) const {
        if (const auto* e = get(key)) out = so3::exp(config::to_vec3(*e));
    }
    Vector6 vec6(std::string_view key, const Vector6& fallback) const {
        if (const auto* e = get(key)) return config::to_vector<6>(*e);
        return fallback;
    }

private:
    const config::Document& doc_;
    std::string section_;
};

inline Shape read_shape(const config::Entry* kind, const Reader& r, std::size_t line, const std::string& field) {
    const std::string name = kind ? kind->value : "box";
    const auto positive = [&](std::string_view key, double& v) {
        r.scalar(key, v);
        if (!(v > 0.0)) throw ValidationError(field + "." + std::string(key) + " > 0");
    };
    if (name == "box") {
        BoxShape b;
        r.vec3("half_extents", b.half_extents);
        if (!(b.half_extents.minCoeff() > 0.0)) throw ValidationError(field + ".half_extents > 0");
        return b;
    }
    if (name == "cylinder") {
        CylinderShape c;
        positive("radius", c.radius);
        positive("half_length", c.half_length);
        return c;
    }
    if (name == "plane") return PlaneShape{};
    if (name == "holed_plate") {
        HoledPlateShape h;
        positive("half_thickness", h.half_thickness);
        positive("half_width", h.half_width);
        positive("half_height", h.half_height);
        positive("hole_radius", h.hole_radius);
        return h;
    }
    throw ParseError(kind ? kind->line : line, field + ".shape", "unknown shape '" + name + "'");
}

inline Body read_body(const config::Document& doc, const std::string& section, std::size_t line) {
    const Reader r(doc, section);
    Body b;
    b.name = section.substr(section.find(' ') + 1);
    const std::string field = section;
    b.shape = read_shape(r.get("shape"), r, line, field);
    if (const auto* m = r.get("motion")) {
        if (m->value == "static") b.motion = Motion::Static;
        else if (m->value == "dynamic") b.motion = Motion::Dynamic;
        else throw ParseError(m->line, m->field(), "motion must be static or dynamic");
    }
    r.vec3("position", b.position);
    r.rotation("rotation", b.attitude);
    r.scalar("mass", b.mass);
    r.scalar("mu_static", b.static_friction);
    r.scalar("mu_kinetic", b.kinetic_friction);
    r.flag("grippable", b.grippable);
    if (const auto* a = r.get("rail_axis")) {
        const Vec3 axis = config::to_vec3(*a);
        if (!(axis.norm() > 0.0)) throw ValidationError(field + ".rail_axis nonzero");
        b.rail = RailJoint{b.position, axis.normalized()};
    }
    if (b.is_dynamic() && !(b.mass > 0.0)) throw ValidationError(field + ".mass > 0");
    if (b.static_friction < 0.0 || b.kinetic_friction < 0.0 || b.kinetic_friction > b.static_friction) {
        throw ValidationError(field + ": 0 <= mu_kinetic <= mu_static");
    }
    if (b.rail && !b.is_dynamic()) throw ValidationError(field + ": rail bodies must be dynamic");
    if (std::holds_alternative<PlaneShape>(b.shape) && b.is_dynamic()) {
        throw ValidationError(field + ": planes must be static");
    }
    if (const auto* box = std::get_if<BoxShape>(&b.shape)) b.inertia = box_inertia(b.mass, box->half_extents);
    if (const auto* cyl = std::get_if<CylinderShape>(&b.shape)) {
        b.inertia = cylinder_inertia(b.mass, cyl->radius, cyl->half_length);
    }
    return b;
}

/// Clinical Box-and-Blocks geometry (53.7 x 25.4 cm box, 8.5 cm walls,
/// 15.2 cm partition, 2.5 cm blocks) times `scale`. Blocks start in a grid
/// on the -x side; +x is the target side.
inline std::vector<Body> abbt_bodies(const TaskParams& p, std::uint64_t seed) {
    const double s = p.scale;
    const double length = 0.537 * s, width = 0.254 * s, wall = 0.085 * s, partition = 0.152 * s;
    const double thick = 0.01 * s, block = 0.0125 * s;
    std::vector<Body> out;
    const auto wall_box = [&](std::string name, Vec3 center, Vec3 half) {
        Body b;
        b.name = std::move(name);
        b.shape = BoxShape{half};
        b.position = center;
        out.push_back(std::move(b));
    };
    wall_box("wall_xn", {-0.5 * length - 0.5 * thick, 0, 0.5 * wall}, {0.5 * thick, 0.5 * width + thick, 0.5 * wall});
    wall_box("wall_xp", {0.5 * length + 0.5 * thick, 0, 0.5 * wall}, {0.5 * thick, 0.5 * width + thick, 0.5 * wall});
    wall_box("wall_yn", {0, -0.5 * width - 0.5 * thick, 0.5 * wall}, {0.5 * length, 0.5 * thick, 0.5 * wall});
    wall_box("wall_yp", {0, 0.5 * width + 0.5 * thick, 0.5 * wall}, {0.5 * length, 0.5 * thick, 0.5 * wall});
    wall_box(p.partition_body, {0, 0, 0.5 * partition}, {0.5 * thick, 0.5 * width, 0.5 * partition});

    // splitmix64 keeps the jitter identical on every platform
    std::uint64_t state = seed;
    const auto uniform = [&state] {
        std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        z ^= z >> 31;
        return static_cast<double>(z >> 11) * 0x1.0p-53 * 2.0 - 1.0;
    };
    const int per_row = std::max(1, static_cast<int>(std::ceil(std::sqrt(static_cast<double>(p.blocks)))));
    const int rows = (p.blocks + per_row - 1) / per_row;
    const double cell_x = (0.5 * length - 0.5 * thick) / per_row;
    const double cell_y = width / rows;
    if (cell_x < 2.0 * block || cell_y < 2.0 * block) throw ValidationError("abbt blocks fit in the start compartment");
    for (int i = 0; i < p.blocks; ++i) {
        Body b;
        b.name = "block_" + std::to_string(i);
        b.shape = BoxShape{Vec3::Constant(block)};
        b.motion = Motion::Dynamic;
        b.mass = p.block_mass;
        b.inertia = box_inertia(b.mass, Vec3::Constant(block));
        b.static_friction = 0.5;
        b.kinetic_friction = 0.4;
        b.grippable = true;
        const double slack_x = std::max(0.0, 0.5 * cell_x - block - 0.01);
        const double slack_y = std::max(0.0, 0.5 * cell_y - block - 0.01);
        const double jx = std::clamp(p.block_jitter * uniform(), -slack_x, slack_x);
        const double jy = std::clamp(p.block_jitter * uniform(), -slack_y, slack_y);
        b.position = {-0.5 * length + (i % per_row + 0.5) * cell_x + jx, -0.5 * width + (i / per_row + 0.5) * cell_y + jy,
                      block};
        out.push_back(std::move(b));
    }
    return out;
}

}  // namespace detail

inline ScenarioConfig load_scenario(std::string_view text, const std::vector<std::string>& overrides = {}) {
    config::Document doc = config::parse(text);
    for (const auto& o : overrides) config::apply_override(doc, o);
    detail::check_schema(doc);

    ScenarioConfig sc;
    sc.source = std::string(text);
    sc.overrides = overrides;

    const detail::Reader scen(doc, "scenario");
    scen.text("name", sc.name);
    const auto* task = scen.get("task");
    if (!task) throw ParseError(0, "scenario.task", "missing task");
    static const std::map<std::string, TaskKind> kinds = {{"push", TaskKind::Push}, {"peg", TaskKind::Peg},
                                                          {"abbt", TaskKind::Abbt}, {"race", TaskKind::Race},
                                                          {"catch", TaskKind::Catch}, {"golf", TaskKind::Golf}};
    if (!kinds.contains(task->value)) throw ParseError(task->line, task->field(), "unknown task '" + task->value + "'");
    sc.task = kinds.at(task->value);
    if (sc.task == TaskKind::Abbt) sc.params.duration = 80.0;
    scen.scalar("duration", sc.params.duration);
    scen.scalar("tick", sc.params.tick);
    scen.integer("substeps", sc.params.substeps);
    if (const auto* seed = scen.get("seed")) sc.seed = static_cast<std::uint64_t>(config::to_integer(*seed));

    const detail::Reader cond(doc, "condition");
    if (const auto* d = cond.get("display")) {
        const auto v = parse_display(d->value);
        if (!v) throw ParseError(d->line, d->field(), "display must be SC or MR");
        sc.condition.display = *v;
    }
    if (const auto* h = cond.get("haptics")) {
        const auto v = parse_haptics(h->value);
        if (!v) throw ParseError(h->line, h->field(), "haptics must be H or NoH");
        sc.condition.haptics = *v;
    }

    const detail::Reader imp(doc, "impedance");
    {
        const ImpedanceParams def = ImpedanceParams::defaults();
        const Vector6 m = imp.vec6("inertia", def.inertia().diagonal());
        const Vector6 d = imp.vec6("damping", def.damping().diagonal());
        const Vector6 k = imp.vec6("stiffness", def.stiffness().diagonal());
        try {
            sc.impedance = ImpedanceParams::diagonal(m, d, k);
        } catch (const Singular& e) {
            throw ValidationError(std::string("impedance: ") + e.what());
        }
        imp.scalar("observer_gain", sc.observer_gain);
    }

    const detail::Reader cpl(doc, "coupling");
    cpl.scalar("max_velocity", sc.coupling.max_velocity);
    cpl.scalar("max_angular_rate", sc.coupling.max_angular_rate);
    if (const auto* e = cpl.get("recenter_translational")) {
        sc.coupling.recenter_translational = config::to_vec3(*e).asDiagonal();
    }
    if (const auto* e = cpl.get("recenter_rotational")) {
        sc.coupling.recenter_rotational = config::to_vec3(*e).asDiagonal();
    }
    sc.coupling.external_gain = cpl.vec6("external_gain", sc.coupling.external_gain);
    cpl.scalar("force_scale", sc.coupling.force_scale);
    cpl.scalar("force_limit", sc.coupling.force_limit);
    // the ABBT keeps the vehicle orientation constant
    if (sc.task == TaskKind::Abbt) sc.coupling.angular_mask = Vec3::Zero();
    cpl.vec3("angular_mask", sc.coupling.angular_mask);
    try {
        sc.coupling.validate();
    } catch (const std::invalid_argument& e) {
        throw ValidationError(std::string("coupling: ") + e.what());
    }

    const detail::Reader con(doc, "contact");
    con.scalar("stiffness", sc.contact.stiffness);
    con.scalar("damping", sc.contact.damping);
    con.scalar("slip_threshold", sc.contact.slip_threshold);
    con.vec3("gravity", sc.gravity);

    const detail::Reader veh(doc, "vehicle");
    veh.vec3("position", sc.vehicle.position);
    veh.rotation("rotation", sc.vehicle.attitude);
    if (veh.get("shape") || veh.get("half_extents")) sc.vehicle.shape = detail::read_shape(veh.get("shape"), veh, 0, "vehicle");
    if (std::holds_alternative<PlaneShape>(sc.vehicle.shape) ||
        std::holds_alternative<HoledPlateShape>(sc.vehicle.shape)) {
        throw ValidationError("vehicle.shape is box or cylinder");
    }
    veh.vec3("tool_offset", sc.vehicle.tool_offset);
    veh.scalar("latch_distance", sc.vehicle.latch_distance);
    veh.scalar("friction", sc.vehicle.friction);

    const detail::Reader tsk(doc, "task");
    tsk.text("push_body", sc.params.push_body);
    tsk.text("plate_body", sc.params.plate_body);
    tsk.scalar("insertion_depth", sc.params.insertion_depth);
    tsk.scalar("settle_speed", sc.params.settle_speed);
    tsk.scalar("settle_time", sc.params.settle_time);
    tsk.text("partition_body", sc.params.partition_body);

    const detail::Reader abbt(doc, "abbt");
    abbt.scalar("scale", sc.params.scale);
    abbt.integer("blocks", sc.params.blocks);
    abbt.scalar("block_mass", sc.params.block_mass);
    abbt.scalar("block_jitter", sc.params.block_jitter);

    const TaskParams& p = sc.params;
    if (!(p.duration > 0.0)) throw ValidationError("task duration > 0");
    if (!(p.tick > 0.0 && p.tick <= 0.01)) throw ValidationError("tick in (0, 0.01]");
    if (p.substeps < 1) throw ValidationError("substeps >= 1");
    if (!(p.insertion_depth > 0.0)) throw ValidationError("insertion_depth > 0");
    if (!(p.settle_speed > 0.0)) throw ValidationError("settle_speed > 0");
    if (!(p.settle_time > 0.0)) throw ValidationError("settle_time > 0");
    if (!(sc.vehicle.latch_distance > 0.0)) throw ValidationError("latch_distance > 0");
    if (!(sc.observer_gain > 0.0)) throw ValidationError("observer_gain > 0");
    if (!(sc.contact.stiffness > 0.0) || sc.contact.damping < 0.0 || !(sc.contact.slip_threshold > 0.0)) {
        throw ValidationError("contact stiffness > 0, damping >= 0, slip_threshold > 0");
    }
    if (sc.task == TaskKind::Abbt) {
        if (!(p.scale > 0.0)) throw ValidationError("abbt scale > 0");
        if (p.blocks < 1) throw ValidationError("abbt blocks >= 1");
        if (!(p.block_mass > 0.0)) throw ValidationError("abbt block_mass > 0");
        if (p.block_jitter < 0.0) throw ValidationError("abbt block_jitter >= 0");
    }

    std::set<std::string> names;
    for (const auto& [section, line] : doc.sections) {
        if (detail::section_kind(section) != "body") continue;
        Body b = detail::read_body(doc, section, line);
        if (!names.insert(b.name).second) throw ParseError(line, section, "duplicate body name");
        sc.bodies.push_back(std::move(b));
    }
    if (sc.task == TaskKind::Abbt) {
        for (Body& b : detail::abbt_bodies(sc.params, sc.seed)) {
            if (!names.insert(b.name).second) throw ValidationError("body name '" + b.name + "' is reserved");
            sc.bodies.push_back(std::move(b));
        }
    }
    if (names.contains("vehicle")) throw ValidationError("body name 'vehicle' is reserved");
    const auto require = [&](const std::string& name, const char* what) {
        if (!names.contains(name)) throw ValidationError(std::string(what) + " body '" + name + "' exists");
    };
    if (sc.task == TaskKind::Push) require(p.push_body, "push");
    if (sc.task == TaskKind::Peg) {
        require(p.plate_body, "plate");
        if (!std::holds_alternative<CylinderShape>(sc.vehicle.shape)) throw ValidationError("peg vehicle is a cylinder");
    }
    return sc;
}

inline ScenarioConfig load_scenario_file(const std::string& path, const std::vector<std::string>& overrides = {}) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open scenario file " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return load_scenario(ss.str(), overrides);
}

/// World with the configured bodies plus the kinematic vehicle, named
/// "vehicle", as the last body.
inline World build_world(const ScenarioConfig& sc) {
    World w;
    w.bodies = sc.bodies;
    w.gravity = sc.gravity;
    w.contact = sc.contact;
    Body v;
    v.name = "vehicle";
    v.shape = sc.vehicle.shape;
    v.motion = Motion::Kinematic;
    v.position = sc.vehicle.position;
    v.attitude = sc.vehicle.attitude;
    v.mass = kOmavMass;
    v.static_friction = v.kinetic_friction = sc.vehicle.friction;
    w.bodies.push_back(std::move(v));
    return w;
}

// ---------------------------------------------------------------------------
// task logic

struct TaskEvent {
    std::uint64_t tick = 0;
    double time = 0.0;
    std::string kind;
    std::string detail;

    friend bool operator==(const TaskEvent&, const TaskEvent&) = default;
};

struct BlockTrack {
    bool attached = false;
    bool released = false;  // released by the gripper, not yet counted or regrasped
    double settled_for = 0.0;
    bool counted = false;

    friend bool operator==(const BlockTrack&, const BlockTrack&) = default;
};

struct TaskStatus {
    TaskKind kind = TaskKind::Push;
    std::uint64_t ticks = 0;
    std::uint64_t end_tick = 0;
    double elapsed = 0.0;
    std::vector<TaskEvent> events;
    int blocks_transferred = 0;
    int partition_hits = 0;
    int insertions = 0;
    bool terminal = false;

    // indices into the world
    std::size_t vehicle = 0;
    std::size_t target = 0;  // push box, peg plate or abbt partition

    // push
    Vec3 push_origin = Vec3::Zero();
    double displacement = 0.0;
    double peak_force = 0.0;
    double force_impulse = 0.0;  // integral of the pushing force
    double contact_time = 0.0;
    bool in_contact = false;

    // peg
    double insertion_depth = 0.01;
    double inside_time = 0.0;
    double tip_depth = 0.0;
    double peak_lateral_force = 0.0;
    bool inside = false;
    bool inserted = false;

    // abbt
    double settle_speed = 1e-2;
    double settle_time = 0.2;
    std::vector<std::size_t> block_index;
    std::vector<BlockTrack> blocks;
    bool partition_touch = false;

    double average_force() const { return contact_time > 0.0 ? force_impulse / contact_time : 0.0; }
};

inline TaskStatus start_task(const ScenarioConfig& sc, const World& w) {
    TaskStatus s;
    s.kind = sc.task;
    s.end_tick = static_cast<std::uint64_t>(std::llround(sc.params.duration / sc.params.tick));
    s.vehicle = *w.find("vehicle");
    s.insertion_depth = sc.params.insertion_depth;
    s.settle_speed = sc.params.settle_speed;
    s.settle_time = sc.params.settle_time;
    switch (sc.task) {
        case TaskKind::Push:
            s.target = *w.find(sc.params.push_body);
            s.push_origin = w.bodies[s.target].position;
            break;
        case TaskKind::Peg: s.target = *w.find(sc.params.plate_body); break;
        case TaskKind::Abbt:
            s.target = *w.find(sc.params.partition_body);
            for (std::size_t i = 0; i < w.bodies.size(); ++i) {
                if (w.bodies[i].grippable) s.block_index.push_back(i);
            }
            s.blocks.assign(s.block_index.size(), {});
            break;
        default: break;
    }
    return s;
}

namespace detail {

inline bool advance_clock(TaskStatus& s, double dt) {
    if (s.terminal) return false;
    ++s.ticks;
    s.elapsed = static_cast<double>(s.ticks) * dt;
    return true;
}

inline void finish_if_due(TaskStatus& s) {
    if (s.ticks >= s.end_tick) {
        s.terminal = true;
        s.events.push_back({s.ticks, s.elapsed, "end", ""});
    }
}

inline void log(TaskStatus& s, std::string kind, std::string detail = {}) {
    s.events.push_back({s.ticks, s.elapsed, std::move(kind), std::move(detail)});
}

/// Total normal force between bodies i and j in the last contact pass.
inline double pair_normal_force(const World& w, std::size_t i, std::size_t j, Vec3* force_on_j = nullptr) {
    double total = 0.0;
    Vec3 f = Vec3::Zero();
    for (const Contact& c : w.contacts) {
        if (!((c.body_a == i && c.body_b == j) || (c.body_a == j && c.body_b == i))) continue;
        total += c.normal_force;
        const Vec3 on_a = c.total_force_on_a();
        f += c.body_a == j ? on_a : Vec3(-on_a);
    }
    if (force_on_j) *force_on_j = f;
    return total;
}

inline bool touching(const World& w, std::size_t i, std::size_t j) {
    for (const Contact& c : w.contacts) {
        if ((c.body_a == i && c.body_b == j) || (c.body_a == j && c.body_b == i)) return true;
    }
    return false;
}

}  // namespace detail

/// Box displacement along the rail, pushing-force statistics and contact
/// make/break events.
inline TaskStatus push_task_update(TaskStatus s, const World& w, double dt) {
    if (!detail::advance_clock(s, dt)) return s;
    const Body& box = w.bodies[s.target];
    s.displacement = box.rail ? (box.position - s.push_origin).dot(box.rail->axis) : (box.position - s.push_origin).norm();
    const bool contact = detail::touching(w, s.vehicle, s.target);
    const double force = detail::pair_normal_force(w, s.vehicle, s.target);
    if (contact != s.in_contact) detail::log(s, contact ? "contact" : "release");
    s.in_contact = contact;
    if (contact) {
        s.peak_force = std::max(s.peak_force, force);
        s.force_impulse += force * dt;
        s.contact_time += dt;
    }
    detail::finish_if_due(s);
    return s;
}

/// Peg tip depth past the plate's front face, insertion events and the time
/// spent inside the hole.
inline TaskStatus peg_task_update(TaskStatus s, const World& w, double dt) {
    if (!detail::advance_clock(s, dt)) return s;
    const Body& peg = w.bodies[s.vehicle];
    const Body& plate = w.bodies[s.target];
    const auto& cyl = std::get<CylinderShape>(peg.shape);
    const auto& hole = std::get<HoledPlateShape>(plate.shape);
    const Vec3 tip = peg.position + peg.attitude.col(0) * cyl.half_length;
    const Vec3 local = plate.attitude.transpose() * (tip - plate.position);
    const double depth = local.x() + hole.half_thickness;
    const bool within = std::hypot(local.y(), local.z()) <= hole.hole_radius - cyl.radius + 1e-12;
    s.tip_depth = within ? std::max(depth, 0.0) : 0.0;
    const bool inside = within && depth > 0.0;
    if (inside) s.inside_time += dt;
    if (inside != s.inside) detail::log(s, inside ? "enter_hole" : "leave_hole");
    s.inside = inside;
    const bool inserted = inside && depth > s.insertion_depth;
    if (inserted && !s.inserted) {
        ++s.insertions;
        detail::log(s, "insertion");
    }
    s.inserted = inserted;

    Vec3 on_plate = Vec3::Zero();
    detail::pair_normal_force(w, s.vehicle, s.target, &on_plate);
    const Vec3 axis = plate.attitude.col(0);
    s.peak_lateral_force = std::max(s.peak_lateral_force, (on_plate - on_plate.dot(axis) * axis).norm());
    detail::finish_if_due(s);
    return s;
}

/// Counts a block once it has been released by the gripper and has rested
/// (speed below settle_speed for settle_time) with its center past the
/// partition plane on the +x side. Partition contacts by the vehicle or a
/// carried block are logged as hits without affecting the score.
inline TaskStatus abbt_update(TaskStatus s, const World& w, double dt) {
    if (!detail::advance_clock(s, dt)) return s;
    const Body& partition = w.bodies[s.target];
    const Vec3 normal = partition.attitude.col(0);

    bool touch = detail::touching(w, s.vehicle, s.target);
    for (std::size_t k = 0; k < s.blocks.size(); ++k) {
        const std::size_t idx = s.block_index[k];
        const Body& b = w.bodies[idx];
        BlockTrack& t = s.blocks[k];
        if (b.attached) touch = touch || detail::touching(w, idx, s.target);
        if (b.attached && !t.attached) {
            t.released = false;
            t.settled_for = 0.0;
            detail::log(s, "grasp", b.name);
        } else if (!b.attached && t.attached) {
            t.released = true;
            t.settled_for = 0.0;
            detail::log(s, "release", b.name);
        }
        t.attached = b.attached;
        if (!t.released || t.counted) continue;

        const bool slow = b.velocity.norm() < s.settle_speed && b.angular_velocity.norm() < s.settle_speed * 10.0;
        t.settled_for = slow ? t.settled_for + dt : 0.0;
        if (t.settled_for + 1e-12 < s.settle_time) continue;
        t.released = false;
        if ((b.position - partition.position).dot(normal) > 0.0) {
            t.counted = true;
            ++s.blocks_transferred;
            detail::log(s, "transfer", b.name);
        } else {
            detail::log(s, "settle_start_side", b.name);
        }
    }
    if (touch && !s.partition_touch) {
        ++s.partition_hits;
        detail::log(s, "partition_hit");
    }
    s.partition_touch = touch;
    detail::finish_if_due(s);
    return s;
}

/// Training worlds have no scoring; only the clock runs.
inline TaskStatus timer_update(TaskStatus s, const World&, double dt) {
    if (!detail::advance_clock(s, dt)) return s;
    detail::finish_if_due(s);
    return s;
}

inline TaskStatus task_update(const TaskStatus& s, const World& w, double dt) {
    switch (s.kind) {
        case TaskKind::Push: return push_task_update(s, w, dt);
        case TaskKind::Peg: return peg_task_update(s, w, dt);
        case TaskKind::Abbt: return abbt_update(s, w, dt);
        default: return timer_update(s, w, dt);
    }
}

}  // namespace aerotele
