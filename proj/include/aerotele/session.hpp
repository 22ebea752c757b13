#pragma once

#include <cstdint>
#include <cstdio>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "aerotele/contact_world.hpp"
#include "aerotele/coupling.hpp"
#include "aerotele/errors.hpp"
#include "aerotele/hash.hpp"
#include "aerotele/impedance.hpp"
#include "aerotele/metrics.hpp"
#include "aerotele/protocol.hpp"
#include "aerotele/scenario.hpp"

namespace aerotele {

inline constexpr const char* kSoftwareVersion = "0.1.0";

inline std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

inline std::uint64_t parse_hex64(const std::string& s) {
    if (s.size() != 16 || s.find_first_not_of("0123456789abcdef") != std::string::npos) {
        throw ProtocolError("expected 16 lowercase hex digits, got '" + s + "'");
    }
    return std::stoull(s, nullptr, 16);
}

// ---------------------------------------------------------------------------
// session log

struct LogHeader {
    std::string version = kSoftwareVersion;
    std::string scenario;
    std::uint64_t scenario_hash = 0;
    std::string config;  // scenario source
    std::vector<std::string> overrides;
    std::uint64_t seed = 0;
    Condition condition;
    std::string participant;
    Expertise expertise = Expertise::B;
    std::uint64_t delay_ticks = 0;
    std::uint64_t checkpoint_every = 500;
};

struct LoggedInput {
    std::uint64_t tick = 0;  // tick at which the input took effect
    protocol::Input input;
};

struct Checkpoint {
    std::uint64_t tick = 0;
    std::uint64_t hash = 0;
};

struct LogEnd {
    std::uint64_t tick = 0;
    std::string reason;
    int blocks = 0;
    std::uint64_t hash = 0;
};

/// Newline-delimited JSON: a header line, then input, checkpoint and end
/// records in tick order.
struct SessionLog {
    LogHeader header;
    std::vector<LoggedInput> inputs;
    std::vector<Checkpoint> checkpoints;
    std::optional<LogEnd> end;
};

namespace logfmt {

using Json = nlohmann::ordered_json;

inline std::string header_line(const LogHeader& h) {
    return Json{{"type", "header"},
                {"format", "aerotele-session"},
                {"version", h.version},
                {"scenario", h.scenario},
                {"scenario_hash", hex64(h.scenario_hash)},
                {"config", h.config},
                {"overrides", h.overrides},
                {"seed", h.seed},
                {"display", to_string(h.condition.display)},
                {"haptics", to_string(h.condition.haptics)},
                {"participant", h.participant},
                {"expertise", to_string(h.expertise)},
                {"delay_ticks", h.delay_ticks},
                {"checkpoint_every", h.checkpoint_every}}
        .dump();
}

inline std::string input_line(const LoggedInput& in) {
    Json j{{"type", "input"}, {"tick", in.tick}};
    const Json body = protocol::detail::to_json(in.input);
    for (const auto& [k, v] : body.items()) j[k] = v;
    return j.dump();
}

inline std::string checkpoint_line(const Checkpoint& c) {
    return Json{{"type", "checkpoint"}, {"tick", c.tick}, {"hash", hex64(c.hash)}}.dump();
}

inline std::string end_line(const LogEnd& e) {
    return Json{{"type", "end"}, {"tick", e.tick}, {"reason", e.reason}, {"blocks", e.blocks}, {"hash", hex64(e.hash)}}
        .dump();
}

inline void write(std::ostream& os, const SessionLog& log) {
    os << header_line(log.header) << '\n';
    std::size_t c = 0;
    for (const auto& in : log.inputs) {
        while (c < log.checkpoints.size() && log.checkpoints[c].tick <= in.tick) {
            os << checkpoint_line(log.checkpoints[c++]) << '\n';
        }
        os << input_line(in) << '\n';
    }
    while (c < log.checkpoints.size()) os << checkpoint_line(log.checkpoints[c++]) << '\n';
    if (log.end) os << end_line(*log.end) << '\n';
}

inline std::uint64_t tick_of(const protocol::detail::Obj& o) {
    const auto t = o.integer("tick");
    if (t < 0) o.fail("tick must be non-negative");
    return static_cast<std::uint64_t>(t);
}

/// Throws MalformedFrame for lines that are not JSON (offset counted from the
/// start of the file) and ProtocolError for schema or ordering violations.
inline SessionLog read(std::istream& in) {
    SessionLog log;
    std::string line;
    std::size_t offset = 0, line_no = 0;
    bool have_header = false;
    std::uint64_t last_tick = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::size_t start = offset;
        offset += line.size() + 1;
        if (line.empty()) continue;
        Json j;
        try {
            j = Json::parse(line);
        } catch (const Json::parse_error& e) {
            throw MalformedFrame(start + e.byte, "log line " + std::to_string(line_no));
        }
        const std::string where = "log line " + std::to_string(line_no);
        const protocol::detail::Obj o(j, where);
        const std::string type = o.string("type");
        if (!have_header) {
            if (type != "header") o.fail("first record must be the header");
            o.exact({"type", "format", "version", "scenario", "scenario_hash", "config", "overrides", "seed", "display",
                     "haptics", "participant", "expertise", "delay_ticks", "checkpoint_every"});
            if (o.string("format") != "aerotele-session") o.fail("not a session log");
            LogHeader& h = log.header;
            h.version = o.string("version");
            h.scenario = o.string("scenario");
            h.scenario_hash = parse_hex64(o.string("scenario_hash"));
            h.config = o.string("config");
            if (!o.at("overrides").is_array()) o.fail("overrides must be an array");
            for (const Json& ov : o.at("overrides")) {
                if (!ov.is_string()) o.fail("overrides must hold strings");
                h.overrides.push_back(ov.get<std::string>());
            }
            h.seed = static_cast<std::uint64_t>(o.integer("seed"));
            const auto d = parse_display(o.string("display"));
            const auto ha = parse_haptics(o.string("haptics"));
            const auto ex = parse_expertise(o.string("expertise"));
            if (!d || !ha || !ex) o.fail("bad condition or expertise");
            h.condition = {*d, *ha};
            h.expertise = *ex;
            h.participant = o.string("participant");
            h.delay_ticks = static_cast<std::uint64_t>(o.integer("delay_ticks"));
            h.checkpoint_every = static_cast<std::uint64_t>(o.integer("checkpoint_every"));
            have_header = true;
            continue;
        }
        if (log.end) o.fail("record after the end record");
        std::uint64_t tick = 0;
        if (type == "input") {
            o.exact({"type", "tick", "p", "R", "v", "gripper"});
            tick = tick_of(o);
            Json payload = j;
            payload.erase("type");
            payload.erase("tick");
            log.inputs.push_back({tick, protocol::detail::input_from(payload)});
        } else if (type == "checkpoint") {
            o.exact({"type", "tick", "hash"});
            tick = tick_of(o);
            log.checkpoints.push_back({tick, parse_hex64(o.string("hash"))});
        } else if (type == "end") {
            o.exact({"type", "tick", "reason", "blocks", "hash"});
            tick = tick_of(o);
            log.end = LogEnd{tick, o.string("reason"), static_cast<int>(o.integer("blocks")),
                             parse_hex64(o.string("hash"))};
        } else {
            o.fail("unknown record type '" + type + "'");
        }
        if (tick < last_tick) o.fail("ticks must be non-decreasing");
        last_tick = tick;
    }
    if (!have_header) throw ProtocolError("session log has no header");
    return log;
}

}  // namespace logfmt

// ---------------------------------------------------------------------------
// session

struct SessionOptions {
    std::string participant = "anonymous";
    Expertise expertise = Expertise::B;
    std::uint64_t delay_ticks = 0;       // fixed network delay injected on inputs
    std::uint64_t checkpoint_every = 500;  // 1 s at 500 Hz
    std::uint64_t feedback_every = 5;    // 100 Hz
    std::uint64_t state_every = 5;
    std::uint64_t input_timeout = 500;   // silent ticks before the handle is idled
    bool emit_frames = true;
    std::ostream* record = nullptr;      // NDJSON sink, flushed per record
};

/// One teleoperation trial: handle input -> coupling -> impedance dynamics ->
/// contact world -> task -> feedback, at a fixed tick. Time is the tick count
/// times the tick length; nothing reads the wall clock.
class Session {
public:
    explicit Session(ScenarioConfig sc, SessionOptions opt = {})
        : sc_(std::move(sc)), opt_(std::move(opt)), world_(build_world(sc_)) {
        sc_.coupling.validate();
        vehicle_index_ = *world_.find("vehicle");
        vehicle_.position = sc_.vehicle.position;
        vehicle_.attitude = sc_.vehicle.attitude;
        reference_.position = vehicle_.position;
        reference_.attitude = vehicle_.attitude;
        gripper_.latch_distance = sc_.vehicle.latch_distance;
        status_ = start_task(sc_, world_);
        observer_gain_ = sc_.observer_gain * Matrix6::Identity();
        substep_ = sc_.params.tick / sc_.params.substeps;

        log_.header.scenario = sc_.name;
        log_.header.config = sc_.source;
        log_.header.overrides = sc_.overrides;
        log_.header.scenario_hash = sc_.hash();
        log_.header.seed = sc_.seed;
        log_.header.condition = sc_.condition;
        log_.header.participant = opt_.participant;
        log_.header.expertise = opt_.expertise;
        log_.header.delay_ticks = opt_.delay_ticks;
        log_.header.checkpoint_every = opt_.checkpoint_every;
        emit_line(logfmt::header_line(log_.header));
        trajectory_.push_back({0.0, 0.0});
    }

    const ScenarioConfig& scenario() const { return sc_; }
    std::uint64_t tick() const { return status_.ticks; }
    double time() const { return status_.elapsed; }
    bool done() const { return status_.terminal || ended_; }
    const World& world() const { return world_; }
    const RigidState& vehicle() const { return vehicle_; }
    const ReferenceState& reference() const { return reference_; }
    const HandleState& handle() const { return handle_; }
    const GripperState& gripper() const { return gripper_; }
    const TaskStatus& status() const { return status_; }
    const SessionLog& log() const { return log_; }
    const std::vector<TaskEvent>& session_events() const { return session_events_; }
    /// Body-frame external wrench estimated by the observer.
    const Wrench6& external_estimate() const { return estimate_; }
    /// Body-frame wrench the world exerted on the vehicle during the last tick.
    const Wrench6& external_wrench() const { return external_; }
    const Wrench6& feedback() const { return feedback_; }

    /// End-effector pose and rigid velocity at the current vehicle state.
    EndEffector end_effector() const {
        EndEffector ee;
        const Vec3 arm = vehicle_.attitude * sc_.vehicle.tool_offset;
        ee.position = vehicle_.position + arm;
        ee.attitude = vehicle_.attitude;
        ee.angular_velocity = vehicle_.attitude * vehicle_.angular_velocity;
        ee.velocity = vehicle_.velocity + ee.angular_velocity.cross(arm);
        return ee;
    }

    /// Queues an input for tick() + delay. Later inputs for the same tick
    /// replace earlier ones, except that a gripper command is kept until a
    /// newer command replaces it.
    void submit(const protocol::Input& in) {
        const std::uint64_t at = tick() + opt_.delay_ticks;
        auto [it, fresh] = pending_.try_emplace(at, in);
        if (!fresh) {
            const GripperCommand kept = it->second.gripper;
            it->second = in;
            if (in.gripper == GripperCommand::None) it->second.gripper = kept;
        }
    }

    void end(std::string reason = "client") {
        if (done()) return;
        ended_ = true;
        end_reason_ = std::move(reason);
        finish();
    }

    void step() {
        if (done()) return;
        const std::uint64_t t = tick();
        const double dt = sc_.params.tick;

        // zero-order hold on the latest input
        GripperCommand command = GripperCommand::None;
        while (!pending_.empty() && pending_.begin()->first <= t) {
            const protocol::Input in = pending_.begin()->second;
            pending_.erase(pending_.begin());
            handle_ = clamp_handle({in.p, in.R, in.v});
            if (in.gripper != GripperCommand::None) command = in.gripper;
            last_input_tick_ = t;
            timed_out_ = false;
            LoggedInput logged{t, in};
            digest_input(logged);
            emit_line(logfmt::input_line(logged));
            log_.inputs.push_back(logged);
        }
        if (!timed_out_ && t - last_input_tick_ >= opt_.input_timeout) {
            handle_ = HandleState{};
            timed_out_ = true;
            session_event("input_timeout");
        }

        if (command != GripperCommand::None) {
            try {
                gripper_ = gripper_update(gripper_, end_effector(), world_, command);
                if (command == GripperCommand::Latch) attached_mass_ = world_.bodies[*gripper_.attached].mass;
            } catch (const NothingInRange&) {
                session_event("latch_miss");
            }
        }

        // reference and vehicle dynamics; the world wrench lags one tick
        reference_ = integrate_reference(reference_, handle_to_reference_rates(handle_, sc_.coupling), dt);
        const DynamicsStep ds = step_dynamics_detailed(vehicle_, reference_, external_, sc_.impedance, dt);
        const auto [obs, est] = estimate_external_wrench(observer_, ds.control_wrench,
                                                         body_velocity_change(vehicle_, ds),
                                                         sc_.impedance.inertia(), observer_gain_, dt);
        observer_ = obs;
        estimate_ = est;

        // the vehicle is kinematic in the world: sweep it along the step
        Reaction on_vehicle;
        const RigidState start = vehicle_;
        for (int k = 1; k <= sc_.params.substeps; ++k) {
            const double h = substep_ * k;
            Body& v = world_.bodies[vehicle_index_];
            v.position = start.position + h * ds.mid_velocity;
            v.attitude = so3::integrate_rotation(start.attitude, ds.mid_angular_velocity, h);
            v.velocity = ds.mid_velocity;
            v.angular_velocity = v.attitude * ds.mid_angular_velocity;
            if (gripper_.attached) {
                const Vec3 arm = v.attitude * sc_.vehicle.tool_offset;
                apply_attachment(gripper_, {v.position + arm, v.attitude, v.velocity + v.angular_velocity.cross(arm),
                                            v.angular_velocity},
                                 world_);
            }
            const StepReport report = step_world(world_, {}, substep_);
            accumulate(on_vehicle, report, v.position);
        }
        vehicle_ = ds.next;
        if ((t + 1) % so3::kRenormalizeEvery == 0) {
            vehicle_.attitude = so3::orthonormalize(vehicle_.attitude);
            reference_.attitude = so3::orthonormalize(reference_.attitude);
        }
        {
            // pin the world body to the exact integrated pose
            Body& v = world_.bodies[vehicle_index_];
            v.position = vehicle_.position;
            v.attitude = vehicle_.attitude;
        }
        const Vec3 force = on_vehicle.force / sc_.params.substeps;
        const Vec3 torque = on_vehicle.torque / sc_.params.substeps;
        external_ = {vehicle_.attitude.transpose() * force, vehicle_.attitude.transpose() * torque};

        const std::size_t before = status_.events.size();
        status_ = task_update(status_, world_, dt);
        for (std::size_t i = before; i < status_.events.size(); ++i) push_event(status_.events[i]);
        trajectory_.push_back({status_.elapsed, vehicle_.velocity.norm()});

        const std::uint64_t now = tick();
        if (now % opt_.feedback_every == 0) {
            feedback_ = compute_feedback();
            if (opt_.emit_frames) {
                outbox_.push_back({now, protocol::Feedback{feedback_.force, feedback_.torque}});
            }
        }
        if (opt_.emit_frames && now % opt_.state_every == 0) outbox_.push_back({now, state_frame()});
        if (now % opt_.checkpoint_every == 0) {
            const Checkpoint c{now, state_hash()};
            log_.checkpoints.push_back(c);
            emit_line(logfmt::checkpoint_line(c));
        }
        if (status_.terminal) {
            end_reason_ = "duration";
            finish();
        }
    }

    /// Feedback wrench for the handle: recentering plus the scaled observer
    /// estimate rotated into the world frame. NoH drops the external part.
    Wrench6 compute_feedback() const {
        Wrench6 ext;
        if (sc_.condition.haptics == Haptics::H) {
            ext = {vehicle_.attitude * estimate_.force, vehicle_.attitude * estimate_.torque};
        }
        return feedback_wrench(ext, handle_, sc_.coupling);
    }

    /// FNV-1a over the canonical simulation state. Feedback is excluded, so
    /// the haptics condition never changes a checkpoint.
    std::uint64_t state_hash() const {
        Fnv1a h;
        h.value(tick());
        for (const auto* m : {&vehicle_.position, &vehicle_.velocity, &vehicle_.angular_velocity, &reference_.position,
                              &reference_.velocity, &reference_.angular_velocity}) {
            h.matrix(*m);
        }
        h.matrix(vehicle_.attitude);
        h.matrix(reference_.attitude);
        h.matrix(observer_.integral);
        h.matrix(observer_.estimate);
        h.matrix(external_.stacked());
        h.matrix(handle_.position);
        h.matrix(handle_.attitude);
        h.matrix(handle_.velocity);
        h.value(gripper_.attached ? static_cast<std::int64_t>(*gripper_.attached) : std::int64_t{-1});
        h.matrix(gripper_.offset_position);
        h.matrix(gripper_.offset_attitude);
        for (const Body& b : world_.bodies) {
            h.value(static_cast<int>(b.motion));
            h.matrix(b.position);
            h.matrix(b.attitude);
            h.matrix(b.velocity);
            h.matrix(b.angular_velocity);
        }
        h.value(status_.blocks_transferred);
        h.value(status_.partition_hits);
        h.value(status_.insertions);
        h.value(static_cast<std::uint64_t>(status_.events.size()));
        h.value(input_digest_);
        return h.digest();
    }

    protocol::Hello hello() const {
        protocol::Hello h;
        h.role = "server";
        h.scenario = sc_.name;
        h.task = to_string(sc_.task);
        h.display = to_string(sc_.condition.display);
        h.haptics = to_string(sc_.condition.haptics);
        h.tick_rate = 1.0 / sc_.params.tick;
        h.duration = sc_.params.duration;
        for (const Body& b : world_.bodies) h.bodies.push_back(body_info(b));
        return h;
    }

    protocol::State state_frame() const {
        protocol::State s;
        s.time = status_.elapsed;
        s.vehicle_p = vehicle_.position;
        s.vehicle_R = vehicle_.attitude;
        s.vehicle_v = vehicle_.velocity;
        s.reference_p = reference_.position;
        s.reference_R = reference_.attitude;
        for (std::size_t i = 0; i < world_.bodies.size(); ++i) {
            const Body& b = world_.bodies[i];
            if (b.motion == Motion::Static || i == vehicle_index_) continue;
            s.bodies.push_back({static_cast<std::uint32_t>(i), b.position, b.attitude});
        }
        s.blocks = status_.blocks_transferred;
        s.partition_hits = status_.partition_hits;
        return s;
    }

    /// Outgoing frames since the last call.
    std::vector<protocol::Message> drain() { return std::exchange(outbox_, {}); }

    void set_tlx(const TlxResponse& r) {
        r.validate();
        tlx_ = r;
    }

    bool has_tlx() const { return tlx_.has_value(); }

    TrialRecord record() const {
        TrialRecord r;
        r.participant = opt_.participant;
        r.expertise = opt_.expertise;
        r.condition = sc_.condition;
        r.scenario = sc_.name;
        r.duration = sc_.params.duration;
        r.trajectory = trajectory_;
        for (const TaskEvent& e : status_.events) {
            if (e.kind == "transfer") r.transfer_times.push_back(e.time);
        }
        r.tlx = tlx_;
        // push, peg and training worlds count insertions or nothing
        if (sc_.task != TaskKind::Abbt) r.stored_n = status_.insertions;
        return r;
    }

    const std::string& end_reason() const { return end_reason_; }

private:
    static protocol::BodyInfo body_info(const Body& b) {
        protocol::BodyInfo info;
        info.name = b.name;
        info.motion = b.motion == Motion::Static ? "static" : b.motion == Motion::Dynamic ? "dynamic" : "kinematic";
        info.grippable = b.grippable;
        std::visit(
            [&](const auto& s) {
                using S = std::decay_t<decltype(s)>;
                if constexpr (std::is_same_v<S, BoxShape>) {
                    info.shape = "box";
                    info.dims = {s.half_extents.x(), s.half_extents.y(), s.half_extents.z()};
                } else if constexpr (std::is_same_v<S, CylinderShape>) {
                    info.shape = "cylinder";
                    info.dims = {s.radius, s.half_length};
                } else if constexpr (std::is_same_v<S, PlaneShape>) {
                    info.shape = "plane";
                } else if constexpr (std::is_same_v<S, HoledPlateShape>) {
                    info.shape = "holed_plate";
                    info.dims = {s.half_thickness, s.half_width, s.half_height, s.hole_radius};
                } else {
                    // per part: offset, row-major rotation, half extents
                    info.shape = "compound";
                    for (const auto& p : s.parts) {
                        info.dims.insert(info.dims.end(), p.offset.data(), p.offset.data() + 3);
                        for (int i = 0; i < 3; ++i) {
                            for (int j = 0; j < 3; ++j) info.dims.push_back(p.rotation(i, j));
                        }
                        info.dims.insert(info.dims.end(), p.half_extents.data(), p.half_extents.data() + 3);
                    }
                }
            },
            b.shape);
        return info;
    }

    /// Reactions on the vehicle and on a carried body, plus the carried
    /// body's weight, as one wrench about the vehicle origin.
    void accumulate(Reaction& total, const StepReport& report, const Vec3& origin) const {
        const Reaction& rv = report.reactions[vehicle_index_];
        total.force += rv.force;
        total.torque += rv.torque;
        if (gripper_.attached) {
            const Body& b = world_.bodies[*gripper_.attached];
            const Reaction& rb = report.reactions[*gripper_.attached];
            const Vec3 f = rb.force + attached_mass_ * world_.gravity;
            total.force += f;
            total.torque += rb.torque + (b.position - origin).cross(f);
        }
    }

    void digest_input(const LoggedInput& in) {
        Fnv1a h;
        h.value(input_digest_);
        h.value(in.tick);
        h.matrix(in.input.p);
        h.matrix(in.input.R);
        h.matrix(in.input.v);
        h.value(static_cast<int>(in.input.gripper));
        input_digest_ = h.digest();
    }

    void session_event(std::string kind, std::string detail = {}) {
        TaskEvent e{tick(), status_.elapsed, std::move(kind), std::move(detail)};
        session_events_.push_back(e);
        push_event(e);
    }

    void push_event(const TaskEvent& e) {
        if (opt_.emit_frames) outbox_.push_back({e.tick, protocol::Event{e.kind, e.detail, e.time}});
    }

    void emit_line(const std::string& line) {
        if (opt_.record) *opt_.record << line << '\n' << std::flush;
    }

    void finish() {
        LogEnd e{tick(), end_reason_, status_.blocks_transferred, state_hash()};
        log_.end = e;
        emit_line(logfmt::end_line(e));
        if (opt_.emit_frames) {
            const TrialRecord r = record();
            outbox_.push_back({tick(), protocol::End{end_reason_, blocks_transferred(r), energy_per_block(r),
                                                     status_.elapsed}});
        }
    }

    ScenarioConfig sc_;
    SessionOptions opt_;
    World world_;
    std::size_t vehicle_index_ = 0;
    double substep_ = 0.0;

    RigidState vehicle_;
    ReferenceState reference_;
    HandleState handle_;
    GripperState gripper_;
    double attached_mass_ = 0.0;
    ObserverState observer_;
    Matrix6 observer_gain_;
    Wrench6 estimate_;
    Wrench6 external_;
    Wrench6 feedback_;
    TaskStatus status_;

    std::map<std::uint64_t, protocol::Input> pending_;
    std::uint64_t last_input_tick_ = 0;
    bool timed_out_ = false;
    std::uint64_t input_digest_ = 0;

    bool ended_ = false;
    std::string end_reason_;
    std::vector<TaskEvent> session_events_;
    std::vector<TrajectorySample> trajectory_;
    std::optional<TlxResponse> tlx_;
    std::vector<protocol::Message> outbox_;
    SessionLog log_;
};

// ---------------------------------------------------------------------------
// replay

struct ReplayResult {
    TrialRecord record;
    TaskStatus status;
    std::uint64_t final_hash = 0;
    std::size_t checkpoints_verified = 0;
    RigidState vehicle;
};

/// Re-runs a logged session from its header. With `verify`, every checkpoint
/// and the end hash are compared and the first divergence throws
/// ChecksumMismatch. Optional `record` receives the re-recorded log.
inline ReplayResult replay(const SessionLog& log, bool verify, std::ostream* record = nullptr) {
    const std::uint64_t config = config_hash(log.header.config, log.header.overrides);
    if (verify && config != log.header.scenario_hash) throw ChecksumMismatch(0, log.header.scenario_hash, config);
    ScenarioConfig sc = load_scenario(log.header.config, log.header.overrides);
    sc.condition = log.header.condition;
    SessionOptions opt;
    opt.participant = log.header.participant;
    opt.expertise = log.header.expertise;
    opt.checkpoint_every = log.header.checkpoint_every;
    opt.emit_frames = false;
    opt.record = record;
    Session s(std::move(sc), opt);

    std::uint64_t last = 0;
    if (log.end) last = log.end->tick;
    else if (!log.checkpoints.empty()) last = log.checkpoints.back().tick;

    ReplayResult out;
    std::size_t next_input = 0, next_check = 0;
    while (s.tick() < last && !s.done()) {
        while (next_input < log.inputs.size() && log.inputs[next_input].tick <= s.tick()) {
            s.submit(log.inputs[next_input++].input);
        }
        s.step();
        while (next_check < log.checkpoints.size() && log.checkpoints[next_check].tick <= s.tick()) {
            const Checkpoint& c = log.checkpoints[next_check++];
            if (!verify) continue;
            const std::uint64_t actual = c.tick == s.tick() ? s.state_hash() : 0;
            if (actual != c.hash) throw ChecksumMismatch(c.tick, c.hash, actual);
            ++out.checkpoints_verified;
        }
    }
    if (log.end && log.end->reason != "duration" && !s.done()) s.end(log.end->reason);
    out.final_hash = s.state_hash();
    if (verify && log.end && (s.tick() != log.end->tick || out.final_hash != log.end->hash)) {
        throw ChecksumMismatch(s.tick(), log.end->hash, out.final_hash);
    }
    out.record = s.record();
    out.status = s.status();
    out.vehicle = s.vehicle();
    return out;
}

}  // namespace aerotele
