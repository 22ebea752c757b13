#include <sstream>

#include <gtest/gtest.h>

#include "aerotele/autopilot.hpp"
#include "aerotele/session.hpp"

using namespace aerotele;

namespace {

const std::string kDir = AEROTELE_SCENARIO_DIR;

ScenarioConfig push(std::vector<std::string> overrides = {}) {
    overrides.push_back("scenario.duration=3");
    return load_scenario_file(kDir + "/push.cfg", overrides);
}

protocol::Input forward(double x, GripperCommand g = GripperCommand::None) {
    protocol::Input in;
    in.p = Vec3(x, 0.0, 0.0);
    in.gripper = g;
    return in;
}

/// Drives toward the box, eases off, then backs away.
void scripted_push(Session& s) {
    while (!s.done()) {
        const auto t = s.tick();
        if (t % 10 == 0) s.submit(forward(t < 800 ? 1.0 : t < 1200 ? 0.3 : -0.5));
        s.step();
    }
}

std::string recorded(Session& s, std::stringstream& out) {
    scripted_push(s);
    return out.str();
}

}  // namespace

TEST(Session, IdleVehicleStaysExactlyPut) {
    SessionOptions opt;
    opt.emit_frames = false;
    Session s(push(), opt);
    const Vec3 start = s.vehicle().position;
    for (int i = 0; i < 1000; ++i) s.step();
    EXPECT_EQ(s.vehicle().position, start);
    EXPECT_EQ(s.vehicle().velocity, Vec3::Zero());
}

TEST(Session, TimeIsTickCountTimesTick) {
    Session s(push());
    for (int i = 0; i < 250; ++i) s.step();
    EXPECT_EQ(s.tick(), 250u);
    EXPECT_NEAR(s.time(), 0.5, 1e-12);
}

TEST(Session, RunsToDurationAndEnds) {
    std::stringstream out;
    SessionOptions opt;
    opt.record = &out;
    Session s(push(), opt);
    scripted_push(s);
    EXPECT_EQ(s.tick(), 1500u);
    EXPECT_EQ(s.end_reason(), "duration");
    ASSERT_TRUE(s.log().end);
    EXPECT_EQ(s.log().end->hash, s.state_hash());
    EXPECT_EQ(s.log().checkpoints.size(), 3u);
    s.step();
    EXPECT_EQ(s.tick(), 1500u);
}

TEST(Session, FrameCadence) {
    Session s(push());
    EXPECT_EQ(s.hello().tick_rate, 500.0);
    EXPECT_EQ(s.hello().bodies.back().name, "vehicle");
    int states = 0, feedback = 0;
    for (int i = 0; i < 100; ++i) {
        s.step();
        for (const auto& m : s.drain()) {
            states += std::holds_alternative<protocol::State>(m.payload);
            feedback += std::holds_alternative<protocol::Feedback>(m.payload);
        }
    }
    EXPECT_EQ(states, 20);
    EXPECT_EQ(feedback, 20);
}

TEST(Session, DelayShiftsInputsByFixedTicks) {
    SessionOptions opt;
    opt.delay_ticks = 50;
    opt.emit_frames = false;
    Session s(push(), opt);
    s.submit(forward(1.0));
    for (int i = 0; i < 50; ++i) {
        s.step();
        EXPECT_EQ(s.vehicle().velocity, Vec3::Zero());
    }
    s.step();
    EXPECT_GT(s.vehicle().velocity.x(), 0.0);
    ASSERT_EQ(s.log().inputs.size(), 1u);
    EXPECT_EQ(s.log().inputs[0].tick, 50u);
}

TEST(Session, InputTimeoutIdlesHandle) {
    SessionOptions opt;
    opt.input_timeout = 100;
    Session s(push(), opt);
    s.submit(forward(1.0));
    for (int i = 0; i < 150; ++i) s.step();
    EXPECT_EQ(s.handle().position, Vec3::Zero());
    ASSERT_EQ(s.session_events().size(), 1u);
    EXPECT_EQ(s.session_events()[0].kind, "input_timeout");
    EXPECT_EQ(s.session_events()[0].tick, 100u);
}

TEST(Session, LatchMissIsAnEvent) {
    Session s(push());
    s.submit(forward(0.0, GripperCommand::Latch));
    s.step();
    ASSERT_EQ(s.session_events().size(), 1u);
    EXPECT_EQ(s.session_events()[0].kind, "latch_miss");
    bool sent = false;
    for (const auto& m : s.drain()) {
        if (const auto* e = std::get_if<protocol::Event>(&m.payload)) sent = sent || e->name == "latch_miss";
    }
    EXPECT_TRUE(sent);
}

TEST(Session, GripperCommandSurvivesLaterHoldInSameTick) {
    Session s(push());
    s.submit(forward(0.0, GripperCommand::Latch));
    s.submit(forward(0.5));
    s.step();
    ASSERT_EQ(s.log().inputs.size(), 1u);
    EXPECT_EQ(s.log().inputs[0].input.gripper, GripperCommand::Latch);
    EXPECT_EQ(s.log().inputs[0].input.p.x(), 0.5);
}

TEST(Session, HapticsOnlyChangesFeedback) {
    SessionOptions opt;
    opt.emit_frames = false;
    Session h(push({"condition.haptics=H"}), opt);
    Session n(push({"condition.haptics=NoH"}), opt);
    bool feedback_differs = false;
    while (!h.done()) {
        const auto t = h.tick();
        if (t % 10 == 0) {
            h.submit(forward(t < 800 ? 1.0 : 0.2));
            n.submit(forward(t < 800 ? 1.0 : 0.2));
        }
        h.step();
        n.step();
        ASSERT_EQ(h.vehicle().position, n.vehicle().position) << "tick " << t;
        ASSERT_EQ(h.vehicle().attitude, n.vehicle().attitude) << "tick " << t;
        ASSERT_EQ(h.state_hash(), n.state_hash()) << "tick " << t;
        feedback_differs = feedback_differs || h.feedback().force != n.feedback().force;
    }
    // the vehicle reached the box, so the H feedback carried contact force
    EXPECT_TRUE(feedback_differs);
}

TEST(SessionLog, WriteReadWriteIsIdentical) {
    std::stringstream out;
    SessionOptions opt;
    opt.record = &out;
    opt.participant = "p07";
    opt.expertise = Expertise::E;
    Session s(push(), opt);
    const std::string text = recorded(s, out);
    std::stringstream in(text);
    const SessionLog log = logfmt::read(in);
    EXPECT_EQ(log.header.participant, "p07");
    EXPECT_EQ(log.header.expertise, Expertise::E);
    EXPECT_EQ(log.inputs.size(), s.log().inputs.size());
    std::stringstream again;
    logfmt::write(again, log);
    EXPECT_EQ(again.str(), text);
}

TEST(SessionLog, LineLayout) {
    std::stringstream out;
    SessionOptions opt;
    opt.record = &out;
    Session s(push(), opt);
    s.submit(forward(0.5));
    s.step();
    std::string header, input;
    std::getline(out, header);
    std::getline(out, input);
    EXPECT_EQ(header.rfind(R"({"type":"header","format":"aerotele-session")", 0), 0u);
    EXPECT_EQ(input.rfind(R"({"type":"input","tick":0,"p":[0.5,0.0,0.0],)", 0), 0u);
}

TEST(SessionLog, ReadErrors) {
    const auto read = [](const std::string& text) {
        std::stringstream ss(text);
        return logfmt::read(ss);
    };
    std::stringstream out;
    SessionOptions opt;
    opt.record = &out;
    Session s(push(), opt);
    s.submit(forward(0.5));
    s.step();
    s.end("client");
    const std::string good = out.str();
    EXPECT_NO_THROW(read(good));
    EXPECT_THROW(read(""), ProtocolError);
    EXPECT_THROW(read(good.substr(good.find('\n') + 1)), ProtocolError);  // no header
    EXPECT_THROW(read(good + R"({"type":"checkpoint","tick":5,"hash":"0000000000000000"})" + "\n"), ProtocolError);
    const std::size_t first = good.find('\n') + 1;
    try {
        read(good.substr(0, first) + "{oops\n");
        FAIL();
    } catch (const MalformedFrame& e) {
        EXPECT_GE(e.offset(), first);
        EXPECT_LE(e.offset(), first + 2);
    }
}

TEST(Replay, BitExactWithCheckpoints) {
    std::stringstream out;
    SessionOptions opt;
    opt.record = &out;
    Session s(push(), opt);
    std::stringstream in(recorded(s, out));
    const SessionLog log = logfmt::read(in);
    const ReplayResult r = replay(log, true);
    EXPECT_EQ(r.checkpoints_verified, 3u);
    EXPECT_EQ(r.final_hash, s.state_hash());
    EXPECT_EQ(r.vehicle.position, s.vehicle().position);
}

TEST(Replay, ReproducesTheLogText) {
    std::stringstream out;
    SessionOptions opt;
    opt.record = &out;
    Session s(push(), opt);
    const std::string text = recorded(s, out);
    std::stringstream in(text), again;
    replay(logfmt::read(in), true, &again);
    EXPECT_EQ(again.str(), text);
}

TEST(Replay, CorruptedInputIsDetected) {
    std::stringstream out;
    SessionOptions opt;
    opt.record = &out;
    Session s(push(), opt);
    std::stringstream in(recorded(s, out));
    SessionLog log = logfmt::read(in);
    // nudge one input between the first and second checkpoint
    for (auto& i : log.inputs) {
        if (i.tick == 600) i.input.p.x() += 1e-12;
    }
    try {
        replay(log, true);
        FAIL();
    } catch (const ChecksumMismatch& e) {
        EXPECT_EQ(e.tick(), 1000u);
        EXPECT_EQ(e.expected(), log.checkpoints[1].hash);
    }
    EXPECT_NO_THROW(replay(log, false));
}

TEST(Replay, OverridesAreReapplied) {
    std::stringstream out;
    SessionOptions opt;
    opt.record = &out;
    Session s(push({"coupling.max_velocity=0.4"}), opt);
    std::stringstream in(recorded(s, out));
    const SessionLog log = logfmt::read(in);
    EXPECT_EQ(log.header.overrides, (std::vector<std::string>{"coupling.max_velocity=0.4", "scenario.duration=3"}));
    EXPECT_EQ(replay(log, true).final_hash, s.state_hash());
}

TEST(Replay, EditedConfigIsDetected) {
    std::stringstream out;
    SessionOptions opt;
    opt.record = &out;
    Session s(push(), opt);
    std::stringstream in(recorded(s, out));
    const SessionLog log = logfmt::read(in);
    SessionLog edited = log;
    edited.header.config += "\n# edited\n";
    EXPECT_THROW(replay(edited, true), ChecksumMismatch);
    SessionLog dropped = log;
    dropped.header.overrides.pop_back();
    EXPECT_THROW(replay(dropped, true), ChecksumMismatch);
}

TEST(Replay, ClientEndedSession) {
    std::stringstream out;
    SessionOptions opt;
    opt.record = &out;
    Session s(push(), opt);
    s.submit(forward(1.0));
    for (int i = 0; i < 700; ++i) s.step();
    s.end("client");
    std::stringstream in(out.str());
    const ReplayResult r = replay(logfmt::read(in), true);
    EXPECT_EQ(r.status.ticks, 700u);
    EXPECT_EQ(r.final_hash, s.state_hash());
}

TEST(Replay, DelayedSessionReplaysWithoutDelay) {
    std::stringstream out;
    SessionOptions opt;
    opt.record = &out;
    opt.delay_ticks = 37;
    Session s(push(), opt);
    scripted_push(s);
    std::stringstream in(out.str());
    const SessionLog log = logfmt::read(in);
    EXPECT_EQ(log.header.delay_ticks, 37u);
    EXPECT_EQ(replay(log, true).final_hash, s.state_hash());
}

TEST(Abbt, ScriptedTransferCounts) {
    SessionOptions opt;
    opt.emit_frames = false;
    Session s(load_scenario_file(kDir + "/abbt.cfg", {"scenario.duration=20"}), opt);
    WaypointPilot pilot(abbt_path(s, 1));
    run_scripted(s, pilot);
    EXPECT_EQ(s.status().blocks_transferred, 1);
    const TrialRecord r = s.record();
    EXPECT_EQ(blocks_transferred(r), 1);
    ASSERT_TRUE(energy_per_block(r));
    EXPECT_GT(*energy_per_block(r), 0.0);
    int grasps = 0, releases = 0;
    for (const TaskEvent& e : s.status().events) {
        grasps += e.kind == "grasp";
        releases += e.kind == "release";
    }
    EXPECT_EQ(grasps, 1);
    EXPECT_EQ(releases, 1);
}
