// aerotele: serve live sessions, replay and verify logs, analyse trial CSVs,
// and run scripted sessions headless.

#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "aerotele/autopilot.hpp"
#include "aerotele/metrics.hpp"
#include "aerotele/net/websocket_server.hpp"
#include "aerotele/scenario.hpp"
#include "aerotele/session.hpp"
#include "aerotele/stats/report.hpp"

namespace {

using namespace aerotele;

std::atomic<bool> g_stop{false};

void on_signal(int) { g_stop = true; }

Condition parse_condition(const std::string& text) {
    const auto comma = text.find(',');
    if (comma == std::string::npos) throw ValidationError("condition is <SC|MR>,<H|NoH>, got '" + text + "'");
    const auto d = parse_display(text.substr(0, comma));
    const auto h = parse_haptics(text.substr(comma + 1));
    if (!d || !h) throw ValidationError("condition is <SC|MR>,<H|NoH>, got '" + text + "'");
    return {*d, *h};
}

struct Common {
    std::string scenario;
    std::string condition;
    std::vector<std::string> overrides;
    std::string record;
    std::string trials;
    std::string participant = "anonymous";
    std::string expertise = "B";
    std::uint64_t delay = 0;
};

ScenarioConfig load(const Common& c) {
    ScenarioConfig sc = load_scenario_file(c.scenario, c.overrides);
    if (!c.condition.empty()) sc.condition = parse_condition(c.condition);
    return sc;
}

SessionOptions session_options(const Common& c) {
    SessionOptions o;
    o.participant = c.participant;
    const auto ex = parse_expertise(c.expertise);
    if (!ex) throw ValidationError("expertise is B or E");
    o.expertise = *ex;
    o.delay_ticks = c.delay;
    return o;
}

void add_common(CLI::App* app, Common& c, bool scenario_required) {
    auto* opt = app->add_option("--scenario", c.scenario, "scenario config file");
    if (scenario_required) opt->required()->check(CLI::ExistingFile);
    app->add_option("--condition", c.condition, "display and haptics, e.g. MR,H");
    app->add_option("--set", c.overrides, "config override section.key=value (repeatable)");
    app->add_option("--record", c.record, "write the session log here");
    app->add_option("--trials", c.trials, "append trial rows to this CSV");
    app->add_option("--participant", c.participant, "participant id for trial records");
    app->add_option("--expertise", c.expertise, "participant expertise B or E");
    app->add_option("--delay", c.delay, "injected input delay in ticks");
}

void print_summary(const TrialRecord& r, std::uint64_t ticks, std::uint64_t hash) {
    std::cout << "ticks " << ticks << "\nN " << blocks_transferred(r) << "\nE ";
    if (const auto e = energy_per_block(r)) std::cout << *e << " J/block\n";
    else std::cout << "undefined\n";
    std::cout << "state " << hex64(hash) << '\n';
}

int cmd_serve(Common& c, const std::string& listen, std::size_t max_sessions) {
    const ScenarioConfig sc = load(c);
    net::ServeOptions opt;
    std::tie(opt.host, opt.port) = net::parse_listen(listen);
    opt.record = c.record;
    opt.trials = c.trials;
    opt.session = session_options(c);
    opt.max_sessions = max_sessions;
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    net::serve(sc, opt, g_stop, [&](unsigned short port) {
        std::cout << "listening on ws://" << opt.host << ':' << port << " scenario " << sc.name << " condition "
                  << to_string(sc.condition.display) << ',' << to_string(sc.condition.haptics) << std::endl;
    });
    return 0;
}

int cmd_replay(const std::string& path, bool verify, const std::string& trials, const std::string& record) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    const SessionLog log = logfmt::read(in);
    std::ofstream out;
    if (!record.empty()) out.open(record);
    const auto t0 = std::chrono::steady_clock::now();
    const ReplayResult r = replay(log, verify, record.empty() ? nullptr : &out);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    print_summary(r.record, r.status.ticks, r.final_hash);
    if (verify) std::cout << "verified " << r.checkpoints_verified << " checkpoints\n";
    std::cout << "runtime " << secs << " s\n";
    if (!trials.empty()) net::TrialSink(trials).append(r.record);
    return 0;
}

int cmd_analyze(const std::string& csv, bool taguchi, bool anova, bool tlx, const std::string& format) {
    std::ifstream in(csv);
    if (!in) throw std::runtime_error("cannot open " + csv);
    const auto records = read_trial_csv(in);
    const auto f = format == "csv" ? stats::ReportFormat::Csv : stats::ReportFormat::Text;
    if (taguchi) std::cout << stats::taguchi_report(records, f);
    if (anova) std::cout << stats::anova_report(records, f);
    if (tlx) std::cout << stats::tlx_report(records, f);
    return 0;
}

/// Headless session with a scripted pilot: waypoints for ABBT, a constant
/// forward deflection for push and peg, an idle handle otherwise.
int cmd_simulate(Common& c, int transfers, double deflection) {
    const ScenarioConfig sc = load(c);
    SessionOptions opt = session_options(c);
    opt.emit_frames = false;
    std::ofstream out;
    if (!c.record.empty()) {
        out.open(c.record);
        if (!out) throw std::runtime_error("cannot open " + c.record);
        opt.record = &out;
    }
    Session s(sc, opt);
    if (sc.task == TaskKind::Abbt) {
        WaypointPilot pilot(abbt_path(s, transfers));
        run_scripted(s, pilot);
    } else if (sc.task == TaskKind::Push || sc.task == TaskKind::Peg) {
        ConstantPilot pilot;
        pilot.input.p = Vec3(deflection, 0.0, 0.0);
        run_scripted(s, pilot);
    } else {
        while (!s.done()) s.step();
    }
    const TrialRecord r = s.record();
    print_summary(r, s.tick(), s.state_hash());
    for (const TaskEvent& e : s.status().events) {
        std::cout << "event " << e.time << ' ' << e.kind << (e.detail.empty() ? "" : " " + e.detail) << '\n';
    }
    if (!c.trials.empty()) net::TrialSink(c.trials).append(r);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Aerial teleoperation sessions, replay and analysis"};
    app.require_subcommand(1);

    Common serve_opts;
    const char* env_listen = std::getenv("AEROTELE_LISTEN");
    std::string listen = env_listen ? env_listen : "127.0.0.1:8765";
    std::size_t max_sessions = 0;
    auto* serve = app.add_subcommand("serve", "run live sessions over WebSocket");
    add_common(serve, serve_opts, true);
    serve->add_option("--listen", listen, "host:port (default $AEROTELE_LISTEN or 127.0.0.1:8765)");
    serve->add_option("--max-sessions", max_sessions, "exit after this many sessions");

    std::string log_path, replay_trials, replay_record;
    bool verify = false;
    auto* rep = app.add_subcommand("replay", "re-run a session log");
    rep->add_option("log", log_path, "session log")->required()->check(CLI::ExistingFile);
    rep->add_flag("--verify", verify, "check every checkpoint and the end state");
    rep->add_option("--trials", replay_trials, "append the trial row to this CSV");
    rep->add_option("--record", replay_record, "write the re-run log here");

    std::string csv, format = "text";
    bool taguchi = false, anova = false, tlx = false;
    auto* an = app.add_subcommand("analyze", "statistics over a trial CSV");
    an->add_option("csv", csv, "trial CSV")->required()->check(CLI::ExistingFile);
    auto* g1 = an->add_flag("--taguchi", taguchi, "L4 main effects and SNR");
    auto* g2 = an->add_flag("--anova", anova, "ANOVA, Tukey grouping, normality and Mood's median");
    auto* g3 = an->add_flag("--tlx", tlx, "weighted NASA-TLX workload");
    an->add_option("--format", format, "text or csv")->check(CLI::IsMember({"text", "csv"}));
    (void)g1, (void)g2, (void)g3;

    Common sim_opts;
    int transfers = 3;
    double deflection = 0.5;
    auto* sim = app.add_subcommand("simulate", "run a scripted session headless");
    add_common(sim, sim_opts, true);
    sim->add_option("--transfers", transfers, "ABBT blocks the pilot moves");
    sim->add_option("--deflection", deflection, "push/peg handle deflection along x");

    CLI11_PARSE(app, argc, argv);
    try {
        if (*serve) return cmd_serve(serve_opts, listen, max_sessions);
        if (*rep) return cmd_replay(log_path, verify, replay_trials, replay_record);
        if (*an) {
            if (!taguchi && !anova && !tlx) throw ValidationError("pick at least one of --taguchi, --anova, --tlx");
            return cmd_analyze(csv, taguchi, anova, tlx, format);
        }
        if (*sim) return cmd_simulate(sim_opts, transfers, deflection);
    } catch (const ChecksumMismatch& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
