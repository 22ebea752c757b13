// Acceptance runner: one PASS/FAIL line per headline criterion. Exit status
// is the number of failures.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "aerotele/autopilot.hpp"
#include "aerotele/coupling.hpp"
#include "aerotele/impedance.hpp"
#include "aerotele/metrics.hpp"
#include "aerotele/session.hpp"
#include "aerotele/so3.hpp"
#include "aerotele/stats/anova.hpp"
#include "aerotele/stats/moods_median.hpp"
#include "aerotele/stats/shapiro_wilk.hpp"
#include "aerotele/stats/taguchi.hpp"
#include "aerotele/stats/tukey.hpp"
#include "oracles.hpp"

using namespace aerotele;
using namespace aerotele::stats;

namespace {

const std::string kDir = AEROTELE_SCENARIO_DIR;

struct Outcome {
    bool pass;
    std::string detail;
};

std::string fmt(const char* f, auto... args) {
    char buf[256];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Outcome impedance_step() {
    const auto t0 = std::chrono::steady_clock::now();
    const ImpedanceParams p = ImpedanceParams::diagonal(Vector6::Ones(), 2.0 * Vector6::Ones(), Vector6::Ones());
    RigidState s;
    s.position = {1, 0, 0};
    const double dt = 1e-3;
    double worst = 0.0;
    for (int i = 1; i <= 5000; ++i) {
        s = step_dynamics(s, ReferenceState{}, Wrench6{}, p, dt);
        const double t = i * dt;
        worst = std::max(worst, std::abs(s.position.x() - (1.0 + t) * std::exp(-t)));
    }
    const double secs = seconds_since(t0);
    return {worst < 1e-4 && secs < 1.0, fmt("max error %.3e (< 1e-4), runtime %.3f s (< 1 s)", worst, secs)};
}

Outcome static_balance() {
    const ImpedanceParams p = ImpedanceParams::defaults();
    RigidState s;
    const Wrench6 push{Vec3(5, 0, 0), Vec3::Zero()};
    for (int i = 0; i < 10000; ++i) s = step_dynamics(s, ReferenceState{}, push, p, 2e-3);
    const Vector6 expected = p.stiffness().llt().solve(push.stacked());
    const double err = (compute_errors(s, ReferenceState{}).pose() - expected).norm();
    return {err < 1e-6, fmt("|e - K^-1 f| = %.3e (< 1e-6)", err)};
}

Outcome so3_integrity() {
    std::mt19937_64 rng(2024);
    std::normal_distribution<double> n(0.0, 2.0);
    so3::AttitudeIntegrator integrator;
    Rot3 r = Rot3::Identity();
    double worst = 0.0;
    for (int i = 0; i < 100000; ++i) {
        r = integrator.step(r, Vec3(n(rng), n(rng), n(rng)), 2e-3);
        worst = std::max(worst, so3::orthonormality_error(r));
    }
    return {worst < 1e-9, fmt("max |RR^T - I| = %.3e over 1e5 steps (< 1e-9)", worst)};
}

Outcome coupling_constants() {
    const CouplingParams p;
    HandleState h;
    h.position = {1, 0, 0};
    const double v = handle_to_reference_rates(h, p).linear.x();
    h.position = Vec3::Zero();
    const double f_sat = feedback_wrench({Vec3(100, 0, 0), Vec3::Zero()}, h, p).force.x();
    const double f_lin = feedback_wrench({Vec3(6, 0, 0), Vec3::Zero()}, h, p).force.x();
    const bool ok = v == 0.15 && f_sat == 12.0 && f_lin == 6.0 / 3.0 && p.force_scale == 1.0 / 3.0;
    return {ok, fmt("v_ref %.6g m/s, clamp %.6g N, 6 N -> %.6g N", v, f_sat, f_lin)};
}

Outcome push_oracle() {
    const ScenarioConfig sc = load_scenario_file(kDir + "/push.cfg");
    World w = build_world(sc);
    std::size_t box = 0;
    while (w.bodies[box].name != "box") ++box;
    const Body& b = w.bodies[box];
    const double normal = b.mass * -sc.gravity.z();
    const double breakaway = b.static_friction * normal, kinetic = b.kinetic_friction * normal;
    std::vector<Wrench6> applied(w.bodies.size());
    applied[box].force = Vec3(6.0, 0, 0);
    const double x0 = b.position.x(), dt = 2e-3;
    double worst = 0.0;
    for (int i = 1; i <= 2500; ++i) {
        step_world(w, applied, dt);
        const double x = w.bodies[box].position.x() - x0;
        worst = std::max(worst, std::abs(x - oracle::coulomb_displacement(6.0, breakaway, kinetic, b.mass, i * dt)));
    }
    return {worst < 1e-2, fmt("static %.3f N, kinetic %.3f N, max deviation %.3e m over 5 s (< 1e-2)", breakaway,
                              kinetic, worst)};
}

Outcome peg_clearance() {
    const ScenarioConfig sc = load_scenario_file(kDir + "/peg.cfg");
    World w = build_world(sc);
    const std::size_t peg = w.bodies.size() - 1;
    std::size_t plate = 0;
    while (w.bodies[plate].name != "plate") ++plate;
    const double clearance = std::get<HoledPlateShape>(w.bodies[plate].shape).hole_radius -
                             std::get<CylinderShape>(w.bodies[peg].shape).radius;
    // peg straddles the plate, offset radially in the plate plane
    const auto touches = [&](double offset, double angle) {
        w.bodies[peg].position = w.bodies[plate].position + Vec3(0, offset * std::cos(angle), offset * std::sin(angle));
        for (const Contact& c : detect_contacts(w.bodies)) {
            if ((c.body_a == peg || c.body_b == peg) && c.depth > 0) return true;
        }
        return false;
    };
    bool ok = std::abs(clearance - 0.005) < 1e-12;
    int centered = 0, rim = 0;
    for (int k = 0; k < 8; ++k) {
        const double a = k * std::numbers::pi / 4;
        centered += touches(0.0, a);
        rim += touches(0.006, a);
        // geometric oracle: contact iff offset exceeds the clearance
        ok = ok && !touches(0.9 * clearance, a) && touches(1.1 * clearance, a);
    }
    ok = ok && centered == 0 && rim == 8;
    return {ok, fmt("clearance %.1f mm, centered contacts %d/8, 6 mm offset contacts %d/8", 1e3 * clearance, centered,
                    rim)};
}

Outcome determinism() {
    const ScenarioConfig sc = load_scenario_file(kDir + "/abbt.cfg");
    std::stringstream log_text;
    SessionOptions opt;
    opt.emit_frames = false;
    opt.record = &log_text;
    auto t0 = std::chrono::steady_clock::now();
    Session s(sc, opt);
    WaypointPilot pilot(abbt_path(s, 3));
    run_scripted(s, pilot);
    const double record_secs = seconds_since(t0);
    const std::uint64_t recorded = s.state_hash();
    const SessionLog log = logfmt::read(log_text);
    t0 = std::chrono::steady_clock::now();
    const ReplayResult r = replay(log, true);
    const double replay_secs = seconds_since(t0);
    const std::size_t seconds = static_cast<std::size_t>(std::llround(sc.params.duration));
    const bool ok = r.final_hash == recorded && r.checkpoints_verified == seconds && replay_secs < 10.0 &&
                    record_secs < 10.0 && sc.params.duration == 80.0;
    return {ok, fmt("%.0f s ABBT, N=%d, %zu/%zu checkpoints, record %.2f s, replay %.2f s (< 10 s)",
                    sc.params.duration, blocks_transferred(r.record), r.checkpoints_verified, seconds, record_secs,
                    replay_secs)};
}

Outcome metrics() {
    TrialRecord r;
    r.duration = 80.0;
    for (int i = 0; i <= 40000; ++i) r.trajectory.push_back({i * 0.002, 1.0});
    r.transfer_times = {10.0, 20.0};
    const double e = *energy_per_block(r);
    // closed form: m v^2 T / (2 N)
    const double closed = kOmavMass * 1.0 * 80.0 / (2.0 * 2);
    const double rel = std::abs(e - closed) / closed;
    return {rel < 1e-6 && kOmavMass == 4.82 && std::abs(closed - 96.4) < 1e-12,
            fmt("E = %.9f J (closed form %.1f), rel err %.2e, m = %.2f kg", e, closed, rel, kOmavMass)};
}

Outcome taguchi() {
    const TaguchiDesign d = l4_design();
    const char* table[4][3] = {{"SC", "NoH", "B"}, {"SC", "H", "E"}, {"MR", "NoH", "E"}, {"MR", "H", "B"}};
    bool layout = d.runs.size() == 4;
    for (std::size_t r = 0; layout && r < 4; ++r) {
        for (std::size_t f = 0; f < 3; ++f) layout = layout && d.level_names[f][d.runs[r][f]] == table[r][f];
    }
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(1.0, 9.0);
    double worst = 0.0;
    bool ranks = true;
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<std::vector<double>> y(4);
        for (auto& run : y) {
            for (int i = 0; i < 3; ++i) run.push_back(u(rng));
        }
        for (auto obj : {Objective::LargerIsBetter, Objective::SmallerIsBetter}) {
            const auto res = taguchi_analyze(d, y, obj);
            double delta[3];
            for (int f = 0; f < 3; ++f) {
                double m[2] = {0, 0}, s[2] = {0, 0};
                for (int run = 0; run < 4; ++run) {
                    const int level = std::string(table[run][f]) == (f == 0 ? "MR" : f == 1 ? "H" : "E");
                    double mean = 0, acc = 0;
                    for (double v : y[run]) {
                        mean += v / 3;
                        acc += (obj == Objective::LargerIsBetter ? 1.0 / (v * v) : v * v) / 3;
                    }
                    m[level] += mean / 2;
                    s[level] += -10.0 * std::log10(acc) / 2;
                }
                delta[f] = std::abs(m[1] - m[0]);
                for (int l = 0; l < 2; ++l) {
                    worst = std::max({worst, std::abs(res.means.levels[f][l] - m[l]),
                                      std::abs(res.snr.levels[f][l] - s[l])});
                }
                worst = std::max({worst, std::abs(res.means.delta[f] - delta[f]),
                                  std::abs(res.snr.delta[f] - std::abs(s[1] - s[0]))});
            }
            for (int f = 0; f < 3; ++f) {
                int rank = 1;
                for (int g = 0; g < 3; ++g) rank += delta[g] > delta[f] || (delta[g] == delta[f] && g < f);
                ranks = ranks && res.means.rank[f] == rank;
            }
        }
    }
    return {layout && ranks && worst < 1e-9,
            fmt("L4 layout %s, ranks %s, max deviation %.2e (< 1e-9)", layout ? "matches" : "differs",
                ranks ? "match" : "differ", worst)};
}

Outcome anova() {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> noise(0.0, 1.0);
    double worst_sum = 0.0, worst_f = 0.0, worst_p = 0.0;
    for (int trial = 0; trial < 10; ++trial) {
        const int n = 3 + trial % 4;
        std::vector<std::vector<std::vector<double>>> cells(2, std::vector<std::vector<double>>(2));
        for (int i = 0; i < 2; ++i) {
            for (int j = 0; j < 2; ++j) {
                for (int r = 0; r < n; ++r) cells[i][j].push_back(10 + 1.5 * i - 0.7 * j + 0.4 * i * j + noise(rng));
            }
        }
        // brute force from marginal means
        double g = 0, ma[2] = {0, 0}, mb[2] = {0, 0}, mc[2][2] = {};
        for (int i = 0; i < 2; ++i) {
            for (int j = 0; j < 2; ++j) {
                for (double y : cells[i][j]) {
                    g += y / (4.0 * n);
                    ma[i] += y / (2.0 * n);
                    mb[j] += y / (2.0 * n);
                    mc[i][j] += y / n;
                }
            }
        }
        double ss[3] = {0, 0, 0}, sse = 0;
        for (int i = 0; i < 2; ++i) {
            for (int j = 0; j < 2; ++j) {
                for (double y : cells[i][j]) {
                    ss[0] += (ma[i] - g) * (ma[i] - g);
                    ss[1] += (mb[j] - g) * (mb[j] - g);
                    ss[2] += (mc[i][j] - ma[i] - mb[j] + g) * (mc[i][j] - ma[i] - mb[j] + g);
                    sse += (y - mc[i][j]) * (y - mc[i][j]);
                }
            }
        }
        const double df_e = 4.0 * (n - 1);
        const auto r = anova_two_way(cells);
        worst_sum = std::max(worst_sum,
                             std::abs(r.a.ss + r.b.ss + r.interaction.ss + r.error.ss - r.total.ss) / r.total.ss);
        const AnovaRow* rows[3] = {&r.a, &r.b, &r.interaction};
        for (int k = 0; k < 3; ++k) {
            const double f = ss[k] / (sse / df_e);
            worst_f = std::max(worst_f, std::abs(rows[k]->f - f) / std::max(1.0, f));
            worst_p = std::max(worst_p, std::abs(rows[k]->p - oracle::f_sf_oracle(f, 1, df_e)));
        }
    }
    return {worst_sum < 1e-9 && worst_f < 1e-9 && worst_p < 1e-9,
            fmt("SS sum rel err %.2e (< 1e-9), F rel err %.2e, p abs err %.2e", worst_sum, worst_f, worst_p)};
}

Outcome tukey() {
    const double q = studentized_range_quantile(0.95, 2, INFINITY);
    const auto r = tukey_hsd({10.0, 10.2, 30.0, 30.1}, 1.0, 12, 4);
    bool disjoint = r.letters[0] == r.letters[1] && r.letters[2] == r.letters[3];
    for (char c : r.letters[0]) disjoint = disjoint && r.letters[2].find(c) == std::string::npos;
    return {std::abs(q - 2.772) <= 1e-3 && disjoint,
            fmt("q(0.05, 2, inf) = %.6f (2.772 +- 1e-3), letters %s %s %s %s", q, r.letters[0].c_str(),
                r.letters[1].c_str(), r.letters[2].c_str(), r.letters[3].c_str())};
}

Outcome shapiro_and_mood() {
    double worst_w = 0.0, worst_chi2 = 0.0;
    for (const auto& ref : oracle::kShapiroRefs) {
        worst_w = std::max(worst_w, std::abs(shapiro_wilk(oracle::fixed_sample(ref.seed, ref.n)).w - ref.w));
    }
    for (int seed = 1; seed <= 5; ++seed) {
        const auto groups = oracle::fixed_groups(seed);
        const double chi2 = moods_median(groups).chi2;
        worst_chi2 = std::max({worst_chi2, std::abs(chi2 - oracle::chi2_oracle(groups)),
                               std::abs(chi2 - oracle::kMoodChi2[seed - 1])});
    }
    return {worst_w < 1e-3 && worst_chi2 < 1e-9,
            fmt("5 seeds: max |dW| %.2e (< 1e-3), max |dchi2| %.2e (< 1e-9)", worst_w, worst_chi2)};
}

Outcome haptics_invariance() {
    // record under H, then re-run the same input log under NoH
    const ScenarioConfig h = load_scenario_file(kDir + "/push.cfg", {"scenario.duration=4", "condition.haptics=H"});
    std::stringstream text;
    SessionOptions opt;
    opt.emit_frames = false;
    opt.record = &text;
    Session s(h, opt);
    std::vector<std::pair<Vec3, Rot3>> trajectory;
    std::vector<Vec3> feedback;
    while (!s.done()) {
        const auto t = s.tick();
        if (t % 10 == 0) {
            protocol::Input in;
            in.p = Vec3(t < 1200 ? 1.0 : -0.5, 0, 0);
            s.submit(in);
        }
        s.step();
        trajectory.emplace_back(s.vehicle().position, s.vehicle().attitude);
        feedback.push_back(s.feedback().force);
    }
    SessionLog log = logfmt::read(text);
    log.header.condition.haptics = Haptics::NoH;
    ScenarioConfig n = load_scenario(log.header.config, log.header.overrides);
    n.condition = log.header.condition;
    SessionOptions nopt;
    nopt.emit_frames = false;
    Session replayed(n, nopt);
    std::size_t next = 0, mismatches = 0, k = 0, feedback_differs = 0;
    while (!replayed.done()) {
        while (next < log.inputs.size() && log.inputs[next].tick <= replayed.tick()) {
            replayed.submit(log.inputs[next++].input);
        }
        replayed.step();
        mismatches += k >= trajectory.size() || replayed.vehicle().position != trajectory[k].first ||
                      replayed.vehicle().attitude != trajectory[k].second;
        if (k < feedback.size()) feedback_differs += replayed.feedback().force != feedback[k];
        ++k;
    }
    const bool hash_equal = replayed.state_hash() == s.state_hash();
    // feedback must differ once the vehicle touches the box, or the check proves nothing
    return {feedback_differs > 0 && mismatches == 0 && k == trajectory.size() && hash_equal,
            fmt("%zu ticks, %zu mismatched poses, end hash %s, feedback differs on %zu ticks", k, mismatches,
                hash_equal ? "equal" : "differs", feedback_differs)};
}

}  // namespace

int main() {
    const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
        {"impedance step response", impedance_step},
        {"static force balance", static_balance},
        {"SO(3) integrity", so3_integrity},
        {"coupling constants", coupling_constants},
        {"push Coulomb oracle", push_oracle},
        {"peg clearance", peg_clearance},
        {"ABBT record/replay determinism", determinism},
        {"energy metric", metrics},
        {"Taguchi L4", taguchi},
        {"two-way ANOVA", anova},
        {"Tukey HSD", tukey},
        {"Shapiro-Wilk and Mood's median", shapiro_and_mood},
        {"haptics-off invariance", haptics_invariance},
    };
    int failed = 0;
    for (const auto& [name, run] : criteria) {
        Outcome o;
        try {
            o = run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failed += !o.pass;
        std::printf("%s %s: %s\n", o.pass ? "PASS" : "FAIL", name, o.detail.c_str());
        std::fflush(stdout);
    }
    return failed;
}
