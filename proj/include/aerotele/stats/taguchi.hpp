#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "aerotele/errors.hpp"

namespace aerotele::stats {

enum class Objective { LargerIsBetter, SmallerIsBetter };

inline const char* to_string(Objective o) {
    return o == Objective::LargerIsBetter ? "larger-is-better" : "smaller-is-better";
}

/// Two-level orthogonal array; levels are 0 and 1.
struct TaguchiDesign {
    std::vector<std::string> factors;
    std::vector<std::array<std::string, 2>> level_names;
    std::vector<std::vector<int>> runs;  // runs x factors
};

/// L4(2^3) with display, haptics and expertise columns:
/// 1 SC NoH B, 2 SC H E, 3 MR NoH E, 4 MR H B.
inline TaguchiDesign l4_design() {
    return {{"Display", "Haptics", "Expertise"},
            {{{"SC", "MR"}}, {{"NoH", "H"}}, {{"B", "E"}}},
            {{0, 0, 0}, {0, 1, 1}, {1, 0, 1}, {1, 1, 0}}};
}

/// Per-factor level averages of one statistic with its Delta and Rank.
struct ResponseTable {
    std::vector<std::array<double, 2>> levels;  // per factor
    std::vector<double> delta;
    std::vector<int> rank;  // 1 = largest Delta; ties keep factor order
};

struct TaguchiResult {
    Objective objective = Objective::LargerIsBetter;
    std::vector<double> run_mean;
    std::vector<double> run_snr;
    std::vector<double> run_stdev;  // NaN when a run has one replicate
    ResponseTable means;
    ResponseTable snr;
    std::optional<ResponseTable> stdev;  // only when every run is replicated
};

/// -10 log10(mean(1/y^2)) or -10 log10(mean(y^2)).
inline double signal_to_noise(const std::vector<double>& y, Objective o) {
    double acc = 0.0;
    for (double v : y) {
        if (o == Objective::LargerIsBetter) {
            if (!(v > 0.0)) throw NonPositive();
            acc += 1.0 / (v * v);
        } else {
            acc += v * v;
        }
    }
    return -10.0 * std::log10(acc / static_cast<double>(y.size()));
}

namespace detail {

inline double mean(const std::vector<double>& y) {
    return std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size());
}

inline double sample_stdev(const std::vector<double>& y) {
    if (y.size() < 2) return std::nan("");
    const double m = mean(y);
    double ss = 0.0;
    for (double v : y) ss += (v - m) * (v - m);
    return std::sqrt(ss / static_cast<double>(y.size() - 1));
}

inline ResponseTable response_table(const TaguchiDesign& d, const std::vector<double>& per_run) {
    ResponseTable t;
    const std::size_t nf = d.factors.size();
    for (std::size_t f = 0; f < nf; ++f) {
        std::array<double, 2> sum{0.0, 0.0};
        std::array<int, 2> count{0, 0};
        for (std::size_t r = 0; r < d.runs.size(); ++r) {
            sum[d.runs[r][f]] += per_run[r];
            ++count[d.runs[r][f]];
        }
        t.levels.push_back({sum[0] / count[0], sum[1] / count[1]});
        t.delta.push_back(std::abs(t.levels.back()[1] - t.levels.back()[0]));
    }
    std::vector<std::size_t> order(nf);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return t.delta[a] > t.delta[b]; });
    t.rank.assign(nf, 0);
    for (std::size_t i = 0; i < nf; ++i) t.rank[order[i]] = static_cast<int>(i) + 1;
    return t;
}

}  // namespace detail

/// Main-effects analysis. `responses[r]` holds the replicates of run r.
inline TaguchiResult taguchi_analyze(const TaguchiDesign& design, const std::vector<std::vector<double>>& responses,
                                     Objective objective) {
    if (responses.size() < design.runs.size()) throw MissingRun(static_cast<int>(responses.size()) + 1);
    for (std::size_t r = 0; r < design.runs.size(); ++r) {
        if (responses[r].empty()) throw MissingRun(static_cast<int>(r) + 1);
    }
    for (std::size_t f = 0; f < design.factors.size(); ++f) {
        bool seen[2] = {false, false};
        for (const auto& run : design.runs) seen[run.at(f)] = true;
        if (!seen[0] || !seen[1]) throw StatsError("factor " + design.factors[f] + " does not visit both levels");
    }
    TaguchiResult out;
    out.objective = objective;
    bool replicated = true;
    for (std::size_t r = 0; r < design.runs.size(); ++r) {
        out.run_mean.push_back(detail::mean(responses[r]));
        out.run_snr.push_back(signal_to_noise(responses[r], objective));
        out.run_stdev.push_back(detail::sample_stdev(responses[r]));
        replicated = replicated && responses[r].size() >= 2;
    }
    out.means = detail::response_table(design, out.run_mean);
    out.snr = detail::response_table(design, out.run_snr);
    if (replicated) out.stdev = detail::response_table(design, out.run_stdev);
    return out;
}

}  // namespace aerotele::stats
