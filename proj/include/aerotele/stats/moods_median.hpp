#pragma once

#include <algorithm>
#include <vector>

#include "aerotele/errors.hpp"
#include "aerotele/stats/distributions.hpp"

namespace aerotele::stats {

struct MoodsMedian {
    double chi2 = 0.0;
    double df = 0.0;
    double p = 1.0;
    double grand_median = 0.0;
    std::vector<int> above;     // per group
    std::vector<int> at_or_below;
};

inline double median(std::vector<double> v) {
    if (v.empty()) throw StatsError("median of an empty sample");
    const std::size_t mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + mid, v.end());
    if (v.size() % 2 == 1) return v[mid];
    const double upper = v[mid];
    const double lower = *std::max_element(v.begin(), v.begin() + mid);
    return 0.5 * (lower + upper);
}

/// Mood's median test: 2 x k table of counts above and at-or-below the
/// grand median, Pearson chi-square without continuity correction.
inline MoodsMedian moods_median(const std::vector<std::vector<double>>& groups) {
    if (groups.size() < 2) throw StatsError("Mood's median test needs at least two groups");
    std::vector<double> all;
    for (const auto& g : groups) {
        if (g.empty()) throw StatsError("empty group");
        all.insert(all.end(), g.begin(), g.end());
    }
    MoodsMedian out;
    out.grand_median = median(all);
    int total_above = 0;
    for (const auto& g : groups) {
        const int above = static_cast<int>(std::count_if(g.begin(), g.end(), [&](double v) { return v > out.grand_median; }));
        out.above.push_back(above);
        out.at_or_below.push_back(static_cast<int>(g.size()) - above);
        total_above += above;
    }
    const int total = static_cast<int>(all.size());
    const int total_below = total - total_above;
    if (total_above == 0 || total_below == 0) throw DegenerateMedian();
    for (std::size_t k = 0; k < groups.size(); ++k) {
        const double n = static_cast<double>(groups[k].size());
        const double e_above = n * total_above / total;
        const double e_below = n * total_below / total;
        out.chi2 += (out.above[k] - e_above) * (out.above[k] - e_above) / e_above;
        out.chi2 += (out.at_or_below[k] - e_below) * (out.at_or_below[k] - e_below) / e_below;
    }
    out.df = static_cast<double>(groups.size() - 1);
    out.p = chi2_sf(out.chi2, out.df);
    return out;
}

}  // namespace aerotele::stats
