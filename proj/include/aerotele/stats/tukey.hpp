#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "aerotele/errors.hpp"
#include "aerotele/stats/distributions.hpp"

namespace aerotele::stats {

struct TukeyPair {
    std::size_t i = 0, j = 0;
    double difference = 0.0;  // mean_i - mean_j
    double q = 0.0;           // |difference| / sqrt(MS_e / n)
    double p = 0.0;
    bool significant = false;
};

struct TukeyResult {
    double q_critical = 0.0;
    double hsd = 0.0;
    std::vector<TukeyPair> pairs;
    /// Per input mean; means sharing a letter do not differ significantly.
    std::vector<std::string> letters;
};

namespace detail {

/// Letters for an ordering by decreasing mean. With equal n the
/// not-significant relation is an interval graph along this order, so each
/// maximal run of mutually close means gets one letter.
inline std::vector<std::string> grouping_letters(const std::vector<double>& means, double hsd) {
    const std::size_t k = means.size();
    std::vector<std::size_t> order(k);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return means[a] > means[b]; });
    std::vector<std::string> letters(k);
    std::size_t last_end = 0;
    bool any = false;
    char letter = 'A';
    for (std::size_t start = 0; start < k; ++start) {
        std::size_t end = start;
        while (end + 1 < k && !(means[order[start]] - means[order[end + 1]] > hsd)) ++end;
        if (any && end <= last_end) continue;  // contained in the previous run
        for (std::size_t r = start; r <= end; ++r) letters[order[r]] += letter;
        letter = letter == 'Z' ? 'a' : static_cast<char>(letter + 1);
        last_end = end;
        any = true;
    }
    return letters;
}

}  // namespace detail

/// Tukey HSD on balanced cell means.
inline TukeyResult tukey_hsd(const std::vector<double>& means, double ms_error, double df_error, std::size_t n,
                             double alpha = 0.05) {
    const int k = static_cast<int>(means.size());
    if (k < 2) throw StatsError("Tukey needs at least two means");
    if (!(ms_error >= 0.0) || n == 0) throw StatsError("Tukey needs MS_error >= 0 and n >= 1");
    if (!(alpha > 0.0 && alpha < 1.0)) throw StatsError("alpha in (0, 1)");
    TukeyResult out;
    out.q_critical = studentized_range_quantile(1.0 - alpha, k, df_error);
    const double se = std::sqrt(ms_error / static_cast<double>(n));
    out.hsd = out.q_critical * se;
    for (int i = 0; i < k; ++i) {
        for (int j = i + 1; j < k; ++j) {
            TukeyPair pr;
            pr.i = i;
            pr.j = j;
            pr.difference = means[i] - means[j];
            if (se > 0.0) {
                pr.q = std::abs(pr.difference) / se;
                pr.p = 1.0 - studentized_range_cdf(pr.q, k, df_error);
            } else {
                pr.q = pr.difference == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
                pr.p = pr.difference == 0.0 ? 1.0 : 0.0;
            }
            pr.significant = std::abs(pr.difference) > out.hsd;
            out.pairs.push_back(pr);
        }
    }
    out.letters = detail::grouping_letters(means, out.hsd);
    return out;
}

}  // namespace aerotele::stats
