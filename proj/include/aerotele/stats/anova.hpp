#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "aerotele/errors.hpp"
#include "aerotele/stats/distributions.hpp"

namespace aerotele::stats {

struct AnovaRow {
    std::string source;
    double ss = 0.0;
    double df = 0.0;
    double ms = 0.0;
    double f = 0.0;  // NaN for the error and total rows
    double p = 0.0;
};

struct TwoWayAnova {
    AnovaRow a, b, interaction, error, total;
    std::vector<std::vector<double>> cell_means;  // [level of A][level of B]
    std::size_t replicates = 0;
};

namespace detail {

inline void finish_effect(AnovaRow& row, const AnovaRow& error) {
    row.ms = row.ss / row.df;
    if (error.ms > 0.0) {
        row.f = row.ms / error.ms;
        row.p = f_sf(row.f, row.df, error.df);
    } else {
        // no within-cell variation: any effect is infinitely significant
        row.f = row.ss > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
        row.p = row.ss > 0.0 ? 0.0 : 1.0;
    }
}

}  // namespace detail

/// Balanced fixed-effects two-way ANOVA. `cells[i][j]` holds the replicates
/// at level i of A and level j of B; every cell needs the same n >= 2.
inline TwoWayAnova anova_two_way(const std::vector<std::vector<std::vector<double>>>& cells,
                                 std::string name_a = "A", std::string name_b = "B") {
    const std::size_t la = cells.size();
    if (la < 2) throw DegenerateCells("factor A needs at least two levels");
    const std::size_t lb = cells[0].size();
    if (lb < 2) throw DegenerateCells("factor B needs at least two levels");
    const std::size_t n = cells[0][0].size();
    for (const auto& row : cells) {
        if (row.size() != lb) throw DegenerateCells("ragged cell layout");
        for (const auto& cell : row) {
            if (cell.empty()) throw DegenerateCells("empty cell");
            if (cell.size() != n) throw DegenerateCells("unbalanced cells");
        }
    }
    if (n < 2) throw DegenerateCells("at least two replicates per cell");

    // sums of squares are shift invariant; centering on one observation
    // makes constant data exactly zero
    const double shift = cells[0][0][0];
    TwoWayAnova out;
    out.replicates = n;
    out.cell_means.assign(la, std::vector<double>(lb, 0.0));
    std::vector<double> mean_a(la, 0.0), mean_b(lb, 0.0);
    double grand = 0.0;
    for (std::size_t i = 0; i < la; ++i) {
        for (std::size_t j = 0; j < lb; ++j) {
            double s = 0.0;
            for (double y : cells[i][j]) s += y - shift;
            out.cell_means[i][j] = s / n;
            mean_a[i] += s / (n * lb);
            mean_b[j] += s / (n * la);
            grand += s / (n * la * lb);
        }
    }
    out.a = {std::move(name_a), 0.0, static_cast<double>(la - 1)};
    out.b = {std::move(name_b), 0.0, static_cast<double>(lb - 1)};
    out.interaction = {out.a.source + "*" + out.b.source, 0.0, static_cast<double>((la - 1) * (lb - 1))};
    out.error = {"Error", 0.0, static_cast<double>(la * lb * (n - 1))};
    out.total = {"Total", 0.0, static_cast<double>(la * lb * n - 1)};
    for (std::size_t i = 0; i < la; ++i) out.a.ss += n * lb * (mean_a[i] - grand) * (mean_a[i] - grand);
    for (std::size_t j = 0; j < lb; ++j) out.b.ss += n * la * (mean_b[j] - grand) * (mean_b[j] - grand);
    for (std::size_t i = 0; i < la; ++i) {
        for (std::size_t j = 0; j < lb; ++j) {
            const double inter = out.cell_means[i][j] - mean_a[i] - mean_b[j] + grand;
            out.interaction.ss += n * inter * inter;
            for (double y : cells[i][j]) {
                y -= shift;
                out.error.ss += (y - out.cell_means[i][j]) * (y - out.cell_means[i][j]);
                out.total.ss += (y - grand) * (y - grand);
            }
        }
    }
    for (auto& row : out.cell_means) {
        for (double& m : row) m += shift;
    }
    out.error.ms = out.error.ss / out.error.df;
    out.error.f = out.error.p = std::nan("");
    out.total.ms = out.total.f = out.total.p = std::nan("");
    detail::finish_effect(out.a, out.error);
    detail::finish_effect(out.b, out.error);
    detail::finish_effect(out.interaction, out.error);
    return out;
}

struct OneWayAnova {
    AnovaRow between, error, total;
    std::vector<double> group_means;
};

/// One-way ANOVA; groups may differ in size.
inline OneWayAnova anova_one_way(const std::vector<std::vector<double>>& groups, std::string name = "Factor") {
    if (groups.size() < 2) throw DegenerateCells("at least two groups");
    std::size_t total_n = 0;
    double grand = 0.0;
    for (const auto& g : groups) {
        if (g.empty()) throw DegenerateCells("empty group");
    }
    const double shift = groups[0][0];
    for (const auto& g : groups) {
        total_n += g.size();
        for (double y : g) grand += y - shift;
    }
    if (total_n <= groups.size()) throw DegenerateCells("no within-group degrees of freedom");
    grand /= static_cast<double>(total_n);
    OneWayAnova out;
    out.between = {std::move(name), 0.0, static_cast<double>(groups.size() - 1)};
    out.error = {"Error", 0.0, static_cast<double>(total_n - groups.size())};
    out.total = {"Total", 0.0, static_cast<double>(total_n - 1)};
    for (const auto& g : groups) {
        double m = 0.0;
        for (double y : g) m += y - shift;
        m /= static_cast<double>(g.size());
        out.group_means.push_back(m + shift);
        out.between.ss += g.size() * (m - grand) * (m - grand);
        for (double y : g) {
            out.error.ss += (y - shift - m) * (y - shift - m);
            out.total.ss += (y - shift - grand) * (y - shift - grand);
        }
    }
    out.error.ms = out.error.ss / out.error.df;
    out.error.f = out.error.p = std::nan("");
    out.total.ms = out.total.f = out.total.p = std::nan("");
    detail::finish_effect(out.between, out.error);
    return out;
}

}  // namespace aerotele::stats
