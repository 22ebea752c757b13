#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "aerotele/metrics.hpp"
#include "aerotele/stats/anova.hpp"
#include "aerotele/stats/moods_median.hpp"
#include "aerotele/stats/shapiro_wilk.hpp"
#include "aerotele/stats/taguchi.hpp"
#include "aerotele/stats/tukey.hpp"

// Plain-text and CSV reports over trial records. Text tables follow the
// usual layout: an ANOVA table (Source, DF, SS, MS, F, P) followed by Tukey
// grouping information (Factor, N, Mean, Grouping).
namespace aerotele::stats {

enum class ReportFormat { Text, Csv };

struct Metric {
    std::string name;  // N or E
    Objective objective;
    std::optional<double> (*value)(const TrialRecord&);
};

inline std::vector<Metric> trial_metrics() {
    return {{"N", Objective::LargerIsBetter,
             [](const TrialRecord& r) -> std::optional<double> { return blocks_transferred(r); }},
            {"E", Objective::SmallerIsBetter, [](const TrialRecord& r) { return energy_per_block(r); }}};
}

namespace detail {

inline std::string fmt(double v, int decimals = 4) {
    if (std::isnan(v)) return "";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
    return buf;
}

inline std::string pad(const std::string& s, std::size_t width) {
    return s.size() >= width ? s + " " : s + std::string(width - s.size(), ' ');
}

inline std::string lpad(const std::string& s, std::size_t width) {
    return s.size() >= width ? " " + s : std::string(width - s.size(), ' ') + s;
}

inline std::string condition_label(const TrialRecord& r) {
    return std::string(to_string(r.condition.display)) + "-" + to_string(r.condition.haptics);
}

/// L4 run index for a record, or -1 when its factor combination is not in
/// the array.
inline int l4_run(const TaguchiDesign& d, const TrialRecord& r) {
    const int levels[3] = {r.condition.display == Display::MR ? 1 : 0, r.condition.haptics == Haptics::H ? 1 : 0,
                           r.expertise == Expertise::E ? 1 : 0};
    for (std::size_t i = 0; i < d.runs.size(); ++i) {
        if (d.runs[i][0] == levels[0] && d.runs[i][1] == levels[1] && d.runs[i][2] == levels[2]) {
            return static_cast<int>(i);
        }
    }
    return -1;
}

inline void anova_rows(std::ostream& os, const std::vector<AnovaRow>& rows, ReportFormat f, const std::string& tag) {
    if (f == ReportFormat::Csv) {
        for (const auto& r : rows) {
            os << tag << ',' << r.source << ',' << r.df << ',' << fmt(r.ss, 6) << ',' << fmt(r.ms, 6) << ','
               << fmt(r.f, 6) << ',' << fmt(r.p, 6) << '\n';
        }
        return;
    }
    os << pad("Source", 18) << lpad("DF", 5) << lpad("SS", 14) << lpad("MS", 14) << lpad("F", 10) << lpad("P", 9)
       << '\n';
    for (const auto& r : rows) {
        os << pad(r.source, 18) << lpad(fmt(r.df, 0), 5) << lpad(fmt(r.ss), 14) << lpad(fmt(r.ms), 14)
           << lpad(fmt(r.f, 2), 10) << lpad(fmt(r.p, 3), 9) << '\n';
    }
}

}  // namespace detail

/// Taguchi main effects over the L4 array for N and E.
inline std::string taguchi_report(const std::vector<TrialRecord>& records, ReportFormat format) {
    const TaguchiDesign design = l4_design();
    std::ostringstream os;
    if (format == ReportFormat::Csv) os << "metric,statistic,factor,level_1,level_2,delta,rank\n";
    std::size_t outside = 0;
    for (const TrialRecord& r : records) outside += detail::l4_run(design, r) < 0;
    for (const Metric& m : trial_metrics()) {
        std::vector<std::vector<double>> responses(design.runs.size());
        for (const TrialRecord& r : records) {
            const int run = detail::l4_run(design, r);
            const auto v = m.value(r);
            if (run >= 0 && v) responses[run].push_back(*v);
        }
        TaguchiResult res;
        try {
            res = taguchi_analyze(design, responses, m.objective);
        } catch (const StatsError& e) {
            if (format == ReportFormat::Text) os << m.name << ": " << e.what() << "\n\n";
            continue;
        }
        std::vector<std::pair<std::string, const ResponseTable*>> tables = {{"Means", &res.means},
                                                                             {"SNR", &res.snr}};
        if (res.stdev) tables.emplace_back("StDev", &*res.stdev);
        for (const auto& [stat, table] : tables) {
            if (format == ReportFormat::Csv) {
                for (std::size_t f = 0; f < design.factors.size(); ++f) {
                    os << m.name << ',' << stat << ',' << design.factors[f] << ',' << detail::fmt(table->levels[f][0], 6)
                       << ',' << detail::fmt(table->levels[f][1], 6) << ',' << detail::fmt(table->delta[f], 6) << ','
                       << table->rank[f] << '\n';
                }
                continue;
            }
            os << "Response Table for " << stat << " of " << m.name;
            if (stat == "SNR") os << " (" << to_string(m.objective) << ")";
            os << '\n' << detail::pad("Level", 8);
            for (const auto& f : design.factors) os << detail::lpad(f, 12);
            os << '\n';
            for (int level = 0; level < 2; ++level) {
                os << detail::pad(std::to_string(level + 1), 8);
                for (std::size_t f = 0; f < design.factors.size(); ++f) {
                    os << detail::lpad(detail::fmt(table->levels[f][level], 3), 12);
                }
                os << '\n';
            }
            os << detail::pad("Delta", 8);
            for (double d : table->delta) os << detail::lpad(detail::fmt(d, 3), 12);
            os << '\n' << detail::pad("Rank", 8);
            for (int rk : table->rank) os << detail::lpad(std::to_string(rk), 12);
            os << "\n\n";
        }
    }
    if (format == ReportFormat::Text && outside > 0) {
        os << outside << " record(s) outside the L4 array were not used\n";
    }
    return os.str();
}

namespace detail {

/// Tukey grouping, Shapiro-Wilk on residuals and Mood's median for a set of
/// labelled groups that already went through an ANOVA.
inline void post_hoc(std::ostream& os, const std::vector<std::string>& labels,
                     const std::vector<std::vector<double>>& groups, const AnovaRow& error, double alpha) {
    std::vector<double> means, residuals;
    bool balanced = true;
    for (const auto& g : groups) {
        double m = 0.0;
        for (double y : g) m += y / g.size();
        means.push_back(m);
        for (double y : g) residuals.push_back(y - m);
        balanced = balanced && g.size() == groups[0].size();
    }
    if (!balanced) {
        os << "Tukey: skipped, group sizes differ\n";
    } else {
        try {
            const TukeyResult t = tukey_hsd(means, error.ms, error.df, groups[0].size(), alpha);
            os << "\nGrouping Information Using the Tukey Method and " << fmt(100 * (1 - alpha), 0)
               << "% Confidence\n"
               << pad("Condition", 14) << lpad("N", 4) << lpad("Mean", 12) << "  Grouping\n";
            std::vector<std::size_t> order(means.size());
            for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
            std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return means[x] > means[y]; });
            for (std::size_t i : order) {
                os << pad(labels[i], 14) << lpad(std::to_string(groups[i].size()), 4) << lpad(fmt(means[i]), 12) << "  "
                   << t.letters[i] << '\n';
            }
            os << "Means that do not share a letter are significantly different.\n";
        } catch (const StatsError& e) {
            os << "Tukey: " << e.what() << '\n';
        }
    }
    try {
        const ShapiroWilk sw = shapiro_wilk(residuals);
        os << "Shapiro-Wilk on residuals: W = " << fmt(sw.w) << ", p = " << fmt(sw.p, 3) << '\n';
    } catch (const StatsError& e) {
        os << "Shapiro-Wilk: " << e.what() << '\n';
    }
    try {
        const MoodsMedian mm = moods_median(groups);
        os << "Mood's median: chi2 = " << fmt(mm.chi2) << ", df = " << mm.df << ", p = " << fmt(mm.p, 3) << '\n';
    } catch (const StatsError& e) {
        os << "Mood's median: " << e.what() << '\n';
    }
}

/// One-way ANOVA over the non-empty groups, with post hoc output in text mode.
inline void one_way_section(std::ostream& os, const std::string& title, const std::string& factor,
                            const std::vector<std::string>& labels, const std::vector<std::vector<double>>& groups,
                            ReportFormat format, const std::string& tag, double alpha) {
    std::vector<std::string> kept_labels;
    std::vector<std::vector<double>> kept;
    for (std::size_t i = 0; i < groups.size(); ++i) {
        if (groups[i].empty()) continue;
        kept_labels.push_back(labels[i]);
        kept.push_back(groups[i]);
    }
    if (format == ReportFormat::Text) os << title << '\n';
    try {
        const OneWayAnova o = anova_one_way(kept, factor);
        anova_rows(os, {o.between, o.error, o.total}, format, tag);
        if (format == ReportFormat::Text) post_hoc(os, kept_labels, kept, o.error, alpha);
    } catch (const StatsError& e) {
        if (format == ReportFormat::Text) os << "  not analysed: " << e.what() << '\n';
    }
    if (format == ReportFormat::Text) os << '\n';
}

}  // namespace detail

/// For each metric:
///  - per expertise stratum, display x haptics two-way ANOVA when all four
///    cells hold the same number (>= 2) of trials, otherwise a one-way ANOVA
///    across the conditions the stratum covers (the L4 array alone gives each
///    stratum two conditions);
///  - a one-way ANOVA over every observed condition-expertise group, whose
///    Tukey letters form the grouping table;
///  - a between-strata one-way ANOVA on expertise.
inline std::string anova_report(const std::vector<TrialRecord>& records, ReportFormat format, double alpha = 0.05) {
    const char* names[4] = {"SC-NoH", "SC-H", "MR-NoH", "MR-H"};
    const auto cell_index = [](const TrialRecord& r) {
        return 2 * (r.condition.display == Display::MR) + (r.condition.haptics == Haptics::H);
    };
    std::ostringstream os;
    if (format == ReportFormat::Csv) os << "analysis,source,df,ss,ms,f,p\n";
    for (const Metric& m : trial_metrics()) {
        // groups[expertise][cell]
        std::vector<std::vector<std::vector<double>>> groups(2, std::vector<std::vector<double>>(4));
        for (const TrialRecord& r : records) {
            if (const auto v = m.value(r)) groups[r.expertise == Expertise::E][cell_index(r)].push_back(*v);
        }
        for (Expertise ex : {Expertise::B, Expertise::E}) {
            const auto& g = groups[ex == Expertise::E];
            const std::string tag = m.name + "/" + to_string(ex);
            bool full = true;
            for (const auto& c : g) full = full && c.size() >= 2 && c.size() == g[0].size();
            if (!full) {
                detail::one_way_section(os,
                                        "One-way ANOVA: " + m.name + " versus Condition (expertise " +
                                            to_string(ex) + ")",
                                        "Condition", {names, names + 4}, g, format, tag, alpha);
                continue;
            }
            if (format == ReportFormat::Text) {
                os << "Two-way ANOVA: " << m.name << " versus Display, Haptics (expertise " << to_string(ex) << ")\n";
            }
            const TwoWayAnova a = anova_two_way({{g[0], g[1]}, {g[2], g[3]}}, "Display", "Haptics");
            detail::anova_rows(os, {a.a, a.b, a.interaction, a.error, a.total}, format, tag);
            if (format == ReportFormat::Text) {
                detail::post_hoc(os, {names, names + 4}, g, a.error, alpha);
                os << '\n';
            }
        }

        std::vector<std::string> labels;
        std::vector<std::vector<double>> all;
        for (Expertise ex : {Expertise::B, Expertise::E}) {
            for (int c = 0; c < 4; ++c) {
                labels.push_back(std::string(names[c]) + "-" + to_string(ex));
                all.push_back(groups[ex == Expertise::E][c]);
            }
        }
        detail::one_way_section(os, "One-way ANOVA: " + m.name + " versus Condition-Expertise", "Group", labels, all,
                                format, m.name + "/group", alpha);

        std::vector<std::vector<double>> strata(2);
        for (int e = 0; e < 2; ++e) {
            for (const auto& c : groups[e]) strata[e].insert(strata[e].end(), c.begin(), c.end());
        }
        if (format == ReportFormat::Text) os << "One-way ANOVA: " << m.name << " versus Expertise\n";
        try {
            const OneWayAnova o = anova_one_way(strata, "Expertise");
            detail::anova_rows(os, {o.between, o.error, o.total}, format, m.name + "/expertise");
        } catch (const StatsError& e) {
            if (format == ReportFormat::Text) os << "  not analysed: " << e.what() << '\n';
        }
        if (format == ReportFormat::Text) os << '\n';
    }
    return os.str();
}

/// Weighted workload per condition with Mood's median over the overall score.
inline std::string tlx_report(const std::vector<TrialRecord>& records, ReportFormat format) {
    std::map<std::string, std::vector<TlxScores>> by_condition;
    for (const TrialRecord& r : records) {
        if (r.tlx) by_condition[detail::condition_label(r)].push_back(tlx_adjusted(*r.tlx));
    }
    std::ostringstream os;
    if (format == ReportFormat::Csv) {
        os << "condition,n";
        for (const char* s : kTlxNames) os << ",adj_" << s;
        os << ",overall\n";
    } else {
        os << "Mean adjusted NASA-TLX scores (weight x rating; overall = sum / 15)\n"
           << detail::pad("Condition", 12) << detail::lpad("n", 4);
        for (const char* s : kTlxNames) os << detail::lpad(s, 9);
        os << detail::lpad("Overall", 10) << '\n';
    }
    std::vector<std::vector<double>> overall;
    for (const auto& [label, scores] : by_condition) {
        std::array<double, 6> mean{};
        double mean_overall = 0.0;
        std::vector<double> o;
        for (const TlxScores& s : scores) {
            for (int i = 0; i < 6; ++i) mean[i] += s.adjusted[i] / scores.size();
            mean_overall += s.overall / scores.size();
            o.push_back(s.overall);
        }
        overall.push_back(std::move(o));
        if (format == ReportFormat::Csv) {
            os << label << ',' << scores.size();
            for (double v : mean) os << ',' << detail::fmt(v, 6);
            os << ',' << detail::fmt(mean_overall, 6) << '\n';
        } else {
            os << detail::pad(label, 12) << detail::lpad(std::to_string(scores.size()), 4);
            for (double v : mean) os << detail::lpad(detail::fmt(v, 1), 9);
            os << detail::lpad(detail::fmt(mean_overall, 2), 10) << '\n';
        }
    }
    if (format == ReportFormat::Text) {
        if (overall.size() < 2) {
            os << "Mood's median: needs responses from at least two conditions\n";
        } else {
            try {
                const MoodsMedian mm = moods_median(overall);
                os << "Mood's median on overall workload: chi2 = " << detail::fmt(mm.chi2) << ", df = " << mm.df
                   << ", p = " << detail::fmt(mm.p, 3) << '\n';
            } catch (const StatsError& e) {
                os << "Mood's median: " << e.what() << '\n';
            }
        }
    }
    return os.str();
}

}  // namespace aerotele::stats
