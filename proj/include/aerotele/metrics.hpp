#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "aerotele/errors.hpp"
#include "aerotele/impedance.hpp"
#include "aerotele/scenario.hpp"

namespace aerotele {

struct TrajectorySample {
    double t = 0.0;      // s
    double speed = 0.0;  // m/s, vehicle velocity norm
};

// NASA-TLX ---------------------------------------------------------------

enum class TlxScale { MD, PD, TD, EF, PE, FR };
inline constexpr std::array<const char*, 6> kTlxNames = {"MD", "PD", "TD", "EF", "PE", "FR"};

/// The 15 subscale pairs in the order the questionnaire presents them.
inline constexpr std::array<std::pair<int, int>, 15> kTlxPairs = {{{0, 1}, {0, 2}, {0, 3}, {0, 4}, {0, 5},
                                                                   {1, 2}, {1, 3}, {1, 4}, {1, 5}, {2, 3},
                                                                   {2, 4}, {2, 5}, {3, 4}, {3, 5}, {4, 5}}};

struct TlxResponse {
    std::array<double, 6> ratings{};  // 0..100
    std::array<int, 6> weights{};     // 0..5, sum 15

    /// `winners[i]` is the subscale picked in pair kTlxPairs[i].
    static TlxResponse from_pairwise(const std::array<double, 6>& ratings, const std::array<int, 15>& winners) {
        TlxResponse r;
        r.ratings = ratings;
        for (std::size_t i = 0; i < winners.size(); ++i) {
            const auto [a, b] = kTlxPairs[i];
            if (winners[i] != a && winners[i] != b) {
                throw ValidationError("pairwise choice " + std::to_string(i) + " names a subscale outside its pair");
            }
            ++r.weights[winners[i]];
        }
        r.validate();
        return r;
    }

    void validate() const {
        int sum = 0;
        for (int i = 0; i < 6; ++i) {
            if (!(ratings[i] >= 0.0 && ratings[i] <= 100.0)) throw ValidationError("TLX ratings in [0, 100]");
            if (weights[i] < 0 || weights[i] > 5) throw ValidationError("TLX weights in [0, 5]");
            sum += weights[i];
        }
        if (sum != 15) throw ValidationError("TLX weights sum to 15");
    }

    friend bool operator==(const TlxResponse&, const TlxResponse&) = default;
};

struct TlxScores {
    std::array<double, 6> adjusted{};  // weight * rating, 0..500
    double overall = 0.0;              // sum / 15, 0..100
};

inline TlxScores tlx_adjusted(const TlxResponse& r) {
    r.validate();
    TlxScores s;
    double sum = 0.0;
    for (int i = 0; i < 6; ++i) {
        s.adjusted[i] = r.weights[i] * r.ratings[i];
        sum += s.adjusted[i];
    }
    s.overall = sum / 15.0;
    return s;
}

// trial records ----------------------------------------------------------

struct TrialRecord {
    std::string participant;
    Expertise expertise = Expertise::B;
    Condition condition;
    std::string scenario;
    double duration = 80.0;  // s, counting cutoff
    std::vector<TrajectorySample> trajectory;
    std::vector<double> transfer_times;  // s
    /// Counter and energy as stored in a CSV; set when the trajectory is not
    /// available.
    std::optional<int> stored_n;
    std::optional<double> stored_e;
    std::optional<TlxResponse> tlx;
};

/// Transfers at or before the cutoff.
inline int blocks_transferred(const TrialRecord& r) {
    if (r.stored_n && r.transfer_times.empty()) return *r.stored_n;
    return static_cast<int>(
        std::count_if(r.transfer_times.begin(), r.transfer_times.end(), [&](double t) { return t <= r.duration; }));
}

/// Kinetic-energy integral of the vehicle over the trial divided by the
/// transferred blocks; empty when nothing was transferred.
inline std::optional<double> energy_per_block(const TrialRecord& r, double mass = kOmavMass) {
    const int n = blocks_transferred(r);
    if (n <= 0) return std::nullopt;
    if (r.trajectory.empty()) return r.stored_e;
    double integral = 0.0;
    for (std::size_t i = 1; i < r.trajectory.size(); ++i) {
        const TrajectorySample& a = r.trajectory[i - 1];
        const TrajectorySample& b = r.trajectory[i];
        if (a.t >= r.duration) break;
        double t1 = b.t, v1 = b.speed;
        if (t1 > r.duration) {
            // cut the last segment at the cutoff
            const double f = (r.duration - a.t) / (b.t - a.t);
            t1 = r.duration;
            v1 = a.speed + f * (b.speed - a.speed);
        }
        integral += 0.5 * (t1 - a.t) * (a.speed * a.speed + v1 * v1);
    }
    return 0.5 * mass * integral / n;
}

// CSV --------------------------------------------------------------------

/// Trial CSV columns. N and E are written as computed; E is empty when
/// undefined, TLX columns are empty when no response was given.
inline constexpr std::string_view kTrialCsvHeader =
    "participant,expertise,display,haptics,scenario,N,E,MD,PD,TD,EF,PE,FR,w_MD,w_PD,w_TD,w_EF,w_PE,w_FR";

namespace detail {

inline std::vector<std::string> split_csv_line(std::string_view line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        out.emplace_back(config::detail::trim(line.substr(start, comma - start)));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return out;
}

inline std::string format_double(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

}  // namespace detail

inline void write_trial_csv_header(std::ostream& os) { os << kTrialCsvHeader << '\n'; }

inline void write_trial_csv_row(std::ostream& os, const TrialRecord& r) {
    if (r.participant.find_first_of(",\n\r") != std::string::npos) {
        throw ValidationError("participant id has no commas or newlines");
    }
    os << r.participant << ',' << to_string(r.expertise) << ',' << to_string(r.condition.display) << ','
       << to_string(r.condition.haptics) << ',' << r.scenario << ',' << blocks_transferred(r) << ',';
    if (const auto e = energy_per_block(r)) os << detail::format_double(*e);
    for (int i = 0; i < 6; ++i) {
        os << ',';
        if (r.tlx) os << detail::format_double(r.tlx->ratings[i]);
    }
    for (int i = 0; i < 6; ++i) {
        os << ',';
        if (r.tlx) os << r.tlx->weights[i];
    }
    os << '\n';
}

inline std::vector<TrialRecord> read_trial_csv(std::istream& in) {
    std::vector<TrialRecord> out;
    std::string line;
    std::size_t line_no = 0;
    std::vector<std::string> header;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (config::detail::trim(line).empty()) continue;
        if (header.empty()) {
            header = detail::split_csv_line(line);
            if (line != kTrialCsvHeader) throw ParseError(line_no, "header", "expected " + std::string(kTrialCsvHeader));
            continue;
        }
        const auto cells = detail::split_csv_line(line);
        if (cells.size() != header.size()) {
            throw ParseError(line_no, "", "expected " + std::to_string(header.size()) + " columns");
        }
        const auto number = [&](std::size_t col) {
            config::Entry e{"", header[col], cells[col], line_no};
            return config::to_scalar(e);
        };
        TrialRecord r;
        r.participant = cells[0];
        const auto ex = parse_expertise(cells[1]);
        const auto di = parse_display(cells[2]);
        const auto ha = parse_haptics(cells[3]);
        if (!ex) throw ParseError(line_no, "expertise", "expected B or E");
        if (!di) throw ParseError(line_no, "display", "expected SC or MR");
        if (!ha) throw ParseError(line_no, "haptics", "expected H or NoH");
        r.expertise = *ex;
        r.condition = {*di, *ha};
        r.scenario = cells[4];
        const double n = number(5);
        if (n < 0.0 || n != std::floor(n)) throw ParseError(line_no, "N", "expected a non-negative integer");
        r.stored_n = static_cast<int>(n);
        if (!cells[6].empty()) {
            r.stored_e = number(6);
            if (*r.stored_e < 0.0) throw ParseError(line_no, "E", "energy is non-negative");
        } else if (n > 0) {
            throw ParseError(line_no, "E", "energy is required when N > 0");
        }
        const bool any_tlx = std::any_of(cells.begin() + 7, cells.end(), [](const auto& c) { return !c.empty(); });
        if (any_tlx) {
            TlxResponse t;
            for (int i = 0; i < 6; ++i) {
                if (cells[7 + i].empty() || cells[13 + i].empty()) {
                    throw ParseError(line_no, header[cells[7 + i].empty() ? 7 + i : 13 + i], "incomplete TLX response");
                }
                t.ratings[i] = number(7 + i);
                const double w = number(13 + i);
                if (w != std::floor(w)) throw ParseError(line_no, header[13 + i], "weights are integers");
                t.weights[i] = static_cast<int>(w);
            }
            try {
                t.validate();
            } catch (const ValidationError& e) {
                throw ParseError(line_no, "tlx", e.what());
            }
            r.tlx = t;
        }
        out.push_back(std::move(r));
    }
    if (header.empty()) throw ParseError(1, "header", "empty trial CSV");
    return out;
}

}  // namespace aerotele
