#pragma once

// Independent reference computations shared by the unit tests and the
// acceptance runner.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include "aerotele/stats/distributions.hpp"

namespace oracle {

using aerotele::stats::normal_quantile;

// Deterministic generator shared with the script that froze the reference
// values below, so the samples are identical on every platform.
struct SplitMix {
    std::uint64_t x;
    std::uint64_t next() {
        x += 0x9E3779B97F4A7C15ull;
        std::uint64_t z = x;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }
    double uniform() { return (static_cast<double>(next() >> 11) + 0.5) * 0x1p-53; }
};

inline std::vector<double> fixed_sample(std::uint64_t seed, int n) {
    SplitMix g{seed};
    std::vector<double> out;
    for (int i = 0; i < n; ++i) {
        const double u = g.uniform();
        switch (seed % 5) {
            case 0: out.push_back(u); break;
            case 1: out.push_back(normal_quantile(u)); break;
            case 2: out.push_back(-std::log(u)); break;
            case 3: out.push_back(std::exp(0.5 * normal_quantile(u))); break;
            default: out.push_back(2.0 * normal_quantile(u) + 10.0); break;
        }
    }
    return out;
}

inline std::vector<std::vector<double>> fixed_groups(std::uint64_t seed) {
    SplitMix g{seed * 7919};
    std::vector<std::vector<double>> groups;
    for (int k = 0; k < 3; ++k) {
        const int n = 5 + static_cast<int>(g.uniform() * 10);
        std::vector<double> grp;
        for (int i = 0; i < n; ++i) grp.push_back(std::nearbyint(g.uniform() * 10 + k * 1.5));
        groups.push_back(grp);
    }
    return groups;
}

// Pearson chi-square on the 2 x k above / at-or-below table, computed from a
// fully sorted copy rather than a selection.
inline double chi2_oracle(const std::vector<std::vector<double>>& groups) {
    std::vector<double> all;
    for (const auto& g : groups) all.insert(all.end(), g.begin(), g.end());
    std::sort(all.begin(), all.end());
    const std::size_t n = all.size();
    const double med = n % 2 ? all[n / 2] : 0.5 * (all[n / 2 - 1] + all[n / 2]);
    std::vector<std::array<double, 2>> table;
    std::array<double, 2> col{0, 0};
    for (const auto& g : groups) {
        std::array<double, 2> row{0, 0};
        for (double v : g) row[v > med ? 0 : 1] += 1;
        col[0] += row[0];
        col[1] += row[1];
        table.push_back(row);
    }
    double chi2 = 0;
    for (std::size_t i = 0; i < groups.size(); ++i) {
        for (int j = 0; j < 2; ++j) {
            const double e = static_cast<double>(groups[i].size()) * col[j] / static_cast<double>(n);
            chi2 += (table[i][j] - e) * (table[i][j] - e) / e;
        }
    }
    return chi2;
}

// Regularized incomplete beta by Lentz's continued fraction.
inline double incomplete_beta(double a, double b, double x) {
    if (x <= 0) return 0;
    if (x >= 1) return 1;
    if (x > (a + 1) / (a + b + 2)) return 1.0 - incomplete_beta(b, a, 1.0 - x);
    const double front = std::exp(std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) +
                                  b * std::log1p(-x)) / a;
    const double tiny = 1e-300;
    double c = 1, d = 1 - (a + b) * x / (a + 1);
    d = 1 / (std::abs(d) < tiny ? tiny : d);
    double f = d;
    for (int m = 1; m < 500; ++m) {
        for (int half = 0; half < 2; ++half) {
            const double num = half == 0 ? m * (b - m) * x / ((a + 2 * m - 1) * (a + 2 * m))
                                         : -(a + m) * (a + b + m) * x / ((a + 2 * m) * (a + 2 * m + 1));
            d = 1 + num * d;
            d = 1 / (std::abs(d) < tiny ? tiny : d);
            c = 1 + num / c;
            if (std::abs(c) < tiny) c = tiny;
            f *= c * d;
            if (half == 1 && std::abs(c * d - 1) < 1e-16) return front * f;
        }
    }
    return front * f;
}

inline double f_sf_oracle(double f, double d1, double d2) { return incomplete_beta(d2 / 2, d1 / 2, d2 / (d2 + d1 * f)); }

// Shapiro-Wilk W and p frozen from an independent implementation on
// fixed_sample(seed, n).
struct ShapiroRef {
    std::uint64_t seed;
    int n;
    double w, p;
};

inline constexpr ShapiroRef kShapiroRefs[] = {{1, 12, 0.9461437627, 0.5814680348},
                                             {2, 25, 0.8796194420, 0.0067868549},
                                             {3, 40, 0.9404566555, 0.0358281064},
                                             {4, 80, 0.9857009195, 0.5163296412},
                                             {5, 200, 0.9557251869, 0.0000070061}};

// Mood's median chi-square and p on fixed_groups(seed), seeds 1..5.
inline constexpr double kMoodChi2[] = {0.430769230769231, 14.7857142857143, 1.99652777777778, 0.644444444444444,
                                       2.97215511760966};
inline constexpr double kMoodP[] = {0.806231291578889, 0.000615634482656198, 0.36851867548715, 0.724537164180064,
                                    0.226258402537406};

// 1-D Coulomb oracle for a constant push from rest.
inline double coulomb_displacement(double push, double breakaway, double kinetic, double mass, double t) {
    if (push <= breakaway) return 0.0;
    return 0.5 * (push - kinetic) / mass * t * t;
}

}  // namespace oracle
