#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/fisher_f.hpp>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <boost/math/tools/roots.hpp>

#include "aerotele/errors.hpp"

namespace aerotele::stats {

inline double normal_cdf(double x) { return boost::math::cdf(boost::math::normal(), x); }
inline double normal_sf(double x) { return boost::math::cdf(boost::math::complement(boost::math::normal(), x)); }
inline double normal_quantile(double p) { return boost::math::quantile(boost::math::normal(), p); }

/// Upper tail of F(d1, d2).
inline double f_sf(double f, double d1, double d2) {
    if (!(f > 0.0)) return 1.0;
    if (std::isinf(f)) return 0.0;
    return boost::math::cdf(boost::math::complement(boost::math::fisher_f(d1, d2), f));
}

/// Upper tail of chi-square with k degrees of freedom.
inline double chi2_sf(double x, double k) {
    if (!(x > 0.0)) return 1.0;
    return boost::math::cdf(boost::math::complement(boost::math::chi_squared(k), x));
}

// studentized range ------------------------------------------------------

namespace detail {

/// Composite 30-point Gauss-Legendre over equal panels.
template <class F>
double panels(F f, double lo, double hi, int n) {
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
        const double a = lo + (hi - lo) * i / n, b = lo + (hi - lo) * (i + 1) / n;
        total += boost::math::quadrature::gauss<double, 30>::integrate(f, a, b);
    }
    return total;
}

/// P(range of k iid standard normals < w).
inline double range_cdf_infinite(double w, int k) {
    if (!(w > 0.0)) return 0.0;
    const auto integrand = [&](double z) {
        // erfc keeps the difference accurate in both tails
        const double inner = 0.5 * (std::erfc(-z * M_SQRT1_2) - std::erfc(-(z - w) * M_SQRT1_2));
        if (inner <= 0.0) return 0.0;
        return std::exp(-0.5 * z * z + (k - 1) * std::log(inner)) / std::sqrt(2.0 * M_PI);
    };
    // the integrand lives on [-8, w + 8]
    const double lo = -8.5, hi = w + 8.5;
    return std::clamp(k * panels(integrand, lo, hi, 16), 0.0, 1.0);
}

}  // namespace detail

/// CDF of the studentized range q for k means and df error degrees of
/// freedom; df = infinity gives the normal-theory range.
inline double studentized_range_cdf(double q, int k, double df) {
    if (k < 2 || k > 100) throw UnsupportedDf("studentized range needs 2 <= k <= 100");
    if (!(df >= 2.0)) throw UnsupportedDf("studentized range needs df >= 2");
    if (!(q > 0.0)) return 0.0;
    if (std::isinf(df)) return detail::range_cdf_infinite(q, k);

    // mix over s = chi_df / sqrt(df): density in log form
    const double log_norm = 0.5 * df * std::log(0.5 * df) - boost::math::lgamma(0.5 * df) + std::log(2.0);
    const auto integrand = [&](double s) {
        if (s <= 0.0) return 0.0;
        const double log_density = log_norm + (df - 1.0) * std::log(s) - 0.5 * df * s * s;
        return std::exp(log_density) * detail::range_cdf_infinite(q * s, k);
    };
    // s concentrates near 1 with spread ~ 1/sqrt(2 df)
    const double spread = 1.0 / std::sqrt(2.0 * df);
    const double lo = std::max(0.0, 1.0 - 12.0 * spread), hi = 1.0 + 14.0 * spread + 1.0 / df;
    return std::clamp(detail::panels(integrand, lo, hi, 12), 0.0, 1.0);
}

/// q such that studentized_range_cdf(q, k, df) = p.
inline double studentized_range_quantile(double p, int k, double df) {
    if (!(p > 0.0 && p < 1.0)) throw StatsError("studentized range quantile needs 0 < p < 1");
    const auto f = [&](double q) { return studentized_range_cdf(q, k, df) - p; };
    double lo = 1e-6, hi = 4.0;
    while (f(hi) < 0.0) {
        hi *= 2.0;
        if (hi > 1e4) throw UnsupportedDf("studentized range quantile out of range");
    }
    boost::uintmax_t iterations = 200;
    const auto [a, b] =
        boost::math::tools::toms748_solve(f, lo, hi, boost::math::tools::eps_tolerance<double>(45), iterations);
    return 0.5 * (a + b);
}

}  // namespace aerotele::stats
