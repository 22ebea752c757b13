#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include "aerotele/errors.hpp"
#include "aerotele/stats/distributions.hpp"

namespace aerotele::stats {

struct ShapiroWilk {
    double w = 0.0;
    double p = 0.0;
};

namespace detail {

template <std::size_t N>
double poly(const std::array<double, N>& c, double x) {
    double r = 0.0;
    for (std::size_t i = N; i-- > 0;) r = r * x + c[i];
    return r;
}

}  // namespace detail

/// Royston's AS R94 approximation to the W statistic and its p-value.
inline ShapiroWilk shapiro_wilk(std::vector<double> x) {
    const std::size_t n = x.size();
    if (n < 3 || n > 2000) throw SizeOutOfRange(n);
    std::sort(x.begin(), x.end());
    if (!(x.back() - x.front() > 0.0)) throw ConstantSample();

    static constexpr std::array<double, 6> c1 = {0.0, 0.221157, -0.147981, -2.071190, 4.434685, -2.706056};
    static constexpr std::array<double, 6> c2 = {0.0, 0.042981, -0.293762, -1.752461, 5.682633, -3.582633};
    static constexpr std::array<double, 4> c3 = {0.5440, -0.39978, 0.025054, -6.714e-4};
    static constexpr std::array<double, 4> c4 = {1.3822, -0.77857, 0.062767, -0.0020322};
    static constexpr std::array<double, 4> c5 = {-1.5861, -0.31082, -0.083751, 0.0038915};
    static constexpr std::array<double, 3> c6 = {-0.4803, -0.082676, 0.0030302};
    static constexpr std::array<double, 2> g = {-2.273, 0.459};

    const std::size_t half = n / 2;
    const double an = static_cast<double>(n);
    // coefficients for the upper half, a[0] pairs x[n-1] with x[0]
    std::vector<double> a(half);
    if (n == 3) {
        a[0] = std::sqrt(0.5);
    } else {
        std::vector<double> m(half);
        double summ2 = 0.0;
        for (std::size_t i = 0; i < half; ++i) {
            m[i] = normal_quantile((static_cast<double>(i + 1) - 0.375) / (an + 0.25));
            summ2 += m[i] * m[i];
        }
        summ2 *= 2.0;
        const double ssumm2 = std::sqrt(summ2);
        const double rsn = 1.0 / std::sqrt(an);
        const double a1 = detail::poly(c1, rsn) - m[0] / ssumm2;
        std::size_t first = 1;
        double fac = 0.0;
        if (n > 5) {
            const double a2 = -m[1] / ssumm2 + detail::poly(c2, rsn);
            fac = std::sqrt((summ2 - 2.0 * m[0] * m[0] - 2.0 * m[1] * m[1]) / (1.0 - 2.0 * a1 * a1 - 2.0 * a2 * a2));
            a[1] = a2;
            first = 2;
        } else {
            fac = std::sqrt((summ2 - 2.0 * m[0] * m[0]) / (1.0 - 2.0 * a1 * a1));
        }
        a[0] = a1;
        for (std::size_t i = first; i < half; ++i) a[i] = -m[i] / fac;
    }

    // scale by the range for conditioning
    const double range = x.back() - x.front();
    double mean = 0.0;
    for (double v : x) mean += v / range;
    mean /= an;
    double ssq = 0.0;
    for (double v : x) ssq += (v / range - mean) * (v / range - mean);
    double num = 0.0;
    for (std::size_t i = 0; i < half; ++i) num += a[i] * (x[n - 1 - i] - x[i]) / range;
    ShapiroWilk out;
    out.w = std::min(1.0, num * num / ssq);

    if (n == 3) {
        constexpr double pi6 = 6.0 / M_PI, stqr = M_PI / 3.0;
        out.p = std::max(0.0, pi6 * (std::asin(std::sqrt(out.w)) - stqr));
        return out;
    }
    const double w1 = std::log(1.0 - out.w);
    double y = w1, mu = 0.0, sigma = 1.0;
    if (n <= 11) {
        const double gamma = detail::poly(g, an);
        if (y >= gamma) {
            out.p = 1e-99;
            return out;
        }
        y = -std::log(gamma - y);
        mu = detail::poly(c3, an);
        sigma = std::exp(detail::poly(c4, an));
    } else {
        const double ln = std::log(an);
        mu = detail::poly(c5, ln);
        sigma = std::exp(detail::poly(c6, ln));
    }
    out.p = normal_sf((y - mu) / sigma);
    return out;
}

}  // namespace aerotele::stats
