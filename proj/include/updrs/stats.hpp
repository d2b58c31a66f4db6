#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "updrs/error.hpp"

namespace updrs {

inline double mean(std::span<const double> x) {
    if (x.empty()) throw EmptyInput("mean: empty input");
    double s = 0.0;
    for (double v : x) s += v;
    return s / static_cast<double>(x.size());
}

/// Unbiased (n-1) sample variance; zero for n < 2.
inline double variance(std::span<const double> x) {
    if (x.size() < 2) return 0.0;
    const double m = mean(x);
    double s = 0.0;
    for (double v : x) s += (v - m) * (v - m);
    return s / static_cast<double>(x.size() - 1);
}

inline double stddev(std::span<const double> x) { return std::sqrt(variance(x)); }

/// Linear-interpolation quantile (the common "type 7" rule), p in [0,1].
inline double quantile(std::span<const double> x, double p) {
    if (x.empty()) throw EmptyInput("quantile: empty input");
    std::vector<double> sorted(x.begin(), x.end());
    std::sort(sorted.begin(), sorted.end());
    const double idx = p * static_cast<double>(sorted.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(idx);
    if (lo + 1 >= sorted.size()) return sorted.back();
    const double frac = idx - static_cast<double>(lo);
    return sorted[lo] * (1.0 - frac) + sorted[lo + 1] * frac;
}

inline double iqr(std::span<const double> x) { return quantile(x, 0.75) - quantile(x, 0.25); }

inline double median(std::span<const double> x) { return quantile(x, 0.5); }

inline bool all_finite(std::span<const double> x) {
    for (double v : x)
        if (!std::isfinite(v)) return false;
    return true;
}

}  // namespace updrs
