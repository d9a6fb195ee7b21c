#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

namespace iflow {

using Vec = std::vector<double>;

inline double dot(const Vec& a, const Vec& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double norm_sq(const Vec& a) { return dot(a, a); }

inline double norm(const Vec& a) { return std::sqrt(norm_sq(a)); }

inline Vec sub(const Vec& a, const Vec& b) {
    Vec r(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] - b[i];
    return r;
}

// r = x + s*y
inline Vec add_scaled(const Vec& x, double s, const Vec& y) {
    Vec r(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) r[i] = x[i] + s * y[i];
    return r;
}

inline bool all_finite(const Vec& a) {
    for (double v : a)
        if (!std::isfinite(v)) return false;
    return true;
}

}  // namespace iflow
