#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <utility>

namespace cuspkit {

using Vec2 = std::array<double, 2>;
using Mat2 = std::array<std::array<double, 2>, 2>;
using Complex = std::complex<double>;
using EigenPair = std::pair<Complex, Complex>;

inline double trace(const Mat2& m) { return m[0][0] + m[1][1]; }
inline double det(const Mat2& m) { return m[0][0] * m[1][1] - m[0][1] * m[1][0]; }

inline Vec2 operator*(const Mat2& m, const Vec2& v) {
    return {m[0][0] * v[0] + m[0][1] * v[1], m[1][0] * v[0] + m[1][1] * v[1]};
}

/// Solves m x = rhs by Cramer's rule; returns false for a singular matrix.
inline bool solve2(const Mat2& m, const Vec2& rhs, Vec2& x) {
    const double d = det(m);
    const double scale = std::abs(m[0][0] * m[1][1]) + std::abs(m[0][1] * m[1][0]);
    if (d == 0.0 || !std::isfinite(d) || std::abs(d) <= 1e-300 + 1e-15 * scale) return false;
    x = {(rhs[0] * m[1][1] - m[0][1] * rhs[1]) / d, (m[0][0] * rhs[1] - rhs[0] * m[1][0]) / d};
    return true;
}

/// Eigenvalues of a real 2x2 matrix from trace and determinant, with the
/// real root pair formed without cancellation. Real pairs are ordered
/// ascending; complex pairs as (re - i im, re + i im).
inline EigenPair eigenvalues(const Mat2& m) {
    const double tr = trace(m);
    const double half = 0.5 * tr;
    const double a = 0.5 * (m[0][0] - m[1][1]);
    const double disc = a * a + m[0][1] * m[1][0];
    if (disc >= 0.0) {
        const double s = std::sqrt(disc);
        const double big = half + (half >= 0.0 ? s : -s);
        const double d = det(m);
        const double small = big != 0.0 ? d / big : half - (half >= 0.0 ? s : -s);
        return big < small ? EigenPair{big, small} : EigenPair{small, big};
    }
    const double s = std::sqrt(-disc);
    return {Complex(half, -s), Complex(half, s)};
}

}  // namespace cuspkit
