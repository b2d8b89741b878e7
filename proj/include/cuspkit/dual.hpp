#pragma once

// Forward-mode dual numbers that nest: Dual<Dual<double>> carries second
// derivatives, Dual<Dual<Dual<double>>> third. Each nesting level holds one
// infinitesimal direction, so a single evaluation of a function at a point
// seeded with directions (a, b, c) yields every partial derivative of the
// form d_a, d_b, d_c, d_ab, d_ac, d_bc, d_abc exactly to rounding.

#include <array>
#include <cmath>
#include <concepts>
#include <tuple>
#include <type_traits>

namespace cuspkit {

template <typename T>
concept Arithmetic = std::is_arithmetic_v<T>;

template <typename T>
struct Dual {
    T v{};  // primal part
    T d{};  // derivative along this level's direction

    constexpr Dual() = default;
    constexpr Dual(T value, T derivative) : v(value), d(derivative) {}
    template <Arithmetic S>
    constexpr Dual(S s) : v(T(s)), d(T(0)) {}  // NOLINT(google-explicit-constructor)

    constexpr Dual& operator+=(const Dual& o) { v += o.v; d += o.d; return *this; }
    constexpr Dual& operator-=(const Dual& o) { v -= o.v; d -= o.d; return *this; }
    constexpr Dual& operator*=(const Dual& o) { *this = *this * o; return *this; }
    constexpr Dual& operator/=(const Dual& o) { *this = *this / o; return *this; }
};

template <typename T>
struct is_dual : std::false_type {};
template <typename T>
struct is_dual<Dual<T>> : std::true_type {};
template <typename T>
inline constexpr bool is_dual_v = is_dual<T>::value;

// -- primal access -----------------------------------------------------------

template <Arithmetic S>
constexpr double primal(S s) { return static_cast<double>(s); }

template <typename T>
constexpr double primal(const Dual<T>& x) { return primal(x.v); }

// -- arithmetic --------------------------------------------------------------

template <typename T>
constexpr Dual<T> operator+(const Dual<T>& a) { return a; }
template <typename T>
constexpr Dual<T> operator-(const Dual<T>& a) { return {-a.v, -a.d}; }

template <typename T>
constexpr Dual<T> operator+(const Dual<T>& a, const Dual<T>& b) { return {a.v + b.v, a.d + b.d}; }
template <typename T>
constexpr Dual<T> operator-(const Dual<T>& a, const Dual<T>& b) { return {a.v - b.v, a.d - b.d}; }
template <typename T>
constexpr Dual<T> operator*(const Dual<T>& a, const Dual<T>& b) {
    return {a.v * b.v, a.d * b.v + a.v * b.d};
}
template <typename T>
constexpr Dual<T> operator/(const Dual<T>& a, const Dual<T>& b) {
    const T inv = T(1) / b.v;
    const T q = a.v * inv;
    return {q, (a.d - q * b.d) * inv};
}

template <typename T, Arithmetic S>
constexpr Dual<T> operator+(const Dual<T>& a, S s) { return {a.v + s, a.d}; }
template <typename T, Arithmetic S>
constexpr Dual<T> operator+(S s, const Dual<T>& a) { return {s + a.v, a.d}; }
template <typename T, Arithmetic S>
constexpr Dual<T> operator-(const Dual<T>& a, S s) { return {a.v - s, a.d}; }
template <typename T, Arithmetic S>
constexpr Dual<T> operator-(S s, const Dual<T>& a) { return {s - a.v, -a.d}; }
template <typename T, Arithmetic S>
constexpr Dual<T> operator*(const Dual<T>& a, S s) { return {a.v * s, a.d * s}; }
template <typename T, Arithmetic S>
constexpr Dual<T> operator*(S s, const Dual<T>& a) { return {s * a.v, s * a.d}; }
template <typename T, Arithmetic S>
constexpr Dual<T> operator/(const Dual<T>& a, S s) { return {a.v / s, a.d / s}; }
template <typename T, Arithmetic S>
constexpr Dual<T> operator/(S s, const Dual<T>& a) { return Dual<T>(s) / a; }

// Comparisons look at the primal value only (used for branch selection).
template <typename T, typename U>
constexpr bool operator<(const Dual<T>& a, const U& b) { return primal(a) < primal(b); }
template <typename T, typename U>
constexpr bool operator>(const Dual<T>& a, const U& b) { return primal(a) > primal(b); }

// -- elementary functions ----------------------------------------------------

template <typename T>
Dual<T> exp(const Dual<T>& a) {
    using std::exp;
    const T e = exp(a.v);
    return {e, a.d * e};
}

template <typename T>
Dual<T> log(const Dual<T>& a) {
    using std::log;
    return {log(a.v), a.d / a.v};
}

template <typename T>
Dual<T> sqrt(const Dual<T>& a) {
    using std::sqrt;
    const T s = sqrt(a.v);
    return {s, a.d / (2.0 * s)};
}

template <typename T>
Dual<T> sinh(const Dual<T>& a) {
    using std::cosh;
    using std::sinh;
    return {sinh(a.v), a.d * cosh(a.v)};
}

template <typename T>
Dual<T> cosh(const Dual<T>& a) {
    using std::cosh;
    using std::sinh;
    return {cosh(a.v), a.d * sinh(a.v)};
}

template <typename T>
Dual<T> tanh(const Dual<T>& a) {
    using std::tanh;
    const T t = tanh(a.v);
    return {t, a.d * (1.0 - t * t)};
}

// -- seeding helpers ---------------------------------------------------------

using Dual1 = Dual<double>;
using Dual2 = Dual<Dual1>;
using Dual3 = Dual<Dual2>;

/// Lifts x into a nested dual. s_k = 1 marks x as the differentiation
/// direction at nesting level k (0 = outermost).
inline Dual1 seed1(double x, double s0) { return {x, s0}; }

inline Dual2 seed2(double x, double s0, double s1) {
    return {Dual1{x, s1}, Dual1{s0, 0.0}};
}

inline Dual3 seed3(double x, double s0, double s1, double s2) {
    return {Dual2{Dual1{x, s2}, Dual1{s1, 0.0}}, Dual2{Dual1{s0, 0.0}, Dual1{0.0, 0.0}}};
}

/// All derivatives produced by one third-order evaluation with directions
/// (a, b, c) at the outer, middle and inner levels.
struct Partials3 {
    double value, da, db, dc, dab, dac, dbc, dabc;
};

inline Partials3 unpack(const Dual3& r) {
    return {r.v.v.v, r.d.v.v, r.v.d.v, r.v.v.d, r.d.d.v, r.d.v.d, r.v.d.d, r.d.d.d};
}

struct Partials2 {
    double value, da, db, dab;
};

inline Partials2 unpack(const Dual2& r) { return {r.v.v, r.d.v, r.v.d, r.d.d}; }

/// Evaluates fn at `point` with third-order seeding along axes a, b, c.
template <std::size_t K, typename Fn>
Partials3 third_partials(Fn&& fn, const std::array<double, K>& point, std::size_t a, std::size_t b,
                         std::size_t c) {
    std::array<Dual3, K> args;
    for (std::size_t i = 0; i < K; ++i) {
        args[i] = seed3(point[i], i == a ? 1.0 : 0.0, i == b ? 1.0 : 0.0, i == c ? 1.0 : 0.0);
    }
    return unpack(std::apply(fn, args));
}

template <std::size_t K, typename Fn>
Partials2 second_partials(Fn&& fn, const std::array<double, K>& point, std::size_t a, std::size_t b) {
    std::array<Dual2, K> args;
    for (std::size_t i = 0; i < K; ++i) {
        args[i] = seed2(point[i], i == a ? 1.0 : 0.0, i == b ? 1.0 : 0.0);
    }
    return unpack(std::apply(fn, args));
}

}  // namespace cuspkit
