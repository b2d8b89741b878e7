#pragma once

// Critical manifold y_i = Y(x_i, x_j), its projection Jacobian DF, symmetric
// folds, the cusp test with the local expansion Z(v, u) = B v u + A u^3, and
// continuation of the fold curve through the cusp.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "cuspkit/linalg.hpp"
#include "cuspkit/model.hpp"

namespace cuspkit {

struct FirstPartials {
    double f, f1, f2, fy;
};

inline FirstPartials first_partials(const ModelDefinition& m, double xi, double xj, double y) {
    const Dual1 a = m.f<Dual1>(Dual1{xi, 1.0}, Dual1{xj, 0.0}, Dual1{y, 0.0});
    const Dual1 b = m.f<Dual1>(Dual1{xi, 0.0}, Dual1{xj, 1.0}, Dual1{y, 0.0});
    const Dual1 c = m.f<Dual1>(Dual1{xi, 0.0}, Dual1{xj, 0.0}, Dual1{y, 1.0});
    return {a.v, a.d, b.d, c.d};
}

/// Solves f(x_i, x_j, y) = 0 for y by damped Newton. The iteration stops
/// once |f| < tol.y_residual and then takes one more Newton step.
inline double solve_Y(const ModelDefinition& m, double xi, double xj, double y_guess,
                      const Tolerances& tol = default_tolerances()) {
    const Domain& dom = m.domain();
    if (!dom.x.contains(xi) || !dom.x.contains(xj)) throw DomainError("solve_Y: x outside the model domain");
    if (!dom.y.contains(y_guess)) throw DomainError("solve_Y: initial guess outside the model domain");

    auto eval = [&](double y) {
        const Dual1 r = m.f<Dual1>(Dual1{xi, 0.0}, Dual1{xj, 0.0}, Dual1{y, 1.0});
        if (!std::isfinite(r.v) || !std::isfinite(r.d)) throw DomainError("solve_Y: non-finite f");
        return std::pair{r.v, r.d};
    };

    double y = y_guess;
    auto [F, Fy] = eval(y);
    for (int it = 0; it < tol.newton_max_iter; ++it) {
        if (std::abs(Fy) < tol.fy_min) {
            throw SolvabilityError("solve_Y: f_y vanishes at y = " + std::to_string(y));
        }
        const double step = -F / Fy;
        if (std::abs(F) < tol.y_residual) {
            const double yn = y + step;
            if (dom.y.contains(yn) && std::abs(m.f<double>(xi, xj, yn)) <= std::abs(F)) return yn;
            return y;
        }
        double lambda = 1.0;
        bool accepted = false;
        while (lambda > 1e-8) {
            const double yn = y + lambda * step;
            if (dom.y.contains(yn)) {
                auto [Fn, Fyn] = eval(yn);
                if (std::abs(Fn) < std::abs(F)) {
                    y = yn;
                    F = Fn;
                    Fy = Fyn;
                    accepted = true;
                    break;
                }
            }
            lambda *= 0.5;
        }
        if (!accepted) throw RootFindError("solve_Y: line search failed", std::abs(F));
    }
    if (std::abs(F) < tol.y_residual) return y;
    throw RootFindError("solve_Y: no convergence", std::abs(F));
}

/// A point of the critical manifold over (x1, x2) with the Jacobian of the
/// projection (x1, x2) -> (y1, y2).
struct CriticalPoint {
    PairState state;
    Mat2 df{};
};

inline CriticalPoint critical_point(const ModelDefinition& m, double x1, double x2, double y1_guess,
                                    double y2_guess, const Tolerances& tol = default_tolerances()) {
    CriticalPoint cp;
    const double y1 = solve_Y(m, x1, x2, y1_guess, tol);
    const double y2 = solve_Y(m, x2, x1, y2_guess, tol);
    cp.state = {x1, x2, y1, y2};
    const FirstPartials p1 = first_partials(m, x1, x2, y1);
    const FirstPartials p2 = first_partials(m, x2, x1, y2);
    if (std::abs(p1.fy) < tol.fy_min || std::abs(p2.fy) < tol.fy_min) {
        throw SolvabilityError("df_at: f_y vanishes");
    }
    cp.df = {{{-p1.f1 / p1.fy, -p1.f2 / p1.fy}, {-p2.f2 / p2.fy, -p2.f1 / p2.fy}}};
    return cp;
}

/// DF at (x1, x2): rows (Y_1, Y_2) of cell 1 and (Y_2, Y_1) of cell 2, each
/// from implicit differentiation Y_k = -f_k / f_y.
inline Mat2 df_at(const ModelDefinition& m, double x1, double x2, const Tolerances& tol = default_tolerances()) {
    const double g = m.info().y_guess;
    return critical_point(m, x1, x2, g, g, tol).df;
}

// -- symmetric folds -----------------------------------------------------------

struct FoldRoot {
    double x;
    double y;
    double residual;  // f1 - f2 at the root
};

/// r(x) = f1 - f2 evaluated at (x, x, Y(x, x)).
inline double symmetric_fold_function(const ModelDefinition& m, double x, double& y_guess,
                                      const Tolerances& tol = default_tolerances()) {
    y_guess = solve_Y(m, x, x, y_guess, tol);
    const FirstPartials p = first_partials(m, x, x, y_guess);
    return p.f1 - p.f2;
}

/// All roots of the symmetric fold condition f1 = f2 in the bracket: a
/// sign-change scan over tol.fold_scan_intervals subintervals followed by
/// bisection. An empty result is not an error.
inline std::vector<FoldRoot> find_symmetric_fold(const ModelDefinition& m, const Interval& bracket,
                                                 const Tolerances& tol = default_tolerances()) {
    if (!(bracket.lo < bracket.hi)) throw ConfigError("find_symmetric_fold: empty bracket");
    if (!m.domain().x.contains(bracket.lo) || !m.domain().x.contains(bracket.hi)) {
        throw DomainError("find_symmetric_fold: bracket outside the model domain");
    }
    const int n = std::max(1, tol.fold_scan_intervals);
    std::vector<double> xs(n + 1);
    std::vector<double> rs(n + 1);
    std::vector<double> ys(n + 1);
    double y = m.info().y_guess;
    for (int k = 0; k <= n; ++k) {
        xs[k] = bracket.lo + (bracket.hi - bracket.lo) * k / n;
        rs[k] = symmetric_fold_function(m, xs[k], y, tol);
        ys[k] = y;
    }

    std::vector<FoldRoot> roots;
    for (int k = 0; k < n; ++k) {
        if (rs[k] == 0.0) {
            roots.push_back({xs[k], ys[k], 0.0});
            continue;
        }
        if (!((rs[k] < 0.0) != (rs[k + 1] < 0.0)) || rs[k + 1] == 0.0) continue;
        double a = xs[k];
        double b = xs[k + 1];
        double ra = rs[k];
        double yb = ys[k];
        double x = a;
        double r = ra;
        for (int it = 0; it < 200; ++it) {
            x = 0.5 * (a + b);
            r = symmetric_fold_function(m, x, yb, tol);
            if (r == 0.0 || (std::abs(r) < tol.fold_residual && b - a < 1e-13 * (1.0 + std::abs(x)))) break;
            if ((r < 0.0) == (ra < 0.0)) {
                a = x;
                ra = r;
            } else {
                b = x;
            }
            if (b - a <= 4.0 * std::numeric_limits<double>::epsilon() * (1.0 + std::abs(x))) break;
        }
        if (std::abs(r) >= tol.fold_residual) {
            throw RootFindError("find_symmetric_fold: polish did not reach the residual tolerance", std::abs(r));
        }
        roots.push_back({x, yb, r});
    }
    if (rs[n] == 0.0) roots.push_back({xs[n], ys[n], 0.0});
    return roots;
}

// -- cusp test -------------------------------------------------------------------

struct CuspReport {
    double x_star = 0, y_star = 0;
    double f1_star = 0, f2_star = 0, fy_star = 0;
    double fold_residual = 0;  // f1* - f2*
    double d_star = 0;
    double A = 0, B = 0;
    double B_direct = 0;    // Y_11 - Y_22 from separate second differences along x1 and x2
    double B_implicit = 0;  // -D* / f_y
    bool is_nondegenerate_cusp = false;
    std::pair<double, double> fold_eigenvalues{0, 0};  // -(f1 + f2)/fy, -(f1 - f2)/fy
};

namespace detail {

inline double domain_step(const ModelDefinition& m) {
    const Interval& x = m.domain().x;
    if (std::isfinite(x.lo) && std::isfinite(x.hi)) return 2.5e-3 * (x.hi - x.lo);
    return 1e-1 * m.info().x_scale;
}

/// Richardson extrapolation of an even-order-error central difference over
/// the steps h, h/2, h/4.
template <typename Fn>
double richardson3(const Fn& estimate, double h) {
    const double t0 = estimate(h);
    const double t1 = estimate(0.5 * h);
    const double t2 = estimate(0.25 * h);
    const double r0 = (4.0 * t1 - t0) / 3.0;
    const double r1 = (4.0 * t2 - t1) / 3.0;
    return (16.0 * r1 - r0) / 15.0;
}

}  // namespace detail

/// Evaluates D*, A and B at a symmetric fold x* and the non-degeneracy verdict.
/// B = d_v d_u Z(0,0) and A = (1/6) d_u^3 Z(0,0) are computed by central
/// differences of the antisymmetric coordinate
///   Z(v, u) = (Y(x* + v + u, x* + v - u) - Y(x* + v - u, x* + v + u)) / 2
/// with Richardson extrapolation over h, h/2, h/4, where h is 2.5e-3 of the
/// domain width.
inline CuspReport cusp_test(const ModelDefinition& m, double x_star, const Tolerances& tol = default_tolerances()) {
    CuspReport rep;
    rep.x_star = x_star;
    rep.y_star = solve_Y(m, x_star, x_star, m.info().y_guess, tol);
    const FJet3 j = f_jet(m, x_star, x_star, rep.y_star);
    rep.f1_star = j.f1;
    rep.f2_star = j.f2;
    rep.fy_star = j.fy;
    rep.fold_residual = j.f1 - j.f2;
    if (std::abs(j.fy) < tol.fy_min) throw SolvabilityError("cusp_test: f_y vanishes at the fold");
    rep.d_star = j.f11 - j.f22 - 2.0 * (j.f1 / j.fy) * (j.f1y - j.f2y);
    rep.B_implicit = -rep.d_star / j.fy;
    rep.fold_eigenvalues = {-(j.f1 + j.f2) / j.fy, -(j.f1 - j.f2) / j.fy};

    const double ys = rep.y_star;
    auto Y = [&](double a, double b) { return solve_Y(m, a, b, ys, tol); };
    auto Z = [&](double v, double u) {
        return 0.5 * (Y(x_star + v + u, x_star + v - u) - Y(x_star + v - u, x_star + v + u));
    };

    double h = detail::domain_step(m);
    while (!m.domain().x.contains(x_star + 2.0 * h) || !m.domain().x.contains(x_star - 2.0 * h)) h *= 0.5;

    rep.B = detail::richardson3(
        [&](double s) { return (Z(s, s) - Z(s, -s) - Z(-s, s) + Z(-s, -s)) / (4.0 * s * s); }, h);
    rep.A = detail::richardson3(
        [&](double s) { return (-0.5 * Z(0, -2 * s) + Z(0, -s) - Z(0, s) + 0.5 * Z(0, 2 * s)) / (s * s * s); },
        h) / 6.0;
    const double y0 = Y(x_star, x_star);
    const double y11 = detail::richardson3(
        [&](double s) { return (Y(x_star + s, x_star) - 2.0 * y0 + Y(x_star - s, x_star)) / (s * s); }, h);
    const double y22 = detail::richardson3(
        [&](double s) { return (Y(x_star, x_star + s) - 2.0 * y0 + Y(x_star, x_star - s)) / (s * s); }, h);
    rep.B_direct = y11 - y22;

    rep.is_nondegenerate_cusp = std::abs(rep.fold_residual) < tol.fold_residual &&
                                std::abs(rep.d_star) > tol.nondegeneracy && std::abs(rep.A) > tol.nondegeneracy;
    return rep;
}

// -- fold curve --------------------------------------------------------------------

struct FoldPoint {
    double s = 0;  // signed arclength in (x1, x2) from the cusp
    PairState state;
    double v = 0, u = 0, w = 0, z = 0;
    double det_df = 0;
};

struct FoldCurve {
    double x_star = 0, y_star = 0;
    std::vector<FoldPoint> points;  // ordered by s
    bool truncated = false;
    std::string warning;
};

namespace detail {

struct FoldEvaluator {
    const ModelDefinition& m;
    const Tolerances& tol;
    double delta;

    CriticalPoint at(double x1, double x2, double g1, double g2) const {
        return critical_point(m, x1, x2, g1, g2, tol);
    }

    /// det DF and its gradient (central differences of step delta).
    std::pair<double, Vec2> value_and_gradient(double x1, double x2, double g1, double g2) const {
        const double d0 = det(at(x1, x2, g1, g2).df);
        const double dxp = det(at(x1 + delta, x2, g1, g2).df);
        const double dxm = det(at(x1 - delta, x2, g1, g2).df);
        const double dyp = det(at(x1, x2 + delta, g1, g2).df);
        const double dym = det(at(x1, x2 - delta, g1, g2).df);
        return {d0, Vec2{(dxp - dxm) / (2.0 * delta), (dyp - dym) / (2.0 * delta)}};
    }
};

inline Vec2 unit_perp(const Vec2& g) {
    const double n = std::hypot(g[0], g[1]);
    return {-g[1] / n, g[0] / n};
}

}  // namespace detail

/// Pseudo-arclength continuation of {det DF = 0} through the symmetric fold
/// x* in both directions, n_points / 2 steps of nominal length
/// arclength / (n_points / 2) each way. Steps are halved while the Newton
/// corrector needs more than four iterations; if the step underflows or the
/// curve leaves the domain, the curve is returned truncated with a warning.
inline FoldCurve trace_fold_curve(const ModelDefinition& m, double x_star, double arclength, int n_points,
                                  const Tolerances& tol = default_tolerances()) {
    if (!(arclength > 0.0) || n_points < 2) throw ConfigError("trace_fold_curve: invalid arclength or point count");
    FoldCurve curve;
    curve.x_star = x_star;
    curve.y_star = solve_Y(m, x_star, x_star, m.info().y_guess, tol);
    const detail::FoldEvaluator ev{m, tol, 1e-6 * m.info().x_scale};
    const int per_side = n_points / 2;
    const double ds_nominal = arclength / per_side;
    const double ys = curve.y_star;

    auto make_point = [&](double s, const CriticalPoint& cp) {
        FoldPoint p;
        p.s = s;
        p.state = cp.state;
        p.v = 0.5 * (cp.state.x1 + cp.state.x2) - x_star;
        p.u = 0.5 * (cp.state.x1 - cp.state.x2);
        p.w = 0.5 * (cp.state.y1 + cp.state.y2) - ys;
        p.z = 0.5 * (cp.state.y1 - cp.state.y2);
        p.det_df = det(cp.df);
        return p;
    };

    const CriticalPoint origin = ev.at(x_star, x_star, ys, ys);
    const Vec2 grad0 = ev.value_and_gradient(x_star, x_star, ys, ys).second;
    Vec2 t0 = detail::unit_perp(grad0);
    if (t0[0] - t0[1] < 0.0) t0 = {-t0[0], -t0[1]};  // orient toward u > 0

    std::vector<FoldPoint> branches[2];
    for (int side = 0; side < 2; ++side) {
        const double sign = side == 0 ? 1.0 : -1.0;
        Vec2 X{x_star, x_star};
        Vec2 t{sign * t0[0], sign * t0[1]};
        double g1 = ys;
        double g2 = ys;
        double s = 0.0;
        double ds = ds_nominal;
        const double ds_min = 1e-6 * ds_nominal;
        while (static_cast<int>(branches[side].size()) < per_side) {
            bool ok = false;
            CriticalPoint cp;
            Vec2 Xn{};
            try {
                const Vec2 Xp{X[0] + ds * t[0], X[1] + ds * t[1]};
                Xn = Xp;
                for (int it = 0; it < 4; ++it) {
                    const auto [hval, grad] = ev.value_and_gradient(Xn[0], Xn[1], g1, g2);
                    const Mat2 J{{{grad[0], grad[1]}, {t[0], t[1]}}};
                    const Vec2 rhs{-hval, -(t[0] * (Xn[0] - Xp[0]) + t[1] * (Xn[1] - Xp[1]))};
                    Vec2 dx{};
                    if (!solve2(J, rhs, dx)) break;
                    Xn = {Xn[0] + dx[0], Xn[1] + dx[1]};
                    cp = ev.at(Xn[0], Xn[1], g1, g2);
                    if (std::abs(det(cp.df)) < 0.01 * tol.det_df &&
                        std::hypot(dx[0], dx[1]) < 1e-12 * (1.0 + std::hypot(Xn[0], Xn[1]))) {
                        ok = true;
                        break;
                    }
                    if (std::abs(det(cp.df)) < 1e-3 * tol.det_df && it >= 1) {
                        ok = true;
                        break;
                    }
                }
            } catch (const Error&) {
                ok = false;
            }
            if (!ok) {
                ds *= 0.5;
                if (ds < ds_min) {
                    curve.truncated = true;
                    curve.warning = "fold continuation stopped: step size underflow or domain exit";
                    break;
                }
                continue;
            }
            s += std::hypot(Xn[0] - X[0], Xn[1] - X[1]);
            const Vec2 grad = ev.value_and_gradient(Xn[0], Xn[1], cp.state.y1, cp.state.y2).second;
            Vec2 tn = detail::unit_perp(grad);
            if (tn[0] * t[0] + tn[1] * t[1] < 0.0) tn = {-tn[0], -tn[1]};
            X = Xn;
            t = tn;
            g1 = cp.state.y1;
            g2 = cp.state.y2;
            branches[side].push_back(make_point(sign * s, cp));
            ds = std::min(ds_nominal, 2.0 * ds);
        }
    }

    for (auto it = branches[1].rbegin(); it != branches[1].rend(); ++it) curve.points.push_back(*it);
    curve.points.push_back(make_point(0.0, origin));
    for (const auto& p : branches[0]) curve.points.push_back(p);
    return curve;
}

/// Writes the curve as CSV with header x1,x2,y1,y2,v,u,w,z.
inline void write_fold_curve_csv(std::ostream& os, const FoldCurve& curve) {
    os << "x1,x2,y1,y2,v,u,w,z\n";
    char buf[512];
    for (const auto& p : curve.points) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", p.state.x1, p.state.x2,
                      p.state.y1, p.state.y2, p.v, p.u, p.w, p.z);
        os << buf;
    }
}

// -- exponent fit ------------------------------------------------------------------

struct ExponentFit {
    double slope = 0;
    double intercept = 0;
    std::size_t n_used = 0;
    std::size_t n_positive = 0;  // points with u > 0 in the window
    std::size_t n_negative = 0;
    double w_lo = 0, w_hi = 0;
};

/// Least-squares slope of log|z| against log|w| over lo <= |w| <= hi. Points
/// are split into branches by `branch_sign` (> 0 or < 0); each branch needs at
/// least min_per_branch points in the window.
inline ExponentFit fit_cusp_exponent(std::span<const double> w, std::span<const double> z,
                                     std::span<const double> branch_sign, double lo, double hi,
                                     std::size_t min_per_branch = 20) {
    if (w.size() != z.size() || w.size() != branch_sign.size()) throw FitError("fit_cusp_exponent: size mismatch");
    if (!(lo > 0.0) || !(hi > lo)) throw FitError("fit_cusp_exponent: invalid window");
    ExponentFit fit;
    fit.w_lo = lo;
    fit.w_hi = hi;
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t k = 0; k < w.size(); ++k) {
        const double aw = std::abs(w[k]);
        const double az = std::abs(z[k]);
        if (aw < lo || aw > hi || az == 0.0 || branch_sign[k] == 0.0) continue;
        const double X = std::log(aw);
        const double Y = std::log(az);
        sx += X;
        sy += Y;
        sxx += X * X;
        sxy += X * Y;
        ++fit.n_used;
        (branch_sign[k] > 0.0 ? fit.n_positive : fit.n_negative) += 1;
    }
    if (fit.n_positive < min_per_branch || fit.n_negative < min_per_branch) {
        throw FitError("fit_cusp_exponent: fewer than " + std::to_string(min_per_branch) +
                       " points per branch in the window");
    }
    const double n = static_cast<double>(fit.n_used);
    const double denom = n * sxx - sx * sx;
    if (denom <= 0.0) throw FitError("fit_cusp_exponent: degenerate abscissae");
    fit.slope = (n * sxy - sx * sy) / denom;
    fit.intercept = (sy - fit.slope * sx) / n;
    return fit;
}

/// Exponent fit on a traced fold curve, using |w - w*| relative to the cusp.
/// Default window: the decade below half the largest |w| on the curve.
inline ExponentFit cusp_exponent_fit(const FoldCurve& curve, std::optional<std::pair<double, double>> window = {}) {
    std::vector<double> w, z, br;
    double wmax = 0.0;
    for (const auto& p : curve.points) {
        w.push_back(p.w);
        z.push_back(p.z);
        br.push_back(p.u > 0.0 ? 1.0 : (p.u < 0.0 ? -1.0 : 0.0));
        wmax = std::max(wmax, std::abs(p.w));
    }
    double hi = 0.5 * wmax;
    double lo = 0.1 * hi;
    if (window) std::tie(lo, hi) = *window;
    return fit_cusp_exponent(w, z, br, lo, hi);
}

}  // namespace cuspkit
