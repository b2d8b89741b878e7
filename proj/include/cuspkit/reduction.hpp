#pragma once

// Center-manifold reduction at a symmetric cusp: coefficients of the reduced
// three-dimensional system
//
//     u' = fy z + Omega u w + Gamma u^3
//     w' = eps (g0 + nu_eff w + rho_eff u^2)
//     z' = eps (gx u + gy z)
//
// its critical surface z = Q(u, w), the conditions C1-C6, and the SAO count
// from the desingularized reduced flow.

#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <string>

#include "cuspkit/linalg.hpp"
#include "cuspkit/manifold.hpp"
#include "cuspkit/model.hpp"

namespace cuspkit {

struct ReducedCoefficients {
    double x_star = 0, y_star = 0;
    double f1 = 0, f2 = 0, fy = 0;
    double f11 = 0, f12 = 0, f22 = 0, f1y = 0, f2y = 0;
    double d_star = 0;
    double h0w = 0, huu = 0;
    double omega = 0, gamma = 0;
    double g0 = 0, gx = 0, gy = 0, gxx = 0;
    double nu_eff = 0, rho_eff = 0;
};

namespace detail {

inline ReducedCoefficients fill_first_order(const FJet3& j, const GJet2& g, double x, double y) {
    ReducedCoefficients rc;
    rc.x_star = x;
    rc.y_star = y;
    rc.f1 = j.f1;
    rc.f2 = j.f2;
    rc.fy = j.fy;
    rc.f11 = j.f11;
    rc.f12 = j.f12;
    rc.f22 = j.f22;
    rc.f1y = j.f1y;
    rc.f2y = j.f2y;
    rc.d_star = j.fy != 0.0 ? j.f11 - j.f22 - 2.0 * (j.f1 / j.fy) * (j.f1y - j.f2y)
                            : std::numeric_limits<double>::quiet_NaN();
    rc.g0 = g.g;
    rc.gx = g.gx;
    rc.gy = g.gy;
    rc.gxx = g.gxx;
    return rc;
}

inline void fill_reduction(ReducedCoefficients& rc, const FJet3& j) {
    const double f1 = j.f1;
    const double curv = j.f11 - 2.0 * j.f12 + j.f22;
    rc.h0w = -j.fy / (2.0 * f1);
    rc.huu = -curv / (4.0 * f1);
    rc.omega = -(j.fy / (2.0 * f1)) * rc.d_star;
    rc.gamma = (j.f111 - 3.0 * j.f112 + 3.0 * j.f122 - j.f222) / 6.0 - (j.f11 - j.f22) * curv / (4.0 * f1);
    rc.nu_eff = rc.gy - rc.gx * j.fy / (2.0 * f1);
    rc.rho_eff = rc.gx * rc.huu + 0.5 * rc.gxx;
}

}  // namespace detail

/// All reduction coefficients at the symmetric fold x*. Throws
/// DegenerateCuspError when f1 vanishes (the center-manifold graph is
/// undefined).
inline ReducedCoefficients reduction_coefficients(const ModelDefinition& m, double x_star,
                                                  const Tolerances& tol = default_tolerances()) {
    const double y = solve_Y(m, x_star, x_star, m.info().y_guess, tol);
    const FJet3 j = f_jet(m, x_star, x_star, y, tol);
    const GJet2 g = g_jet(m, x_star, y, tol);
    if (std::abs(j.fy) < tol.fy_min) throw SolvabilityError("reduction_coefficients: f_y vanishes");
    if (std::abs(j.f1) < tol.nondegeneracy) throw DegenerateCuspError("reduction_coefficients: f1 vanishes at the cusp");
    ReducedCoefficients rc = detail::fill_first_order(j, g, x_star, y);
    detail::fill_reduction(rc, j);
    return rc;
}

/// Right-hand side of the truncated reduced system.
inline std::array<double, 3> reduced_field(const ReducedCoefficients& rc, double u, double w, double z, double eps) {
    return {rc.fy * z + rc.omega * u * w + rc.gamma * u * u * u, eps * (rc.g0 + rc.nu_eff * w + rc.rho_eff * u * u),
            eps * (rc.gx * u + rc.gy * z)};
}

/// Critical surface z = Q(u, w) of the truncated reduced system.
inline double q_surface(const ReducedCoefficients& rc, double u, double w) {
    return -(rc.omega / rc.fy) * u * w - (rc.gamma / rc.fy) * u * u * u;
}

inline double q_surface_du(const ReducedCoefficients& rc, double u, double w) {
    return -(rc.omega / rc.fy) * w - 3.0 * (rc.gamma / rc.fy) * u * u;
}

inline double q_surface_dw(const ReducedCoefficients& rc, double u) { return -(rc.omega / rc.fy) * u; }

/// w on the fold of Q (where dQ/du = 0) over a given u.
inline double q_fold_w(const ReducedCoefficients& rc, double u) { return -(3.0 * rc.gamma / rc.omega) * u * u; }

/// The constant z^2 / w^3 along the fold of Q.
inline double q_fold_cusp_constant(const ReducedCoefficients& rc) {
    return -4.0 * rc.omega * rc.omega * rc.omega / (27.0 * rc.fy * rc.fy * rc.gamma);
}

// -- opening and conditions ----------------------------------------------------------

enum class Opening { opens_w_negative, opens_w_positive };

inline const char* to_string(Opening o) {
    return o == Opening::opens_w_negative ? "opens_w_negative" : "opens_w_positive";
}

struct OpeningClass {
    Opening opening;
    bool central_sheet_attracting;
};

/// The cusp of Q opens toward w < 0 iff Gamma/Omega > 0; its central sheet is
/// attracting iff (Gamma/Omega > 0 and Omega/fy < 0) or (Gamma/Omega < 0 and
/// Omega/fy > 0).
inline OpeningClass classify_opening(const ReducedCoefficients& rc) {
    if (rc.omega == 0.0 || rc.gamma == 0.0 || rc.fy == 0.0 || !std::isfinite(rc.omega) ||
        !std::isfinite(rc.gamma) || !std::isfinite(rc.fy)) {
        throw DegenerateCuspError("classify_opening: Omega, Gamma and f_y must be nonzero");
    }
    const double go = rc.gamma / rc.omega;
    const double of = rc.omega / rc.fy;
    return {go > 0.0 ? Opening::opens_w_negative : Opening::opens_w_positive,
            (go > 0.0 && of < 0.0) || (go < 0.0 && of > 0.0)};
}

struct ConditionCheck {
    bool ok = false;
    double witness = 0;
};

struct ConditionReport {
    ConditionCheck c1, c2, c3, c4, c5, c6;  // witnesses: f2, gy, fy*gx, Gamma, g0, g0*Omega
    bool all_satisfied = false;
    std::optional<Opening> opening;
    std::optional<bool> central_sheet_attracting;
    double margin = 0;
};

/// Evaluates C1: f2 < 0, C2: gy <= 0, C3: fy gx < 0, C4: Gamma != 0,
/// C5: g0 != 0, C6: g0 Omega > 0 and Gamma > 0. Strict inequalities use
/// tol.condition_margin. When f1 vanishes, Omega and Gamma are undefined
/// (reported as NaN) and C4, C6 fail.
inline ConditionReport conditions_from(const ReducedCoefficients& rc, const Tolerances& tol = default_tolerances()) {
    const double mg = tol.condition_margin;
    ConditionReport r;
    r.margin = mg;
    r.c1 = {rc.f2 < -mg, rc.f2};
    r.c2 = {rc.gy <= mg, rc.gy};
    r.c3 = {rc.fy * rc.gx < -mg, rc.fy * rc.gx};
    const bool finite = std::isfinite(rc.gamma) && std::isfinite(rc.omega);
    r.c4 = {finite && std::abs(rc.gamma) > mg, rc.gamma};
    r.c5 = {std::abs(rc.g0) > mg, rc.g0};
    r.c6 = {finite && rc.g0 * rc.omega > mg && rc.gamma > mg, rc.g0 * rc.omega};
    r.all_satisfied = r.c1.ok && r.c2.ok && r.c3.ok && r.c4.ok && r.c5.ok && r.c6.ok;
    if (finite && rc.omega != 0.0 && rc.gamma != 0.0 && rc.fy != 0.0) {
        const OpeningClass oc = classify_opening(rc);
        r.opening = oc.opening;
        r.central_sheet_attracting = oc.central_sheet_attracting;
    }
    return r;
}

/// Reduction coefficients that tolerate a vanishing f1 (Omega, Gamma and the
/// center-manifold terms become NaN) for condition reporting.
inline ReducedCoefficients reduction_coefficients_lenient(const ModelDefinition& m, double x_star,
                                                          const Tolerances& tol = default_tolerances()) {
    const double y = solve_Y(m, x_star, x_star, m.info().y_guess, tol);
    const FJet3 j = f_jet(m, x_star, x_star, y, tol);
    const GJet2 g = g_jet(m, x_star, y, tol);
    ReducedCoefficients rc = detail::fill_first_order(j, g, x_star, y);
    if (std::abs(j.f1) < tol.nondegeneracy || std::abs(j.fy) < tol.fy_min) {
        const double nan = std::numeric_limits<double>::quiet_NaN();
        rc.h0w = rc.huu = rc.omega = rc.gamma = rc.nu_eff = rc.rho_eff = nan;
    } else {
        detail::fill_reduction(rc, j);
    }
    return rc;
}

inline ConditionReport check_conditions(const ModelDefinition& m, double x_star,
                                        const Tolerances& tol = default_tolerances()) {
    return conditions_from(reduction_coefficients_lenient(m, x_star, tol), tol);
}

// -- desingularized reduced flow and SAO count ------------------------------------------

/// Sign k = -sgn(f_y) of the desingularized flow. k = 1 is multiplication by
/// -dQ/du for f_y < 0; k = -1 gives the same flow for the model under y -> -y.
inline double desingularization_orientation(const ReducedCoefficients& rc) { return rc.fy < 0.0 ? 1.0 : -1.0; }

/// Desingularized slow flow on z = Q(u, w) in the (u, w) chart:
///     u' = -k (gx u + gy Q - Q_w W),   w' = -k Q_u W,   W = g0 + nu_eff w + rho_eff u^2,
/// obtained by eliminating z through dz = Q_u du + Q_w dw and multiplying the
/// slow flow by -k Q_u with k = desingularization_orientation.
inline Vec2 desingularized_field(const ReducedCoefficients& rc, double u, double w) {
    const double k = desingularization_orientation(rc);
    const double W = rc.g0 + rc.nu_eff * w + rc.rho_eff * u * u;
    const double Q = q_surface(rc, u, w);
    return {-k * (rc.gx * u + rc.gy * Q - q_surface_dw(rc, u) * W), -k * q_surface_du(rc, u, w) * W};
}

/// Closed-form linearization of desingularized_field at the origin.
inline Mat2 desingularized_jacobian(const ReducedCoefficients& rc) {
    const double k = desingularization_orientation(rc);
    const double of = rc.omega / rc.fy;
    return {{{-k * (rc.gx + of * rc.g0), 0.0}, {0.0, k * of * rc.g0}}};
}

struct SaoPrediction {
    double lambda_1 = 0;  // raw eigenvalues of the desingularized linearization
    double lambda_2 = 0;
    double lambda_strong = 0;  // larger magnitude
    double lambda_weak = 0;    // smaller magnitude
    double ratio = 0;          // |lambda_strong| / |lambda_weak|
    std::optional<int> n_sao;
    bool resonance_flag = false;
    double fd_check_gap = 0;  // relative gap between closed-form and finite-difference Jacobian
};

/// Ratio and count from an eigenvalue pair. The ratio is formed by magnitude,
/// |large| / |small| >= 1; n = floor(ratio) unless the ratio is within
/// tol.resonance of an integer, in which case n is undefined and the
/// resonance flag is set.
inline SaoPrediction sao_prediction_from(double l1, double l2, const Tolerances& tol = default_tolerances()) {
    SaoPrediction p;
    p.lambda_1 = l1;
    p.lambda_2 = l2;
    const bool first_strong = std::abs(l1) >= std::abs(l2);
    p.lambda_strong = first_strong ? l1 : l2;
    p.lambda_weak = first_strong ? l2 : l1;
    p.ratio = std::abs(p.lambda_strong) / std::abs(p.lambda_weak);
    if (!std::isfinite(p.ratio)) {
        p.resonance_flag = false;
        return p;
    }
    const double nearest = std::round(p.ratio);
    p.resonance_flag = std::abs(p.ratio - nearest) < tol.resonance;
    if (!p.resonance_flag) p.n_sao = static_cast<int>(std::floor(p.ratio));
    return p;
}

inline std::optional<int> sao_count(const SaoPrediction& p) { return p.resonance_flag ? std::nullopt : p.n_sao; }

/// Eigenvalues of the desingularized reduced flow at the cusp with the SAO
/// count. The linearization is diagonal, so the eigenvalues are
/// -k (gx + (Omega/fy) g0) and k (Omega/fy) g0. The closed-form Jacobian is cross-checked against central
/// differences of desingularized_field. With `require_negative`, a
/// non-negative eigenvalue raises InconsistencyError.
inline SaoPrediction desingularized_eigenvalues(const ReducedCoefficients& rc, bool require_negative = true,
                                                const Tolerances& tol = default_tolerances()) {
    if (!std::isfinite(rc.omega) || !std::isfinite(rc.gamma) || rc.fy == 0.0) {
        throw DegenerateCuspError("desingularized_eigenvalues: reduction coefficients undefined");
    }
    const Mat2 J = desingularized_jacobian(rc);

    const double h = 1e-4;
    Mat2 Jfd{};
    for (int c = 0; c < 2; ++c) {
        const Vec2 p = c == 0 ? desingularized_field(rc, h, 0.0) : desingularized_field(rc, 0.0, h);
        const Vec2 q = c == 0 ? desingularized_field(rc, -h, 0.0) : desingularized_field(rc, 0.0, -h);
        Jfd[0][c] = (p[0] - q[0]) / (2.0 * h);
        Jfd[1][c] = (p[1] - q[1]) / (2.0 * h);
    }
    double scale = 0.0;
    double gap = 0.0;
    for (int r = 0; r < 2; ++r) {
        for (int c = 0; c < 2; ++c) {
            scale = std::max(scale, std::abs(J[r][c]));
            gap = std::max(gap, std::abs(J[r][c] - Jfd[r][c]));
        }
    }
    const double rel = scale > 0.0 ? gap / scale : gap;
    if (rel > 1e-6) {
        throw InconsistencyError("desingularized_eigenvalues: closed-form and finite-difference Jacobians disagree");
    }

    SaoPrediction p = sao_prediction_from(J[0][0], J[1][1], tol);
    p.fd_check_gap = rel;
    if (require_negative && (p.lambda_1 >= 0.0 || p.lambda_2 >= 0.0)) {
        throw InconsistencyError("desingularized_eigenvalues: non-negative eigenvalue although conditions hold");
    }
    return p;
}

}  // namespace cuspkit
