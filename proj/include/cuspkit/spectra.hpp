#pragma once

// Symmetric equilibria, the symmetric/antisymmetric Jacobian blocks
//     J_s = [[f1 + f2, fy], [eps gx, eps gy]],  J_a = [[f1 - f2, fy], [eps gx, eps gy]],
// equilibrium classification, and location of the singular Hopf point where
// trace(J_a) = 0.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cuspkit/linalg.hpp"
#include "cuspkit/model.hpp"

namespace cuspkit {

struct SymmetricEquilibrium {
    double x = 0;
    double y = 0;
    double residual = 0;  // max(|f(x,x,y)|, |g(x,y)|)
    int iterations = 0;
};

/// 2D damped Newton on (f(x, x, y), g(x, y)) = 0.
inline SymmetricEquilibrium find_symmetric_equilibrium(const ModelDefinition& m, std::pair<double, double> guess,
                                                       const Tolerances& tol = default_tolerances()) {
    const Domain& dom = m.domain();
    auto eval = [&](double x, double y, Mat2* J) {
        if (!dom.contains(x, y)) throw DomainError("find_symmetric_equilibrium: iterate left the domain");
        const Dual1 fx = m.f<Dual1>(Dual1{x, 1.0}, Dual1{x, 1.0}, Dual1{y, 0.0});
        const Dual1 fy = m.f<Dual1>(Dual1{x, 0.0}, Dual1{x, 0.0}, Dual1{y, 1.0});
        const Dual1 gx = m.g<Dual1>(Dual1{x, 1.0}, Dual1{y, 0.0});
        const Dual1 gy = m.g<Dual1>(Dual1{x, 0.0}, Dual1{y, 1.0});
        if (J) *J = {{{fx.d, fy.d}, {gx.d, gy.d}}};
        return Vec2{fx.v, gx.v};
    };
    auto norm = [](const Vec2& v) { return std::max(std::abs(v[0]), std::abs(v[1])); };

    double x = guess.first;
    double y = guess.second;
    Mat2 J{};
    Vec2 F = eval(x, y, &J);
    for (int it = 0; it < tol.newton_max_iter; ++it) {
        if (norm(F) < tol.equilibrium_residual) return {x, y, norm(F), it};
        Vec2 d{};
        if (!solve2(J, {-F[0], -F[1]}, d)) {
            throw RootFindError("find_symmetric_equilibrium: singular Jacobian", norm(F));
        }
        double lambda = 1.0;
        bool accepted = false;
        while (lambda > 1e-8) {
            const double xn = x + lambda * d[0];
            const double yn = y + lambda * d[1];
            if (dom.contains(xn, yn)) {
                Mat2 Jn{};
                const Vec2 Fn = eval(xn, yn, &Jn);
                if (norm(Fn) < norm(F)) {
                    x = xn;
                    y = yn;
                    F = Fn;
                    J = Jn;
                    accepted = true;
                    break;
                }
            }
            lambda *= 0.5;
        }
        if (!accepted) {
            if (norm(F) < tol.equilibrium_residual) return {x, y, norm(F), it};
            throw RootFindError("find_symmetric_equilibrium: line search failed", norm(F));
        }
    }
    if (norm(F) < tol.equilibrium_residual) return {x, y, norm(F), tol.newton_max_iter};
    throw RootFindError("find_symmetric_equilibrium: no convergence", norm(F));
}

enum class Classification { saddle_focus, stable_focus, unstable_focus, stable_node, unstable_node, saddle, nonhyperbolic };

inline const char* to_string(Classification c) {
    switch (c) {
        case Classification::saddle_focus: return "saddle_focus";
        case Classification::stable_focus: return "stable_focus";
        case Classification::unstable_focus: return "unstable_focus";
        case Classification::stable_node: return "stable_node";
        case Classification::unstable_node: return "unstable_node";
        case Classification::saddle: return "saddle";
        case Classification::nonhyperbolic: return "nonhyperbolic";
    }
    return "unknown";
}

/// Classification of an equilibrium from its full spectrum:
///   nonhyperbolic   some |Re lambda| <= threshold
///   saddle_focus    eigenvalues on both sides of the imaginary axis, at least one complex pair
///   saddle          both sides, all real
///   stable_focus / stable_node       all Re < 0, with / without a complex pair
///   unstable_focus / unstable_node   all Re > 0, with / without a complex pair
template <typename Range>
Classification classify_spectrum(const Range& eigs, double threshold) {
    bool complex_pair = false;
    int pos = 0;
    int neg = 0;
    for (const Complex& l : eigs) {
        if (std::abs(l.real()) <= threshold) return Classification::nonhyperbolic;
        if (l.imag() != 0.0) complex_pair = true;
        (l.real() > 0.0 ? pos : neg) += 1;
    }
    if (pos > 0 && neg > 0) return complex_pair ? Classification::saddle_focus : Classification::saddle;
    if (pos == 0) return complex_pair ? Classification::stable_focus : Classification::stable_node;
    return complex_pair ? Classification::unstable_focus : Classification::unstable_node;
}

struct JacobianBlocks {
    Mat2 j_s{};
    Mat2 j_a{};
    EigenPair eig_s;
    EigenPair eig_a;
    Classification classification = Classification::nonhyperbolic;
    double det_s = 0;
    double det_s_leading = 0;  // eps (2 f1 gy - fy gx), the leading-order approximation
    double epsilon = 0;
};

/// Blocks at the symmetric point (x, x, y, y) for time-scale ratio eps.
inline JacobianBlocks jacobian_blocks(const ModelDefinition& m, double x, double y, double eps,
                                      const Tolerances& tol = default_tolerances()) {
    const FJet3 f = f_jet_dual(m, x, x, y);
    const GJet2 g = g_jet_dual(m, x, y);
    JacobianBlocks b;
    b.epsilon = eps;
    b.j_s = {{{f.f1 + f.f2, f.fy}, {eps * g.gx, eps * g.gy}}};
    b.j_a = {{{f.f1 - f.f2, f.fy}, {eps * g.gx, eps * g.gy}}};
    b.eig_s = eigenvalues(b.j_s);
    b.eig_a = eigenvalues(b.j_a);
    b.det_s = det(b.j_s);
    b.det_s_leading = eps * (2.0 * f.f1 * g.gy - f.fy * g.gx);
    const std::array<Complex, 4> all{b.eig_s.first, b.eig_s.second, b.eig_a.first, b.eig_a.second};
    b.classification = classify_spectrum(all, tol.nonhyperbolic);
    return b;
}

inline JacobianBlocks jacobian_blocks(const ModelDefinition& m, double x, double y,
                                      const Tolerances& tol = default_tolerances()) {
    return jacobian_blocks(m, x, y, m.epsilon(), tol);
}

// -- full-system validation ------------------------------------------------------

/// Central-difference Jacobian of eval_field; the step per coordinate is
/// 1e-6 of the model's characteristic scale.
inline Eigen::Matrix4d full_jacobian_fd(const ModelDefinition& m, const PairState& s) {
    const Vec4 base = s.to_array();
    const std::array<double, 4> h{1e-6 * m.info().x_scale, 1e-6 * m.info().x_scale, 1e-6 * m.info().y_scale,
                                  1e-6 * m.info().y_scale};
    Eigen::Matrix4d J;
    for (int c = 0; c < 4; ++c) {
        Vec4 p = base;
        Vec4 q = base;
        p[c] += h[c];
        q[c] -= h[c];
        const Vec4 fp = eval_field(m, PairState::from_array(p));
        const Vec4 fq = eval_field(m, PairState::from_array(q));
        for (int r = 0; r < 4; ++r) J(r, c) = (fp[r] - fq[r]) / (2.0 * h[c]);
    }
    return J;
}

inline std::array<Complex, 4> full_eigenvalues(const Eigen::Matrix4d& J) {
    Eigen::EigenSolver<Eigen::Matrix4d> es(J, false);
    if (es.info() != Eigen::Success) throw AnalysisError("full_eigenvalues: eigensolver failed");
    std::array<Complex, 4> out;
    for (int k = 0; k < 4; ++k) out[k] = es.eigenvalues()[k];
    return out;
}

/// Largest distance between two eigenvalue multisets under greedy
/// nearest-neighbour matching.
inline double eigenvalue_set_distance(std::array<Complex, 4> a, std::array<Complex, 4> b) {
    std::array<bool, 4> used{};
    double worst = 0.0;
    for (const Complex& x : a) {
        int best = -1;
        double bd = 0.0;
        for (int k = 0; k < 4; ++k) {
            if (used[k]) continue;
            const double d = std::abs(x - b[k]);
            if (best < 0 || d < bd) {
                best = k;
                bd = d;
            }
        }
        used[best] = true;
        worst = std::max(worst, bd);
    }
    return worst;
}

inline std::array<Complex, 4> block_union(const JacobianBlocks& b) {
    return {b.eig_s.first, b.eig_s.second, b.eig_a.first, b.eig_a.second};
}

// -- singular Hopf ---------------------------------------------------------------

struct HopfResult {
    std::string parameter_name;
    double mu_h = 0;
    double epsilon = 0;
    SymmetricEquilibrium equilibrium;
    double trace_a = 0;
    double det_a = 0;
    double omega_h = 0;
    double predicted_omega = 0;  // sqrt(eps |fy gx|)
    double omega_ratio = 0;      // omega_h / predicted_omega
    JacobianBlocks blocks;
};

namespace detail {

struct BranchPoint {
    double mu;
    SymmetricEquilibrium eq;
    double trace_a;
};

inline BranchPoint branch_point(const ModelDefinition& base, const std::string& name, double mu, double eps,
                                std::pair<double, double> seed, const Tolerances& tol) {
    const ModelDefinition m = base.with_parameter(name, mu).with_epsilon(eps);
    const SymmetricEquilibrium eq = find_symmetric_equilibrium(m, seed, tol);
    const JacobianBlocks b = jacobian_blocks(m, eq.x, eq.y, eps, tol);
    return {mu, eq, trace(b.j_a)};
}

}  // namespace detail

/// Continues the symmetric equilibrium in `parameter_name` across the bracket
/// (natural continuation, previous solution as seed, step halving on
/// failure), brackets a sign change of trace(J_a) = f1 - f2 + eps gy and
/// polishes it by safeguarded secant steps (Illinois) to |trace| <
/// tol.hopf_trace. Throws NotFoundError without a sign change and
/// WrongBranchError when det(J_a) <= 0 at the root.
inline HopfResult locate_singular_hopf(const ModelDefinition& model, const std::string& parameter_name,
                                       std::pair<double, double> bracket, std::optional<double> epsilon = {},
                                       const Tolerances& tol = default_tolerances(), int scan_steps = 40) {
    const double eps = epsilon.value_or(model.epsilon());
    const auto [lo, hi] = bracket;
    if (!(lo < hi)) throw NotFoundError("locate_singular_hopf: empty bracket");
    if (!model.params().contains(parameter_name)) {
        throw ConfigError("locate_singular_hopf: unknown parameter '" + parameter_name + "'");
    }

    const double nominal = (hi - lo) / scan_steps;
    detail::BranchPoint prev =
        detail::branch_point(model, parameter_name, lo, eps, model.info().equilibrium_guess, tol);
    std::optional<std::pair<detail::BranchPoint, detail::BranchPoint>> found;
    if (prev.trace_a == 0.0) found = {prev, prev};
    while (!found && prev.mu < hi) {
        double step = std::min(nominal, hi - prev.mu);
        std::optional<detail::BranchPoint> next;
        while (!next) {
            try {
                next = detail::branch_point(model, parameter_name, prev.mu + step, eps, {prev.eq.x, prev.eq.y}, tol);
            } catch (const Error&) {
                step *= 0.5;
                if (step < 1e-8 * nominal) throw NotFoundError("locate_singular_hopf: equilibrium branch lost");
            }
        }
        if ((prev.trace_a < 0.0) != (next->trace_a < 0.0) || next->trace_a == 0.0) found = {prev, *next};
        prev = *next;
    }
    if (!found) throw NotFoundError("locate_singular_hopf: trace(J_a) has no sign change in the bracket");

    detail::BranchPoint a = found->first;
    detail::BranchPoint b = found->second;
    detail::BranchPoint root = std::abs(a.trace_a) < std::abs(b.trace_a) ? a : b;
    int side = 0;
    for (int it = 0; it < 200 && std::abs(root.trace_a) >= tol.hopf_trace; ++it) {
        double fa = a.trace_a;
        double fb = b.trace_a;
        if (side == -1) fa *= 0.5;
        if (side == 1) fb *= 0.5;
        double mu = (a.mu * fb - b.mu * fa) / (fb - fa);
        if (!(mu > std::min(a.mu, b.mu) && mu < std::max(a.mu, b.mu))) mu = 0.5 * (a.mu + b.mu);
        const std::pair<double, double> seed{root.eq.x, root.eq.y};
        root = detail::branch_point(model, parameter_name, mu, eps, seed, tol);
        if ((root.trace_a < 0.0) == (a.trace_a < 0.0)) {
            a = root;
            side = 1;
        } else {
            b = root;
            side = -1;
        }
        if (std::abs(b.mu - a.mu) <= 4.0 * std::numeric_limits<double>::epsilon() * std::abs(mu)) break;
    }
    if (std::abs(root.trace_a) >= tol.hopf_trace) {
        throw RootFindError("locate_singular_hopf: trace(J_a) not reduced below tolerance", std::abs(root.trace_a));
    }

    const ModelDefinition m = model.with_parameter(parameter_name, root.mu).with_epsilon(eps);
    HopfResult r;
    r.parameter_name = parameter_name;
    r.mu_h = root.mu;
    r.epsilon = eps;
    r.equilibrium = root.eq;
    r.blocks = jacobian_blocks(m, root.eq.x, root.eq.y, eps, tol);
    r.trace_a = trace(r.blocks.j_a);
    r.det_a = det(r.blocks.j_a);
    r.omega_h = std::abs(r.blocks.eig_a.second.imag());
    const double fy = r.blocks.j_a[0][1];
    const double gx = r.blocks.j_a[1][0] / eps;
    r.predicted_omega = std::sqrt(eps * std::abs(fy * gx));
    r.omega_ratio = r.omega_h / r.predicted_omega;
    if (!(r.det_a > 0.0)) {
        throw WrongBranchError("locate_singular_hopf: det(J_a) <= 0 at the trace root (steady-state bifurcation)");
    }
    return r;
}

}  // namespace cuspkit
