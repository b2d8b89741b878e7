// Acceptance run: one PASS/FAIL line per criterion, nonzero exit when any
// criterion fails. Lines starting with "      info" are diagnostics and never
// affect a verdict.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "cuspkit/dynamics.hpp"
#include "cuspkit/manifold.hpp"
#include "cuspkit/models.hpp"
#include "cuspkit/reduction.hpp"
#include "cuspkit/signature.hpp"
#include "cuspkit/spectra.hpp"

using namespace cuspkit;

namespace {

struct Outcome {
    bool pass = true;
    std::ostringstream detail;
    std::vector<std::string> info;

    // Records a sub-check; the criterion passes only if all of them do.
    void require(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            detail << "[failed: " << what << "] ";
        }
    }
};

int failures = 0;

void criterion(int id, const std::string& title, const std::function<void(Outcome&)>& body) {
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    try {
        body(o);
    } catch (const std::exception& e) {
        o.pass = false;
        o.detail << "[exception: " << e.what() << "]";
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (!o.pass) ++failures;
    std::printf("%s %2d %s: %s(%.2f s)\n", o.pass ? "PASS" : "FAIL", id, title.c_str(), o.detail.str().c_str(), secs);
    for (const auto& line : o.info) std::printf("      info %s\n", line.c_str());
    std::fflush(stdout);
}

double fold_of(const ModelDefinition& m) { return find_symmetric_fold(m, m.info().fold_bracket).front().x; }

double sgn(double v) { return v > 0 ? 1.0 : (v < 0 ? -1.0 : 0.0); }

bool within_rel(double a, double b, double tol) { return std::abs(a - b) <= tol * std::max(std::abs(a), std::abs(b)); }

struct Box {
    double x_lo, x_hi, y_lo, y_hi;
};

Box sample_box(const ModelDefinition& m) {
    if (m.name() == "curtu") return {0.05, 0.95, 0.0, 1.0};
    return {-70.0, 30.0, 0.0, 0.6};
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string counts_string(const std::vector<int>& v) {
    std::ostringstream s;
    s << '[';
    for (std::size_t k = 0; k < v.size(); ++k) s << (k ? "," : "") << v[k];
    s << ']';
    return s.str();
}

MmoSignature timed_signature(const ModelDefinition& m, double t_end, double& secs) {
    const auto t0 = std::chrono::steady_clock::now();
    SimulationOptions so;
    so.t_end = t_end;
    const Trajectory tr = simulate(m, so);
    MmoSignature s = analyze_signature(tr);
    secs = seconds_since(t0);
    return s;
}

}  // namespace

int main() {
    const CurtuParams cp;
    const MorrisLecarParams mp;
    const ModelDefinition curtu = build_curtu(cp);
    const ModelDefinition ml = build_morris_lecar(mp);

    criterion(1, "Curtu symmetric fold", [&](Outcome& o) {
        const auto roots = find_symmetric_fold(curtu, Interval{0.5, 0.99});
        o.require(roots.size() == 1, "exactly one root on (0.5, 0.99)");
        const double u = roots.at(0).x;
        const double closed = curtu_upper_fold(cp);
        o.detail << "u*=" << u << " closed-form=" << closed << ' ';
        o.require(std::abs(u - 0.933) <= 1e-3, "|u* - 0.933| <= 1e-3");
        o.require(std::abs(u - closed) <= 1e-6, "|u* - closed form| <= 1e-6");
    });

    criterion(2, "Curtu cusp expansion", [&](Outcome& o) {
        const double u = fold_of(curtu);
        const CuspReport c = cusp_test(curtu, u);
        const double phi2 = curtu_phi_d2(cp, u);
        o.detail << "B=" << c.B << " phi''(u*)=" << phi2 << ' ';
        o.require(std::abs(c.B + 22.2) <= 0.5, "|B + 22.2| <= 0.5");
        o.require(std::abs(c.B - phi2) <= 1e-4, "|B - phi''(u*)| <= 1e-4");
    });

    criterion(3, "Curtu reduction", [&](Outcome& o) {
        const double u = fold_of(curtu);
        const ReducedCoefficients rc = reduction_coefficients(curtu, u);
        const ConditionReport cr = conditions_from(rc);
        const OpeningClass op = classify_opening(rc);
        o.detail << "g0*=" << rc.g0 << " Omega=" << rc.omega << " Gamma=" << rc.gamma
                 << " opening=" << to_string(op.opening) << (op.central_sheet_attracting ? "/attracting " : "/repelling ");
        o.require(std::abs(rc.g0 - 0.0036) <= 2e-4, "|g0* - 0.0036| <= 2e-4");
        o.require(rc.omega > 0, "Omega > 0");
        o.require(rc.gamma > 0, "Gamma > 0");
        o.require(cr.all_satisfied, "C1-C6 all true");
        o.require(op.opening == Opening::opens_w_negative && op.central_sheet_attracting,
                  "opening = (opens_w_negative, attracting)");
    });

    criterion(4, "Curtu equilibrium", [&](Outcome& o) {
        const SymmetricEquilibrium eq = find_symmetric_equilibrium(curtu, curtu.info().equilibrium_guess);
        const double a_star = find_symmetric_fold(curtu, curtu.info().fold_bracket).front().y;
        const double w_eq = eq.y - a_star;
        const JacobianBlocks b = jacobian_blocks(curtu, eq.x, eq.y, 0.01);
        o.detail << "u_eq=" << eq.x << " w_eq=" << w_eq << " class=" << to_string(b.classification) << ' ';
        o.require(std::abs(eq.x - 0.931) <= 1e-3, "|u_eq - 0.931| <= 1e-3");
        o.require(w_eq > 0 && w_eq < 0.005, "w_eq in (0, 0.005)");
        o.require(std::abs(w_eq - 0.0023) <= 0.001, "w_eq = 0.0023 +- 0.001");
        o.require(b.classification == Classification::saddle_focus, "saddle_focus at eps = 0.01");
    });

    criterion(5, "Morris-Lecar cusp", [&](Outcome& o) {
        const double v = fold_of(ml);
        const CuspReport c = cusp_test(ml, v);
        const ReducedCoefficients rc = reduction_coefficients(ml, v);
        const OpeningClass op = classify_opening(rc);
        o.detail << "V*=" << v << " D*=" << c.d_star << " Gamma=" << rc.gamma << " Omega=" << rc.omega
                 << " opening=" << to_string(op.opening) << (op.central_sheet_attracting ? "/attracting " : "/repelling ");
        o.require(std::abs(v + 30.36) <= 0.02, "|V* + 30.36| <= 0.02");
        o.require(std::abs(c.d_star - 0.02) <= 0.005, "|D* - 0.02| <= 0.005");
        o.require(std::abs(rc.gamma - 0.002) <= 0.0005, "|Gamma - 0.002| <= 0.0005");
        o.require(rc.omega < 0, "Omega < 0");
        o.require(op.opening == Opening::opens_w_positive && op.central_sheet_attracting,
                  "opening = (opens_w_positive, attracting)");
    });

    criterion(6, "Morris-Lecar slow values and equilibrium", [&](Outcome& o) {
        const FoldRoot f = find_symmetric_fold(ml, ml.info().fold_bracket).front();
        const double n_inf = ml_n_inf(mp, f.x);
        const ReducedCoefficients rc = reduction_coefficients(ml, f.x);
        const SymmetricEquilibrium eq = find_symmetric_equilibrium(ml, ml.info().equilibrium_guess);
        o.detail << "n*=" << f.y << " n_inf(V*)=" << n_inf << " g0*=" << rc.g0 << " V_eq=" << eq.x << " n_eq=" << eq.y
                 << ' ';
        o.require(std::abs(f.y - 0.1046) <= 5e-4, "|n* - 0.1046| <= 5e-4");
        o.require(std::abs(n_inf - 0.1036) <= 5e-4, "|n_inf(V*) - 0.1036| <= 5e-4");
        o.require(rc.g0 < 0, "g0* < 0");
        o.require(std::abs(eq.x + 30.24) <= 0.02, "|V_eq + 30.24| <= 0.02");
        o.require(std::abs(eq.y - 0.1044) <= 5e-4, "|n_eq - 0.1044| <= 5e-4");
        o.require(eq.y - f.y > -5e-4 && eq.y - f.y < 0, "n_eq - n* in (-5e-4, 0)");
    });

    criterion(7, "singular Hopf scaling", [&](Outcome& o) {
        std::vector<double> gaps;
        for (double eps : {1e-2, 1e-3, 1e-4}) {
            const HopfResult h = locate_singular_hopf(curtu, "b", {0.55, 0.66}, eps);
            o.require(std::abs(h.trace_a) < 1e-10, "|trace J_a| < 1e-10");
            o.require(h.det_a > 0, "det J_a > 0");
            gaps.push_back(std::abs(h.omega_ratio - 1.0));
            o.detail << "eps=" << eps << " b_h=" << h.mu_h << " |ratio-1|=" << gaps.back() << "; ";
        }
        o.require(gaps[0] <= 0.15, "|ratio - 1| <= 0.15 at eps = 1e-2");
        o.require(gaps[1] < gaps[0] && gaps[2] < gaps[1], "gap decreases monotonically");
    });

    std::vector<int> curtu_epoch_counts;
    criterion(8, "MMO reproduction", [&](Outcome& o) {
        double tc = 0, tm = 0;
        const MmoSignature c = timed_signature(curtu, 3000.0, tc);
        curtu_epoch_counts.clear();
        bool every_epoch_has_sao = c.complete_epochs > 0;
        for (const auto& ep : c.epochs) {
            if (!ep.complete) continue;
            curtu_epoch_counts.push_back(ep.sao_count);
            every_epoch_has_sao = every_epoch_has_sao && ep.sao_count >= 1;
        }
        o.detail << "Curtu signature=\"" << c.signature_string << "\" epochs=" << c.complete_epochs << " alternating="
                 << (c.alternating_cells ? (*c.alternating_cells ? "true" : "false") : "undefined") << " time=" << tc
                 << "s; ";
        o.require(c.complete_epochs >= 4, "Curtu >= 4 LAO epochs");
        o.require(every_epoch_has_sao, "Curtu every epoch has >= 1 SAO");
        o.require(c.alternating_cells.value_or(false), "Curtu alternating_cells = true");
        o.require(tc <= 10.0, "Curtu runtime <= 10 s");

        const MmoSignature m = timed_signature(ml, 20000.0, tm);
        o.detail << "Morris-Lecar signature=\"" << m.signature_string << "\" LAO=" << m.lao_count
                 << " SAO=" << m.sao_count << " time=" << tm << "s ";
        o.require(m.is_mmo && m.lao_count > 0 && m.sao_count > 0, "Morris-Lecar MMO with both event kinds");
        o.require(tm <= 30.0, "Morris-Lecar runtime <= 30 s");

        double t6 = 0;
        const MmoSignature longer = timed_signature(curtu, 6000.0, t6);
        o.info.push_back("Curtu t_end=6000: signature=\"" + longer.signature_string +
                         "\" complete_epochs=" + std::to_string(longer.complete_epochs));
        const SymmetricEquilibrium eq = find_symmetric_equilibrium(ml, ml.info().equilibrium_guess);
        o.info.push_back(std::string("Morris-Lecar equilibrium class at its default epsilon: ") +
                         to_string(jacobian_blocks(ml, eq.x, eq.y).classification));
        double t2 = 0;
        const ModelDefinition slower = ml.with_epsilon(0.2);
        const MmoSignature ms = timed_signature(slower, 20000.0 / 0.2, t2);
        o.info.push_back(std::string("Morris-Lecar with epsilon=0.2: equilibrium ") +
                         to_string(jacobian_blocks(slower, eq.x, eq.y).classification) + ", LAO=" +
                         std::to_string(ms.lao_count) + " SAO=" + std::to_string(ms.sao_count) +
                         " complete_epochs=" + std::to_string(ms.complete_epochs));
    });

    criterion(9, "cusp geometry exponent", [&](Outcome& o) {
        for (const ModelDefinition* m : {&curtu, &ml}) {
            const ExponentFit fit = cusp_exponent_fit(trace_fold_curve(*m, fold_of(*m), m->info().fold_arclength, 400));
            o.detail << m->name() << " slope=" << fit.slope << ' ';
            o.require(std::abs(fit.slope - 1.5) <= 0.05, m->name() + " slope = 1.5 +- 0.05");
        }
    });

    criterion(10, "spectral identity", [&](Outcome& o) {
        for (const ModelDefinition* m : {&curtu, &ml}) {
            const Box b = sample_box(*m);
            std::mt19937_64 rng(10);
            std::uniform_real_distribution<double> ux(b.x_lo, b.x_hi), uy(b.y_lo, b.y_hi);
            double worst = 0;
            for (int k = 0; k < 100; ++k) {
                const double x = ux(rng), y = uy(rng);
                const JacobianBlocks jb = jacobian_blocks(*m, x, y);
                const auto full = full_eigenvalues(full_jacobian_fd(*m, PairState{x, x, y, y}));
                worst = std::max(worst, eigenvalue_set_distance(block_union(jb), full));
            }
            o.detail << m->name() << " worst=" << worst << ' ';
            o.require(worst <= 1e-6, m->name() + " block vs 4x4 eigenvalues <= 1e-6");
        }
    });

    criterion(11, "invariance suites", [&](Outcome& o) {
        for (const ModelDefinition* m : {&curtu, &ml}) {
            const std::string n = m->name();
            const Box b = sample_box(*m);
            std::mt19937_64 rng(11);
            std::uniform_real_distribution<double> ux(b.x_lo, b.x_hi), uy(b.y_lo, b.y_hi);

            double field_gap = 0, an = 0, fd = 0;
            for (int k = 0; k < 100; ++k) {
                const PairState s{ux(rng), ux(rng), uy(rng), uy(rng)};
                const Vec4 lhs = eval_field(*m, exchange(s));
                const Vec4 rhs = exchange(eval_field(*m, s));
                for (int i = 0; i < 4; ++i) field_gap = std::max(field_gap, std::abs(lhs[i] - rhs[i]));

                const FJet3 fj = f_jet_dual(*m, s.x1, s.x2, s.y1);
                const GJet2 gj = g_jet_dual(*m, s.x1, s.y1);
                an = std::max({an, f_jet_analytic_gap(*m, fj, s.x1, s.x2, s.y1), g_jet_analytic_gap(*m, gj, s.x1, s.y1)});
                fd = std::max({fd, f_jet_fd_gap(*m, fj, s.x1, s.x2, s.y1), g_jet_fd_gap(*m, gj, s.x1, s.y1)});
            }
            o.require(field_gap <= 1e-12, n + " field equivariance");
            o.require(an <= 1e-8, n + " jets vs analytic <= 1e-8");
            o.require(fd <= 1e-5, n + " jets vs finite differences <= 1e-5");

            const PairState s0 = perturbed_equilibrium(*m);
            const double t1 = n == "curtu" ? 500.0 : 2000.0;
            const Trajectory ta = integrate(*m, s0, {0, t1});
            const Trajectory tb = integrate(*m, exchange(s0), {0, t1});
            double flow_gap = ta.size() == tb.size() ? 0.0 : INFINITY;
            for (std::size_t k = 0; k < ta.size() && k < tb.size(); ++k) {
                const Vec4 e = exchange(ta.states[k]);
                for (int i = 0; i < 4; ++i) flow_gap = std::max(flow_gap, std::abs(e[i] - tb.states[k][i]));
            }
            o.require(flow_gap <= 1e-8, n + " flow equivariance");

            const double xs = fold_of(*m);
            const ModelDefinition flipped = y_flip(*m);
            const ReducedCoefficients a = reduction_coefficients(*m, xs);
            const ReducedCoefficients f = reduction_coefficients(flipped, xs);
            const std::array<std::pair<double, double>, 6> pairs{
                {{a.fy, f.fy}, {a.omega, f.omega}, {a.gamma, f.gamma}, {a.gx, f.gx}, {a.gy, f.gy}, {a.g0, f.g0}}};
            const std::array<double, 6> expected{-1, -1, 1, -1, 1, -1};
            bool table = true;
            for (std::size_t k = 0; k < 6; ++k) {
                table = table && sgn(pairs[k].second) == expected[k] * sgn(pairs[k].first) &&
                        within_rel(pairs[k].second, expected[k] * pairs[k].first, 1e-8);
            }
            o.require(table, n + " y_flip sign table");

            const ConditionReport ca = conditions_from(a);
            const ConditionReport cf = conditions_from(f);
            bool verdicts = ca.all_satisfied == cf.all_satisfied;
            for (auto c : {&ConditionReport::c1, &ConditionReport::c2, &ConditionReport::c3, &ConditionReport::c4,
                           &ConditionReport::c5, &ConditionReport::c6}) {
                verdicts = verdicts && (ca.*c).ok == (cf.*c).ok;
            }
            o.require(verdicts, n + " C1-C6 verdicts invariant under y_flip");
            o.detail << n << ": field=" << field_gap << " flow=" << flow_gap << " analytic=" << an << " fd=" << fd
                     << "; ";
        }
    });

    criterion(12, "SAO-count formula", [&](Outcome& o) {
        const SaoPrediction a = sao_prediction_from(-10.0, -25.0);
        o.require(sao_count(a) == 2, "ratio 2.5 gives 2");
        const SaoPrediction r = sao_prediction_from(-1.0, -3.0);
        o.require(r.resonance_flag && !sao_count(r), "integer ratio is flagged and undefined");

        const ReducedCoefficients rc = reduction_coefficients(curtu, fold_of(curtu));
        const SaoPrediction p = desingularized_eigenvalues(rc);
        o.require(p.lambda_1 < 0 && p.lambda_2 < 0, "Curtu desingularized eigenvalues negative");
        o.require(p.n_sao.has_value() && *p.n_sao >= 1, "Curtu n_sao positive integer");
        o.detail << "Curtu lambda=(" << p.lambda_1 << ", " << p.lambda_2 << ") ratio=" << p.ratio
                 << " n_sao=" << (p.n_sao ? std::to_string(*p.n_sao) : "undefined") << ' ';
        o.info.push_back("observed SAO counts per complete Curtu epoch (u observable, t_end=3000): " +
                         counts_string(curtu_epoch_counts));
    });

    std::printf("%s: %d criteria failed\n", failures ? "FAIL" : "PASS", failures);
    return failures ? 1 : 0;
}
