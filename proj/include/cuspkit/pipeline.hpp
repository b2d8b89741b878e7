#pragma once

// End-to-end runs used by the command-line front-end: the cusp checklist
// (fold, cusp test, reduction, conditions, SAO count) and parameter sweeps.

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <optional>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include "cuspkit/dynamics.hpp"
#include "cuspkit/manifold.hpp"
#include "cuspkit/reduction.hpp"
#include "cuspkit/signature.hpp"
#include "cuspkit/spectra.hpp"

namespace cuspkit {

struct AnalysisOptions {
    std::optional<Interval> fold_bracket;  // model default when empty
    std::optional<double> fold_arclength;
    int fold_points = 400;
    bool trace_curve = true;
    bool strict_sao = true;  // false: a failed SAO prediction becomes a warning
    Tolerances tol = default_tolerances();
};

struct EquilibriumSummary {
    SymmetricEquilibrium eq;
    double w_eq = 0;  // y_eq - y*, the distance to the cusp along the slow direction
    JacobianBlocks blocks;
};

struct AnalysisReport {
    std::string model;
    double epsilon = 0;
    ParamMap params;
    std::vector<FoldRoot> fold_roots;
    FoldRoot fold{};
    CuspReport cusp;
    ReducedCoefficients coefficients;
    ConditionReport conditions;
    std::optional<SaoPrediction> sao;
    std::optional<EquilibriumSummary> equilibrium;
    std::optional<ExponentFit> exponent;
    FoldCurve curve;
    std::optional<std::string> sao_error;
    std::vector<std::string> warnings;
};

/// Fold -> cusp test -> reduction -> conditions -> desingularized
/// eigenvalues. Failing conditions are reported, not thrown; the SAO count is
/// only formed when all conditions hold. Numerical failures propagate.
inline AnalysisReport run_analysis(const ModelDefinition& m, const AnalysisOptions& o = {}) {
    AnalysisReport r;
    r.model = m.name();
    r.epsilon = m.epsilon();
    r.params = m.params();

    r.fold_roots = find_symmetric_fold(m, o.fold_bracket.value_or(m.info().fold_bracket), o.tol);
    if (r.fold_roots.empty()) throw NotFoundError("no symmetric fold in the bracket");
    if (r.fold_roots.size() > 1) r.warnings.emplace_back("several symmetric folds in the bracket; using the first");
    r.fold = r.fold_roots.front();

    r.cusp = cusp_test(m, r.fold.x, o.tol);
    r.coefficients = reduction_coefficients_lenient(m, r.fold.x, o.tol);
    r.conditions = conditions_from(r.coefficients, o.tol);
    if (r.conditions.all_satisfied) {
        try {
            r.sao = desingularized_eigenvalues(r.coefficients, true, o.tol);
        } catch (const InconsistencyError& ex) {
            if (o.strict_sao) throw;
            r.sao_error = ex.what();
            r.warnings.emplace_back(ex.what());
        }
        if (r.sao && r.sao->resonance_flag) r.warnings.emplace_back("eigenvalue ratio is resonant; n_sao undefined");
    } else {
        r.warnings.emplace_back("conditions C1-C6 not all satisfied; SAO count not formed");
    }

    try {
        EquilibriumSummary e;
        e.eq = find_symmetric_equilibrium(m, m.info().equilibrium_guess, o.tol);
        e.w_eq = e.eq.y - r.fold.y;
        e.blocks = jacobian_blocks(m, e.eq.x, e.eq.y, o.tol);
        r.equilibrium = e;
    } catch (const Error& ex) {
        r.warnings.emplace_back(std::string("symmetric equilibrium not found: ") + ex.what());
    }

    if (o.trace_curve) {
        try {
            r.curve = trace_fold_curve(m, r.fold.x, o.fold_arclength.value_or(m.info().fold_arclength), o.fold_points,
                                       o.tol);
            if (r.curve.truncated) r.warnings.push_back("fold curve truncated: " + r.curve.warning);
            r.exponent = cusp_exponent_fit(r.curve);
        } catch (const Error& ex) {
            r.warnings.emplace_back(std::string("fold-curve exponent unavailable: ") + ex.what());
        }
    }
    return r;
}

// -- sweeps ----------------------------------------------------------------------

struct SweepAxis {
    std::string param;
    double lo = 0;
    double hi = 0;
    int n = 1;

    [[nodiscard]] double value(int k) const { return n == 1 ? lo : lo + (hi - lo) * k / (n - 1); }
};

struct SweepCell {
    std::vector<double> values;
    std::string status = "ok";  // ok | sao_inconsistent | analysis_failed | simulation_failed
    std::string message;
    std::optional<AnalysisReport> analysis;
    std::optional<MmoSignature> signature;
};

struct SweepOptions {
    AnalysisOptions analysis;
    SimulationOptions simulation;  // t_end <= 0 selects the model default
    std::string observable = "u";
    SignatureOptions signature;
    int jobs = 1;
};

inline SweepCell run_sweep_cell(const ModelDefinition& base, const std::vector<SweepAxis>& axes,
                                const std::vector<int>& index, const SweepOptions& o) {
    SweepCell cell;
    ParamMap overrides;
    for (std::size_t a = 0; a < axes.size(); ++a) {
        cell.values.push_back(axes[a].value(index[a]));
        overrides[axes[a].param] = cell.values.back();
    }
    const ModelDefinition m = base.with_params(overrides);
    AnalysisOptions ao = o.analysis;
    ao.trace_curve = false;
    ao.strict_sao = false;
    try {
        cell.analysis = run_analysis(m, ao);
    } catch (const Error& ex) {
        cell.status = "analysis_failed";
        cell.message = ex.what();
        return cell;
    }
    if (cell.analysis->sao_error) {
        cell.status = "sao_inconsistent";
        cell.message = *cell.analysis->sao_error;
    }
    try {
        SimulationOptions so = o.simulation;
        if (!(so.t_end > 0.0)) so.t_end = m.info().t_end;
        cell.signature = analyze_signature(simulate(m, so), o.observable, o.signature);
    } catch (const Error& ex) {
        cell.status = "simulation_failed";
        cell.message = cell.message.empty() ? ex.what() : cell.message + "; " + ex.what();
    }
    return cell;
}

/// Grid cells in row-major order (first axis slowest). Cells are distributed
/// over `jobs` workers; results land in their grid slot, so the output does
/// not depend on scheduling.
inline std::vector<SweepCell> run_sweep(const ModelDefinition& base, const std::vector<SweepAxis>& axes,
                                        const SweepOptions& o) {
    if (axes.empty() || axes.size() > 2) throw ConfigError("sweep: one or two axes required");
    std::size_t total = 1;
    for (const auto& ax : axes) {
        if (ax.n < 1) throw ConfigError("sweep: axis '" + ax.param + "' needs at least one point");
        if (!base.params().contains(ax.param) && ax.param != "epsilon") {
            throw ConfigError("sweep: model '" + base.name() + "' has no parameter '" + ax.param + "'");
        }
        total *= static_cast<std::size_t>(ax.n);
    }
    auto index_of = [&](std::size_t flat) {
        std::vector<int> idx(axes.size());
        for (std::size_t a = axes.size(); a-- > 0;) {
            idx[a] = static_cast<int>(flat % static_cast<std::size_t>(axes[a].n));
            flat /= static_cast<std::size_t>(axes[a].n);
        }
        return idx;
    };

    std::vector<SweepCell> out(total);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t k = next++; k < total; k = next++) out[k] = run_sweep_cell(base, axes, index_of(k), o);
    };
    const int jobs = std::max(1, std::min<int>(o.jobs, static_cast<int>(total)));
    if (jobs == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    return out;
}

namespace detail {
inline std::string csv_safe(std::string s) {
    std::replace_if(s.begin(), s.end(), [](char c) { return c == ',' || c == '\n' || c == '\r' || c == '"'; }, ';');
    return s;
}
inline std::string num(double v) {
    if (!std::isfinite(v)) return "nan";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}
}  // namespace detail

inline void write_sweep_csv(std::ostream& os, const std::vector<SweepAxis>& axes, const std::vector<SweepCell>& cells) {
    for (const auto& ax : axes) os << ax.param << ',';
    os << "status,c1,c2,c3,c4,c5,c6,all_conditions,x_star,y_star,n_sao,y_eq,w_eq,classification,"
          "lao_count,sao_count,complete_epochs,is_mmo,alternating_cells,signature,message\n";
    for (const auto& c : cells) {
        for (double v : c.values) os << detail::num(v) << ',';
        os << c.status << ',';
        if (c.analysis) {
            const auto& cr = c.analysis->conditions;
            for (const auto* ck : {&cr.c1, &cr.c2, &cr.c3, &cr.c4, &cr.c5, &cr.c6}) os << (ck->ok ? "true" : "false") << ',';
            os << (cr.all_satisfied ? "true" : "false") << ',' << detail::num(c.analysis->fold.x) << ','
               << detail::num(c.analysis->fold.y) << ',';
            os << (c.analysis->sao && c.analysis->sao->n_sao ? std::to_string(*c.analysis->sao->n_sao) : "") << ',';
            if (c.analysis->equilibrium) {
                const auto& e = *c.analysis->equilibrium;
                os << detail::num(e.eq.y) << ',' << detail::num(e.w_eq) << ',' << to_string(e.blocks.classification) << ',';
            } else {
                os << ",,,";
            }
        } else {
            os << ",,,,,,,,,,,,,";
        }
        if (c.signature) {
            const auto& s = *c.signature;
            os << s.lao_count << ',' << s.sao_count << ',' << s.complete_epochs << ',' << (s.is_mmo ? "true" : "false")
               << ',' << (s.alternating_cells ? (*s.alternating_cells ? "true" : "false") : "") << ','
               << s.signature_string << ',';
        } else {
            os << ",,,,,,";
        }
        os << detail::csv_safe(c.message) << '\n';
    }
}

}  // namespace cuspkit
