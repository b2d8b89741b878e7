#pragma once

// JSON renderings of the analysis results. Key order is fixed by
// construction; non-finite numbers become null.

#include <cmath>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "cuspkit/pipeline.hpp"

namespace cuspkit {

using Json = nlohmann::ordered_json;

inline constexpr int kSchemaVersion = 1;

namespace detail {
inline Json number(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }
inline Json complex(const Complex& c) { return Json{{"re", number(c.real())}, {"im", number(c.imag())}}; }
template <typename T>
Json optional(const std::optional<T>& v) {
    return v ? Json(*v) : Json(nullptr);
}
}  // namespace detail

inline Json to_json(const FoldRoot& f) {
    return {{"x", detail::number(f.x)}, {"y", detail::number(f.y)}, {"residual", detail::number(f.residual)}};
}

inline Json to_json(const CuspReport& c) {
    return {{"x_star", detail::number(c.x_star)},
            {"y_star", detail::number(c.y_star)},
            {"f1", detail::number(c.f1_star)},
            {"f2", detail::number(c.f2_star)},
            {"fy", detail::number(c.fy_star)},
            {"fold_residual", detail::number(c.fold_residual)},
            {"D_star", detail::number(c.d_star)},
            {"A", detail::number(c.A)},
            {"B", detail::number(c.B)},
            {"B_direct", detail::number(c.B_direct)},
            {"B_implicit", detail::number(c.B_implicit)},
            {"is_nondegenerate_cusp", c.is_nondegenerate_cusp},
            {"fold_eigenvalues", {detail::number(c.fold_eigenvalues.first), detail::number(c.fold_eigenvalues.second)}}};
}

inline Json to_json(const ReducedCoefficients& r) {
    return {{"x_star", detail::number(r.x_star)}, {"y_star", detail::number(r.y_star)},
            {"f1", detail::number(r.f1)},         {"f2", detail::number(r.f2)},
            {"fy", detail::number(r.fy)},         {"f11", detail::number(r.f11)},
            {"f12", detail::number(r.f12)},       {"f22", detail::number(r.f22)},
            {"f1y", detail::number(r.f1y)},       {"f2y", detail::number(r.f2y)},
            {"D_star", detail::number(r.d_star)}, {"h0w", detail::number(r.h0w)},
            {"huu", detail::number(r.huu)},       {"Omega", detail::number(r.omega)},
            {"Gamma", detail::number(r.gamma)},   {"g0", detail::number(r.g0)},
            {"gx", detail::number(r.gx)},         {"gy", detail::number(r.gy)},
            {"gxx", detail::number(r.gxx)},       {"nu_eff", detail::number(r.nu_eff)},
            {"rho_eff", detail::number(r.rho_eff)}};
}

inline Json to_json(const ConditionReport& c) {
    auto check = [](const ConditionCheck& k) { return Json{{"ok", k.ok}, {"witness", detail::number(k.witness)}}; };
    Json j{{"C1", check(c.c1)}, {"C2", check(c.c2)}, {"C3", check(c.c3)},
           {"C4", check(c.c4)}, {"C5", check(c.c5)}, {"C6", check(c.c6)}};
    j["all_satisfied"] = c.all_satisfied;
    j["opening"] = c.opening ? Json(to_string(*c.opening)) : Json(nullptr);
    j["central_sheet_attracting"] = detail::optional(c.central_sheet_attracting);
    j["margin"] = c.margin;
    return j;
}

inline Json to_json(const SaoPrediction& p) {
    return {{"lambda_1", detail::number(p.lambda_1)},
            {"lambda_2", detail::number(p.lambda_2)},
            {"lambda_strong", detail::number(p.lambda_strong)},
            {"lambda_weak", detail::number(p.lambda_weak)},
            {"ratio", detail::number(p.ratio)},
            {"n_sao", detail::optional(p.n_sao)},
            {"resonance_flag", p.resonance_flag},
            {"fd_check_gap", detail::number(p.fd_check_gap)}};
}

inline Json to_json(const JacobianBlocks& b) {
    auto mat = [](const Mat2& m) {
        return Json{{detail::number(m[0][0]), detail::number(m[0][1])}, {detail::number(m[1][0]), detail::number(m[1][1])}};
    };
    return {{"epsilon", b.epsilon},
            {"J_s", mat(b.j_s)},
            {"J_a", mat(b.j_a)},
            {"eig_s", {detail::complex(b.eig_s.first), detail::complex(b.eig_s.second)}},
            {"eig_a", {detail::complex(b.eig_a.first), detail::complex(b.eig_a.second)}},
            {"det_s", detail::number(b.det_s)},
            {"det_s_leading", detail::number(b.det_s_leading)},
            {"classification", to_string(b.classification)}};
}

inline Json to_json(const SymmetricEquilibrium& e) {
    return {{"x", detail::number(e.x)}, {"y", detail::number(e.y)}, {"residual", detail::number(e.residual)},
            {"iterations", e.iterations}};
}

inline Json to_json(const ExponentFit& f) {
    return {{"slope", detail::number(f.slope)}, {"intercept", detail::number(f.intercept)}, {"n_used", f.n_used},
            {"n_positive", f.n_positive},       {"n_negative", f.n_negative},             {"w_lo", detail::number(f.w_lo)},
            {"w_hi", detail::number(f.w_hi)}};
}

inline Json params_json(const ParamMap& p) {
    Json j = Json::object();
    for (const auto& [k, v] : p) j[k] = detail::number(v);
    return j;
}

inline Json to_json(const AnalysisReport& r) {
    Json j;
    j["schema_version"] = kSchemaVersion;
    j["kind"] = "analysis";
    j["model"] = r.model;
    j["epsilon"] = r.epsilon;
    j["params"] = params_json(r.params);
    Json roots = Json::array();
    for (const auto& f : r.fold_roots) roots.push_back(to_json(f));
    j["fold_roots"] = roots;
    j["cusp"] = to_json(r.cusp);
    j["coefficients"] = to_json(r.coefficients);
    j["conditions"] = to_json(r.conditions);
    j["sao_prediction"] = r.sao ? to_json(*r.sao) : Json(nullptr);
    j["sao_error"] = detail::optional(r.sao_error);
    if (r.equilibrium) {
        Json e = to_json(r.equilibrium->eq);
        e["w_eq"] = detail::number(r.equilibrium->w_eq);
        e["spectrum"] = to_json(r.equilibrium->blocks);
        j["equilibrium"] = e;
    } else {
        j["equilibrium"] = nullptr;
    }
    j["cusp_exponent"] = r.exponent ? to_json(*r.exponent) : Json(nullptr);
    j["warnings"] = r.warnings;
    return j;
}

inline Json to_json(const HopfResult& h) {
    Json j;
    j["schema_version"] = kSchemaVersion;
    j["kind"] = "hopf";
    j["parameter"] = h.parameter_name;
    j["mu_h"] = detail::number(h.mu_h);
    j["epsilon"] = h.epsilon;
    j["equilibrium"] = to_json(h.equilibrium);
    j["trace_a"] = detail::number(h.trace_a);
    j["det_a"] = detail::number(h.det_a);
    j["omega_h"] = detail::number(h.omega_h);
    j["predicted_omega"] = detail::number(h.predicted_omega);
    j["omega_ratio"] = detail::number(h.omega_ratio);
    j["spectrum"] = to_json(h.blocks);
    return j;
}

inline Json to_json(const MmoSignature& s) {
    Json j;
    j["schema_version"] = kSchemaVersion;
    j["kind"] = "signature";
    j["observable"] = s.observable;
    j["sao_threshold"] = s.sao_threshold;
    j["signature_string"] = s.signature_string;
    j["sao_counts_per_epoch"] = s.sao_counts_per_epoch;
    j["alternating_cells"] = detail::optional(s.alternating_cells);
    j["alternating_lao_cells"] = s.alternating_lao_cells;
    j["lao_count"] = s.lao_count;
    j["sao_count"] = s.sao_count;
    j["complete_epochs"] = s.complete_epochs;
    j["is_mmo"] = s.is_mmo;
    Json epochs = Json::array();
    for (const auto& e : s.epochs) {
        epochs.push_back({{"t_start", detail::number(e.t_start)},
                          {"lao_count", e.lao_count},
                          {"sao_count", e.sao_count},
                          {"leading_cell", e.leading_cell},
                          {"entry_side", e.entry_side ? Json(to_string(*e.entry_side)) : Json(nullptr)},
                          {"complete", e.complete}});
    }
    j["epochs"] = epochs;
    Json events = Json::array();
    for (const auto& e : s.events) {
        events.push_back({{"t", detail::number(e.t)},
                          {"kind", to_string(e.kind)},
                          {"amplitude", detail::number(e.amplitude)},
                          {"leading_cell", e.leading_cell},
                          {"entry_side", to_string(e.entry_side)}});
    }
    j["events"] = events;
    j["warnings"] = s.warnings;
    return j;
}

/// Error report written when a command fails numerically.
inline Json error_json(const std::string& kind, const std::string& category, const std::string& message) {
    return {{"schema_version", kSchemaVersion}, {"kind", kind}, {"error", category}, {"message", message}};
}

}  // namespace cuspkit
