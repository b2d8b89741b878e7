#pragma once

// Built-in models: the Curtu rate model of two mutually inhibiting
// populations and a pair of Morris-Lecar neurons with fast synaptic
// inhibition.

#include <cmath>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "cuspkit/model.hpp"

namespace cuspkit {

// -- Curtu ----------------------------------------------------------------------

struct CurtuParams {
    double I = 0.68;
    double b = 0.6055;
    double c = 0.63;
    double r = 10.0;
    double theta = 0.2;
    double epsilon = 0.01;

    [[nodiscard]] ParamMap to_map() const { return {{"I", I}, {"b", b}, {"c", c}, {"r", r}, {"theta", theta}}; }
    static CurtuParams from_map(const ParamMap& m, double eps) {
        CurtuParams p;
        p.I = m.at("I");
        p.b = m.at("b");
        p.c = m.at("c");
        p.r = m.at("r");
        p.theta = m.at("theta");
        p.epsilon = eps;
        return p;
    }
};

struct CurtuKernel {
    CurtuParams p;

    template <typename T>
    T S(const T& x) const {
        using std::exp;
        return 1.0 / (1.0 + exp(-p.r * (x - p.theta)));
    }
    template <typename T>
    T f(const T& ui, const T& uj, const T& a) const {
        return -ui + S(p.I - p.b * uj - a + ui);
    }
    template <typename T>
    T g(const T& u, const T& a) const {
        return -a + p.c * u;
    }
};

/// Derivatives of the logistic S(x) = 1/(1 + exp(-r(x - theta))).
struct LogisticJet {
    double s, d1, d2, d3;
};

inline LogisticJet logistic_jet(double x, double slope, double midpoint) {
    // 1 - s is formed as e / (1 + e) to keep its relative precision in the upper tail.
    const double e = std::exp(-slope * (x - midpoint));
    const double s = 1.0 / (1.0 + e);
    const double s_bar = e / (1.0 + e);
    const double q = s * s_bar;
    return {s, slope * q, slope * slope * q * (s_bar - s), slope * slope * slope * q * (1.0 - 6.0 * q)};
}

inline double curtu_S_inverse(const CurtuParams& p, double u) {
    return p.theta + std::log(u / (1.0 - u)) / p.r;
}

/// phi(u) = u - S^{-1}(u) and its first three derivatives.
inline double curtu_phi(const CurtuParams& p, double u) { return u - curtu_S_inverse(p, u); }
inline double curtu_phi_d1(const CurtuParams& p, double u) { return 1.0 - 1.0 / (p.r * u * (1.0 - u)); }
inline double curtu_phi_d2(const CurtuParams& p, double u) {
    return (1.0 - 2.0 * u) / (p.r * u * u * (1.0 - u) * (1.0 - u));
}
inline double curtu_phi_d3(const CurtuParams& p, double u) {
    const double q = u * (1.0 - u);
    return -2.0 * (q + (1.0 - 2.0 * u) * (1.0 - 2.0 * u)) / (p.r * q * q * q);
}

/// Critical manifold a = Y(u_i, u_j) = I - b u_j + phi(u_i).
inline double curtu_Y(const CurtuParams& p, double ui, double uj) { return p.I - p.b * uj + curtu_phi(p, ui); }

/// Upper symmetric fold: phi'(u) = -b reduces to r u (1 - u) (1 + b) = 1.
inline double curtu_upper_fold(const CurtuParams& p) {
    return 0.5 * (1.0 + std::sqrt(1.0 - 4.0 / (p.r * (1.0 + p.b))));
}

inline FJet3 curtu_analytic_f_jet(const CurtuParams& p, double ui, double uj, double a) {
    const LogisticJet s = logistic_jet(p.I - p.b * uj - a + ui, p.r, p.theta);
    const double b = p.b;
    FJet3 j;
    j.f = -ui + s.s;
    j.f1 = -1.0 + s.d1;
    j.f2 = -b * s.d1;
    j.fy = -s.d1;
    j.f11 = s.d2;
    j.f12 = -b * s.d2;
    j.f22 = b * b * s.d2;
    j.f1y = -s.d2;
    j.f2y = b * s.d2;
    j.f111 = s.d3;
    j.f112 = -b * s.d3;
    j.f122 = b * b * s.d3;
    j.f222 = -b * b * b * s.d3;
    return j;
}

inline GJet2 curtu_analytic_g_jet(const CurtuParams& p, double u, double a) {
    return {-a + p.c * u, p.c, -1.0, 0.0, 0.0, 0.0};
}

inline void validate(const CurtuParams& p) {
    for (double v : {p.I, p.b, p.c, p.r, p.theta, p.epsilon}) {
        if (!std::isfinite(v)) throw ConfigError("curtu: parameters must be finite");
    }
    if (!(p.r > 0.0)) throw ConfigError("curtu: r must be positive");
    if (!(p.epsilon > 0.0)) throw ConfigError("curtu: epsilon must be positive");
}

inline ModelDefinition build_curtu(const CurtuParams& p = {}) {
    validate(p);
    ModelInfo info;
    info.name = "curtu";
    info.params = p.to_map();
    info.epsilon = p.epsilon;
    info.domain = Domain{Interval{0.0, 1.0, true}, Interval{-2.0, 2.0, false}};
    info.x_scale = 0.15;
    info.y_scale = 0.1;
    info.y_guess = 0.5;
    info.fold_bracket = Interval{0.5, 0.99, false};
    info.equilibrium_guess = {0.93, 0.58};
    info.channel_aliases = {"u1", "u2", "a1", "a2"};
    info.fold_arclength = 0.02;
    info.t_end = 3000.0;

    ModelDefinition m = ModelDefinition::from_kernel(std::move(info), CurtuKernel{p});
    m.set_analytic_jets([p](double ui, double uj, double a) { return curtu_analytic_f_jet(p, ui, uj, a); },
                        [p](double u, double a) { return curtu_analytic_g_jet(p, u, a); });
    m.set_rebuild([eps = p.epsilon](const ParamMap& map) { return build_curtu(CurtuParams::from_map(map, eps)); });
    return m;
}

// -- Morris-Lecar -----------------------------------------------------------------

struct MorrisLecarParams {
    double C = 20.0;
    double V_K = -84.0;
    double g_K = 8.0;
    double V_Ca = 120.0;
    double g_Ca = 4.4;
    double V_L = -60.0;
    double g_L = 2.0;
    double I_app = 80.0;
    double V_syn = -70.0;
    double g_s = 0.3;
    double phi_n = 0.01;
    double v1 = -1.2;
    double v2 = 18.0;
    double v3 = 2.0;
    double v4 = 30.0;
    double k_s = 2.0;
    double theta_s = -25.0;
    // The slow rate phi_n sits inside g, so the explicit time-scale factor is 1.
    double epsilon = 1.0;

    [[nodiscard]] ParamMap to_map() const {
        return {{"C", C},         {"V_K", V_K}, {"g_K", g_K},     {"V_Ca", V_Ca},   {"g_Ca", g_Ca}, {"V_L", V_L},
                {"g_L", g_L},     {"I_app", I_app}, {"V_syn", V_syn}, {"g_s", g_s},   {"phi_n", phi_n}, {"v1", v1},
                {"v2", v2},       {"v3", v3},   {"v4", v4},       {"k_s", k_s},     {"theta_s", theta_s}};
    }
    static MorrisLecarParams from_map(const ParamMap& m, double eps) {
        MorrisLecarParams p;
        p.C = m.at("C");
        p.V_K = m.at("V_K");
        p.g_K = m.at("g_K");
        p.V_Ca = m.at("V_Ca");
        p.g_Ca = m.at("g_Ca");
        p.V_L = m.at("V_L");
        p.g_L = m.at("g_L");
        p.I_app = m.at("I_app");
        p.V_syn = m.at("V_syn");
        p.g_s = m.at("g_s");
        p.phi_n = m.at("phi_n");
        p.v1 = m.at("v1");
        p.v2 = m.at("v2");
        p.v3 = m.at("v3");
        p.v4 = m.at("v4");
        p.k_s = m.at("k_s");
        p.theta_s = m.at("theta_s");
        p.epsilon = eps;
        return p;
    }
};

struct MorrisLecarKernel {
    MorrisLecarParams p;

    template <typename T>
    T m_inf(const T& V) const {
        using std::tanh;
        return 0.5 * (1.0 + tanh((V - p.v1) / p.v2));
    }
    template <typename T>
    T n_inf(const T& V) const {
        using std::tanh;
        return 0.5 * (1.0 + tanh((V - p.v3) / p.v4));
    }
    template <typename T>
    T s_inf(const T& V) const {
        using std::exp;
        return 1.0 / (1.0 + exp(-(V - p.theta_s) / p.k_s));
    }
    template <typename T>
    T f(const T& Vi, const T& Vj, const T& n) const {
        const T rhs = p.I_app - p.g_Ca * m_inf(Vi) * (Vi - p.V_Ca) - p.g_K * n * (Vi - p.V_K) -
                      p.g_L * (Vi - p.V_L) - p.g_s * s_inf(Vj) * (Vi - p.V_syn);
        return rhs / p.C;
    }
    // phi_n (n_inf - n) / tau with 1/tau = cosh((V - v3) / (2 v4)).
    template <typename T>
    T g(const T& V, const T& n) const {
        using std::cosh;
        return p.phi_n * (n_inf(V) - n) * cosh((V - p.v3) / (2.0 * p.v4));
    }
};

inline double ml_m_inf(const MorrisLecarParams& p, double V) { return MorrisLecarKernel{p}.m_inf(V); }
inline double ml_n_inf(const MorrisLecarParams& p, double V) { return MorrisLecarKernel{p}.n_inf(V); }
inline double ml_s_inf(const MorrisLecarParams& p, double V) { return MorrisLecarKernel{p}.s_inf(V); }
inline double ml_tau(const MorrisLecarParams& p, double V) { return 1.0 / std::cosh((V - p.v3) / (2.0 * p.v4)); }

/// f0(V) = I_app - g_Ca m_inf(V)(V - V_Ca) - g_L(V - V_L) and derivatives.
struct MlF0Jet {
    double f0, d1, d2, d3;
};

inline MlF0Jet ml_f0_jet(const MorrisLecarParams& p, double V) {
    const double T = std::tanh((V - p.v1) / p.v2);
    const double sech2 = 1.0 - T * T;
    const double m = 0.5 * (1.0 + T);
    const double m1 = sech2 / (2.0 * p.v2);
    const double m2 = -T * sech2 / (p.v2 * p.v2);
    const double m3 = -sech2 * (1.0 - 3.0 * T * T) / (p.v2 * p.v2 * p.v2);
    const double dv = V - p.V_Ca;
    return {p.I_app - p.g_Ca * m * dv - p.g_L * (V - p.V_L), -p.g_Ca * (m1 * dv + m) - p.g_L,
            -p.g_Ca * (m2 * dv + 2.0 * m1), -p.g_Ca * (m3 * dv + 3.0 * m2)};
}

/// Closed-form jet of the Morris-Lecar fast equation at (V_i, V_j, n_i).
inline FJet3 ml_analytic_jet(const MorrisLecarParams& p, double Vi, double Vj, double n) {
    const MlF0Jet f0 = ml_f0_jet(p, Vi);
    const LogisticJet s = logistic_jet(Vj, 1.0 / p.k_s, p.theta_s);
    const double C = p.C;
    const double ds = Vi - p.V_syn;
    FJet3 j;
    j.f = (f0.f0 - p.g_K * n * (Vi - p.V_K) - p.g_s * s.s * ds) / C;
    j.f1 = (f0.d1 - p.g_K * n - p.g_s * s.s) / C;
    j.f2 = -p.g_s * s.d1 * ds / C;
    j.fy = -p.g_K * (Vi - p.V_K) / C;
    j.f11 = f0.d2 / C;
    j.f12 = -p.g_s * s.d1 / C;
    j.f22 = -p.g_s * s.d2 * ds / C;
    j.f1y = -p.g_K / C;
    j.f2y = 0.0;
    j.f111 = f0.d3 / C;
    j.f112 = 0.0;
    j.f122 = -p.g_s * s.d2 / C;
    j.f222 = -p.g_s * s.d3 * ds / C;
    return j;
}

/// The same jet on the symmetric diagonal V_i = V_j = V.
inline FJet3 ml_analytic_jet(const MorrisLecarParams& p, double V, double n) { return ml_analytic_jet(p, V, V, n); }

inline GJet2 ml_analytic_g_jet(const MorrisLecarParams& p, double V, double n) {
    const double T = std::tanh((V - p.v3) / p.v4);
    const double N = 0.5 * (1.0 + T);
    const double N1 = (1.0 - T * T) / (2.0 * p.v4);
    const double N2 = -T * (1.0 - T * T) / (p.v4 * p.v4);
    const double k = 1.0 / (2.0 * p.v4);
    const double ch = std::cosh((V - p.v3) * k);
    const double sh = std::sinh((V - p.v3) * k);
    const double phi = p.phi_n;
    const double gap = N - n;
    return {phi * gap * ch,
            phi * (N1 * ch + gap * k * sh),
            -phi * ch,
            phi * (N2 * ch + 2.0 * N1 * k * sh + gap * k * k * ch),
            -phi * k * sh,
            0.0};
}

/// Critical manifold n = Y(V_i, V_j).
inline double ml_Y(const MorrisLecarParams& p, double Vi, double Vj) {
    return (ml_f0_jet(p, Vi).f0 - p.g_s * ml_s_inf(p, Vj) * (Vi - p.V_syn)) / (p.g_K * (Vi - p.V_K));
}

inline void validate(const MorrisLecarParams& p) {
    for (const auto& [k, v] : p.to_map()) {
        if (!std::isfinite(v)) throw ConfigError("morris_lecar: parameter '" + k + "' must be finite");
    }
    if (!(p.C > 0.0)) throw ConfigError("morris_lecar: C must be positive");
    if (p.g_K < 0.0 || p.g_Ca < 0.0 || p.g_L < 0.0 || p.g_s < 0.0) {
        throw ConfigError("morris_lecar: conductances must be non-negative");
    }
    if (p.v2 == 0.0 || p.v4 == 0.0 || p.k_s == 0.0) throw ConfigError("morris_lecar: v2, v4, k_s must be nonzero");
    if (!(p.epsilon > 0.0) || !std::isfinite(p.epsilon)) throw ConfigError("morris_lecar: epsilon must be positive");
}

inline ModelDefinition build_morris_lecar(const MorrisLecarParams& p = {}) {
    validate(p);
    ModelInfo info;
    info.name = "morris_lecar";
    info.params = p.to_map();
    info.epsilon = p.epsilon;
    info.domain = Domain{Interval{-84.0, 120.0, false}, Interval{0.0, 1.0, false}};
    info.x_scale = 15.0;  // width of the gating sigmoids
    info.y_scale = 0.05;
    info.y_guess = 0.1;
    info.fold_bracket = Interval{-50.0, -10.0, false};
    info.equilibrium_guess = {-30.0, 0.1};
    info.channel_aliases = {"V1", "V2", "n1", "n2"};
    info.fold_arclength = 0.4;
    info.t_end = 20000.0;

    ModelDefinition m = ModelDefinition::from_kernel(std::move(info), MorrisLecarKernel{p});
    m.set_analytic_jets([p](double Vi, double Vj, double n) { return ml_analytic_jet(p, Vi, Vj, n); },
                        [p](double V, double n) { return ml_analytic_g_jet(p, V, n); });
    m.set_rebuild(
        [eps = p.epsilon](const ParamMap& map) { return build_morris_lecar(MorrisLecarParams::from_map(map, eps)); });
    return m;
}

// -- registry -------------------------------------------------------------------

using ModelFactory = std::function<ModelDefinition()>;

namespace detail {
inline std::map<std::string, ModelFactory>& registry() {
    static std::map<std::string, ModelFactory> r{{"curtu", [] { return build_curtu(); }},
                                                 {"morris_lecar", [] { return build_morris_lecar(); }}};
    return r;
}
}  // namespace detail

inline std::vector<std::string> builtin_model_names() { return {"curtu", "morris_lecar"}; }

/// Builds a built-in model by name with default parameters.
inline ModelDefinition make_builtin_model(const std::string& name) {
    if (name == "curtu") return build_curtu();
    if (name == "morris_lecar") return build_morris_lecar();
    throw ConfigError("unknown model '" + name + "'");
}

/// Adds a compiled-in model under `name`, replacing any previous entry. Call
/// before any analysis runs; the registry is not synchronized.
inline void register_model(const std::string& name, ModelFactory factory) {
    detail::registry()[name] = std::move(factory);
}

inline std::vector<std::string> model_names() {
    std::vector<std::string> out;
    for (const auto& [name, _] : detail::registry()) out.push_back(name);
    return out;
}

/// Built-in or registered model by name.
inline ModelDefinition make_model(const std::string& name) {
    const auto it = detail::registry().find(name);
    if (it == detail::registry().end()) throw ConfigError("unknown model '" + name + "'");
    return it->second();
}

}  // namespace cuspkit
