#pragma once

// Run configuration: JSON documents such as
//   {"model": "curtu", "epsilon": 0.01, "params": {"b": 0.6055}, "t_end": 3000}
// plus command-line overrides. Unknown keys are rejected.

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "cuspkit/models.hpp"
#include "cuspkit/report.hpp"

namespace cuspkit {

struct RunConfig {
    std::string model = "curtu";
    std::optional<double> epsilon;
    ParamMap params;

    std::optional<std::pair<double, double>> fold_bracket;
    std::optional<double> fold_arclength;
    int fold_points = 400;

    std::optional<double> t_end;
    double rtol = 1e-9;
    double atol = 1e-11;
    std::optional<double> max_step;
    double transient_fraction = 0.2;
    bool symmetric_ic = false;
    bool aliases = false;
    std::optional<double> resample_dt;

    std::string observable = "u";
    double sao_threshold = 0.25;

    std::string hopf_param;
    std::optional<std::pair<double, double>> hopf_bracket;

    std::vector<SweepAxis> sweep;
    std::optional<int> jobs;

    std::string output;
    std::string events_output;
    std::string curve_output;
};

namespace detail {

inline double json_number(const Json& v, const std::string& key) {
    if (!v.is_number()) throw ConfigError("config: '" + key + "' must be a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) throw ConfigError("config: '" + key + "' must be finite");
    return d;
}

inline std::pair<double, double> json_pair(const Json& v, const std::string& key) {
    if (!v.is_array() || v.size() != 2) throw ConfigError("config: '" + key + "' must be a two-element array");
    return {json_number(v[0], key), json_number(v[1], key)};
}

inline std::string json_string(const Json& v, const std::string& key) {
    if (!v.is_string()) throw ConfigError("config: '" + key + "' must be a string");
    return v.get<std::string>();
}

inline bool json_bool(const Json& v, const std::string& key) {
    if (!v.is_boolean()) throw ConfigError("config: '" + key + "' must be a boolean");
    return v.get<bool>();
}

inline int json_int(const Json& v, const std::string& key) {
    if (!v.is_number_integer()) throw ConfigError("config: '" + key + "' must be an integer");
    return v.get<int>();
}

}  // namespace detail

/// Parses "lo,hi".
inline std::pair<double, double> parse_range(const std::string& s, const std::string& what) {
    const auto comma = s.find(',');
    if (comma == std::string::npos) throw ConfigError(what + ": expected 'lo,hi', got '" + s + "'");
    try {
        std::size_t u1 = 0, u2 = 0;
        const std::string a = s.substr(0, comma), b = s.substr(comma + 1);
        const double lo = std::stod(a, &u1);
        const double hi = std::stod(b, &u2);
        if (u1 != a.size() || u2 != b.size()) throw std::invalid_argument("trailing");
        return {lo, hi};
    } catch (const std::exception&) {
        throw ConfigError(what + ": expected 'lo,hi', got '" + s + "'");
    }
}

/// Applies "key=value"; keys are model parameters or "epsilon".
inline void apply_set(RunConfig& c, const std::string& kv) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("--set expects key=value, got '" + kv + "'");
    const std::string key = kv.substr(0, eq);
    const std::string val = kv.substr(eq + 1);
    double d = 0;
    try {
        std::size_t used = 0;
        d = std::stod(val, &used);
        if (used != val.size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
        throw ConfigError("--set " + key + ": '" + val + "' is not a number");
    }
    if (key == "epsilon") {
        c.epsilon = d;
    } else {
        c.params[key] = d;
    }
}

inline RunConfig config_from_json(const Json& j, RunConfig c = {}) {
    if (!j.is_object()) throw ConfigError("config: top level must be an object");
    for (const auto& [key, v] : j.items()) {
        if (key == "model") c.model = detail::json_string(v, key);
        else if (key == "epsilon") c.epsilon = detail::json_number(v, key);
        else if (key == "params") {
            if (!v.is_object()) throw ConfigError("config: 'params' must be an object");
            for (const auto& [pk, pv] : v.items()) c.params[pk] = detail::json_number(pv, "params." + pk);
        } else if (key == "fold_bracket") c.fold_bracket = detail::json_pair(v, key);
        else if (key == "fold_arclength") c.fold_arclength = detail::json_number(v, key);
        else if (key == "fold_points") c.fold_points = detail::json_int(v, key);
        else if (key == "t_end") c.t_end = detail::json_number(v, key);
        else if (key == "rtol") c.rtol = detail::json_number(v, key);
        else if (key == "atol") c.atol = detail::json_number(v, key);
        else if (key == "max_step") c.max_step = detail::json_number(v, key);
        else if (key == "transient_fraction") c.transient_fraction = detail::json_number(v, key);
        else if (key == "symmetric_ic") c.symmetric_ic = detail::json_bool(v, key);
        else if (key == "aliases") c.aliases = detail::json_bool(v, key);
        else if (key == "resample_dt") c.resample_dt = detail::json_number(v, key);
        else if (key == "observable") c.observable = detail::json_string(v, key);
        else if (key == "sao_threshold") c.sao_threshold = detail::json_number(v, key);
        else if (key == "param") c.hopf_param = detail::json_string(v, key);
        else if (key == "bracket") c.hopf_bracket = detail::json_pair(v, key);
        else if (key == "sweep") {
            if (!v.is_array()) throw ConfigError("config: 'sweep' must be an array of axes");
            c.sweep.clear();
            for (const auto& ax : v) {
                if (!ax.is_object()) throw ConfigError("config: sweep axis must be an object");
                SweepAxis a;
                for (const auto& [ak, av] : ax.items()) {
                    if (ak == "param") a.param = detail::json_string(av, "sweep.param");
                    else if (ak == "lo") a.lo = detail::json_number(av, "sweep.lo");
                    else if (ak == "hi") a.hi = detail::json_number(av, "sweep.hi");
                    else if (ak == "n") a.n = detail::json_int(av, "sweep.n");
                    else throw ConfigError("config: unknown sweep key '" + ak + "'");
                }
                if (a.param.empty()) throw ConfigError("config: sweep axis needs 'param'");
                c.sweep.push_back(a);
            }
        } else if (key == "jobs") c.jobs = detail::json_int(v, key);
        else if (key == "output") c.output = detail::json_string(v, key);
        else if (key == "events_output") c.events_output = detail::json_string(v, key);
        else if (key == "curve_output") c.curve_output = detail::json_string(v, key);
        else throw ConfigError("config: unknown key '" + key + "'");
    }
    return c;
}

inline RunConfig load_config_file(const std::string& path, RunConfig c = {}) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot read '" + path + "'");
    Json j;
    try {
        j = Json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config: '" + path + "' is not valid JSON: " + e.what());
    }
    return config_from_json(j, std::move(c));
}

/// The configured model with parameter and epsilon overrides applied.
inline ModelDefinition build_model(const RunConfig& c) {
    ModelDefinition m = make_model(c.model);
    ParamMap overrides = c.params;
    if (c.epsilon) {
        if (!(*c.epsilon > 0.0)) throw ConfigError("epsilon must be positive");
        overrides["epsilon"] = *c.epsilon;
    }
    return overrides.empty() ? m : m.with_params(overrides);
}

inline IntegratorOptions integrator_options(const RunConfig& c) {
    IntegratorOptions o;
    o.rtol = c.rtol;
    o.atol = c.atol;
    if (c.max_step) o.max_step = *c.max_step;
    return o;
}

inline SimulationOptions simulation_options(const RunConfig& c, const ModelDefinition& m) {
    SimulationOptions s;
    s.t_end = c.t_end.value_or(m.info().t_end);
    if (!(s.t_end > 0.0)) throw ConfigError("t_end must be positive");
    s.transient_fraction = c.transient_fraction;
    s.symmetric_ic = c.symmetric_ic;
    s.integrator = integrator_options(c);
    return s;
}

inline AnalysisOptions analysis_options(const RunConfig& c) {
    AnalysisOptions a;
    if (c.fold_bracket) a.fold_bracket = Interval{c.fold_bracket->first, c.fold_bracket->second, false};
    a.fold_arclength = c.fold_arclength;
    a.fold_points = c.fold_points;
    return a;
}

/// Worker count: requested jobs (hardware concurrency when unset), capped by
/// the CUSPKIT_THREADS environment variable when it holds a positive integer.
inline int effective_jobs(std::optional<int> requested) {
    int jobs = requested.value_or(static_cast<int>(std::max(1u, std::thread::hardware_concurrency())));
    if (jobs < 1) throw ConfigError("jobs must be at least 1");
    if (const char* env = std::getenv("CUSPKIT_THREADS")) {
        char* end = nullptr;
        const long cap = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && cap > 0) jobs = std::min<int>(jobs, static_cast<int>(cap));
    }
    return jobs;
}

}  // namespace cuspkit
