#pragma once

// Dormand-Prince 5(4) integration of the full pair system and of the reduced
// (u, w, z) system, with cubic Hermite dense output and CSV exchange.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <initializer_list>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "cuspkit/model.hpp"
#include "cuspkit/reduction.hpp"
#include "cuspkit/spectra.hpp"

namespace cuspkit {

struct IntegratorOptions {
    double rtol = 1e-9;
    double atol = 1e-11;
    double max_step = std::numeric_limits<double>::infinity();
    double initial_step = 0.0;  // 0 selects the step automatically
    long max_steps = 50'000'000;
};

struct TrajectoryMeta {
    std::string model;
    double epsilon = 0;
    double rtol = 0;
    double atol = 0;
    double max_step = std::numeric_limits<double>::infinity();
    long accepted = 0;
    long rejected = 0;
    std::vector<std::string> channels;  // column names after "t"
};

template <std::size_t N>
struct TrajectoryT {
    std::vector<double> t;
    std::vector<std::array<double, N>> states;
    std::vector<std::array<double, N>> derivs;  // empty when read back from CSV
    TrajectoryMeta meta;

    [[nodiscard]] std::size_t size() const { return t.size(); }
    [[nodiscard]] bool has_derivatives() const { return derivs.size() == t.size() && !t.empty(); }
};

using Trajectory = TrajectoryT<4>;
using ReducedTrajectory = TrajectoryT<3>;

/// Step-size underflow or step budget exhausted; carries what was computed.
template <std::size_t N>
class IntegrationError : public Error {
public:
    IntegrationError(const std::string& what, TrajectoryT<N> p) : Error(what), partial(std::move(p)) {}
    TrajectoryT<N> partial;
};

/// The solution left the model domain; `exit_state` is the last accepted state.
template <std::size_t N>
class DomainExitError : public DomainError {
public:
    DomainExitError(const std::string& what, TrajectoryT<N> p, std::array<double, N> s)
        : DomainError(what), partial(std::move(p)), exit_state(s) {}
    TrajectoryT<N> partial;
    std::array<double, N> exit_state;
};

namespace detail {

// Weighted RMS norm. Squares are summed in sorted order so that the value is
// independent of component order; this makes trajectories from exchanged
// initial data bit-identical up to the exchange.
template <std::size_t N>
double wrms(const std::array<double, N>& e, const std::array<double, N>& a, const std::array<double, N>& b,
            double rtol, double atol) {
    std::array<double, N> sq;
    for (std::size_t i = 0; i < N; ++i) {
        const double sc = atol + rtol * std::max(std::abs(a[i]), std::abs(b[i]));
        const double r = e[i] / sc;
        sq[i] = r * r;
    }
    std::sort(sq.begin(), sq.end());
    double s = 0.0;
    for (double v : sq) s += v;
    return std::sqrt(s / static_cast<double>(N));
}

template <std::size_t N>
bool all_finite(const std::array<double, N>& v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

}  // namespace detail

/// Adaptive Dormand-Prince 5(4) with PI step control (beta = 0.04), FSAL and
/// local extrapolation. Every accepted step is stored together with the
/// field value there. A stage that throws DomainError counts as a rejected
/// step; if the step collapses under repeated domain errors the integration
/// stops with DomainExitError.
template <std::size_t N, typename Rhs>
TrajectoryT<N> dopri5(Rhs&& rhs, const std::array<double, N>& y0, double t0, double t1, const IntegratorOptions& o,
                      TrajectoryMeta meta = {}) {
    if (!(o.rtol > 0.0) || !(o.atol > 0.0)) throw ConfigError("integrate: rtol and atol must be positive");
    if (!(t1 > t0)) throw ConfigError("integrate: t_span must be increasing");
    if (!(o.max_step > 0.0)) throw ConfigError("integrate: max_step must be positive");

    constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
    constexpr double a21 = 1.0 / 5;
    constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
    constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                     a65 = -5103.0 / 18656;
    constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192, a75 = -2187.0 / 6784,
                     a76 = 11.0 / 84;
    constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                     e6 = 22.0 / 525, e7 = -1.0 / 40;
    constexpr double beta = 0.04;
    constexpr double alpha = 0.2 - 0.75 * beta;
    constexpr double safety = 0.9;

    using V = std::array<double, N>;
    auto axpy = [](const V& y, double h, std::initializer_list<std::pair<double, const V*>> terms) {
        V out = y;
        for (std::size_t i = 0; i < N; ++i) {
            double s = 0.0;
            for (const auto& [c, k] : terms) s += c * (*k)[i];
            out[i] += h * s;
        }
        return out;
    };

    meta.rtol = o.rtol;
    meta.atol = o.atol;
    meta.max_step = o.max_step;
    TrajectoryT<N> tr;
    tr.meta = std::move(meta);

    if (!detail::all_finite(y0)) throw DomainError("integrate: non-finite initial state");
    V k1 = rhs(t0, y0);
    tr.t.push_back(t0);
    tr.states.push_back(y0);
    tr.derivs.push_back(k1);

    double h = o.initial_step;
    if (!(h > 0.0)) {
        const V zero{};
        const double d0 = detail::wrms(y0, y0, y0, o.rtol, o.atol);
        const double d1 = detail::wrms(k1, y0, y0, o.rtol, o.atol);
        double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
        h0 = std::min({h0, o.max_step, t1 - t0});
        V df = zero;
        try {
            const V k = rhs(t0 + h0, axpy(y0, h0, {{1.0, &k1}}));
            for (std::size_t i = 0; i < N; ++i) df[i] = k[i] - k1[i];
        } catch (const DomainError&) {
        }
        const double d2 = detail::wrms(df, y0, y0, o.rtol, o.atol) / h0;
        const double h1 = std::max(d1, d2) <= 1e-15 ? std::max(1e-6, h0 * 1e-3)
                                                     : std::pow(0.01 / std::max(d1, d2), 1.0 / 5.0);
        h = std::min(100.0 * h0, h1);
    }

    double t = t0;
    V y = y0;
    double err_old = 1e-4;
    bool last_rejected = false;
    bool domain_trouble = false;
    long steps = 0;
    while (t < t1) {
        if (++steps > o.max_steps) {
            throw IntegrationError<N>("integrate: step budget exhausted at t = " + std::to_string(t), std::move(tr));
        }
        h = std::min(h, o.max_step);
        bool final_step = false;
        if (t + h >= t1 || t1 - (t + h) <= 1e-12 * std::abs(t1)) {
            h = t1 - t;
            final_step = true;
        }
        const double h_min = 16.0 * std::numeric_limits<double>::epsilon() * std::max(std::abs(t), 1.0);
        if (h < h_min) {
            if (domain_trouble) {
                throw DomainExitError<N>("integrate: trajectory left the model domain near t = " + std::to_string(t),
                                         std::move(tr), y);
            }
            throw IntegrationError<N>("integrate: step size underflow at t = " + std::to_string(t), std::move(tr));
        }

        V ynew, k7;
        double err;
        try {
            const V k2 = rhs(t + c2 * h, axpy(y, h, {{a21, &k1}}));
            const V k3 = rhs(t + c3 * h, axpy(y, h, {{a31, &k1}, {a32, &k2}}));
            const V k4 = rhs(t + c4 * h, axpy(y, h, {{a41, &k1}, {a42, &k2}, {a43, &k3}}));
            const V k5 = rhs(t + c5 * h, axpy(y, h, {{a51, &k1}, {a52, &k2}, {a53, &k3}, {a54, &k4}}));
            const V k6 = rhs(t + h, axpy(y, h, {{a61, &k1}, {a62, &k2}, {a63, &k3}, {a64, &k4}, {a65, &k5}}));
            ynew = axpy(y, h, {{a71, &k1}, {a73, &k3}, {a74, &k4}, {a75, &k5}, {a76, &k6}});
            k7 = rhs(t + h, ynew);
            const V e = axpy(V{}, h, {{e1, &k1}, {e3, &k3}, {e4, &k4}, {e5, &k5}, {e6, &k6}, {e7, &k7}});
            err = detail::wrms(e, y, ynew, o.rtol, o.atol);
            domain_trouble = false;
        } catch (const DomainError&) {
            domain_trouble = true;
            ++tr.meta.rejected;
            last_rejected = true;
            h *= 0.25;
            continue;
        }
        if (!std::isfinite(err) || !detail::all_finite(ynew)) {
            ++tr.meta.rejected;
            last_rejected = true;
            h *= 0.25;
            continue;
        }

        if (err <= 1.0) {
            double fac = err == 0.0 ? 10.0 : safety * std::pow(err, -alpha) * std::pow(err_old, beta);
            fac = std::clamp(fac, 0.2, last_rejected ? 1.0 : 10.0);
            err_old = std::max(err, 1e-4);
            t = final_step ? t1 : t + h;
            y = ynew;
            k1 = k7;
            tr.t.push_back(t);
            tr.states.push_back(y);
            tr.derivs.push_back(k1);
            ++tr.meta.accepted;
            last_rejected = false;
            h *= fac;
        } else {
            ++tr.meta.rejected;
            last_rejected = true;
            h *= std::max(0.2, safety * std::pow(err, -alpha));
        }
    }
    return tr;
}

// -- full and reduced systems ---------------------------------------------------

inline std::vector<std::string> state_channels(const ModelDefinition& m, bool aliases) {
    if (!aliases) return {"x1", "x2", "y1", "y2"};
    const auto& a = m.info().channel_aliases;
    return {a[0], a[1], a[2], a[3]};
}

inline Trajectory integrate(const ModelDefinition& model, const PairState& s0, std::pair<double, double> t_span,
                            const IntegratorOptions& opts = {}) {
    require_in_domain(model, s0);
    TrajectoryMeta meta;
    meta.model = model.name();
    meta.epsilon = model.epsilon();
    meta.channels = state_channels(model, false);
    auto rhs = [&model](double, const Vec4& s) { return eval_field(model, PairState::from_array(s)); };
    return dopri5<4>(rhs, s0.to_array(), t_span.first, t_span.second, opts, std::move(meta));
}

/// Integrates the reduced system in local coordinates (u, w, z) around the
/// cusp with the coefficients in `rc` and time-scale ratio eps.
inline ReducedTrajectory integrate_reduced(const ReducedCoefficients& rc, double eps, const std::array<double, 3>& s0,
                                           std::pair<double, double> t_span, const IntegratorOptions& opts = {}) {
    TrajectoryMeta meta;
    meta.model = "reduced";
    meta.epsilon = eps;
    meta.channels = {"u", "w", "z"};
    auto rhs = [&rc, eps](double, const std::array<double, 3>& s) { return reduced_field(rc, s[0], s[1], s[2], eps); };
    return dopri5<3>(rhs, s0, t_span.first, t_span.second, opts, std::move(meta));
}

/// Symmetric equilibrium with x1, x2 displaced by +-delta (antisymmetric) or
/// both by +delta (symmetric).
inline PairState perturbed_equilibrium(const ModelDefinition& m, bool symmetric = false, double delta = 1e-3) {
    const SymmetricEquilibrium eq = find_symmetric_equilibrium(m, m.info().equilibrium_guess);
    if (symmetric) return {eq.x + delta, eq.x + delta, eq.y, eq.y};
    return {eq.x + delta, eq.x - delta, eq.y, eq.y};
}

// -- dense output -----------------------------------------------------------------

template <std::size_t N>
std::array<double, N> hermite(double t0, const std::array<double, N>& y0, const std::array<double, N>& f0, double t1,
                              const std::array<double, N>& y1, const std::array<double, N>& f1, double t) {
    const double h = t1 - t0;
    const double s = (t - t0) / h;
    const double h00 = (1 + 2 * s) * (1 - s) * (1 - s);
    const double h10 = s * (1 - s) * (1 - s);
    const double h01 = s * s * (3 - 2 * s);
    const double h11 = s * s * (s - 1);
    std::array<double, N> out;
    for (std::size_t i = 0; i < N; ++i) out[i] = h00 * y0[i] + h10 * h * f0[i] + h01 * y1[i] + h11 * h * f1[i];
    return out;
}

/// State at time t by cubic Hermite interpolation between stored steps.
template <std::size_t N>
std::array<double, N> interpolate(const TrajectoryT<N>& tr, double t) {
    if (!tr.has_derivatives()) throw AnalysisError("interpolate: trajectory has no stored derivatives");
    if (t < tr.t.front() || t > tr.t.back()) throw DomainError("interpolate: time outside trajectory");
    auto it = std::upper_bound(tr.t.begin(), tr.t.end(), t);
    std::size_t k = it == tr.t.end() ? tr.t.size() - 1 : static_cast<std::size_t>(it - tr.t.begin());
    if (k == 0) k = 1;
    return hermite(tr.t[k - 1], tr.states[k - 1], tr.derivs[k - 1], tr.t[k], tr.states[k], tr.derivs[k], t);
}

/// Fixed-stride resampling t_from, t_from + dt, ... up to the final time.
/// Derivatives are carried along by the same interpolant's derivative.
template <std::size_t N>
TrajectoryT<N> resample(const TrajectoryT<N>& tr, double dt, std::optional<double> t_from = {}) {
    if (!(dt > 0.0)) throw ConfigError("resample: dt must be positive");
    if (!tr.has_derivatives()) throw AnalysisError("resample: trajectory has no stored derivatives");
    TrajectoryT<N> out;
    out.meta = tr.meta;
    const double start = t_from.value_or(tr.t.front());
    std::size_t k = 1;
    for (long i = 0;; ++i) {
        const double t = start + static_cast<double>(i) * dt;
        if (t > tr.t.back()) break;
        if (t < tr.t.front()) continue;
        while (k + 1 < tr.t.size() && tr.t[k] < t) ++k;
        const double ta = tr.t[k - 1];
        const double tb = tr.t[k];
        out.t.push_back(t);
        out.states.push_back(hermite(ta, tr.states[k - 1], tr.derivs[k - 1], tb, tr.states[k], tr.derivs[k], t));
        const double h = tb - ta;
        const double s = (t - ta) / h;
        std::array<double, N> d;
        for (std::size_t j = 0; j < N; ++j) {
            d[j] = (6 * s * s - 6 * s) / h * tr.states[k - 1][j] + (3 * s * s - 4 * s + 1) * tr.derivs[k - 1][j] +
                   (6 * s - 6 * s * s) / h * tr.states[k][j] + (3 * s * s - 2 * s) * tr.derivs[k][j];
        }
        out.derivs.push_back(d);
    }
    return out;
}

/// Drops samples before t_cut.
template <std::size_t N>
TrajectoryT<N> discard_before(const TrajectoryT<N>& tr, double t_cut) {
    TrajectoryT<N> out;
    out.meta = tr.meta;
    const auto first = static_cast<std::size_t>(std::lower_bound(tr.t.begin(), tr.t.end(), t_cut) - tr.t.begin());
    out.t.assign(tr.t.begin() + static_cast<long>(first), tr.t.end());
    out.states.assign(tr.states.begin() + static_cast<long>(first), tr.states.end());
    if (tr.has_derivatives()) out.derivs.assign(tr.derivs.begin() + static_cast<long>(first), tr.derivs.end());
    return out;
}

struct SimulationOptions {
    double t_end = 3000.0;
    double transient_fraction = 0.2;
    bool symmetric_ic = false;
    IntegratorOptions integrator{};
};

/// Default run: perturbed symmetric equilibrium at t = 0, integrated to
/// t_end, with the first transient_fraction of the span discarded.
inline Trajectory simulate(const ModelDefinition& model, const SimulationOptions& so = {}) {
    if (!(so.transient_fraction >= 0.0 && so.transient_fraction < 1.0)) {
        throw ConfigError("simulate: transient fraction must lie in [0, 1)");
    }
    const PairState s0 = perturbed_equilibrium(model, so.symmetric_ic);
    const Trajectory full = integrate(model, s0, {0.0, so.t_end}, so.integrator);
    return discard_before(full, so.transient_fraction * so.t_end);
}

// -- CSV --------------------------------------------------------------------------

template <std::size_t N>
void write_trajectory_csv(std::ostream& os, const TrajectoryT<N>& tr) {
    os << "t";
    for (std::size_t i = 0; i < N; ++i) {
        os << ',' << (i < tr.meta.channels.size() ? tr.meta.channels[i] : "c" + std::to_string(i + 1));
    }
    os << '\n';
    char buf[32];
    for (std::size_t k = 0; k < tr.t.size(); ++k) {
        std::snprintf(buf, sizeof buf, "%.17g", tr.t[k]);
        os << buf;
        for (double v : tr.states[k]) {
            std::snprintf(buf, sizeof buf, "%.17g", v);
            os << ',' << buf;
        }
        os << '\n';
    }
}

/// Reads a `t,<4 channels>` CSV. Time must be strictly increasing and every
/// value finite.
inline Trajectory read_trajectory_csv(std::istream& is) {
    Trajectory tr;
    std::string line;
    if (!std::getline(is, line)) throw ConfigError("trajectory CSV: empty input");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::vector<std::string> header;
    {
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) header.push_back(cell);
    }
    if (header.size() != 5 || header[0] != "t") throw ConfigError("trajectory CSV: expected header t,<4 channels>");
    tr.meta.channels.assign(header.begin() + 1, header.end());
    long lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::array<double, 5> row{};
        std::size_t pos = 0;
        for (int c = 0; c < 5; ++c) {
            const std::size_t end = c < 4 ? line.find(',', pos) : line.size();
            if (end == std::string::npos) throw ConfigError("trajectory CSV: short row at line " + std::to_string(lineno));
            try {
                std::size_t used = 0;
                const std::string cell = line.substr(pos, end - pos);
                row[c] = std::stod(cell, &used);
                if (used != cell.size()) throw std::invalid_argument("trailing");
            } catch (const std::exception&) {
                throw ConfigError("trajectory CSV: bad number at line " + std::to_string(lineno));
            }
            if (!std::isfinite(row[c])) throw ConfigError("trajectory CSV: non-finite value at line " + std::to_string(lineno));
            pos = end + 1;
        }
        if (!tr.t.empty() && !(row[0] > tr.t.back())) {
            throw ConfigError("trajectory CSV: time not strictly increasing at line " + std::to_string(lineno));
        }
        tr.t.push_back(row[0]);
        tr.states.push_back({row[1], row[2], row[3], row[4]});
    }
    return tr;
}

}  // namespace cuspkit
