#pragma once

// Symmetric two-cell slow-fast models
//
//     x1' = f(x1, x2, y1),   y1' = eps * g(x1, y1)
//     x2' = f(x2, x1, y2),   y2' = eps * g(x2, y2)
//
// and the derivative engine that supplies the partials of f (to third order)
// and g (to second order) used throughout the analysis.

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <utility>

#include "cuspkit/dual.hpp"
#include "cuspkit/errors.hpp"
#include "cuspkit/tolerances.hpp"

namespace cuspkit {

using Vec4 = std::array<double, 4>;
using ParamMap = std::map<std::string, double>;

struct PairState {
    double x1 = 0.0;
    double x2 = 0.0;
    double y1 = 0.0;
    double y2 = 0.0;

    [[nodiscard]] Vec4 to_array() const { return {x1, x2, y1, y2}; }
    static PairState from_array(const Vec4& a) { return {a[0], a[1], a[2], a[3]}; }
    [[nodiscard]] bool finite() const {
        return std::isfinite(x1) && std::isfinite(x2) && std::isfinite(y1) && std::isfinite(y2);
    }
    friend bool operator==(const PairState&, const PairState&) = default;
};

/// The cell-exchange map (x1, x2, y1, y2) -> (x2, x1, y2, y1).
inline PairState exchange(const PairState& s) { return {s.x2, s.x1, s.y2, s.y1}; }
inline Vec4 exchange(const Vec4& v) { return {v[1], v[0], v[3], v[2]}; }

/// Partials of f(x_i, x_j, y_i); index 1 = x_i, 2 = x_j, y = y_i.
struct FJet3 {
    double f = 0, f1 = 0, f2 = 0, fy = 0;
    double f11 = 0, f12 = 0, f22 = 0, f1y = 0, f2y = 0;
    double f111 = 0, f112 = 0, f122 = 0, f222 = 0;

    static constexpr std::array<double FJet3::*, 13> fields{
        &FJet3::f,   &FJet3::f1,  &FJet3::f2,   &FJet3::fy,   &FJet3::f11,  &FJet3::f12, &FJet3::f22,
        &FJet3::f1y, &FJet3::f2y, &FJet3::f111, &FJet3::f112, &FJet3::f122, &FJet3::f222};
    static constexpr std::array<const char*, 13> names{"f",   "f1",  "f2",   "fy",   "f11",  "f12",  "f22",
                                                       "f1y", "f2y", "f111", "f112", "f122", "f222"};
};

/// Partials of g(x, y).
struct GJet2 {
    double g = 0, gx = 0, gy = 0, gxx = 0, gxy = 0, gyy = 0;

    static constexpr std::array<double GJet2::*, 6> fields{&GJet2::g,   &GJet2::gx,  &GJet2::gy,
                                                           &GJet2::gxx, &GJet2::gxy, &GJet2::gyy};
    static constexpr std::array<const char*, 6> names{"g", "gx", "gy", "gxx", "gxy", "gyy"};
};

struct Interval {
    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();
    bool open = false;  // exclude the endpoints

    [[nodiscard]] bool contains(double v) const {
        if (!std::isfinite(v)) return false;
        return open ? (v > lo && v < hi) : (v >= lo && v <= hi);
    }
};

struct Domain {
    Interval x;
    Interval y;
    [[nodiscard]] bool contains(double xv, double yv) const { return x.contains(xv) && y.contains(yv); }
};

template <typename T>
using FastKernel = std::function<T(const T&, const T&, const T&)>;
template <typename T>
using SlowKernel = std::function<T(const T&, const T&)>;

/// Descriptive data attached to a model: parameters, domain, characteristic
/// scales and defaults that drive the numerical front-ends.
struct ModelInfo {
    std::string name;
    ParamMap params;
    double epsilon = 0.01;
    Domain domain;
    double x_scale = 1.0;  // characteristic length of f, g along x (differencing steps)
    double y_scale = 1.0;
    double y_guess = 0.0;  // seed for solving f = 0 for y
    Interval fold_bracket{0.0, 1.0};
    std::pair<double, double> equilibrium_guess{0.0, 0.0};
    std::array<std::string, 4> channel_aliases{"x1", "x2", "y1", "y2"};
    double fold_arclength = 0.1;  // half-length of the traced fold curve in (x1, x2)
    double t_end = 1000.0;        // default simulation horizon
};

/// A concrete symmetric model. Immutable after construction; copies share
/// nothing mutable.
class ModelDefinition {
public:
    using Rebuild = std::function<ModelDefinition(const ParamMap&)>;

    /// Wraps a kernel type exposing `template <class T> T f(xi, xj, y) const`
    /// and `template <class T> T g(x, y) const` for every scalar type the
    /// derivative engine uses.
    template <typename Kernel>
    static ModelDefinition from_kernel(ModelInfo info, Kernel kernel) {
        if (!(info.epsilon > 0.0) || !std::isfinite(info.epsilon)) {
            throw ConfigError("model '" + info.name + "': epsilon must be positive");
        }
        ModelDefinition m;
        m.info_ = std::move(info);
        m.f_ = std::make_tuple(fast_of<double>(kernel), fast_of<Dual1>(kernel), fast_of<Dual2>(kernel),
                               fast_of<Dual3>(kernel));
        m.g_ = std::make_tuple(slow_of<double>(kernel), slow_of<Dual1>(kernel), slow_of<Dual2>(kernel),
                               slow_of<Dual3>(kernel));
        return m;
    }

    [[nodiscard]] const ModelInfo& info() const { return info_; }
    [[nodiscard]] const std::string& name() const { return info_.name; }
    [[nodiscard]] double epsilon() const { return info_.epsilon; }
    [[nodiscard]] const ParamMap& params() const { return info_.params; }
    [[nodiscard]] const Domain& domain() const { return info_.domain; }

    template <typename T>
    T f(const T& xi, const T& xj, const T& y) const {
        return std::get<FastKernel<T>>(f_)(xi, xj, y);
    }
    template <typename T>
    T g(const T& x, const T& y) const {
        return std::get<SlowKernel<T>>(g_)(x, y);
    }

    [[nodiscard]] bool has_analytic_jets() const { return static_cast<bool>(f_oracle_); }
    [[nodiscard]] std::optional<FJet3> analytic_f_jet(double xi, double xj, double y) const {
        if (!f_oracle_) return std::nullopt;
        return f_oracle_(xi, xj, y);
    }
    [[nodiscard]] std::optional<GJet2> analytic_g_jet(double x, double y) const {
        if (!g_oracle_) return std::nullopt;
        return g_oracle_(x, y);
    }

    ModelDefinition& set_analytic_jets(std::function<FJet3(double, double, double)> fo,
                                       std::function<GJet2(double, double)> go) {
        f_oracle_ = std::move(fo);
        g_oracle_ = std::move(go);
        return *this;
    }
    ModelDefinition& set_rebuild(Rebuild rebuild) {
        rebuild_ = std::move(rebuild);
        return *this;
    }

    [[nodiscard]] ModelDefinition with_epsilon(double eps) const {
        if (!(eps > 0.0) || !std::isfinite(eps)) throw ConfigError("epsilon must be positive");
        ModelDefinition m = *this;
        m.info_.epsilon = eps;
        return m;
    }

    /// Rebuilds the model with some parameters replaced. "epsilon" is accepted
    /// as a pseudo-parameter. Unknown names are a ConfigError.
    [[nodiscard]] ModelDefinition with_params(const ParamMap& overrides) const {
        ParamMap p = info_.params;
        std::optional<double> eps;
        for (const auto& [key, value] : overrides) {
            if (key == "epsilon") {
                eps = value;
                continue;
            }
            if (!p.contains(key)) throw ConfigError("model '" + name() + "' has no parameter '" + key + "'");
            if (!std::isfinite(value)) throw ConfigError("parameter '" + key + "' must be finite");
            p[key] = value;
        }
        if (!rebuild_) {
            if (p != info_.params) throw ConfigError("model '" + name() + "' cannot be rebuilt");
            return with_epsilon(eps.value_or(epsilon()));
        }
        return rebuild_(p).with_epsilon(eps.value_or(epsilon()));
    }

    [[nodiscard]] ModelDefinition with_parameter(const std::string& key, double value) const {
        return with_params(ParamMap{{key, value}});
    }

    friend ModelDefinition y_flip(const ModelDefinition& m);

private:
    template <typename T, typename Kernel>
    static FastKernel<T> fast_of(const Kernel& k) {
        return [k](const T& a, const T& b, const T& c) { return k.template f<T>(a, b, c); };
    }
    template <typename T, typename Kernel>
    static SlowKernel<T> slow_of(const Kernel& k) {
        return [k](const T& a, const T& b) { return k.template g<T>(a, b); };
    }

    ModelInfo info_;
    std::tuple<FastKernel<double>, FastKernel<Dual1>, FastKernel<Dual2>, FastKernel<Dual3>> f_;
    std::tuple<SlowKernel<double>, SlowKernel<Dual1>, SlowKernel<Dual2>, SlowKernel<Dual3>> g_;
    std::function<FJet3(double, double, double)> f_oracle_;
    std::function<GJet2(double, double)> g_oracle_;
    Rebuild rebuild_;
};

namespace detail {

template <typename T>
FastKernel<T> flip_fast(FastKernel<T> k) {
    return [k = std::move(k)](const T& a, const T& b, const T& y) { return k(a, b, -y); };
}
template <typename T>
SlowKernel<T> flip_slow(SlowKernel<T> k) {
    return [k = std::move(k)](const T& x, const T& y) { return -k(x, -y); };
}

}  // namespace detail

/// The model under y_i -> -y_i: f~(xi, xj, y) = f(xi, xj, -y),
/// g~(x, y) = -g(x, -y). Domain, guesses, oracles and the parameter rebuild
/// are transformed consistently.
inline ModelDefinition y_flip(const ModelDefinition& m) {
    ModelDefinition out = m;
    ModelInfo& info = out.info_;
    info.name = m.name() + "_yflip";
    info.domain.y = Interval{-m.domain().y.hi, -m.domain().y.lo, m.domain().y.open};
    info.y_guess = -m.info().y_guess;
    info.equilibrium_guess.second = -m.info().equilibrium_guess.second;

    std::get<FastKernel<double>>(out.f_) = detail::flip_fast(std::get<FastKernel<double>>(m.f_));
    std::get<FastKernel<Dual1>>(out.f_) = detail::flip_fast(std::get<FastKernel<Dual1>>(m.f_));
    std::get<FastKernel<Dual2>>(out.f_) = detail::flip_fast(std::get<FastKernel<Dual2>>(m.f_));
    std::get<FastKernel<Dual3>>(out.f_) = detail::flip_fast(std::get<FastKernel<Dual3>>(m.f_));
    std::get<SlowKernel<double>>(out.g_) = detail::flip_slow(std::get<SlowKernel<double>>(m.g_));
    std::get<SlowKernel<Dual1>>(out.g_) = detail::flip_slow(std::get<SlowKernel<Dual1>>(m.g_));
    std::get<SlowKernel<Dual2>>(out.g_) = detail::flip_slow(std::get<SlowKernel<Dual2>>(m.g_));
    std::get<SlowKernel<Dual3>>(out.g_) = detail::flip_slow(std::get<SlowKernel<Dual3>>(m.g_));

    if (m.f_oracle_) {
        out.f_oracle_ = [fo = m.f_oracle_](double xi, double xj, double y) {
            FJet3 j = fo(xi, xj, -y);
            j.fy = -j.fy;
            j.f1y = -j.f1y;
            j.f2y = -j.f2y;
            return j;
        };
    }
    if (m.g_oracle_) {
        out.g_oracle_ = [go = m.g_oracle_](double x, double y) {
            GJet2 j = go(x, -y);
            return GJet2{-j.g, -j.gx, j.gy, -j.gxx, j.gxy, -j.gyy};
        };
    }
    if (m.rebuild_) {
        out.rebuild_ = [r = m.rebuild_](const ParamMap& p) { return y_flip(r(p)); };
    }
    return out;
}

// -- field evaluation ----------------------------------------------------------

inline void require_in_domain(const ModelDefinition& model, double x, double y) {
    if (!model.domain().contains(x, y)) {
        throw DomainError("model '" + model.name() + "': point (" + std::to_string(x) + ", " +
                          std::to_string(y) + ") outside the declared domain");
    }
}

inline void require_in_domain(const ModelDefinition& model, const PairState& s) {
    if (!s.finite()) throw DomainError("non-finite state");
    require_in_domain(model, s.x1, s.y1);
    require_in_domain(model, s.x2, s.y2);
}

/// Right-hand side of the full four-dimensional system.
inline Vec4 eval_field(const ModelDefinition& model, const PairState& s) {
    require_in_domain(model, s);
    const double eps = model.epsilon();
    Vec4 out{model.f(s.x1, s.x2, s.y1), model.f(s.x2, s.x1, s.y2), eps * model.g(s.x1, s.y1),
             eps * model.g(s.x2, s.y2)};
    for (double v : out) {
        if (!std::isfinite(v)) throw DomainError("model '" + model.name() + "': non-finite field value");
    }
    return out;
}

// -- derivative engine ---------------------------------------------------------

/// Partials of f by nested forward-mode differentiation (five third-order
/// evaluations).
inline FJet3 f_jet_dual(const ModelDefinition& model, double xi, double xj, double y) {
    require_in_domain(model, xi, y);
    if (!model.domain().x.contains(xj)) throw DomainError("f_jet_dual: x_j outside domain");
    auto fn = [&model](const Dual3& a, const Dual3& b, const Dual3& c) { return model.f<Dual3>(a, b, c); };
    const std::array<double, 3> p{xi, xj, y};
    const Partials3 p111 = third_partials(fn, p, 0, 0, 0);
    const Partials3 p112 = third_partials(fn, p, 0, 0, 1);
    const Partials3 p122 = third_partials(fn, p, 0, 1, 1);
    const Partials3 p222 = third_partials(fn, p, 1, 1, 1);
    const Partials3 p12y = third_partials(fn, p, 0, 1, 2);

    FJet3 j;
    j.f = p111.value;
    j.f1 = p111.da;
    j.f11 = p111.dab;
    j.f111 = p111.dabc;
    j.f112 = p112.dabc;
    j.f2 = p122.db;
    j.f22 = p122.dbc;
    j.f122 = p122.dabc;
    j.f222 = p222.dabc;
    j.f12 = p12y.dab;
    j.f1y = p12y.dac;
    j.f2y = p12y.dbc;
    j.fy = p12y.dc;
    for (auto field : FJet3::fields) {
        if (!std::isfinite(j.*field)) throw DomainError("f_jet_dual: non-finite derivative");
    }
    return j;
}

/// Partials of g by nested forward-mode differentiation.
inline GJet2 g_jet_dual(const ModelDefinition& model, double x, double y) {
    require_in_domain(model, x, y);
    auto fn = [&model](const Dual2& a, const Dual2& b) { return model.g<Dual2>(a, b); };
    const std::array<double, 2> p{x, y};
    const Partials2 pxx = second_partials(fn, p, 0, 0);
    const Partials2 pxy = second_partials(fn, p, 0, 1);
    const Partials2 pyy = second_partials(fn, p, 1, 1);
    GJet2 j{pxx.value, pxx.da, pxy.db, pxx.dab, pxy.dab, pyy.dab};
    for (auto field : GJet2::fields) {
        if (!std::isfinite(j.*field)) throw DomainError("g_jet_dual: non-finite derivative");
    }
    return j;
}

// -- finite-difference fallback --------------------------------------------------

namespace detail {

/// One-dimensional central stencil for a derivative of order m: offsets in
/// units of h and weights (to be divided by h^m).
inline std::pair<std::array<int, 4>, std::array<double, 4>> stencil(int m, int& size) {
    switch (m) {
        case 0: size = 1; return {{0, 0, 0, 0}, {1.0, 0, 0, 0}};
        case 1: size = 2; return {{-1, 1, 0, 0}, {-0.5, 0.5, 0, 0}};
        case 2: size = 3; return {{-1, 0, 1, 0}, {1.0, -2.0, 1.0, 0}};
        case 3: size = 4; return {{-2, -1, 1, 2}, {-0.5, 1.0, -1.0, 0.5}};
        default: throw Error("stencil: unsupported derivative order");
    }
}

/// Tensor-product central difference of order counts[k] along each axis.
/// Returns the estimate and a rounding-noise bound.
template <std::size_t K, typename Fn>
std::pair<double, double> central_difference(const Fn& fn, const std::array<double, K>& point,
                                             const std::array<int, K>& counts, const std::array<double, K>& h) {
    std::array<std::array<int, 4>, K> offs{};
    std::array<std::array<double, 4>, K> wts{};
    std::array<int, K> sizes{};
    double scale = 1.0;
    for (std::size_t k = 0; k < K; ++k) {
        auto [o, w] = stencil(counts[k], sizes[k]);
        offs[k] = o;
        wts[k] = w;
        scale *= std::pow(h[k], counts[k]);
    }
    double sum = 0.0;
    double abs_sum = 0.0;
    std::array<int, K> idx{};
    while (true) {
        std::array<double, K> q = point;
        double w = 1.0;
        for (std::size_t k = 0; k < K; ++k) {
            q[k] += offs[k][idx[k]] * h[k];
            w *= wts[k][idx[k]];
        }
        const double v = std::apply(fn, q);
        sum += w * v;
        abs_sum += std::abs(w * v);
        std::size_t k = 0;
        for (; k < K; ++k) {
            if (++idx[k] < sizes[k]) break;
            idx[k] = 0;
        }
        if (k == K) break;
    }
    return {sum / scale, std::numeric_limits<double>::epsilon() * abs_sum / scale};
}

/// Richardson-extrapolated central difference over steps h, h/2 and h/4,
/// which cancels the h^2 and h^4 terms. The step per axis is
/// scale_k * eps^(1/(order + 6)), balancing the O(h^6) remainder against
/// rounding.
template <std::size_t K, typename Fn>
std::pair<double, double> richardson_partial(const Fn& fn, const std::array<double, K>& point,
                                             const std::array<int, K>& counts,
                                             const std::array<double, K>& scales) {
    int order = 0;
    for (int c : counts) order += c;
    if (order == 0) return {std::apply(fn, point), 0.0};
    const double base = std::pow(std::numeric_limits<double>::epsilon(), 1.0 / (order + 6));
    std::array<double, K> h1{}, h2{}, h4{};
    for (std::size_t k = 0; k < K; ++k) {
        // Round the step so that point + h is exact; quarter steps stay exact.
        const double t = point[k] + base * scales[k];
        h1[k] = t - point[k];
        h2[k] = 0.5 * h1[k];
        h4[k] = 0.25 * h1[k];
    }
    auto [d1, n1] = central_difference(fn, point, counts, h1);
    auto [d2, n2] = central_difference(fn, point, counts, h2);
    auto [d4, n4] = central_difference(fn, point, counts, h4);
    return {(64.0 * d4 - 20.0 * d2 + d1) / 45.0, (64.0 * n4 + 20.0 * n2 + n1) / 45.0 * 8.0};
}

}  // namespace detail

/// A jet together with per-entry rounding-noise bounds of the estimate.
template <typename Jet>
struct NoisyJet {
    Jet value;
    Jet noise;
};

/// Finite-difference estimate of every FJet3 entry. Steps follow the
/// model's characteristic scales.
inline NoisyJet<FJet3> f_jet_fd(const ModelDefinition& model, double xi, double xj, double y) {
    auto fn = [&model](double a, double b, double c) { return model.f<double>(a, b, c); };
    const std::array<double, 3> p{xi, xj, y};
    const std::array<double, 3> s{model.info().x_scale, model.info().x_scale, model.info().y_scale};
    NoisyJet<FJet3> out;
    auto set = [&](double FJet3::*field, std::array<int, 3> counts) {
        auto [v, n] = detail::richardson_partial(fn, p, counts, s);
        out.value.*field = v;
        out.noise.*field = n;
    };
    set(&FJet3::f, {0, 0, 0});
    set(&FJet3::f1, {1, 0, 0});
    set(&FJet3::f2, {0, 1, 0});
    set(&FJet3::fy, {0, 0, 1});
    set(&FJet3::f11, {2, 0, 0});
    set(&FJet3::f12, {1, 1, 0});
    set(&FJet3::f22, {0, 2, 0});
    set(&FJet3::f1y, {1, 0, 1});
    set(&FJet3::f2y, {0, 1, 1});
    set(&FJet3::f111, {3, 0, 0});
    set(&FJet3::f112, {2, 1, 0});
    set(&FJet3::f122, {1, 2, 0});
    set(&FJet3::f222, {0, 3, 0});
    return out;
}

inline NoisyJet<GJet2> g_jet_fd(const ModelDefinition& model, double x, double y) {
    auto fn = [&model](double a, double b) { return model.g<double>(a, b); };
    const std::array<double, 2> p{x, y};
    const std::array<double, 2> s{model.info().x_scale, model.info().y_scale};
    NoisyJet<GJet2> out;
    auto set = [&](double GJet2::*field, std::array<int, 2> counts) {
        auto [v, n] = detail::richardson_partial(fn, p, counts, s);
        out.value.*field = v;
        out.noise.*field = n;
    };
    set(&GJet2::g, {0, 0});
    set(&GJet2::gx, {1, 0});
    set(&GJet2::gy, {0, 1});
    set(&GJet2::gxx, {2, 0});
    set(&GJet2::gxy, {1, 1});
    set(&GJet2::gyy, {0, 2});
    return out;
}

/// Relative discrepancy |a - b| / max(|a|, |b|, floor).
inline double relative_gap(double a, double b, double floor) {
    const double denom = std::max({std::abs(a), std::abs(b), floor});
    if (denom == 0.0) return 0.0;
    return std::abs(a - b) / denom;
}

/// Largest relative discrepancy between two jets, entry by entry. Each entry
/// is compared relative to max(|a|, |b|, floor entry).
template <typename Jet, std::size_t N>
double max_relative_gap(const Jet& a, const Jet& b, const std::array<double Jet::*, N>& fields, const Jet& floor) {
    double worst = 0.0;
    for (auto field : fields) worst = std::max(worst, relative_gap(a.*field, b.*field, std::abs(floor.*field)));
    return worst;
}

namespace detail {

// Number of x- and y-differentiations behind each jet entry.
inline constexpr std::array<std::pair<int, int>, 13> fjet_orders{
    {{0, 0}, {1, 0}, {1, 0}, {0, 1}, {2, 0}, {2, 0}, {2, 0}, {1, 1}, {1, 1}, {3, 0}, {3, 0}, {3, 0}, {3, 0}}};
inline constexpr std::array<std::pair<int, int>, 6> gjet_orders{{{0, 0}, {1, 0}, {0, 1}, {2, 0}, {1, 1}, {0, 2}}};

/// Comparison floor per entry: the largest entry of the same total order,
/// measured as a change of f over one characteristic box (x_scale, y_scale)
/// and converted back to the entry's own units. The value itself is also
/// floored by the first-order change. Entries that vanish identically (for
/// instance a mixed partial of a separable term) are then judged against the
/// natural size of their order instead of against zero; an order that vanishes
/// entirely falls back to the first-order change.
template <typename Jet, std::size_t N>
Jet scale_floor(const Jet& jet, const std::array<double Jet::*, N>& fields,
                const std::array<std::pair<int, int>, N>& orders, double xs, double ys) {
    std::array<double, 4> group{};
    std::array<double, N> weight{};
    for (std::size_t k = 0; k < N; ++k) {
        const auto [nx, ny] = orders[k];
        weight[k] = std::pow(xs, nx) * std::pow(ys, ny);
        group[nx + ny] = std::max(group[nx + ny], std::abs(jet.*fields[k]) * weight[k]);
    }
    Jet floor{};
    for (std::size_t k = 0; k < N; ++k) {
        const int order = orders[k].first + orders[k].second;
        double g = order == 0 ? std::max(group[0], group[1]) : group[order];
        // A whole order vanishing (g linear in x and y) leaves nothing to
        // compare a difference quotient of zero against but the first-order change.
        if (g == 0.0) g = std::max(group[0], group[1]);
        floor.*fields[k] = g / weight[k];
    }
    return floor;
}

template <typename Jet, std::size_t N>
Jet combine_floor(const Jet& a, const Jet& b, const std::array<double Jet::*, N>& fields, double factor) {
    Jet out{};
    for (auto field : fields) out.*field = std::max(std::abs(a.*field), factor * std::abs(b.*field));
    return out;
}

}  // namespace detail

inline FJet3 f_jet_floor(const ModelDefinition& model, const FJet3& jet) {
    return detail::scale_floor(jet, FJet3::fields, detail::fjet_orders, model.info().x_scale, model.info().y_scale);
}

inline GJet2 g_jet_floor(const ModelDefinition& model, const GJet2& jet) {
    return detail::scale_floor(jet, GJet2::fields, detail::gjet_orders, model.info().x_scale, model.info().y_scale);
}

/// Worst relative discrepancy between the dual jet and its finite-difference
/// estimate. The reference magnitude of each entry is floored at the size of
/// its derivative order and at noise / tol, so a discrepancy at the rounding
/// level of the difference quotient counts as agreement.
inline double f_jet_fd_gap(const ModelDefinition& model, const FJet3& ad, double xi, double xj, double y,
                           const Tolerances& tol = default_tolerances()) {
    const NoisyJet<FJet3> fd = f_jet_fd(model, xi, xj, y);
    const FJet3 floor = detail::combine_floor(f_jet_floor(model, ad), fd.noise, FJet3::fields, 1.0 / tol.jet_fd_rel);
    return max_relative_gap(ad, fd.value, FJet3::fields, floor);
}

inline double g_jet_fd_gap(const ModelDefinition& model, const GJet2& ad, double x, double y,
                           const Tolerances& tol = default_tolerances()) {
    const NoisyJet<GJet2> fd = g_jet_fd(model, x, y);
    const GJet2 floor = detail::combine_floor(g_jet_floor(model, ad), fd.noise, GJet2::fields, 1.0 / tol.jet_fd_rel);
    return max_relative_gap(ad, fd.value, GJet2::fields, floor);
}

/// Worst relative discrepancy against the model's analytic oracle (0 when the
/// model has none).
inline double f_jet_analytic_gap(const ModelDefinition& model, const FJet3& ad, double xi, double xj, double y) {
    const auto oracle = model.analytic_f_jet(xi, xj, y);
    return oracle ? max_relative_gap(ad, *oracle, FJet3::fields, f_jet_floor(model, ad)) : 0.0;
}

inline double g_jet_analytic_gap(const ModelDefinition& model, const GJet2& ad, double x, double y) {
    const auto oracle = model.analytic_g_jet(x, y);
    return oracle ? max_relative_gap(ad, *oracle, GJet2::fields, g_jet_floor(model, ad)) : 0.0;
}

/// Partials of f, cross-validated against finite differences (tol.jet_fd_rel)
/// and, when present, the analytic oracle (tol.jet_analytic_rel). Throws
/// DerivativeConsistencyError on disagreement.
inline FJet3 f_jet(const ModelDefinition& model, double xi, double xj, double y,
                   const Tolerances& tol = default_tolerances()) {
    const FJet3 ad = f_jet_dual(model, xi, xj, y);
    if (const double gap = f_jet_fd_gap(model, ad, xi, xj, y, tol); gap > tol.jet_fd_rel) {
        throw DerivativeConsistencyError("f_jet: dual and finite-difference partials disagree (relative gap " +
                                         std::to_string(gap) + ")");
    }
    if (const double gap = f_jet_analytic_gap(model, ad, xi, xj, y); gap > tol.jet_analytic_rel) {
        throw DerivativeConsistencyError("f_jet: engine disagrees with the analytic jet (relative gap " +
                                         std::to_string(gap) + ")");
    }
    return ad;
}

inline GJet2 g_jet(const ModelDefinition& model, double x, double y, const Tolerances& tol = default_tolerances()) {
    const GJet2 ad = g_jet_dual(model, x, y);
    if (const double gap = g_jet_fd_gap(model, ad, x, y, tol); gap > tol.jet_fd_rel) {
        throw DerivativeConsistencyError("g_jet: dual and finite-difference partials disagree (relative gap " +
                                         std::to_string(gap) + ")");
    }
    if (const double gap = g_jet_analytic_gap(model, ad, x, y); gap > tol.jet_analytic_rel) {
        throw DerivativeConsistencyError("g_jet: engine disagrees with the analytic jet (relative gap " +
                                         std::to_string(gap) + ")");
    }
    return ad;
}

}  // namespace cuspkit
