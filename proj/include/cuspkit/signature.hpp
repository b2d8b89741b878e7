#pragma once

// SAO/LAO decomposition of a trajectory and L^s signatures.
//
// Events sit at extrema of an observable. For the antisymmetric observable
// u = (x1 - x2)/2 every extremum is an event (a large excursion of cell 1 is
// a maximum of u, one of cell 2 a minimum), so one small rotation in the
// (u, z) plane contributes two SAO events. For a single-cell channel only the
// maxima are events. The amplitude of an event is the smaller of its
// differences to the neighbouring extrema.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "cuspkit/dynamics.hpp"

namespace cuspkit {

enum class EventKind { SAO, LAO };
enum class EntrySide { u_positive, u_negative };

inline const char* to_string(EventKind k) { return k == EventKind::SAO ? "SAO" : "LAO"; }
inline const char* to_string(EntrySide s) { return s == EntrySide::u_positive ? "u_positive" : "u_negative"; }

struct Extremum {
    double t = 0;
    double value = 0;
    bool is_max = false;
    double x1 = 0;  // cell values at t
    double x2 = 0;
};

struct OscillationEvent {
    double t = 0;
    EventKind kind = EventKind::SAO;
    double amplitude = 0;
    int leading_cell = 1;
    EntrySide entry_side = EntrySide::u_positive;
    double value = 0;
    bool is_max = false;
    double x1 = 0;
    double x2 = 0;
};

/// Extrema of the observable plus what classification needs.
struct ExtremaSet {
    std::string observable;
    bool maxima_only = false;
    std::vector<Extremum> extrema;
    double median_x1 = 0;
    double median_x2 = 0;
    double scale = 0;  // largest |state component| entering the observable
};

namespace detail {

inline int channel_index(const Trajectory& tr, const std::string& name) {
    static const std::array<const char*, 4> generic{"x1", "x2", "y1", "y2"};
    for (int i = 0; i < 4; ++i) {
        if (name == generic[i]) return i;
        if (static_cast<std::size_t>(i) < tr.meta.channels.size() && tr.meta.channels[i] == name) return i;
    }
    return -1;
}

inline double median(std::vector<double> v) {
    if (v.empty()) return 0.0;
    const auto mid = v.begin() + static_cast<long>(v.size() / 2);
    std::nth_element(v.begin(), mid, v.end());
    double m = *mid;
    if (v.size() % 2 == 0) m = 0.5 * (m + *std::max_element(v.begin(), mid));
    return m;
}

// Roots of a + b s + c s^2 in [lo, hi], the one nearest `near`.
inline std::optional<double> quadratic_root_in(double a, double b, double c, double lo, double hi, double near) {
    std::vector<double> roots;
    if (std::abs(c) <= 1e-300 + 1e-14 * std::abs(b)) {
        if (b != 0.0) roots.push_back(-a / b);
    } else {
        const double disc = b * b - 4 * a * c;
        if (disc >= 0.0) {
            const double q = -0.5 * (b + (b >= 0 ? std::sqrt(disc) : -std::sqrt(disc)));
            if (q != 0.0) roots.push_back(a / q);
            roots.push_back(q / c);
        }
    }
    std::optional<double> best;
    for (double r : roots) {
        if (r < lo || r > hi) continue;
        if (!best || std::abs(r - near) < std::abs(*best - near)) best = r;
    }
    return best;
}

}  // namespace detail

/// Local extrema of `observable` ("u" or a channel name) by the three-point
/// test. Locations are refined on the cubic Hermite interpolant when the
/// trajectory stores derivatives, otherwise on the cubic through four
/// neighbouring samples.
inline ExtremaSet extract_extrema(const Trajectory& tr, const std::string& observable = "u") {
    if (tr.size() < 3) throw AnalysisError("extract_extrema: need at least 3 samples");
    ExtremaSet out;
    out.observable = observable;
    std::array<double, 4> weights{};
    if (observable == "u") {
        weights = {0.5, -0.5, 0.0, 0.0};
    } else {
        const int c = detail::channel_index(tr, observable);
        if (c < 0) throw ConfigError("extract_extrema: unknown observable '" + observable + "'");
        weights[c] = 1.0;
        out.maxima_only = true;
    }
    const std::size_t n = tr.size();
    auto obs = [&](const std::array<double, 4>& s) {
        return weights[0] * s[0] + weights[1] * s[1] + weights[2] * s[2] + weights[3] * s[3];
    };
    std::vector<double> v(n);
    std::vector<double> c1(n);
    std::vector<double> c2(n);
    for (std::size_t k = 0; k < n; ++k) {
        v[k] = obs(tr.states[k]);
        c1[k] = tr.states[k][0];
        c2[k] = tr.states[k][1];
    }
    out.median_x1 = detail::median(c1);
    out.median_x2 = detail::median(c2);
    for (const auto& st : tr.states) {
        for (int i = 0; i < 4; ++i) {
            if (weights[i] != 0.0) out.scale = std::max(out.scale, std::abs(st[i]));
        }
    }

    const bool dense = tr.has_derivatives();
    for (std::size_t k = 1; k + 1 < n; ++k) {
        const bool is_max = v[k] > v[k - 1] && v[k] >= v[k + 1];
        const bool is_min = v[k] < v[k - 1] && v[k] <= v[k + 1];
        if (!is_max && !is_min) continue;
        Extremum e{tr.t[k], v[k], is_max, c1[k], c2[k]};
        if (dense) {
            // Derivative of the observable changes sign in [k-1, k] or [k, k+1].
            for (std::size_t a : {k - 1, k}) {
                const std::size_t b = a + 1;
                const double h = tr.t[b] - tr.t[a];
                const double y0 = v[a], y1 = v[b];
                const double d0 = obs(tr.derivs[a]) * h, d1 = obs(tr.derivs[b]) * h;
                // p(s) = h00 y0 + h10 d0 + h01 y1 + h11 d1, p'(s) = A + B s + C s^2
                const double A = d0;
                const double B = -6 * y0 - 4 * d0 + 6 * y1 - 2 * d1;
                const double C = 6 * y0 + 3 * d0 - 6 * y1 + 3 * d1;
                const auto s = detail::quadratic_root_in(A, B, C, 0.0, 1.0, a == k ? 0.0 : 1.0);
                if (!s) continue;
                const double t = tr.t[a] + *s * h;
                const auto st = hermite(tr.t[a], tr.states[a], tr.derivs[a], tr.t[b], tr.states[b], tr.derivs[b], t);
                const double val = obs(st);
                if ((is_max && val >= e.value) || (is_min && val <= e.value)) {
                    e = {t, val, is_max, st[0], st[1]};
                }
            }
        } else {
            // Fourth sample on the side where the true extremum lies.
            const bool right = std::abs(v[k + 1] - v[k]) < std::abs(v[k - 1] - v[k]);
            std::size_t lo = n;
            if (right && k + 2 < n) lo = k - 1;
            else if (k >= 2) lo = k - 2;
            else if (k + 2 < n) lo = k - 1;
            if (lo + 3 < n) {
                // Cubic through four samples in Newton form, local time s = t - t_k.
                std::array<double, 4> ts{}, ys{};
                for (int i = 0; i < 4; ++i) {
                    ts[i] = tr.t[lo + i] - tr.t[k];
                    ys[i] = v[lo + i];
                }
                std::array<double, 4> dd = ys;
                for (int j = 1; j < 4; ++j) {
                    for (int i = 3; i >= j; --i) dd[i] = (dd[i] - dd[i - 1]) / (ts[i] - ts[i - j]);
                }
                // Expand to monomials c0 + c1 s + c2 s^2 + c3 s^3.
                std::array<double, 4> poly{dd[3], 0, 0, 0};
                int deg = 0;
                for (int i = 2; i >= 0; --i) {
                    std::array<double, 4> next{};
                    for (int p = 0; p <= deg; ++p) {
                        next[p + 1] += poly[p];
                        next[p] -= ts[i] * poly[p];
                    }
                    next[0] += dd[i];
                    poly = next;
                    ++deg;
                }
                const double lo_s = tr.t[k - 1] - tr.t[k];
                const double hi_s = tr.t[k + 1] - tr.t[k];
                const auto s = detail::quadratic_root_in(poly[1], 2 * poly[2], 3 * poly[3], lo_s, hi_s, 0.0);
                if (s) {
                    const double val = poly[0] + *s * (poly[1] + *s * (poly[2] + *s * poly[3]));
                    if ((is_max && val >= e.value) || (is_min && val <= e.value)) {
                        const double w = *s >= 0 ? *s / hi_s : *s / lo_s;
                        const std::size_t nb = *s >= 0 ? k + 1 : k - 1;
                        e = {tr.t[k] + *s, val, is_max, c1[k] + w * (c1[nb] - c1[k]), c2[k] + w * (c2[nb] - c2[k])};
                    }
                }
            }
        }
        out.extrema.push_back(e);
    }
    return out;
}

struct Epoch {
    double t_start = 0;
    int lao_count = 0;
    int sao_count = 0;
    int leading_cell = 1;  // cell of the epoch's first LAO
    std::optional<EntrySide> entry_side;
    bool complete = false;  // followed by a further LAO
};

struct MmoSignature {
    std::string observable;
    double sao_threshold = 0.25;
    std::vector<OscillationEvent> events;
    std::vector<Epoch> epochs;
    std::string signature_string;  // complete epochs only
    std::vector<int> sao_counts_per_epoch;
    std::optional<bool> alternating_cells;  // leading cells of successive epochs
    bool alternating_lao_cells = false;     // every consecutive pair of LAOs
    int lao_count = 0;
    int sao_count = 0;
    int complete_epochs = 0;
    bool is_mmo = false;  // some complete epoch holds at least one SAO
    std::vector<std::string> warnings;
};

struct SignatureOptions {
    double sao_threshold = 0.25;
    double noise_fraction = 1e-6;  // relative to the larger of top amplitude and state scale
};

/// Events with amplitudes, before SAO/LAO labelling.
inline std::vector<OscillationEvent> oscillation_events(const ExtremaSet& ex, double noise_fraction) {
    const auto& e = ex.extrema;
    std::vector<OscillationEvent> out;
    for (std::size_t k = 0; k < e.size(); ++k) {
        if (ex.maxima_only && !e[k].is_max) continue;
        // Extrema at either end of the record have one partner only and
        // would overstate their amplitude.
        if (k == 0 || k + 1 == e.size()) continue;
        const double amp = std::min(std::abs(e[k].value - e[k - 1].value), std::abs(e[k + 1].value - e[k].value));
        OscillationEvent ev;
        ev.t = e[k].t;
        ev.amplitude = amp;
        ev.value = e[k].value;
        ev.is_max = e[k].is_max;
        ev.x1 = e[k].x1;
        ev.x2 = e[k].x2;
        ev.leading_cell = std::abs(e[k].x1 - ex.median_x1) >= std::abs(e[k].x2 - ex.median_x2) ? 1 : 2;
        ev.entry_side = (e[k].x1 - e[k].x2) >= 0.0 ? EntrySide::u_positive : EntrySide::u_negative;
        out.push_back(ev);
    }
    double top = 0.0;
    for (const auto& ev : out) top = std::max(top, ev.amplitude);
    const double floor = noise_fraction * std::max(top, ex.scale);
    std::erase_if(out, [&](const OscillationEvent& ev) { return !(ev.amplitude > floor); });
    return out;
}

/// Labels events (LAO if amplitude >= threshold * largest amplitude) and
/// groups them into epochs: a run of LAOs followed by the SAOs up to the next
/// LAO. SAOs before the first LAO belong to no epoch.
inline MmoSignature classify_mmo(std::vector<OscillationEvent> events, double sao_threshold = 0.25,
                                 const std::string& observable = "u") {
    if (!(sao_threshold > 0.0 && sao_threshold < 1.0)) throw ConfigError("classify_mmo: threshold must lie in (0, 1)");
    MmoSignature sig;
    sig.observable = observable;
    sig.sao_threshold = sao_threshold;
    if (events.empty()) {
        sig.warnings.emplace_back("no oscillation events");
        return sig;
    }
    double top = 0.0;
    for (const auto& ev : events) top = std::max(top, ev.amplitude);
    for (auto& ev : events) ev.kind = ev.amplitude >= sao_threshold * top ? EventKind::LAO : EventKind::SAO;

    std::optional<Epoch> cur;
    for (std::size_t k = 0; k < events.size(); ++k) {
        const auto& ev = events[k];
        if (ev.kind == EventKind::LAO) {
            ++sig.lao_count;
            if (!cur || cur->sao_count > 0) {
                if (cur) {
                    cur->complete = true;
                    sig.epochs.push_back(*cur);
                }
                cur = Epoch{ev.t, 0, 0, ev.leading_cell, std::nullopt, false};
            }
            ++cur->lao_count;
        } else {
            ++sig.sao_count;
            if (!cur) continue;
            if (cur->sao_count == 0) cur->entry_side = ev.entry_side;
            ++cur->sao_count;
        }
    }
    if (cur) sig.epochs.push_back(*cur);

    std::string s;
    for (const auto& ep : sig.epochs) {
        if (!ep.complete) continue;
        ++sig.complete_epochs;
        sig.sao_counts_per_epoch.push_back(ep.sao_count);
        if (!s.empty()) s += ' ';
        s += std::to_string(ep.lao_count) + "^" + std::to_string(ep.sao_count);
        if (ep.sao_count > 0) sig.is_mmo = true;
    }
    sig.signature_string = s;

    if (sig.epochs.size() >= 2) {
        bool alt = true;
        for (std::size_t k = 1; k < sig.epochs.size(); ++k) {
            alt = alt && sig.epochs[k].leading_cell != sig.epochs[k - 1].leading_cell;
        }
        sig.alternating_cells = alt;
    } else {
        sig.warnings.emplace_back("fewer than two LAO epochs: cell alternation undefined");
    }
    std::vector<int> lao_cells;
    for (const auto& ev : events) {
        if (ev.kind == EventKind::LAO) lao_cells.push_back(ev.leading_cell);
    }
    sig.alternating_lao_cells = lao_cells.size() >= 2;
    for (std::size_t k = 1; k < lao_cells.size(); ++k) {
        sig.alternating_lao_cells = sig.alternating_lao_cells && lao_cells[k] != lao_cells[k - 1];
    }
    if (sig.lao_count == 0) sig.warnings.emplace_back("no large-amplitude oscillations");
    sig.events = std::move(events);
    return sig;
}

inline MmoSignature analyze_signature(const Trajectory& tr, const std::string& observable = "u",
                                      const SignatureOptions& opts = {}) {
    const ExtremaSet ex = extract_extrema(tr, observable);
    return classify_mmo(oscillation_events(ex, opts.noise_fraction), opts.sao_threshold, observable);
}

/// True when no event changes class when the threshold moves by +-delta
/// (relative).
inline bool partition_stable(const std::vector<OscillationEvent>& events, double sao_threshold, double delta = 0.1) {
    double top = 0.0;
    for (const auto& ev : events) top = std::max(top, ev.amplitude);
    for (const auto& ev : events) {
        const bool lo = ev.amplitude >= sao_threshold * (1.0 - delta) * top;
        const bool hi = ev.amplitude >= sao_threshold * (1.0 + delta) * top;
        if (lo != hi) return false;
    }
    return true;
}

inline void write_events_csv(std::ostream& os, const MmoSignature& sig) {
    os << "t,kind,amplitude,leading_cell,entry_side\n";
    char buf[64];
    for (const auto& ev : sig.events) {
        std::snprintf(buf, sizeof buf, "%.17g", ev.t);
        os << buf << ',' << to_string(ev.kind) << ',';
        std::snprintf(buf, sizeof buf, "%.17g", ev.amplitude);
        os << buf << ',' << ev.leading_cell << ',' << to_string(ev.entry_side) << '\n';
    }
}

}  // namespace cuspkit
