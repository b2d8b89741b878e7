#include <cmath>
#include <sstream>

#include "catch_amalgamated.hpp"
#include "cuspkit/dynamics.hpp"
#include "cuspkit/models.hpp"

using namespace cuspkit;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

double max_gap(const Vec4& a, const Vec4& b) {
    double d = 0;
    for (int i = 0; i < 4; ++i) d = std::max(d, std::abs(a[i] - b[i]));
    return d;
}

// x' = 1, leaving an open unit interval through x = 1.
struct Drift {
    template <typename T>
    T f(const T& xi, const T&, const T&) const {
        return xi * 0.0 + 1.0;
    }
    template <typename T>
    T g(const T& x, const T&) const {
        return x * 0.0;
    }
};

}  // namespace

TEST_CASE("exponential decay against its closed form", "[dynamics]") {
    IntegratorOptions o;
    o.rtol = 1e-8;
    o.atol = 1e-12;
    auto rhs = [](double, const std::array<double, 1>& y) { return std::array<double, 1>{-y[0]}; };
    const auto tr = dopri5<1>(rhs, {1.0}, 0.0, 1.0, o, TrajectoryMeta{});
    REQUIRE(tr.t.back() == 1.0);
    double worst = 0;
    for (std::size_t k = 0; k < tr.size(); ++k) worst = std::max(worst, std::abs(tr.states[k][0] - std::exp(-tr.t[k])));
    CHECK(worst < 10 * o.rtol);
    CHECK(tr.has_derivatives());
    for (std::size_t k = 1; k < tr.size(); ++k) CHECK(tr.t[k] > tr.t[k - 1]);
}

TEST_CASE("harmonic oscillator and step bounds", "[dynamics]") {
    IntegratorOptions o;
    o.rtol = 1e-10;
    o.atol = 1e-12;
    o.max_step = 0.05;
    auto rhs = [](double, const std::array<double, 2>& y) { return std::array<double, 2>{y[1], -y[0]}; };
    const auto tr = dopri5<2>(rhs, {1.0, 0.0}, 0.0, 20.0, o, TrajectoryMeta{});
    CHECK_THAT(tr.states.back()[0], WithinAbs(std::cos(20.0), 1e-8));
    CHECK_THAT(tr.states.back()[1], WithinAbs(-std::sin(20.0), 1e-8));
    for (std::size_t k = 1; k < tr.size(); ++k) CHECK(tr.t[k] - tr.t[k - 1] <= 0.05 * (1 + 1e-12));
}

TEST_CASE("fifth-order convergence on the Curtu system", "[dynamics]") {
    const ModelDefinition m = build_curtu();
    const PairState s0 = perturbed_equilibrium(m);
    IntegratorOptions ref;
    ref.rtol = 1e-12;
    ref.atol = 1e-14;
    const Vec4 R = integrate(m, s0, {0, 200}, ref).states.back();
    for (double rt : {1e-7, 1e-8}) {
        INFO("rtol = " << rt);
        IntegratorOptions a;
        a.rtol = rt;
        a.atol = rt * 1e-2;
        IntegratorOptions b;
        b.rtol = rt / 32;
        b.atol = rt / 32 * 1e-2;
        const double ea = max_gap(integrate(m, s0, {0, 200}, a).states.back(), R);
        const double eb = max_gap(integrate(m, s0, {0, 200}, b).states.back(), R);
        const double ratio = ea / eb;
        CHECK(ratio >= 16.0);
        CHECK(ratio <= 64.0);
    }
}

TEST_CASE("flow commutes with the cell exchange", "[dynamics]") {
    for (const auto& name : builtin_model_names()) {
        INFO(name);
        const ModelDefinition m = make_model(name);
        const PairState s0 = perturbed_equilibrium(m);
        const double t1 = name == "curtu" ? 500.0 : 2000.0;
        const Trajectory a = integrate(m, s0, {0, t1});
        const Trajectory b = integrate(m, exchange(s0), {0, t1});
        REQUIRE(a.size() == b.size());
        double worst = 0;
        for (std::size_t k = 0; k < a.size(); ++k) {
            CHECK(a.t[k] == b.t[k]);
            worst = std::max(worst, max_gap(exchange(a.states[k]), b.states[k]));
        }
        CHECK(worst <= 10 * 1e-9);
    }
}

TEST_CASE("symmetric subspace is invariant", "[dynamics]") {
    const ModelDefinition m = build_curtu();
    const Trajectory tr = integrate(m, perturbed_equilibrium(m, true), {0, 3000});
    double worst = 0;
    for (const auto& s : tr.states) worst = std::max(worst, std::abs(s[0] - s[1]) + std::abs(s[2] - s[3]));
    CHECK(worst < 1e-8);
}

TEST_CASE("integration is deterministic", "[dynamics]") {
    const ModelDefinition m = build_curtu();
    const PairState s0 = perturbed_equilibrium(m);
    const Trajectory a = integrate(m, s0, {0, 300});
    const Trajectory b = integrate(m, s0, {0, 300});
    REQUIRE(a.size() == b.size());
    CHECK(a.t == b.t);
    CHECK(a.states == b.states);
    CHECK(a.meta.accepted == b.meta.accepted);
    CHECK(a.meta.rejected == b.meta.rejected);
}

TEST_CASE("trajectory CSV round trip", "[dynamics][csv]") {
    const ModelDefinition m = build_curtu();
    const Trajectory a = integrate(m, perturbed_equilibrium(m), {0, 50});
    std::stringstream ss;
    write_trajectory_csv(ss, a);
    CHECK(ss.str().rfind("t,x1,x2,y1,y2\n", 0) == 0);
    const Trajectory b = read_trajectory_csv(ss);
    CHECK(b.t == a.t);
    CHECK(b.states == a.states);
    CHECK_FALSE(b.has_derivatives());

    Trajectory c = a;
    c.meta.channels = state_channels(m, true);
    std::stringstream sa;
    write_trajectory_csv(sa, c);
    CHECK(sa.str().rfind("t,u1,u2,a1,a2\n", 0) == 0);
}

TEST_CASE("malformed trajectory CSV", "[dynamics][csv]") {
    auto read = [](const std::string& text) {
        std::stringstream ss(text);
        return read_trajectory_csv(ss);
    };
    CHECK_THROWS_AS(read(""), ConfigError);
    CHECK_THROWS_AS(read("t,a,b\n0,1,2\n"), ConfigError);
    CHECK_THROWS_AS(read("t,x1,x2,y1,y2\n0,1,2,3\n"), ConfigError);
    CHECK_THROWS_AS(read("t,x1,x2,y1,y2\n0,1,2,3,x\n"), ConfigError);
    CHECK_THROWS_AS(read("t,x1,x2,y1,y2\n1,1,2,3,4\n1,1,2,3,4\n"), ConfigError);
    CHECK_THROWS_AS(read("t,x1,x2,y1,y2\n0,nan,2,3,4\n"), ConfigError);
    CHECK(read("t,x1,x2,y1,y2\r\n0,1,2,3,4\r\n").size() == 1);
}

TEST_CASE("Hermite resampling", "[dynamics]") {
    IntegratorOptions o;
    o.rtol = 1e-10;
    o.atol = 1e-12;
    auto rhs = [](double, const std::array<double, 2>& y) { return std::array<double, 2>{y[1], -y[0]}; };
    const auto tr = dopri5<2>(rhs, {1.0, 0.0}, 0.0, 10.0, o, TrajectoryMeta{});
    const auto rs = resample(tr, 0.01);
    REQUIRE(rs.size() == 1001);
    double worst = 0, worst_d = 0;
    for (std::size_t k = 0; k < rs.size(); ++k) {
        worst = std::max(worst, std::abs(rs.states[k][0] - std::cos(rs.t[k])));
        worst_d = std::max(worst_d, std::abs(rs.derivs[k][0] + std::sin(rs.t[k])));
    }
    CHECK(worst < 1e-6);
    CHECK(worst_d < 1e-5);
    CHECK_THAT(interpolate(tr, 3.3)[0], WithinAbs(std::cos(3.3), 1e-6));
    CHECK_THROWS_AS(interpolate(tr, 11.0), DomainError);
    CHECK_THROWS_AS(resample(tr, 0.0), ConfigError);

    const auto cut = discard_before(tr, 5.0);
    CHECK(cut.t.front() >= 5.0);
    CHECK(cut.t.back() == 10.0);
}

TEST_CASE("leaving the domain ends the run with the exit state", "[dynamics]") {
    ModelInfo info;
    info.name = "drift";
    info.domain = Domain{Interval{0.0, 1.0, true}, Interval{-1.0, 1.0, false}};
    const ModelDefinition m = ModelDefinition::from_kernel(info, Drift{});
    try {
        (void)integrate(m, PairState{0.5, 0.5, 0, 0}, {0, 2});
        FAIL("expected a domain exit");
    } catch (const DomainExitError<4>& e) {
        CHECK(e.exit_state[0] < 1.0);
        CHECK(e.exit_state[0] > 0.9);
        CHECK_FALSE(e.partial.t.empty());
    }
    CHECK_THROWS_AS(integrate(m, PairState{1.5, 0.5, 0, 0}, {0, 1}), DomainError);
}

TEST_CASE("default simulation drops the transient", "[dynamics]") {
    const ModelDefinition m = build_curtu();
    SimulationOptions so;
    so.t_end = 500;
    const Trajectory tr = simulate(m, so);
    CHECK(tr.t.front() >= 100.0);
    CHECK(tr.t.back() == 500.0);
    const PairState s0 = perturbed_equilibrium(m);
    CHECK_THAT(s0.x1 - s0.x2, WithinAbs(2e-3, 1e-15));
    CHECK(s0.y1 == s0.y2);
    so.transient_fraction = 1.0;
    CHECK_THROWS_AS(simulate(m, so), ConfigError);
}

TEST_CASE("reduced system integration", "[dynamics]") {
    ReducedCoefficients rc;
    rc.fy = -1;
    rc.omega = 0;
    rc.gamma = 0;
    rc.g0 = 1;
    rc.gx = 0;
    rc.gy = -1;
    const ReducedTrajectory tr = integrate_reduced(rc, 0.1, {0, 0, 1}, {0, 2});
    CHECK(tr.meta.channels == std::vector<std::string>{"u", "w", "z"});
    // w' = eps g0, z' = eps gy z.
    CHECK_THAT(tr.states.back()[1], WithinAbs(0.2, 1e-9));
    CHECK_THAT(tr.states.back()[2], WithinRel(std::exp(-0.2), 1e-8));
    CHECK_THAT(tr.states.back()[0], WithinRel(-(1 - std::exp(-0.2)) / 0.1, 1e-7));
}
