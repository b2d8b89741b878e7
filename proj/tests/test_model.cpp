#include <cmath>
#include <random>

#include "catch_amalgamated.hpp"
#include "cuspkit/models.hpp"
#include "cuspkit/reduction.hpp"

using namespace cuspkit;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

struct Box {
    double x_lo, x_hi, y_lo, y_hi;
};

Box sample_box(const ModelDefinition& m) {
    if (m.name() == "curtu") return {0.05, 0.95, 0.0, 1.0};
    return {-70.0, 30.0, 0.0, 0.6};
}

double sgn(double v) { return v > 0 ? 1.0 : (v < 0 ? -1.0 : 0.0); }

}  // namespace

TEST_CASE("nested duals give exact derivatives of elementary functions", "[dual]") {
    // d^k/dx^k exp(2x) = 2^k exp(2x)
    const double x = 0.3;
    const Dual3 r = exp(2.0 * seed3(x, 1, 1, 1));
    const Partials3 p = unpack(r);
    const double e = std::exp(2 * x);
    CHECK_THAT(p.value, WithinRel(e, 1e-15));
    CHECK_THAT(p.da, WithinRel(2 * e, 1e-15));
    CHECK_THAT(p.dab, WithinRel(4 * e, 1e-15));
    CHECK_THAT(p.dabc, WithinRel(8 * e, 1e-15));

    // mixed partial of x*y*y: d_x d_y d_y = 2
    auto fn = [](auto a, auto b) { return a * b * b; };
    const Partials3 q = third_partials<2>(fn, std::array<double, 2>{1.5, -0.7}, 0, 1, 1);
    CHECK_THAT(q.dabc, WithinAbs(2.0, 1e-15));
    CHECK_THAT(q.dbc, WithinAbs(2 * 1.5, 1e-15));

    const Dual1 t = tanh(seed1(0.4, 1.0));
    CHECK_THAT(t.d, WithinRel(1.0 - std::tanh(0.4) * std::tanh(0.4), 1e-15));
    const Dual1 l = log(seed1(2.0, 1.0));
    CHECK_THAT(l.d, WithinRel(0.5, 1e-15));
}

TEST_CASE("exchange is an involution and the field is equivariant", "[model]") {
    for (const auto& name : builtin_model_names()) {
        const ModelDefinition m = make_model(name);
        const Box b = sample_box(m);
        std::mt19937_64 rng(11);
        std::uniform_real_distribution<double> ux(b.x_lo, b.x_hi), uy(b.y_lo, b.y_hi);
        for (int k = 0; k < 100; ++k) {
            const PairState s{ux(rng), ux(rng), uy(rng), uy(rng)};
            REQUIRE(exchange(exchange(s)) == s);
            const Vec4 lhs = eval_field(m, exchange(s));
            const Vec4 rhs = exchange(eval_field(m, s));
            for (int i = 0; i < 4; ++i) CHECK_THAT(lhs[i], WithinAbs(rhs[i], 1e-12));
        }
    }
}

TEST_CASE("engine jets agree with analytic jets and finite differences", "[model][jets]") {
    for (const auto& name : builtin_model_names()) {
        INFO(name);
        const ModelDefinition m = make_model(name);
        REQUIRE(m.has_analytic_jets());
        const Box b = sample_box(m);
        std::mt19937_64 rng(2024);
        std::uniform_real_distribution<double> ux(b.x_lo, b.x_hi), uy(b.y_lo, b.y_hi);
        double worst_an = 0, worst_fd = 0, worst_gan = 0, worst_gfd = 0;
        for (int k = 0; k < 100; ++k) {
            const double xi = ux(rng), xj = ux(rng), y = uy(rng);
            const FJet3 ad = f_jet_dual(m, xi, xj, y);
            worst_an = std::max(worst_an, f_jet_analytic_gap(m, ad, xi, xj, y));
            worst_fd = std::max(worst_fd, f_jet_fd_gap(m, ad, xi, xj, y));
            const GJet2 g = g_jet_dual(m, xi, y);
            worst_gan = std::max(worst_gan, g_jet_analytic_gap(m, g, xi, y));
            worst_gfd = std::max(worst_gfd, g_jet_fd_gap(m, g, xi, y));
        }
        CHECK(worst_an <= 1e-8);
        CHECK(worst_fd <= 1e-5);
        CHECK(worst_gan <= 1e-8);
        CHECK(worst_gfd <= 1e-5);
    }
}

TEST_CASE("validated jets throw when an oracle disagrees", "[model][jets]") {
    ModelDefinition m = build_curtu();
    const CurtuParams p;
    m.set_analytic_jets(
        [p](double ui, double uj, double a) {
            FJet3 j = curtu_analytic_f_jet(p, ui, uj, a);
            j.fy *= p.b;  // the b-scaled f_y variant
            return j;
        },
        [p](double u, double a) { return curtu_analytic_g_jet(p, u, a); });
    CHECK_THROWS_AS(f_jet(m, 0.9, 0.9, 0.6), DerivativeConsistencyError);
    CHECK_NOTHROW(f_jet(build_curtu(), 0.9, 0.9, 0.6));
}

TEST_CASE("slow-equation partials of the Curtu model", "[model]") {
    const ModelDefinition m = build_curtu();
    const GJet2 g = g_jet(m, 0.7, 0.3);
    CHECK_THAT(g.g, WithinAbs(-0.3 + 0.63 * 0.7, 1e-15));
    CHECK_THAT(g.gx, WithinAbs(0.63, 1e-15));
    CHECK_THAT(g.gy, WithinAbs(-1.0, 1e-15));
    CHECK_THAT(g.gxx, WithinAbs(0.0, 1e-15));
    CHECK_THAT(g.gxy, WithinAbs(0.0, 1e-15));
}

TEST_CASE("Morris-Lecar jet structure", "[model]") {
    const ModelDefinition m = build_morris_lecar();
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> uv(-70, 30), un(0, 0.6);
    for (int k = 0; k < 20; ++k) {
        const FJet3 j = f_jet_dual(m, uv(rng), uv(rng), un(rng));
        CHECK_THAT(j.f112, WithinAbs(0.0, 1e-15));
        CHECK_THAT(j.f2y, WithinAbs(0.0, 1e-15));
        CHECK_THAT(j.f1y, WithinRel(-0.4, 1e-14));
    }
}

TEST_CASE("mixed second partials are symmetric", "[model]") {
    for (const auto& name : builtin_model_names()) {
        const ModelDefinition m = make_model(name);
        const Box b = sample_box(m);
        const double x = 0.5 * (b.x_lo + b.x_hi), y = 0.5 * (b.y_lo + b.y_hi);
        auto g = [&m](auto a, auto c) { return m.g(a, c); };
        const Partials2 xy = second_partials<2>(g, std::array<double, 2>{x, y}, 0, 1);
        const Partials2 yx = second_partials<2>(g, std::array<double, 2>{x, y}, 1, 0);
        CHECK_THAT(xy.dab, WithinAbs(yx.dab, 1e-14 * std::max(1.0, std::abs(xy.dab))));
    }
}

TEST_CASE("y_flip sign table at the cusp", "[model][yflip]") {
    for (const auto& name : builtin_model_names()) {
        INFO(name);
        const ModelDefinition m = make_model(name);
        const ModelDefinition f = y_flip(m);
        const auto roots = find_symmetric_fold(m, m.info().fold_bracket);
        REQUIRE(!roots.empty());
        const double xs = roots.front().x;
        const ReducedCoefficients a = reduction_coefficients(m, xs);
        const ReducedCoefficients b = reduction_coefficients(f, xs);
        CHECK_THAT(b.y_star, WithinRel(-a.y_star, 1e-12));

        const std::array<std::pair<double, double>, 6> pairs{
            {{a.fy, b.fy}, {a.omega, b.omega}, {a.gamma, b.gamma}, {a.gx, b.gx}, {a.gy, b.gy}, {a.g0, b.g0}}};
        const std::array<double, 6> expected{-1, -1, 1, -1, 1, -1};
        for (std::size_t k = 0; k < 6; ++k) {
            INFO("entry " << k);
            CHECK(sgn(pairs[k].second) == expected[k] * sgn(pairs[k].first));
            CHECK_THAT(pairs[k].second, WithinRel(expected[k] * pairs[k].first, 1e-8));
        }
    }
}

TEST_CASE("y_flip is an involution on the field", "[model][yflip]") {
    const ModelDefinition m = build_morris_lecar();
    const ModelDefinition ff = y_flip(y_flip(m));
    const PairState s{-30.0, -25.0, 0.1, 0.2};
    const Vec4 a = eval_field(m, s);
    const Vec4 b = eval_field(ff, s);
    for (int i = 0; i < 4; ++i) CHECK(a[i] == b[i]);
}

TEST_CASE("parameter overrides rebuild the model", "[model]") {
    const ModelDefinition m = build_curtu();
    const ModelDefinition m2 = m.with_params({{"b", 0.5}, {"epsilon", 0.002}});
    CHECK(m2.params().at("b") == 0.5);
    CHECK(m2.epsilon() == 0.002);
    CHECK(m.params().at("b") == 0.6055);
    CHECK_THROWS_AS(m.with_parameter("nope", 1.0), ConfigError);
    CHECK_THROWS_AS(m.with_epsilon(-1.0), ConfigError);
    CHECK_THROWS_AS(eval_field(m, PairState{1.5, 0.5, 0.0, 0.0}), DomainError);
}
