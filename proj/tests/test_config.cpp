#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>

#include "catch_amalgamated.hpp"
#include "cuspkit/config.hpp"
#include "cuspkit/report.hpp"

using namespace cuspkit;

namespace {

// Restores CUSPKIT_THREADS when the test leaves.
class ThreadsEnv {
public:
    ThreadsEnv() {
        if (const char* v = std::getenv("CUSPKIT_THREADS")) saved_ = v;
    }
    ~ThreadsEnv() {
        if (saved_) ::setenv("CUSPKIT_THREADS", saved_->c_str(), 1);
        else ::unsetenv("CUSPKIT_THREADS");
    }
    ThreadsEnv(const ThreadsEnv&) = delete;
    ThreadsEnv& operator=(const ThreadsEnv&) = delete;

private:
    std::optional<std::string> saved_;
};

}  // namespace

TEST_CASE("JSON configuration", "[config]") {
    const Json j = Json::parse(R"({
        "model": "morris_lecar",
        "epsilon": 0.002,
        "params": {"I": 40.0},
        "fold_bracket": [-40, -20],
        "t_end": 1000,
        "symmetric_ic": true,
        "observable": "x1",
        "sweep": [{"param": "I", "lo": 39, "hi": 41, "n": 3}],
        "jobs": 2
    })");
    const RunConfig c = config_from_json(j);
    CHECK(c.model == "morris_lecar");
    CHECK(c.epsilon == 0.002);
    CHECK(c.params.at("I") == 40.0);
    REQUIRE(c.fold_bracket);
    CHECK(c.fold_bracket->first == -40.0);
    CHECK(c.t_end == 1000.0);
    CHECK(c.symmetric_ic);
    CHECK(c.observable == "x1");
    REQUIRE(c.sweep.size() == 1);
    CHECK(c.sweep[0].n == 3);
    CHECK(c.jobs == 2);

    CHECK_THROWS_AS(config_from_json(Json::parse(R"({"modle": "curtu"})")), ConfigError);
    CHECK_THROWS_AS(config_from_json(Json::parse(R"({"sweep": [{"param": "I", "step": 1}]})")), ConfigError);
    CHECK_THROWS_AS(config_from_json(Json::parse(R"({"sweep": [{"lo": 1}]})")), ConfigError);
    CHECK_THROWS_AS(config_from_json(Json::parse(R"({"t_end": "long"})")), ConfigError);
    CHECK_THROWS_AS(config_from_json(Json::parse(R"({"jobs": 1.5})")), ConfigError);
    CHECK_THROWS_AS(config_from_json(Json::parse("[1, 2]")), ConfigError);
}

TEST_CASE("configuration files", "[config]") {
    const auto dir = std::filesystem::temp_directory_path();
    const auto good = dir / "cuspkit_cfg_good.json";
    const auto bad = dir / "cuspkit_cfg_bad.json";
    std::ofstream(good) << R"({"model": "curtu", "params": {"b": 0.6}})";
    std::ofstream(bad) << "{ not json";
    CHECK(load_config_file(good.string()).params.at("b") == 0.6);
    CHECK_THROWS_AS(load_config_file(bad.string()), ConfigError);
    CHECK_THROWS_AS(load_config_file((dir / "cuspkit_missing.json").string()), ConfigError);
    std::filesystem::remove(good);
    std::filesystem::remove(bad);
}

TEST_CASE("--set overrides", "[config]") {
    RunConfig c;
    apply_set(c, "b=0.61");
    apply_set(c, "epsilon=1e-3");
    CHECK(c.params.at("b") == 0.61);
    CHECK(c.epsilon == 1e-3);
    CHECK(c.params.count("epsilon") == 0);
    CHECK_THROWS_AS(apply_set(c, "b"), ConfigError);
    CHECK_THROWS_AS(apply_set(c, "=1"), ConfigError);
    CHECK_THROWS_AS(apply_set(c, "b=0.6x"), ConfigError);
    CHECK_THROWS_AS(apply_set(c, "b="), ConfigError);
}

TEST_CASE("range parsing", "[config]") {
    const auto [lo, hi] = parse_range("0.55,0.66", "--bracket");
    CHECK(lo == 0.55);
    CHECK(hi == 0.66);
    CHECK_THROWS_AS(parse_range("0.55", "--bracket"), ConfigError);
    CHECK_THROWS_AS(parse_range("a,b", "--bracket"), ConfigError);
    CHECK_THROWS_AS(parse_range("1,2,3", "--bracket"), ConfigError);
}

TEST_CASE("model construction from a configuration", "[config]") {
    RunConfig c;
    apply_set(c, "b=0.61");
    apply_set(c, "epsilon=0.002");
    const ModelDefinition m = build_model(c);
    CHECK(m.info().params.at("b") == 0.61);
    CHECK(m.epsilon() == 0.002);

    RunConfig unknown;
    apply_set(unknown, "zeta=1");
    CHECK_THROWS_AS(build_model(unknown), ConfigError);

    RunConfig no_model;
    no_model.model = "hodgkin_huxley";
    CHECK_THROWS_AS(build_model(no_model), ConfigError);

    RunConfig neg;
    neg.epsilon = -1.0;
    CHECK_THROWS_AS(build_model(neg), ConfigError);

    RunConfig t;
    t.t_end = 0.0;
    CHECK_THROWS_AS(simulation_options(t, build_model(RunConfig{})), ConfigError);
    CHECK(simulation_options(RunConfig{}, m).t_end == m.info().t_end);
}

TEST_CASE("worker count and the thread cap", "[config]") {
    ThreadsEnv guard;
    ::unsetenv("CUSPKIT_THREADS");
    CHECK(effective_jobs(8) == 8);
    CHECK(effective_jobs(std::nullopt) >= 1);
    CHECK_THROWS_AS(effective_jobs(0), ConfigError);
    ::setenv("CUSPKIT_THREADS", "3", 1);
    CHECK(effective_jobs(8) == 3);
    CHECK(effective_jobs(2) == 2);
    ::setenv("CUSPKIT_THREADS", "lots", 1);
    CHECK(effective_jobs(8) == 8);
}

TEST_CASE("report JSON", "[config][report]") {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    const Json f = to_json(FoldRoot{0.5, nan, 0.0});
    CHECK(f["y"].is_null());
    CHECK(f["x"] == 0.5);

    const Json e = error_json("hopf", "not_found", "no sign change");
    CHECK(e["schema_version"] == kSchemaVersion);
    CHECK(e["error"] == "not_found");
    // Keys keep their insertion order.
    CHECK(e.begin().key() == "schema_version");
}
