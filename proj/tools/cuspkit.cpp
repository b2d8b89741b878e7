// cuspkit: command-line front-end.
//
// Exit codes: 0 success, 2 a cusp condition fails, 3 numerical failure,
// 4 bad configuration.

#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cuspkit/config.hpp"
#include "cuspkit/pipeline.hpp"
#include "cuspkit/report.hpp"

namespace {

using namespace cuspkit;

constexpr int kOk = 0;
constexpr int kConditionFailure = 2;
constexpr int kNumericalFailure = 3;
constexpr int kConfigError = 4;

// Output goes to a file when a path is given, to stdout otherwise.
class Sink {
public:
    explicit Sink(const std::string& path) {
        if (!path.empty() && path != "-") {
            file_ = std::make_unique<std::ofstream>(path);
            if (!*file_) throw ConfigError("cannot write '" + path + "'");
        }
    }
    std::ostream& stream() { return file_ ? *file_ : std::cout; }

private:
    std::unique_ptr<std::ofstream> file_;
};

struct CommonFlags {
    std::string config_path;
    std::string model;
    double epsilon = 0;
    std::vector<std::string> sets;
    std::string output;
    CLI::Option* model_opt = nullptr;
    CLI::Option* eps_opt = nullptr;
    CLI::Option* out_opt = nullptr;

    void attach(CLI::App* app) {
        app->add_option("-c,--config", config_path, "JSON run configuration");
        model_opt = app->add_option("-m,--model", model, "model name (curtu, morris_lecar, or a registered model)");
        eps_opt = app->add_option("--epsilon", epsilon, "time-scale ratio");
        app->add_option("--set", sets, "parameter override key=value (repeatable)");
        out_opt = app->add_option("-o,--output", output, "output file (stdout when omitted)");
    }

    [[nodiscard]] RunConfig resolve() const {
        RunConfig c = config_path.empty() ? RunConfig{} : load_config_file(config_path);
        if (model_opt->count()) c.model = model;
        if (eps_opt->count()) c.epsilon = epsilon;
        for (const auto& kv : sets) apply_set(c, kv);
        if (out_opt->count()) c.output = output;
        return c;
    }
};

struct SimFlags {
    double t_end = 0, rtol = 0, atol = 0, max_step = 0, transient = 0;
    bool symmetric_ic = false;
    CLI::Option *t_end_opt, *rtol_opt, *atol_opt, *max_step_opt, *transient_opt, *sym_opt;

    void attach(CLI::App* app) {
        t_end_opt = app->add_option("--t-end", t_end, "integration horizon");
        rtol_opt = app->add_option("--rtol", rtol, "relative tolerance");
        atol_opt = app->add_option("--atol", atol, "absolute tolerance");
        max_step_opt = app->add_option("--max-step", max_step, "largest step");
        transient_opt = app->add_option("--transient", transient, "fraction of the span discarded as transient");
        sym_opt = app->add_flag("--symmetric-ic", symmetric_ic, "start on the symmetric subspace");
    }
    void apply(RunConfig& c) const {
        if (t_end_opt->count()) c.t_end = t_end;
        if (rtol_opt->count()) c.rtol = rtol;
        if (atol_opt->count()) c.atol = atol;
        if (max_step_opt->count()) c.max_step = max_step;
        if (transient_opt->count()) c.transient_fraction = transient;
        if (sym_opt->count()) c.symmetric_ic = true;
    }
};

struct SigFlags {
    std::string observable;
    double threshold = 0;
    std::string events_output;
    CLI::Option *obs_opt, *thr_opt, *ev_opt;

    void attach(CLI::App* app) {
        obs_opt = app->add_option("--observable", observable, "u (default) or a channel name");
        thr_opt = app->add_option("--sao-threshold", threshold, "LAO threshold relative to the largest amplitude");
        ev_opt = app->add_option("--events-output", events_output, "CSV event table");
    }
    void apply(RunConfig& c) const {
        if (obs_opt->count()) c.observable = observable;
        if (thr_opt->count()) c.sao_threshold = threshold;
        if (ev_opt->count()) c.events_output = events_output;
    }
};

void write_json(const RunConfig& c, const Json& j) {
    Sink out(c.output);
    out.stream() << j.dump(2) << '\n';
}

int cmd_analyze(const RunConfig& c) {
    const ModelDefinition m = build_model(c);
    const AnalysisReport r = run_analysis(m, analysis_options(c));
    if (!c.curve_output.empty()) {
        Sink curve(c.curve_output);
        write_fold_curve_csv(curve.stream(), r.curve);
    }
    write_json(c, to_json(r));
    return r.conditions.all_satisfied ? kOk : kConditionFailure;
}

int cmd_simulate(const RunConfig& c, bool aliases, std::optional<double> resample_dt) {
    const ModelDefinition m = build_model(c);
    Trajectory tr = simulate(m, simulation_options(c, m));
    if (resample_dt) tr = resample(tr, *resample_dt, tr.t.front());
    tr.meta.channels = state_channels(m, aliases);
    Sink out(c.output);
    write_trajectory_csv(out.stream(), tr);
    return kOk;
}

int cmd_signature(const RunConfig& c, const std::string& input) {
    std::ifstream in(input);
    if (!in) throw ConfigError("cannot read trajectory '" + input + "'");
    const Trajectory tr = read_trajectory_csv(in);
    SignatureOptions so;
    so.sao_threshold = c.sao_threshold;
    const MmoSignature sig = analyze_signature(tr, c.observable, so);
    if (!c.events_output.empty()) {
        Sink ev(c.events_output);
        write_events_csv(ev.stream(), sig);
    }
    write_json(c, to_json(sig));
    return kOk;
}

int cmd_hopf(const RunConfig& c) {
    if (c.hopf_param.empty()) throw ConfigError("hopf: --param is required");
    if (!c.hopf_bracket) throw ConfigError("hopf: --bracket is required");
    const ModelDefinition m = build_model(c);
    write_json(c, to_json(locate_singular_hopf(m, c.hopf_param, *c.hopf_bracket)));
    return kOk;
}

int cmd_sweep(const RunConfig& c) {
    if (c.sweep.empty()) throw ConfigError("sweep: at least one axis (--param/--range/--n) is required");
    const ModelDefinition m = build_model(c);
    SweepOptions o;
    o.analysis = analysis_options(c);
    o.simulation = simulation_options(c, m);
    if (!c.t_end) o.simulation.t_end = 0.0;  // per-cell model default
    o.observable = c.observable;
    o.signature.sao_threshold = c.sao_threshold;
    o.jobs = effective_jobs(c.jobs);
    const auto cells = run_sweep(m, c.sweep, o);
    Sink out(c.output);
    write_sweep_csv(out.stream(), c.sweep, cells);
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"cuspkit: cusped singularities and singular Hopf bifurcations in symmetric two-cell systems"};
    app.require_subcommand(1);

    CommonFlags analyze_common, sim_common, sig_common, hopf_common, sweep_common;

    auto* analyze = app.add_subcommand("analyze", "cusp checklist: fold, cusp test, reduction, conditions, SAO count");
    analyze_common.attach(analyze);
    std::string bracket, curve_output;
    double arclength = 0;
    auto* bracket_opt = analyze->add_option("--fold-bracket", bracket, "search interval lo,hi for the symmetric fold");
    auto* arc_opt = analyze->add_option("--arclength", arclength, "half-length of the traced fold curve");
    auto* curve_opt = analyze->add_option("--curve-output", curve_output, "fold-curve CSV");

    auto* sim = app.add_subcommand("simulate", "integrate the full system from the perturbed equilibrium");
    sim_common.attach(sim);
    SimFlags sim_flags;
    sim_flags.attach(sim);
    bool aliases = false;
    double resample_dt = 0;
    sim->add_flag("--aliases", aliases, "model-specific column names");
    auto* resample_opt = sim->add_option("--resample-dt", resample_dt, "fixed output stride");

    auto* sig = app.add_subcommand("signature", "SAO/LAO events and the L^s signature of a trajectory CSV");
    sig_common.attach(sig);
    SigFlags sig_flags;
    sig_flags.attach(sig);
    std::string input;
    sig->add_option("trajectory", input, "trajectory CSV")->required();

    auto* hopf = app.add_subcommand("hopf", "locate the singular Hopf point by parameter continuation");
    hopf_common.attach(hopf);
    std::string hopf_param, hopf_bracket;
    auto* hp_opt = hopf->add_option("--param", hopf_param, "continuation parameter");
    auto* hb_opt = hopf->add_option("--bracket", hopf_bracket, "parameter interval lo,hi");

    auto* sweep = app.add_subcommand("sweep", "grid over one or two parameters");
    sweep_common.attach(sweep);
    SimFlags sweep_sim;
    sweep_sim.attach(sweep);
    SigFlags sweep_sig;
    sweep_sig.attach(sweep);
    std::string p1, r1, p2, r2;
    int n1 = 0, n2 = 0, jobs = 0;
    auto* p1_opt = sweep->add_option("--param", p1, "first axis parameter");
    sweep->add_option("--range", r1, "first axis lo,hi");
    sweep->add_option("--n", n1, "first axis points");
    auto* p2_opt = sweep->add_option("--param2", p2, "second axis parameter");
    sweep->add_option("--range2", r2, "second axis lo,hi");
    sweep->add_option("--n2", n2, "second axis points");
    auto* jobs_opt = sweep->add_option("--jobs", jobs, "worker threads (capped by CUSPKIT_THREADS)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::Error& e) {
        app.exit(e);
        return kConfigError;
    }

    RunConfig cfg;
    std::string command;
    try {
        if (analyze->parsed()) {
            command = "analysis";
            cfg = analyze_common.resolve();
            if (bracket_opt->count()) cfg.fold_bracket = parse_range(bracket, "--fold-bracket");
            if (arc_opt->count()) cfg.fold_arclength = arclength;
            if (curve_opt->count()) cfg.curve_output = curve_output;
        } else if (sim->parsed()) {
            command = "simulation";
            cfg = sim_common.resolve();
            sim_flags.apply(cfg);
            if (aliases) cfg.aliases = true;
            if (resample_opt->count()) cfg.resample_dt = resample_dt;
        } else if (sig->parsed()) {
            command = "signature";
            cfg = sig_common.resolve();
            sig_flags.apply(cfg);
        } else if (hopf->parsed()) {
            command = "hopf";
            cfg = hopf_common.resolve();
            if (hp_opt->count()) cfg.hopf_param = hopf_param;
            if (hb_opt->count()) cfg.hopf_bracket = parse_range(hopf_bracket, "--bracket");
        } else {
            command = "sweep";
            cfg = sweep_common.resolve();
            sweep_sim.apply(cfg);
            sweep_sig.apply(cfg);
            if (p1_opt->count()) {
                const auto [lo, hi] = parse_range(r1, "--range");
                cfg.sweep = {SweepAxis{p1, lo, hi, n1 > 0 ? n1 : 1}};
                if (p2_opt->count()) {
                    const auto [lo2, hi2] = parse_range(r2, "--range2");
                    cfg.sweep.push_back(SweepAxis{p2, lo2, hi2, n2 > 0 ? n2 : 1});
                }
            }
            if (jobs_opt->count()) cfg.jobs = jobs;
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfigError;
    }

    try {
        if (analyze->parsed()) return cmd_analyze(cfg);
        if (sim->parsed()) return cmd_simulate(cfg, cfg.aliases, cfg.resample_dt);
        if (sig->parsed()) return cmd_signature(cfg, input);
        if (hopf->parsed()) return cmd_hopf(cfg);
        return cmd_sweep(cfg);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfigError;
    } catch (const Error& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        if (command != "simulation" && command != "sweep") {
            try {
                const char* category = dynamic_cast<const NotFoundError*>(&e)      ? "not_found"
                                       : dynamic_cast<const WrongBranchError*>(&e) ? "wrong_branch"
                                       : dynamic_cast<const DomainError*>(&e)      ? "domain"
                                                                                   : "numerical";
                write_json(cfg, error_json(command, category, e.what()));
            } catch (const std::exception&) {
            }
        }
        return kNumericalFailure;
    }
}
