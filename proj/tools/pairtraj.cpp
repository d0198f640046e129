// pairtraj — batch CLI for two-time correlation functions of open quantum
// systems via paired stochastic wave-function trajectories.
//
// Subcommands: simulate, exact, compare, spectrum, fit, dk-time.
// Exit codes: 0 ok, 2 configuration error, 3 degenerate run, 4 resource limit.

#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "pairtraj/pairtraj.hpp"

namespace {

using namespace pairtraj;

struct CommonFlags {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> workers;
    std::optional<std::size_t> trajectories;
    std::optional<double> dt, t_max, sample_every;
    std::optional<std::string> output, engine;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
    cmd->add_option("-c,--config", f.config_path, "run configuration (JSON)")->required();
    cmd->add_option("--seed", f.seed, "override run.seed");
    cmd->add_option("--workers", f.workers, "override run.workers");
    cmd->add_option("--trajectories", f.trajectories, "override run.trajectories");
    cmd->add_option("--dt", f.dt, "override run.dt");
    cmd->add_option("--t-max", f.t_max, "override run.t_max");
    cmd->add_option("--sample-every", f.sample_every, "override run.sample_every");
    cmd->add_option("-o,--output", f.output, "override output.path");
    cmd->add_option("--engine", f.engine, "override engine.kind");
}

RunConfig resolve_config(const CommonFlags& f) {
    RunConfig cfg = load_config(f.config_path);
    // environment overrides (seed and workers only), then explicit flags
    if (const char* e = std::getenv("PAIRTRAJ_SEED")) cfg.seed = std::strtoull(e, nullptr, 10);
    if (const char* e = std::getenv("PAIRTRAJ_WORKERS")) {
        cfg.workers = static_cast<unsigned>(std::strtoul(e, nullptr, 10));
    }
    if (f.seed) cfg.seed = *f.seed;
    if (f.workers) cfg.workers = *f.workers;
    if (f.trajectories) cfg.trajectories = *f.trajectories;
    if (f.dt) cfg.dt = *f.dt;
    if (f.t_max) cfg.t_max = *f.t_max;
    if (f.sample_every) cfg.sample_every = *f.sample_every;
    if (f.output) cfg.output_path = *f.output;
    if (f.engine) cfg.engine_kind = *f.engine;
    cfg.validate();
    return cfg;
}

EnsembleSpec make_spec(const RunConfig& cfg, const LindbladModel& model,
                       const LinearOperator& a_op, const LinearOperator& b_op,
                       const EngineKind& engine, const InitialState& initial) {
    EnsembleSpec spec;
    spec.model = &model;
    spec.observable = &a_op;
    spec.b_op = &b_op;
    spec.engine = engine;
    spec.initial = initial;
    spec.trajectories = cfg.trajectories;
    spec.dt = cfg.dt;
    spec.sample_stride = cfg.sample_stride();
    spec.n_samples = cfg.n_samples();
    spec.seed = cfg.seed;
    spec.workers = cfg.workers;
    return spec;
}

void write_series(const RunConfig& cfg, const CorrelationSeries& series,
                  const std::string& path) {
    if (cfg.output_format == "json") {
        write_text_file(path, series_to_json(series, cfg.normalized).dump(2) + "\n");
    } else {
        write_text_file(path, series_to_csv(series, cfg.normalized));
    }
}

int cmd_simulate(const CommonFlags& flags) {
    const RunConfig cfg = resolve_config(flags);
    const LindbladModel model = build_model(cfg);
    const LinearOperator a_op = build_observable(cfg, model);
    const LinearOperator b_op = build_b_operator(cfg, model);
    const EngineKind engine = build_engine(cfg, model);
    const InitialState initial = build_initial(cfg, model);

    const EnsembleResult res =
        run_ensemble(make_spec(cfg, model, a_op, b_op, engine, initial));
    write_series(cfg, res.series, cfg.output_path);

    std::cout << "engine " << engine.name() << ": K=" << res.stats.trajectories
              << ", jumps/trajectory=" << res.stats.mean_jumps
              << ", degenerate=" << res.stats.degenerate << ", aborted=" << res.stats.aborted
              << ", wall=" << res.stats.wall_seconds << " s"
              << ", final error_bound=" << res.error_bound.back() << "\n";
    std::cout << "wrote " << cfg.output_path << "\n";
    return 0;
}

int cmd_exact(const CommonFlags& flags) {
    const RunConfig cfg = resolve_config(flags);
    const LindbladModel model = build_model(cfg);
    if (model.dim() > kOracleMaxDim) {
        throw resource_error("exact: model dimension exceeds the exact-path limit of 64");
    }
    const LinearOperator a_op = build_observable(cfg, model);
    const LinearOperator b_op = build_b_operator(cfg, model);
    const Matrix rho0 = build_rho0(cfg, model);

    std::vector<double> times;
    const std::size_t n = cfg.n_samples();
    for (std::size_t i = 0; i <= n; ++i) {
        times.push_back(cfg.sample_every * static_cast<double>(i));
    }
    const CorrelationSeries series =
        exact_correlator(model, a_op, b_op, rho0, times, cfg.dt / 4.0);
    write_series(cfg, series, cfg.output_path);
    std::cout << "exact series with " << times.size() << " samples; wrote " << cfg.output_path
              << "\n";
    return 0;
}

int cmd_compare(const CommonFlags& flags, const std::vector<std::string>& engines_flag) {
    const RunConfig cfg = resolve_config(flags);
    std::vector<std::string> engines =
        engines_flag.empty() ? cfg.compare_engines : engines_flag;
    if (engines.size() < 2) {
        throw config_error("compare: need at least two engines (--engines or compare.engines)");
    }
    const LindbladModel model = build_model(cfg);
    const LinearOperator a_op = build_observable(cfg, model);
    const LinearOperator b_op = build_b_operator(cfg, model);
    const InitialState initial = build_initial(cfg, model);

    std::ostringstream out;
    out << "engine,time,g_real,g_imag,g_abs,stderr_real,stderr_imag,error_bound,k_needed\n";
    for (const std::string& name : engines) {
        const EngineKind engine = build_engine(name, cfg, model);
        const EnsembleResult res =
            run_ensemble(make_spec(cfg, model, a_op, b_op, engine, initial));
        for (std::size_t i = 0; i < res.series.size(); ++i) {
            const Complex g = res.series.mean[i];
            const double se = res.series.stderr_max(i);
            const double target = cfg.target_rel_error * std::abs(g);
            const double k_needed =
                target > 0.0 ? se * se * static_cast<double>(cfg.trajectories) / (target * target)
                             : std::numeric_limits<double>::infinity();
            out << name << ',' << format_double(res.series.times[i]) << ','
                << format_double(g.real()) << ',' << format_double(g.imag()) << ','
                << format_double(std::abs(g)) << ',' << format_double(res.series.stderr_re[i])
                << ',' << format_double(res.series.stderr_im[i]) << ','
                << format_double(res.error_bound[i]) << ',' << format_double(k_needed) << "\n";
        }
        std::cout << name << ": jumps/trajectory=" << res.stats.mean_jumps
                  << ", final error_bound=" << res.error_bound.back()
                  << ", final stderr=" << res.series.stderr_max(res.series.size() - 1) << "\n";
    }
    write_text_file(cfg.output_path, out.str());
    std::cout << "wrote " << cfg.output_path << "\n";
    return 0;
}

int cmd_spectrum(const std::string& input, const std::string& output, double omega_max,
                 double omega_step) {
    if (omega_step <= 0.0 || omega_max <= 0.0) {
        throw config_error("spectrum: --omega-max and --omega-step must be > 0");
    }
    const CorrelationSeries series = read_series_csv(input);
    std::vector<double> grid;
    for (double w = -omega_max; w <= omega_max + 0.5 * omega_step; w += omega_step) {
        grid.push_back(w);
    }
    const std::vector<double> s = spectrum(series, grid);
    std::ostringstream out;
    out << "omega,S\n";
    for (std::size_t i = 0; i < grid.size(); ++i) {
        out << format_double(grid[i]) << ',' << format_double(s[i]) << "\n";
    }
    write_text_file(output, out.str());
    std::cout << "wrote " << output << "\n";
    return 0;
}

int cmd_fit(const std::string& input, const std::string& output, double t_lo, double t_hi) {
    const CorrelationSeries series = read_series_csv(input);
    const double t = fit_tunneling_time(series, t_lo, t_hi);
    std::cout << "tunneling_time = " << format_double(t) << "\n";
    if (!output.empty()) {
        nlohmann::json j;
        j["tunneling_time"] = t;
        j["window"] = {t_lo, t_hi};
        write_text_file(output, j.dump(2) + "\n");
        std::cout << "wrote " << output << "\n";
    }
    return 0;
}

int cmd_dk_time(double lambda, double g_scaled, double kappa, double gamma1, double gamma2,
                bool have_g) {
    if (!have_g) {
        DopoParams p;
        p.kappa = kappa;
        p.gamma1 = gamma1;
        p.gamma2 = gamma2;
        p.epsilon = lambda * p.epsilon_threshold();
        g_scaled = scaled_coupling_G(p);
    }
    const double t = kinsler_drummond_T(lambda, g_scaled, gamma1);
    std::cout << "T = " << format_double(t) << "  (lambda=" << lambda << ", G=" << g_scaled
              << ", sigma=" << barrier_sigma(g_scaled) << ", gamma1=" << gamma1 << ")\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"two-time correlation functions from paired stochastic trajectories"};
    app.require_subcommand(1);

    CommonFlags sim_flags, exact_flags, cmp_flags;
    auto* sim = app.add_subcommand("simulate", "run a trajectory ensemble");
    add_common(sim, sim_flags);

    auto* exa = app.add_subcommand("exact", "integrate the exact series (dim <= 64)");
    add_common(exa, exact_flags);

    auto* cmp = app.add_subcommand("compare", "run several engines on one problem");
    add_common(cmp, cmp_flags);
    std::vector<std::string> engines_flag;
    cmp->add_option("--engines", engines_flag, "engine kinds to compare")->delimiter(',');

    auto* spc = app.add_subcommand("spectrum", "cosine-transform a series CSV");
    std::string spc_in, spc_out = "spectrum.csv";
    double omega_max = 0.0, omega_step = 0.0;
    spc->add_option("-i,--input", spc_in, "series CSV")->required();
    spc->add_option("-o,--output", spc_out, "spectrum CSV");
    spc->add_option("--omega-max", omega_max, "grid half-width")->required();
    spc->add_option("--omega-step", omega_step, "grid spacing")->required();

    auto* fit = app.add_subcommand("fit", "fit exp(-2t/T) on a series CSV window");
    std::string fit_in, fit_out;
    double t_lo = 0.0, t_hi = 0.0;
    fit->add_option("-i,--input", fit_in, "series CSV")->required();
    fit->add_option("-o,--output", fit_out, "result JSON");
    fit->add_option("--t-lo", t_lo, "window start")->required();
    fit->add_option("--t-hi", t_hi, "window end")->required();

    auto* dkt = app.add_subcommand("dk-time", "closed-form tunneling time");
    double dk_lambda = 2.0, dk_g = 0.0, dk_kappa = 1.0, dk_gamma1 = 1.0, dk_gamma2 = 4.0;
    dkt->add_option("--lambda", dk_lambda, "pump ratio epsilon/epsilon_th")->required();
    auto* gopt = dkt->add_option("--G", dk_g, "scaled coupling (else derived)");
    dkt->add_option("--kappa", dk_kappa, "coupling");
    dkt->add_option("--gamma1", dk_gamma1, "fundamental damping");
    dkt->add_option("--gamma2", dk_gamma2, "pump damping");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (sim->parsed()) return cmd_simulate(sim_flags);
        if (exa->parsed()) return cmd_exact(exact_flags);
        if (cmp->parsed()) return cmd_compare(cmp_flags, engines_flag);
        if (spc->parsed()) return cmd_spectrum(spc_in, spc_out, omega_max, omega_step);
        if (fit->parsed()) return cmd_fit(fit_in, fit_out, t_lo, t_hi);
        if (dkt->parsed()) {
            return cmd_dk_time(dk_lambda, dk_g, dk_kappa, dk_gamma1, dk_gamma2, gopt->count() > 0);
        }
    } catch (const config_error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::domain_error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const degenerate_error& e) {
        std::cerr << "degenerate run: " << e.what() << "\n";
        return 3;
    } catch (const resource_error& e) {
        std::cerr << "resource limit: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
