// config.hpp — run configuration: a single JSON document selecting model,
// engine, run parameters, observable, initial state and output. Presets are
// addressable by name; matrices and vectors may also come from files.

#pragma once

#include <json.hpp>

#include <Eigen/Eigenvalues>

#include <cmath>
#include <fstream>
#include <string>
#include <vector>

#include "pairtraj/io.hpp"
#include "pairtraj/model.hpp"
#include "pairtraj/oracle.hpp"
#include "pairtraj/run.hpp"

namespace pairtraj {

struct RunConfig {
    // model
    std::string model_type;  // two_level_decay | driven_two_level | dopo
    double gamma = 1.0;      // two-level models
    double omega = 0.0;      // driven_two_level
    DopoParams dopo_params;

    // engine
    std::string engine_kind = "optimized";
    Complex nu{1.0, 0.0};  // mcd_pair

    // run
    std::size_t trajectories = 1;
    double dt = 1e-3;
    double t_max = 1.0;
    double sample_every = 1e-2;
    std::uint64_t seed = 0;
    unsigned workers = 0;

    // observable A: preset sigma_dagger | a1_dagger, or a matrix file
    std::string observable_preset = "sigma_dagger";
    std::string observable_file;

    // initial state: psi0 preset ground | excited | vacuum | steady |
    // steady_sample, or a vector file; B preset sigma | a1, or a matrix file
    std::string psi0_preset = "excited";
    std::string psi0_file;
    double burn_time = 10.0;
    std::string b_preset = "sigma";
    std::string b_file;

    // output
    std::string output_path = "series.csv";
    std::string output_format = "csv";  // csv | json
    bool normalized = true;

    // compare
    std::vector<std::string> compare_engines;
    double target_rel_error = 0.05;

    std::size_t sample_stride() const {
        const double ratio = sample_every / dt;
        const double rounded = std::round(ratio);
        if (!(rounded >= 1.0) || std::abs(ratio - rounded) > 1e-9 * std::max(1.0, ratio)) {
            throw config_error("run.sample_every must be a positive multiple of run.dt");
        }
        return static_cast<std::size_t>(rounded);
    }

    std::size_t n_samples() const {
        const double per = sample_every;
        const double ratio = t_max / per;
        const double rounded = std::round(ratio);
        if (std::abs(ratio - rounded) > 1e-9 * std::max(1.0, ratio)) {
            throw config_error("run.t_max must be a multiple of run.sample_every");
        }
        return static_cast<std::size_t>(rounded);
    }

    void validate() const {
        if (trajectories < 1) throw config_error("run.trajectories must be >= 1");
        if (dt <= 0.0) throw config_error("run.dt must be > 0");
        if (t_max < 0.0) throw config_error("run.t_max must be >= 0");
        if (sample_every <= 0.0) throw config_error("run.sample_every must be > 0");
        (void)sample_stride();
        (void)n_samples();
        if (output_format != "csv" && output_format != "json") {
            throw config_error("output.format must be csv or json");
        }
    }
};

namespace detail {

inline const nlohmann::json* find(const nlohmann::json& j, const char* key) {
    auto it = j.find(key);
    return it == j.end() ? nullptr : &*it;
}

}  // namespace detail

inline RunConfig parse_config(const nlohmann::json& j) {
    RunConfig cfg;
    try {
        const auto& model = j.at("model");
        cfg.model_type = model.at("type").get<std::string>();
        if (cfg.model_type == "two_level_decay" || cfg.model_type == "driven_two_level") {
            cfg.gamma = model.value("gamma", 1.0);
            cfg.omega = model.value("omega", 0.0);
        } else if (cfg.model_type == "dopo") {
            DopoParams& p = cfg.dopo_params;
            p.kappa = model.value("kappa", 1.0);
            p.gamma1 = model.value("gamma1", 1.0);
            p.gamma2 = model.value("gamma2", 4.0);
            p.n1_max = model.value("n1_max", Index{48});
            p.n2_max = model.value("n2_max", Index{16});
            if (const auto* lam = detail::find(model, "lambda")) {
                p.epsilon = lam->get<double>() * p.gamma1 * p.gamma2 / p.kappa;
            } else {
                p.epsilon = model.value("epsilon", 8.0);
            }
            p.validate();
        } else {
            throw config_error("unknown model.type: " + cfg.model_type);
        }

        if (const auto* eng = detail::find(j, "engine")) {
            cfg.engine_kind = eng->value("kind", std::string("optimized"));
            if (const auto* nu = detail::find(*eng, "nu")) {
                cfg.nu = Complex(nu->at(0).get<double>(), nu->at(1).get<double>());
            }
        }

        const auto& run = j.at("run");
        cfg.trajectories = run.at("trajectories").get<std::size_t>();
        cfg.dt = run.at("dt").get<double>();
        cfg.t_max = run.at("t_max").get<double>();
        cfg.sample_every = run.at("sample_every").get<double>();
        cfg.seed = run.value("seed", std::uint64_t{0});
        cfg.workers = run.value("workers", 0u);

        if (const auto* obs = detail::find(j, "observable")) {
            const auto& a = obs->at("A");
            if (a.is_string()) {
                cfg.observable_preset = a.get<std::string>();
            } else {
                cfg.observable_preset.clear();
                cfg.observable_file = a.at("file").get<std::string>();
            }
        }
        if (const auto* init = detail::find(j, "initial")) {
            if (const auto* psi0 = detail::find(*init, "psi0")) {
                if (psi0->is_string()) {
                    cfg.psi0_preset = psi0->get<std::string>();
                } else {
                    cfg.psi0_preset.clear();
                    cfg.psi0_file = psi0->at("file").get<std::string>();
                }
            }
            cfg.burn_time = init->value("burn_time", 10.0);
            if (const auto* b = detail::find(*init, "B")) {
                if (b->is_string()) {
                    cfg.b_preset = b->get<std::string>();
                } else {
                    cfg.b_preset.clear();
                    cfg.b_file = b->at("file").get<std::string>();
                }
            }
        }
        if (const auto* outp = detail::find(j, "output")) {
            cfg.output_path = outp->value("path", cfg.output_path);
            cfg.output_format = outp->value("format", cfg.output_format);
            cfg.normalized = outp->value("normalized", true);
        }
        if (const auto* cmp = detail::find(j, "compare")) {
            if (const auto* engines = detail::find(*cmp, "engines")) {
                for (const auto& e : *engines) cfg.compare_engines.push_back(e.get<std::string>());
            }
            cfg.target_rel_error = cmp->value("target_rel_error", 0.05);
        }
    } catch (const nlohmann::json::exception& e) {
        throw config_error(std::string("config parse error: ") + e.what());
    }
    cfg.validate();
    return cfg;
}

inline RunConfig load_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw config_error("cannot open config file: " + path);
    nlohmann::json j;
    try {
        f >> j;
    } catch (const nlohmann::json::exception& e) {
        throw config_error(std::string("config parse error: ") + e.what());
    }
    return parse_config(j);
}

// ------------------------------ preset builders ------------------------------

inline LindbladModel build_model(const RunConfig& cfg) {
    if (cfg.model_type == "two_level_decay") return two_level_decay(cfg.gamma);
    if (cfg.model_type == "driven_two_level") return driven_two_level(cfg.gamma, cfg.omega);
    if (cfg.model_type == "dopo") return dopo(cfg.dopo_params);
    throw config_error("unknown model.type: " + cfg.model_type);
}

inline LinearOperator build_observable(const RunConfig& cfg, const LindbladModel& model) {
    if (!cfg.observable_file.empty()) {
        Matrix m = read_matrix_json(cfg.observable_file);
        require_same_dim(model.dim(), m.rows(), "observable file");
        require_same_dim(model.dim(), m.cols(), "observable file");
        return LinearOperator::dense(std::move(m));
    }
    if (cfg.observable_preset == "sigma_dagger") {
        if (model.dim() != 2) throw config_error("observable sigma_dagger needs a two-level model");
        return model.channels().front().adjoint();
    }
    if (cfg.observable_preset == "a1_dagger") {
        if (cfg.model_type != "dopo") throw config_error("observable a1_dagger needs the dopo model");
        return tensor(creation(cfg.dopo_params.n1_max),
                      LinearOperator::identity(cfg.dopo_params.n2_max + 1));
    }
    throw config_error("unknown observable preset: " + cfg.observable_preset);
}

inline LinearOperator build_b_operator(const RunConfig& cfg, const LindbladModel& model) {
    if (!cfg.b_file.empty()) {
        Matrix m = read_matrix_json(cfg.b_file);
        require_same_dim(model.dim(), m.rows(), "B file");
        require_same_dim(model.dim(), m.cols(), "B file");
        return LinearOperator::dense(std::move(m));
    }
    if (cfg.b_preset == "sigma") {
        if (model.dim() != 2) throw config_error("B preset sigma needs a two-level model");
        return model.channels().front();
    }
    if (cfg.b_preset == "a1") {
        if (cfg.model_type != "dopo") throw config_error("B preset a1 needs the dopo model");
        return tensor(annihilation(cfg.dopo_params.n1_max),
                      LinearOperator::identity(cfg.dopo_params.n2_max + 1));
    }
    throw config_error("unknown B preset: " + cfg.b_preset);
}

// Decompose a density operator into its eigenstate mixture, dropping
// negligible weights.
inline InitialState mixture_from_density(const Matrix& rho) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(rho);
    std::vector<StateVector> states;
    std::vector<double> probs;
    for (Index i = 0; i < rho.rows(); ++i) {
        const double p = es.eigenvalues()[i];
        if (p > 1e-12) {
            states.emplace_back(Vector(es.eigenvectors().col(i)));
            probs.push_back(p);
        }
    }
    if (states.empty()) throw numerical_error("mixture_from_density: no positive weights");
    return InitialState::mixture(std::move(states), std::move(probs));
}

inline InitialState build_initial(const RunConfig& cfg, const LindbladModel& model) {
    if (!cfg.psi0_file.empty()) {
        StateVector v = read_vector_json(cfg.psi0_file);
        require_same_dim(model.dim(), v.dim(), "psi0 file");
        return InitialState::fixed(v.normalized());
    }
    if (cfg.psi0_preset == "ground" || cfg.psi0_preset == "vacuum") {
        return InitialState::fixed(StateVector::basis(model.dim(), 0));
    }
    if (cfg.psi0_preset == "excited") {
        if (model.dim() != 2) throw config_error("psi0 preset excited needs a two-level model");
        return InitialState::fixed(StateVector::basis(2, 1));
    }
    if (cfg.psi0_preset == "steady") {
        if (model.dim() > kOracleMaxDim) {
            throw resource_error("psi0 preset steady needs dim <= 64; use steady_sample");
        }
        return mixture_from_density(steady_state(model));
    }
    if (cfg.psi0_preset == "steady_sample") {
        return InitialState::steady_sample(StateVector::basis(model.dim(), 0), cfg.burn_time);
    }
    throw config_error("unknown psi0 preset: " + cfg.psi0_preset);
}

inline EngineKind build_engine(const std::string& kind, const RunConfig& cfg,
                               const LindbladModel& model) {
    if (kind == "optimized") return EngineKind::optimized();
    if (kind == "gardiner_zoller") return EngineKind::gardiner_zoller();
    if (kind == "doubled_hilbert") return EngineKind::doubled_hilbert();
    if (kind == "mcd_pair") return EngineKind::mcd_pair(cfg.nu);
    if (kind == "specialized") return EngineKind::specialized(build_observable(cfg, model));
    throw config_error("unknown engine kind: " + kind);
}

inline EngineKind build_engine(const RunConfig& cfg, const LindbladModel& model) {
    return build_engine(cfg.engine_kind, cfg, model);
}

// Initial density operator for the exact command.
inline Matrix build_rho0(const RunConfig& cfg, const LindbladModel& model) {
    const InitialState init = build_initial(cfg, model);
    switch (init.kind) {
        case InitialState::Kind::Fixed: {
            const Vector& v = init.psi0.vec();
            return v * v.adjoint();
        }
        case InitialState::Kind::Mixture: {
            Matrix rho = Matrix::Zero(model.dim(), model.dim());
            double total = 0.0;
            for (double p : init.mix_probs) total += p;
            for (std::size_t i = 0; i < init.mix_states.size(); ++i) {
                const Vector& v = init.mix_states[i].vec();
                rho += (init.mix_probs[i] / total) * (v * v.adjoint());
            }
            return rho;
        }
        case InitialState::Kind::SteadySample:
            return steady_state(model);
    }
    throw std::logic_error("build_rho0: unknown kind");
}

}  // namespace pairtraj
