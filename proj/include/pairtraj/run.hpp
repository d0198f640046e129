// run.hpp — batch execution of trajectory ensembles. Trajectories are
// independent tasks pulled from an atomic counter by a small thread pool;
// every per-trajectory quantity is written into an index-addressed slot and
// merged in trajectory order afterwards, so the output is bit-identical for
// any worker count.

#pragma once

#include <atomic>
#include <chrono>
#include <cmath>
#include <limits>
#include <mutex>
#include <thread>
#include <vector>

#include "pairtraj/estimator.hpp"
#include "pairtraj/engine_skew.hpp"
#include "pairtraj/engine_symmetric.hpp"

namespace pairtraj {

// How each trajectory obtains its initial |psi0>.
struct InitialState {
    enum class Kind { Fixed, Mixture, SteadySample };
    Kind kind = Kind::Fixed;
    StateVector psi0;                      // Fixed
    std::vector<StateVector> mix_states;   // Mixture: drawn with mix_probs
    std::vector<double> mix_probs;
    StateVector burn_seed;                 // SteadySample: evolved for burn_time
    double burn_time = 10.0;

    static InitialState fixed(StateVector v) {
        InitialState s;
        s.kind = Kind::Fixed;
        s.psi0 = std::move(v);
        return s;
    }
    static InitialState mixture(std::vector<StateVector> states, std::vector<double> probs) {
        if (states.empty() || states.size() != probs.size()) {
            throw std::invalid_argument("InitialState::mixture: one probability per state");
        }
        InitialState s;
        s.kind = Kind::Mixture;
        s.mix_states = std::move(states);
        s.mix_probs = std::move(probs);
        return s;
    }
    static InitialState steady_sample(StateVector seed_state, double burn_time) {
        InitialState s;
        s.kind = Kind::SteadySample;
        s.burn_seed = std::move(seed_state);
        s.burn_time = burn_time;
        return s;
    }
};

struct EnsembleSpec {
    const LindbladModel* model = nullptr;
    const LinearOperator* observable = nullptr;  // A
    const LinearOperator* b_op = nullptr;        // B
    EngineKind engine;
    InitialState initial;
    std::size_t trajectories = 1;
    double dt = 1e-3;
    std::size_t sample_stride = 10;  // sample every sample_stride * dt
    std::size_t n_samples = 0;       // samples after t = 0
    std::uint64_t seed = 0;
    unsigned workers = 0;            // 0 = hardware concurrency
    double record_dyad_at = -1.0;    // sample time whose mean dyad to record (< 0: off)
};

struct RunStats {
    std::size_t trajectories = 0;
    std::size_t degenerate = 0;  // B|psi0> = 0 draws, counted as zero samples
    std::size_t aborted = 0;     // rate-singularity aborts (specialized engine)
    double mean_jumps = 0.0;
    double wall_seconds = 0.0;
    double max_s_step_increase = 0.0;
    double max_gauge_asymmetry = 0.0;
    double max_norm_sum_drift = 0.0;
};

struct EnsembleResult {
    std::vector<double> times;
    std::vector<std::vector<Complex>> samples;        // [time][trajectory]
    std::vector<std::vector<double>> bound_contrib;   // [time][trajectory] |w|^2 s_phi s_psi
    CorrelationSeries series;
    std::vector<double> error_bound;                  // per time
    Matrix mean_dyad;                                 // if record_dyad_at >= 0
    std::vector<double> first_jump_time;              // per trajectory
    std::vector<long> jumps;                          // per trajectory
    RunStats stats;
};

namespace detail {

inline StateVector prepare_initial(const LindbladModel& m, const InitialState& init,
                                   RngStream& rng) {
    switch (init.kind) {
        case InitialState::Kind::Fixed:
            return init.psi0;
        case InitialState::Kind::Mixture: {
            double total = 0.0;
            for (double p : init.mix_probs) total += p;
            const double u = rng.uniform() * total;
            double acc = 0.0;
            for (std::size_t i = 0; i < init.mix_states.size(); ++i) {
                acc += init.mix_probs[i];
                if (u < acc) return init.mix_states[i];
            }
            return init.mix_states.back();
        }
        case InitialState::Kind::SteadySample: {
            SymTrajectory burn = make_sym_trajectory(init.burn_seed, rng);
            SymWorkspace ws;
            sym_advance(m, burn, 1e-3, init.burn_time, ws);
            rng = burn.rng;
            return burn.psi;
        }
    }
    throw std::logic_error("prepare_initial: unknown kind");
}

}  // namespace detail

inline EnsembleResult run_ensemble(const EnsembleSpec& spec) {
    if (spec.model == nullptr || spec.observable == nullptr || spec.b_op == nullptr) {
        throw std::invalid_argument("run_ensemble: model, observable and B are required");
    }
    if (spec.trajectories < 1) throw std::invalid_argument("run_ensemble: need K >= 1");
    if (spec.dt <= 0.0 || spec.sample_stride < 1) {
        throw std::invalid_argument("run_ensemble: dt > 0 and sample_stride >= 1 required");
    }
    const LindbladModel& m = *spec.model;
    const LinearOperator& a_op = *spec.observable;
    const std::size_t k_total = spec.trajectories;
    const std::size_t n_times = spec.n_samples + 1;
    const double sample_dt = spec.dt * static_cast<double>(spec.sample_stride);

    // A fixed degenerate initial state makes the whole run trivial; report it.
    if (spec.initial.kind == InitialState::Kind::Fixed) {
        const double nb = spec.b_op->apply(spec.initial.psi0.normalized()).norm();
        if (!(nb > 1e-14 * std::max(1.0, spec.b_op->frobenius_norm()))) {
            throw degenerate_error("run_ensemble: B |psi0> = 0, correlator is identically zero");
        }
    }

    EnsembleResult res;
    res.times.resize(n_times);
    for (std::size_t i = 0; i < n_times; ++i) res.times[i] = sample_dt * static_cast<double>(i);
    res.samples.assign(n_times, std::vector<Complex>(k_total, Complex{0.0, 0.0}));
    res.bound_contrib.assign(n_times, std::vector<double>(k_total, 0.0));
    res.first_jump_time.assign(k_total, std::numeric_limits<double>::infinity());
    res.jumps.assign(k_total, 0);

    long dyad_index = -1;
    if (spec.record_dyad_at >= 0.0) {
        for (std::size_t i = 0; i < n_times; ++i) {
            if (std::abs(res.times[i] - spec.record_dyad_at) <= 1e-9 * std::max(1.0, sample_dt)) {
                dyad_index = static_cast<long>(i);
            }
        }
        if (dyad_index < 0) {
            throw std::invalid_argument("run_ensemble: record_dyad_at is not a sample time");
        }
        if (static_cast<double>(m.dim()) * static_cast<double>(m.dim()) *
                static_cast<double>(k_total) > 6.4e7) {
            throw resource_error("run_ensemble: dyad recording too large");
        }
    }
    std::vector<Matrix> dyads;
    if (dyad_index >= 0) dyads.assign(k_total, Matrix());

    std::vector<std::uint8_t> degenerate_flag(k_total, 0), aborted_flag(k_total, 0);
    std::vector<double> max_s_inc(k_total, 0.0), max_gauge(k_total, 0.0), max_norm_drift(k_total, 0.0);

    const auto t_start = std::chrono::steady_clock::now();
    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;

    auto worker = [&]() {
        detail::SkewWorkspace ws;
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= k_total) break;
            {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (first_error) break;
            }
            RngStream rng(spec.seed, i);
            try {
                const StateVector psi0 = detail::prepare_initial(m, spec.initial, rng);
                PairState pair = init_pair(psi0, *spec.b_op, spec.engine, rng);
                for (std::size_t j = 0; j < n_times; ++j) {
                    if (j > 0) {
                        try {
                            detail::pair_advance(m, pair, spec.dt, res.times[j], ws);
                        } catch (const rate_singularity_error&) {
                            aborted_flag[i] = 1;
                            break;  // remaining samples stay zero
                        }
                    }
                    res.samples[j][i] = sample_correlator(pair, a_op);
                    res.bound_contrib[j][i] =
                        std::norm(pair.weight) * pair.s_phi() * pair.s_psi();
                    if (dyad_index == static_cast<long>(j)) {
                        dyads[i] = pair.weight * (pair.phi.vec() * pair.psi.vec().adjoint());
                    }
                }
                res.first_jump_time[i] = pair.first_jump_time;
                res.jumps[i] = pair.jump_count;
                max_s_inc[i] = pair.max_s_step_increase;
                max_gauge[i] = pair.max_gauge_asymmetry;
                max_norm_drift[i] = pair.max_norm_sum_drift;
            } catch (const degenerate_error&) {
                degenerate_flag[i] = 1;  // contributes zero samples, stays in K
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
                break;
            }
            if ((aborted_flag[i] || degenerate_flag[i]) && dyad_index >= 0 &&
                dyads[i].size() == 0) {
                dyads[i] = Matrix::Zero(m.dim(), m.dim());
            }
        }
    };

    unsigned n_workers = spec.workers ? spec.workers : std::thread::hardware_concurrency();
    if (n_workers == 0) n_workers = 1;
    n_workers = static_cast<unsigned>(
        std::min<std::size_t>(n_workers, k_total));
    if (n_workers <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(n_workers);
        for (unsigned w = 0; w < n_workers; ++w) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    if (first_error) std::rethrow_exception(first_error);

    // ordered merge
    res.series = aggregate(res.times, res.samples);
    if (!res.series.mean.empty()) res.series.normalization = res.series.mean.front();
    res.error_bound.resize(n_times);
    for (std::size_t j = 0; j < n_times; ++j) {
        res.error_bound[j] = error_bound_from_contributions(res.bound_contrib[j]);
    }
    if (dyad_index >= 0) {
        Matrix acc = Matrix::Zero(m.dim(), m.dim());
        for (std::size_t i = 0; i < k_total; ++i) {
            if (dyads[i].size() != 0) acc += dyads[i];
        }
        res.mean_dyad = acc / static_cast<double>(k_total);
    }

    RunStats& st = res.stats;
    st.trajectories = k_total;
    double jump_sum = 0.0;
    for (std::size_t i = 0; i < k_total; ++i) {
        st.degenerate += degenerate_flag[i];
        st.aborted += aborted_flag[i];
        jump_sum += static_cast<double>(res.jumps[i]);
        st.max_s_step_increase = std::max(st.max_s_step_increase, max_s_inc[i]);
        st.max_gauge_asymmetry = std::max(st.max_gauge_asymmetry, max_gauge[i]);
        st.max_norm_sum_drift = std::max(st.max_norm_sum_drift, max_norm_drift[i]);
    }
    st.mean_jumps = jump_sum / static_cast<double>(k_total);
    if (st.degenerate == k_total) {
        throw degenerate_error("run_ensemble: every trajectory drew a degenerate initial state");
    }
    st.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    return res;
}

}  // namespace pairtraj
