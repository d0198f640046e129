// acceptance.cpp — end-to-end acceptance suite. Each numbered criterion runs
// at its stated tolerance and prints exactly one [PASS]/[FAIL] line; the
// long-running DOPO tunneling criterion is opt-in via --long and prints
// [SKIP] otherwise. Exit status is nonzero when any executed criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "pairtraj/pairtraj.hpp"
#include "test_util.hpp"

using namespace pairtraj;

namespace {

int g_failures = 0;

void report(const std::string& id, bool pass, const std::string& detail) {
    std::cout << (pass ? "[PASS] " : "[FAIL] ") << id << ": " << detail << std::endl;
    if (!pass) ++g_failures;
}

void skip(const std::string& id, const std::string& detail) {
    std::cout << "[SKIP] " << id << ": " << detail << std::endl;
}

struct Timer {
    std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
};

std::string fmt(double x) {
    std::ostringstream ss;
    ss.precision(4);
    ss << x;
    return ss.str();
}

EnsembleSpec base_spec(const LindbladModel& m, const LinearOperator& a,
                       const LinearOperator& b, EngineKind engine) {
    EnsembleSpec spec;
    spec.model = &m;
    spec.observable = &a;
    spec.b_op = &b;
    spec.engine = std::move(engine);
    spec.initial = InitialState::fixed(StateVector::basis(2, 1));
    return spec;
}

bool non_increasing(const std::vector<double>& v, double tol) {
    for (std::size_t i = 1; i < v.size(); ++i) {
        if (v[i] > v[i - 1] + tol) return false;
    }
    return true;
}

// ---- criterion 1: deterministic optimized decay -----------------------------

EnsembleResult criterion_1() {
    Timer timer;
    const LindbladModel m = two_level_decay(1.0);
    const LinearOperator b = m.channels().front();
    const LinearOperator a = b.adjoint();
    EnsembleSpec spec = base_spec(m, a, b, EngineKind::optimized());
    spec.trajectories = 1;
    spec.dt = 1e-3;
    spec.sample_stride = 50;  // sample every 0.05 over [0, 5]
    spec.n_samples = 100;
    spec.seed = 1001;
    const EnsembleResult res = run_ensemble(spec);

    double max_err = 0.0;
    for (std::size_t i = 0; i < res.series.size(); ++i) {
        max_err = std::max(max_err,
                           std::abs(res.series.normalized(i) - std::exp(-res.times[i])));
    }
    long jumps = 0;
    for (long j : res.jumps) jumps += j;
    const double wall = timer.seconds();
    const bool pass = max_err <= 1e-5 && jumps == 0 && wall < 1.0;
    report("criterion 1 (deterministic optimized decay)", pass,
           "max |g_norm - e^-t| = " + fmt(max_err) + " (tol 1e-5), jumps = " +
               std::to_string(jumps) + ", runtime " + fmt(wall) + " s (< 1 s)");
    return res;
}

// ---- criterion 2: Gardiner-Zoller inefficiency ------------------------------

EnsembleResult criterion_2() {
    Timer timer;
    const LindbladModel m = two_level_decay(1.0);
    const LinearOperator b = m.channels().front();
    const LinearOperator a = b.adjoint();
    const std::size_t k = 100000;

    EnsembleSpec spec = base_spec(m, a, b, EngineKind::gardiner_zoller());
    spec.trajectories = k;
    spec.dt = 5e-3;
    spec.sample_stride = 100;  // samples at 0.5, 1.0, 1.5
    spec.n_samples = 3;
    spec.seed = 2024;
    spec.workers = 0;
    const EnsembleResult gz = run_ensemble(spec);

    bool survival_ok = true;
    std::string survival_txt;
    for (std::size_t j = 1; j < gz.times.size(); ++j) {
        const double t = gz.times[j];
        std::size_t survived = 0;
        for (double fjt : gz.first_jump_time) {
            if (fjt > t) ++survived;
        }
        const double frac = static_cast<double>(survived) / static_cast<double>(k);
        const double p = std::exp(-2.0 * t);
        const double sig3 = 3.0 * std::sqrt(p * (1.0 - p) / static_cast<double>(k));
        if (std::abs(frac - p) > sig3) survival_ok = false;
        survival_txt += " t=" + fmt(t) + ": " + fmt(frac) + " vs " + fmt(p) + " (3sig " +
                        fmt(sig3) + ");";
    }

    EnsembleSpec opt_spec = spec;
    opt_spec.engine = EngineKind::optimized();
    const EnsembleResult opt = run_ensemble(opt_spec);

    const double ratio = gz.error_bound.back() / opt.error_bound.back();
    const double e3 = std::exp(3.0);
    const double wall = timer.seconds();
    const bool pass = survival_ok && ratio >= e3 && wall < 60.0;
    report("criterion 2 (GZ no-jump survival and bound blow-up)", pass,
           "survival" + survival_txt + " bound ratio at t=1.5 = " + fmt(ratio) +
               " (>= e^3 = " + fmt(e3) + "), runtime " + fmt(wall) + " s (< 60 s)");
    // stash the optimized run for criterion 6
    return opt;
}

// ---- criterion 3: doubled-Hilbert no-jump closed form ------------------------

void criterion_3() {
    Timer timer;
    const LindbladModel m = two_level_decay(1.0);
    const LinearOperator b = m.channels().front();
    const LinearOperator a = b.adjoint();

    // single no-jump trajectory against the closed form at t = 1
    PairState p = init_pair(StateVector::basis(2, 1), b, EngineKind::doubled_hilbert(), 3003);
    p.r = 1e-12;
    p.lnr = std::log(p.r);
    const PairState nj = advance(m, p, 1e-3, 1.0);
    const double denom = std::sqrt(1.0 + std::exp(-2.0));
    Vector phi_ref = Vector::Zero(2), psi_ref = Vector::Zero(2);
    phi_ref[0] = 1.0 / denom;
    psi_ref[1] = std::exp(-1.0) / denom;
    const double vec_err = std::max((nj.phi.vec() - phi_ref).norm(),
                                    (nj.psi.vec() - psi_ref).norm());

    // ensemble mean reproduces e^{-t}
    EnsembleSpec spec = base_spec(m, a, b, EngineKind::doubled_hilbert());
    spec.trajectories = 10000;
    spec.dt = 2e-3;
    spec.sample_stride = 125;  // every 0.25
    spec.n_samples = 8;        // up to t = 2
    spec.seed = 3003;
    const EnsembleResult res = run_ensemble(spec);
    std::size_t inside = 0;
    double worst_pull = 0.0;
    for (std::size_t i = 0; i < res.series.size(); ++i) {
        const double target = std::exp(-res.times[i]);
        const double err = std::abs(res.series.mean[i] - Complex{target, 0.0});
        const double tol = 3.0 * std::max(res.series.stderr_max(i), 1e-12) + 1e-9;
        if (err <= tol) ++inside;
        worst_pull = std::max(worst_pull, err / tol);
    }
    const double wall = timer.seconds();
    const bool pass = vec_err <= 1e-6 && inside == res.series.size();
    report("criterion 3 (doubled-Hilbert closed form and ensemble mean)", pass,
           "no-jump pair error at t=1 = " + fmt(vec_err) + " (tol 1e-6), " +
               std::to_string(inside) + "/" + std::to_string(res.series.size()) +
               " times within 3 stderr (worst pull " + fmt(worst_pull) + "), runtime " +
               fmt(wall) + " s");
}

// ---- criterion 4: one-step unbiasedness for all five engines ----------------

void criterion_4() {
    Timer timer;
    auto rng = testutil::make_rng(40404);
    std::size_t tested = 0, in_window = 0;
    double worst_low = 10.0, worst_high = 0.0;

    auto check = [&](const LindbladModel& m, const PairState& p) {
        const Matrix chi = p.weight * (p.phi.vec() * p.psi.vec().adjoint());
        const Matrix target = liouvillian_apply(m, chi);
        const double r1 = (expected_increment(m, p, 1e-3) - 1e-3 * target).norm();
        const double r2 = (expected_increment(m, p, 5e-4) - 5e-4 * target).norm();
        if (r1 < 1e-13 * std::max(1.0, target.norm())) return;
        const double ratio = r1 / r2;
        ++tested;
        if (ratio >= 3.5 && ratio <= 4.5) ++in_window;
        worst_low = std::min(worst_low, ratio);
        worst_high = std::max(worst_high, ratio);
    };

    for (int rep = 0; rep < 100; ++rep) {
        const Index dim = 2 + static_cast<Index>(rng() % 5);
        const LindbladModel m = testutil::random_model(rng, dim);

        for (int e = 0; e < 4; ++e) {
            EngineKind engine = e == 0   ? EngineKind::optimized()
                                : e == 1 ? EngineKind::gardiner_zoller()
                                : e == 2 ? EngineKind::doubled_hilbert()
                                         : EngineKind::mcd_pair(Complex{0.0, 1.0});
            Vector phi = testutil::random_vector(rng, dim);
            Vector psi = testutil::random_vector(rng, dim);
            if (engine.tag == EngineTag::DoubledHilbert) {
                const double n = std::sqrt(phi.squaredNorm() + psi.squaredNorm());
                phi /= n;
                psi /= n;
            } else if (engine.tag == EngineTag::McdPair) {
                const double n = (psi + engine.nu * phi).norm();
                phi /= n;
                psi /= n;
            } else {
                phi /= phi.norm();
                psi /= psi.norm();
            }
            PairState p;
            p.phi = StateVector(std::move(phi));
            p.psi = StateVector(std::move(psi));
            p.engine = std::move(engine);
            check(m, p);
        }

        // specialized: draw pairs until channel weights are generic
        const EngineKind spec =
            EngineKind::specialized(LinearOperator::dense(testutil::random_matrix(rng, dim)));
        for (int attempt = 0; attempt < 50; ++attempt) {
            Vector phi = testutil::random_unit_vector(rng, dim);
            Vector psi = testutil::random_unit_vector(rng, dim);
            PairState p;
            p.phi = StateVector(std::move(phi));
            p.psi = StateVector(std::move(psi));
            p.engine = spec;
            try {
                if (jump_rate(m, p) < 1e-2) continue;
            } catch (const rate_singularity_error&) {
                continue;
            }
            check(m, p);
            break;
        }
    }
    const double wall = timer.seconds();
    const bool pass = tested >= 450 && in_window == tested && wall < 10.0;
    report("criterion 4 (one-step unbiasedness, five engines)", pass,
           std::to_string(in_window) + "/" + std::to_string(tested) +
               " Richardson ratios in [3.5, 4.5] (range " + fmt(worst_low) + ".." +
               fmt(worst_high) + "), runtime " + fmt(wall) + " s (< 10 s)");
}

// ---- criterion 5: driven atom vs oracle, Mollow peaks ------------------------

EnsembleResult criterion_5() {
    Timer timer;
    const double omega = 8.0, gamma = 1.0;
    const LindbladModel m = driven_two_level(gamma, omega);
    const LinearOperator b = m.channels().front();
    const LinearOperator a = b.adjoint();
    const Matrix rho_ss = steady_state(m);

    std::vector<double> times;
    for (int i = 0; i <= 60; ++i) times.push_back(0.1 * i);
    const CorrelationSeries exact = exact_correlator(m, a, b, rho_ss, times, 2.5e-4);

    EnsembleSpec spec = base_spec(m, a, b, EngineKind::optimized());
    spec.initial = mixture_from_density(rho_ss);
    spec.trajectories = 5000;
    spec.dt = 1e-3;
    spec.sample_stride = 100;  // every 0.1
    spec.n_samples = 60;
    spec.seed = 5005;
    const EnsembleResult res = run_ensemble(spec);

    std::size_t inside = 0, total = 0;
    for (std::size_t i = 1; i < res.series.size(); ++i) {  // 60 nonzero times
        ++total;
        const double err = std::abs(res.series.mean[i] - exact.mean[i]);
        if (err <= 3.0 * std::max(res.series.stderr_max(i), 1e-12)) ++inside;
    }

    // spectrum peaks at 0 and +-Omega on a gamma/4 grid
    std::vector<double> grid;
    for (double w = -12.0; w <= 12.0 + 1e-9; w += 0.25) grid.push_back(w);
    const std::vector<double> s = spectrum(res.series, grid);
    std::vector<double> peaks;
    for (std::size_t i = 1; i + 1 < s.size(); ++i) {
        if (s[i] > s[i - 1] && s[i] > s[i + 1]) peaks.push_back(grid[i]);
    }
    auto has_peak_near = [&](double target) {
        for (double p : peaks) {
            if (std::abs(p - target) <= 0.25 + 1e-9) return true;
        }
        return false;
    };
    const bool peaks_ok = has_peak_near(0.0) && has_peak_near(omega) && has_peak_near(-omega);

    const double wall = timer.seconds();
    const bool pass = inside >= static_cast<std::size_t>(std::ceil(0.95 * total)) && peaks_ok &&
                      wall < 120.0;
    report("criterion 5 (driven atom vs oracle, Mollow peaks)", pass,
           std::to_string(inside) + "/" + std::to_string(total) +
               " times within 3 stderr (need >= 57), peaks at {0, +-8} " +
               (peaks_ok ? "found" : "missing") + ", runtime " + fmt(wall) + " s (< 120 s)");
    return res;
}

// ---- criterion 6: norm / gauge / bound monotonicity --------------------------

void criterion_6(const std::vector<const EnsembleResult*>& optimized_runs) {
    double max_s_inc = 0.0, max_gauge = 0.0;
    bool bounds_ok = true;
    for (const EnsembleResult* res : optimized_runs) {
        max_s_inc = std::max(max_s_inc, res->stats.max_s_step_increase);
        max_gauge = std::max(max_gauge, res->stats.max_gauge_asymmetry);
        if (!non_increasing(res->error_bound, 1e-12 * std::max(1.0, res->error_bound.front()))) {
            bounds_ok = false;
        }
    }
    const bool pass = max_s_inc <= 1e-12 && max_gauge <= 1e-9 && bounds_ok;
    report("criterion 6 (optimized norm/gauge/bound monotonicity)", pass,
           "max per-step s increase = " + fmt(max_s_inc) + " (tol 1e-12), max gauge asymmetry = " +
               fmt(max_gauge) + " (tol 1e-9 rel), error bounds " +
               (bounds_ok ? "non-increasing" : "NOT monotone") + " across " +
               std::to_string(optimized_runs.size()) + " optimized runs");
}

// ---- criterion 7: oracle equivalence on random skew problems -----------------

void criterion_7() {
    Timer timer;
    auto rng = testutil::make_rng(70707);
    const Index dims[10] = {2, 3, 4, 5, 6, 2, 3, 4, 7, 8};
    bool all_ok = true;
    double worst_dyad = 0.0, worst_scalar = 0.0;

    for (int model_i = 0; model_i < 10; ++model_i) {
        const Index dim = dims[model_i];
        const LindbladModel m = testutil::random_model(rng, dim);
        const LinearOperator a = LinearOperator::dense(testutil::random_matrix(rng, dim));
        const LinearOperator b = LinearOperator::dense(testutil::random_matrix(rng, dim));
        const StateVector psi0(testutil::random_unit_vector(rng, dim));

        EnsembleSpec spec;
        spec.model = &m;
        spec.observable = &a;
        spec.b_op = &b;
        spec.engine = EngineKind::optimized();
        spec.initial = InitialState::fixed(psi0);
        spec.trajectories = 20000;
        spec.dt = 2e-3;
        spec.sample_stride = 250;  // every 0.5
        spec.n_samples = 2;        // t = 1
        spec.seed = 7000 + static_cast<std::uint64_t>(model_i);
        spec.record_dyad_at = 1.0;
        const EnsembleResult res = run_ensemble(spec);

        const Matrix chi0 = b.to_dense() * (psi0.vec() * psi0.vec().adjoint());
        const Matrix chi_exact = propagate_exact(m, chi0, {1.0}, 5e-4).matrices[0];

        const double dyad_err = (res.mean_dyad - chi_exact).norm();
        const double dyad_tol = 3.0 * std::sqrt(res.error_bound.back());
        const double scalar_err =
            std::abs(res.series.mean.back() - (a.to_dense() * chi_exact).trace());
        const double scalar_tol = 3.0 * std::max(res.series.stderr_max(2), 1e-12);
        if (dyad_err > dyad_tol || scalar_err > scalar_tol) all_ok = false;
        worst_dyad = std::max(worst_dyad, dyad_err / dyad_tol);
        worst_scalar = std::max(worst_scalar, scalar_err / scalar_tol);
    }
    const double wall = timer.seconds();
    const bool pass = all_ok && wall < 300.0;
    report("criterion 7 (oracle equivalence on random skew problems)", pass,
           "10 models, K = 2e4: worst dyad pull " + fmt(worst_dyad) + ", worst scalar pull " +
               fmt(worst_scalar) + " (both <= 1), runtime " + fmt(wall) + " s (< 300 s)");
}

// ---- criterion 8 (long): DOPO tunneling time ---------------------------------

void criterion_8(bool run_long) {
    if (!run_long) {
        skip("criterion 8 (DOPO desk-scale tunneling)",
             "long-running; rerun with --long (documented in the README)");
        return;
    }
    Timer timer;
    DopoParams p;
    p.kappa = 1.0;
    p.gamma1 = 1.0;
    p.gamma2 = 4.0;
    p.epsilon = 1.5 * p.epsilon_threshold();  // lambda = 1.5
    p.n1_max = 24;
    p.n2_max = 8;
    const LindbladModel m = dopo(p);
    const LinearOperator a =
        tensor(creation(p.n1_max), LinearOperator::identity(p.n2_max + 1));
    const LinearOperator b =
        tensor(annihilation(p.n1_max), LinearOperator::identity(p.n2_max + 1));

    const double t_kd = kinsler_drummond_T(p.pump_ratio(), scaled_coupling_G(p), p.gamma1);
    const double t_max = 150.0;  // ~ 3 T_predicted

    EnsembleSpec spec;
    spec.model = &m;
    spec.observable = &a;
    spec.b_op = &b;
    spec.engine = EngineKind::optimized();
    spec.initial = InitialState::steady_sample(StateVector::basis(m.dim(), 0), 10.0);
    spec.trajectories = 200;
    spec.dt = 2e-3;
    spec.sample_stride = 250;  // every 0.5
    spec.n_samples = static_cast<std::size_t>(t_max / 0.5);
    spec.seed = 8008;
    const EnsembleResult res = run_ensemble(spec);

    const double t_fit = fit_tunneling_time(res.series, 0.3 * t_kd, 2.4 * t_kd);
    const double ratio = t_fit / t_kd;
    const double wall = timer.seconds();
    const bool pass = ratio >= 0.5 && ratio <= 2.0;
    report("criterion 8 (DOPO desk-scale tunneling)", pass,
           "fitted T = " + fmt(t_fit) + " vs closed form " + fmt(t_kd) + " (ratio " + fmt(ratio) +
               ", need within factor 2), jumps/traj = " + fmt(res.stats.mean_jumps) +
               ", runtime " + fmt(wall) + " s");
}

// ---- criterion 9: expectation-targeted engine demonstration ------------------

void criterion_9() {
    Timer timer;
    const double omega = 8.0, gamma = 1.0;
    const LindbladModel m = driven_two_level(gamma, omega);
    const LinearOperator b = m.channels().front();
    const LinearOperator a = b.adjoint();
    const Matrix rho_ss = steady_state(m);
    const CorrelationSeries exact = exact_correlator(m, a, b, rho_ss, {0.0, 1.0, 2.0}, 2.5e-4);

    EnsembleSpec spec = base_spec(m, a, b, EngineKind::specialized(a));
    spec.initial = mixture_from_density(rho_ss);
    spec.trajectories = 2000;
    spec.dt = 1e-3;
    spec.sample_stride = 1000;  // every 1.0
    spec.n_samples = 2;         // t = 2
    spec.seed = 9009;
    const EnsembleResult spec_res = run_ensemble(spec);

    EnsembleSpec opt = spec;
    opt.engine = EngineKind::optimized();
    const EnsembleResult opt_res = run_ensemble(opt);

    const double err_spec = std::abs(spec_res.series.mean.back() - exact.mean.back());
    const double err_opt = std::abs(opt_res.series.mean.back() - exact.mean.back());
    const bool aborted = spec_res.stats.aborted > 0;
    const double wall = timer.seconds();
    const bool pass = aborted || err_spec >= 10.0 * err_opt;
    report("criterion 9 (expectation-targeted engine fails on the driven atom)", pass,
           std::string("rate-singularity aborts = ") + std::to_string(spec_res.stats.aborted) +
               ", |error| at t=2: specialized " + fmt(err_spec) + " vs optimized " +
               fmt(err_opt) + " (need abort or >= 10x), runtime " + fmt(wall) + " s");
}

}  // namespace

int main(int argc, char** argv) {
    bool run_long = false;
    for (int i = 1; i < argc; ++i) {
        if (std::strcmp(argv[i], "--long") == 0) run_long = true;
    }

    std::cout << "acceptance suite (" << (run_long ? "including" : "skipping")
              << " long-running criteria)\n";

    const EnsembleResult r1 = criterion_1();
    const EnsembleResult r2_opt = criterion_2();
    criterion_3();
    criterion_4();
    const EnsembleResult r5 = criterion_5();
    criterion_6({&r1, &r2_opt, &r5});
    criterion_7();
    criterion_8(run_long);
    criterion_9();

    std::cout << (g_failures == 0 ? "all executed criteria passed"
                                  : std::to_string(g_failures) + " criteria FAILED")
              << std::endl;
    return g_failures == 0 ? 0 : 1;
}
