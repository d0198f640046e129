// oracle.hpp — exact propagation of proper and skew operators for small
// dimensions; ground truth for the statistical tests. Uses the same
// fixed-step RK4 as the engines, run at a finer step.

#pragma once

#include <Eigen/Eigenvalues>
#include <Eigen/SparseLU>

#include <cmath>
#include <vector>

#include "pairtraj/engine_symmetric.hpp"
#include "pairtraj/estimator.hpp"
#include "pairtraj/model.hpp"

namespace pairtraj {

inline constexpr Index kOracleMaxDim = 64;

struct ExactSeries {
    std::vector<double> times;
    std::vector<Matrix> matrices;
};

// Integrate dX/dt = L X from X(0) = x0 and snapshot at the requested times
// (sorted, non-negative). Step size is at most dt.
inline ExactSeries propagate_exact(const LindbladModel& m, const Matrix& x0,
                                   const std::vector<double>& times, double dt) {
    if (m.dim() > kOracleMaxDim) {
        throw resource_error("propagate_exact: dimension exceeds exact-path limit");
    }
    require_same_dim(m.dim(), x0.rows(), "propagate_exact");
    require_same_dim(m.dim(), x0.cols(), "propagate_exact");
    if (dt <= 0.0) throw std::invalid_argument("propagate_exact: dt must be > 0");
    for (std::size_t i = 0; i < times.size(); ++i) {
        if (times[i] < 0.0 || (i > 0 && times[i] < times[i - 1])) {
            throw std::invalid_argument("propagate_exact: times must be sorted and non-negative");
        }
    }

    ExactSeries out;
    out.times = times;
    Matrix x = x0;
    double t = 0.0;
    for (double target : times) {
        const double span = target - t;
        if (span > 1e-14 * std::max(1.0, target)) {
            const auto steps = static_cast<long>(std::ceil(span / dt - 1e-9));
            const double h = span / static_cast<double>(std::max(steps, 1L));
            for (long i = 0; i < std::max(steps, 1L); ++i) {
                const Matrix k1 = liouvillian_apply(m, x);
                const Matrix k2 = liouvillian_apply(m, x + (0.5 * h) * k1);
                const Matrix k3 = liouvillian_apply(m, x + (0.5 * h) * k2);
                const Matrix k4 = liouvillian_apply(m, x + h * k3);
                x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            }
            t = target;
        }
        out.matrices.push_back(x);
    }
    return out;
}

// tr(A e^{Lt} B rho0) on the requested time grid; stderr zero, K = 0 marks
// the series as exact. The normalization divisor is tr(A B rho0).
inline CorrelationSeries exact_correlator(const LindbladModel& m, const LinearOperator& a,
                                          const LinearOperator& b, const Matrix& rho0,
                                          const std::vector<double>& times, double dt) {
    const Matrix x0 = b.mul_left(rho0);
    const ExactSeries series = propagate_exact(m, x0, times, dt);
    CorrelationSeries out;
    out.times = times;
    out.trajectories = 0;
    out.stderr_re.assign(times.size(), 0.0);
    out.stderr_im.assign(times.size(), 0.0);
    out.mean.reserve(times.size());
    for (const Matrix& x : series.matrices) {
        out.mean.push_back(a.mul_left(x).trace());
    }
    out.normalization = a.mul_left(x0).trace();
    return out;
}

// ------------------------------- steady state --------------------------------

struct SteadyStateOptions {
    // large-dimension path (ensemble estimate)
    std::size_t trajectories = 64;
    double dt = 1e-3;
    double check_interval = 1.0;
    double drift_tol = 1e-4;   // convergence: |d<M>/dt| below this
    double max_time = 500.0;
    std::uint64_t seed = 20210907ULL;
};

namespace detail {

inline void kron_accumulate(std::vector<Triplet>& out, const Matrix& a, const Matrix& n,
                            Index d, Complex scale) {
    // superop entry [(i + d j), (k + d l)] += scale * a(j, l) * n(i, k)
    // realizing vec(N X A^T); column-major vec(X)[i + d j] = X(i, j)
    for (Index j = 0; j < d; ++j) {
        for (Index l = 0; l < d; ++l) {
            const Complex av = a(j, l);
            if (av == Complex{0.0, 0.0}) continue;
            for (Index i = 0; i < d; ++i) {
                for (Index k = 0; k < d; ++k) {
                    const Complex nv = n(i, k);
                    if (nv == Complex{0.0, 0.0}) continue;
                    out.emplace_back(i + d * j, k + d * l, scale * av * nv);
                }
            }
        }
    }
}

inline Matrix steady_state_exact(const LindbladModel& m) {
    const Index d = m.dim();
    const Index n2 = d * d;
    const Matrix id = Matrix::Identity(d, d);

    std::vector<Triplet> trip;
    for (std::size_t k = 0; k < m.n_channels(); ++k) {
        const Matrix s = m.channels()[k].to_dense();
        const Matrix sds = m.sigma_dag_sigma(k).to_dense();
        kron_accumulate(trip, s.conjugate(), s, d, Complex{2.0, 0.0});  // 2 s X s^dag
        kron_accumulate(trip, id, sds, d, Complex{-1.0, 0.0});          // - s^d s X
        kron_accumulate(trip, sds.transpose(), id, d, Complex{-1.0, 0.0});  // - X s^d s
    }
    const Matrix h = m.hamiltonian().to_dense();
    kron_accumulate(trip, id, h, d, -kI);           // -i H X
    kron_accumulate(trip, h.transpose(), id, d, kI);  // +i X H

    // Replace the equation for element (0,0) by the trace condition.
    std::vector<Triplet> pruned;
    pruned.reserve(trip.size() + static_cast<std::size_t>(d));
    for (const auto& t : trip) {
        if (t.row() != 0) pruned.push_back(t);
    }
    for (Index i = 0; i < d; ++i) pruned.emplace_back(0, i + d * i, Complex{1.0, 0.0});

    SparseMatrix super(n2, n2);
    super.setFromTriplets(pruned.begin(), pruned.end());
    super.makeCompressed();

    Vector rhs = Vector::Zero(n2);
    rhs[0] = 1.0;

    Eigen::SparseLU<SparseMatrix> solver;
    solver.compute(super);
    if (solver.info() != Eigen::Success) {
        throw numerical_error("steady_state: sparse factorization failed");
    }
    const Vector sol = solver.solve(rhs);
    if (solver.info() != Eigen::Success) {
        throw numerical_error("steady_state: sparse solve failed");
    }

    Matrix rho(d, d);
    for (Index j = 0; j < d; ++j) {
        for (Index i = 0; i < d; ++i) rho(i, j) = sol[i + d * j];
    }
    rho = 0.5 * (rho + rho.adjoint()).eval();
    rho /= rho.trace().real();

    const double residual = liouvillian_apply(m, rho).norm();
    if (residual > 1e-8 * std::max(1.0, rho.norm())) {
        throw numerical_error("steady_state: residual exceeds tolerance");
    }
    Eigen::SelfAdjointEigenSolver<Matrix> es(rho);
    if (es.eigenvalues().minCoeff() < -1e-10) {
        throw numerical_error("steady_state: negative eigenvalue beyond tolerance");
    }
    return rho;
}

// Ensemble estimate for dimensions beyond the exact path: evolve trajectories
// from the seed state until the monitored damping flux stops drifting.
inline Matrix steady_state_sampled(const LindbladModel& m, const SteadyStateOptions& opt) {
    const Index d = m.dim();
    std::vector<SymTrajectory> ens;
    ens.reserve(opt.trajectories);
    for (std::size_t i = 0; i < opt.trajectories; ++i) {
        ens.push_back(make_sym_trajectory(StateVector::basis(d, 0), RngStream(opt.seed, i)));
    }
    SymWorkspace ws;
    auto flux = [&](void) {
        double acc = 0.0;
        Vector scratch(d);
        for (const auto& traj : ens) {
            for (std::size_t k = 0; k < m.n_channels(); ++k) {
                m.channels()[k].apply(traj.psi.vec(), scratch);
                acc += scratch.squaredNorm();
            }
        }
        return acc / static_cast<double>(ens.size());
    };

    double t = 0.0;
    double prev = flux();
    while (t < opt.max_time) {
        for (auto& traj : ens) sym_advance(m, traj, opt.dt, t + opt.check_interval, ws);
        t += opt.check_interval;
        const double cur = flux();
        if (std::abs(cur - prev) / opt.check_interval < opt.drift_tol) {
            return density_estimate(ens);
        }
        prev = cur;
    }
    throw numerical_error("steady_state: ensemble estimate did not converge within horizon");
}

}  // namespace detail

// Stationary density operator: exact null-space solve up to kOracleMaxDim,
// long-time ensemble estimate beyond.
inline Matrix steady_state(const LindbladModel& m, const SteadyStateOptions& opt = {}) {
    if (m.dim() <= kOracleMaxDim) return detail::steady_state_exact(m);
    return detail::steady_state_sampled(m, opt);
}

}  // namespace pairtraj
