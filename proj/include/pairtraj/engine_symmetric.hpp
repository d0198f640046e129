// engine_symmetric.hpp — jump unraveling of a proper density operator with a
// single normalized wave function. Between jumps the normalized nonlinear
// drift is integrated with fixed-step RK4 and the state is renormalized each
// step; jump times come from integrating the log survival variable against a
// uniform threshold.

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "pairtraj/model.hpp"
#include "pairtraj/rng.hpp"

namespace pairtraj {

struct SymTrajectory {
    StateVector psi;
    double lnq = 0.0;  // log of the no-jump survival variable, q in (0, 1]
    double r = 0.0;    // pending jump threshold in [0, 1)
    double lnr = -std::numeric_limits<double>::infinity();
    double t = 0.0;
    RngStream rng;
    long jump_count = 0;
    double first_jump_time = std::numeric_limits<double>::infinity();

    double q() const { return std::exp(lnq); }
};

namespace detail {

struct SymWorkspace {
    Vector scratch, kop;
    Vector k1, k2, k3, k4, stage, out;

    void resize(Index d) {
        for (Vector* v : {&scratch, &kop, &k1, &k2, &k3, &k4, &stage, &out}) {
            if (v->size() != d) v->resize(d);
        }
    }
};

// dpsi = (sum_k <sigma_k^dag sigma_k> ) psi - (sum_k sigma_k^dag sigma_k + iH) psi,
// expectation taken against the current (possibly slightly off-norm) psi so the
// drift conserves the norm exactly. Also returns d(ln q)/dt = -2 sum <s^d s>.
inline double sym_drift(const LindbladModel& m, const Vector& psi, Vector& dpsi,
                        SymWorkspace& ws) {
    const double nsq = psi.squaredNorm();
    if (nsq <= 0.0) throw numerical_error("sym_drift: zero state");
    double total = 0.0;
    for (std::size_t k = 0; k < m.n_channels(); ++k) {
        m.channels()[k].apply(psi, ws.scratch);
        total += ws.scratch.squaredNorm();
    }
    total /= nsq;
    m.damping_plus_ih().apply(psi, ws.kop);
    dpsi = total * psi - ws.kop;
    return -2.0 * total;
}

inline double sym_rk4(const LindbladModel& m, const Vector& psi, double h, Vector& out,
                      SymWorkspace& ws) {
    double dlnq = 0.0;
    double a = sym_drift(m, psi, ws.k1, ws);
    dlnq += a;
    ws.stage = psi + (0.5 * h) * ws.k1;
    a = sym_drift(m, ws.stage, ws.k2, ws);
    dlnq += 2.0 * a;
    ws.stage = psi + (0.5 * h) * ws.k2;
    a = sym_drift(m, ws.stage, ws.k3, ws);
    dlnq += 2.0 * a;
    ws.stage = psi + h * ws.k3;
    a = sym_drift(m, ws.stage, ws.k4, ws);
    dlnq += a;
    out = psi + (h / 6.0) * (ws.k1 + 2.0 * ws.k2 + 2.0 * ws.k3 + ws.k4);
    return (h / 6.0) * dlnq;
}

inline void sym_jump(const LindbladModel& m, SymTrajectory& traj, Vector& psi,
                     SymWorkspace& ws) {
    std::vector<double> w(m.n_channels());
    double total = 0.0;
    for (std::size_t k = 0; k < m.n_channels(); ++k) {
        m.channels()[k].apply(psi, ws.scratch);
        w[k] = ws.scratch.squaredNorm();
        total += w[k];
    }
    if (total <= 0.0) {
        throw numerical_error("mcwf jump: all channel weights vanish with a jump pending");
    }
    const double u = traj.rng.uniform() * total;
    double acc = 0.0;
    std::size_t pick = m.n_channels() - 1;
    for (std::size_t k = 0; k < m.n_channels(); ++k) {
        acc += w[k];
        if (u < acc) {
            pick = k;
            break;
        }
    }
    m.channels()[pick].apply(psi, ws.scratch);
    psi = ws.scratch / ws.scratch.norm();
    traj.lnq = 0.0;
    traj.r = traj.rng.uniform();
    traj.lnr = std::log(traj.r);
    ++traj.jump_count;
    if (traj.jump_count == 1) traj.first_jump_time = traj.t;
}

inline void sym_advance(const LindbladModel& m, SymTrajectory& traj, double dt_max,
                        double t_target, SymWorkspace& ws) {
    if (dt_max <= 0.0) throw std::invalid_argument("mcwf advance: dt_max must be > 0");
    if (t_target < traj.t) throw std::invalid_argument("mcwf advance: t_target < t");
    ws.resize(m.dim());
    Vector psi = traj.psi.vec();
    const double snap = 1e-12 * std::max(1.0, std::abs(t_target));
    while (t_target - traj.t > snap) {
        const double h = std::min(dt_max, t_target - traj.t);
        const double dlnq = sym_rk4(m, psi, h, ws.out, ws);
        if (traj.lnq + dlnq < traj.lnr) {
            // locate the crossing by linear interpolation on ln q, redo the
            // partial step, then jump there
            double theta = (traj.lnq - traj.lnr) / (-dlnq);
            theta = std::clamp(theta, 0.0, 1.0);
            if (theta > 1e-12) {
                const double h2 = theta * h;
                const double dlnq2 = sym_rk4(m, psi, h2, ws.out, ws);
                psi = ws.out / ws.out.norm();
                traj.t += h2;
                traj.lnq += dlnq2;
            }
            sym_jump(m, traj, psi, ws);
        } else {
            psi = ws.out / ws.out.norm();
            traj.t += h;
            traj.lnq += dlnq;
        }
    }
    traj.t = t_target;
    traj.psi = StateVector(std::move(psi));
}

}  // namespace detail

inline SymTrajectory make_sym_trajectory(const StateVector& psi0, RngStream rng) {
    SymTrajectory traj;
    traj.psi = psi0.normalized();
    traj.rng = rng;
    traj.r = traj.rng.uniform();
    traj.lnr = std::log(traj.r);
    return traj;
}

inline SymTrajectory make_sym_trajectory(const StateVector& psi0, std::uint64_t seed) {
    return make_sym_trajectory(psi0, RngStream(seed, 0));
}

// One elementary step of size dt (no-jump drift + threshold-triggered jumps).
inline SymTrajectory mcwf_step(const LindbladModel& m, const SymTrajectory& traj, double dt) {
    SymTrajectory out = traj;
    detail::SymWorkspace ws;
    detail::sym_advance(m, out, dt, traj.t + dt, ws);
    return out;
}

// Advance to t_target with internal steps of at most dt_max.
inline SymTrajectory mcwf_advance(const LindbladModel& m, const SymTrajectory& traj,
                                  double dt_max, double t_target) {
    SymTrajectory out = traj;
    detail::SymWorkspace ws;
    detail::sym_advance(m, out, dt_max, t_target, ws);
    return out;
}

// (1/K) sum |psi_j><psi_j|
inline Matrix density_estimate(const std::vector<SymTrajectory>& ensemble) {
    if (ensemble.empty()) throw std::invalid_argument("density_estimate: empty ensemble");
    const Index d = ensemble.front().psi.dim();
    Matrix rho = Matrix::Zero(d, d);
    for (const auto& traj : ensemble) {
        require_same_dim(d, traj.psi.dim(), "density_estimate");
        rho.noalias() += traj.psi.vec() * traj.psi.vec().adjoint();
    }
    return rho / static_cast<double>(ensemble.size());
}

}  // namespace pairtraj
