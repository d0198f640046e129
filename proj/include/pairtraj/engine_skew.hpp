// engine_skew.hpp — paired-trajectory jump unraveling of skew operators
// chi(t) = exp(Lt) B rho(0). A trajectory carries two wave functions
// (|phi>, |psi>) plus a scalar weight w; the ensemble mean of w |phi><psi|
// reproduces chi(t), and w <psi|A|phi> samples the correlator tr(A chi).
//
// Five engine kinds share one piecewise-deterministic skeleton (continuous
// drift, survival variable q against a uniform threshold, channel-resolved
// jump maps) and differ only in their scalar drift coefficients, jump
// intensities and jump normalizations:
//
//   Optimized      — jump intensity (2/s) |sigma phi| |sigma psi| per channel
//                    (geometric mean); keeps <phi|phi> = <psi|psi> = s, jumps
//                    preserve s exactly and the continuous drift can only
//                    shrink it, so per-trajectory contributions never grow.
//   GardinerZoller — intensity 2 |sigma psi|^2; psi stays normalized while
//                    the norm of phi is uncontrolled (grows exponentially on
//                    pure-decay problems).
//   DoubledHilbert — standard single-state unraveling of the stacked vector
//                    (phi, psi) in the doubled space; arithmetic-mean
//                    intensity, <phi|phi> + <psi|psi> = 1 is preserved.
//   McdPair        — both vectors jump and drift with coefficients taken
//                    from the linear combination |psi + nu phi|, |nu| = 1.
//   Specialized    — intensity targeted at one observable A,
//                    2 |<psi|s^d A s|phi>| / |<psi|A|phi>| per channel; jumps
//                    preserve |<psi|A|phi>|. Known to be unstable; kept for
//                    demonstration purposes and never used in production runs.

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "pairtraj/model.hpp"
#include "pairtraj/rng.hpp"

namespace pairtraj {

// ------------------------------- engine kinds --------------------------------

enum class EngineTag { Optimized, GardinerZoller, DoubledHilbert, McdPair, Specialized };

struct EngineKind {
    EngineTag tag = EngineTag::Optimized;
    Complex nu{1.0, 0.0};                              // McdPair only, |nu| = 1
    std::shared_ptr<const LinearOperator> observable;  // Specialized only
    double observable_fnorm = 0.0;

    static EngineKind optimized() { return {EngineTag::Optimized, {1.0, 0.0}, nullptr, 0.0}; }
    static EngineKind gardiner_zoller() {
        return {EngineTag::GardinerZoller, {1.0, 0.0}, nullptr, 0.0};
    }
    static EngineKind doubled_hilbert() {
        return {EngineTag::DoubledHilbert, {1.0, 0.0}, nullptr, 0.0};
    }
    static EngineKind mcd_pair(Complex nu) {
        if (std::abs(std::abs(nu) - 1.0) > 1e-12) {
            throw std::invalid_argument("EngineKind::mcd_pair: |nu| must be 1");
        }
        return {EngineTag::McdPair, nu, nullptr, 0.0};
    }
    static EngineKind specialized(LinearOperator a) {
        EngineKind e{EngineTag::Specialized, {1.0, 0.0}, nullptr, 0.0};
        e.observable_fnorm = a.frobenius_norm();
        e.observable = std::make_shared<const LinearOperator>(std::move(a));
        return e;
    }

    const char* name() const {
        switch (tag) {
            case EngineTag::Optimized: return "optimized";
            case EngineTag::GardinerZoller: return "gardiner_zoller";
            case EngineTag::DoubledHilbert: return "doubled_hilbert";
            case EngineTag::McdPair: return "mcd_pair";
            case EngineTag::Specialized: return "specialized";
        }
        return "?";
    }
};

// -------------------------------- pair state ---------------------------------

struct PairState {
    StateVector phi, psi;
    Complex weight{1.0, 0.0};  // contributed dyad is weight * |phi><psi|
    double lnq = 0.0;          // log survival variable, q = exp(lnq) in (0, 1]
    double r = 0.0;            // pending threshold in [0, 1)
    double lnr = -std::numeric_limits<double>::infinity();
    double t = 0.0;
    RngStream rng;
    EngineKind engine;

    long jump_count = 0;
    double first_jump_time = std::numeric_limits<double>::infinity();
    bool aborted = false;  // rate singularity (Specialized only)

    // per-step diagnostics, engine dependent
    double max_s_step_increase = 0.0;   // Optimized: largest one-step increase of s
    double max_gauge_asymmetry = 0.0;   // Optimized: max |s_phi - s_psi| / s before regauging
    double max_norm_sum_drift = 0.0;    // DoubledHilbert: max |s_phi + s_psi - 1| before renorm

    double q() const { return std::exp(lnq); }
    double s_phi() const { return phi.norm_sq(); }
    double s_psi() const { return psi.norm_sq(); }
};

// --------------------------------- workspace ---------------------------------

namespace detail {

struct SkewWorkspace {
    std::vector<Vector> sig_phi, sig_psi;  // sigma_k applied to phi / psi
    Vector kop_phi, kop_psi;
    Vector vcomb, scratch;
    Vector stage_phi, stage_psi, out_phi, out_psi;
    Vector k1p, k1s, k2p, k2s, k3p, k3s, k4p, k4s;
    std::vector<double> intensity;

    void resize(Index d, std::size_t nch) {
        sig_phi.resize(nch);
        sig_psi.resize(nch);
        for (std::size_t k = 0; k < nch; ++k) {
            if (sig_phi[k].size() != d) sig_phi[k].resize(d);
            if (sig_psi[k].size() != d) sig_psi[k].resize(d);
        }
        for (Vector* v : {&kop_phi, &kop_psi, &vcomb, &scratch, &stage_phi, &stage_psi,
                          &out_phi, &out_psi, &k1p, &k1s, &k2p, &k2s, &k3p, &k3s, &k4p,
                          &k4s}) {
            if (v->size() != d) v->resize(d);
        }
        intensity.assign(nch, 0.0);
    }
};

inline constexpr double kSpecializedRateCap = 1e8;

// Per-channel jump intensities (probability per unit time) and the scalar
// coefficients of the continuous branch. Fills ws.intensity.
struct EngineEval {
    double s_phi = 0.0, s_psi = 0.0;
    double c_phi = 0.0, c_psi = 0.0;  // drift is c*v - (sum s^d s + iH) v
    double rate = 0.0;                // total jump intensity
};

inline EngineEval engine_eval(const LindbladModel& m, const EngineKind& eng, const Vector& phi,
                              const Vector& psi, SkewWorkspace& ws) {
    const std::size_t n = m.n_channels();
    EngineEval ev;
    ev.s_phi = phi.squaredNorm();
    ev.s_psi = psi.squaredNorm();

    switch (eng.tag) {
        case EngineTag::Optimized: {
            const double s = std::sqrt(ev.s_phi * ev.s_psi);
            if (s <= 0.0) throw numerical_error("optimized drift: dead pair (s = 0)");
            double sum_pp = 0.0, sum_p2 = 0.0, sum_s2 = 0.0;
            for (std::size_t k = 0; k < n; ++k) {
                m.channels()[k].apply(phi, ws.sig_phi[k]);
                m.channels()[k].apply(psi, ws.sig_psi[k]);
                const double p2 = ws.sig_phi[k].squaredNorm();
                const double s2 = ws.sig_psi[k].squaredNorm();
                const double pp = std::sqrt(p2 * s2);
                ws.intensity[k] = 2.0 * pp / s;
                sum_pp += pp;
                sum_p2 += p2;
                sum_s2 += s2;
            }
            ev.c_phi = (sum_pp + 0.5 * sum_p2 - 0.5 * sum_s2) / s;
            ev.c_psi = (sum_pp - 0.5 * sum_p2 + 0.5 * sum_s2) / s;
            ev.rate = 2.0 * sum_pp / s;
            break;
        }
        case EngineTag::GardinerZoller: {
            double sum_s2 = 0.0;
            for (std::size_t k = 0; k < n; ++k) {
                m.channels()[k].apply(psi, ws.sig_psi[k]);
                const double s2 = ws.sig_psi[k].squaredNorm();
                ws.intensity[k] = 2.0 * s2;
                sum_s2 += s2;
            }
            ev.c_phi = ev.c_psi = sum_s2;
            ev.rate = 2.0 * sum_s2;
            break;
        }
        case EngineTag::DoubledHilbert: {
            double sum = 0.0;
            for (std::size_t k = 0; k < n; ++k) {
                m.channels()[k].apply(phi, ws.sig_phi[k]);
                m.channels()[k].apply(psi, ws.sig_psi[k]);
                const double c = ws.sig_phi[k].squaredNorm() + ws.sig_psi[k].squaredNorm();
                ws.intensity[k] = 2.0 * c;
                sum += c;
            }
            ev.c_phi = ev.c_psi = sum;
            ev.rate = 2.0 * sum;
            break;
        }
        case EngineTag::McdPair: {
            ws.vcomb = psi + eng.nu * phi;
            double sum = 0.0;
            for (std::size_t k = 0; k < n; ++k) {
                m.channels()[k].apply(ws.vcomb, ws.sig_psi[k]);
                const double c = ws.sig_psi[k].squaredNorm();
                ws.intensity[k] = 2.0 * c;
                sum += c;
            }
            ev.c_phi = ev.c_psi = sum;
            ev.rate = 2.0 * sum;
            break;
        }
        case EngineTag::Specialized: {
            if (!eng.observable) {
                throw std::invalid_argument("specialized engine: no target observable set");
            }
            const LinearOperator& a = *eng.observable;
            a.apply(phi, ws.scratch);
            const double g_abs = std::abs(psi.dot(ws.scratch));
            double sum_w = 0.0, sum_gk = 0.0;
            for (std::size_t k = 0; k < n; ++k) {
                m.channels()[k].apply(phi, ws.sig_phi[k]);
                m.channels()[k].apply(psi, ws.sig_psi[k]);
                a.apply(ws.sig_phi[k], ws.vcomb);
                const double gk = std::abs(ws.sig_psi[k].dot(ws.vcomb));
                sum_gk += gk;
                ws.intensity[k] = gk;  // rescaled below
            }
            if (sum_gk > 0.0) {
                if (g_abs <= 0.0 || 2.0 * sum_gk / g_abs > kSpecializedRateCap) {
                    throw rate_singularity_error(
                        "specialized engine: jump intensity diverges (<psi|A|phi> ~ 0)");
                }
                for (std::size_t k = 0; k < n; ++k) ws.intensity[k] *= 2.0 / g_abs;
                sum_w = sum_gk / g_abs;
            } else {
                for (std::size_t k = 0; k < n; ++k) ws.intensity[k] = 0.0;
            }
            ev.c_phi = ev.c_psi = sum_w;
            ev.rate = 2.0 * sum_w;
            break;
        }
    }
    return ev;
}

// Continuous-branch derivatives: d phi, d psi and d(ln q)/dt.
inline double eval_drift(const LindbladModel& m, const EngineKind& eng, const Vector& phi,
                         const Vector& psi, Vector& dphi, Vector& dpsi, SkewWorkspace& ws) {
    const EngineEval ev = engine_eval(m, eng, phi, psi, ws);
    m.damping_plus_ih().apply(phi, ws.kop_phi);
    m.damping_plus_ih().apply(psi, ws.kop_psi);
    dphi = ev.c_phi * phi - ws.kop_phi;
    dpsi = ev.c_psi * psi - ws.kop_psi;
    return -ev.rate;
}

// Images of (phi, psi) under the jump map of channel k (no bookkeeping).
inline void jump_images(const LindbladModel& m, const EngineKind& eng, const Vector& phi,
                        const Vector& psi, std::size_t k, Vector& phi_out, Vector& psi_out) {
    const LinearOperator& sig = m.channels()[k];
    switch (eng.tag) {
        case EngineTag::Optimized: {
            const double s = std::sqrt(phi.squaredNorm() * psi.squaredNorm());
            sig.apply(phi, phi_out);
            sig.apply(psi, psi_out);
            const double cap_phi = phi_out.norm();
            const double cap_psi = psi_out.norm();
            if (cap_phi <= 0.0 || cap_psi <= 0.0) {
                throw numerical_error("optimized jump: selected channel annihilates the pair");
            }
            phi_out *= std::sqrt(s) / cap_phi;
            psi_out *= std::sqrt(s) / cap_psi;
            break;
        }
        case EngineTag::GardinerZoller: {
            sig.apply(psi, psi_out);
            const double cap = psi_out.norm();
            if (cap <= 0.0) throw numerical_error("gardiner-zoller jump: |sigma psi| = 0");
            sig.apply(phi, phi_out);
            phi_out /= cap;
            psi_out /= cap;
            break;
        }
        case EngineTag::DoubledHilbert: {
            sig.apply(phi, phi_out);
            sig.apply(psi, psi_out);
            const double nrm =
                std::sqrt(phi_out.squaredNorm() + psi_out.squaredNorm());
            if (nrm <= 0.0) throw numerical_error("doubled-hilbert jump: zero image");
            phi_out /= nrm;
            psi_out /= nrm;
            break;
        }
        case EngineTag::McdPair: {
            Vector v = psi + eng.nu * phi;
            Vector sv(v.size());
            sig.apply(v, sv);
            const double cap = sv.norm();
            if (cap <= 0.0) throw numerical_error("mcd jump: |sigma (psi + nu phi)| = 0");
            sig.apply(phi, phi_out);
            sig.apply(psi, psi_out);
            phi_out /= cap;
            psi_out /= cap;
            break;
        }
        case EngineTag::Specialized: {
            const LinearOperator& a = *eng.observable;
            const double g_abs = std::abs(psi.dot(a.apply(phi)));
            sig.apply(phi, phi_out);
            sig.apply(psi, psi_out);
            const double gk = std::abs(psi_out.dot(a.apply(phi_out)));
            if (gk <= 0.0) {
                throw numerical_error("specialized jump: selected channel has zero weight");
            }
            const double eta = std::sqrt(g_abs / gk);
            phi_out *= eta;
            psi_out *= eta;
            break;
        }
    }
}

inline double pair_rk4(const LindbladModel& m, const EngineKind& eng, const Vector& phi,
                       const Vector& psi, double h, Vector& phi_out, Vector& psi_out,
                       SkewWorkspace& ws) {
    double dlnq = 0.0;
    double a = eval_drift(m, eng, phi, psi, ws.k1p, ws.k1s, ws);
    dlnq += a;
    ws.stage_phi = phi + (0.5 * h) * ws.k1p;
    ws.stage_psi = psi + (0.5 * h) * ws.k1s;
    a = eval_drift(m, eng, ws.stage_phi, ws.stage_psi, ws.k2p, ws.k2s, ws);
    dlnq += 2.0 * a;
    ws.stage_phi = phi + (0.5 * h) * ws.k2p;
    ws.stage_psi = psi + (0.5 * h) * ws.k2s;
    a = eval_drift(m, eng, ws.stage_phi, ws.stage_psi, ws.k3p, ws.k3s, ws);
    dlnq += 2.0 * a;
    ws.stage_phi = phi + h * ws.k3p;
    ws.stage_psi = psi + h * ws.k3s;
    a = eval_drift(m, eng, ws.stage_phi, ws.stage_psi, ws.k4p, ws.k4s, ws);
    dlnq += a;
    phi_out = phi + (h / 6.0) * (ws.k1p + 2.0 * ws.k2p + 2.0 * ws.k3p + ws.k4p);
    psi_out = psi + (h / 6.0) * (ws.k1s + 2.0 * ws.k2s + 2.0 * ws.k3s + ws.k4s);
    return (h / 6.0) * dlnq;
}

}  // namespace detail

// ----------------------------- pair initialization ---------------------------

// Build the initial pair for chi(0) = |B psi0><psi0|. The normalization
// convention differs per engine and is absorbed into the weight so that
// weight * |phi><psi| equals the initial dyad exactly:
//   - Optimized / GardinerZoller / Specialized: equal norms, weight 1;
//   - DoubledHilbert: summed norm <phi|phi> + <psi|psi> = 1, compensating
//     weight (that sum is what the engine conserves);
//   - McdPair: |psi + nu phi| = 1, compensating weight (the combination the
//     engine's coefficients are built from; off this manifold the no-jump
//     norms blow up in finite time).
inline PairState init_pair(const StateVector& psi0, const LinearOperator& b,
                           const EngineKind& engine, RngStream rng) {
    require_same_dim(psi0.dim(), b.dim(), "init_pair");
    const StateVector psi_n = psi0.normalized();
    StateVector phi0 = b.apply(psi_n);
    const double nb = phi0.norm();
    if (!(nb > 1e-14 * std::max(1.0, b.frobenius_norm()))) {
        throw degenerate_error("init_pair: B |psi0> = 0, chi(0) vanishes identically");
    }

    PairState pair;
    pair.engine = engine;
    pair.rng = rng;
    if (engine.tag == EngineTag::DoubledHilbert) {
        const double scale = 1.0 / std::sqrt(1.0 + nb * nb);
        phi0.scale(scale);
        StateVector psi_s = psi_n;
        psi_s.scale(scale);
        pair.phi = std::move(phi0);
        pair.psi = std::move(psi_s);
        pair.weight = Complex{1.0 + nb * nb, 0.0};
    } else if (engine.tag == EngineTag::McdPair) {
        const double nv = (psi_n.vec() + engine.nu * phi0.vec()).norm();
        if (!(nv > 1e-12 * (1.0 + nb))) {
            throw degenerate_error("init_pair: |psi0 + nu B psi0| = 0, mcd pair undefined");
        }
        const double scale = 1.0 / nv;
        phi0.scale(scale);
        StateVector psi_s = psi_n;
        psi_s.scale(scale);
        pair.phi = std::move(phi0);
        pair.psi = std::move(psi_s);
        pair.weight = Complex{nv * nv, 0.0};
    } else {
        const double c = std::sqrt(1.0 / nb);
        phi0.scale(c);
        StateVector psi_s = psi_n;
        psi_s.scale(1.0 / c);
        pair.phi = std::move(phi0);
        pair.psi = std::move(psi_s);
        pair.weight = Complex{1.0, 0.0};
    }
    pair.r = pair.rng.uniform();
    pair.lnr = std::log(pair.r);
    return pair;
}

inline PairState init_pair(const StateVector& psi0, const LinearOperator& b,
                           const EngineKind& engine, std::uint64_t seed) {
    return init_pair(psi0, b, engine, RngStream(seed, 0));
}

// ------------------------------ elementary ops -------------------------------

struct SkewDerivative {
    StateVector dphi_dt, dpsi_dt;
    double dq_dt = 0.0;
};

inline SkewDerivative drift(const LindbladModel& m, const PairState& pair) {
    require_same_dim(m.dim(), pair.phi.dim(), "drift");
    detail::SkewWorkspace ws;
    ws.resize(m.dim(), m.n_channels());
    Vector dphi(m.dim()), dpsi(m.dim());
    const double dlnq =
        detail::eval_drift(m, pair.engine, pair.phi.vec(), pair.psi.vec(), dphi, dpsi, ws);
    SkewDerivative d;
    d.dphi_dt = StateVector(std::move(dphi));
    d.dpsi_dt = StateVector(std::move(dpsi));
    d.dq_dt = dlnq * pair.q();
    return d;
}

// Total jump intensity dp/dt.
inline double jump_rate(const LindbladModel& m, const PairState& pair) {
    require_same_dim(m.dim(), pair.phi.dim(), "jump_rate");
    detail::SkewWorkspace ws;
    ws.resize(m.dim(), m.n_channels());
    return detail::engine_eval(m, pair.engine, pair.phi.vec(), pair.psi.vec(), ws).rate;
}

// Channel index chosen by the cumulative rule over the engine's statistical
// weights, deterministic given u in [0, 1).
inline std::size_t select_channel(const LindbladModel& m, const PairState& pair, double u) {
    detail::SkewWorkspace ws;
    ws.resize(m.dim(), m.n_channels());
    detail::engine_eval(m, pair.engine, pair.phi.vec(), pair.psi.vec(), ws);
    double total = 0.0;
    for (double w : ws.intensity) total += w;
    if (total <= 0.0) throw numerical_error("select_channel: all channel weights vanish");
    const double target = u * total;
    double acc = 0.0;
    for (std::size_t k = 0; k < ws.intensity.size(); ++k) {
        acc += ws.intensity[k];
        if (target < acc && ws.intensity[k] > 0.0) return k;
    }
    for (std::size_t k = ws.intensity.size(); k-- > 0;) {
        if (ws.intensity[k] > 0.0) return k;
    }
    throw numerical_error("select_channel: all channel weights vanish");
}

// Apply the jump map of channel k: new pair at the same time, q reset to 1,
// fresh threshold drawn.
inline PairState apply_jump(const LindbladModel& m, const PairState& pair, std::size_t k) {
    if (k >= m.n_channels()) throw std::invalid_argument("apply_jump: channel out of range");
    PairState out = pair;
    Vector phi_new(m.dim()), psi_new(m.dim());
    detail::jump_images(m, pair.engine, pair.phi.vec(), pair.psi.vec(), k, phi_new, psi_new);
    out.phi = StateVector(std::move(phi_new));
    out.psi = StateVector(std::move(psi_new));
    out.lnq = 0.0;
    out.r = out.rng.uniform();
    out.lnr = std::log(out.r);
    ++out.jump_count;
    if (out.jump_count == 1) out.first_jump_time = out.t;
    return out;
}

// --------------------------------- advance -----------------------------------

namespace detail {

// Post-step gauge / normalization fixups. These are exact symmetries of the
// contributed dyad: regauging multiplies phi by c and psi by 1/c, and the
// doubled-space renormalization restores the conserved norm sum, so neither
// changes w |phi><psi| beyond rounding.
inline void post_step_fixup(PairState& pair, Vector& phi, Vector& psi, double& s_diag) {
    switch (pair.engine.tag) {
        case EngineTag::Optimized: {
            const double sp = phi.squaredNorm();
            const double ss = psi.squaredNorm();
            const double s = std::sqrt(sp * ss);
            if (s <= 0.0) throw numerical_error("optimized advance: dead pair");
            pair.max_gauge_asymmetry =
                std::max(pair.max_gauge_asymmetry, std::abs(sp - ss) / s);
            const double c = std::pow(ss / sp, 0.25);
            phi *= c;
            psi /= c;
            pair.max_s_step_increase = std::max(pair.max_s_step_increase, s - s_diag);
            s_diag = s;
            break;
        }
        case EngineTag::DoubledHilbert: {
            const double sum = phi.squaredNorm() + psi.squaredNorm();
            if (sum <= 0.0) throw numerical_error("doubled-hilbert advance: dead pair");
            pair.max_norm_sum_drift =
                std::max(pair.max_norm_sum_drift, std::abs(sum - 1.0));
            const double c = 1.0 / std::sqrt(sum);
            phi *= c;
            psi *= c;
            break;
        }
        case EngineTag::McdPair: {
            // |psi + nu phi| = 1 is conserved exactly but is an unstable
            // manifold for the integrator; renormalize every step
            const double nv = (psi + pair.engine.nu * phi).norm();
            if (nv <= 0.0) break;  // dead combination, coefficients all vanish
            pair.max_norm_sum_drift =
                std::max(pair.max_norm_sum_drift, std::abs(nv * nv - 1.0));
            phi /= nv;
            psi /= nv;
            break;
        }
        default:
            break;
    }
}

inline void pair_advance(const LindbladModel& m, PairState& pair, double dt_max,
                         double t_target, SkewWorkspace& ws) {
    if (dt_max <= 0.0) throw std::invalid_argument("advance: dt_max must be > 0");
    if (t_target < pair.t) throw std::invalid_argument("advance: t_target < t");
    ws.resize(m.dim(), m.n_channels());

    Vector phi = pair.phi.vec();
    Vector psi = pair.psi.vec();
    double s_diag = std::sqrt(phi.squaredNorm() * psi.squaredNorm());

    const double snap = 1e-12 * std::max(1.0, std::abs(t_target));
    while (t_target - pair.t > snap) {
        const double h = std::min(dt_max, t_target - pair.t);
        const double dlnq = pair_rk4(m, pair.engine, phi, psi, h, ws.out_phi, ws.out_psi, ws);
        Vector& phi1 = ws.out_phi;
        Vector& psi1 = ws.out_psi;

        if (pair.lnq + dlnq < pair.lnr) {
            double theta = (pair.lnq - pair.lnr) / (-dlnq);
            theta = std::clamp(theta, 0.0, 1.0);
            if (theta > 1e-12) {
                const double h2 = theta * h;
                const double dlnq2 = pair_rk4(m, pair.engine, phi, psi, h2, phi1, psi1, ws);
                phi = phi1;
                psi = psi1;
                post_step_fixup(pair, phi, psi, s_diag);
                pair.t += h2;
                pair.lnq += dlnq2;
            }
            // jump at the located crossing
            engine_eval(m, pair.engine, phi, psi, ws);
            double total = 0.0;
            for (double w : ws.intensity) total += w;
            if (total <= 0.0) {
                throw numerical_error("advance: jump pending but all channel weights vanish");
            }
            const double target = pair.rng.uniform() * total;
            double acc = 0.0;
            std::size_t pick = 0;
            bool found = false;
            for (std::size_t k = 0; k < ws.intensity.size(); ++k) {
                acc += ws.intensity[k];
                if (target < acc && ws.intensity[k] > 0.0) {
                    pick = k;
                    found = true;
                    break;
                }
            }
            if (!found) {
                for (std::size_t k = ws.intensity.size(); k-- > 0;) {
                    if (ws.intensity[k] > 0.0) {
                        pick = k;
                        found = true;
                        break;
                    }
                }
            }
            jump_images(m, pair.engine, phi, psi, pick, ws.k1p, ws.k1s);
            phi = ws.k1p;
            psi = ws.k1s;
            s_diag = std::sqrt(phi.squaredNorm() * psi.squaredNorm());
            pair.lnq = 0.0;
            pair.r = pair.rng.uniform();
            pair.lnr = std::log(pair.r);
            ++pair.jump_count;
            if (pair.jump_count == 1) pair.first_jump_time = pair.t;
        } else {
            phi = phi1;
            psi = psi1;
            post_step_fixup(pair, phi, psi, s_diag);
            pair.t += h;
            pair.lnq += dlnq;
        }
    }
    pair.t = t_target;
    pair.phi = StateVector(std::move(phi));
    pair.psi = StateVector(std::move(psi));
}

}  // namespace detail

// Integrate drift and survival variable to t_target with steps of at most
// dt_max; jumps are located inside steps by linear interpolation on ln q.
inline PairState advance(const LindbladModel& m, const PairState& pair, double dt_max,
                         double t_target) {
    PairState out = pair;
    detail::SkewWorkspace ws;
    detail::pair_advance(m, out, dt_max, t_target, ws);
    return out;
}

// ------------------------------ expected change ------------------------------

// Branch-weighted expected one-step change of the dyad w |phi><psi| over dt:
// sum_k dp_k (jump dyad_k - dyad) + (1 - dp)(Euler drift dyad - dyad).
// Equals L(w |phi><psi|) dt up to O(dt^2); used as the unbiasedness oracle.
inline Matrix expected_increment(const LindbladModel& m, const PairState& pair, double dt) {
    require_same_dim(m.dim(), pair.phi.dim(), "expected_increment");
    detail::SkewWorkspace ws;
    ws.resize(m.dim(), m.n_channels());

    const Vector& phi = pair.phi.vec();
    const Vector& psi = pair.psi.vec();
    Vector dphi(m.dim()), dpsi(m.dim());
    detail::eval_drift(m, pair.engine, phi, psi, dphi, dpsi, ws);
    const std::vector<double> intensity = ws.intensity;

    const Matrix dyad = pair.weight * (phi * psi.adjoint());
    const Vector phi_c = phi + dt * dphi;
    const Vector psi_c = psi + dt * dpsi;

    double dp_total = 0.0;
    Matrix out = Matrix::Zero(m.dim(), m.dim());
    Vector phi_j(m.dim()), psi_j(m.dim());
    for (std::size_t k = 0; k < m.n_channels(); ++k) {
        const double dp_k = intensity[k] * dt;
        if (dp_k <= 0.0) continue;
        dp_total += dp_k;
        detail::jump_images(m, pair.engine, phi, psi, k, phi_j, psi_j);
        out.noalias() += dp_k * (pair.weight * (phi_j * psi_j.adjoint()) - dyad);
    }
    out.noalias() += (1.0 - dp_total) * (pair.weight * (phi_c * psi_c.adjoint()) - dyad);
    return out;
}

// (1/K) sum w_j |phi_j><psi_j| over an ensemble.
inline Matrix mean_dyad(const std::vector<PairState>& ensemble) {
    if (ensemble.empty()) throw std::invalid_argument("mean_dyad: empty ensemble");
    const Index d = ensemble.front().phi.dim();
    Matrix chi = Matrix::Zero(d, d);
    for (const auto& p : ensemble) {
        require_same_dim(d, p.phi.dim(), "mean_dyad");
        chi.noalias() += p.weight * (p.phi.vec() * p.psi.vec().adjoint());
    }
    return chi / static_cast<double>(ensemble.size());
}

}  // namespace pairtraj
