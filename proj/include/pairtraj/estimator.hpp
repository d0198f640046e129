// estimator.hpp — turns trajectory ensembles into correlation functions with
// standard errors, plus error-bound diagnostics, spectra and tunneling fits.

#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <vector>

#include "pairtraj/engine_skew.hpp"

namespace pairtraj {

// ----------------------------- correlation series ----------------------------

struct CorrelationSeries {
    std::vector<double> times;
    std::vector<Complex> mean;       // ensemble mean of w <psi|A|phi>
    std::vector<double> stderr_re;   // standard error of the real part
    std::vector<double> stderr_im;   // standard error of the imaginary part
    std::size_t trajectories = 0;    // K; 0 marks an exact (oracle) series
    bool low_confidence = false;     // K == 1, stderr 0 by convention
    std::optional<Complex> normalization;  // g(0) divisor for normalized output

    std::size_t size() const { return times.size(); }

    double stderr_max(std::size_t i) const { return std::max(stderr_re[i], stderr_im[i]); }

    Complex normalized(std::size_t i) const {
        const Complex g0 = normalization.value_or(Complex{1.0, 0.0});
        if (std::abs(g0) == 0.0) return mean[i];
        return mean[i] / g0;
    }

    void validate() const {
        if (times.size() != mean.size() || times.size() != stderr_re.size() ||
            times.size() != stderr_im.size()) {
            throw std::invalid_argument("CorrelationSeries: array lengths differ");
        }
        for (std::size_t i = 1; i < times.size(); ++i) {
            if (!(times[i] > times[i - 1])) {
                throw std::invalid_argument("CorrelationSeries: times must be strictly increasing");
            }
        }
    }
};

// w <psi|A|phi> for one trajectory.
inline Complex sample_correlator(const PairState& pair, const LinearOperator& a) {
    require_same_dim(pair.phi.dim(), a.dim(), "sample_correlator");
    return pair.weight * pair.psi.vec().dot(a.apply(pair.phi.vec()));
}

// Mean and per-component standard error of the mean, one time per entry of
// samples (layout samples[time][trajectory], equal K everywhere).
inline CorrelationSeries aggregate(const std::vector<double>& times,
                                   const std::vector<std::vector<Complex>>& samples) {
    if (times.size() != samples.size()) {
        throw std::invalid_argument("aggregate: one sample set per time required");
    }
    if (samples.empty() || samples.front().empty()) {
        throw std::invalid_argument("aggregate: empty sample sets");
    }
    const std::size_t k = samples.front().size();
    CorrelationSeries out;
    out.times = times;
    out.trajectories = k;
    out.low_confidence = (k == 1);
    out.mean.resize(times.size());
    out.stderr_re.assign(times.size(), 0.0);
    out.stderr_im.assign(times.size(), 0.0);
    for (std::size_t i = 0; i < times.size(); ++i) {
        if (samples[i].size() != k) {
            throw std::invalid_argument("aggregate: sample counts differ across times");
        }
        bool identical = true;
        Complex sum{0.0, 0.0};
        for (const Complex& x : samples[i]) {
            identical = identical && (x == samples[i].front());
            sum += x;
        }
        if (identical) {
            // deterministic ensembles (every realization coincides) have the
            // sample itself as mean and exactly zero spread
            out.mean[i] = samples[i].front();
            continue;
        }
        const Complex mu = sum / static_cast<double>(k);
        out.mean[i] = mu;
        if (k > 1) {
            double vr = 0.0, vi = 0.0;
            for (const Complex& x : samples[i]) {
                const double dr = x.real() - mu.real();
                const double di = x.imag() - mu.imag();
                vr += dr * dr;
                vi += di * di;
            }
            const double denom = static_cast<double>(k) * static_cast<double>(k - 1);
            out.stderr_re[i] = std::sqrt(vr / denom);
            out.stderr_im[i] = std::sqrt(vi / denom);
        }
    }
    return out;
}

// ------------------------------- error bound ---------------------------------

// Computable upper bound on the expected squared Frobenius error of the
// ensemble estimate: (1/K) * mean of |w|^2 <phi|phi><psi|psi>.
inline double error_bound(const std::vector<PairState>& ensemble) {
    if (ensemble.empty()) throw std::invalid_argument("error_bound: empty ensemble");
    double acc = 0.0;
    for (const auto& p : ensemble) {
        acc += std::norm(p.weight) * p.phi.norm_sq() * p.psi.norm_sq();
    }
    const double k = static_cast<double>(ensemble.size());
    return acc / (k * k);
}

// Same bound from per-trajectory contributions |w|^2 s_phi s_psi.
inline double error_bound_from_contributions(const std::vector<double>& contrib) {
    if (contrib.empty()) throw std::invalid_argument("error_bound: empty ensemble");
    double acc = 0.0;
    for (double c : contrib) acc += c;
    const double k = static_cast<double>(contrib.size());
    return acc / (k * k);
}

// --------------------------------- spectrum ----------------------------------

// One-sided cosine transform S(w) = 2 Re \int_0^T g(t) e^{iwt} dt by
// trapezoidal quadrature on a uniform grid.
inline std::vector<double> spectrum(const CorrelationSeries& series,
                                    const std::vector<double>& omega_grid) {
    series.validate();
    if (series.size() < 2) throw std::invalid_argument("spectrum: need at least two samples");
    const double dt = series.times[1] - series.times[0];
    for (std::size_t i = 1; i < series.size(); ++i) {
        if (std::abs(series.times[i] - series.times[i - 1] - dt) > 1e-9 * dt) {
            throw std::invalid_argument("spectrum: time grid must be uniform");
        }
    }
    std::vector<double> s(omega_grid.size());
    for (std::size_t j = 0; j < omega_grid.size(); ++j) {
        const double w = omega_grid[j];
        Complex acc{0.0, 0.0};
        for (std::size_t i = 0; i < series.size(); ++i) {
            const double weight = (i == 0 || i + 1 == series.size()) ? 0.5 : 1.0;
            acc += weight * series.mean[i] * std::exp(Complex{0.0, w * series.times[i]});
        }
        s[j] = 2.0 * (acc * dt).real();
    }
    return s;
}

// ------------------------------ tunneling time -------------------------------

// Least-squares slope of ln|g(t)| over [t_lo, t_hi]; telegraph-noise decay
// g(t) = exp(-2t/T) gives T = -2/slope.
inline double fit_tunneling_time(const CorrelationSeries& series, double t_lo, double t_hi) {
    series.validate();
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < series.size(); ++i) {
        const double t = series.times[i];
        if (t < t_lo || t > t_hi) continue;
        const double g = std::abs(series.mean[i]);
        if (!(g > 0.0)) {
            throw std::invalid_argument("fit_tunneling_time: non-positive |g| in window");
        }
        const double y = std::log(g);
        sx += t;
        sy += y;
        sxx += t * t;
        sxy += t * y;
        ++n;
    }
    if (n < 4) throw std::invalid_argument("fit_tunneling_time: fewer than 4 points in window");
    const double denom = static_cast<double>(n) * sxx - sx * sx;
    if (denom == 0.0) throw std::invalid_argument("fit_tunneling_time: degenerate window");
    const double slope = (static_cast<double>(n) * sxy - sx * sy) / denom;
    return -2.0 / slope;
}

// Potential-barrier approximation of the DOPO tunneling time:
// T = (pi/gamma1) sqrt((l+s)/(l (l-s)^2)) exp((2/G^2)(l - s - s ln(l/s))),
// s = 1 - G^2/2. Valid above threshold, l > s.
inline double kinsler_drummond_T(double lambda, double G, double gamma1) {
    if (gamma1 <= 0.0) throw std::domain_error("kinsler_drummond_T: gamma1 must be > 0");
    if (G <= 0.0) throw std::domain_error("kinsler_drummond_T: G must be > 0");
    const double sig = barrier_sigma(G);
    if (!(lambda > sig)) {
        throw std::domain_error("kinsler_drummond_T: requires lambda > sigma = 1 - G^2/2");
    }
    const double prefactor = (std::numbers::pi / gamma1) *
                             std::sqrt((lambda + sig) / (lambda * (lambda - sig) * (lambda - sig)));
    const double bracket = lambda - sig - sig * std::log(lambda / sig);
    return prefactor * std::exp(2.0 / (G * G) * bracket);
}

}  // namespace pairtraj
