// model.hpp — Lindblad models (H, {sigma_k}) and the built-in physical
// systems: two-level decay, driven two-level atom, and the two-mode
// degenerate optical parametric oscillator.
//
// Convention: the master equation reads
//   d rho / dt = sum_k ( 2 sigma_k rho sigma_k^dag
//                        - sigma_k^dag sigma_k rho - rho sigma_k^dag sigma_k )
//                - i [H, rho],
// with the channel rates absorbed into the operators (sigma = sqrt(gamma) |g><e|),
// so no extra prefactors appear anywhere downstream.

#pragma once

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "pairtraj/hilbert.hpp"

namespace pairtraj {

class LindbladModel {
public:
    LindbladModel(LinearOperator hamiltonian, std::vector<LinearOperator> channels,
                  std::vector<std::string> labels = {})
        : hamiltonian_(std::move(hamiltonian)),
          channels_(std::move(channels)),
          labels_(std::move(labels)) {
        const Index d = hamiltonian_.dim();
        if (!is_hermitian(hamiltonian_.to_dense(), 1e-12)) {
            throw std::invalid_argument("LindbladModel: Hamiltonian is not Hermitian");
        }
        for (const auto& c : channels_) require_same_dim(d, c.dim(), "LindbladModel");
        if (labels_.empty()) {
            for (std::size_t k = 0; k < channels_.size(); ++k) {
                labels_.push_back("channel_" + std::to_string(k));
            }
        }
        if (labels_.size() != channels_.size()) {
            throw std::invalid_argument("LindbladModel: one label per channel required");
        }

        // Precompute sigma^dag sigma per channel and the combined
        // non-Hermitian drift generator sum_k sigma_k^dag sigma_k + iH,
        // which every engine applies once per derivative evaluation.
        LinearOperator acc = hamiltonian_.scaled(kI);
        for (const auto& c : channels_) {
            sigma_dag_sigma_.push_back(c.adjoint() * c);
            acc = acc + sigma_dag_sigma_.back();
        }
        damping_plus_ih_ = std::move(acc);
    }

    Index dim() const { return hamiltonian_.dim(); }
    const LinearOperator& hamiltonian() const { return hamiltonian_; }
    const std::vector<LinearOperator>& channels() const { return channels_; }
    const std::vector<std::string>& labels() const { return labels_; }
    std::size_t n_channels() const { return channels_.size(); }

    const LinearOperator& sigma_dag_sigma(std::size_t k) const { return sigma_dag_sigma_[k]; }

    // sum_k sigma_k^dag sigma_k + iH
    const LinearOperator& damping_plus_ih() const { return damping_plus_ih_; }

private:
    LinearOperator hamiltonian_;
    std::vector<LinearOperator> channels_;
    std::vector<std::string> labels_;
    std::vector<LinearOperator> sigma_dag_sigma_;
    LinearOperator damping_plus_ih_;
};

// ------------------------------ built-in models ------------------------------

// Spontaneous emission of a two-level atom, basis (|g>, |e>):
// H = 0, single channel sigma = sqrt(gamma) |g><e|.
inline LindbladModel two_level_decay(double gamma) {
    if (gamma <= 0.0) throw std::invalid_argument("two_level_decay: gamma must be > 0");
    LinearOperator sigma = transition(2, 0, 1).scaled(std::sqrt(gamma));
    return LindbladModel(LinearOperator::zero(2), {std::move(sigma)}, {"decay"});
}

// Two-level atom with resonant classical driving:
// H = (Omega/2)(|e><g| + |g><e|), same decay channel as two_level_decay.
inline LindbladModel driven_two_level(double gamma, double omega) {
    if (gamma <= 0.0) throw std::invalid_argument("driven_two_level: gamma must be > 0");
    Matrix h = Matrix::Zero(2, 2);
    h(0, 1) = 0.5 * omega;
    h(1, 0) = 0.5 * omega;
    LinearOperator sigma = transition(2, 0, 1).scaled(std::sqrt(gamma));
    return LindbladModel(LinearOperator::dense(std::move(h)), {std::move(sigma)}, {"decay"});
}

// Parameters of the degenerate optical parametric oscillator: fundamental
// mode a1 and second-harmonic pump mode a2 coupled in a chi^(2) medium.
struct DopoParams {
    double kappa = 1.0;    // mode coupling
    double epsilon = 8.0;  // coherent pump amplitude
    double gamma1 = 1.0;   // fundamental damping rate
    double gamma2 = 4.0;   // pump damping rate
    Index n1_max = 48;     // Fock truncation of the fundamental
    Index n2_max = 16;     // Fock truncation of the pump

    void validate() const {
        if (kappa <= 0.0 || gamma1 <= 0.0 || gamma2 <= 0.0) {
            throw std::invalid_argument("DopoParams: rates must be > 0");
        }
        if (epsilon < 0.0) throw std::invalid_argument("DopoParams: epsilon must be >= 0");
        if (n1_max < 1 || n2_max < 1) {
            throw std::invalid_argument("DopoParams: truncations must be >= 1");
        }
    }

    double epsilon_threshold() const { return gamma1 * gamma2 / kappa; }
    double pump_ratio() const { return epsilon / epsilon_threshold(); }  // lambda
};

// Scaled coupling constant G = kappa / sqrt(2 gamma1 gamma2).
inline double scaled_coupling_G(const DopoParams& p) {
    p.validate();
    return p.kappa / std::sqrt(2.0 * p.gamma1 * p.gamma2);
}

// sigma = 1 - G^2/2, the barrier parameter entering the tunneling-time formula.
inline double barrier_sigma(double G) { return 1.0 - 0.5 * G * G; }

// Full two-mode DOPO model. Index convention: mode-1-major, i = n1*(n2_max+1)+n2.
// H = i (kappa/2)(a1^dag^2 a2 - a1^2 a2^dag) + i (eps a2^dag - eps a2),
// channels { sqrt(gamma1) a1, sqrt(gamma2) a2 }.
inline LindbladModel dopo(const DopoParams& p) {
    p.validate();
    const Index d1 = p.n1_max + 1;
    const Index d2 = p.n2_max + 1;
    if (d1 > kMaxDimension / d2) {
        throw resource_error("dopo: truncation product exceeds configured maximum dimension");
    }

    const LinearOperator a1 = tensor(annihilation(p.n1_max), LinearOperator::identity(d2));
    const LinearOperator a2 = tensor(LinearOperator::identity(d1), annihilation(p.n2_max));
    const LinearOperator a1d = a1.adjoint();
    const LinearOperator a2d = a2.adjoint();

    // i(kappa/2)(a1^dag^2 a2 - a1^2 a2^dag): anti-Hermitian combination times i.
    LinearOperator h_int = ((a1d * a1d) * a2).scaled(kI * (0.5 * p.kappa)) +
                           ((a1 * a1) * a2d).scaled(-kI * (0.5 * p.kappa));
    LinearOperator h_pump = a2d.scaled(kI * p.epsilon) + a2.scaled(-kI * p.epsilon);

    return LindbladModel(h_int + h_pump,
                         {a1.scaled(std::sqrt(p.gamma1)), a2.scaled(std::sqrt(p.gamma2))},
                         {"loss_1", "loss_2"});
}

// ----------------------------- Liouvillian action ----------------------------

// L X = sum_k (2 sigma_k X sigma_k^dag - sigma_k^dag sigma_k X - X sigma_k^dag sigma_k)
//       - i [H, X].  X need not be Hermitian or positive.
inline Matrix liouvillian_apply(const LindbladModel& m, const Matrix& x) {
    require_same_dim(m.dim(), x.rows(), "liouvillian_apply");
    require_same_dim(m.dim(), x.cols(), "liouvillian_apply");

    Matrix out = Matrix::Zero(x.rows(), x.cols());
    for (std::size_t k = 0; k < m.n_channels(); ++k) {
        const LinearOperator& s = m.channels()[k];
        const LinearOperator& n = m.sigma_dag_sigma(k);
        out += 2.0 * s.mul_right_adjoint(s.mul_left(x));
        out -= n.mul_left(x);
        out -= n.mul_right(x);
    }
    out -= kI * (m.hamiltonian().mul_left(x) - m.hamiltonian().mul_right(x));
    return out;
}

}  // namespace pairtraj
