// hilbert.hpp — complex linear algebra over truncated Hilbert spaces:
// state vectors with cached norms, dense/sparse linear operators,
// Fock-space constructors and tensor products.

#pragma once

#include <cmath>
#include <utility>
#include <variant>
#include <vector>

#include "pairtraj/common.hpp"

namespace pairtraj {

// ------------------------------- StateVector --------------------------------

// Complex amplitude vector. The squared norm is computed on first use and
// kept coherent under scaling, so hot loops can query it repeatedly.
class StateVector {
public:
    StateVector() = default;

    explicit StateVector(Index dim) : v_(Vector::Zero(dim)) {
        if (dim < 1) throw dimension_error("StateVector: dim must be >= 1");
    }

    explicit StateVector(Vector amplitudes) : v_(std::move(amplitudes)) {
        if (v_.size() < 1) throw dimension_error("StateVector: dim must be >= 1");
    }

    static StateVector basis(Index dim, Index which) {
        StateVector s(dim);
        if (which < 0 || which >= dim) throw dimension_error("StateVector::basis: index out of range");
        s.v_[which] = 1.0;
        s.norm_sq_ = 1.0;
        return s;
    }

    Index dim() const { return v_.size(); }
    const Vector& vec() const { return v_; }

    // Mutable access drops the cached norm.
    Vector& mutable_vec() {
        norm_sq_ = -1.0;
        return v_;
    }

    double norm_sq() const {
        if (norm_sq_ < 0.0) norm_sq_ = v_.squaredNorm();
        return norm_sq_;
    }

    double norm() const { return std::sqrt(norm_sq()); }

    void scale(Complex c) {
        v_ *= c;
        if (norm_sq_ >= 0.0) norm_sq_ *= std::norm(c);
    }

    StateVector normalized() const {
        const double n = norm();
        if (n <= 0.0) throw numerical_error("StateVector::normalized: zero vector");
        StateVector out(v_ / n);
        out.norm_sq_ = 1.0;
        return out;
    }

    bool finite() const { return all_finite(v_); }

private:
    Vector v_;
    mutable double norm_sq_ = -1.0;  // negative = not cached
};

// <u|v>, conjugate-linear in the first argument.
inline Complex inner(const StateVector& u, const StateVector& v) {
    require_same_dim(u.dim(), v.dim(), "inner");
    return u.vec().dot(v.vec());
}

// ------------------------------ LinearOperator ------------------------------

// Square complex linear map, stored dense or sparse. Values are immutable
// after construction and safe to share across trajectories.
class LinearOperator {
public:
    LinearOperator() = default;

    static LinearOperator dense(Matrix m) {
        check_square(m.rows(), m.cols());
        LinearOperator op;
        op.storage_ = std::move(m);
        return op;
    }

    static LinearOperator sparse(Index dim, const std::vector<Triplet>& entries) {
        if (dim < 1) throw dimension_error("LinearOperator::sparse: dim must be >= 1");
        SparseMatrix m(dim, dim);
        m.setFromTriplets(entries.begin(), entries.end());
        m.makeCompressed();
        LinearOperator op;
        op.storage_ = std::move(m);
        return op;
    }

    // Sparse at or above kDenseStorageLimit, dense below.
    static LinearOperator auto_storage(Index dim, const std::vector<Triplet>& entries) {
        if (dim >= kDenseStorageLimit) return sparse(dim, entries);
        Matrix m = Matrix::Zero(dim, dim);
        for (const auto& t : entries) m(t.row(), t.col()) += t.value();
        return dense(std::move(m));
    }

    static LinearOperator identity(Index dim) {
        std::vector<Triplet> t;
        t.reserve(static_cast<std::size_t>(dim));
        for (Index i = 0; i < dim; ++i) t.emplace_back(i, i, Complex{1.0, 0.0});
        return auto_storage(dim, t);
    }

    static LinearOperator zero(Index dim) { return auto_storage(dim, {}); }

    Index dim() const {
        if (std::holds_alternative<Matrix>(storage_)) return std::get<Matrix>(storage_).rows();
        return std::get<SparseMatrix>(storage_).rows();
    }

    bool is_sparse() const { return std::holds_alternative<SparseMatrix>(storage_); }

    void apply(const Vector& in, Vector& out) const {
        require_same_dim(dim(), in.size(), "LinearOperator::apply");
        if (is_sparse()) {
            out.noalias() = std::get<SparseMatrix>(storage_) * in;
        } else {
            out.noalias() = std::get<Matrix>(storage_) * in;
        }
    }

    Vector apply(const Vector& in) const {
        Vector out(in.size());
        apply(in, out);
        return out;
    }

    StateVector apply(const StateVector& in) const { return StateVector(apply(in.vec())); }

    void adjoint_apply(const Vector& in, Vector& out) const {
        require_same_dim(dim(), in.size(), "LinearOperator::adjoint_apply");
        if (is_sparse()) {
            out.noalias() = std::get<SparseMatrix>(storage_).adjoint() * in;
        } else {
            out.noalias() = std::get<Matrix>(storage_).adjoint() * in;
        }
    }

    Vector adjoint_apply(const Vector& in) const {
        Vector out(in.size());
        adjoint_apply(in, out);
        return out;
    }

    StateVector adjoint_apply(const StateVector& in) const {
        return StateVector(adjoint_apply(in.vec()));
    }

    // M * X for dense X.
    Matrix mul_left(const Matrix& x) const {
        require_same_dim(dim(), x.rows(), "LinearOperator::mul_left");
        if (is_sparse()) return std::get<SparseMatrix>(storage_) * x;
        return std::get<Matrix>(storage_) * x;
    }

    // X * M for dense X.
    Matrix mul_right(const Matrix& x) const {
        require_same_dim(dim(), x.cols(), "LinearOperator::mul_right");
        if (is_sparse()) return x * std::get<SparseMatrix>(storage_);
        return x * std::get<Matrix>(storage_);
    }

    // X * M^dagger for dense X.
    Matrix mul_right_adjoint(const Matrix& x) const {
        require_same_dim(dim(), x.cols(), "LinearOperator::mul_right_adjoint");
        if (is_sparse()) return x * SparseMatrix(std::get<SparseMatrix>(storage_).adjoint());
        return x * std::get<Matrix>(storage_).adjoint();
    }

    Matrix to_dense() const {
        if (is_sparse()) return Matrix(std::get<SparseMatrix>(storage_));
        return std::get<Matrix>(storage_);
    }

    LinearOperator adjoint() const {
        LinearOperator op;
        if (is_sparse()) {
            op.storage_ = SparseMatrix(std::get<SparseMatrix>(storage_).adjoint());
        } else {
            op.storage_ = Matrix(std::get<Matrix>(storage_).adjoint());
        }
        return op;
    }

    LinearOperator scaled(Complex c) const {
        LinearOperator op;
        if (is_sparse()) {
            op.storage_ = SparseMatrix(std::get<SparseMatrix>(storage_) * c);
        } else {
            op.storage_ = Matrix(std::get<Matrix>(storage_) * c);
        }
        return op;
    }

    double frobenius_norm() const {
        if (is_sparse()) return std::get<SparseMatrix>(storage_).norm();
        return std::get<Matrix>(storage_).norm();
    }

    friend LinearOperator operator*(const LinearOperator& a, const LinearOperator& b) {
        require_same_dim(a.dim(), b.dim(), "LinearOperator::operator*");
        LinearOperator op;
        if (a.is_sparse() && b.is_sparse()) {
            SparseMatrix m = std::get<SparseMatrix>(a.storage_) * std::get<SparseMatrix>(b.storage_);
            m.makeCompressed();
            op.storage_ = std::move(m);
        } else {
            op.storage_ = Matrix(a.to_dense() * b.to_dense());
        }
        return op;
    }

    friend LinearOperator operator+(const LinearOperator& a, const LinearOperator& b) {
        require_same_dim(a.dim(), b.dim(), "LinearOperator::operator+");
        LinearOperator op;
        if (a.is_sparse() && b.is_sparse()) {
            SparseMatrix m = std::get<SparseMatrix>(a.storage_) + std::get<SparseMatrix>(b.storage_);
            m.makeCompressed();
            op.storage_ = std::move(m);
        } else {
            op.storage_ = Matrix(a.to_dense() + b.to_dense());
        }
        return op;
    }

private:
    static void check_square(Index r, Index c) {
        if (r != c) throw dimension_error("LinearOperator: matrix must be square");
        if (r < 1) throw dimension_error("LinearOperator: dim must be >= 1");
    }

    std::variant<Matrix, SparseMatrix> storage_ = Matrix::Zero(1, 1);
};

// ----------------------------- Fock-space builders ---------------------------

// Annihilation operator on the truncated basis |0> ... |n_max>:
// <n-1| a |n> = sqrt(n). n_max = 0 yields the 1x1 zero operator.
inline LinearOperator annihilation(Index n_max) {
    if (n_max < 0) throw dimension_error("annihilation: n_max must be >= 0");
    const Index dim = n_max + 1;
    std::vector<Triplet> t;
    t.reserve(static_cast<std::size_t>(n_max));
    for (Index n = 1; n <= n_max; ++n) {
        t.emplace_back(n - 1, n, Complex{std::sqrt(static_cast<double>(n)), 0.0});
    }
    return LinearOperator::auto_storage(dim, t);
}

inline LinearOperator creation(Index n_max) { return annihilation(n_max).adjoint(); }

// |i><j| in a dim-dimensional space.
inline LinearOperator transition(Index dim, Index i, Index j) {
    if (i < 0 || i >= dim || j < 0 || j >= dim) {
        throw dimension_error("transition: index out of range");
    }
    return LinearOperator::auto_storage(dim, {Triplet(i, j, Complex{1.0, 0.0})});
}

// ------------------------------- tensor product ------------------------------

// Kronecker product with the fixed index convention i = i_A * dimB + i_B
// (first factor major). Same convention everywhere, including file formats.
inline LinearOperator tensor(const LinearOperator& a, const LinearOperator& b) {
    const Index da = a.dim();
    const Index db = b.dim();
    if (da > kMaxDimension / db) {
        throw resource_error("tensor: product dimension exceeds configured maximum");
    }
    const Index dim = da * db;

    auto gather = [](const LinearOperator& op) {
        std::vector<Triplet> out;
        const Matrix m = op.to_dense();
        for (Index i = 0; i < m.rows(); ++i)
            for (Index j = 0; j < m.cols(); ++j)
                if (m(i, j) != Complex{0.0, 0.0}) out.emplace_back(i, j, m(i, j));
        return out;
    };

    const auto ta = gather(a);
    const auto tb = gather(b);
    std::vector<Triplet> t;
    t.reserve(ta.size() * tb.size());
    for (const auto& ea : ta) {
        for (const auto& eb : tb) {
            t.emplace_back(ea.row() * db + eb.row(), ea.col() * db + eb.col(),
                           ea.value() * eb.value());
        }
    }
    return LinearOperator::auto_storage(dim, t);
}

// ------------------------------- matrix helpers ------------------------------

// sqrt(tr((X-Y)^dag (X-Y))).
inline double frobenius_distance(const Matrix& x, const Matrix& y) {
    if (x.rows() != y.rows() || x.cols() != y.cols()) {
        throw dimension_error("frobenius_distance: dimension mismatch");
    }
    return (x - y).norm();
}

inline bool is_hermitian(const Matrix& x, double rel_tol = 1e-12) {
    const double scale = std::max(x.norm(), 1e-300);
    return (x - x.adjoint()).norm() <= rel_tol * scale;
}

}  // namespace pairtraj
