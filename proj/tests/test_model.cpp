#include <catch2/catch_amalgamated.hpp>

#include "pairtraj/model.hpp"
#include "test_util.hpp"

using namespace pairtraj;
using Catch::Approx;

TEST_CASE("two_level_decay layout") {
    const LindbladModel m = two_level_decay(1.0);
    const Matrix sigma = m.channels().front().to_dense();
    Matrix expect = Matrix::Zero(2, 2);
    expect(0, 1) = 1.0;
    REQUIRE((sigma - expect).norm() == Approx(0.0));
    REQUIRE(m.hamiltonian().to_dense().norm() == Approx(0.0));

    REQUIRE(two_level_decay(4.0).channels().front().to_dense()(0, 1).real() == Approx(2.0));
    REQUIRE_THROWS(two_level_decay(0.0));
    REQUIRE_THROWS(two_level_decay(-1.0));
}

TEST_CASE("driven_two_level hamiltonian") {
    const LindbladModel m = driven_two_level(1.0, 8.0);
    const Matrix h = m.hamiltonian().to_dense();
    REQUIRE(h(0, 1).real() == Approx(4.0));
    REQUIRE(h(1, 0).real() == Approx(4.0));
    REQUIRE(h(0, 0).real() == Approx(0.0));
    REQUIRE(is_hermitian(h));

    // omega = 0 reduces to plain decay
    const LindbladModel m0 = driven_two_level(2.0, 0.0);
    REQUIRE(m0.hamiltonian().to_dense().norm() == Approx(0.0));
    REQUIRE((m0.channels().front().to_dense() - two_level_decay(2.0).channels().front().to_dense())
                .norm() == Approx(0.0));
}

TEST_CASE("dopo parameters and operators") {
    DopoParams p;
    p.kappa = 1.0;
    p.gamma1 = 1.0;
    p.gamma2 = 4.0;
    p.epsilon = 8.0;
    p.n1_max = 6;
    p.n2_max = 4;

    REQUIRE(p.epsilon_threshold() == Approx(4.0));
    REQUIRE(p.pump_ratio() == Approx(2.0));
    // classical steady amplitude alpha1^2 = (2/kappa)(eps - eps_th) = 8
    REQUIRE(2.0 / p.kappa * (p.epsilon - p.epsilon_threshold()) == Approx(8.0));

    const LindbladModel m = dopo(p);
    REQUIRE(m.dim() == (p.n1_max + 1) * (p.n2_max + 1));
    REQUIRE(m.n_channels() == 2);
    REQUIRE(is_hermitian(m.hamiltonian().to_dense(), 1e-12));

    // channel rates absorbed: |sqrt(gamma2) a2 |0,1>| = sqrt(gamma2)
    const StateVector ket01 = StateVector::basis(m.dim(), 1);
    REQUIRE(m.channels()[1].apply(ket01).norm() == Approx(std::sqrt(4.0)));

    DopoParams bad = p;
    bad.n1_max = 4000;
    bad.n2_max = 4000;
    REQUIRE_THROWS_AS(dopo(bad), resource_error);
}

TEST_CASE("scaled coupling constant") {
    DopoParams p;
    p.kappa = 1.0;
    p.gamma1 = 1.0;
    p.gamma2 = 4.0;
    const double g = scaled_coupling_G(p);
    REQUIRE(g == Approx(1.0 / std::sqrt(8.0)).epsilon(1e-12));
    REQUIRE(barrier_sigma(g) == Approx(0.9375).epsilon(1e-12));

    DopoParams sym;
    sym.kappa = 1.0;
    sym.gamma1 = 1.0;
    sym.gamma2 = 1.0;
    REQUIRE(scaled_coupling_G(sym) == Approx(1.0 / std::sqrt(2.0)).epsilon(1e-12));
}

TEST_CASE("liouvillian on the decay model") {
    const LindbladModel m = two_level_decay(1.0);

    Matrix ee = Matrix::Zero(2, 2);
    ee(1, 1) = 1.0;
    Matrix lee = liouvillian_apply(m, ee);
    // 2|g><g| - 2|e><e|
    REQUIRE(lee(0, 0).real() == Approx(2.0));
    REQUIRE(lee(1, 1).real() == Approx(-2.0));
    REQUIRE(std::abs(lee(0, 1)) == Approx(0.0));

    Matrix gg = Matrix::Zero(2, 2);
    gg(0, 0) = 1.0;
    REQUIRE(liouvillian_apply(m, gg).norm() == Approx(0.0));

    // skew coherence decays at rate gamma
    Matrix ge = Matrix::Zero(2, 2);
    ge(0, 1) = 1.0;
    const Matrix lge = liouvillian_apply(m, ge);
    REQUIRE((lge + ge).norm() == Approx(0.0).margin(1e-14));
}

TEST_CASE("liouvillian structural properties") {
    auto rng = testutil::make_rng(5);
    for (int rep = 0; rep < 100; ++rep) {
        const Index dim = 2 + static_cast<Index>(rng() % 7);
        const LindbladModel m = testutil::random_model(rng, dim);
        const Matrix x = testutil::random_matrix(rng, dim);

        // trace preservation
        const Matrix lx = liouvillian_apply(m, x);
        REQUIRE(std::abs(lx.trace()) <= 1e-10 * std::max(1.0, x.norm()));

        // hermiticity preservation
        const Matrix xh = testutil::random_hermitian(rng, dim);
        const Matrix lxh = liouvillian_apply(m, xh);
        REQUIRE((lxh - lxh.adjoint()).norm() <= 1e-12 * std::max(1.0, lxh.norm()));

        // linearity
        const Matrix y = testutil::random_matrix(rng, dim);
        const Complex a = testutil::random_complex(rng);
        const Complex b = testutil::random_complex(rng);
        const Matrix lhs = liouvillian_apply(m, a * x + b * y);
        const Matrix rhs = a * lx + b * liouvillian_apply(m, y);
        REQUIRE((lhs - rhs).norm() <= 1e-11 * std::max(1.0, rhs.norm()));
    }
}

TEST_CASE("model validation") {
    Matrix h(2, 2);
    h << 0.0, Complex{0.0, 1.0}, Complex{0.0, 1.0}, 0.0;  // not Hermitian
    REQUIRE_THROWS(LindbladModel(LinearOperator::dense(h), {}));
    REQUIRE_THROWS_AS(
        LindbladModel(LinearOperator::zero(2), {LinearOperator::identity(3)}),
        dimension_error);
}
