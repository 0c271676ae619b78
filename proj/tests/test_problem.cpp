#include <catch2/catch_amalgamated.hpp>

#include "iqvi/problem.hpp"

#include <Eigen/Dense>

using namespace iqvi;
using Catch::Approx;

namespace {

Vector vec(std::initializer_list<double> vals) {
    Vector v(static_cast<Eigen::Index>(vals.size()));
    Eigen::Index i = 0;
    for (double x : vals) v[i++] = x;
    return v;
}

Matrix example1_matrix() {
    Matrix a(2, 2);
    a << 3.2, 2.0, -0.6, 1.0;
    return a;
}

IqviProblem example1() {
    return IqviProblem(2, OperatorSpec::affine(example1_matrix(), {}, 2.2, 2.0),
                       MovingSet::abs_box(), 2.0, vec({0.0, 0.0}));
}

}  // namespace

TEST_CASE("affine evaluation", "[problem]") {
    const auto p = example1();
    const Vector f = eval_f(p, vec({1.0, 1.0}));
    CHECK(f[0] == Approx(5.2));
    CHECK(f[1] == Approx(0.4));
    CHECK(eval_f(p, vec({0.0, 0.0})).norm() == 0.0);
}

TEST_CASE("scalar evaluation", "[problem]") {
    const IqviProblem p(1, OperatorSpec::scalar(2.0), MovingSet::singleton(vec({0.0})), 1.0);
    CHECK(eval_f(p, vec({0.5}))[0] == Approx(1.0));
}

TEST_CASE("eval_f is bitwise deterministic", "[problem]") {
    const auto p = example1();
    const Vector u = vec({0.37, -1.2});
    const Vector a = eval_f(p, u);
    const Vector b = eval_f(p, u);
    CHECK(a[0] == b[0]);
    CHECK(a[1] == b[1]);
}

TEST_CASE("problem construction validates its pieces", "[problem]") {
    CHECK_THROWS_AS(IqviProblem(2, OperatorSpec::scalar(1.0), MovingSet::abs_box(), 1.0),
                    DimensionError);
    CHECK_THROWS_AS(IqviProblem(1, OperatorSpec::scalar(1.0), MovingSet::abs_box(), 0.0),
                    std::invalid_argument);
    CHECK_THROWS_AS(OperatorSpec::scalar(1.0, 1.0, 2.0), std::invalid_argument);  // L < beta
    CHECK_THROWS_AS(OperatorSpec::affine(Matrix::Zero(2, 3), {}), DimensionError);
    CHECK_THROWS_AS(eval_f(example1(), vec({1.0})), DimensionError);
}

TEST_CASE("estimated constants: identity operator", "[problem]") {
    const IqviProblem p(3, OperatorSpec::affine(Matrix::Identity(3, 3), {}),
                        MovingSet::abs_box(), 1.0);
    const auto est = estimate_constants(p, 4000, 1.0, 11);
    CHECK(est.l_hat == Approx(1.0).margin(1e-9));
    CHECK(est.beta_hat == Approx(1.0).margin(1e-9));
}

TEST_CASE("estimated constants: scalar slope", "[problem]") {
    const IqviProblem p(1, OperatorSpec::scalar(2.0), MovingSet::singleton(vec({0.0})), 1.0);
    const auto est = estimate_constants(p, 100, 1.0, 3);
    CHECK(est.l_hat == Approx(2.0));
    CHECK(est.beta_hat == Approx(2.0));
}

TEST_CASE("estimated constants approach the spectral oracle", "[problem][property]") {
    // Independent oracle: ||M||_2 by SVD and the smallest eigenvalue of the
    // symmetric part by a self-adjoint eigensolve.
    const Matrix a = example1_matrix();
    const double l_oracle = a.jacobiSvd().singularValues()(0);
    const Matrix sym = 0.5 * (a + a.transpose());
    const double beta_oracle = Eigen::SelfAdjointEigenSolver<Matrix>(sym).eigenvalues().minCoeff();

    CHECK(l_oracle == Approx(3.774).margin(5e-3));
    CHECK(beta_oracle == Approx(0.796).margin(5e-3));

    const auto p = example1();
    const auto est = estimate_constants(p, 10000, 1.0, 2024);
    CHECK(est.l_hat == Approx(l_oracle).epsilon(0.01));
    CHECK(est.beta_hat == Approx(beta_oracle).epsilon(0.01));
    CHECK(est.l_hat <= l_oracle + 1e-9);
    CHECK(est.beta_hat >= beta_oracle - 1e-9);
}

TEST_CASE("beta_hat never exceeds l_hat", "[problem][property]") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> uni(-2.0, 2.0);
    for (int trial = 0; trial < 20; ++trial) {
        Matrix m(3, 3);
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c) m(r, c) = uni(rng);
        const IqviProblem p(3, OperatorSpec::affine(m, {}), MovingSet::abs_box(), 1.0);
        const auto est = estimate_constants(p, 500, 2.0, 7 + trial);
        CHECK(est.beta_hat <= est.l_hat + 1e-12);
    }
}
