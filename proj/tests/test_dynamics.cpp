#include <catch2/catch_amalgamated.hpp>

#include "iqvi/dynamics.hpp"
#include "support.hpp"

#include <random>

using namespace iqvi;
using Catch::Approx;
using iqvi_test::example1_problem;
using iqvi_test::identity_1d_problem;
using iqvi_test::vec;

namespace {

IqviProblem scalar_singleton_problem(double slope) {
    return IqviProblem(1, OperatorSpec::scalar(slope), MovingSet::singleton(vec({0.0})), 1.0);
}

}  // namespace

TEST_CASE("residual vanishes at the benchmark solution", "[dynamics]") {
    const auto p = example1_problem();
    CHECK(residual(p, vec({0.0, 0.0})).norm() == 0.0);
}

TEST_CASE("residual matches the hand computation at (1,1)", "[dynamics]") {
    const auto p = example1_problem();
    const Vector t = residual(p, vec({1.0, 1.0}));
    CHECK(t[0] == Approx(4.2));
    CHECK(t[1] == Approx(1.4));
}

TEST_CASE("residual of the scalar singleton problem", "[dynamics]") {
    const auto p = scalar_singleton_problem(2.0);
    CHECK(residual(p, vec({0.5}))[0] == Approx(1.0));
}

TEST_CASE("psi values", "[dynamics]") {
    const auto p = scalar_singleton_problem(2.0);  // T(u) = 2u
    const auto fp = FlowParams::fixed_time(1.0, 1.0, 0.5, 2.0);
    // ||T|| = 1 at u = 0.5
    CHECK(psi(p, fp, vec({0.5})) == Approx(2.0));
    // ||T|| = 0 at the solution
    CHECK(psi(p, fp, vec({0.0})) == 0.0);
    // ||T|| = 4 at u = 2: 4^{-0.5} + 4^{1} = 4.5
    CHECK(psi(p, fp, vec({2.0})) == Approx(4.5));
    CHECK_THROWS_AS(psi(p, FlowParams::nominal(1.0), vec({0.5})), std::invalid_argument);
}

TEST_CASE("rhs vanishes at equilibria for every variant", "[dynamics]") {
    const auto p = example1_problem();
    const Vector u_star = vec({0.0, 0.0});
    CHECK(rhs(p, FlowParams::nominal(1.5), u_star).norm() == 0.0);
    CHECK(rhs(p, FlowParams::finite_time(1.0, 3.0), u_star).norm() == 0.0);
    CHECK(rhs(p, FlowParams::fixed_time(1.0, 1.0, 0.5, 2.0), u_star).norm() == 0.0);
}

TEST_CASE("finite-time rhs norm identity on a crafted residual", "[dynamics]") {
    // T = (3, 4) comes from the affine map f(u) = u + (3, 4) with Phi = {(0,0)}
    // evaluated at u = 0: f - alpha u projects to the origin, so T = f.
    const IqviProblem p(2,
                        OperatorSpec::affine(Matrix::Identity(2, 2), vec({3.0, 4.0})),
                        MovingSet::singleton(vec({0.0, 0.0})), 1.0);
    const Vector u = vec({0.0, 0.0});
    CHECK(residual(p, u).norm() == Approx(5.0));

    const auto fp = FlowParams::finite_time(1.0, 3.0);
    const Vector r = rhs(p, fp, u);
    const double scale = std::pow(5.0, -0.5);
    CHECK(r[0] == Approx(-scale * 3.0));
    CHECK(r[1] == Approx(-scale * 4.0));
    CHECK(r.norm() == Approx(std::pow(5.0, 0.5)));  // sigma ||T||^{1/(gamma-1)}
}

TEST_CASE("fixed-time rhs on a scalar residual", "[dynamics]") {
    const auto p = scalar_singleton_problem(2.0);
    const auto fp = FlowParams::fixed_time(1.0, 1.0, 0.5, 2.0);
    CHECK(rhs(p, fp, vec({0.5}))[0] == Approx(-2.0));
}

TEST_CASE("flow parameter validation", "[dynamics]") {
    CHECK_THROWS_AS(FlowParams::nominal(0.0), std::invalid_argument);
    CHECK_THROWS_AS(FlowParams::finite_time(1.0, 2.0), std::invalid_argument);
    CHECK_THROWS_AS(FlowParams::fixed_time(1.0, 1.0, 1.0, 2.0), std::invalid_argument);
    CHECK_THROWS_AS(FlowParams::fixed_time(1.0, 1.0, 0.5, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(FlowParams::fixed_time(0.0, 1.0, 0.5, 2.0), std::invalid_argument);
}

TEST_CASE("equilibrium equivalence under fuzzing", "[dynamics][property]") {
    const auto problems = {example1_problem(), identity_1d_problem()};
    const auto nominal = FlowParams::nominal(2.0);
    const auto finite = FlowParams::finite_time(1.0, 3.0);
    const auto fixed = FlowParams::fixed_time(2.0, 0.5, 0.3, 1.7);

    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> uni(-10.0, 10.0);
    for (const auto& p : problems) {
        for (int s = 0; s < 1000; ++s) {
            Vector u(p.dim);
            for (int i = 0; i < p.dim; ++i) u[i] = uni(rng);
            const bool t_zero = residual(p, u).norm() <= kEpsZero;
            CHECK((rhs(p, nominal, u).norm() <= kEpsZero) == t_zero);
            CHECK((rhs(p, finite, u).norm() <= kEpsZero) == t_zero);
            CHECK((rhs(p, fixed, u).norm() <= kEpsZero) == t_zero);
        }
        if (p.known_solution) {
            const bool t_zero = residual(p, *p.known_solution).norm() <= kEpsZero;
            CHECK(t_zero);
        }
    }
}

TEST_CASE("descent and sandwich inequalities on conditioned problems", "[dynamics][property]") {
    std::mt19937_64 rng(31);
    for (int trial = 0; trial < 5; ++trial) {
        const auto cp = iqvi_test::make_conditioned_affine(rng, 6);
        const Vector u_star = iqvi_test::solve_fixed_point_nominal(cp.problem);
        REQUIRE(residual(cp.problem, u_star).norm() <= 1e-11);

        const double gap = cp.beta - cp.rho;  // mu = 0 for the constant box
        const double upper = cp.l + cp.rho;
        std::normal_distribution<double> gauss(0.0, 2.0);
        for (int s = 0; s < 1000; ++s) {
            Vector u(cp.problem.dim);
            for (int i = 0; i < cp.problem.dim; ++i) u[i] = u_star[i] + gauss(rng);
            const Vector t = residual(cp.problem, u);
            const double dist = (u - u_star).norm();
            CHECK((u - u_star).dot(t) >= gap * dist * dist - 1e-9);
            CHECK(t.norm() <= upper * dist + 1e-9);
            CHECK(t.norm() >= std::abs(gap) * dist - 1e-9);
        }
    }
}

TEST_CASE("residual map is Lipschitz with constant 2L + alpha + mu", "[dynamics][property]") {
    const auto p = example1_problem();
    const double bound = 2.0 * 3.7741 + p.alpha + 1.0;  // true L from the spectral oracle
    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> uni(-5.0, 5.0);
    for (int s = 0; s < 1000; ++s) {
        Vector u(2), v(2);
        for (int i = 0; i < 2; ++i) {
            u[i] = uni(rng);
            v[i] = uni(rng);
        }
        const double lhs = (residual(p, u) - residual(p, v)).norm();
        CHECK(lhs <= bound * (u - v).norm() + 1e-9);
    }
}

TEST_CASE("fixed-time rhs norm identity holds to relative 1e-12", "[dynamics][property]") {
    const auto p = example1_problem();
    const auto fp = FlowParams::fixed_time(20.0, 20.0, 0.95, 1.5);
    const FixedTimeFlow& f = fp.fixed_time_params();
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> uni(-4.0, 4.0);
    for (int s = 0; s < 200; ++s) {
        Vector u(2);
        u[0] = uni(rng);
        u[1] = uni(rng);
        const double tn = residual(p, u).norm();
        if (tn <= kEpsZero) continue;
        const double expected = f.a1 * std::pow(tn, f.r1) + f.a2 * std::pow(tn, f.r2);
        CHECK(rhs(p, fp, u).norm() == Approx(expected).epsilon(1e-12));
    }
}
