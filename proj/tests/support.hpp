#pragma once

// Shared helpers for the unit and acceptance suites: a generator for random
// affine problems whose true operator constants (via eigen-oracles) satisfy
// the stability condition rho + mu < beta, and the nominal-Euler fixed-point
// oracle used to pin their solutions.

#include "iqvi/dynamics.hpp"
#include "iqvi/problem.hpp"

#include <Eigen/Dense>

#include <random>

namespace iqvi_test {

using iqvi::IqviProblem;
using iqvi::Matrix;
using iqvi::MovingSet;
using iqvi::OperatorSpec;
using iqvi::Vector;

inline Vector vec(std::initializer_list<double> vals) {
    Vector v(static_cast<Eigen::Index>(vals.size()));
    Eigen::Index i = 0;
    for (double x : vals) v[i++] = x;
    return v;
}

inline Matrix example1_matrix() {
    Matrix a(2, 2);
    a << 3.2, 2.0, -0.6, 1.0;
    return a;
}

/// The 2-D benchmark problem: f(u) = A u, Phi(u) = [-|u1|,|u1|] x [-|u2|,|u2|],
/// alpha = 2, declared constants L = 2.2, beta = 2, solution at the origin.
inline IqviProblem example1_problem() {
    return IqviProblem(2, OperatorSpec::affine(example1_matrix(), {}, 2.2, 2.0),
                       MovingSet::abs_box(), 2.0, vec({0.0, 0.0}));
}

/// 1-D problem with T(u) = u: f = id, Phi = {0}, alpha = 1; L = beta = 1, mu = 0.
inline IqviProblem identity_1d_problem() {
    return IqviProblem(1, OperatorSpec::scalar(1.0, 1.0, 1.0), MovingSet::singleton(vec({0.0})),
                       1.0, vec({0.0}));
}

struct ConditionedAffine {
    IqviProblem problem;
    double l = 0.0;     // true spectral norm of the matrix
    double beta = 0.0;  // true smallest eigenvalue of the symmetric part
    double rho = 0.0;
};

/// Random affine operator with a constant box set whose true constants
/// satisfy rho + mu < beta (mu = 0). Built by resampling until the spectrum
/// allows an alpha with rho < beta, then declaring the oracle constants.
inline ConditionedAffine make_conditioned_affine(std::mt19937_64& rng, int max_dim = 10) {
    std::uniform_int_distribution<int> dim_dist(1, max_dim);
    std::uniform_real_distribution<double> eig(1.0, 1.15);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> box_lo(-2.0, -0.5);
    std::uniform_real_distribution<double> box_hi(0.5, 2.0);
    std::uniform_real_distribution<double> off(-1.0, 1.0);

    for (;;) {
        const int n = dim_dist(rng);
        Matrix g(n, n);
        for (int r = 0; r < n; ++r)
            for (int c = 0; c < n; ++c) g(r, c) = gauss(rng);
        const Matrix q = Eigen::HouseholderQR<Matrix>(g).householderQ();
        Vector d(n);
        for (int i = 0; i < n; ++i) d[i] = eig(rng);
        Matrix s(n, n);
        for (int r = 0; r < n; ++r)
            for (int c = 0; c < n; ++c) s(r, c) = gauss(rng);
        const Matrix m = q * d.asDiagonal() * q.transpose() + 0.05 * (s - s.transpose());

        const double l = m.jacobiSvd().singularValues()(0);
        const double beta =
            Eigen::SelfAdjointEigenSolver<Matrix>(0.5 * (m + m.transpose())).eigenvalues().minCoeff();
        if (beta <= 0.0 || 2.0 * beta * beta <= l * l + 1e-6) continue;

        const double alpha = beta;  // midpoint of the admissible alpha interval
        const double rho = std::sqrt(l * l + alpha * alpha - 2.0 * alpha * beta);
        if (!(rho < beta)) continue;

        Vector lo(n), hi(n), b(n);
        for (int i = 0; i < n; ++i) {
            lo[i] = box_lo(rng);
            hi[i] = box_hi(rng);
            b[i] = off(rng);
        }
        return {IqviProblem(n, OperatorSpec::affine(m, b, l, beta),
                            MovingSet::fixed_box(lo, hi), alpha),
                l, beta, rho};
    }
}

/// High-accuracy fixed-point oracle: the nominal Euler iteration with
/// geometric step halving until the residual drops below tol. Independent of
/// the solver paths under test (no psi scaling, no schedules).
inline Vector solve_fixed_point_nominal(const IqviProblem& p, double tol = 1e-12) {
    double lambda = 0.5;
    for (int attempt = 0; attempt < 60; ++attempt) {
        Vector u = Vector::Zero(p.dim);
        double prev_check = std::numeric_limits<double>::infinity();
        bool ok = true;
        for (long it = 0; it < 200000; ++it) {
            const Vector t = iqvi::residual(p, u);
            const double norm = t.norm();
            if (norm <= tol) return u;
            if (!std::isfinite(norm) || norm > 1e8) {
                ok = false;
                break;
            }
            if (it % 1000 == 999) {
                if (norm >= prev_check) {  // stagnating or oscillating
                    ok = false;
                    break;
                }
                prev_check = norm;
            }
            u -= lambda * t;
        }
        if (ok) {
            const Vector t = iqvi::residual(p, u);
            if (t.norm() <= tol) return u;
        }
        lambda *= 0.5;
    }
    throw std::runtime_error("fixed-point oracle failed to converge");
}

}  // namespace iqvi_test
