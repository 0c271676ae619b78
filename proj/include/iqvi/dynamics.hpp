#pragma once

#include "iqvi/core.hpp"
#include "iqvi/problem.hpp"

#include <cmath>
#include <variant>

namespace iqvi {

/// u' = -sigma T(u)
struct NominalFlow {
    double sigma;
};

/// u' = -sigma T(u) / ||T(u)||^((gamma-2)/(gamma-1)), gamma > 2
struct FiniteTimeFlow {
    double sigma;
    double gamma;
};

/// u' = -(a1 ||T(u)||^(r1-1) + a2 ||T(u)||^(r2-1)) T(u), 0 < r1 < 1 < r2
struct FixedTimeFlow {
    double a1;
    double a2;
    double r1;
    double r2;
};

class FlowParams {
public:
    using Kind = std::variant<NominalFlow, FiniteTimeFlow, FixedTimeFlow>;

    [[nodiscard]] static FlowParams nominal(double sigma) {
        if (!(sigma > 0.0)) throw std::invalid_argument("nominal flow: sigma must be > 0");
        return FlowParams(NominalFlow{sigma});
    }

    [[nodiscard]] static FlowParams finite_time(double sigma, double gamma) {
        if (!(sigma > 0.0)) throw std::invalid_argument("finite-time flow: sigma must be > 0");
        if (!(gamma > 2.0)) throw std::invalid_argument("finite-time flow: gamma must be > 2");
        return FlowParams(FiniteTimeFlow{sigma, gamma});
    }

    [[nodiscard]] static FlowParams fixed_time(double a1, double a2, double r1, double r2) {
        if (!(a1 > 0.0) || !(a2 > 0.0)) {
            throw std::invalid_argument("fixed-time flow: a1, a2 must be > 0");
        }
        if (!(r1 > 0.0 && r1 < 1.0)) {
            throw std::invalid_argument("fixed-time flow: r1 must lie in (0, 1)");
        }
        if (!(r2 > 1.0)) throw std::invalid_argument("fixed-time flow: r2 must be > 1");
        return FlowParams(FixedTimeFlow{a1, a2, r1, r2});
    }

    [[nodiscard]] const Kind& kind() const { return kind_; }
    [[nodiscard]] bool is_fixed_time() const { return std::holds_alternative<FixedTimeFlow>(kind_); }

    [[nodiscard]] const FixedTimeFlow& fixed_time_params() const {
        if (const auto* f = std::get_if<FixedTimeFlow>(&kind_)) return *f;
        throw std::invalid_argument("flow params: fixed-time variant required");
    }

    [[nodiscard]] const FiniteTimeFlow& finite_time_params() const {
        if (const auto* f = std::get_if<FiniteTimeFlow>(&kind_)) return *f;
        throw std::invalid_argument("flow params: finite-time variant required");
    }

private:
    explicit FlowParams(Kind kind) : kind_(kind) {}
    Kind kind_;
};

/// Residual map T(u) = f(u) - P_{Phi(u)}(f(u) - alpha u).
/// Zero exactly at the solutions of the problem.
[[nodiscard]] inline Vector residual(const IqviProblem& p, const Vector& u) {
    const Vector fu = eval_f(p, u);
    return fu - project(p.phi, u, fu - p.alpha * u);
}

/// Fixed-time scaling factor evaluated from a precomputed residual norm.
[[nodiscard]] inline double psi_from_norm(const FixedTimeFlow& fp, double residual_norm) {
    if (residual_norm <= kEpsZero) return 0.0;
    return fp.a1 * std::pow(residual_norm, fp.r1 - 1.0) +
           fp.a2 * std::pow(residual_norm, fp.r2 - 1.0);
}

/// psi(u) = a1 ||T(u)||^(r1-1) + a2 ||T(u)||^(r2-1), zero on Zer(T).
[[nodiscard]] inline double psi(const IqviProblem& p, const FlowParams& fp, const Vector& u) {
    return psi_from_norm(fp.fixed_time_params(), residual(p, u).norm());
}

namespace detail {

inline Vector flow_rhs(const NominalFlow& fp, const Vector& t, double) { return -fp.sigma * t; }

inline Vector flow_rhs(const FiniteTimeFlow& fp, const Vector& t, double t_norm) {
    if (t_norm <= kEpsZero) return Vector::Zero(t.size());
    return (-fp.sigma * std::pow(t_norm, -(fp.gamma - 2.0) / (fp.gamma - 1.0))) * t;
}

inline Vector flow_rhs(const FixedTimeFlow& fp, const Vector& t, double t_norm) {
    // Product form: one multiply of T by the combined coefficient.
    return -psi_from_norm(fp, t_norm) * t;
}

}  // namespace detail

[[nodiscard]] inline Vector rhs_from_residual(const FlowParams& fp, const Vector& t) {
    const double t_norm = t.norm();
    return std::visit([&](const auto& k) { return detail::flow_rhs(k, t, t_norm); }, fp.kind());
}

/// Right-hand side of the selected dynamical system at state u.
[[nodiscard]] inline Vector rhs(const IqviProblem& p, const FlowParams& fp, const Vector& u) {
    return rhs_from_residual(fp, residual(p, u));
}

}  // namespace iqvi
