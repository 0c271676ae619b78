#pragma once

#include "iqvi/core.hpp"
#include "iqvi/dynamics.hpp"
#include "iqvi/problem.hpp"

#include <cmath>
#include <limits>
#include <optional>
#include <sstream>
#include <string>

namespace iqvi {

/// Verdicts for the two stability conditions built on
/// rho = sqrt(L^2 + alpha^2 - 2 alpha beta):
///   condition A:     rho + mu < alpha  (existence/uniqueness regime)
///   condition beta:  rho + mu < beta   (finite-/fixed-time regime)
/// The conditions are independent; neither implies the other.
struct StabilityCertificate {
    bool valid = false;
    std::string invalid_reason;

    double rho = 0.0;
    bool condition_a = false;
    bool condition_beta = false;
    bool declared_used = true;
    std::optional<std::string> discrepancy;

    // Constants the verdicts were computed from.
    double l = 0.0;
    double beta = 0.0;
    double mu = 0.0;
    double alpha = 0.0;

    // Sampled estimates, populated whenever they were computed.
    std::optional<double> estimated_l;
    std::optional<double> estimated_beta;
};

namespace detail {

inline StabilityCertificate certify_from_constants(double l, double beta, double mu, double alpha) {
    StabilityCertificate cert;
    cert.l = l;
    cert.beta = beta;
    cert.mu = mu;
    cert.alpha = alpha;

    const double disc = l * l + alpha * alpha - 2.0 * alpha * beta;
    if (disc < 0.0) {
        cert.valid = false;
        std::ostringstream os;
        os << "L^2 + alpha^2 - 2 alpha beta = " << disc << " is negative; rho is undefined";
        cert.invalid_reason = os.str();
        return cert;
    }
    cert.valid = true;
    cert.rho = std::sqrt(disc);
    cert.condition_a = cert.rho + mu < alpha;
    cert.condition_beta = cert.rho + mu < beta;
    return cert;
}

}  // namespace detail

/// Evaluate the stability conditions for a problem. With use_declared the
/// declared operator constants are certified and the sampled estimates are
/// reported alongside, with a note when they disagree by more than 1%.
[[nodiscard]] inline StabilityCertificate certify(const IqviProblem& p, bool use_declared,
                                                  int samples = 2000, double radius = 5.0,
                                                  std::uint64_t seed = 20240601) {
    std::optional<ConstantEstimate> est;
    if (!use_declared || p.f.has_declared_constants()) {
        est = estimate_constants(p, samples, radius, seed);
    }

    double l = 0.0;
    double beta = 0.0;
    if (use_declared) {
        if (!p.f.has_declared_constants()) {
            StabilityCertificate cert;
            cert.valid = false;
            cert.invalid_reason = "operator has no declared constants";
            cert.mu = p.phi.mu();
            cert.alpha = p.alpha;
            return cert;
        }
        l = *p.f.declared_l();
        beta = *p.f.declared_beta();
    } else {
        l = est->l_hat;
        beta = est->beta_hat;
    }

    StabilityCertificate cert = detail::certify_from_constants(l, beta, p.phi.mu(), p.alpha);
    cert.declared_used = use_declared;
    if (est) {
        cert.estimated_l = est->l_hat;
        cert.estimated_beta = est->beta_hat;
        if (use_declared) {
            const bool l_off = est->l_hat > l * 1.01;
            const bool beta_off = est->beta_hat < beta * 0.99;
            if (l_off || beta_off) {
                std::ostringstream os;
                os << "declared constants disagree with sampled estimates by more than 1%:"
                   << " L declared " << l << " vs estimated " << est->l_hat
                   << ", beta declared " << beta << " vs estimated " << est->beta_hat;
                cert.discrepancy = os.str();
            }
        }
    }
    return cert;
}

/// Settling-time data for the fixed-time flow. With p_i = (1 + r_i)/2 and
/// s_i = 2^{p_i} q_i, the flow admits the uniform bound
///   T_max = 1/(s1 (1 - p1)) + 1/(s2 (p2 - 1)).
/// When r1 + r2 = 2 the sharper symmetric bound pi*xi/sqrt(s1 s2) with
/// xi = 1/(1 - r1) applies as well.
struct FixedTimeBound {
    double q1 = 0.0;
    double q2 = 0.0;
    double p1 = 0.0;
    double p2 = 0.0;
    double s1 = 0.0;
    double s2 = 0.0;
    double t_max_general = 0.0;
    std::optional<double> t_max_symmetric;

    // Flow parameters the bound was computed for.
    double a1 = 0.0;
    double a2 = 0.0;
    double r1 = 0.0;
    double r2 = 0.0;
};

[[nodiscard]] inline FixedTimeBound fixed_time_bound(const StabilityCertificate& cert,
                                                     const FlowParams& fp, double l, double beta,
                                                     double mu, double /*alpha*/) {
    const FixedTimeFlow& f = fp.fixed_time_params();
    if (!cert.valid) {
        throw ConditionViolatedError("fixed_time_bound: certificate invalid: " + cert.invalid_reason);
    }
    if (!cert.condition_beta) {
        throw ConditionViolatedError("fixed_time_bound: requires rho + mu < beta");
    }

    const double rho = cert.rho;
    const double gap = beta - mu - rho;

    FixedTimeBound b;
    b.a1 = f.a1;
    b.a2 = f.a2;
    b.r1 = f.r1;
    b.r2 = f.r2;
    b.q1 = f.a1 * gap / std::pow(l + mu + rho, 1.0 - f.r1);
    b.q2 = f.a2 * std::pow(gap, f.r2);
    b.p1 = (1.0 + f.r1) / 2.0;
    b.p2 = (1.0 + f.r2) / 2.0;
    b.s1 = std::pow(2.0, b.p1) * b.q1;
    b.s2 = std::pow(2.0, b.p2) * b.q2;
    b.t_max_general = 1.0 / (b.s1 * (1.0 - b.p1)) + 1.0 / (b.s2 * (b.p2 - 1.0));
    if (std::abs((1.0 - f.r1) - (f.r2 - 1.0)) <= 1e-12) {
        const double xi = 1.0 / (1.0 - f.r1);
        b.t_max_symmetric = M_PI * xi / std::sqrt(b.s1 * b.s2);
    }
    return b;
}

/// Settling-time data for the finite-time flow: p = gamma/(2(gamma-1)),
/// K = 2^p sigma (beta - rho - mu)^{gamma/(gamma-1)}, and the bound grows
/// with the initial distance d0 as d0^{2(1-p)} / (2^{1-p} K (1-p)).
struct FiniteTimeBound {
    double p = 0.0;
    double m = 0.0;
    double k = 0.0;
    double d0 = 0.0;
    double t_max = 0.0;

    [[nodiscard]] double settling_bound(double d) const {
        if (d < 0.0) throw std::invalid_argument("settling_bound: d must be >= 0");
        return std::pow(d, 2.0 * (1.0 - p)) / (std::pow(2.0, 1.0 - p) * k * (1.0 - p));
    }
};

[[nodiscard]] inline FiniteTimeBound finite_time_bound(const StabilityCertificate& cert,
                                                       const FlowParams& fp, double /*l*/,
                                                       double beta, double mu, double d0) {
    const FiniteTimeFlow& f = fp.finite_time_params();
    if (!cert.valid) {
        throw ConditionViolatedError("finite_time_bound: certificate invalid: " + cert.invalid_reason);
    }
    if (!cert.condition_beta) {
        throw ConditionViolatedError("finite_time_bound: requires rho + mu < beta");
    }
    if (d0 < 0.0) throw std::invalid_argument("finite_time_bound: d0 must be >= 0");

    FiniteTimeBound b;
    b.p = f.gamma / (2.0 * (f.gamma - 1.0));
    b.m = f.sigma * std::pow(beta - cert.rho - mu, f.gamma / (f.gamma - 1.0));
    b.k = b.m * std::pow(2.0, b.p);
    b.d0 = d0;
    b.t_max = b.settling_bound(d0);
    return b;
}

/// Error envelope for the discretized fixed-time scheme with exponents
/// r1 = 1 - 2/nu, r2 = 1 + 2/nu: the iterates stay below
///   sqrt(2) (sqrt(s1/s2) tan(pi/2 - (sqrt(s1 s2)/nu) lambda n))^{nu/2} + eps
/// up to n* = ceil(nu pi / (2 lambda sqrt(s1 s2))) and below eps afterwards.
struct ErrorEnvelope {
    double nu = 0.0;
    double lambda = 0.0;
    double epsilon = 0.0;
    double s1 = 0.0;
    double s2 = 0.0;
    long n_star = 0;

    /// Envelope value at iterate n; +infinity at n = 0 where the tangent
    /// diverges. The tangent term is clamped to eps once its argument is
    /// nonpositive, which floating rounding can produce just before n*.
    [[nodiscard]] double bound(long n) const {
        if (n < 0) throw std::invalid_argument("envelope bound: n must be >= 0");
        if (n == 0) return std::numeric_limits<double>::infinity();
        if (n > n_star) return epsilon;
        const double arg = M_PI / 2.0 - std::sqrt(s1 * s2) / nu * lambda * static_cast<double>(n);
        if (arg <= 0.0) return epsilon;
        return std::sqrt(2.0) * std::pow(std::sqrt(s1 / s2) * std::tan(arg), nu / 2.0) + epsilon;
    }
};

[[nodiscard]] inline ErrorEnvelope error_envelope(const FixedTimeBound& ftb, double nu,
                                                  double lambda, double epsilon) {
    if (!(nu > 2.0)) throw std::invalid_argument("error_envelope: nu must be > 2");
    if (!(lambda > 0.0)) throw std::invalid_argument("error_envelope: lambda must be > 0");
    if (!(epsilon > 0.0)) throw std::invalid_argument("error_envelope: epsilon must be > 0");
    if (std::abs(ftb.r1 - (1.0 - 2.0 / nu)) > 1e-9 || std::abs(ftb.r2 - (1.0 + 2.0 / nu)) > 1e-9) {
        throw ExponentMismatchError(
            "error_envelope: flow exponents must satisfy r1 = 1 - 2/nu and r2 = 1 + 2/nu");
    }

    ErrorEnvelope env;
    env.nu = nu;
    env.lambda = lambda;
    env.epsilon = epsilon;
    env.s1 = ftb.s1;
    env.s2 = ftb.s2;
    env.n_star = static_cast<long>(std::ceil(nu * M_PI / (2.0 * lambda * std::sqrt(ftb.s1 * ftb.s2))));
    return env;
}

}  // namespace iqvi
