#pragma once

#include "iqvi/core.hpp"
#include "iqvi/dynamics.hpp"

#include <optional>
#include <variant>
#include <vector>

namespace iqvi {

/// Time-step schedule for the forward-Euler iteration. The n-th update
/// (taking u_{n-1} to u_n, n >= 1) uses step(n); the harmonic schedule gives
/// lambda_n = c / n, so lambda_1 = c.
class StepSchedule {
public:
    [[nodiscard]] static StepSchedule fixed(double lambda) {
        if (!(lambda > 0.0)) throw std::invalid_argument("step schedule: lambda must be > 0");
        return StepSchedule(lambda, false);
    }

    [[nodiscard]] static StepSchedule harmonic(double c) {
        if (!(c > 0.0)) throw std::invalid_argument("step schedule: c must be > 0");
        return StepSchedule(c, true);
    }

    [[nodiscard]] double step(long n) const {
        if (n < 1) throw std::invalid_argument("step schedule: index must be >= 1");
        return harmonic_ ? value_ / static_cast<double>(n) : value_;
    }

    [[nodiscard]] bool is_harmonic() const { return harmonic_; }
    [[nodiscard]] double parameter() const { return value_; }

private:
    StepSchedule(double value, bool harmonic) : value_(value), harmonic_(harmonic) {}
    double value_;
    bool harmonic_;
};

/// Termination tests, checked in the order residual, error, iteration cap.
/// A tolerance of zero disables that test.
struct StopCriteria {
    long max_iter = 1;
    double residual_tol = 0.0;
    double error_tol = 0.0;

    void validate() const {
        if (max_iter < 1) throw std::invalid_argument("stop criteria: max_iter must be >= 1");
        if (residual_tol < 0.0 || error_tol < 0.0) {
            throw std::invalid_argument("stop criteria: tolerances must be >= 0");
        }
    }
};

enum class TerminationReason { MaxIter, ResidualTol, ErrorTol };

[[nodiscard]] constexpr const char* to_string(TerminationReason r) {
    switch (r) {
        case TerminationReason::MaxIter: return "MaxIter";
        case TerminationReason::ResidualTol: return "ResidualTol";
        case TerminationReason::ErrorTol: return "ErrorTol";
    }
    return "Unknown";
}

struct TrajectoryRecord {
    long iter = 0;
    double time = 0.0;
    Vector state;
    double residual_norm = 0.0;
    std::optional<double> error_norm;
};

/// Ordered iteration history. Record 0 is the initial state at elapsed time 0.
struct Trajectory {
    std::vector<TrajectoryRecord> records;
    TerminationReason termination = TerminationReason::MaxIter;

    [[nodiscard]] const TrajectoryRecord& back() const { return records.back(); }
    [[nodiscard]] long iterations() const { return records.empty() ? 0 : records.back().iter; }
};

namespace detail {

inline TrajectoryRecord make_record(const IqviProblem& p, long iter, double time, const Vector& u) {
    TrajectoryRecord rec;
    rec.iter = iter;
    rec.time = time;
    rec.state = u;
    rec.residual_norm = residual(p, u).norm();
    if (p.known_solution) rec.error_norm = (u - *p.known_solution).norm();
    return rec;
}

inline std::optional<TerminationReason> check_stop(const StopCriteria& stop,
                                                   const TrajectoryRecord& rec) {
    if (stop.residual_tol > 0.0 && rec.residual_norm <= stop.residual_tol) {
        return TerminationReason::ResidualTol;
    }
    if (stop.error_tol > 0.0 && rec.error_norm && *rec.error_norm <= stop.error_tol) {
        return TerminationReason::ErrorTol;
    }
    return std::nullopt;
}

}  // namespace detail

/// Forward-Euler iteration u_{n} = u_{n-1} + lambda_n * rhs(u_{n-1}).
/// For the fixed-time flow this is exactly the discretized projection scheme
/// u_{n+1} = u_n - lambda psi(u_n) T(u_n); the nominal and finite-time
/// variants discretize their flows the same way.
[[nodiscard]] inline Trajectory euler(const IqviProblem& p, const FlowParams& fp, const Vector& u0,
                                      const StepSchedule& sched, const StopCriteria& stop) {
    stop.validate();
    require_dim(u0, p.dim, "euler u0");
    require_finite(u0, "euler u0");

    Trajectory traj;
    traj.records.reserve(static_cast<std::size_t>(stop.max_iter) + 1);
    traj.records.push_back(detail::make_record(p, 0, 0.0, u0));
    if (auto reason = detail::check_stop(stop, traj.records.front())) {
        traj.termination = *reason;
        return traj;
    }

    Vector u = u0;
    double time = 0.0;
    for (long n = 1; n <= stop.max_iter; ++n) {
        const double lambda = sched.step(n);
        const Vector t = residual(p, u);
        const double t_norm = t.norm();
        if (t_norm > kEpsZero) {
            u += lambda * rhs_from_residual(fp, t);
        }
        time += lambda;
        if (!u.allFinite()) throw NonFiniteError(n);
        traj.records.push_back(detail::make_record(p, n, time, u));
        if (auto reason = detail::check_stop(stop, traj.records.back())) {
            traj.termination = *reason;
            return traj;
        }
    }
    traj.termination = TerminationReason::MaxIter;
    return traj;
}

/// Classical fourth-order one-step reference integrator on a fixed grid.
/// A fine-step surrogate for the continuous flow; never used for the
/// discrete-iteration claims.
[[nodiscard]] inline Trajectory integrate_reference(const IqviProblem& p, const FlowParams& fp,
                                                    const Vector& u0, double dt, double t_end) {
    if (!(dt > 0.0)) throw std::invalid_argument("integrate_reference: dt must be > 0");
    if (!(t_end >= dt)) throw std::invalid_argument("integrate_reference: t_end must be >= dt");
    require_dim(u0, p.dim, "integrate_reference u0");
    require_finite(u0, "integrate_reference u0");

    const long n_steps = static_cast<long>(t_end / dt + 0.5);
    Trajectory traj;
    traj.records.reserve(static_cast<std::size_t>(n_steps) + 1);
    traj.records.push_back(detail::make_record(p, 0, 0.0, u0));

    Vector u = u0;
    for (long n = 1; n <= n_steps; ++n) {
        const Vector k1 = rhs(p, fp, u);
        const Vector k2 = rhs(p, fp, u + (0.5 * dt) * k1);
        const Vector k3 = rhs(p, fp, u + (0.5 * dt) * k2);
        const Vector k4 = rhs(p, fp, u + dt * k3);
        u += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if (!u.allFinite()) throw NonFiniteError(n);
        traj.records.push_back(detail::make_record(p, n, static_cast<double>(n) * dt, u));
    }
    traj.termination = TerminationReason::MaxIter;
    return traj;
}

/// Elapsed time of the first record whose error norm (residual norm when no
/// known solution is attached) is <= tol and stays there for the rest of the
/// trajectory. Empty when the tolerance is never reached sustainably.
[[nodiscard]] inline std::optional<double> measure_settling(const Trajectory& traj, double tol) {
    if (!(tol > 0.0)) throw std::invalid_argument("measure_settling: tol must be > 0");
    if (traj.records.empty()) return std::nullopt;

    const auto metric = [](const TrajectoryRecord& rec) {
        return rec.error_norm ? *rec.error_norm : rec.residual_norm;
    };

    std::optional<double> settle;
    for (const auto& rec : traj.records) {
        if (metric(rec) <= tol) {
            if (!settle) settle = rec.time;
        } else {
            settle.reset();
        }
    }
    return settle;
}

}  // namespace iqvi
