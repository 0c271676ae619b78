#pragma once

#include "iqvi/core.hpp"
#include "iqvi/geometry.hpp"

#include <functional>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <variant>

namespace iqvi {

struct AffineOperator {
    Matrix matrix;
    Vector offset;
};

struct Scalar1DOperator {
    double slope;
};

/// Operator defined by a callback, e.g. the traffic-equilibrium flow map.
struct CustomOperator {
    std::string name;
    std::function<Vector(const Vector&)> fn;
};

/// Single-valued operator together with its declared Lipschitz constant L and
/// strong-monotonicity modulus beta. Declared constants are optional; without
/// them the stability certificate is unavailable but solvers still run.
class OperatorSpec {
public:
    using Kind = std::variant<AffineOperator, Scalar1DOperator, CustomOperator>;

    [[nodiscard]] static OperatorSpec affine(Matrix m, Vector offset,
                                             std::optional<double> l = std::nullopt,
                                             std::optional<double> beta = std::nullopt) {
        if (m.rows() != m.cols()) throw DimensionError("affine operator: matrix must be square");
        if (offset.size() == 0) offset = Vector::Zero(m.rows());
        if (offset.size() != m.rows()) throw DimensionError("affine operator: offset size mismatch");
        return OperatorSpec(AffineOperator{std::move(m), std::move(offset)}, l, beta);
    }

    [[nodiscard]] static OperatorSpec scalar(double slope, std::optional<double> l = std::nullopt,
                                             std::optional<double> beta = std::nullopt) {
        return OperatorSpec(Scalar1DOperator{slope}, l, beta);
    }

    [[nodiscard]] static OperatorSpec custom(std::string name, std::function<Vector(const Vector&)> fn,
                                             std::optional<double> l = std::nullopt,
                                             std::optional<double> beta = std::nullopt) {
        if (!fn) throw std::invalid_argument("custom operator: null callback");
        return OperatorSpec(CustomOperator{std::move(name), std::move(fn)}, l, beta);
    }

    [[nodiscard]] const Kind& kind() const { return kind_; }
    [[nodiscard]] std::optional<double> declared_l() const { return declared_l_; }
    [[nodiscard]] std::optional<double> declared_beta() const { return declared_beta_; }
    [[nodiscard]] bool has_declared_constants() const {
        return declared_l_.has_value() && declared_beta_.has_value();
    }

private:
    OperatorSpec(Kind kind, std::optional<double> l, std::optional<double> beta)
        : kind_(std::move(kind)), declared_l_(l), declared_beta_(beta) {
        if (declared_l_ && !(*declared_l_ > 0.0)) {
            throw std::invalid_argument("operator: declared L must be > 0");
        }
        if (declared_beta_ && !(*declared_beta_ >= 0.0)) {
            throw std::invalid_argument("operator: declared beta must be >= 0");
        }
        if (declared_l_ && declared_beta_ && *declared_l_ < *declared_beta_) {
            throw std::invalid_argument("operator: declared L must dominate declared beta");
        }
    }

    Kind kind_;
    std::optional<double> declared_l_;
    std::optional<double> declared_beta_;
};

/// An inverse quasi-variational inequality instance: find u* with
/// f(u*) in Phi(u*) and <u*, y - f(u*)> >= 0 for all y in Phi(u*).
struct IqviProblem {
    int dim = 0;
    OperatorSpec f;
    MovingSet phi;
    double alpha = 1.0;
    std::optional<Vector> known_solution;

    IqviProblem(int dim_, OperatorSpec f_, MovingSet phi_, double alpha_,
                std::optional<Vector> known = std::nullopt)
        : dim(dim_), f(std::move(f_)), phi(std::move(phi_)), alpha(alpha_),
          known_solution(std::move(known)) {
        if (dim < 1) throw std::invalid_argument("problem: dim must be >= 1");
        if (!(alpha > 0.0)) throw std::invalid_argument("problem: alpha must be > 0");
        if (const auto* a = std::get_if<AffineOperator>(&f.kind()); a && a->matrix.rows() != dim) {
            throw DimensionError("problem: operator dimension does not match dim");
        }
        if (const auto* s = std::get_if<Scalar1DOperator>(&f.kind()); s && dim != 1) {
            throw DimensionError("problem: scalar operator requires dim == 1");
        }
        if (const Eigen::Index d = phi.dim(); d >= 0 && d != dim) {
            throw DimensionError("problem: moving set dimension does not match dim");
        }
        if (known_solution) {
            require_dim(*known_solution, dim, "problem known_solution");
            require_finite(*known_solution, "problem known_solution");
        }
    }
};

[[nodiscard]] inline Vector eval_f(const IqviProblem& p, const Vector& u) {
    require_dim(u, p.dim, "eval_f");
    require_finite(u, "eval_f u");
    return std::visit(
        [&](const auto& op) -> Vector {
            using K = std::decay_t<decltype(op)>;
            if constexpr (std::is_same_v<K, AffineOperator>) {
                return op.matrix * u + op.offset;
            } else if constexpr (std::is_same_v<K, Scalar1DOperator>) {
                return Vector::Constant(1, op.slope * u[0]);
            } else {
                Vector v = op.fn(u);
                require_dim(v, p.dim, "eval_f custom result");
                return v;
            }
        },
        p.f.kind());
}

struct ConstantEstimate {
    double l_hat = 0.0;
    double beta_hat = 0.0;
};

/// Sampled estimates of the operator constants: l_hat is the largest observed
/// difference-quotient norm, beta_hat the smallest observed monotonicity
/// quotient. For affine operators these approach the spectral norm of M and
/// the smallest eigenvalue of (M + M^T)/2 as samples grow.
[[nodiscard]] inline ConstantEstimate estimate_constants(const IqviProblem& p, int samples,
                                                         double radius, std::uint64_t seed) {
    if (samples < 2) throw std::invalid_argument("estimate_constants: samples must be >= 2");
    if (!(radius > 0.0)) throw std::invalid_argument("estimate_constants: radius must be > 0");

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uni(-radius, radius);
    const auto draw = [&] {
        Vector v(p.dim);
        for (int i = 0; i < p.dim; ++i) v[i] = uni(rng);
        return v;
    };

    double l_hat = 0.0;
    double beta_hat = std::numeric_limits<double>::infinity();
    for (int s = 0; s < samples; ++s) {
        const Vector u = draw();
        const Vector v = draw();
        const double dist2 = (u - v).squaredNorm();
        if (dist2 < 1e-24) continue;
        const Vector df = eval_f(p, u) - eval_f(p, v);
        l_hat = std::max(l_hat, df.norm() / std::sqrt(dist2));
        beta_hat = std::min(beta_hat, df.dot(u - v) / dist2);
    }
    if (!std::isfinite(beta_hat)) beta_hat = 0.0;
    return {l_hat, beta_hat};
}

}  // namespace iqvi
