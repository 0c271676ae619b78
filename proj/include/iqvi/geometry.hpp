#pragma once

#include "iqvi/core.hpp"

#include <algorithm>
#include <functional>
#include <limits>
#include <random>
#include <utility>
#include <variant>
#include <vector>

namespace iqvi {

/// Box with constant bounds, lo <= hi componentwise.
struct FixedBox {
    Vector lo;
    Vector hi;
};

/// Box whose bounds are +-|u_i|: the feasible rectangle shrinks and grows
/// with the point the set is evaluated at.
struct AbsBox {};

/// Box translated by the evaluation point: bounds [u_i + shift_lo_i, u_i + shift_hi_i]
/// on the active indices, fixed [shift_lo_i, shift_hi_i] elsewhere.
/// An empty active list means every index translates.
struct TranslatedBox {
    Vector shift_lo;
    Vector shift_hi;
    std::vector<int> active;
};

struct Singleton {
    Vector point;
};

/// Caller-supplied projector (u, w) -> P_{Phi(u)}(w). Must be reentrant and
/// idempotent; the library re-checks idempotence on every call.
struct CustomSet {
    std::function<Vector(const Vector&, const Vector&)> projector;
};

/// A moving family of closed convex sets u -> Phi(u) together with the
/// declared Lipschitz modulus mu of u -> P_{Phi(u)}(w).
class MovingSet {
public:
    using Kind = std::variant<FixedBox, AbsBox, TranslatedBox, Singleton, CustomSet>;

    [[nodiscard]] static MovingSet fixed_box(Vector lo, Vector hi, double mu = 0.0) {
        if (lo.size() != hi.size()) throw DimensionError("fixed_box: lo/hi size mismatch");
        require_finite(lo, "fixed_box lo");
        require_finite(hi, "fixed_box hi");
        if ((lo.array() > hi.array()).any()) {
            throw std::invalid_argument("fixed_box: requires lo <= hi componentwise");
        }
        return MovingSet(FixedBox{std::move(lo), std::move(hi)}, mu);
    }

    [[nodiscard]] static MovingSet abs_box(double mu = 1.0) { return MovingSet(AbsBox{}, mu); }

    [[nodiscard]] static MovingSet translated_box(Vector shift_lo, Vector shift_hi,
                                                  std::vector<int> active = {}, double mu = 1.0) {
        if (shift_lo.size() != shift_hi.size()) {
            throw DimensionError("translated_box: shift size mismatch");
        }
        require_finite(shift_lo, "translated_box shift_lo");
        require_finite(shift_hi, "translated_box shift_hi");
        const auto check = [&](Eigen::Index i) {
            if (shift_lo[i] > shift_hi[i]) {
                throw std::invalid_argument("translated_box: requires shift_lo <= shift_hi");
            }
        };
        if (active.empty()) {
            for (Eigen::Index i = 0; i < shift_lo.size(); ++i) check(i);
        } else {
            for (int i : active) {
                if (i < 0 || i >= shift_lo.size()) {
                    throw std::invalid_argument("translated_box: active index out of range");
                }
                check(i);
            }
        }
        return MovingSet(TranslatedBox{std::move(shift_lo), std::move(shift_hi), std::move(active)}, mu);
    }

    [[nodiscard]] static MovingSet singleton(Vector point, double mu = 0.0) {
        require_finite(point, "singleton point");
        return MovingSet(Singleton{std::move(point)}, mu);
    }

    [[nodiscard]] static MovingSet custom(std::function<Vector(const Vector&, const Vector&)> projector,
                                          double mu) {
        if (!projector) throw std::invalid_argument("custom set: null projector");
        return MovingSet(CustomSet{std::move(projector)}, mu);
    }

    [[nodiscard]] const Kind& kind() const { return kind_; }
    [[nodiscard]] double mu() const { return mu_; }

    /// Fixed dimension of the family, or -1 when any dimension is accepted.
    [[nodiscard]] Eigen::Index dim() const {
        if (const auto* b = std::get_if<FixedBox>(&kind_)) return b->lo.size();
        if (const auto* t = std::get_if<TranslatedBox>(&kind_)) return t->shift_lo.size();
        if (const auto* s = std::get_if<Singleton>(&kind_)) return s->point.size();
        return -1;
    }

private:
    MovingSet(Kind kind, double mu) : kind_(std::move(kind)), mu_(mu) {
        if (!(mu >= 0.0)) throw std::invalid_argument("moving set: mu must be >= 0");
    }

    Kind kind_;
    double mu_;
};

/// Metric projection P_{Phi(u)}(w). Box kinds clamp componentwise; ties on a
/// bound return the bound value exactly.
[[nodiscard]] inline Vector project(const MovingSet& set, const Vector& u, const Vector& w) {
    if (u.size() != w.size()) throw DimensionError("project: u/w size mismatch");
    require_finite(u, "project u");
    require_finite(w, "project w");
    if (const Eigen::Index d = set.dim(); d >= 0) {
        require_dim(u, d, "project");
    }

    return std::visit(
        [&](const auto& k) -> Vector {
            using K = std::decay_t<decltype(k)>;
            if constexpr (std::is_same_v<K, FixedBox>) {
                return w.cwiseMax(k.lo).cwiseMin(k.hi);
            } else if constexpr (std::is_same_v<K, AbsBox>) {
                const Vector bound = u.cwiseAbs();
                return w.cwiseMax(-bound).cwiseMin(bound);
            } else if constexpr (std::is_same_v<K, TranslatedBox>) {
                Vector lo = k.shift_lo;
                Vector hi = k.shift_hi;
                if (k.active.empty()) {
                    lo += u;
                    hi += u;
                } else {
                    for (int i : k.active) {
                        lo[i] += u[i];
                        hi[i] += u[i];
                    }
                }
                return w.cwiseMax(lo).cwiseMin(hi);
            } else if constexpr (std::is_same_v<K, Singleton>) {
                require_dim(w, k.point.size(), "project(singleton)");
                return k.point;
            } else {
                Vector v = k.projector(u, w);
                if (v.size() != w.size()) {
                    throw ProjectorError("custom projector changed the dimension");
                }
                const Vector again = k.projector(u, v);
                if ((again - v).norm() > 1e-9 * std::max(1.0, v.norm())) {
                    throw ProjectorError("custom projector failed the idempotence re-check");
                }
                return v;
            }
        },
        set.kind());
}

/// Empirical lower estimate of the moving-set modulus mu: the largest sampled
/// ratio ||P_{Phi(u)}(w) - P_{Phi(v)}(w)|| / ||u - v||. Deterministic per seed.
[[nodiscard]] inline double estimate_mu(const MovingSet& set, int dim, int samples, double radius,
                                        std::uint64_t seed) {
    if (samples < 2) throw std::invalid_argument("estimate_mu: samples must be >= 2");
    if (!(radius > 0.0)) throw std::invalid_argument("estimate_mu: radius must be > 0");
    if (const Eigen::Index d = set.dim(); d >= 0 && d != dim) {
        throw DimensionError("estimate_mu: dim does not match the set");
    }

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uni(-radius, radius);
    const auto draw = [&] {
        Vector v(dim);
        for (int i = 0; i < dim; ++i) v[i] = uni(rng);
        return v;
    };

    double best = 0.0;
    for (int s = 0; s < samples; ++s) {
        const Vector u = draw();
        const Vector v = draw();
        const Vector w = draw();
        const double dist = (u - v).norm();
        if (dist < 1e-12) continue;
        const double ratio = (project(set, u, w) - project(set, v, w)).norm() / dist;
        best = std::max(best, ratio);
    }
    return best;
}

}  // namespace iqvi
