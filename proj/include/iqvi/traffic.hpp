#pragma once

#include "iqvi/core.hpp"
#include "iqvi/dynamics.hpp"
#include "iqvi/integrate.hpp"
#include "iqvi/problem.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <queue>
#include <string>
#include <utility>
#include <vector>

namespace iqvi::traffic {

/// BPR link travel time t0 (1 + 0.15 (f/c)^4); strictly increasing in f.
[[nodiscard]] inline double bpr_time(double t0, double c, double f) {
    if (!(t0 > 0.0)) throw std::invalid_argument("bpr_time: t0 must be > 0");
    if (!(c > 0.0)) throw std::invalid_argument("bpr_time: capacity must be > 0");
    if (!(f >= 0.0)) throw std::invalid_argument("bpr_time: flow must be >= 0");
    const double ratio = f / c;
    const double r2 = ratio * ratio;
    return t0 * (1.0 + 0.15 * r2 * r2);
}

struct Link {
    int id = 0;
    int from = 0;
    int to = 0;
    double t0 = 0.0;
    double capacity = 0.0;
    bool tolled = false;
    double shift_lo = 0.0;  // range shift A, tolled links only
    double shift_hi = 0.0;  // range shift B, tolled links only
};

struct ODEntry {
    int origin = 0;
    int destination = 0;
    double demand = 0.0;
};

struct ODMatrix {
    std::vector<ODEntry> entries;

    [[nodiscard]] double total_demand() const {
        double d = 0.0;
        for (const auto& e : entries) d += e.demand;
        return d;
    }
};

/// Directed link network with an ordered set J of tolled links carrying the
/// flow-range shifts A (lower) and B (upper).
class TrafficNetwork {
public:
    explicit TrafficNetwork(std::vector<Link> links) : links_(std::move(links)) {
        if (links_.empty()) throw std::invalid_argument("network: no links");
        std::vector<int> ids;
        for (std::size_t li = 0; li < links_.size(); ++li) {
            const Link& l = links_[li];
            if (!(l.t0 > 0.0)) throw std::invalid_argument("network: link t0 must be > 0");
            if (!(l.capacity > 0.0)) throw std::invalid_argument("network: link capacity must be > 0");
            if (l.from == l.to) throw std::invalid_argument("network: self-loop link");
            if (l.tolled) {
                if (!(l.shift_hi >= l.shift_lo)) {
                    throw std::invalid_argument("network: tolled link requires B >= A");
                }
                tolled_.push_back(static_cast<int>(li));
            }
            ids.push_back(l.from);
            ids.push_back(l.to);
        }
        std::sort(ids.begin(), ids.end());
        ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
        node_ids_ = std::move(ids);
        for (std::size_t i = 0; i < node_ids_.size(); ++i) index_[node_ids_[i]] = static_cast<int>(i);

        out_links_.resize(node_ids_.size());
        for (std::size_t li = 0; li < links_.size(); ++li) {
            out_links_[static_cast<std::size_t>(node_index(links_[li].from))].push_back(
                static_cast<int>(li));
        }
    }

    [[nodiscard]] const std::vector<Link>& links() const { return links_; }
    [[nodiscard]] std::size_t num_links() const { return links_.size(); }
    [[nodiscard]] std::size_t num_nodes() const { return node_ids_.size(); }
    [[nodiscard]] const std::vector<int>& node_ids() const { return node_ids_; }

    /// Indices (into links()) of the tolled links, in file order.
    [[nodiscard]] const std::vector<int>& tolled_links() const { return tolled_; }

    [[nodiscard]] int node_index(int id) const {
        const auto it = index_.find(id);
        if (it == index_.end()) {
            throw std::invalid_argument("network: unknown node id " + std::to_string(id));
        }
        return it->second;
    }

    [[nodiscard]] const std::vector<std::vector<int>>& out_links() const { return out_links_; }

    [[nodiscard]] Vector range_lo() const {
        Vector a(static_cast<Eigen::Index>(tolled_.size()));
        for (std::size_t j = 0; j < tolled_.size(); ++j) a[static_cast<Eigen::Index>(j)] = links_[static_cast<std::size_t>(tolled_[j])].shift_lo;
        return a;
    }

    [[nodiscard]] Vector range_hi() const {
        Vector b(static_cast<Eigen::Index>(tolled_.size()));
        for (std::size_t j = 0; j < tolled_.size(); ++j) b[static_cast<Eigen::Index>(j)] = links_[static_cast<std::size_t>(tolled_[j])].shift_hi;
        return b;
    }

private:
    std::vector<Link> links_;
    std::vector<int> tolled_;
    std::vector<int> node_ids_;
    std::map<int, int> index_;
    std::vector<std::vector<int>> out_links_;
};

/// Single-source shortest-path tree (label-setting). dist/pred_link are
/// indexed by compact node index; unreachable nodes keep dist = +inf.
struct ShortestPathResult {
    std::vector<double> dist;
    std::vector<int> pred_link;  // -1 at the origin and at unreachable nodes
};

[[nodiscard]] inline ShortestPathResult shortest_paths(const TrafficNetwork& net,
                                                       const Vector& costs, int origin) {
    if (costs.size() != static_cast<Eigen::Index>(net.num_links())) {
        throw DimensionError("shortest_paths: cost vector size mismatch");
    }
    if ((costs.array() < 0.0).any()) {
        throw std::invalid_argument("shortest_paths: negative link cost");
    }

    const std::size_t n = net.num_nodes();
    ShortestPathResult res;
    res.dist.assign(n, std::numeric_limits<double>::infinity());
    res.pred_link.assign(n, -1);

    using Item = std::pair<double, int>;  // (dist, node index); node index breaks ties
    std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
    const int src = net.node_index(origin);
    res.dist[static_cast<std::size_t>(src)] = 0.0;
    heap.emplace(0.0, src);

    while (!heap.empty()) {
        const auto [d, v] = heap.top();
        heap.pop();
        if (d > res.dist[static_cast<std::size_t>(v)]) continue;
        for (int li : net.out_links()[static_cast<std::size_t>(v)]) {
            const Link& l = net.links()[static_cast<std::size_t>(li)];
            const int w = net.node_index(l.to);
            const double nd = d + costs[li];
            if (nd < res.dist[static_cast<std::size_t>(w)]) {
                res.dist[static_cast<std::size_t>(w)] = nd;
                res.pred_link[static_cast<std::size_t>(w)] = li;
                heap.emplace(nd, w);
            }
        }
    }
    return res;
}

struct UEResult {
    Vector link_flows;
    double relative_gap = 0.0;
    long iterations = 0;
    bool converged = false;
};

namespace detail {

[[nodiscard]] inline Vector generalized_costs(const TrafficNetwork& net, const Vector& flows,
                                              const Vector& tolls) {
    Vector c(static_cast<Eigen::Index>(net.num_links()));
    for (std::size_t li = 0; li < net.num_links(); ++li) {
        const Link& l = net.links()[li];
        c[static_cast<Eigen::Index>(li)] = bpr_time(l.t0, l.capacity, flows[static_cast<Eigen::Index>(li)]);
    }
    for (std::size_t j = 0; j < net.tolled_links().size(); ++j) {
        c[net.tolled_links()[j]] += tolls[static_cast<Eigen::Index>(j)];
    }
    return c;
}

/// All-or-nothing assignment at the given costs. Returns the loaded flows and
/// the total shortest-path cost sum(demand * dist).
[[nodiscard]] inline std::pair<Vector, double> all_or_nothing(const TrafficNetwork& net,
                                                              const ODMatrix& od,
                                                              const Vector& costs) {
    Vector y = Vector::Zero(static_cast<Eigen::Index>(net.num_links()));
    double sptt = 0.0;

    // Group OD entries by origin (first-appearance order) so each origin
    // needs a single shortest-path tree; the fixed order keeps the loading
    // bit-reproducible.
    std::vector<int> origins;
    for (const auto& e : od.entries) {
        if (std::find(origins.begin(), origins.end(), e.origin) == origins.end()) {
            origins.push_back(e.origin);
        }
    }

    for (int origin : origins) {
        const ShortestPathResult tree = shortest_paths(net, costs, origin);
        const int src = net.node_index(origin);
        for (const auto& e : od.entries) {
            if (e.origin != origin || e.demand <= 0.0) continue;
            const int dst = net.node_index(e.destination);
            if (!std::isfinite(tree.dist[static_cast<std::size_t>(dst)])) {
                throw UnreachableDestinationError("no path from node " + std::to_string(e.origin) +
                                                  " to node " + std::to_string(e.destination));
            }
            sptt += e.demand * tree.dist[static_cast<std::size_t>(dst)];
            for (int v = dst; v != src;) {
                const int li = tree.pred_link[static_cast<std::size_t>(v)];
                y[li] += e.demand;
                v = net.node_index(net.links()[static_cast<std::size_t>(li)].from);
            }
        }
    }
    return {std::move(y), sptt};
}

/// Exact line search for the Beckmann objective along direction d: bisection
/// on the scalar derivative sum_a c_a(f_a + theta d_a) d_a, which is
/// increasing in theta. Falls back to 2/(k+2) when the derivative cannot be
/// bracketed (non-finite evaluations).
[[nodiscard]] inline double line_search(const TrafficNetwork& net, const Vector& flows,
                                        const Vector& dir, const Vector& tolls, long fw_iter) {
    const auto deriv = [&](double theta) {
        const Vector f = flows + theta * dir;
        return generalized_costs(net, f, tolls).dot(dir);
    };
    const double g0 = deriv(0.0);
    const double g1 = deriv(1.0);
    if (!std::isfinite(g0) || !std::isfinite(g1)) {
        return 2.0 / (static_cast<double>(fw_iter) + 2.0);
    }
    if (g0 >= 0.0) return 0.0;
    if (g1 <= 0.0) return 1.0;

    double lo = 0.0;
    double hi = 1.0;
    while (hi - lo > 1e-10) {
        const double mid = 0.5 * (lo + hi);
        (deriv(mid) < 0.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace detail

/// Fixed-demand user equilibrium via Frank-Wolfe: all-or-nothing assignment
/// onto current shortest paths under travel time + toll, exact line search,
/// terminating when the relative gap (TSTT - SPTT)/TSTT falls below gap_tol.
/// On hitting max_iter the best iterate is returned with converged = false.
[[nodiscard]] inline UEResult user_equilibrium(const TrafficNetwork& net, const ODMatrix& od,
                                               const Vector& tolls, double gap_tol,
                                               long max_iter,
                                               const Vector* warm_start = nullptr) {
    if (!(gap_tol > 0.0)) throw std::invalid_argument("user_equilibrium: gap_tol must be > 0");
    if (max_iter < 1) throw std::invalid_argument("user_equilibrium: max_iter must be >= 1");
    if (tolls.size() != static_cast<Eigen::Index>(net.tolled_links().size())) {
        throw DimensionError("user_equilibrium: toll vector size mismatch");
    }
    for (const auto& e : od.entries) {
        net.node_index(e.origin);
        net.node_index(e.destination);
        if (!(e.demand >= 0.0) || !std::isfinite(e.demand)) {
            throw std::invalid_argument("user_equilibrium: demands must be finite and >= 0");
        }
    }

    UEResult res;
    if (warm_start != nullptr) {
        if (warm_start->size() != static_cast<Eigen::Index>(net.num_links())) {
            throw DimensionError("user_equilibrium: warm start size mismatch");
        }
        res.link_flows = *warm_start;
    } else {
        // All-or-nothing at free-flow times plus current tolls.
        const Vector free_flow = Vector::Zero(static_cast<Eigen::Index>(net.num_links()));
        res.link_flows = detail::all_or_nothing(net, od, detail::generalized_costs(net, free_flow, tolls)).first;
    }

    for (long k = 1; k <= max_iter; ++k) {
        res.iterations = k;
        const Vector costs = detail::generalized_costs(net, res.link_flows, tolls);
        auto [aon, sptt] = detail::all_or_nothing(net, od, costs);
        const double tstt = costs.dot(res.link_flows);
        res.relative_gap = tstt > 0.0 ? (tstt - sptt) / tstt : 0.0;
        if (res.relative_gap <= gap_tol) {
            res.converged = true;
            return res;
        }
        const Vector dir = aon - res.link_flows;
        const double theta = detail::line_search(net, res.link_flows, dir, tolls, k);
        res.link_flows += theta * dir;
    }

    // Report the gap of the final iterate.
    const Vector costs = detail::generalized_costs(net, res.link_flows, tolls);
    const auto [aon, sptt] = detail::all_or_nothing(net, od, costs);
    const double tstt = costs.dot(res.link_flows);
    res.relative_gap = tstt > 0.0 ? (tstt - sptt) / tstt : 0.0;
    res.converged = res.relative_gap <= gap_tol;
    return res;
}

/// The inner assignment failed to reach the requested gap.
struct InnerEquilibriumError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// The implicit road-pricing operator: equilibrium flows on the tolled links
/// as a function of the tolls. Deterministic for given tolls and settings
/// (fixed all-or-nothing initialization).
[[nodiscard]] inline Vector road_pricing_operator(const TrafficNetwork& net, const ODMatrix& od,
                                                  const Vector& tolls, double gap_tol = 1e-6,
                                                  long max_iter = 20000) {
    const UEResult ue = user_equilibrium(net, od, tolls, gap_tol, max_iter);
    if (!ue.converged) {
        throw InnerEquilibriumError("user equilibrium did not reach gap " + std::to_string(gap_tol) +
                                    " within " + std::to_string(max_iter) + " iterations");
    }
    Vector f(static_cast<Eigen::Index>(net.tolled_links().size()));
    for (std::size_t j = 0; j < net.tolled_links().size(); ++j) {
        f[static_cast<Eigen::Index>(j)] = ue.link_flows[net.tolled_links()[j]];
    }
    return f;
}

/// Wraps the road-pricing benchmark as a problem instance: the operator is
/// the implicit flow map and the moving set is the toll-shifted flow range
/// [u + A, u + B]. No declared constants; certificates for this benchmark
/// come from sampled estimates only.
[[nodiscard]] inline IqviProblem make_road_pricing_problem(const TrafficNetwork& net,
                                                           const ODMatrix& od, double alpha,
                                                           double gap_tol = 1e-6,
                                                           long max_iter = 20000) {
    const int m = static_cast<int>(net.tolled_links().size());
    if (m == 0) throw std::invalid_argument("road pricing: network has no tolled links");
    auto fn = [net, od, gap_tol, max_iter](const Vector& u) {
        return road_pricing_operator(net, od, u, gap_tol, max_iter);
    };
    return IqviProblem(m, OperatorSpec::custom("traffic-equilibrium", std::move(fn)),
                       MovingSet::translated_box(net.range_lo(), net.range_hi()), alpha);
}

struct RoadPricingResult {
    /// Toll iterates; residual_norm holds ||f(u_n) - P_{Phi(u_n)}(f(u_n) + alpha u_n)||.
    Trajectory trajectory;
    /// Step lengths R_n = ||lambda_n psi(u_n) (f(u_n) - P(...))||, aligned with
    /// the trajectory records; entry 0 (no step yet) is zero.
    std::vector<double> step_norms;
    /// Equilibrium flows on the tolled links per record.
    std::vector<Vector> tolled_flows;
    UEResult final_ue;
    bool converged = false;
};

/// Outer road-pricing iteration
///   u_{n+1} = u_n + lambda_n psi(u_n) [f(u_n) - P_{Phi(u_n)}(f(u_n) + alpha u_n)]
/// with Phi(u) = [u + A, u + B]; the +alpha form comes from restating the
/// flow-range condition as a problem in g = -f. Flags non-convergence when
/// the iteration cap is hit with the last step length above r_threshold.
[[nodiscard]] inline RoadPricingResult solve_road_pricing(const TrafficNetwork& net,
                                                          const ODMatrix& od, const FlowParams& fp,
                                                          const StepSchedule& sched, double alpha,
                                                          const Vector& u0, const StopCriteria& stop,
                                                          double gap_tol = 1e-6,
                                                          long ue_max_iter = 20000,
                                                          double r_threshold = 0.1) {
    stop.validate();
    if (!(alpha > 0.0)) throw std::invalid_argument("road pricing: alpha must be > 0");
    const FixedTimeFlow& flow = fp.fixed_time_params();
    const Eigen::Index m = static_cast<Eigen::Index>(net.tolled_links().size());
    if (m == 0) throw std::invalid_argument("road pricing: network has no tolled links");
    require_dim(u0, m, "road pricing u0");
    require_finite(u0, "road pricing u0");

    const MovingSet range = MovingSet::translated_box(net.range_lo(), net.range_hi());
    const auto outer_residual = [&](const Vector& u, const Vector& flows) -> Vector {
        return flows - project(range, u, flows + alpha * u);
    };

    RoadPricingResult result;
    Vector u = u0;
    Vector flows = road_pricing_operator(net, od, u, gap_tol, ue_max_iter);
    Vector t = outer_residual(u, flows);

    const auto push_record = [&](long n, double time, double step_norm) {
        TrajectoryRecord rec;
        rec.iter = n;
        rec.time = time;
        rec.state = u;
        rec.residual_norm = t.norm();
        result.trajectory.records.push_back(std::move(rec));
        result.step_norms.push_back(step_norm);
        result.tolled_flows.push_back(flows);
    };

    push_record(0, 0.0, 0.0);
    double time = 0.0;
    double last_step = std::numeric_limits<double>::infinity();
    result.trajectory.termination = TerminationReason::MaxIter;

    if (stop.residual_tol > 0.0 && t.norm() <= stop.residual_tol) {
        result.trajectory.termination = TerminationReason::ResidualTol;
        last_step = 0.0;
    } else {
        for (long n = 1; n <= stop.max_iter; ++n) {
            const double lambda = sched.step(n);
            const double t_norm = t.norm();
            const Vector step = lambda * psi_from_norm(flow, t_norm) * t;
            u += step;
            if (!u.allFinite()) throw NonFiniteError(n);
            last_step = step.norm();
            time += lambda;

            flows = road_pricing_operator(net, od, u, gap_tol, ue_max_iter);
            t = outer_residual(u, flows);
            push_record(n, time, last_step);
            if (stop.residual_tol > 0.0 && t.norm() <= stop.residual_tol) {
                result.trajectory.termination = TerminationReason::ResidualTol;
                break;
            }
        }
    }

    result.converged = result.trajectory.termination != TerminationReason::MaxIter ||
                       last_step <= r_threshold;
    result.final_ue = user_equilibrium(net, od, u, gap_tol, ue_max_iter);
    return result;
}

}  // namespace iqvi::traffic
