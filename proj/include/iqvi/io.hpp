#pragma once

#include "iqvi/analysis.hpp"
#include "iqvi/core.hpp"
#include "iqvi/integrate.hpp"
#include "iqvi/problem.hpp"
#include "iqvi/traffic.hpp"

#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace iqvi {

/// Malformed configuration or data file; the message names the offending
/// file and field.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace io_detail {

using nlohmann::json;

inline json parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open file: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError(path + ": invalid JSON: " + e.what());
    }
    return j;
}

inline const json& field(const json& j, const char* name, const std::string& ctx) {
    const auto it = j.find(name);
    if (it == j.end()) throw ConfigError(ctx + ": missing field '" + name + "'");
    return *it;
}

template <typename T>
T get(const json& j, const char* name, const std::string& ctx) {
    try {
        return field(j, name, ctx).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(ctx + ": field '" + name + "': " + e.what());
    }
}

template <typename T>
std::optional<T> get_opt(const json& j, const char* name, const std::string& ctx) {
    if (j.find(name) == j.end()) return std::nullopt;
    return get<T>(j, name, ctx);
}

inline Vector to_vector(const std::vector<double>& v) {
    Vector out(static_cast<Eigen::Index>(v.size()));
    for (std::size_t i = 0; i < v.size(); ++i) out[static_cast<Eigen::Index>(i)] = v[i];
    return out;
}

inline std::string fmt(double x) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur += ch;
        }
    }
    out.push_back(cur);
    for (auto& s : out) {
        const auto b = s.find_first_not_of(" \t");
        const auto e = s.find_last_not_of(" \t");
        s = b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    }
    return out;
}

inline double parse_num(const std::string& s, const std::string& ctx) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw ConfigError(ctx + ": not a number: '" + s + "'");
    }
}

inline int parse_int(const std::string& s, const std::string& ctx) {
    try {
        std::size_t pos = 0;
        const int v = std::stoi(s, &pos);
        if (pos != s.size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw ConfigError(ctx + ": not an integer: '" + s + "'");
    }
}

}  // namespace io_detail

/// Load a problem description. Expected shape:
/// {
///   "dim": 2,
///   "operator": {"kind": "affine", "matrix": [[...],...], "offset": [...],
///                "L": 2.2, "beta": 2.0},
///   "set": {"kind": "abs_box", "mu": 1.0},
///   "alpha": 2.0,
///   "known_solution": [0.0, 0.0]
/// }
/// Operator kinds: affine (matrix, optional offset), scalar (slope).
/// Set kinds: fixed_box (lo, hi), abs_box, translated_box (shift_lo,
/// shift_hi, optional active), singleton (point). Each set accepts an
/// optional declared "mu"; L and beta on the operator are optional.
[[nodiscard]] inline IqviProblem load_problem(const std::string& path) {
    using io_detail::get;
    using io_detail::get_opt;
    using io_detail::to_vector;
    const auto j = io_detail::parse_file(path);

    const int dim = get<int>(j, "dim", path);

    const auto& jop = io_detail::field(j, "operator", path);
    const std::string op_ctx = path + ": operator";
    const std::string op_kind = get<std::string>(jop, "kind", op_ctx);
    const auto l = get_opt<double>(jop, "L", op_ctx);
    const auto beta = get_opt<double>(jop, "beta", op_ctx);

    std::optional<OperatorSpec> op;
    if (op_kind == "affine") {
        const auto rows = get<std::vector<std::vector<double>>>(jop, "matrix", op_ctx);
        if (rows.empty()) throw ConfigError(op_ctx + ": matrix is empty");
        Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows[0].size()));
        for (std::size_t r = 0; r < rows.size(); ++r) {
            if (rows[r].size() != rows[0].size()) {
                throw ConfigError(op_ctx + ": matrix rows have unequal lengths");
            }
            for (std::size_t c = 0; c < rows[r].size(); ++c) {
                m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
            }
        }
        Vector offset;
        if (const auto off = get_opt<std::vector<double>>(jop, "offset", op_ctx)) {
            offset = to_vector(*off);
        }
        op = OperatorSpec::affine(std::move(m), std::move(offset), l, beta);
    } else if (op_kind == "scalar") {
        op = OperatorSpec::scalar(get<double>(jop, "slope", op_ctx), l, beta);
    } else {
        throw ConfigError(op_ctx + ": unknown kind '" + op_kind + "'");
    }

    const auto& jset = io_detail::field(j, "set", path);
    const std::string set_ctx = path + ": set";
    const std::string set_kind = get<std::string>(jset, "kind", set_ctx);
    const auto mu = get_opt<double>(jset, "mu", set_ctx);

    std::optional<MovingSet> set;
    if (set_kind == "fixed_box") {
        set = MovingSet::fixed_box(to_vector(get<std::vector<double>>(jset, "lo", set_ctx)),
                                   to_vector(get<std::vector<double>>(jset, "hi", set_ctx)),
                                   mu.value_or(0.0));
    } else if (set_kind == "abs_box") {
        set = MovingSet::abs_box(mu.value_or(1.0));
    } else if (set_kind == "translated_box") {
        set = MovingSet::translated_box(
            to_vector(get<std::vector<double>>(jset, "shift_lo", set_ctx)),
            to_vector(get<std::vector<double>>(jset, "shift_hi", set_ctx)),
            get_opt<std::vector<int>>(jset, "active", set_ctx).value_or(std::vector<int>{}),
            mu.value_or(1.0));
    } else if (set_kind == "singleton") {
        set = MovingSet::singleton(to_vector(get<std::vector<double>>(jset, "point", set_ctx)),
                                   mu.value_or(0.0));
    } else {
        throw ConfigError(set_ctx + ": unknown kind '" + set_kind + "'");
    }

    std::optional<Vector> known;
    if (const auto ks = get_opt<std::vector<double>>(j, "known_solution", path)) {
        known = to_vector(*ks);
    }

    try {
        return IqviProblem(dim, std::move(*op), std::move(*set), get<double>(j, "alpha", path),
                           std::move(known));
    } catch (const std::exception& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

/// Links file, one link per line:
///   link_id,from,to,t0,capacity,tolled,A,B
/// A and B are blank (or omitted) on untolled links. A header line is
/// detected by a non-numeric first field and skipped.
[[nodiscard]] inline traffic::TrafficNetwork load_network(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open links file: " + path);

    std::vector<traffic::Link> links;
    std::string line;
    long line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string ctx = path + ":" + std::to_string(line_no);
        if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
        const auto f = io_detail::split_csv_line(line);
        if (line_no == 1 && !f.empty() && f[0].find_first_not_of("0123456789-") != std::string::npos) {
            continue;  // header
        }
        if (f.size() < 6) throw ConfigError(ctx + ": expected link_id,from,to,t0,capacity,tolled[,A,B]");
        traffic::Link l;
        l.id = io_detail::parse_int(f[0], ctx + " link_id");
        l.from = io_detail::parse_int(f[1], ctx + " from");
        l.to = io_detail::parse_int(f[2], ctx + " to");
        l.t0 = io_detail::parse_num(f[3], ctx + " t0");
        l.capacity = io_detail::parse_num(f[4], ctx + " capacity");
        l.tolled = io_detail::parse_int(f[5], ctx + " tolled") != 0;
        if (l.tolled) {
            if (f.size() < 8 || f[6].empty() || f[7].empty()) {
                throw ConfigError(ctx + ": tolled link requires A and B");
            }
            l.shift_lo = io_detail::parse_num(f[6], ctx + " A");
            l.shift_hi = io_detail::parse_num(f[7], ctx + " B");
        }
        links.push_back(l);
    }
    try {
        return traffic::TrafficNetwork(std::move(links));
    } catch (const std::exception& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

/// OD file, one entry per line: origin,destination,demand.
[[nodiscard]] inline traffic::ODMatrix load_od(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open OD file: " + path);

    traffic::ODMatrix od;
    std::string line;
    long line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string ctx = path + ":" + std::to_string(line_no);
        if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
        const auto f = io_detail::split_csv_line(line);
        if (line_no == 1 && !f.empty() && f[0].find_first_not_of("0123456789-") != std::string::npos) {
            continue;  // header
        }
        if (f.size() != 3) throw ConfigError(ctx + ": expected origin,destination,demand");
        traffic::ODEntry e;
        e.origin = io_detail::parse_int(f[0], ctx + " origin");
        e.destination = io_detail::parse_int(f[1], ctx + " destination");
        e.demand = io_detail::parse_num(f[2], ctx + " demand");
        if (!(e.demand >= 0.0) || !std::isfinite(e.demand)) {
            throw ConfigError(ctx + ": demand must be finite and >= 0");
        }
        od.entries.push_back(e);
    }
    return od;
}

/// Header `iter,time,u_1..u_n,residual,error`; 17 significant digits; the
/// error column is left empty when no known solution is attached.
inline void write_trajectory_csv(std::ostream& out, const Trajectory& traj) {
    if (traj.records.empty()) return;
    const Eigen::Index dim = traj.records.front().state.size();
    out << "iter,time";
    for (Eigen::Index i = 1; i <= dim; ++i) out << ",u_" << i;
    out << ",residual,error\n";
    for (const auto& rec : traj.records) {
        out << rec.iter << ',' << io_detail::fmt(rec.time);
        for (Eigen::Index i = 0; i < dim; ++i) out << ',' << io_detail::fmt(rec.state[i]);
        out << ',' << io_detail::fmt(rec.residual_norm) << ',';
        if (rec.error_norm) out << io_detail::fmt(*rec.error_norm);
        out << '\n';
    }
}

inline void write_trajectory_csv(const std::string& path, const Trajectory& traj) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write file: " + path);
    write_trajectory_csv(out, traj);
}

/// Header `iter,u_1..u_m,R_n,flow_1..flow_m`.
inline void write_toll_trajectory_csv(std::ostream& out, const traffic::RoadPricingResult& res) {
    if (res.trajectory.records.empty()) return;
    const Eigen::Index m = res.trajectory.records.front().state.size();
    out << "iter";
    for (Eigen::Index i = 1; i <= m; ++i) out << ",u_" << i;
    out << ",R_n";
    for (Eigen::Index i = 1; i <= m; ++i) out << ",flow_" << i;
    out << '\n';
    for (std::size_t k = 0; k < res.trajectory.records.size(); ++k) {
        const auto& rec = res.trajectory.records[k];
        out << rec.iter;
        for (Eigen::Index i = 0; i < m; ++i) out << ',' << io_detail::fmt(rec.state[i]);
        out << ',' << io_detail::fmt(res.step_norms[k]);
        for (Eigen::Index i = 0; i < m; ++i) out << ',' << io_detail::fmt(res.tolled_flows[k][i]);
        out << '\n';
    }
}

inline void write_toll_trajectory_csv(const std::string& path,
                                      const traffic::RoadPricingResult& res) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write file: " + path);
    write_toll_trajectory_csv(out, res);
}

[[nodiscard]] inline nlohmann::json certificate_to_json(const StabilityCertificate& cert) {
    nlohmann::json j;
    j["valid"] = cert.valid;
    if (!cert.valid) {
        j["invalid_reason"] = cert.invalid_reason;
        return j;
    }
    j["rho"] = cert.rho;
    j["condition_a"] = cert.condition_a;
    j["condition_beta"] = cert.condition_beta;
    j["declared_used"] = cert.declared_used;
    j["L"] = cert.l;
    j["beta"] = cert.beta;
    j["mu"] = cert.mu;
    j["alpha"] = cert.alpha;
    if (cert.estimated_l) j["estimated_L"] = *cert.estimated_l;
    if (cert.estimated_beta) j["estimated_beta"] = *cert.estimated_beta;
    if (cert.discrepancy) j["discrepancy"] = *cert.discrepancy;
    return j;
}

[[nodiscard]] inline nlohmann::json bound_to_json(const FixedTimeBound& b) {
    nlohmann::json j;
    j["q1"] = b.q1;
    j["q2"] = b.q2;
    j["p1"] = b.p1;
    j["p2"] = b.p2;
    j["s1"] = b.s1;
    j["s2"] = b.s2;
    j["t_max_general"] = b.t_max_general;
    if (b.t_max_symmetric) j["t_max_symmetric"] = *b.t_max_symmetric;
    return j;
}

[[nodiscard]] inline nlohmann::json bound_to_json(const FiniteTimeBound& b) {
    nlohmann::json j;
    j["p"] = b.p;
    j["M"] = b.m;
    j["K"] = b.k;
    j["d0"] = b.d0;
    j["t_max"] = b.t_max;
    return j;
}

/// Human-readable key:value report of a certificate and optional bounds.
[[nodiscard]] inline std::string certificate_report(
    const StabilityCertificate& cert, const FixedTimeBound* fixed = nullptr,
    const FiniteTimeBound* finite = nullptr) {
    std::ostringstream os;
    if (!cert.valid) {
        os << "certificate: invalid\n";
        os << "reason: " << cert.invalid_reason << '\n';
        return os.str();
    }
    os << "certificate: valid\n";
    os << "constants: " << (cert.declared_used ? "declared" : "estimated") << '\n';
    os << "L: " << cert.l << '\n';
    os << "beta: " << cert.beta << '\n';
    os << "mu: " << cert.mu << '\n';
    os << "alpha: " << cert.alpha << '\n';
    os << "rho: " << cert.rho << '\n';
    os << "condition_a (rho + mu < alpha): " << (cert.condition_a ? "true" : "false") << '\n';
    os << "condition_beta (rho + mu < beta): " << (cert.condition_beta ? "true" : "false") << '\n';
    if (cert.estimated_l) os << "estimated_L: " << *cert.estimated_l << '\n';
    if (cert.estimated_beta) os << "estimated_beta: " << *cert.estimated_beta << '\n';
    if (cert.discrepancy) os << "warning: " << *cert.discrepancy << '\n';
    if (fixed != nullptr) {
        os << "fixed_time.q1: " << fixed->q1 << '\n';
        os << "fixed_time.q2: " << fixed->q2 << '\n';
        os << "fixed_time.s1: " << fixed->s1 << '\n';
        os << "fixed_time.s2: " << fixed->s2 << '\n';
        os << "fixed_time.t_max_general: " << fixed->t_max_general << '\n';
        if (fixed->t_max_symmetric) {
            os << "fixed_time.t_max_symmetric: " << *fixed->t_max_symmetric << '\n';
        }
    }
    if (finite != nullptr) {
        os << "finite_time.p: " << finite->p << '\n';
        os << "finite_time.K: " << finite->k << '\n';
        os << "finite_time.t_max(d0=" << finite->d0 << "): " << finite->t_max << '\n';
    }
    return os.str();
}

}  // namespace iqvi
