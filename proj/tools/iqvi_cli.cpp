// Command-line front end: stability certificates, solver runs, and the two
// shipped benchmarks. All outputs are plain CSV/JSON so plotting stays
// outside the core.

#include "iqvi/iqvi.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

namespace {

using namespace iqvi;

struct FlowOptions {
    std::string system = "fixed";
    double sigma = 1.0;
    double gamma = 3.0;
    double a1 = 20.0;
    double a2 = 20.0;
    double r1 = 0.95;
    double r2 = 1.5;

    [[nodiscard]] FlowParams make() const {
        if (system == "nominal") return FlowParams::nominal(sigma);
        if (system == "finite") return FlowParams::finite_time(sigma, gamma);
        if (system == "fixed") return FlowParams::fixed_time(a1, a2, r1, r2);
        throw std::invalid_argument("unknown system '" + system + "'");
    }
};

void add_flow_options(CLI::App* cmd, FlowOptions& fo) {
    cmd->add_option("--system", fo.system, "Dynamical system: nominal|finite|fixed")
        ->check(CLI::IsMember({"nominal", "finite", "fixed"}));
    cmd->add_option("--sigma", fo.sigma, "Gain of the nominal/finite-time systems");
    cmd->add_option("--gamma", fo.gamma, "Finite-time exponent parameter (> 2)");
    cmd->add_option("--a1", fo.a1, "Fixed-time gain a1");
    cmd->add_option("--a2", fo.a2, "Fixed-time gain a2");
    cmd->add_option("--r1", fo.r1, "Fixed-time exponent r1 in (0,1)");
    cmd->add_option("--r2", fo.r2, "Fixed-time exponent r2 > 1");
}

Vector parse_vector(const std::string& csv) {
    std::vector<double> vals;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        vals.push_back(std::stod(item));
    }
    Vector v(static_cast<Eigen::Index>(vals.size()));
    for (std::size_t i = 0; i < vals.size(); ++i) v[static_cast<Eigen::Index>(i)] = vals[i];
    return v;
}

std::string out_path(const std::string& dir, const std::string& name) {
    if (dir.empty() || dir == ".") return name;
    std::filesystem::create_directories(dir);
    return (std::filesystem::path(dir) / name).string();
}

StepSchedule make_schedule(double lambda, double harmonic) {
    if (harmonic > 0.0) return StepSchedule::harmonic(harmonic);
    return StepSchedule::fixed(lambda);
}

int cmd_check(const std::string& config, bool estimated, int samples, double radius,
              std::uint64_t seed, const FlowOptions& fo, double d0, const std::string& out_dir) {
    const auto p = load_problem(config);
    const auto cert = certify(p, !estimated, samples, radius, seed);

    std::optional<FixedTimeBound> ftb;
    std::optional<FiniteTimeBound> finb;
    if (cert.valid && cert.condition_beta) {
        ftb = fixed_time_bound(cert, FlowParams::fixed_time(fo.a1, fo.a2, fo.r1, fo.r2), cert.l,
                               cert.beta, cert.mu, cert.alpha);
        finb = finite_time_bound(cert, FlowParams::finite_time(fo.sigma, fo.gamma), cert.l,
                                 cert.beta, cert.mu, d0);
    }
    std::cout << certificate_report(cert, ftb ? &*ftb : nullptr, finb ? &*finb : nullptr);

    if (!out_dir.empty()) {
        nlohmann::json j;
        j["certificate"] = certificate_to_json(cert);
        if (ftb) j["fixed_time_bound"] = bound_to_json(*ftb);
        if (finb) j["finite_time_bound"] = bound_to_json(*finb);
        std::ofstream out(out_path(out_dir, "certificate.json"));
        out << j.dump(2) << '\n';
        std::cout << "wrote " << out_path(out_dir, "certificate.json") << '\n';
    }
    return 0;
}

int cmd_solve(const std::string& config, const FlowOptions& fo, double lambda, double harmonic,
              long iters, double tol, const std::string& u0_csv, bool continuous, double dt,
              double t_end, const std::string& out_dir) {
    const auto p = load_problem(config);
    const auto fp = fo.make();

    Vector u0 = u0_csv.empty() ? Vector::Ones(p.dim) : parse_vector(u0_csv);

    Trajectory traj;
    if (continuous) {
        traj = integrate_reference(p, fp, u0, dt, t_end);
    } else {
        traj = euler(p, fp, u0, make_schedule(lambda, harmonic),
                     {.max_iter = iters, .residual_tol = tol, .error_tol = 0.0});
    }

    const std::string csv = out_path(out_dir, "trajectory.csv");
    write_trajectory_csv(csv, traj);

    const auto& last = traj.back();
    std::cout << "iterations: " << last.iter << '\n';
    std::cout << "termination: " << to_string(traj.termination) << '\n';
    std::cout << "final residual: " << last.residual_norm << '\n';
    if (last.error_norm) {
        std::cout << "final error: " << *last.error_norm << '\n';
        std::cout << "final error (max-abs): "
                  << (last.state - *p.known_solution).cwiseAbs().maxCoeff() << '\n';
    }
    std::cout << "wrote " << csv << '\n';
    return 0;
}

int cmd_bench_example1(double lambda, long iters, const std::string& config,
                       const std::string& out_dir) {
    const auto p = load_problem(config);
    const Vector u0 = Vector::Ones(2);
    const StopCriteria stop{.max_iter = iters};

    const auto fixed = euler(p, FlowParams::fixed_time(20.0, 20.0, 0.95, 1.5), u0,
                             StepSchedule::fixed(lambda), stop);
    const auto nominal =
        euler(p, FlowParams::nominal(1.0), u0, StepSchedule::fixed(lambda), stop);

    const std::string csv = out_path(out_dir, "bench_example1.csv");
    {
        std::ofstream out(csv);
        if (!out) throw ConfigError("cannot write file: " + csv);
        out << "iter,error_fixed,error_nominal\n";
        const std::size_t rows = std::min(fixed.records.size(), nominal.records.size());
        for (std::size_t k = 0; k < rows; ++k) {
            char buf[96];
            std::snprintf(buf, sizeof(buf), "%ld,%.17g,%.17g\n", fixed.records[k].iter,
                          *fixed.records[k].error_norm, *nominal.records[k].error_norm);
            out << buf;
        }
    }

    const double err_fixed = *fixed.back().error_norm;
    const double err_fixed_max = fixed.back().state.cwiseAbs().maxCoeff();
    const double err_nominal = *nominal.back().error_norm;
    std::cout << "fixed-time error after " << iters << " iterations: " << err_fixed
              << " (max-abs " << err_fixed_max << ")\n";
    std::cout << "nominal error after " << iters << " iterations: " << err_nominal << '\n';
    std::cout << "nominal / fixed-time error ratio: " << err_nominal / err_fixed << '\n';
    std::cout << "wrote " << csv << '\n';
    return 0;
}

int cmd_traffic(const std::string& links_path, const std::string& od_path, double alpha,
                const FlowOptions& fo, double lambda, double harmonic, long iters, double tol,
                const std::string& u0_csv, double gap_tol, const std::string& out_dir) {
    const auto net = load_network(links_path);
    const auto od = load_od(od_path);

    Vector u0 = u0_csv.empty() ? Vector::Zero(static_cast<Eigen::Index>(net.tolled_links().size()))
                               : parse_vector(u0_csv);

    const auto res = traffic::solve_road_pricing(
        net, od, FlowParams::fixed_time(fo.a1, fo.a2, fo.r1, fo.r2),
        make_schedule(lambda, harmonic), alpha, u0,
        {.max_iter = iters, .residual_tol = tol, .error_tol = 0.0}, gap_tol);

    const std::string csv = out_path(out_dir, "toll_trajectory.csv");
    write_toll_trajectory_csv(csv, res);

    const Vector u = res.trajectory.back().state;
    const Vector f = res.tolled_flows.back();
    const Vector lo = net.range_lo();
    const Vector hi = net.range_hi();

    nlohmann::json j;
    j["iterations"] = res.trajectory.back().iter;
    j["converged"] = res.converged;
    j["final_R"] = res.step_norms.back();
    j["relative_gap"] = res.final_ue.relative_gap;
    for (Eigen::Index i = 0; i < u.size(); ++i) {
        j["tolls"].push_back(u[i]);
        j["flows"].push_back(f[i]);
        j["range_lo"].push_back(u[i] + lo[i]);
        j["range_hi"].push_back(u[i] + hi[i]);
    }
    j["all_link_flows"] = std::vector<double>(res.final_ue.link_flows.data(),
                                              res.final_ue.link_flows.data() +
                                                  res.final_ue.link_flows.size());
    const std::string ue_json = out_path(out_dir, "final_ue.json");
    {
        std::ofstream out(ue_json);
        if (!out) throw ConfigError("cannot write file: " + ue_json);
        out << j.dump(2) << '\n';
    }

    std::cout << "iterations: " << res.trajectory.back().iter << '\n';
    std::cout << "converged: " << (res.converged ? "yes" : "no") << '\n';
    std::cout << "final step length R_n: " << res.step_norms.back() << '\n';
    for (Eigen::Index i = 0; i < u.size(); ++i) {
        std::cout << "tolled link " << (i + 1) << ": toll " << u[i] << ", flow " << f[i]
                  << ", range [" << u[i] + lo[i] << ", " << u[i] + hi[i] << "]\n";
    }
    std::cout << "inner relative gap: " << res.final_ue.relative_gap << '\n';
    std::cout << "wrote " << csv << " and " << ue_json << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Finite-/fixed-time projection solvers for inverse quasi-variational inequalities"};
    app.require_subcommand(1);

    // check
    auto* check = app.add_subcommand("check", "Stability certificate and settling-time bounds");
    std::string check_config;
    bool estimated = false;
    int samples = 2000;
    double radius = 5.0;
    std::uint64_t seed = 20240601;
    FlowOptions check_fo;
    double d0 = 1.0;
    std::string check_out;
    check->add_option("--config", check_config, "Problem file (JSON)")->required();
    check->add_flag("--estimated", estimated, "Certify sampled constants instead of declared ones");
    check->add_option("--samples", samples, "Samples for constant estimation");
    check->add_option("--radius", radius, "Sampling radius");
    check->add_option("--seed", seed, "Sampling seed");
    add_flow_options(check, check_fo);
    check->add_option("--d0", d0, "Initial distance for the finite-time bound");
    check->add_option("--out", check_out, "Directory for certificate.json");

    // solve
    auto* solve = app.add_subcommand("solve", "Run a discretized system on a problem file");
    std::string solve_config;
    FlowOptions solve_fo;
    double lambda = 0.00146;
    double harmonic = 0.0;
    long iters = 100;
    double tol = 0.0;
    std::string u0_csv;
    bool continuous = false;
    double dt = 1e-4;
    double t_end = 10.0;
    std::string solve_out;
    solve->add_option("--config", solve_config, "Problem file (JSON)")->required();
    add_flow_options(solve, solve_fo);
    solve->add_option("--lambda", lambda, "Fixed step size");
    solve->add_option("--harmonic", harmonic, "Harmonic schedule constant c (lambda_n = c/n)");
    solve->add_option("--iters", iters, "Iteration cap");
    solve->add_option("--tol", tol, "Residual stopping tolerance (0 disables)");
    solve->add_option("--u0", u0_csv, "Initial point, comma-separated (default: all ones)");
    solve->add_flag("--continuous", continuous, "Integrate the continuous flow instead");
    solve->add_option("--dt", dt, "Reference integrator step (with --continuous)");
    solve->add_option("--tend", t_end, "Reference integration horizon (with --continuous)");
    solve->add_option("--out", solve_out, "Output directory for trajectory.csv");

    // bench-example1
    auto* bench = app.add_subcommand("bench-example1",
                                     "2-D benchmark: fixed-time scheme vs nominal baseline");
    double bench_lambda = 0.00146;
    long bench_iters = 100;
    std::string bench_config = "data/example1.json";
    std::string bench_out;
    bench->add_option("--lambda", bench_lambda, "Fixed step size");
    bench->add_option("--iters", bench_iters, "Iteration count");
    bench->add_option("--config", bench_config, "Problem file");
    bench->add_option("--out", bench_out, "Output directory for bench_example1.csv");

    // traffic
    auto* traffic_cmd = app.add_subcommand("traffic", "Road-pricing benchmark on a network");
    std::string links_path = "data/example2_links.csv";
    std::string od_path = "data/example2_od.csv";
    double alpha = 0.5;
    FlowOptions traffic_fo;
    traffic_fo.a1 = 0.75;
    traffic_fo.a2 = 0.75;
    traffic_fo.r1 = 0.65;
    traffic_fo.r2 = 1.5;
    double traffic_lambda = 0.0;
    double traffic_harmonic = 4.0;
    long traffic_iters = 200;
    double traffic_tol = 0.0;
    std::string traffic_u0 = "25.9,60.9,7.9";
    double gap_tol = 1e-6;
    std::string traffic_out;
    traffic_cmd->add_option("--links", links_path, "Links CSV");
    traffic_cmd->add_option("--od", od_path, "OD demand CSV");
    traffic_cmd->add_option("--alpha", alpha, "Scaling factor");
    traffic_cmd->add_option("--a1", traffic_fo.a1, "Fixed-time gain a1");
    traffic_cmd->add_option("--a2", traffic_fo.a2, "Fixed-time gain a2");
    traffic_cmd->add_option("--r1", traffic_fo.r1, "Fixed-time exponent r1");
    traffic_cmd->add_option("--r2", traffic_fo.r2, "Fixed-time exponent r2");
    traffic_cmd->add_option("--lambda", traffic_lambda, "Fixed step size (overrides --harmonic)");
    traffic_cmd->add_option("--harmonic", traffic_harmonic, "Harmonic constant c");
    traffic_cmd->add_option("--iters", traffic_iters, "Outer iteration cap");
    traffic_cmd->add_option("--tol", traffic_tol, "Outer residual tolerance (0 disables)");
    traffic_cmd->add_option("--u0", traffic_u0, "Initial tolls, comma-separated");
    traffic_cmd->add_option("--gap-tol", gap_tol, "Inner equilibrium relative-gap tolerance");
    traffic_cmd->add_option("--out", traffic_out, "Output directory");

    CLI11_PARSE(app, argc, argv);

    try {
        if (check->parsed()) {
            return cmd_check(check_config, estimated, samples, radius, seed, check_fo, d0,
                             check_out);
        }
        if (solve->parsed()) {
            return cmd_solve(solve_config, solve_fo, lambda, harmonic, iters, tol, u0_csv,
                             continuous, dt, t_end, solve_out);
        }
        if (bench->parsed()) {
            return cmd_bench_example1(bench_lambda, bench_iters, bench_config, bench_out);
        }
        if (traffic_cmd->parsed()) {
            return cmd_traffic(links_path, od_path, alpha, traffic_fo,
                               traffic_lambda, traffic_lambda > 0.0 ? 0.0 : traffic_harmonic,
                               traffic_iters, traffic_tol, traffic_u0, gap_tol, traffic_out);
        }
    } catch (const NonFiniteError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 1;
}
