// Batch front end: one process, one command.
//
//   hyperball --command <threshold|testfn|solve|sweep|example5|geomcheck>
//             [--problem decl.json] [--out dir] [--seed N] [--set key=value]...
//
// Exit codes: 0 success, 1 validation failure, 2 numerical non-convergence.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "hyperball/geometry.hpp"
#include "hyperball/problem.hpp"
#include "hyperball/report_io.hpp"
#include "hyperball/rng.hpp"
#include "hyperball/solver.hpp"
#include "hyperball/testfn.hpp"
#include "hyperball/threshold.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace hyperball;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitNonConvergence = 2;

json builtin_model_declaration() {
    return json{{"dim", 4},
                {"q", 3.0},
                {"nonlinearity", {{"kind", "power"}, {"r", 1.5}}},
                {"weight", {{"kind", "conformal_power"}, {"exponent", 4.0}}},
                {"grid", {{"M", 2048}, {"R_max", 10.0}, {"quad_order", 6}}}};
}

// Applies "a.b.c=value" onto the declaration; values parsed as JSON when
// possible, kept as strings otherwise.
void apply_override(json& decl, const std::string& setting) {
    const auto eq = setting.find('=');
    if (eq == std::string::npos || eq == 0) {
        throw std::invalid_argument("--set expects key=value, got: " + setting);
    }
    const std::string key = setting.substr(0, eq);
    const std::string raw = setting.substr(eq + 1);
    json value;
    try {
        value = json::parse(raw);
    } catch (const json::parse_error&) {
        value = raw;
    }
    json* node = &decl;
    std::istringstream path(key);
    std::string part;
    std::vector<std::string> parts;
    while (std::getline(path, part, '.')) {
        if (part.empty()) throw std::invalid_argument("--set: empty path component in " + key);
        parts.push_back(part);
    }
    for (std::size_t i = 0; i + 1 < parts.size(); ++i) node = &(*node)[parts[i]];
    (*node)[parts.back()] = value;
}

struct Resolved {
    json decl;           // full declaration including extras
    Problem problem;
    std::uint64_t seed = 0;
    fs::path out_dir;
};

json config_echo(const Resolved& rc, const std::string& command) {
    return json{{"command", command}, {"seed", rc.seed}, {"declaration", rc.decl}};
}

double resolve_lambda(const Resolved& rc, const ThresholdReport& report) {
    if (rc.decl.contains("lambda")) return rc.decl.at("lambda").get<double>();
    return 0.5 * report.lambda_star;
}

double resolve_omega_bar(const Resolved& rc, const ThresholdReport& report) {
    if (rc.decl.contains("omega_bar")) return rc.decl.at("omega_bar").get<double>();
    return report.omega_star;
}

SolveConfig make_solve_config(const Resolved& rc, const ThresholdReport& report) {
    SolveConfig cfg;
    cfg.lambda = resolve_lambda(rc, report);
    cfg.omega_bar = resolve_omega_bar(rc, report);
    cfg.lambda_star_used = report.lambda_star;
    if (rc.decl.contains("solver")) {
        const json& s = rc.decl.at("solver");
        cfg.max_iters = s.value("max_iters", cfg.max_iters);
        cfg.grad_tol = s.value("grad_tol", cfg.grad_tol);
        if (s.contains("init")) {
            const json& init = s.at("init");
            cfg.init.kind = init.value("kind", cfg.init.kind);
            cfg.init.rho = init.value("rho", 0.0);
            cfg.init.r = init.value("r", 0.0);
            cfg.init.t = init.value("t", 0.0);
        }
    }
    if (!(cfg.lambda > 0.0)) throw std::invalid_argument("lambda must be > 0");
    if (!(cfg.omega_bar > 0.0)) throw std::invalid_argument("omega_bar must be > 0");
    return cfg;
}

std::vector<double> resolve_sweep_lambdas(const Resolved& rc, const ThresholdReport& report) {
    if (rc.decl.contains("sweep") && rc.decl.at("sweep").contains("lambdas")) {
        return rc.decl.at("sweep").at("lambdas").get<std::vector<double>>();
    }
    int count = 8;
    double divisor = 2.0;
    if (rc.decl.contains("sweep")) {
        count = rc.decl.at("sweep").value("count", count);
        divisor = rc.decl.at("sweep").value("divisor", divisor);
    }
    if (count < 1 || !(divisor > 1.0)) {
        throw std::invalid_argument("sweep: count must be >= 1 and divisor > 1");
    }
    std::vector<double> lambdas;
    double l = report.lambda_star;
    for (int k = 0; k < count; ++k) {
        l /= divisor;
        lambdas.push_back(l);
    }
    return lambdas;
}

std::pair<double, double> resolve_plateau(const Resolved& rc) {
    double rho = 0.0;
    double r = 0.0;
    if (rc.decl.contains("testfn")) {
        rho = rc.decl.at("testfn").value("rho", 0.0);
        r = rc.decl.at("testfn").value("r", 0.0);
    }
    if (rho <= 0.0 || r <= 0.0) {
        return default_plateau_params(rc.problem.alpha, rc.problem.spec.R_max);
    }
    return {rho, r};
}

int cmd_threshold(const Resolved& rc) {
    ThresholdReport report = compute_threshold_report(rc.problem, rc.seed);
    json out = report.to_json();
    out["config"] = config_echo(rc, "threshold");
    write_json_file((rc.out_dir / "threshold.json").string(), out);
    std::cout << "threshold: lambda_star = " << format_double(report.lambda_star)
              << " (omega_star = " << format_double(report.omega_star) << ")\n";
    return kExitOk;
}

int cmd_testfn(const Resolved& rc) {
    ThresholdReport report = compute_threshold_report(rc.problem, rc.seed, 48, false);
    const double lambda = resolve_lambda(rc, report);
    const double omega_bar = resolve_omega_bar(rc, report);
    const auto [rho, r] = resolve_plateau(rc);
    const PlateauFunction w = build_plateau(rho, r, rc.problem.dim, rc.problem.spec);
    const auto ts = default_t_sequence();
    const RatioDiagnostic ratio = ratio_blowup_diagnostic(w, rc.problem.nl, rc.problem.alpha, ts);
    const NegativityDiagnostic neg =
        negativity_diagnostic(w, rc.problem.nl, rc.problem.alpha, lambda, omega_bar, ts);

    std::ostringstream csv;
    write_diagnostic_csv(csv, ratio, neg);
    write_text_file((rc.out_dir / "testfn.csv").string(), csv.str());

    json out{{"plateau", {{"rho", rho}, {"r", r}}},
             {"lambda", lambda},
             {"omega_bar", omega_bar},
             {"blowup_detected", ratio.blowup_detected},
             {"ratios_strictly_increasing", ratio.ratios_strictly_increasing}};
    out["first_negative_t"] = neg.first_negative_t ? json(*neg.first_negative_t) : json(nullptr);
    out["config"] = config_echo(rc, "testfn");
    write_json_file((rc.out_dir / "testfn.json").string(), out);
    std::cout << "testfn: blowup_detected = " << (ratio.blowup_detected ? "true" : "false") << "\n";
    return kExitOk;
}

int run_solve(const Resolved& rc, const std::string& command, ThresholdReport& report,
              SolveReport& solved) {
    report = compute_threshold_report(rc.problem, rc.seed, 48, false);
    const SolveConfig cfg = make_solve_config(rc, report);
    solved = minimize_sublevel(cfg, rc.problem);

    write_csv(solved.minimizer, (rc.out_dir / "minimizer.csv").string());
    json out = solved.to_json();
    out["lambda_star"] = report.lambda_star;
    out["c_q_estimate"] = report.c_q_estimate;
    out["c_q_flag"] = report.c_q_flag;
    out["minimizer_csv"] = "minimizer.csv";
    out["solver"] = {{"grad_tol", cfg.grad_tol},
                     {"max_iters", cfg.max_iters},
                     {"init", cfg.init.kind}};
    out["grid"] = {{"M", rc.problem.spec.M},
                   {"R_max", rc.problem.spec.R_max},
                   {"quad_order", rc.problem.spec.quad_order}};
    out["config"] = config_echo(rc, command);
    write_json_file((rc.out_dir / "solve.json").string(), out);
    std::cout << "solve: lambda = " << format_double(solved.lambda)
              << " nontrivial = " << (solved.nontrivial ? "true" : "false")
              << " energy = " << format_double(solved.energy)
              << " residual = " << format_double(solved.residual_norm) << "\n";
    if (solved.converged) return kExitOk;
    // Above the threshold nothing is guaranteed; the warning record in the
    // report is the documented outcome, not a failure.
    return solved.lambda >= report.lambda_star ? kExitOk : kExitNonConvergence;
}

int cmd_solve(const Resolved& rc) {
    ThresholdReport report;
    SolveReport solved(RadialFunction::zero(rc.problem.grid));
    return run_solve(rc, "solve", report, solved);
}

int run_sweep(const Resolved& rc, const std::string& command, const ThresholdReport& report) {
    const std::vector<double> lambdas = resolve_sweep_lambdas(rc, report);
    for (std::size_t i = 1; i < lambdas.size(); ++i) {
        if (!(lambdas[i] < lambdas[i - 1])) {
            throw std::invalid_argument("sweep: lambda list must be strictly decreasing");
        }
    }
    SolveConfig cfg = make_solve_config(rc, report);
    const double m_bound = norm_decay_bound(rc.problem.q, report.alpha_f, report.c_q_estimate,
                                            report.norm_p, report.norm_inf, cfg.omega_bar);
    const SweepResult sweep = lambda_sweep(lambdas, rc.problem, cfg, m_bound);

    std::ostringstream csv;
    write_sweep_csv(csv, sweep);
    write_text_file((rc.out_dir / "sweep.csv").string(), csv.str());

    json rows = json::array();
    for (std::size_t i = 0; i < sweep.reports.size(); ++i) {
        const auto& r = sweep.reports[i];
        json row = r.to_json();
        row["norm_decay_bound"] = sweep.decay_bounds[i];
        row["bound_ok"] = r.norm * r.norm < sweep.decay_bounds[i];
        rows.push_back(row);
    }
    json out{{"aborted", sweep.aborted},
             {"m_omega_bar", m_bound},
             {"lambda_star", report.lambda_star},
             {"runs", rows}};
    out["config"] = config_echo(rc, command);
    write_json_file((rc.out_dir / "sweep.json").string(), out);
    std::cout << "sweep: " << sweep.reports.size() << " runs"
              << (sweep.aborted ? " (aborted)" : "") << "\n";
    return sweep.aborted ? kExitNonConvergence : kExitOk;
}

int cmd_sweep(const Resolved& rc) {
    const ThresholdReport report = compute_threshold_report(rc.problem, rc.seed, 48, false);
    return run_sweep(rc, "sweep", report);
}

int cmd_example5(const Resolved& rc) {
    // Full pipeline on the model problem: constants, diagnostics, one solve,
    // then the norm-decay sweep.
    ThresholdReport report = compute_threshold_report(rc.problem, rc.seed);
    json tj = report.to_json();
    tj["config"] = config_echo(rc, "example5");
    write_json_file((rc.out_dir / "threshold.json").string(), tj);

    const int testfn_rc = cmd_testfn(rc);
    if (testfn_rc != kExitOk) return testfn_rc;

    ThresholdReport solve_report;
    SolveReport solved(RadialFunction::zero(rc.problem.grid));
    const int solve_rc = run_solve(rc, "example5", solve_report, solved);

    const int sweep_rc = run_sweep(rc, "example5", report);

    json out{{"lambda_star", report.lambda_star},
             {"omega_star", report.omega_star},
             {"c_q_estimate", report.c_q_estimate},
             {"lambda", solved.lambda},
             {"nontrivial", solved.nontrivial},
             {"energy", solved.energy},
             {"norm", solved.norm},
             {"warnings", solved.warnings}};
    out["config"] = config_echo(rc, "example5");
    write_json_file((rc.out_dir / "example5.json").string(), out);

    if (solve_rc != kExitOk) return solve_rc;
    return sweep_rc;
}

struct GeomCheck {
    std::string name;
    bool passed;
    double worst;
};

int cmd_geomcheck(const Resolved& rc) {
    const int dim = rc.decl.value("dim", 3);
    RandomStream rng(rc.seed);
    std::vector<GeomCheck> checks;

    auto random_point = [&](double max_norm) {
        Eigen::VectorXd x(dim);
        for (int i = 0; i < dim; ++i) x(i) = rng.normal();
        const double radius = max_norm * std::pow(rng.uniform01(), 1.0 / dim);
        return BallPoint(x * (radius / x.norm()));
    };

    {
        double worst_sym = 0.0;
        double worst_tri = 0.0;
        for (int k = 0; k < 1000; ++k) {
            const BallPoint a = random_point(0.95);
            const BallPoint b = random_point(0.95);
            const BallPoint c = random_point(0.95);
            const double dab = geodesic_distance(a, b);
            const double dba = geodesic_distance(b, a);
            const double dac = geodesic_distance(a, c);
            const double dcb = geodesic_distance(c, b);
            worst_sym = std::max(worst_sym, std::abs(dab - dba));
            worst_tri = std::max(worst_tri, dab - (dac + dcb));
        }
        checks.push_back({"distance_symmetry", worst_sym <= 1e-12, worst_sym});
        checks.push_back({"triangle_inequality", worst_tri <= 1e-10, worst_tri});
    }
    {
        bool ok = true;
        for (int k = 0; k < 1000; ++k) {
            const BallPoint p = random_point(0.98);
            const double r = rng.uniform(0.05, 0.98);
            const bool inside_geo = geodesic_distance_origin(p) < std::log((1.0 + r) / (1.0 - r));
            const bool inside_euc = p.euclidean_norm() < r;
            if (inside_geo != inside_euc) ok = false;
        }
        checks.push_back({"ball_correspondence", ok, 0.0});
    }
    {
        double worst = 0.0;
        for (int k = 0; k < 200; ++k) {
            const Rotation g = random_rotation(dim, rng);
            const BallPoint a = random_point(0.95);
            const BallPoint b = random_point(0.95);
            worst = std::max(worst, std::abs(geodesic_distance(apply_rotation(g, a), apply_rotation(g, b)) -
                                             geodesic_distance(a, b)));
        }
        checks.push_back({"rotation_invariance", worst <= 1e-10, worst});
    }
    {
        double worst = 0.0;
        for (int k = 0; k < 500; ++k) {
            const BallPoint p = random_point(0.98);
            worst = std::max(worst, std::abs(geodesic_distance(BallPoint::origin(dim), p) -
                                             geodesic_distance_origin(p)));
        }
        checks.push_back({"origin_consistency", worst <= 1e-12, worst});
    }
    {
        // Radial quadrature against Monte Carlo for a decaying radial field.
        const auto grid = RadialGrid::uniform(dim, 6.0, 512, 6);
        const double omega = unit_sphere_area(dim);
        const double quad =
            omega * integrate_radial(*grid, [](double rho) { return std::exp(-rho); });
        const MonteCarloResult mc = montecarlo_integral_dmu(
            dim,
            [](const BallPoint& p) { return std::exp(-geodesic_distance_origin(p)); },
            400000, std::tanh(3.0), rng.next_u64());
        const double diff = std::abs(mc.estimate - quad);
        checks.push_back({"montecarlo_vs_quadrature", diff <= 3.0 * mc.std_error + 1e-9, diff});
    }

    bool all = true;
    json rows = json::array();
    for (const auto& c : checks) {
        all = all && c.passed;
        rows.push_back({{"check", c.name}, {"passed", c.passed}, {"worst", c.worst}});
        std::cout << (c.passed ? "[PASS] " : "[FAIL] ") << c.name << "\n";
    }
    json out{{"dim", dim}, {"all_passed", all}, {"checks", rows}};
    out["config"] = config_echo(rc, "geomcheck");
    write_json_file((rc.out_dir / "geomcheck.json").string(), out);
    return all ? kExitOk : kExitNonConvergence;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Variational solver for weighted semilinear problems on the Poincare ball"};
    std::string command;
    std::string problem_path;
    std::string out_dir = ".";
    std::uint64_t seed = 20240614;
    std::vector<std::string> overrides;
    app.add_option("--command", command, "threshold|testfn|solve|sweep|example5|geomcheck")
        ->required();
    app.add_option("--problem", problem_path, "problem declaration JSON");
    app.add_option("--out", out_dir, "output directory");
    app.add_option("--seed", seed, "random seed");
    app.add_option("--set", overrides, "override declaration entries, key=value");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitValidation;
    }

    try {
        Resolved rc;
        rc.seed = seed;
        rc.out_dir = out_dir;
        fs::create_directories(rc.out_dir);

        if (!problem_path.empty()) {
            std::ifstream in(problem_path);
            if (!in) throw std::invalid_argument("cannot read problem file: " + problem_path);
            in >> rc.decl;
        } else if (command == "example5" || command == "geomcheck") {
            rc.decl = builtin_model_declaration();
        } else {
            throw std::invalid_argument("--problem is required for command '" + command + "'");
        }
        for (const auto& setting : overrides) apply_override(rc.decl, setting);

        if (command != "geomcheck") rc.problem = problem_from_json(rc.decl);

        if (command == "threshold") return cmd_threshold(rc);
        if (command == "testfn") return cmd_testfn(rc);
        if (command == "solve") return cmd_solve(rc);
        if (command == "sweep") return cmd_sweep(rc);
        if (command == "example5") return cmd_example5(rc);
        if (command == "geomcheck") return cmd_geomcheck(rc);
        throw std::invalid_argument("unknown command: " + command);
    } catch (const std::invalid_argument& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNonConvergence;
    }
}
