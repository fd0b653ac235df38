#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hyperball/problem.hpp"
#include "hyperball/radial.hpp"

namespace hyperball {

struct InitSpec {
    std::string kind = "scaled_plateau"; // "scaled_plateau" | "zero" | "custom"
    // Plateau parameters; 0 means pick the default probe annulus.
    double rho = 0.0;
    double r = 0.0;
    // Scaling; 0 means take the best row of the negativity scan.
    double t = 0.0;
    std::optional<Eigen::VectorXd> custom_values;
};

struct SolveConfig {
    double lambda = 0.0;
    double omega_bar = 0.0; // sublevel radius (Phi < omega_bar^2)
    int max_iters = 5000;
    double grad_tol = 1e-8; // relative residual tolerance
    InitSpec init;
    // Metadata only: lets the report flag lambda >= lambda_star.
    double lambda_star_used = 0.0;
};

struct SolveReport {
    explicit SolveReport(RadialFunction m) : minimizer(std::move(m)) {}

    RadialFunction minimizer;
    double lambda = 0.0;
    double omega_bar = 0.0;
    double lambda_star_used = 0.0;
    double energy = 0.0;        // J_lambda(u)
    double phi = 0.0;           // Phi(u)
    double norm = 0.0;          // ||u|| = sqrt(2 Phi)
    double residual_norm = 0.0; // dual norm of the weak residual
    bool nontrivial = false;    // ||u|| > 10 * grad_tol * omega_bar
    bool sublevel_ok = false;   // phi < omega_bar^2
    bool converged = false;
    int iterations = 0;
    int projections = 0; // sublevel rescalings applied
    std::vector<std::string> warnings;

    nlohmann::json to_json() const; // scalar fields; the profile goes to CSV
};

// Energy-preconditioned descent with Armijo backtracking on J_lambda,
// restricted to the sublevel Phi < omega_bar^2 by exact radial rescaling.
// Plateau-seeded starts are solved on a grid refined at the plateau kinks.
SolveReport minimize_sublevel(const SolveConfig& cfg, const Problem& problem);

struct SweepResult {
    std::vector<SolveReport> reports;
    bool aborted = false; // a solve failed to converge; reports are partial
    // Norm-decay bound lambda * M per solve, when M_omega_bar was supplied.
    std::vector<double> decay_bounds;
};

// Sequential sweep over strictly decreasing lambdas, warm-starting each solve
// from the previous minimizer. m_omega_bar (from the threshold constants)
// enables the per-lambda norm-decay bound column.
SweepResult lambda_sweep(std::span<const double> lambdas, const Problem& problem,
                         const SolveConfig& cfg_template,
                         std::optional<double> m_omega_bar = std::nullopt);

void write_sweep_csv(std::ostream& out, const SweepResult& sweep);

struct FieldResidual {
    double estimate = 0.0;
    double std_error = 0.0;
};

// Monte Carlo pairing of the weak form with a non-radial test field:
// int <grad_H u, grad_H phi> dmu - lambda int alpha f(u) phi dmu for
// phi = (random quadratic polynomial) x (radial C^1 bump).
std::vector<FieldResidual> nonradial_residuals(const RadialFunction& u, double lambda,
                                               const Problem& problem, int n_fields,
                                               std::uint64_t n_samples, std::uint64_t seed);

// True iff the discrete dual residual is below tol * (1 + ||u||) and every
// sampled non-radial pairing is consistent with zero at three standard errors.
bool verify_weak_solution(const RadialFunction& u, double lambda, const Problem& problem,
                          double tol, std::uint64_t seed = 4242, int n_fields = 5,
                          std::uint64_t n_samples = 200000);

} // namespace hyperball
