#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hyperball/problem.hpp"
#include "hyperball/radial.hpp"

namespace hyperball {

struct SobolevOptions {
    int n_starts = 10;
    std::uint64_t seed = 20240901;
    int max_iters = 600;
    double tol = 1e-13;
    // Extra initial iterates (nodal values on the same grid), e.g. a coarse
    // maximizer prolonged onto a refined grid.
    std::vector<Eigen::VectorXd> extra_starts;
};

// Discrete estimate of the embedding constant c_nu: the maximum of
// ||u||_{L^nu(dmu)} / ||u|| over the piecewise-linear radial space, found by
// energy-preconditioned projected ascent from random starts. A lower bound
// of the true constant; nondecreasing under grid refinement.
struct SobolevEstimate {
    double value = 0.0;
    double nu = 0.0;
    bool converged = true;
    int dim = 0;
    int M = 0;
    double R_max = 0.0;
    std::uint64_t seed = 0;
    Eigen::VectorXd maximizer; // nodal values, unit energy norm
};

SobolevEstimate estimate_sobolev_constant(const RadialGridPtr& grid, double nu,
                                          const SobolevOptions& opts = SobolevOptions{});

// h(w) = w / (q sqrt(2) ||a||_p + 2^{q/2} c_q^{q-1} ||a||_inf w^{q-1}).
double h_of_omega(double omega, double q, double norm_p, double norm_inf, double c_q);

struct HMaximum {
    double omega_star = 0.0;
    double h_max = 0.0;
};

// Closed-form maximizer of h (first-order condition), cross-checked against
// a golden-section search to 1e-8 relative.
HMaximum maximize_h(double q, double norm_p, double norm_inf, double c_q);

// Admissibility threshold q * max h / (alpha_f c_q). Throws std::domain_error
// when alpha_f = 0 (f vanishes under the growth envelope; only the trivial
// solution is certified).
double lambda_star(double q, double alpha_f, double c_q, double h_max);

// The omega-resolved threshold q h(omega) / (alpha_f c_q); <= lambda_star
// with equality at omega_star.
double lambda_star_at(double omega, double q, double alpha_f, double c_q, double norm_p,
                      double norm_inf);

// Analytic sublevel bound: alpha_f c_q ( ||a||_p sqrt(2/r)
//   + (2^{q/2} c_q^{q-1} / q) ||a||_inf r^{q/2-1} ).
// Satisfies lambda_star_at(w) * theta_majorant(w^2) = 1.
double theta_majorant(double r, double alpha_f, double c_q, double norm_p, double norm_inf,
                      double q);

// Norm-decay constant M_w: ||u_lambda||^2 < lambda * M_w for minimizers in
// the sublevel of radius w.
double norm_decay_bound(double q, double alpha_f, double c_q, double norm_p, double norm_inf,
                        double omega_bar);

struct ThetaSample {
    double value = 0.0; // lower bound of (1/r) sup { Psi : Phi < r }
    RadialFunction maximizer;
};

// Sampled lower bound of Theta(r): maximize Psi over random nonnegative bump
// combinations scaled to the sublevel boundary, refined by projected ascent.
ThetaSample theta_sample(double r, const Problem& problem, int n_candidates, std::uint64_t seed);

struct BoundCurvePoint {
    double r = 0.0;
    double theta_sampled = 0.0;
    double theta_bound = 0.0;
};

struct ThresholdReport {
    int dim = 0;
    double q = 0.0;
    double p = 0.0; // q/(q-1)
    double alpha_f = 0.0;
    double norm_p = 0.0;
    double norm_inf = 0.0;
    double norm_one = 0.0;
    double c_q_estimate = 0.0;
    std::string c_q_flag = "discrete radial estimate";
    bool sobolev_converged = true;
    double omega_star = 0.0;
    double h_max = 0.0;
    double lambda_star = 0.0;
    std::vector<BoundCurvePoint> bound_curve;
    EssInfWitness essinf;
    GridSpec grid;
    std::uint64_t seed = 0;

    nlohmann::json to_json() const;
};

// Full constant pipeline. The embedding estimate is folded together with the
// quotients of every maximizer produced along the way, so the reported
// bound_curve satisfies theta_sampled <= theta_bound row by row.
ThresholdReport compute_threshold_report(const Problem& problem, std::uint64_t seed,
                                         int theta_candidates = 48, bool with_bound_curve = true);

} // namespace hyperball
