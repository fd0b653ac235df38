#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "hyperball/problem.hpp"
#include "hyperball/rng.hpp"
#include "hyperball/threshold.hpp"

using namespace hyperball;

namespace {

// Parameterizations with A = q sqrt(2) ||a||_p and B = 2^{q/2} c^{q-1} ||a||_inf.
double norm_p_for(double A, double q) { return A / (q * std::sqrt(2.0)); }
double norm_inf_for(double B, double q, double c) {
    return B / (std::pow(2.0, 0.5 * q) * std::pow(c, q - 1.0));
}

} // namespace

TEST_CASE("h evaluations") {
    const double q = 3.0;
    const double np = norm_p_for(1.0, q);
    const double ni = norm_inf_for(1.0, q, 1.0);
    CHECK(h_of_omega(1.0, q, np, ni, 1.0) == doctest::Approx(0.5).epsilon(1e-14));

    // Dominant balance near zero: h(w) ~ w / A.
    CHECK(h_of_omega(1e-9, q, np, ni, 1.0) == doctest::Approx(1e-9).epsilon(1e-6));

    // Monotone prefix below the maximizer (omega* = 1 here).
    double prev = 0.0;
    for (double w : {0.05, 0.2, 0.5, 0.8, 0.95}) {
        const double h = h_of_omega(w, q, np, ni, 1.0);
        CHECK(h > prev);
        prev = h;
    }
    CHECK_THROWS_AS(h_of_omega(-1.0, q, np, ni, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(h_of_omega(1.0, 2.0, np, ni, 1.0), std::invalid_argument);
}

TEST_CASE("closed-form maximizer of h") {
    {
        const double q = 3.0;
        const HMaximum hm = maximize_h(q, norm_p_for(1.0, q), norm_inf_for(1.0, q, 1.0), 1.0);
        CHECK(hm.omega_star == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(hm.h_max == doctest::Approx(0.5).epsilon(1e-12));
    }
    {
        const double q = 4.0;
        const HMaximum hm = maximize_h(q, norm_p_for(2.0, q), norm_inf_for(1.0, q, 1.0), 1.0);
        CHECK(hm.omega_star == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(hm.h_max == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    }
    {
        // Doubling both coefficient groups halves the maximum and fixes the
        // maximizer.
        const double q = 3.0;
        const HMaximum base = maximize_h(q, norm_p_for(1.0, q), norm_inf_for(1.0, q, 1.0), 1.0);
        const HMaximum twice = maximize_h(q, norm_p_for(2.0, q), norm_inf_for(2.0, q, 1.0), 1.0);
        CHECK(twice.omega_star == doctest::Approx(base.omega_star).epsilon(1e-12));
        CHECK(twice.h_max == doctest::Approx(0.5 * base.h_max).epsilon(1e-12));
    }
    CHECK_THROWS_AS(maximize_h(2.0, 1.0, 1.0, 1.0), std::invalid_argument);
}

TEST_CASE("admissibility threshold") {
    CHECK(lambda_star(3.0, 1.0, 1.0, 0.5) == doctest::Approx(1.5).epsilon(1e-14));
    CHECK_THROWS_AS(lambda_star(3.0, 0.0, 1.0, 0.5), std::domain_error);

    const double q = 3.0;
    const double np = 0.3;
    const double ni = 0.05;
    const double alpha_f = 0.6;
    for (double c : {0.4, 0.9, 1.7}) {
        const HMaximum hm = maximize_h(q, np, ni, c);
        const double star = lambda_star(q, alpha_f, c, hm.h_max);
        CHECK(lambda_star_at(hm.omega_star, q, alpha_f, c, np, ni) ==
              doctest::Approx(star).epsilon(1e-12));
        // The omega-resolved curve sits below its maximum.
        RandomStream rng(3);
        for (int k = 0; k < 50; ++k) {
            const double w = hm.omega_star * std::exp(rng.uniform(-3.0, 3.0));
            CHECK(lambda_star_at(w, q, alpha_f, c, np, ni) <= star * (1.0 + 1e-12));
        }
    }

    // Enlarging c_q strictly shrinks the admissible window.
    const HMaximum h1 = maximize_h(q, np, ni, 0.8);
    const HMaximum h2 = maximize_h(q, np, ni, 1.6);
    CHECK(lambda_star(q, alpha_f, 1.6, h2.h_max) < lambda_star(q, alpha_f, 0.8, h1.h_max));
}

TEST_CASE("majorant-threshold reciprocity") {
    const double q = 3.0;
    const double np = 0.34838;
    const double ni = 0.0625;
    const double alpha_f = 0.56988;
    const double c = 0.7;
    RandomStream rng(17);
    for (int k = 0; k < 100; ++k) {
        const double w = std::exp(rng.uniform(-4.0, 4.0));
        const double product =
            lambda_star_at(w, q, alpha_f, c, np, ni) * theta_majorant(w * w, alpha_f, c, np, ni, q);
        CHECK(product == doctest::Approx(1.0).epsilon(1e-12));
    }

    // Tail growth: ~ r^{1/2} upward and r^{-1/2} downward at q = 3.
    const double big = theta_majorant(1e8, alpha_f, c, np, ni, q) /
                       theta_majorant(2.5e7, alpha_f, c, np, ni, q);
    CHECK(big == doctest::Approx(2.0).epsilon(1e-3));
    const double small = theta_majorant(1e-8, alpha_f, c, np, ni, q) /
                         theta_majorant(4e-8, alpha_f, c, np, ni, q);
    CHECK(small == doctest::Approx(2.0).epsilon(1e-3));
}

TEST_CASE("embedding estimate: homogeneity of the quotient") {
    const auto grid = RadialGrid::uniform(3, 10.0, 256);
    RandomStream rng(23);
    Eigen::VectorXd v = Eigen::VectorXd::Zero(grid->num_nodes());
    for (int i = 0; i + 1 < grid->num_nodes(); ++i) {
        const double d = (grid->nodes()[i] - 2.0);
        v(i) = std::exp(-d * d) * (1.0 + 0.1 * rng.uniform01());
    }
    const RadialFunction u(grid, v);
    const RadialFunction u5(grid, 5.0 * v);
    const double q1 = lebesgue_norm(u, 4.0) / std::sqrt(dirichlet_energy(u));
    const double q5 = lebesgue_norm(u5, 4.0) / std::sqrt(dirichlet_energy(u5));
    CHECK(q1 == doctest::Approx(q5).epsilon(1e-12));
}

TEST_CASE("embedding estimate: refinement monotonicity via prolongation") {
    SobolevOptions opts;
    opts.seed = 101;
    opts.n_starts = 6;
    opts.max_iters = 400;
    const auto coarse = RadialGrid::uniform(3, 10.0, 512);
    const SobolevEstimate ec = estimate_sobolev_constant(coarse, 4.0, opts);

    const auto fine = RadialGrid::uniform(3, 10.0, 1024);
    const RadialFunction cu(coarse, ec.maximizer);
    Eigen::VectorXd prolonged(fine->num_nodes());
    for (int i = 0; i < fine->num_nodes(); ++i) prolonged(i) = cu.value_at(fine->nodes()[i]);
    prolonged(fine->num_nodes() - 1) = 0.0;
    SobolevOptions fopts = opts;
    fopts.extra_starts.push_back(prolonged);
    const SobolevEstimate ef = estimate_sobolev_constant(fine, 4.0, fopts);

    CHECK(ec.value <= ef.value + 1e-10);
}

TEST_CASE("embedding estimate: reproducible across seed batches") {
    const auto grid = RadialGrid::uniform(3, 10.0, 2048);
    SobolevOptions a;
    a.seed = 7001;
    SobolevOptions b;
    b.seed = 9337;
    const double va = estimate_sobolev_constant(grid, 4.0, a).value;
    const double vb = estimate_sobolev_constant(grid, 4.0, b).value;
    CHECK(va > 0.0);
    CHECK(std::abs(va - vb) <= 1e-4 * va);
    CHECK_THROWS_AS(estimate_sobolev_constant(grid, 2.0, a), std::invalid_argument);
    CHECK_THROWS_AS(estimate_sobolev_constant(grid, 6.0, a), std::invalid_argument);
}

TEST_CASE("theta sampling") {
    const Problem p = make_model_problem(1.5, 3.0, GridSpec{512, 10.0, 6});

    // Vanishing reaction: Psi is identically zero.
    Problem p_zero = p;
    p_zero.nl = Nonlinearity::custom([](double) { return 0.0; }, 3.0,
                                     [](double) { return 0.0; }, 0.0);
    for (double r : {0.5, 2.0}) {
        CHECK(theta_sample(r, p_zero, 16, 1).value == 0.0);
    }

    // Growing sublevels: r * theta(r) is a sup over nested sets, and the
    // power scaling makes the growth strict and large.
    const ThetaSample t1 = theta_sample(1.0, p, 32, 77);
    const ThetaSample t4 = theta_sample(4.0, p, 32, 78);
    CHECK(t1.value > 0.0);
    CHECK(4.0 * t4.value + 1e-8 >= 1.0 * t1.value);

    // The trivial function witnesses the quotient: with Psi(0) = 0 and
    // Phi(0) = 0 the quotient at u = 0 collapses to the sampled theta.
    const double r = 1.0;
    const double sup_psi = t1.value * r;
    const double phi_quotient = (sup_psi - 0.0) / (r - 0.0);
    CHECK(phi_quotient == doctest::Approx(t1.value).epsilon(1e-15));

    CHECK_THROWS_AS(theta_sample(-1.0, p, 16, 1), std::invalid_argument);
}

TEST_CASE("threshold report is internally consistent") {
    const Problem p = make_model_problem(1.5, 3.0, GridSpec{512, 10.0, 6});
    const ThresholdReport rep = compute_threshold_report(p, 2025);

    CHECK(rep.p == doctest::Approx(1.5).epsilon(1e-15));
    CHECK(rep.c_q_flag == "discrete radial estimate");
    CHECK(rep.lambda_star ==
          doctest::Approx(p.q * rep.h_max / (rep.alpha_f * rep.c_q_estimate)).epsilon(1e-14));

    const HMaximum hm = maximize_h(p.q, rep.norm_p, rep.norm_inf, rep.c_q_estimate);
    CHECK(rep.omega_star == doctest::Approx(hm.omega_star).epsilon(1e-14));
    CHECK(rep.h_max == doctest::Approx(hm.h_max).epsilon(1e-14));

    REQUIRE(rep.bound_curve.size() == 5);
    for (const auto& pt : rep.bound_curve) {
        CHECK(pt.theta_sampled <= pt.theta_bound);
        CHECK(pt.theta_bound == doctest::Approx(theta_majorant(pt.r, rep.alpha_f, rep.c_q_estimate,
                                                               rep.norm_p, rep.norm_inf, p.q))
                                    .epsilon(1e-14));
    }

    // Bound chain at the operative radius: sampled <= majorant < 1/lambda
    // for every lambda below the threshold.
    const double r_star = rep.omega_star * rep.omega_star;
    const double majorant = theta_majorant(r_star, rep.alpha_f, rep.c_q_estimate, rep.norm_p,
                                           rep.norm_inf, p.q);
    const ThetaSample sample = theta_sample(r_star, p, 32, 4321);
    CHECK(sample.value <= majorant * (1.0 + 1e-12));
    for (double frac : {0.1, 0.5, 0.9}) {
        const double lambda = frac * rep.lambda_star;
        CHECK(majorant < 1.0 / lambda);
    }

    // Embedding certificate holds for functions produced by the suite.
    const double c = rep.c_q_estimate;
    const double en = std::sqrt(dirichlet_energy(sample.maximizer));
    if (en > 0.0) {
        CHECK(lebesgue_norm(sample.maximizer, p.q) <= c * en * (1.0 + 1e-9));
    }

    const nlohmann::json j = rep.to_json();
    CHECK(j.at("lambda_star").get<double>() == rep.lambda_star);
    CHECK(j.at("grid").at("M").get<int>() == 512);
}
