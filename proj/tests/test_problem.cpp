#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "hyperball/geometry.hpp"
#include "hyperball/problem.hpp"
#include "hyperball/testfn.hpp"
#include "hyperball/threshold.hpp"
#include "oracles.hpp"

using namespace hyperball;
using nlohmann::json;

namespace {

RadialFunction random_bumps(const RadialGridPtr& grid, std::uint64_t seed, double lo = 0.5,
                            double hi_frac = 0.6) {
    RandomStream rng(seed);
    const int n = grid->num_nodes();
    Eigen::VectorXd v = Eigen::VectorXd::Zero(n);
    for (int b = 0; b < 3; ++b) {
        const double center = rng.uniform(lo, hi_frac * grid->R_max());
        const double width = rng.uniform(0.3, 1.2);
        const double amp = rng.uniform(-1.0, 1.0);
        for (int i = 0; i < n - 1; ++i) {
            const double d = (grid->nodes()[i] - center) / width;
            v(i) += amp * std::exp(-0.5 * d * d);
        }
    }
    v(n - 1) = 0.0;
    return RadialFunction(grid, v);
}

} // namespace

TEST_CASE("growth constant search") {
    const auto zero = compute_alpha_f([](double) { return 0.0; }, 3.0, 10.0, 2000);
    CHECK(zero.value == 0.0);

    const auto constant = compute_alpha_f([](double) { return 1.0; }, 3.0, 10.0, 2000);
    CHECK(constant.value == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::abs(constant.argmax) <= 1e-6);
    CHECK_FALSE(constant.boundary_maximizer);

    // Power reaction r = 3/2, q = 3: stationarity of t^{1/2}/(1+t^2) puts the
    // maximizer at 3^{-1/2} with value 3^{3/4}/4.
    const auto power = compute_alpha_f(
        [](double t) { return std::copysign(std::sqrt(std::abs(t)), t); }, 3.0, 100.0, 4000);
    CHECK(power.value == doctest::Approx(std::pow(3.0, 0.75) / 4.0).epsilon(1e-10));
    CHECK(std::abs(power.argmax) == doctest::Approx(1.0 / std::sqrt(3.0)).epsilon(1e-5));

    CHECK_THROWS_AS(compute_alpha_f([](double) { return 1.0; }, 3.0, -1.0, 2000),
                    std::invalid_argument);
    CHECK_THROWS_AS(compute_alpha_f([](double) { return 1.0; }, 3.0, 1.0, 10),
                    std::invalid_argument);

    // Supremum at infinity flags the boundary.
    const auto super = compute_alpha_f([](double t) { return t * t * t * t; }, 3.0, 1e3, 2000);
    CHECK(super.boundary_maximizer);
}

TEST_CASE("power nonlinearity") {
    const Nonlinearity nl = Nonlinearity::power(1.5, 3.0);
    CHECK(nl.f(0.0) == 0.0);
    CHECK(nl.f(4.0) == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(nl.f(-4.0) == doctest::Approx(-2.0).epsilon(1e-15));
    CHECK(nl.F(0.0) == 0.0);
    CHECK(nl.F(1.0) == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
    CHECK(nl.alpha_f() == doctest::Approx(std::pow(3.0, 0.75) / 4.0).epsilon(1e-14));

    // Closed-form growth constant agrees with the generic search.
    const auto numeric = compute_alpha_f([&nl](double t) { return nl.f(t); }, 3.0, 100.0, 4000);
    CHECK(nl.alpha_f() == doctest::Approx(numeric.value).epsilon(1e-9));

    CHECK_THROWS_AS(Nonlinearity::power(0.5, 3.0), std::invalid_argument);
    CHECK_THROWS_AS(Nonlinearity::power(3.5, 3.0), std::invalid_argument);
}

TEST_CASE("nonlinearity invariants: primitive and growth envelope") {
    const Nonlinearity nl = Nonlinearity::power(1.5, 3.0);
    // F' = f by central differences away from the origin.
    for (int k = 0; k < 100; ++k) {
        const double t = -5.0 + 10.0 * (k + 0.5) / 100.0;
        if (std::abs(t) < 0.05) continue;
        const double h = 1e-6;
        const double fd = (nl.F(t + h) - nl.F(t - h)) / (2.0 * h);
        CHECK(fd == doctest::Approx(nl.f(t)).epsilon(1e-6));
    }
    // alpha_f dominates the growth quotient on a wide sample.
    RandomStream rng(5);
    for (int k = 0; k < 10000; ++k) {
        const double t = rng.uniform(-1e3, 1e3);
        const double quotient = std::abs(nl.f(t)) / (1.0 + std::pow(std::abs(t), nl.q() - 1.0));
        CHECK(quotient <= nl.alpha_f() * (1.0 + 1e-12));
    }
}

TEST_CASE("tabulated nonlinearity") {
    // f(t) = t sampled on a coarse table: the interpolant is exact and the
    // primitive must reproduce t^2/2.
    std::vector<std::pair<double, double>> samples;
    for (int i = -10; i <= 10; ++i) samples.emplace_back(0.5 * i, 0.5 * i);
    const Nonlinearity nl = Nonlinearity::from_table(samples, 3.0);
    CHECK(nl.f(0.3) == doctest::Approx(0.3).epsilon(1e-12));
    CHECK(nl.F(2.0) == doctest::Approx(2.0).epsilon(1e-9));
    CHECK(nl.F(-2.0) == doctest::Approx(2.0).epsilon(1e-9));
    CHECK(nl.F(0.0) == 0.0);
}

TEST_CASE("conformal power weight norms against closed forms") {
    const RadialWeight alpha = RadialWeight::conformal_power(4, 4.0, 3.0);
    CHECK(alpha.p() == doctest::Approx(1.5).epsilon(1e-15));
    // The weight cancels the volume density, so the total mass is the
    // Euclidean 4-ball volume.
    CHECK(alpha.norm_one() == doctest::Approx(0.5 * kPi * kPi).epsilon(1e-10));
    CHECK(alpha.norm_inf() == doctest::Approx(1.0 / 16.0).epsilon(1e-12));
    // int alpha^{3/2} dmu = pi^2/48 by the half-angle substitution.
    CHECK(alpha.norm_p() ==
          doctest::Approx(std::pow(kPi * kPi / 48.0, 2.0 / 3.0)).epsilon(1e-10));

    CHECK(alpha(0.0) == doctest::Approx(1.0 / 16.0).epsilon(1e-15));
    CHECK_THROWS_AS(RadialWeight::conformal_power(4, 2.0, 3.0), std::invalid_argument);
}

TEST_CASE("ess-inf witness honors the profile") {
    const RadialWeight alpha = RadialWeight::conformal_power(4, 4.0, 3.0);
    const EssInfWitness w = alpha.witness();
    CHECK(w.alpha0 > 0.0);
    CHECK(w.r > 0.0);
    CHECK(w.rho > w.r);
    double min_sampled = alpha(w.rho - w.r);
    for (int i = 0; i <= 2000; ++i) {
        const double rho = w.rho - w.r + 2.0 * w.r * static_cast<double>(i) / 2000.0;
        min_sampled = std::min(min_sampled, alpha(rho));
    }
    CHECK(w.alpha0 <= min_sampled);
}

TEST_CASE("tabulated weight") {
    std::vector<std::pair<double, double>> profile = {{0.0, 1.0}, {2.0, 1.0}, {3.0, 0.0}};
    const RadialWeight alpha = RadialWeight::from_table(3, profile, 3.0);
    CHECK(alpha(1.0) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(alpha(2.5) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(alpha(4.0) == 0.0);
    CHECK(alpha.norm_inf() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(alpha.norm_one() > 0.0);
    CHECK(alpha.witness().alpha0 > 0.0);

    profile.push_back({2.5, -0.5});
    CHECK_THROWS_AS(RadialWeight::from_table(3, profile, 3.0), std::invalid_argument);
}

TEST_CASE("problem declarations") {
    const json decl = {{"dim", 4},
                       {"q", 3.0},
                       {"nonlinearity", {{"kind", "power"}, {"r", 1.5}}},
                       {"weight", {{"kind", "conformal_power"}, {"exponent", 4.0}}},
                       {"grid", {{"M", 64}, {"R_max", 10.0}, {"quad_order", 6}}}};
    const Problem p = problem_from_json(decl);
    CHECK(p.dim == 4);
    CHECK(p.grid->num_cells() == 64);
    CHECK(p.nl.is_power());
    CHECK(p.alpha.kind() == "conformal_power");

    json bad = decl;
    bad.erase("weight");
    CHECK_THROWS_AS(problem_from_json(bad), std::invalid_argument);
    bad = decl;
    bad["q"] = 5.0; // 2* = 4 at N = 4
    CHECK_THROWS_AS(problem_from_json(bad), std::invalid_argument);
    bad = decl;
    bad["nonlinearity"]["kind"] = "mystery";
    CHECK_THROWS_AS(problem_from_json(bad), std::invalid_argument);

    json tabled = decl;
    tabled["weight"] = {{"kind", "table"},
                        {"samples", json::array({json::array({0.0, 1.0}), json::array({3.0, 0.0})})}};
    tabled["nonlinearity"] = {
        {"kind", "table"},
        {"samples", json::array({json::array({-1.0, -1.0}), json::array({1.0, 1.0})})}};
    const Problem pt = problem_from_json(tabled);
    CHECK(pt.alpha.kind() == "table");
    CHECK(pt.nl.kind() == "table");

    const json echo = problem_to_json(p);
    CHECK(echo.at("dim") == 4);
    CHECK(echo.at("nonlinearity").at("r") == 1.5);
}

TEST_CASE("Phi agrees with half the energy") {
    const Problem p = make_model_problem(1.5, 3.0, GridSpec{128, 10.0, 6});
    CHECK(Phi(RadialFunction::zero(p.grid)) == 0.0);
    const RadialFunction u = random_bumps(p.grid, 91);
    CHECK(Phi(u) == doctest::Approx(0.5 * dirichlet_energy(u)).epsilon(1e-14));
    const RadialFunction tu(p.grid, 3.0 * u.values());
    CHECK(Phi(tu) == doctest::Approx(9.0 * Phi(u)).epsilon(1e-13));

    const PlateauFunction w = build_plateau(2.0, 1.0, 3, GridSpec{128, 10.0, 6});
    const double expected =
        0.5 * 4.0 * kPi * 4.0 * (oracle::int_sinh2(1.0, 1.5) + oracle::int_sinh2(2.5, 3.0));
    CHECK(Phi(w.fn) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("Psi: zero, homogeneity, Monte Carlo cross-check") {
    const Problem p = make_model_problem(1.5, 3.0, GridSpec{256, 10.0, 6});
    CHECK(Psi(RadialFunction::zero(p.grid), p.alpha, p.nl) == 0.0);

    const RadialFunction u = random_bumps(p.grid, 101);
    const RadialFunction u4(p.grid, 4.0 * u.values());
    // |4u|^{3/2} = 8 |u|^{3/2} pointwise.
    CHECK(Psi(u4, p.alpha, p.nl) == doctest::Approx(8.0 * Psi(u, p.alpha, p.nl)).epsilon(1e-10));

    // Unit profile on the geodesic ball of radius 1 ramping to 0 at 2.
    const auto grid = RadialGrid::uniform_with_knots(4, 10.0, 256, std::array<double, 2>{1.0, 2.0});
    const RadialFunction cone = RadialFunction::sample(
        grid, [](double rho) { return std::min(1.0, std::max(0.0, 2.0 - rho)); });
    const double psi = Psi(cone, p.alpha, p.nl);
    const auto& nl = p.nl;
    const auto& alpha = p.alpha;
    const MonteCarloResult mc = montecarlo_integral_dmu(
        4,
        [&](const BallPoint& pt) {
            const double rho = geodesic_distance_origin(pt);
            return alpha(rho) * nl.F(cone.value_at(rho));
        },
        300000, std::tanh(1.05), 311);
    CHECK(std::abs(psi - mc.estimate) <= 3.0 * mc.std_error);
}

TEST_CASE("J_lambda algebra") {
    const Problem p = make_model_problem(1.5, 3.0, GridSpec{128, 10.0, 6});
    CHECK(J_lambda(RadialFunction::zero(p.grid), 1.0, p.alpha, p.nl) == 0.0);
    const RadialFunction u = random_bumps(p.grid, 107);
    CHECK(J_lambda(u, 0.0, p.alpha, p.nl) == doctest::Approx(Phi(u)).epsilon(1e-14));
    const double j1 = J_lambda(u, 0.7, p.alpha, p.nl);
    const double j2 = J_lambda(u, 1.4, p.alpha, p.nl);
    CHECK(j2 == doctest::Approx(2.0 * j1 - Phi(u)).epsilon(1e-12));
}

TEST_CASE("weak residual: critical and non-critical trivial functions") {
    const Problem p = make_model_problem(1.5, 3.0, GridSpec{128, 10.0, 6});
    const WeakResidual at_zero =
        weak_residual(RadialFunction::zero(p.grid), 0.8, p.alpha, p.nl);
    CHECK(at_zero.vector.cwiseAbs().maxCoeff() == 0.0);
    CHECK(at_zero.norm == 0.0);

    // f constant: the trivial function is not a solution.
    const Nonlinearity ones = Nonlinearity::custom([](double) { return 1.0; }, 3.0,
                                                   [](double t) { return t; }, 1.0);
    const WeakResidual forced = weak_residual(RadialFunction::zero(p.grid), 0.8, p.alpha, ones);
    CHECK(forced.norm > 0.0);
}

TEST_CASE("weak residual matches directional derivatives of the energy") {
    const Problem p = make_model_problem(1.5, 3.0, GridSpec{128, 10.0, 6});
    const double lambda = 0.8;
    RandomStream rng(113);
    int tested = 0;
    for (std::uint64_t seed = 200; tested < 20; ++seed) {
        RadialFunction u = random_bumps(p.grid, seed);
        // Normalize to order-one energy so the finite differences of J are
        // well conditioned at h = 1e-6.
        const double phi = Phi(u);
        if (!(phi > 0.0)) continue;
        u = RadialFunction(p.grid, u.values() / std::sqrt(2.0 * phi));
        const WeakResidual wr = weak_residual(u, lambda, p.alpha, p.nl);
        const double r_max = wr.vector.cwiseAbs().maxCoeff();

        const int free = p.grid->num_nodes() - 1;
        int node = static_cast<int>(rng.uniform01() * free);
        if (std::abs(wr.vector(node)) < 1e-3 * r_max) continue; // stay away from degenerate entries

        const double h = 1e-6;
        Eigen::VectorXd vp = u.values();
        Eigen::VectorXd vm = u.values();
        vp(node) += h;
        vm(node) -= h;
        const double fd = (J_lambda(RadialFunction(p.grid, vp), lambda, p.alpha, p.nl) -
                           J_lambda(RadialFunction(p.grid, vm), lambda, p.alpha, p.nl)) /
                          (2.0 * h);
        const double denom = std::max(std::abs(fd), std::abs(wr.vector(node)));
        CHECK(std::abs(fd - wr.vector(node)) <= 1e-6 * denom);
        ++tested;
    }
    CHECK(tested == 20);
}

TEST_CASE("growth bound transfer on the sublevel") {
    const Problem p = make_model_problem(1.5, 3.0, GridSpec{256, 10.0, 6});
    SobolevOptions sopts;
    sopts.seed = 9001;
    sopts.n_starts = 6;
    const double c_q = estimate_sobolev_constant(p.grid, p.q, sopts).value;
    const double r_hat = 1.0;
    const double alpha_f = p.nl.alpha_f();
    const double omega = unit_sphere_area(p.dim);

    for (std::uint64_t seed = 400; seed < 410; ++seed) {
        RadialFunction u = random_bumps(p.grid, seed);
        const double phi = Phi(u);
        if (!(phi > 0.0)) continue;
        u = RadialFunction(p.grid, u.values() * std::sqrt(0.9 * r_hat / phi));
        REQUIRE(Phi(u) < r_hat);
        // Sublevel gradient bound is exact algebra.
        CHECK(dirichlet_energy(u) < 2.0 * r_hat);

        const double psi = Psi(u, p.alpha, p.nl);
        const auto& alpha = p.alpha;
        const double l1 = weighted_abs_integral(u, [&alpha](double rho) { return alpha(rho); });
        const double lq_q = omega * integrate_radial_values(u, [&](double rho, double uval) {
            return alpha(rho) * std::pow(std::abs(uval), p.q);
        });
        const double middle = alpha_f * l1 + alpha_f / p.q * lq_q;
        const double outer =
            alpha_f * c_q *
            (p.alpha.norm_p() * std::sqrt(2.0 * r_hat) +
             std::pow(c_q, p.q - 1.0) / p.q * p.alpha.norm_inf() * std::pow(2.0 * r_hat, 0.5 * p.q));
        CHECK(psi <= middle * (1.0 + 1e-12));
        CHECK(middle <= outer * (1.0 + 1e-12));
    }
}

TEST_CASE("scaling structure of J along a ray") {
    const Problem p = make_model_problem(1.5, 3.0, GridSpec{256, 10.0, 6});
    RadialFunction u = random_bumps(p.grid, 501);
    u = RadialFunction(p.grid, u.values().cwiseAbs());
    const double phi = Phi(u);
    const double psi = Psi(u, p.alpha, p.nl);
    REQUIRE(phi > 0.0);
    REQUIRE(psi > 0.0);
    const double lambda = 0.6;
    const double r = 1.5;

    // J(t u) = t^2 phi - lambda t^r psi: root and minimizer in closed form.
    const double t_zero = std::pow(lambda * psi / phi, 1.0 / (2.0 - r));
    const double t_min = std::pow(0.5 * lambda * r * psi / phi, 1.0 / (2.0 - r));
    auto j_at = [&](double t) {
        return J_lambda(RadialFunction(p.grid, t * u.values()), lambda, p.alpha, p.nl);
    };
    CHECK(j_at(t_zero * 0.999) < 0.0);
    CHECK(j_at(t_zero * 1.001) > 0.0);

    // 1D scan over the ray brackets the analytic minimizer.
    double best_t = 0.0;
    double best_j = 0.0;
    for (int k = 0; k <= 400; ++k) {
        const double t = t_zero * static_cast<double>(k) / 400.0;
        const double j = j_at(t);
        if (j < best_j) {
            best_j = j;
            best_t = t;
        }
    }
    CHECK(best_t == doctest::Approx(t_min).epsilon(0.02));
    CHECK(j_at(t_min) < 0.0);
}
