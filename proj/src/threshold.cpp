#include "hyperball/threshold.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "hyperball/geometry.hpp"
#include "hyperball/rng.hpp"

namespace hyperball {

namespace {

// Energy norm of a nodal vector (last entry must be the Dirichlet 0).
double energy_norm(const RadialGridPtr& grid, const Eigen::VectorXd& values) {
    return std::sqrt(dirichlet_energy(RadialFunction(grid, values)));
}

Eigen::VectorXd random_bump_values(const RadialGridPtr& grid, RandomStream& rng,
                                   const std::function<double(double)>& density_hint) {
    const int n = grid->num_nodes();
    const auto& nodes = grid->nodes();
    // Sample bump centers from the hint mass over cells (or uniformly).
    std::vector<double> cdf(grid->num_cells());
    double total = 0.0;
    for (int c = 0; c < grid->num_cells(); ++c) {
        const double mid = 0.5 * (nodes[c] + nodes[c + 1]);
        const double w = density_hint ? density_hint(mid) * grid->cell_weight_integral(c)
                                      : grid->cell_weight_integral(c);
        total += std::max(w, 0.0);
        cdf[c] = total;
    }
    Eigen::VectorXd v = Eigen::VectorXd::Zero(n);
    const int bumps = 1 + static_cast<int>(rng.uniform01() * 3.0);
    for (int b = 0; b < bumps; ++b) {
        double center = 0.5 * grid->R_max();
        if (total > 0.0) {
            const double x = rng.uniform01() * total;
            const auto it = std::lower_bound(cdf.begin(), cdf.end(), x);
            const int c = static_cast<int>(it - cdf.begin());
            center = 0.5 * (nodes[c] + nodes[std::min(c + 1, n - 1)]);
        }
        const double width = rng.uniform(0.2, 2.0);
        const double amp = rng.uniform(0.2, 1.0);
        for (int i = 0; i < n - 1; ++i) {
            const double d = (nodes[i] - center) / width;
            v(i) += amp * std::exp(-0.5 * d * d);
        }
    }
    v(n - 1) = 0.0;
    return v;
}

} // namespace

SobolevEstimate estimate_sobolev_constant(const RadialGridPtr& grid, double nu,
                                          const SobolevOptions& opts) {
    const int dim = grid->dim();
    const double critical = 2.0 * dim / (dim - 2.0);
    if (!(nu > 2.0 && nu < critical)) {
        throw std::invalid_argument("estimate_sobolev_constant: nu must lie strictly in (2, 2N/(N-2))");
    }
    const ConstrainedStiffness chol(*grid);
    const int n = grid->num_nodes();
    const int free = n - 1;

    RandomStream rng(opts.seed);

    std::vector<Eigen::VectorXd> starts = opts.extra_starts;
    for (int s = 0; s < opts.n_starts; ++s) starts.push_back(random_bump_values(grid, rng, nullptr));

    SobolevEstimate best;
    best.nu = nu;
    best.dim = dim;
    best.M = grid->num_cells();
    best.R_max = grid->R_max();
    best.seed = opts.seed;
    best.value = 0.0;
    best.converged = false;

    for (const auto& start : starts) {
        Eigen::VectorXd u = start;
        if (u.size() != n) throw std::invalid_argument("estimate_sobolev_constant: bad start size");
        u(n - 1) = 0.0;
        double en = energy_norm(grid, u);
        if (!(en > 0.0)) continue;
        u /= en;

        double quotient = lebesgue_norm(RadialFunction(grid, u), nu);
        bool converged = false;
        for (int iter = 0; iter < opts.max_iters; ++iter) {
            // Ascent direction: energy-metric gradient of the L^nu norm,
            // i.e. the Riesz lift of int |u|^{nu-1} sgn(u) phi_i.
            const RadialFunction uf(grid, u);
            Eigen::VectorXd m = assemble_load(uf, [nu](double, double uval) {
                if (uval == 0.0) return 0.0;
                return std::copysign(std::pow(std::abs(uval), nu - 1.0), uval);
            });
            Eigen::VectorXd v = Eigen::VectorXd::Zero(n);
            v.head(free) = chol.solve(m.head(free));
            const double ven = energy_norm(grid, v);
            if (!(ven > 0.0)) break;
            v /= ven;

            double next = lebesgue_norm(RadialFunction(grid, v), nu);
            if (next < quotient) {
                // Damped fallback keeps the iteration monotone.
                bool improved = false;
                for (int half = 0; half < 8; ++half) {
                    Eigen::VectorXd mid = 0.5 * (u + v);
                    const double men = energy_norm(grid, mid);
                    if (!(men > 0.0)) break;
                    mid /= men;
                    const double mval = lebesgue_norm(RadialFunction(grid, mid), nu);
                    if (mval > quotient) {
                        v = mid;
                        next = mval;
                        improved = true;
                        break;
                    }
                    v = mid;
                }
                if (!improved) {
                    converged = true;
                    break;
                }
            }
            const double delta = next - quotient;
            u = v;
            quotient = next;
            if (std::abs(delta) <= opts.tol * std::max(1.0, quotient)) {
                converged = true;
                break;
            }
        }
        if (quotient > best.value) {
            best.value = quotient;
            best.maximizer = u;
            best.converged = converged;
        }
    }
    if (!(best.value > 0.0)) {
        throw std::runtime_error("estimate_sobolev_constant: no admissible start produced a quotient");
    }
    return best;
}

double h_of_omega(double omega, double q, double norm_p, double norm_inf, double c_q) {
    if (!(omega > 0.0 && q > 2.0 && norm_p > 0.0 && norm_inf > 0.0 && c_q > 0.0)) {
        throw std::invalid_argument("h_of_omega: all inputs must be positive and q > 2");
    }
    const double a = q * std::sqrt(2.0) * norm_p;
    const double b = std::pow(2.0, 0.5 * q) * std::pow(c_q, q - 1.0) * norm_inf;
    return omega / (a + b * std::pow(omega, q - 1.0));
}

HMaximum maximize_h(double q, double norm_p, double norm_inf, double c_q) {
    if (!(q > 2.0)) {
        throw std::invalid_argument("maximize_h: q must be > 2 (otherwise the maximizer escapes)");
    }
    if (!(norm_p > 0.0 && norm_inf > 0.0 && c_q > 0.0)) {
        throw std::invalid_argument("maximize_h: norms and c_q must be positive");
    }
    const double a = q * std::sqrt(2.0) * norm_p;
    const double b = std::pow(2.0, 0.5 * q) * std::pow(c_q, q - 1.0) * norm_inf;
    HMaximum result;
    result.omega_star = std::pow(a / (b * (q - 2.0)), 1.0 / (q - 1.0));
    result.h_max = h_of_omega(result.omega_star, q, norm_p, norm_inf, c_q);

    // Independent check: golden-section on log(omega) around the closed form.
    double lo = std::log(result.omega_star) - 6.0;
    double hi = std::log(result.omega_star) + 6.0;
    const double inv_phi = 0.6180339887498948482;
    double x1 = hi - inv_phi * (hi - lo);
    double x2 = lo + inv_phi * (hi - lo);
    auto eval = [&](double x) { return h_of_omega(std::exp(x), q, norm_p, norm_inf, c_q); };
    double g1 = eval(x1);
    double g2 = eval(x2);
    for (int i = 0; i < 120; ++i) {
        if (g1 < g2) {
            lo = x1;
            x1 = x2;
            g1 = g2;
            x2 = lo + inv_phi * (hi - lo);
            g2 = eval(x2);
        } else {
            hi = x2;
            x2 = x1;
            g2 = g1;
            x1 = hi - inv_phi * (hi - lo);
            g1 = eval(x1);
        }
    }
    const double golden = eval(0.5 * (lo + hi));
    if (std::abs(golden - result.h_max) > 1e-8 * result.h_max) {
        throw std::runtime_error("maximize_h: closed form and golden-section disagree");
    }
    return result;
}

double lambda_star(double q, double alpha_f, double c_q, double h_max) {
    if (alpha_f == 0.0) {
        throw std::domain_error(
            "lambda_star: alpha_f = 0 (f vanishes under the growth envelope; "
            "every lambda admits only the trivial solution)");
    }
    if (!(alpha_f > 0.0 && c_q > 0.0 && h_max > 0.0 && q > 2.0)) {
        throw std::invalid_argument("lambda_star: inputs must be positive, q > 2");
    }
    return q * h_max / (alpha_f * c_q);
}

double lambda_star_at(double omega, double q, double alpha_f, double c_q, double norm_p,
                      double norm_inf) {
    if (alpha_f == 0.0) throw std::domain_error("lambda_star_at: alpha_f = 0");
    return q * h_of_omega(omega, q, norm_p, norm_inf, c_q) / (alpha_f * c_q);
}

double theta_majorant(double r, double alpha_f, double c_q, double norm_p, double norm_inf,
                      double q) {
    if (!(r > 0.0)) throw std::invalid_argument("theta_majorant: r must be > 0");
    return alpha_f * c_q *
           (norm_p * std::sqrt(2.0 / r) +
            std::pow(2.0, 0.5 * q) * std::pow(c_q, q - 1.0) / q * norm_inf *
                std::pow(r, 0.5 * q - 1.0));
}

double norm_decay_bound(double q, double alpha_f, double c_q, double norm_p, double norm_inf,
                        double omega_bar) {
    if (!(omega_bar > 0.0)) throw std::invalid_argument("norm_decay_bound: omega_bar must be > 0");
    return c_q * alpha_f *
           (std::sqrt(2.0) * norm_p * omega_bar +
            std::pow(2.0, 0.5 * q) * std::pow(c_q, q - 1.0) * norm_inf * std::pow(omega_bar, q));
}

ThetaSample theta_sample(double r, const Problem& problem, int n_candidates, std::uint64_t seed) {
    if (!(r > 0.0)) throw std::invalid_argument("theta_sample: r must be > 0");
    if (n_candidates < 1) throw std::invalid_argument("theta_sample: n_candidates must be >= 1");
    const RadialGridPtr& grid = problem.grid;
    const int n = grid->num_nodes();
    const int free = n - 1;
    const ConstrainedStiffness chol(*grid);
    RandomStream rng(seed);

    const double boundary_energy = std::sqrt(2.0 * r * (1.0 - 1e-6)); // ||u|| on Phi = r(1-1e-6)

    auto project = [&](Eigen::VectorXd v) {
        const double en = energy_norm(grid, v);
        if (!(en > 0.0)) return Eigen::VectorXd(Eigen::VectorXd::Zero(n));
        return Eigen::VectorXd(v * (boundary_energy / en));
    };
    auto psi_of = [&](const Eigen::VectorXd& v) {
        return Psi(RadialFunction(grid, v), problem.alpha, problem.nl);
    };

    // Nonnegative bump candidates concentrated where alpha carries mass.
    const auto& alpha = problem.alpha;
    std::vector<std::pair<double, Eigen::VectorXd>> pool;
    for (int c = 0; c < n_candidates; ++c) {
        Eigen::VectorXd v =
            project(random_bump_values(grid, rng, [&alpha](double rho) { return alpha(rho); }));
        if (v.isZero()) continue;
        pool.emplace_back(psi_of(v), std::move(v));
    }
    if (pool.empty()) {
        return ThetaSample{0.0, RadialFunction::zero(grid)};
    }
    std::sort(pool.begin(), pool.end(),
              [](const auto& a, const auto& b) { return a.first > b.first; });
    const int refine = std::min<std::size_t>(8, pool.size());

    double best_psi = pool.front().first;
    Eigen::VectorXd best_u = pool.front().second;
    for (int k = 0; k < refine; ++k) {
        Eigen::VectorXd u = pool[k].second;
        double psi = pool[k].first;
        for (int iter = 0; iter < 150; ++iter) {
            const RadialFunction uf(grid, u);
            Eigen::VectorXd b = assemble_load(uf, [&](double rho, double uval) {
                return problem.alpha(rho) * problem.nl.f(uval);
            });
            Eigen::VectorXd d = Eigen::VectorXd::Zero(n);
            d.head(free) = chol.solve(b.head(free));
            const double den = energy_norm(grid, d);
            if (!(den > 0.0)) break;
            d *= boundary_energy / den;

            bool improved = false;
            for (double s : {1.0, 0.3, 0.1, 0.03, 0.01}) {
                Eigen::VectorXd trial = project(u + s * d);
                const double tv = psi_of(trial);
                if (tv > psi) {
                    u = std::move(trial);
                    psi = tv;
                    improved = true;
                    break;
                }
            }
            if (!improved) break;
        }
        if (psi > best_psi) {
            best_psi = psi;
            best_u = u;
        }
    }
    return ThetaSample{best_psi / r, RadialFunction(grid, best_u)};
}

nlohmann::json ThresholdReport::to_json() const {
    nlohmann::json j;
    j["dim"] = dim;
    j["q"] = q;
    j["p"] = p;
    j["alpha_f"] = alpha_f;
    j["alpha_norms"] = {{"p", norm_p}, {"inf", norm_inf}, {"one", norm_one}};
    j["c_q_estimate"] = c_q_estimate;
    j["c_q_flag"] = c_q_flag;
    j["sobolev_converged"] = sobolev_converged;
    j["omega_star"] = omega_star;
    j["h_max"] = h_max;
    j["lambda_star"] = lambda_star;
    nlohmann::json curve = nlohmann::json::array();
    for (const auto& pt : bound_curve) {
        curve.push_back({{"r", pt.r},
                         {"theta_sample", pt.theta_sampled},
                         {"theta_majorant", pt.theta_bound}});
    }
    j["bound_curve"] = curve;
    j["essinf"] = {{"rho", essinf.rho}, {"r", essinf.r}, {"alpha0", essinf.alpha0}};
    j["grid"] = {{"M", grid.M}, {"R_max", grid.R_max}, {"quad_order", grid.quad_order}};
    j["seed"] = seed;
    return j;
}

ThresholdReport compute_threshold_report(const Problem& problem, std::uint64_t seed,
                                         int theta_candidates, bool with_bound_curve) {
    ThresholdReport report;
    report.dim = problem.dim;
    report.q = problem.q;
    report.p = problem.q / (problem.q - 1.0);
    report.alpha_f = problem.nl.alpha_f();
    report.norm_p = problem.alpha.norm_p();
    report.norm_inf = problem.alpha.norm_inf();
    report.norm_one = problem.alpha.norm_one();
    report.essinf = problem.alpha.witness();
    report.grid = problem.spec;
    report.seed = seed;

    SobolevOptions sopts;
    sopts.seed = seed;
    const SobolevEstimate sob = estimate_sobolev_constant(problem.grid, problem.q, sopts);
    report.sobolev_converged = sob.converged;
    double c_q = sob.value;

    std::vector<ThetaSample> samples;
    std::vector<double> rs;
    if (with_bound_curve) {
        // Preliminary omega_star fixes the tabulated sublevel radii.
        const HMaximum prelim = maximize_h(problem.q, report.norm_p, report.norm_inf, c_q);
        const double r0 = prelim.omega_star * prelim.omega_star;
        for (double mult : {0.05, 0.25, 1.0, 4.0, 20.0}) rs.push_back(mult * r0);
        std::uint64_t k = 1;
        for (double r : rs) {
            samples.push_back(theta_sample(r, problem, theta_candidates, seed + 7919 * k));
            ++k;
        }
        // Fold the quotients of the theta maximizers into the embedding
        // estimate so every reported bound row is internally consistent.
        for (const auto& s : samples) {
            const double en = std::sqrt(dirichlet_energy(s.maximizer));
            if (en > 0.0) {
                const double quot = lebesgue_norm(s.maximizer, problem.q) / en;
                c_q = std::max(c_q, quot);
            }
        }
    }

    report.c_q_estimate = c_q;
    const HMaximum hm = maximize_h(problem.q, report.norm_p, report.norm_inf, c_q);
    report.omega_star = hm.omega_star;
    report.h_max = hm.h_max;
    report.lambda_star = lambda_star(problem.q, report.alpha_f, c_q, hm.h_max);

    for (std::size_t i = 0; i < samples.size(); ++i) {
        BoundCurvePoint pt;
        pt.r = rs[i];
        pt.theta_sampled = samples[i].value;
        pt.theta_bound =
            theta_majorant(rs[i], report.alpha_f, c_q, report.norm_p, report.norm_inf, problem.q);
        report.bound_curve.push_back(pt);
    }
    return report;
}

} // namespace hyperball
