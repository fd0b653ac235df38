#include "hyperball/solver.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <stdexcept>

#include "hyperball/geometry.hpp"
#include "hyperball/rng.hpp"
#include "hyperball/testfn.hpp"

namespace hyperball {

namespace {

// Shared state for one solve: the grid, the factorized constrained stiffness
// and the full stiffness (assembled once; it does not depend on the iterate).
struct DescentEngine {
    RadialGridPtr grid;
    const RadialWeight* alpha;
    const Nonlinearity* nl;
    double omega; // sphere area factor
    Eigen::SparseMatrix<double> stiffness;
    ConstrainedStiffness chol;

    DescentEngine(RadialGridPtr g, const RadialWeight& a, const Nonlinearity& n)
        : grid(std::move(g)), alpha(&a), nl(&n), omega(unit_sphere_area(grid->dim())),
          stiffness(assemble_operators(*grid).stiffness), chol(*grid) {}

    // Cell-path energy (positive terms only). The matrix route u.(S u)
    // cancels sinh-scaled diagonals against off-diagonals and its rounding
    // noise would drown the line-search decreases near convergence.
    double phi(const Eigen::VectorXd& u) const {
        return hyperball::Phi(RadialFunction(grid, u));
    }

    double psi(const Eigen::VectorXd& u) const {
        return Psi(RadialFunction(grid, u), *alpha, *nl);
    }

    double j(const Eigen::VectorXd& u, double lambda) const {
        return phi(u) - lambda * psi(u);
    }

    // Raw residual S u - lambda b on the free nodes (no omega factor).
    Eigen::VectorXd raw_residual(const Eigen::VectorXd& u, double lambda) const {
        const RadialFunction uf(grid, u);
        const Eigen::VectorXd b = assemble_load(uf, [this](double rho, double uval) {
            const double fv = nl->f(uval);
            if (!std::isfinite(fv)) throw std::domain_error("descent: non-finite f value");
            return (*alpha)(rho)*fv;
        });
        const int free = grid->num_nodes() - 1;
        return (stiffness * u - lambda * b).head(free);
    }
};

Eigen::VectorXd initial_iterate(const SolveConfig& cfg, const Problem& problem,
                                const RadialGridPtr& grid, const PlateauFunction* plateau,
                                std::vector<std::string>& warnings) {
    const int n = grid->num_nodes();
    if (cfg.init.kind == "zero") return Eigen::VectorXd::Zero(n);
    if (cfg.init.kind == "custom") {
        if (!cfg.init.custom_values || cfg.init.custom_values->size() != n) {
            throw std::invalid_argument("minimize_sublevel: custom init values missing or wrong size");
        }
        Eigen::VectorXd v = *cfg.init.custom_values;
        v(n - 1) = 0.0;
        return v;
    }
    if (cfg.init.kind != "scaled_plateau") {
        throw std::invalid_argument("minimize_sublevel: unknown init kind '" + cfg.init.kind + "'");
    }
    if (plateau == nullptr) throw std::logic_error("minimize_sublevel: plateau not built");

    double t_hat = cfg.init.t;
    if (t_hat <= 0.0) {
        const auto ts = default_t_sequence();
        const NegativityDiagnostic neg = negativity_diagnostic(
            *plateau, problem.nl, problem.alpha, cfg.lambda, cfg.omega_bar, ts);
        if (neg.best_t) {
            t_hat = *neg.best_t;
        } else {
            // No scan row beats the trivial function; start from zero.
            warnings.emplace_back("negativity scan found no descent point; zero start");
            return Eigen::VectorXd::Zero(n);
        }
    }
    return t_hat * plateau->fn.values();
}

} // namespace

SolveReport minimize_sublevel(const SolveConfig& cfg, const Problem& problem) {
    if (!(cfg.lambda > 0.0)) throw std::invalid_argument("minimize_sublevel: lambda must be > 0");
    if (!(cfg.omega_bar > 0.0)) throw std::invalid_argument("minimize_sublevel: omega_bar must be > 0");
    if (!(cfg.grad_tol > 0.0)) throw std::invalid_argument("minimize_sublevel: grad_tol must be > 0");
    if (cfg.max_iters < 1) throw std::invalid_argument("minimize_sublevel: max_iters must be >= 1");

    std::vector<std::string> warnings;
    if (cfg.lambda_star_used > 0.0 && cfg.lambda >= cfg.lambda_star_used) {
        warnings.emplace_back("lambda >= lambda_star");
    }

    // Plateau starts get a kink-aligned grid so the seed is represented exactly.
    RadialGridPtr grid = problem.grid;
    std::optional<PlateauFunction> plateau;
    if (cfg.init.kind == "scaled_plateau") {
        double rho = cfg.init.rho;
        double r = cfg.init.r;
        if (rho <= 0.0 || r <= 0.0) {
            const auto [d_rho, d_r] = default_plateau_params(problem.alpha, problem.spec.R_max);
            rho = d_rho;
            r = d_r;
        }
        plateau = build_plateau(rho, r, problem.dim, problem.spec);
        grid = plateau->fn.grid_ptr();
    }

    const DescentEngine engine(grid, problem.alpha, problem.nl);
    const int n = grid->num_nodes();
    const int free = n - 1;
    const double sublevel_cap = cfg.omega_bar * cfg.omega_bar;

    Eigen::VectorXd u =
        initial_iterate(cfg, problem, grid, plateau ? &*plateau : nullptr, warnings);

    int projections = 0;
    auto project_into_sublevel = [&](Eigen::VectorXd& v) {
        const double phi_v = engine.phi(v);
        if (phi_v >= sublevel_cap) {
            // Phi is quadratic, so radial rescaling lands exactly inside.
            const double norm_v = std::sqrt(2.0 * phi_v);
            v *= cfg.omega_bar * std::sqrt(2.0 * (1.0 - 1e-6)) / norm_v;
            ++projections;
            return true;
        }
        return false;
    };
    project_into_sublevel(u);

    double j_current = engine.j(u, cfg.lambda);
    bool converged = false;
    bool monotone = true;
    int iterations = 0;
    constexpr double armijo_c = 1e-4;

    for (; iterations < cfg.max_iters; ++iterations) {
        const Eigen::VectorXd raw = engine.raw_residual(u, cfg.lambda);
        const Eigen::VectorXd g = engine.chol.solve(raw);
        const double rn2 = engine.omega * raw.dot(g);
        const double rn = std::sqrt(std::max(0.0, rn2));
        const double u_norm = std::sqrt(2.0 * engine.phi(u));
        if (rn <= cfg.grad_tol * (1.0 + u_norm)) {
            converged = true;
            break;
        }

        // Armijo backtracking along the energy-metric steepest descent. Once
        // the predicted decrease falls under the rounding resolution of J,
        // the sufficient-decrease test cannot be certified in doubles; accept
        // flat steps there so the preconditioned contraction can keep driving
        // the residual down to its arithmetic floor.
        const double flat_eps =
            8.0 * std::numeric_limits<double>::epsilon() * (1.0 + std::abs(j_current));
        double step = 1.0;
        bool accepted = false;
        for (int halvings = 0; halvings < 60; ++halvings) {
            Eigen::VectorXd trial = u;
            trial.head(free) -= step * g;
            const double j_trial = engine.j(trial, cfg.lambda);
            const double required = armijo_c * step * rn2;
            if (j_trial <= j_current - required ||
                (required <= flat_eps && j_trial <= j_current + flat_eps)) {
                u = std::move(trial);
                const bool projected = project_into_sublevel(u);
                const double j_new = projected ? engine.j(u, cfg.lambda) : j_trial;
                if (j_new > j_current + 1e-12 * (1.0 + std::abs(j_current))) monotone = false;
                j_current = j_new;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) break; // stationary to rounding; residual check decides
    }

    // Final residual through the shared weak-form path.
    RadialFunction minimizer(grid, u);
    const WeakResidual wr =
        weak_residual(minimizer, cfg.lambda, problem.alpha, problem.nl, engine.chol);
    const double phi_u = Phi(minimizer);
    const double norm_u = std::sqrt(2.0 * phi_u);
    if (!converged && wr.norm <= cfg.grad_tol * (1.0 + norm_u)) converged = true;

    SolveReport report(std::move(minimizer));
    report.lambda = cfg.lambda;
    report.omega_bar = cfg.omega_bar;
    report.lambda_star_used = cfg.lambda_star_used;
    report.phi = phi_u;
    report.norm = norm_u;
    report.energy = j_current;
    report.residual_norm = wr.norm;
    report.sublevel_ok = phi_u < sublevel_cap;
    report.nontrivial = norm_u > 10.0 * cfg.grad_tol * cfg.omega_bar;
    report.converged = converged;
    report.iterations = iterations;
    report.projections = projections;
    if (!monotone) warnings.emplace_back("projection broke descent monotonicity");
    if (report.nontrivial && !(report.energy < 0.0)) {
        warnings.emplace_back("nontrivial minimizer with nonnegative energy");
    }
    if (!converged) warnings.emplace_back("iteration budget exhausted before tolerance");
    report.warnings = std::move(warnings);
    return report;
}

SweepResult lambda_sweep(std::span<const double> lambdas, const Problem& problem,
                         const SolveConfig& cfg_template, std::optional<double> m_omega_bar) {
    if (lambdas.empty()) throw std::invalid_argument("lambda_sweep: empty lambda list");
    double prev = std::numeric_limits<double>::infinity();
    for (double l : lambdas) {
        if (!(l > 0.0)) throw std::invalid_argument("lambda_sweep: lambdas must be positive");
        if (!(l < prev)) throw std::invalid_argument("lambda_sweep: lambdas must be strictly decreasing");
        if (cfg_template.lambda_star_used > 0.0 && l >= cfg_template.lambda_star_used) {
            throw std::invalid_argument("lambda_sweep: lambdas must lie below lambda_star");
        }
        prev = l;
    }

    // Warm starts must live on the grid every solve uses, so plateau-seeded
    // sweeps pin the kink-aligned grid up front.
    Problem working = problem;
    SolveConfig first = cfg_template;
    if (cfg_template.init.kind == "scaled_plateau") {
        double rho = cfg_template.init.rho;
        double r = cfg_template.init.r;
        if (rho <= 0.0 || r <= 0.0) {
            const auto [d_rho, d_r] = default_plateau_params(problem.alpha, problem.spec.R_max);
            rho = d_rho;
            r = d_r;
        }
        working = problem.with_plateau_grid(rho, r);
        first.init.rho = rho;
        first.init.r = r;
    }

    SweepResult sweep;
    std::optional<Eigen::VectorXd> warm;
    for (double l : lambdas) {
        SolveConfig cfg = first;
        cfg.lambda = l;
        if (warm) {
            cfg.init.kind = "custom";
            cfg.init.custom_values = warm;
        }
        SolveReport report = minimize_sublevel(cfg, working);
        const bool ok = report.converged;
        warm = report.minimizer.values();
        if (m_omega_bar) sweep.decay_bounds.push_back(l * *m_omega_bar);
        sweep.reports.push_back(std::move(report));
        if (!ok) {
            sweep.aborted = true;
            break;
        }
    }
    return sweep;
}

void write_sweep_csv(std::ostream& out, const SweepResult& sweep) {
    out << "lambda,norm,energy,residual,converged\n";
    char buf[160];
    for (const auto& r : sweep.reports) {
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g,%.17g,%d\n", r.lambda, r.norm, r.energy,
                      r.residual_norm, r.converged ? 1 : 0);
        out << buf;
    }
}

nlohmann::json SolveReport::to_json() const {
    nlohmann::json j;
    j["lambda"] = lambda;
    j["omega_bar"] = omega_bar;
    j["lambda_star_used"] = lambda_star_used;
    j["energy"] = energy;
    j["phi"] = phi;
    j["norm"] = norm;
    j["residual_norm"] = residual_norm;
    j["nontrivial"] = nontrivial;
    j["sublevel_ok"] = sublevel_ok;
    j["converged"] = converged;
    j["iterations"] = iterations;
    j["projections"] = projections;
    j["warnings"] = warnings;
    return j;
}

std::vector<FieldResidual> nonradial_residuals(const RadialFunction& u, double lambda,
                                               const Problem& problem, int n_fields,
                                               std::uint64_t n_samples, std::uint64_t seed) {
    const int dim = problem.dim;
    const double R = u.grid().R_max();
    const double cutoff = std::tanh(0.5 * R);

    std::vector<FieldResidual> out;
    RandomStream master(seed);
    for (int k = 0; k < n_fields; ++k) {
        // Random quadratic polynomial times a C^1 radial bump vanishing at R.
        Eigen::VectorXd lin(dim);
        Eigen::MatrixXd quad(dim, dim);
        const double c0 = master.uniform(-1.0, 1.0);
        for (int i = 0; i < dim; ++i) lin(i) = master.uniform(-1.0, 1.0);
        for (int i = 0; i < dim; ++i) {
            for (int jj = 0; jj < dim; ++jj) quad(i, jj) = master.uniform(-1.0, 1.0);
        }
        const Eigen::MatrixXd quad_sym = quad + quad.transpose();

        auto field = [&](const BallPoint& p) {
            const double s = p.euclidean_norm();
            const double rho = geodesic_distance_origin(p);
            if (rho >= R) return 0.0;
            const double ratio = rho / R;
            const double bump = (1.0 - ratio * ratio) * (1.0 - ratio * ratio);
            const double bump_d = -4.0 * rho / (R * R) * (1.0 - ratio * ratio);
            const Eigen::VectorXd& x = p.coords();
            const double poly = c0 + lin.dot(x) + x.dot(quad * x);
            const Eigen::VectorXd poly_grad = lin + quad_sym * x;

            const double one_minus = 1.0 - s * s;
            const double conf = 0.5 * one_minus; // (1-|s|^2)/2
            const double drho_ds = 2.0 / one_minus;

            // Euclidean gradients of the radial solution and the test field.
            Eigen::VectorXd grad_phi = bump * poly_grad;
            double u_rad_slope = 0.0;
            if (s > 1e-14) {
                const Eigen::VectorXd radial_dir = x / s;
                grad_phi += poly * bump_d * drho_ds * radial_dir;
                u_rad_slope = u.derivative_at(rho) * drho_ds;
                const double grad_pair = conf * conf * u_rad_slope * radial_dir.dot(grad_phi);
                const double load_pair =
                    lambda * problem.alpha(rho) * problem.nl.f(u.value_at(rho)) * poly * bump;
                return grad_pair - load_pair;
            }
            // At the center the radial gradient vanishes.
            return -lambda * problem.alpha(rho) * problem.nl.f(u.value_at(rho)) * poly * bump;
        };

        const MonteCarloResult mc =
            montecarlo_integral_dmu(dim, field, n_samples, cutoff, master.next_u64());
        out.push_back(FieldResidual{mc.estimate, mc.std_error});
    }
    return out;
}

bool verify_weak_solution(const RadialFunction& u, double lambda, const Problem& problem,
                          double tol, std::uint64_t seed, int n_fields, std::uint64_t n_samples) {
    const WeakResidual wr = weak_residual(u, lambda, problem.alpha, problem.nl);
    const double norm_u = std::sqrt(dirichlet_energy(u));
    if (!(wr.norm <= tol * (1.0 + norm_u))) return false;

    const auto fields = nonradial_residuals(u, lambda, problem, n_fields, n_samples, seed);
    for (const auto& f : fields) {
        if (std::abs(f.estimate) > 3.0 * f.std_error + 1e-12) return false;
    }
    return true;
}

} // namespace hyperball
