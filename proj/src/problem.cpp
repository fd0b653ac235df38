#include "hyperball/problem.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

#include "hyperball/geometry.hpp"
#include "hyperball/quadrature.hpp"

namespace hyperball {

namespace {

double growth_quotient(const std::function<double(double)>& f, double q, double t) {
    return std::abs(f(t)) / (1.0 + std::pow(std::abs(t), q - 1.0));
}

// Golden-section maximization of g on [a, b].
double golden_max(const std::function<double(double)>& g, double a, double b, int iters = 200) {
    const double inv_phi = 0.6180339887498948482;
    double x1 = b - inv_phi * (b - a);
    double x2 = a + inv_phi * (b - a);
    double g1 = g(x1);
    double g2 = g(x2);
    for (int i = 0; i < iters && (b - a) > 1e-15 * (1.0 + std::abs(a) + std::abs(b)); ++i) {
        if (g1 < g2) {
            a = x1;
            x1 = x2;
            g1 = g2;
            x2 = a + inv_phi * (b - a);
            g2 = g(x2);
        } else {
            b = x2;
            x2 = x1;
            g2 = g1;
            x1 = b - inv_phi * (b - a);
            g1 = g(x1);
        }
    }
    return 0.5 * (a + b);
}

} // namespace

AlphaFResult compute_alpha_f(const std::function<double(double)>& f, double q, double search_bound,
                             int grid_size) {
    if (!(search_bound > 0.0)) throw std::invalid_argument("compute_alpha_f: search_bound must be > 0");
    if (grid_size < 1000) throw std::invalid_argument("compute_alpha_f: grid_size must be >= 1000");

    // Symmetric log-spaced grid plus zero: magnitudes from bound*1e-12 to bound.
    std::vector<double> ts;
    ts.reserve(2 * grid_size + 1);
    const int half = grid_size;
    const double lo = std::log(search_bound * 1e-12);
    const double hi = std::log(search_bound);
    for (int i = 0; i < half; ++i) {
        const double m = std::exp(lo + (hi - lo) * static_cast<double>(i) / (half - 1));
        ts.push_back(-m);
        ts.push_back(m);
    }
    ts.push_back(0.0);
    std::sort(ts.begin(), ts.end());

    std::size_t best = 0;
    double best_val = -1.0;
    for (std::size_t i = 0; i < ts.size(); ++i) {
        const double v = growth_quotient(f, q, ts[i]);
        if (!std::isfinite(v)) throw std::domain_error("compute_alpha_f: non-finite quotient");
        if (v > best_val) {
            best_val = v;
            best = i;
        }
    }

    AlphaFResult result;
    result.boundary_maximizer = (best == 0 || best + 1 == ts.size());
    const double a = ts[best == 0 ? 0 : best - 1];
    const double b = ts[best + 1 >= ts.size() ? ts.size() - 1 : best + 1];
    const double t_ref =
        golden_max([&](double t) { return growth_quotient(f, q, t); }, a, b);
    const double refined = growth_quotient(f, q, t_ref);
    if (refined >= best_val) {
        result.value = refined;
        result.argmax = t_ref;
    } else {
        result.value = best_val;
        result.argmax = ts[best];
    }
    return result;
}

Nonlinearity Nonlinearity::power(double r, double q) {
    if (!(r > 1.0)) throw std::invalid_argument("Nonlinearity::power: r must be > 1");
    if (!(q > r)) throw std::invalid_argument("Nonlinearity::power: requires q > r");
    Nonlinearity nl;
    nl.kind_ = "power";
    nl.power_r_ = r;
    nl.q_ = q;
    nl.f_ = [r](double t) {
        if (t == 0.0) return 0.0;
        return std::copysign(std::pow(std::abs(t), r - 1.0), t);
    };
    nl.F_ = [r](double t) { return std::pow(std::abs(t), r) / r; };
    // Stationarity of |t|^{r-1}/(1+|t|^{q-1}) gives the growth constant in
    // closed form: t*^{q-1} = (r-1)/(q-r).
    const double t_star = std::pow((r - 1.0) / (q - r), 1.0 / (q - 1.0));
    nl.alpha_f_ = std::pow(t_star, r - 1.0) * (q - r) / (q - 1.0);
    return nl;
}

Nonlinearity Nonlinearity::from_table(std::vector<std::pair<double, double>> samples, double q) {
    if (samples.size() < 2) throw std::invalid_argument("Nonlinearity::from_table: need >= 2 samples");
    std::sort(samples.begin(), samples.end());
    for (std::size_t i = 1; i < samples.size(); ++i) {
        if (!(samples[i].first > samples[i - 1].first)) {
            throw std::invalid_argument("Nonlinearity::from_table: abscissae must be strictly increasing");
        }
    }
    auto shared = std::make_shared<const std::vector<std::pair<double, double>>>(std::move(samples));

    auto eval_f = [shared](double t) {
        const auto& tab = *shared;
        if (t <= tab.front().first) return tab.front().second;
        if (t >= tab.back().first) return tab.back().second;
        auto it = std::upper_bound(tab.begin(), tab.end(), std::make_pair(t, 0.0),
                                   [](const auto& a, const auto& b) { return a.first < b.first; });
        const auto& hi = *it;
        const auto& lo = *(it - 1);
        const double s = (t - lo.first) / (hi.first - lo.first);
        return (1.0 - s) * lo.second + s * hi.second;
    };

    Nonlinearity nl;
    nl.kind_ = "table";
    nl.q_ = q;
    nl.f_ = eval_f;
    // Primitive by adaptive quadrature from 0 (the table is piecewise linear,
    // so this is cheap and accurate to the requested 1e-12).
    nl.F_ = [eval_f](double t) {
        if (t == 0.0) return 0.0;
        return adaptive_simpson(eval_f, 0.0, t, 1e-12);
    };
    const double bound = std::max(std::abs(shared->front().first), std::abs(shared->back().first));
    nl.alpha_f_ = compute_alpha_f(eval_f, q, std::max(bound, 1.0), 4000).value;
    return nl;
}

Nonlinearity Nonlinearity::custom(std::function<double(double)> f, double q,
                                  std::function<double(double)> F, double alpha_f) {
    if (!f) throw std::invalid_argument("Nonlinearity::custom: f required");
    Nonlinearity nl;
    nl.kind_ = "custom";
    nl.q_ = q;
    nl.f_ = std::move(f);
    if (F) {
        nl.F_ = std::move(F);
    } else {
        auto base = nl.f_;
        nl.F_ = [base](double t) {
            if (t == 0.0) return 0.0;
            return adaptive_simpson(base, 0.0, t, 1e-12);
        };
    }
    nl.alpha_f_ = alpha_f >= 0.0 ? alpha_f : compute_alpha_f(nl.f_, q, 1e3, 4000).value;
    return nl;
}

RadialWeight RadialWeight::conformal_power(int dim, double exponent, double q) {
    if (dim < 3) throw std::invalid_argument("RadialWeight: dim must be >= 3");
    if (!(exponent > dim - 1)) {
        // alpha must be integrable against dmu: the profile decays like
        // e^{-k rho} while the volume grows like e^{(N-1) rho}.
        throw std::invalid_argument("RadialWeight::conformal_power: exponent must exceed dim-1");
    }
    if (!(q > 1.0)) throw std::invalid_argument("RadialWeight: q must be > 1");
    RadialWeight w;
    w.kind_ = "conformal_power";
    w.exponent_ = exponent;
    w.dim_ = dim;
    w.p_ = q / (q - 1.0);
    w.norm_cutoff_ = 60.0;
    w.profile_ = [exponent](double rho) { return std::pow(1.0 + std::cosh(rho), -exponent); };
    w.compute_norms();
    w.find_witness();
    return w;
}

RadialWeight RadialWeight::from_table(int dim, std::vector<std::pair<double, double>> samples,
                                      double q, std::optional<EssInfWitness> witness) {
    if (samples.size() < 2) throw std::invalid_argument("RadialWeight::from_table: need >= 2 samples");
    std::sort(samples.begin(), samples.end());
    if (!(samples.front().first >= 0.0)) {
        throw std::invalid_argument("RadialWeight::from_table: radii must be >= 0");
    }
    for (const auto& s : samples) {
        if (s.second < 0.0) throw std::invalid_argument("RadialWeight::from_table: negative value");
    }
    auto shared = std::make_shared<const std::vector<std::pair<double, double>>>(std::move(samples));
    RadialWeight w;
    w.kind_ = "table";
    w.dim_ = dim;
    w.p_ = q / (q - 1.0);
    w.norm_cutoff_ = shared->back().first;
    w.profile_ = [shared](double rho) {
        const auto& tab = *shared;
        if (rho <= tab.front().first) return tab.front().second;
        if (rho >= tab.back().first) return 0.0;
        auto it = std::upper_bound(tab.begin(), tab.end(), std::make_pair(rho, 0.0),
                                   [](const auto& a, const auto& b) { return a.first < b.first; });
        const auto& hi = *it;
        const auto& lo = *(it - 1);
        const double s = (rho - lo.first) / (hi.first - lo.first);
        return (1.0 - s) * lo.second + s * hi.second;
    };
    w.compute_norms();
    if (witness) {
        w.witness_ = *witness;
    } else {
        w.find_witness();
    }
    return w;
}

RadialWeight RadialWeight::custom(int dim, std::function<double(double)> profile, double q,
                                  double support_radius, std::optional<EssInfWitness> witness) {
    if (!profile) throw std::invalid_argument("RadialWeight::custom: profile required");
    RadialWeight w;
    w.kind_ = "custom";
    w.dim_ = dim;
    w.p_ = q / (q - 1.0);
    w.norm_cutoff_ = support_radius;
    w.profile_ = std::move(profile);
    w.compute_norms();
    if (witness) {
        w.witness_ = *witness;
    } else {
        w.find_witness();
    }
    return w;
}

void RadialWeight::compute_norms() {
    const auto grid = RadialGrid::uniform(dim_, norm_cutoff_, 4096, 8);
    const double omega = unit_sphere_area(dim_);
    const auto& prof = profile_;
    norm_one_ = omega * integrate_radial(*grid, [&prof](double rho) {
        const double v = prof(rho);
        if (v < 0.0) throw std::invalid_argument("RadialWeight: profile must be nonnegative");
        return v;
    });
    const double p = p_;
    norm_p_ = std::pow(
        omega * integrate_radial(*grid, [&prof, p](double rho) { return std::pow(prof(rho), p); }),
        1.0 / p);
    double sup = prof(0.0);
    const int samples = 20000;
    for (int i = 1; i <= samples; ++i) {
        sup = std::max(sup, prof(norm_cutoff_ * static_cast<double>(i) / samples));
    }
    norm_inf_ = sup;
    if (!(std::isfinite(norm_one_) && std::isfinite(norm_p_) && std::isfinite(norm_inf_))) {
        throw std::invalid_argument("RadialWeight: norms must be finite");
    }
    if (!(norm_one_ > 0.0)) {
        throw std::invalid_argument("RadialWeight: profile is (numerically) identically zero");
    }
}

void RadialWeight::find_witness() {
    // Scan annuli (center rho, half-width r) on a dense radius sample and
    // keep the largest ess-inf * width score.
    const double R = std::min(norm_cutoff_, 30.0);
    const int n = 10000;
    std::vector<double> vals(n + 1);
    for (int i = 0; i <= n; ++i) vals[i] = profile_(R * static_cast<double>(i) / n);

    double best_score = -1.0;
    EssInfWitness best;
    for (int ci = 1; ci <= 50; ++ci) {
        const double center = R * 0.85 * static_cast<double>(ci) / 50.0;
        for (int wi = 1; wi <= 20; ++wi) {
            const double half_width = center * 0.95 * static_cast<double>(wi) / 20.0;
            // One sample beyond each edge: the min over the superset bounds
            // the infimum over the open annulus from below.
            const int lo = std::max(0, static_cast<int>(std::floor((center - half_width) / R * n)));
            const int hi = std::min(n, static_cast<int>(std::ceil((center + half_width) / R * n)));
            if (lo >= hi) continue;
            double m = vals[lo];
            for (int i = lo + 1; i <= hi; ++i) m = std::min(m, vals[i]);
            if (m <= 0.0) continue;
            const double score = m * half_width;
            if (score > best_score) {
                best_score = score;
                best = EssInfWitness{center, half_width, m * (1.0 - 1e-9)};
            }
        }
    }
    if (best_score <= 0.0) {
        throw std::invalid_argument("RadialWeight: no annulus with positive ess-inf found");
    }
    witness_ = best;
}

Problem Problem::with_grid(const GridSpec& new_spec) const {
    Problem p = *this;
    p.spec = new_spec;
    p.grid = RadialGrid::uniform(dim, new_spec.R_max, new_spec.M, new_spec.quad_order);
    return p;
}

Problem Problem::with_plateau_grid(double rho, double r) const {
    if (!(r > 0.0 && r < rho && rho + r <= spec.R_max)) {
        throw std::invalid_argument("with_plateau_grid: requires 0 < r < rho and rho + r <= R_max");
    }
    const std::array<double, 4> kinks = {rho - r, rho - 0.5 * r, rho + 0.5 * r, rho + r};
    Problem p = *this;
    p.grid = RadialGrid::uniform_with_knots(dim, spec.R_max, spec.M, kinks, spec.quad_order);
    return p;
}

Problem make_model_problem(double r, double q, GridSpec spec) {
    Problem p;
    p.dim = 4;
    p.q = q;
    p.nl = Nonlinearity::power(r, q);
    p.alpha = RadialWeight::conformal_power(4, 4.0, q);
    p.spec = spec;
    p.grid = RadialGrid::uniform(4, spec.R_max, spec.M, spec.quad_order);
    return p;
}

Problem problem_from_json(const nlohmann::json& j) {
    Problem p;
    if (!j.contains("dim") || !j.contains("q") || !j.contains("nonlinearity") ||
        !j.contains("weight") || !j.contains("grid")) {
        throw std::invalid_argument("problem: required fields dim, q, nonlinearity, weight, grid");
    }
    p.dim = j.at("dim").get<int>();
    if (p.dim < 3) throw std::invalid_argument("problem: dim must be >= 3");
    p.q = j.at("q").get<double>();
    const double critical = 2.0 * p.dim / (p.dim - 2.0);
    if (!(p.q > 2.0 && p.q < critical)) {
        throw std::invalid_argument("problem: q must lie strictly in (2, 2N/(N-2))");
    }

    const auto& gj = j.at("grid");
    p.spec.M = gj.at("M").get<int>();
    p.spec.R_max = gj.at("R_max").get<double>();
    p.spec.quad_order = gj.value("quad_order", 6);

    const auto& nj = j.at("nonlinearity");
    const std::string nkind = nj.at("kind").get<std::string>();
    if (nkind == "power") {
        p.nl = Nonlinearity::power(nj.at("r").get<double>(), p.q);
    } else if (nkind == "table") {
        std::vector<std::pair<double, double>> samples;
        for (const auto& row : nj.at("samples")) {
            samples.emplace_back(row.at(0).get<double>(), row.at(1).get<double>());
        }
        p.nl = Nonlinearity::from_table(std::move(samples), p.q);
    } else {
        throw std::invalid_argument("problem: nonlinearity.kind must be 'power' or 'table'");
    }

    const auto& wj = j.at("weight");
    const std::string wkind = wj.at("kind").get<std::string>();
    if (wkind == "conformal_power") {
        p.alpha = RadialWeight::conformal_power(p.dim, wj.at("exponent").get<double>(), p.q);
    } else if (wkind == "table") {
        std::vector<std::pair<double, double>> samples;
        for (const auto& row : wj.at("samples")) {
            samples.emplace_back(row.at(0).get<double>(), row.at(1).get<double>());
        }
        std::optional<EssInfWitness> witness;
        if (wj.contains("essinf")) {
            witness = EssInfWitness{wj["essinf"].at("rho").get<double>(),
                                    wj["essinf"].at("r").get<double>(),
                                    wj["essinf"].at("alpha0").get<double>()};
        }
        p.alpha = RadialWeight::from_table(p.dim, std::move(samples), p.q, witness);
    } else {
        throw std::invalid_argument("problem: weight.kind must be 'conformal_power' or 'table'");
    }

    p.grid = RadialGrid::uniform(p.dim, p.spec.R_max, p.spec.M, p.spec.quad_order);
    return p;
}

nlohmann::json problem_to_json(const Problem& p) {
    nlohmann::json j;
    j["dim"] = p.dim;
    j["q"] = p.q;
    if (p.nl.is_power()) {
        j["nonlinearity"] = {{"kind", "power"}, {"r", p.nl.power_exponent()}};
    } else {
        j["nonlinearity"] = {{"kind", p.nl.kind()}};
    }
    if (p.alpha.kind() == "conformal_power") {
        j["weight"] = {{"kind", "conformal_power"}, {"exponent", p.alpha.conformal_exponent()}};
    } else {
        j["weight"] = {{"kind", p.alpha.kind()}};
    }
    j["grid"] = {{"M", p.spec.M}, {"R_max", p.spec.R_max}, {"quad_order", p.spec.quad_order}};
    return j;
}

double Phi(const RadialFunction& u) { return 0.5 * dirichlet_energy(u); }

double Psi(const RadialFunction& u, const RadialWeight& alpha, const Nonlinearity& nl) {
    const double omega = unit_sphere_area(u.grid().dim());
    const double value = omega * integrate_radial_values(u, [&](double rho, double uval) {
        const double fv = nl.F(uval);
        if (!std::isfinite(fv)) throw std::domain_error("Psi: non-finite primitive value");
        return alpha(rho) * fv;
    });
    return value;
}

double J_lambda(const RadialFunction& u, double lambda, const RadialWeight& alpha,
                const Nonlinearity& nl) {
    return Phi(u) - lambda * Psi(u, alpha, nl);
}

WeakResidual weak_residual(const RadialFunction& u, double lambda, const RadialWeight& alpha,
                           const Nonlinearity& nl, const ConstrainedStiffness& chol) {
    const RadialGrid& grid = u.grid();
    const double omega = unit_sphere_area(grid.dim());
    const RadialOperators ops = assemble_operators(grid);
    const Eigen::VectorXd b = assemble_load(u, [&](double rho, double uval) {
        const double fv = nl.f(uval);
        if (!std::isfinite(fv)) throw std::domain_error("weak_residual: non-finite f value");
        return alpha(rho) * fv;
    });
    const Eigen::VectorXd raw = ops.stiffness * u.values() - lambda * b;
    const int free = grid.num_nodes() - 1;
    const Eigen::VectorXd r_free = raw.head(free);

    WeakResidual result;
    result.vector = omega * r_free;
    const Eigen::VectorXd g = chol.solve(r_free);
    const double sq = omega * r_free.dot(g);
    result.norm = std::sqrt(std::max(0.0, sq));
    return result;
}

WeakResidual weak_residual(const RadialFunction& u, double lambda, const RadialWeight& alpha,
                           const Nonlinearity& nl) {
    const ConstrainedStiffness chol(u.grid());
    return weak_residual(u, lambda, alpha, nl, chol);
}

} // namespace hyperball
