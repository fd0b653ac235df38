#pragma once

#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "hyperball/radial.hpp"

namespace hyperball {

// Result of the growth-constant search sup_t |f(t)| / (1 + |t|^{q-1}).
struct AlphaFResult {
    double value = 0.0;
    double argmax = 0.0;
    // Set when the maximizer sits at the edge of the search interval; the
    // supremum may then live at infinity and the growth condition fails.
    bool boundary_maximizer = false;
};

AlphaFResult compute_alpha_f(const std::function<double(double)>& f, double q, double search_bound,
                             int grid_size);

// Reaction term f with exponent q, primitive F (F(0) = 0), and growth
// constant alpha_f = sup |f(t)|/(1+|t|^{q-1}).
class Nonlinearity {
public:
    static Nonlinearity power(double r, double q);
    static Nonlinearity from_table(std::vector<std::pair<double, double>> samples, double q);
    static Nonlinearity custom(std::function<double(double)> f, double q,
                               std::function<double(double)> F, double alpha_f);

    double f(double t) const { return f_(t); }
    double F(double t) const { return F_(t); }
    double q() const { return q_; }
    double alpha_f() const { return alpha_f_; }
    const std::string& kind() const { return kind_; }
    bool is_power() const { return kind_ == "power"; }
    double power_exponent() const { return power_r_; }

private:
    Nonlinearity() = default;

    std::function<double(double)> f_;
    std::function<double(double)> F_;
    double q_ = 0.0;
    double alpha_f_ = 0.0;
    std::string kind_;
    double power_r_ = 0.0;
};

// Witness (rho, r, alpha0) for ess-inf alpha >= alpha0 > 0 over the geodesic
// annulus of center rho and half-width r.
struct EssInfWitness {
    double rho = 0.0;
    double r = 0.0;
    double alpha0 = 0.0;
};

// Nonnegative radial potential alpha as a profile of the geodesic radius,
// with its dmu-norms cached at construction.
class RadialWeight {
public:
    // alpha(s) = ((1-|s|^2)/2)^k, i.e. (1+cosh rho)^{-k} in the radius.
    static RadialWeight conformal_power(int dim, double exponent, double q);
    // Piecewise-linear profile from (rho, value) samples, zero beyond the table.
    static RadialWeight from_table(int dim, std::vector<std::pair<double, double>> samples, double q,
                                   std::optional<EssInfWitness> witness = std::nullopt);
    static RadialWeight custom(int dim, std::function<double(double)> profile, double q,
                               double support_radius,
                               std::optional<EssInfWitness> witness = std::nullopt);

    double operator()(double rho) const { return profile_(rho); }
    int dim() const { return dim_; }
    double p() const { return p_; } // q/(q-1)
    double norm_p() const { return norm_p_; }
    double norm_inf() const { return norm_inf_; }
    double norm_one() const { return norm_one_; }
    const EssInfWitness& witness() const { return witness_; }
    const std::string& kind() const { return kind_; }
    double conformal_exponent() const { return exponent_; }
    // Radius beyond which the profile is treated as negligible for norms.
    double norm_cutoff() const { return norm_cutoff_; }

private:
    RadialWeight() = default;
    void compute_norms();
    void find_witness();

    std::function<double(double)> profile_;
    int dim_ = 0;
    double p_ = 0.0;
    double norm_p_ = 0.0;
    double norm_inf_ = 0.0;
    double norm_one_ = 0.0;
    double norm_cutoff_ = 60.0;
    EssInfWitness witness_;
    std::string kind_;
    double exponent_ = 0.0;
};

struct GridSpec {
    int M = 2048;
    double R_max = 10.0;
    int quad_order = 6;
};

// A fully declared problem instance on its discretization grid.
struct Problem {
    int dim = 0;
    double q = 0.0;
    Nonlinearity nl = Nonlinearity::power(1.5, 3.0);
    RadialWeight alpha = RadialWeight::conformal_power(4, 4.0, 3.0);
    GridSpec spec;
    RadialGridPtr grid;

    Problem with_grid(const GridSpec& new_spec) const;
    // Same spec but with the four plateau kink radii inserted as exact nodes.
    Problem with_plateau_grid(double rho, double r) const;
};

// The model instance on the 4-ball: conformal-power weight with exponent 4
// and the odd power reaction |t|^{r-2} t, 1 < r < 2.
Problem make_model_problem(double r = 1.5, double q = 3.0, GridSpec spec = GridSpec{});

// JSON declaration: {dim, q, nonlinearity{kind,...}, weight{kind,...}, grid{M,R_max,quad_order}}.
Problem problem_from_json(const nlohmann::json& j);
nlohmann::json problem_to_json(const Problem& p);

// Quadratic part: half the Dirichlet energy.
double Phi(const RadialFunction& u);

// Potential part: integral of alpha(rho) F(u(rho)) against dmu.
double Psi(const RadialFunction& u, const RadialWeight& alpha, const Nonlinearity& nl);

// J_lambda = Phi - lambda * Psi.
double J_lambda(const RadialFunction& u, double lambda, const RadialWeight& alpha,
                const Nonlinearity& nl);

struct WeakResidual {
    // Pairing of J_lambda' with each non-Dirichlet nodal hat function.
    Eigen::VectorXd vector;
    // Dual norm of the pairing in the energy inner product.
    double norm = 0.0;
};

WeakResidual weak_residual(const RadialFunction& u, double lambda, const RadialWeight& alpha,
                           const Nonlinearity& nl);

// Residual path reusing a prebuilt factorization (used by iterative callers).
WeakResidual weak_residual(const RadialFunction& u, double lambda, const RadialWeight& alpha,
                           const Nonlinearity& nl, const ConstrainedStiffness& chol);

} // namespace hyperball
