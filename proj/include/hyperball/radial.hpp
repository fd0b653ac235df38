#pragma once

#include <functional>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace hyperball {

// Piecewise-linear discretization of rotation-invariant functions as nodal
// values on a geodesic-radius grid [0, R_max], with a homogeneous Dirichlet
// value at the last node. All integrals carry the sinh^{N-1}(rho) weight of
// the radial volume element; Gauss-Legendre quadrature per cell.
//
// Grids and functions are immutable after construction; every operation is a
// pure function and thread-safe.
class RadialGrid {
public:
    RadialGrid(int dim, std::vector<double> nodes, int quad_order);

    static std::shared_ptr<const RadialGrid> uniform(int dim, double R_max, int cells,
                                                     int quad_order = 6);
    // Uniform grid with extra node locations inserted exactly (kink alignment).
    static std::shared_ptr<const RadialGrid> uniform_with_knots(int dim, double R_max, int cells,
                                                                std::span<const double> knots,
                                                                int quad_order = 6);

    int dim() const { return dim_; }
    double R_max() const { return nodes_.back(); }
    int quad_order() const { return quad_order_; }
    const std::vector<double>& nodes() const { return nodes_; }
    int num_nodes() const { return static_cast<int>(nodes_.size()); }
    int num_cells() const { return num_nodes() - 1; }

    // sinh^{N-1}-weighted length of cell c at the grid's quadrature order.
    double cell_weight_integral(int c) const { return cell_weight_ints_[c]; }

    // Quadrature tables: point g of cell c sits at point(c,g) with weight
    // weight(c,g) already including sinh^{N-1}.
    double quad_point(int c, int g) const { return quad_points_[c * quad_order_ + g]; }
    double quad_weight(int c, int g) const { return quad_weights_[c * quad_order_ + g]; }

    bool same_as(const RadialGrid& other) const;

    // Cell index whose closed interval contains rho (clamped to the range).
    int locate_cell(double rho) const;

private:
    int dim_;
    int quad_order_;
    std::vector<double> nodes_;
    std::vector<double> quad_points_;
    std::vector<double> quad_weights_;
    std::vector<double> cell_weight_ints_;
};

using RadialGridPtr = std::shared_ptr<const RadialGrid>;

class RadialFunction {
public:
    RadialFunction(RadialGridPtr grid, Eigen::VectorXd values);

    static RadialFunction zero(RadialGridPtr grid);
    // Samples fn at the nodes; the last nodal value must come out 0.
    static RadialFunction sample(RadialGridPtr grid, const std::function<double(double)>& fn);

    const RadialGrid& grid() const { return *grid_; }
    const RadialGridPtr& grid_ptr() const { return grid_; }
    const Eigen::VectorXd& values() const { return values_; }

    double value_at(double rho) const;   // piecewise linear, 0 outside [0, R_max]
    double derivative_at(double rho) const; // slope of the containing cell, 0 outside
    double slope_in_cell(int c) const;

private:
    RadialGridPtr grid_;
    Eigen::VectorXd values_;
};

// int_0^{R_max} fn(rho) sinh^{N-1}(rho) drho (no sphere-area factor).
// quad_order_override = 0 uses the grid's cached tables.
double integrate_radial(const RadialGrid& grid, const std::function<double(double)>& fn,
                        int quad_order_override = 0);

// Same weighted integral of g(rho, u(rho)) with u evaluated cell-locally.
double integrate_radial_values(const RadialFunction& u,
                               const std::function<double(double, double)>& g);

// ||u||^2 = omega_{N-1} * int u'(rho)^2 sinh^{N-1} drho.
double dirichlet_energy(const RadialFunction& u, int quad_order_override = 0);

// L^nu(dmu) norm, nu restricted to [2, 2N/(N-2)].
double lebesgue_norm(const RadialFunction& u, double nu);

// omega_{N-1} * int w(rho) |u| sinh^{N-1} drho (the weighted L^1 pairing).
double weighted_abs_integral(const RadialFunction& u, const std::function<double(double)>& w);

// Energy inner product; grids must match.
double inner_product(const RadialFunction& u, const RadialFunction& v);

struct RadialOperators {
    Eigen::SparseMatrix<double> stiffness; // int phi_i' phi_j' sinh^{N-1}
    Eigen::SparseMatrix<double> mass;      // int phi_i phi_j [weight] sinh^{N-1}
};

// Assembly over all nodes (no Dirichlet elimination); the sphere-area factor
// omega_{N-1} is deliberately left out: u^T S u * omega = dirichlet_energy(u).
RadialOperators assemble_operators(const RadialGrid& grid,
                                   const std::function<double(double)>& weight = nullptr);

// Load vector b_i = int g(rho, u(rho)) phi_i(rho) sinh^{N-1} drho, all nodes.
Eigen::VectorXd assemble_load(const RadialFunction& u,
                              const std::function<double(double, double)>& g);

// Cholesky of the stiffness restricted to the non-Dirichlet nodes 0..M-1.
// Used for dual norms and energy-metric preconditioning.
class ConstrainedStiffness {
public:
    explicit ConstrainedStiffness(const RadialGrid& grid);

    // Solve S_c x = r on the free nodes.
    Eigen::VectorXd solve(const Eigen::VectorXd& r) const;
    const Eigen::SparseMatrix<double>& matrix() const { return s_free_; }

private:
    Eigen::SparseMatrix<double> s_free_;
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt_;
};

// CSV exchange format: header "rho,value", one node per row, 17 significant digits.
void write_csv(const RadialFunction& u, std::ostream& out);
void write_csv(const RadialFunction& u, const std::string& path);
RadialFunction radial_function_from_csv(const std::string& path, int dim, int quad_order = 6);

} // namespace hyperball
