#include "hyperball/radial.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "hyperball/geometry.hpp"
#include "hyperball/quadrature.hpp"

namespace hyperball {

namespace {

double sinh_pow(double rho, int exponent) {
    return std::pow(std::sinh(rho), exponent);
}

} // namespace

RadialGrid::RadialGrid(int dim, std::vector<double> nodes, int quad_order)
    : dim_(dim), quad_order_(quad_order), nodes_(std::move(nodes)) {
    if (dim_ < 3) throw std::invalid_argument("RadialGrid: dim must be >= 3");
    if (quad_order_ < 2) throw std::invalid_argument("RadialGrid: quad_order must be >= 2");
    if (nodes_.size() < 2) throw std::invalid_argument("RadialGrid: need at least one cell");
    if (nodes_.front() != 0.0) throw std::invalid_argument("RadialGrid: first node must be 0");
    if (!(nodes_.back() > 0.0)) throw std::invalid_argument("RadialGrid: R_max must be > 0");
    for (std::size_t i = 1; i < nodes_.size(); ++i) {
        if (!(nodes_[i] > nodes_[i - 1])) {
            throw std::invalid_argument("RadialGrid: nodes must be strictly increasing");
        }
    }

    const GaussRule& rule = gauss_legendre(quad_order_);
    const int cells = num_cells();
    quad_points_.resize(static_cast<std::size_t>(cells) * quad_order_);
    quad_weights_.resize(static_cast<std::size_t>(cells) * quad_order_);
    cell_weight_ints_.resize(cells);
    const int weight_exp = dim_ - 1;
    for (int c = 0; c < cells; ++c) {
        const double a = nodes_[c];
        const double b = nodes_[c + 1];
        const double mid = 0.5 * (a + b);
        const double half = 0.5 * (b - a);
        double cell_int = 0.0;
        for (int g = 0; g < quad_order_; ++g) {
            const double rho = mid + half * rule.nodes[g];
            const double w = half * rule.weights[g] * sinh_pow(rho, weight_exp);
            quad_points_[c * quad_order_ + g] = rho;
            quad_weights_[c * quad_order_ + g] = w;
            cell_int += w;
        }
        cell_weight_ints_[c] = cell_int;
    }
}

std::shared_ptr<const RadialGrid> RadialGrid::uniform(int dim, double R_max, int cells,
                                                      int quad_order) {
    if (cells < 1) throw std::invalid_argument("RadialGrid::uniform: cells must be >= 1");
    if (!(R_max > 0.0)) throw std::invalid_argument("RadialGrid::uniform: R_max must be > 0");
    std::vector<double> nodes(cells + 1);
    for (int i = 0; i <= cells; ++i) nodes[i] = R_max * static_cast<double>(i) / cells;
    nodes.front() = 0.0;
    nodes.back() = R_max;
    return std::make_shared<const RadialGrid>(dim, std::move(nodes), quad_order);
}

std::shared_ptr<const RadialGrid> RadialGrid::uniform_with_knots(int dim, double R_max, int cells,
                                                                 std::span<const double> knots,
                                                                 int quad_order) {
    if (cells < 1) throw std::invalid_argument("RadialGrid::uniform_with_knots: cells must be >= 1");
    std::vector<double> nodes(cells + 1);
    for (int i = 0; i <= cells; ++i) nodes[i] = R_max * static_cast<double>(i) / cells;
    nodes.front() = 0.0;
    nodes.back() = R_max;
    for (double k : knots) {
        if (!(k > 0.0 && k < R_max)) {
            throw std::invalid_argument("uniform_with_knots: knots must lie in (0, R_max)");
        }
        nodes.push_back(k);
    }
    std::sort(nodes.begin(), nodes.end());
    // Drop near-duplicates so the inserted knots replace coincident uniform nodes.
    const double tol = 1e-12 * std::max(1.0, R_max);
    std::vector<double> unique_nodes;
    unique_nodes.reserve(nodes.size());
    for (double x : nodes) {
        if (unique_nodes.empty() || x - unique_nodes.back() > tol) {
            unique_nodes.push_back(x);
        }
    }
    unique_nodes.front() = 0.0;
    unique_nodes.back() = R_max;
    return std::make_shared<const RadialGrid>(dim, std::move(unique_nodes), quad_order);
}

bool RadialGrid::same_as(const RadialGrid& other) const {
    return dim_ == other.dim_ && quad_order_ == other.quad_order_ && nodes_ == other.nodes_;
}

int RadialGrid::locate_cell(double rho) const {
    if (rho <= nodes_.front()) return 0;
    if (rho >= nodes_.back()) return num_cells() - 1;
    const auto it = std::upper_bound(nodes_.begin(), nodes_.end(), rho);
    return static_cast<int>(it - nodes_.begin()) - 1;
}

RadialFunction::RadialFunction(RadialGridPtr grid, Eigen::VectorXd values)
    : grid_(std::move(grid)), values_(std::move(values)) {
    if (!grid_) throw std::invalid_argument("RadialFunction: null grid");
    if (values_.size() != grid_->num_nodes()) {
        throw std::invalid_argument("RadialFunction: values length must match node count");
    }
    if (values_[values_.size() - 1] != 0.0) {
        throw std::invalid_argument("RadialFunction: value at R_max must be 0 (Dirichlet)");
    }
    if (!values_.allFinite()) throw std::invalid_argument("RadialFunction: non-finite values");
}

RadialFunction RadialFunction::zero(RadialGridPtr grid) {
    Eigen::VectorXd v = Eigen::VectorXd::Zero(grid->num_nodes());
    return RadialFunction(std::move(grid), std::move(v));
}

RadialFunction RadialFunction::sample(RadialGridPtr grid, const std::function<double(double)>& fn) {
    Eigen::VectorXd v(grid->num_nodes());
    for (int i = 0; i < grid->num_nodes(); ++i) v(i) = fn(grid->nodes()[i]);
    return RadialFunction(std::move(grid), std::move(v));
}

double RadialFunction::value_at(double rho) const {
    const auto& nodes = grid_->nodes();
    if (rho <= 0.0) return values_[0];
    if (rho >= nodes.back()) return 0.0;
    const int c = grid_->locate_cell(rho);
    const double a = nodes[c];
    const double b = nodes[c + 1];
    const double t = (rho - a) / (b - a);
    return (1.0 - t) * values_[c] + t * values_[c + 1];
}

double RadialFunction::derivative_at(double rho) const {
    if (rho < 0.0 || rho >= grid_->R_max()) return 0.0;
    return slope_in_cell(grid_->locate_cell(rho));
}

double RadialFunction::slope_in_cell(int c) const {
    const auto& nodes = grid_->nodes();
    return (values_[c + 1] - values_[c]) / (nodes[c + 1] - nodes[c]);
}

double integrate_radial(const RadialGrid& grid, const std::function<double(double)>& fn,
                        int quad_order_override) {
    double total = 0.0;
    if (quad_order_override <= 0 || quad_order_override == grid.quad_order()) {
        for (int c = 0; c < grid.num_cells(); ++c) {
            double acc = 0.0;
            for (int g = 0; g < grid.quad_order(); ++g) {
                acc += grid.quad_weight(c, g) * fn(grid.quad_point(c, g));
            }
            total += acc;
        }
        return total;
    }
    const GaussRule& rule = gauss_legendre(quad_order_override);
    const int weight_exp = grid.dim() - 1;
    const auto& nodes = grid.nodes();
    for (int c = 0; c < grid.num_cells(); ++c) {
        const double mid = 0.5 * (nodes[c] + nodes[c + 1]);
        const double half = 0.5 * (nodes[c + 1] - nodes[c]);
        double acc = 0.0;
        for (int g = 0; g < quad_order_override; ++g) {
            const double rho = mid + half * rule.nodes[g];
            acc += half * rule.weights[g] * std::pow(std::sinh(rho), weight_exp) * fn(rho);
        }
        total += acc;
    }
    return total;
}

double integrate_radial_values(const RadialFunction& u,
                               const std::function<double(double, double)>& g) {
    const RadialGrid& grid = u.grid();
    const auto& nodes = grid.nodes();
    const auto& v = u.values();
    double total = 0.0;
    for (int c = 0; c < grid.num_cells(); ++c) {
        const double a = nodes[c];
        const double inv_h = 1.0 / (nodes[c + 1] - a);
        double acc = 0.0;
        for (int q = 0; q < grid.quad_order(); ++q) {
            const double rho = grid.quad_point(c, q);
            const double t = (rho - a) * inv_h;
            const double uval = (1.0 - t) * v[c] + t * v[c + 1];
            acc += grid.quad_weight(c, q) * g(rho, uval);
        }
        total += acc;
    }
    return total;
}

double dirichlet_energy(const RadialFunction& u, int quad_order_override) {
    const RadialGrid& grid = u.grid();
    const double omega = unit_sphere_area(grid.dim());
    double total = 0.0;
    if (quad_order_override <= 0 || quad_order_override == grid.quad_order()) {
        for (int c = 0; c < grid.num_cells(); ++c) {
            const double s = u.slope_in_cell(c);
            total += s * s * grid.cell_weight_integral(c);
        }
        return omega * total;
    }
    const GaussRule& rule = gauss_legendre(quad_order_override);
    const int weight_exp = grid.dim() - 1;
    const auto& nodes = grid.nodes();
    for (int c = 0; c < grid.num_cells(); ++c) {
        const double mid = 0.5 * (nodes[c] + nodes[c + 1]);
        const double half = 0.5 * (nodes[c + 1] - nodes[c]);
        double cell_int = 0.0;
        for (int g = 0; g < quad_order_override; ++g) {
            cell_int += half * rule.weights[g] * std::pow(std::sinh(mid + half * rule.nodes[g]), weight_exp);
        }
        const double s = u.slope_in_cell(c);
        total += s * s * cell_int;
    }
    return omega * total;
}

double lebesgue_norm(const RadialFunction& u, double nu) {
    const int n = u.grid().dim();
    const double critical = 2.0 * n / (n - 2.0);
    if (!(nu >= 2.0 && nu <= critical)) {
        throw std::invalid_argument("lebesgue_norm: nu must lie in [2, 2N/(N-2)]");
    }
    const double omega = unit_sphere_area(n);
    const double integral =
        integrate_radial_values(u, [nu](double, double uval) { return std::pow(std::abs(uval), nu); });
    return std::pow(omega * integral, 1.0 / nu);
}

double weighted_abs_integral(const RadialFunction& u, const std::function<double(double)>& w) {
    const double omega = unit_sphere_area(u.grid().dim());
    return omega *
           integrate_radial_values(u, [&w](double rho, double uval) { return w(rho) * std::abs(uval); });
}

double inner_product(const RadialFunction& u, const RadialFunction& v) {
    if (!u.grid().same_as(v.grid())) throw std::invalid_argument("inner_product: grid mismatch");
    const RadialGrid& grid = u.grid();
    const double omega = unit_sphere_area(grid.dim());
    double total = 0.0;
    for (int c = 0; c < grid.num_cells(); ++c) {
        total += u.slope_in_cell(c) * v.slope_in_cell(c) * grid.cell_weight_integral(c);
    }
    return omega * total;
}

RadialOperators assemble_operators(const RadialGrid& grid,
                                   const std::function<double(double)>& weight) {
    const int n = grid.num_nodes();
    const auto& nodes = grid.nodes();
    std::vector<Eigen::Triplet<double>> s_trip;
    std::vector<Eigen::Triplet<double>> m_trip;
    s_trip.reserve(4 * grid.num_cells());
    m_trip.reserve(4 * grid.num_cells());
    for (int c = 0; c < grid.num_cells(); ++c) {
        const double h = nodes[c + 1] - nodes[c];
        const double k = grid.cell_weight_integral(c) / (h * h);
        s_trip.emplace_back(c, c, k);
        s_trip.emplace_back(c + 1, c + 1, k);
        s_trip.emplace_back(c, c + 1, -k);
        s_trip.emplace_back(c + 1, c, -k);

        // Hat products integrated with the cell's quadrature (the weight may
        // be non-polynomial, so reuse the same rule as everything else).
        double m00 = 0.0, m01 = 0.0, m11 = 0.0;
        for (int g = 0; g < grid.quad_order(); ++g) {
            const double rho = grid.quad_point(c, g);
            const double t = (rho - nodes[c]) / h;
            double wq = grid.quad_weight(c, g);
            if (weight) {
                const double wv = weight(rho);
                if (wv < 0.0) throw std::invalid_argument("assemble_operators: negative weight");
                wq *= wv;
            }
            m00 += wq * (1.0 - t) * (1.0 - t);
            m01 += wq * (1.0 - t) * t;
            m11 += wq * t * t;
        }
        m_trip.emplace_back(c, c, m00);
        m_trip.emplace_back(c + 1, c + 1, m11);
        m_trip.emplace_back(c, c + 1, m01);
        m_trip.emplace_back(c + 1, c, m01);
    }
    RadialOperators ops;
    ops.stiffness.resize(n, n);
    ops.mass.resize(n, n);
    ops.stiffness.setFromTriplets(s_trip.begin(), s_trip.end());
    ops.mass.setFromTriplets(m_trip.begin(), m_trip.end());
    return ops;
}

Eigen::VectorXd assemble_load(const RadialFunction& u,
                              const std::function<double(double, double)>& g) {
    const RadialGrid& grid = u.grid();
    const auto& nodes = grid.nodes();
    const auto& v = u.values();
    Eigen::VectorXd b = Eigen::VectorXd::Zero(grid.num_nodes());
    for (int c = 0; c < grid.num_cells(); ++c) {
        const double a = nodes[c];
        const double inv_h = 1.0 / (nodes[c + 1] - a);
        for (int q = 0; q < grid.quad_order(); ++q) {
            const double rho = grid.quad_point(c, q);
            const double t = (rho - a) * inv_h;
            const double uval = (1.0 - t) * v[c] + t * v[c + 1];
            const double gw = grid.quad_weight(c, q) * g(rho, uval);
            b[c] += gw * (1.0 - t);
            b[c + 1] += gw * t;
        }
    }
    return b;
}

ConstrainedStiffness::ConstrainedStiffness(const RadialGrid& grid) {
    const RadialOperators ops = assemble_operators(grid);
    const int free = grid.num_nodes() - 1;
    s_free_ = ops.stiffness.topLeftCorner(free, free);
    s_free_.makeCompressed();
    ldlt_.compute(s_free_);
    if (ldlt_.info() != Eigen::Success) {
        throw std::runtime_error("ConstrainedStiffness: factorization failed (degenerate grid)");
    }
}

Eigen::VectorXd ConstrainedStiffness::solve(const Eigen::VectorXd& r) const {
    if (r.size() != s_free_.rows()) {
        throw std::invalid_argument("ConstrainedStiffness::solve: size mismatch");
    }
    return ldlt_.solve(r);
}

void write_csv(const RadialFunction& u, std::ostream& out) {
    out << "rho,value\n";
    char buf[64];
    const auto& nodes = u.grid().nodes();
    for (int i = 0; i < u.grid().num_nodes(); ++i) {
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g\n", nodes[i], u.values()[i]);
        out << buf;
    }
}

void write_csv(const RadialFunction& u, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_csv: cannot open " + path);
    write_csv(u, out);
}

RadialFunction radial_function_from_csv(const std::string& path, int dim, int quad_order) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("radial_function_from_csv: cannot open " + path);
    std::string line;
    if (!std::getline(in, line) || line.rfind("rho,value", 0) != 0) {
        throw std::runtime_error("radial_function_from_csv: bad header");
    }
    std::vector<double> nodes;
    std::vector<double> values;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream row(line);
        std::string a, b;
        if (!std::getline(row, a, ',') || !std::getline(row, b)) {
            throw std::runtime_error("radial_function_from_csv: bad row: " + line);
        }
        nodes.push_back(std::stod(a));
        values.push_back(std::stod(b));
    }
    auto grid = std::make_shared<const RadialGrid>(dim, std::move(nodes), quad_order);
    Eigen::VectorXd v = Eigen::Map<Eigen::VectorXd>(values.data(), static_cast<long>(values.size()));
    return RadialFunction(std::move(grid), std::move(v));
}

} // namespace hyperball
