#include "hyperball/geometry.hpp"

#include <cmath>
#include <stdexcept>

namespace hyperball {

double unit_sphere_area(int dim) {
    if (dim < 1) throw std::invalid_argument("unit_sphere_area: dim must be >= 1");
    const double n = static_cast<double>(dim);
    return std::exp(std::log(2.0) + 0.5 * n * std::log(kPi) - std::lgamma(0.5 * n));
}

double euclidean_ball_volume(int dim, double radius) {
    if (dim < 1) throw std::invalid_argument("euclidean_ball_volume: dim must be >= 1");
    if (radius < 0.0) throw std::invalid_argument("euclidean_ball_volume: radius must be >= 0");
    const double n = static_cast<double>(dim);
    return std::exp(0.5 * n * std::log(kPi) - std::lgamma(0.5 * n + 1.0) + n * std::log(radius));
}

BallPoint::BallPoint(Eigen::VectorXd coords) : coords_(std::move(coords)) {
    if (coords_.size() < 3) throw std::invalid_argument("BallPoint: dimension must be >= 3");
    const double norm = coords_.norm();
    if (!(norm <= kMaxPointNorm)) {
        throw std::invalid_argument("BallPoint: |coords| must be < 1 (strictly, with rim guard)");
    }
}

BallPoint BallPoint::origin(int dim) { return BallPoint(Eigen::VectorXd::Zero(dim)); }

GeodesicPolar::GeodesicPolar(double rho_, Eigen::VectorXd theta_)
    : rho(rho_), theta(std::move(theta_)) {
    if (rho < 0.0) throw std::invalid_argument("GeodesicPolar: rho must be >= 0");
    if (std::abs(theta.norm() - 1.0) > 1e-12) {
        throw std::invalid_argument("GeodesicPolar: theta must be a unit vector");
    }
}

Rotation::Rotation(Eigen::MatrixXd matrix) : matrix_(std::move(matrix)) {
    if (matrix_.rows() != matrix_.cols() || matrix_.rows() < 3) {
        throw std::invalid_argument("Rotation: matrix must be square, dim >= 3");
    }
    const int n = static_cast<int>(matrix_.rows());
    const double orth_defect =
        (matrix_.transpose() * matrix_ - Eigen::MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff();
    if (orth_defect > 1e-10) throw std::invalid_argument("Rotation: matrix is not orthogonal");
    const double det = matrix_.determinant();
    if (std::abs(det - 1.0) > 1e-10) throw std::invalid_argument("Rotation: determinant must be +1");
}

Rotation Rotation::identity(int dim) { return Rotation(Eigen::MatrixXd::Identity(dim, dim)); }

Rotation Rotation::inverse() const { return Rotation(matrix_.transpose()); }

Rotation plane_rotation(int dim, int axis1, int axis2, double angle) {
    if (axis1 < 0 || axis2 < 0 || axis1 >= dim || axis2 >= dim || axis1 == axis2) {
        throw std::invalid_argument("plane_rotation: invalid axes");
    }
    Eigen::MatrixXd m = Eigen::MatrixXd::Identity(dim, dim);
    const double c = std::cos(angle);
    const double s = std::sin(angle);
    m(axis1, axis1) = c;
    m(axis2, axis2) = c;
    m(axis1, axis2) = -s;
    m(axis2, axis1) = s;
    return Rotation(m);
}

Rotation random_rotation(int dim, RandomStream& rng) {
    Eigen::MatrixXd gauss(dim, dim);
    for (int i = 0; i < dim; ++i) {
        for (int j = 0; j < dim; ++j) gauss(i, j) = rng.normal();
    }
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(gauss);
    Eigen::MatrixXd q = qr.householderQ();
    Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
    // Fix the sign ambiguity of QR so the distribution is Haar, then force det = +1.
    for (int j = 0; j < dim; ++j) {
        if (r(j, j) < 0.0) q.col(j) *= -1.0;
    }
    if (q.determinant() < 0.0) q.col(0) *= -1.0;
    return Rotation(q);
}

double geodesic_distance_origin(const BallPoint& p) {
    const double s = p.euclidean_norm();
    return std::log((1.0 + s) / (1.0 - s));
}

double geodesic_distance(const BallPoint& p1, const BallPoint& p2) {
    if (p1.dim() != p2.dim()) throw std::invalid_argument("geodesic_distance: dimension mismatch");
    const double n1 = p1.coords().squaredNorm();
    const double n2 = p2.coords().squaredNorm();
    const double diff = (p2.coords() - p1.coords()).squaredNorm();
    const double arg = 1.0 + 2.0 * diff / ((1.0 - n1) * (1.0 - n2));
    return std::acosh(arg);
}

double volume_density(const BallPoint& p) {
    const int n = p.dim();
    const double one_minus = 1.0 - p.coords().squaredNorm();
    return std::exp(n * (std::log(2.0) - std::log(one_minus)));
}

double euclidean_radius_of_geodesic_ball(double R) {
    if (!(R > 0.0)) throw std::invalid_argument("euclidean_radius_of_geodesic_ball: R must be > 0");
    return std::tanh(0.5 * R);
}

double geodesic_radius_of_euclidean_ball(double r) {
    if (!(r > 0.0 && r < 1.0)) {
        throw std::invalid_argument("geodesic_radius_of_euclidean_ball: r must be in (0,1)");
    }
    return std::log((1.0 + r) / (1.0 - r));
}

BallPoint apply_rotation(const Rotation& g, const BallPoint& p) {
    if (g.dim() != p.dim()) throw std::invalid_argument("apply_rotation: dimension mismatch");
    return BallPoint(g.matrix() * p.coords());
}

GeodesicPolar to_polar(const BallPoint& p) {
    const double s = p.euclidean_norm();
    if (s == 0.0) {
        Eigen::VectorXd e1 = Eigen::VectorXd::Zero(p.dim());
        e1(0) = 1.0;
        return GeodesicPolar(0.0, e1);
    }
    return GeodesicPolar(geodesic_distance_origin(p), p.coords() / s);
}

BallPoint from_polar(const GeodesicPolar& polar) {
    const double s = std::tanh(0.5 * polar.rho);
    return BallPoint(s * polar.theta);
}

MonteCarloResult montecarlo_integral_dmu(int dim, const std::function<double(const BallPoint&)>& field,
                                         std::uint64_t n_samples, double cutoff_radius,
                                         std::uint64_t seed) {
    if (n_samples < 1) throw std::invalid_argument("montecarlo_integral_dmu: n_samples must be >= 1");
    if (!(cutoff_radius > 0.0 && cutoff_radius < 1.0)) {
        throw std::invalid_argument("montecarlo_integral_dmu: cutoff_radius must be in (0,1)");
    }
    // Keep one rim-guard margin below the BallPoint bound so that rounding in
    // the direction rescale cannot push a sample past the guard.
    const double cutoff = std::min(cutoff_radius, 1.0 - 2e-12);
    const double vol = euclidean_ball_volume(dim, cutoff);
    RandomStream rng(seed);

    // Welford accumulation of field * density over uniform draws in B(cutoff).
    double mean = 0.0;
    double m2 = 0.0;
    Eigen::VectorXd direction(dim);
    for (std::uint64_t k = 0; k < n_samples; ++k) {
        double norm2 = 0.0;
        do {
            norm2 = 0.0;
            for (int i = 0; i < dim; ++i) {
                direction(i) = rng.normal();
                norm2 += direction(i) * direction(i);
            }
        } while (norm2 < 1e-290);
        const double radius = cutoff * std::pow(rng.uniform01(), 1.0 / static_cast<double>(dim));
        const BallPoint point(direction * (radius / std::sqrt(norm2)));
        const double value = field(point) * volume_density(point);
        if (!std::isfinite(value)) {
            throw std::domain_error("montecarlo_integral_dmu: non-finite field value");
        }
        const double delta = value - mean;
        mean += delta / static_cast<double>(k + 1);
        m2 += delta * (value - mean);
    }

    MonteCarloResult result;
    result.n_samples = n_samples;
    result.estimate = vol * mean;
    if (n_samples > 1) {
        const double var = m2 / static_cast<double>(n_samples - 1);
        result.std_error = vol * std::sqrt(var / static_cast<double>(n_samples));
    }
    return result;
}

} // namespace hyperball
