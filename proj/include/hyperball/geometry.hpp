#pragma once

#include <cstdint>
#include <functional>

#include <Eigen/Dense>

#include "hyperball/rng.hpp"

namespace hyperball {

// Poincare ball model of hyperbolic N-space (N >= 3): the open unit ball of
// R^N carrying the conformal metric g_ij = 4 (1-|s|^2)^{-2} delta_ij.
//
// Closed forms used throughout:
//   volume element   dmu   = 2^N (1-|s|^2)^{-N} dx
//   distance to 0    d(s)  = log((1+|s|)/(1-|s|))
//   distance         d(s1,s2) = arccosh(1 + 2|s2-s1|^2 / ((1-|s1|^2)(1-|s2|^2)))
//   ball matching    Euclidean radius r <-> geodesic radius log((1+r)/(1-r))
//   gradient norm    |grad_H u| = ((1-|s|^2)/2) |grad u|_euclidean,
// the convention under which the Dirichlet integral of a radial function
// reduces to omega_{N-1} * int u'(rho)^2 sinh^{N-1}(rho) drho.
//
// Everything here is a pure function of its inputs and safe to call from
// any number of threads.

inline constexpr double kPi = 3.14159265358979323846;

// Points closer to the rim than this are rejected: (1-|s|^2)^{-N} overflows.
inline constexpr double kMaxPointNorm = 1.0 - 1e-12;

// omega_{N-1}: surface area of the unit sphere S^{N-1} in R^N.
double unit_sphere_area(int dim);

// Lebesgue volume of the Euclidean ball of given radius in R^N.
double euclidean_ball_volume(int dim, double radius);

// A point of the ball model in Euclidean coordinates, |coords| < 1 strictly.
class BallPoint {
public:
    BallPoint(Eigen::VectorXd coords);
    static BallPoint origin(int dim);

    const Eigen::VectorXd& coords() const { return coords_; }
    int dim() const { return static_cast<int>(coords_.size()); }
    double euclidean_norm() const { return coords_.norm(); }

private:
    Eigen::VectorXd coords_;
};

// Geodesic polar coordinates: radius rho >= 0 and a unit direction.
struct GeodesicPolar {
    double rho;
    Eigen::VectorXd theta;

    GeodesicPolar(double rho_, Eigen::VectorXd theta_);
};

// Element of SO(N): orthogonal with determinant +1 (checked to 1e-10).
class Rotation {
public:
    explicit Rotation(Eigen::MatrixXd matrix);
    static Rotation identity(int dim);

    const Eigen::MatrixXd& matrix() const { return matrix_; }
    int dim() const { return static_cast<int>(matrix_.rows()); }
    Rotation inverse() const;

private:
    Eigen::MatrixXd matrix_;
};

// Rotation by `angle` in the (axis1, axis2) coordinate plane.
Rotation plane_rotation(int dim, int axis1, int axis2, double angle);

// Haar-like random rotation: orthonormalized Gaussian matrix, det fixed to +1.
Rotation random_rotation(int dim, RandomStream& rng);

// d(s, 0) = log((1+|s|)/(1-|s|)).
double geodesic_distance_origin(const BallPoint& p);

// Two-point distance via the arccosh form; agrees with the one-point formula
// when one argument is the origin.
double geodesic_distance(const BallPoint& p1, const BallPoint& p2);

// Density of dmu against Lebesgue measure: 2^N (1-|s|^2)^{-N}.
double volume_density(const BallPoint& p);

// tanh(R/2): the Euclidean radius of the geodesic ball of radius R > 0.
double euclidean_radius_of_geodesic_ball(double R);

// Inverse of the above on radii (same as the one-point distance of |s| = r).
double geodesic_radius_of_euclidean_ball(double r);

BallPoint apply_rotation(const Rotation& g, const BallPoint& p);

GeodesicPolar to_polar(const BallPoint& p);
BallPoint from_polar(const GeodesicPolar& polar);

struct MonteCarloResult {
    double estimate = 0.0;
    double std_error = 0.0;
    std::uint64_t n_samples = 0;
};

// Unbiased estimate of the dmu-integral of `field` over the Euclidean ball of
// radius `cutoff_radius`, by uniform Euclidean sampling reweighted with the
// volume density. Deterministic for a fixed seed; throws on non-finite field
// values.
MonteCarloResult montecarlo_integral_dmu(int dim, const std::function<double(const BallPoint&)>& field,
                                         std::uint64_t n_samples, double cutoff_radius,
                                         std::uint64_t seed);

} // namespace hyperball
