#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "hyperball/geometry.hpp"
#include "hyperball/problem.hpp"
#include "hyperball/radial.hpp"

namespace hyperball {

// Geodesic annulus: points whose geodesic radius lies strictly in
// (center - half_width, center + half_width).
struct Annulus {
    double half_width = 0.0;
    double center = 0.0;

    Annulus(double half_width_, double center_);
    bool contains_radius(double rho) const;
    bool contains(const BallPoint& p) const;
};

// Plateau profile of the geodesic radius: 1 on the inner annulus of
// half-width r/2 around rho, 0 outside the annulus of half-width r, linear
// ramps of slope 2/r between. Represented exactly on a kink-aligned grid.
struct PlateauFunction {
    double center = 0.0;     // rho
    double half_width = 0.0; // r
    RadialFunction fn;

    Annulus support() const { return Annulus(half_width, center); }
    Annulus core() const { return Annulus(0.5 * half_width, center); }
};

// Exact plateau value at a geodesic radius (closed form, grid-free).
double plateau_value(double rho_point, double center, double half_width);

// Builds the plateau on a uniform grid refined with the four kink radii.
// Requires 0 < r < rho and rho + r <= hint.R_max.
PlateauFunction build_plateau(double rho, double r, int dim, const GridSpec& hint);

// Default probe annulus: (2, 1) when alpha is bounded away from zero there,
// otherwise the weight's ess-inf witness annulus.
std::pair<double, double> default_plateau_params(const RadialWeight& alpha, double R_max);

// t_j = 10^{-j}, j = 1..8.
std::vector<double> default_t_sequence();

struct RatioRow {
    double t = 0.0;
    double phi = 0.0;
    double psi = 0.0;
    double ratio = 0.0; // psi / phi
};

struct RatioDiagnostic {
    std::vector<RatioRow> rows;
    bool ratios_strictly_increasing = false;
    // Blow-up call: ratios increase monotonically along t -> 0 and the last
    // row dominates the first by at least a decade.
    bool blowup_detected = false;
    // Largest tabulated t whose ratio exceeds the supplied threshold.
    std::optional<double> first_t_exceeding;
};

RatioDiagnostic ratio_blowup_diagnostic(const PlateauFunction& w, const Nonlinearity& nl,
                                        const RadialWeight& alpha,
                                        std::span<const double> t_sequence,
                                        std::optional<double> threshold = std::nullopt);

struct NegativityRow {
    double t = 0.0;
    double phi = 0.0;
    double psi = 0.0;
    double j_lambda = 0.0;
    bool in_sublevel = false; // Phi(t w) < omega_bar^2
};

struct NegativityDiagnostic {
    std::vector<NegativityRow> rows;
    std::optional<double> first_negative_t; // largest tabulated t with J < 0
    std::optional<double> best_t;           // row minimizing J
};

NegativityDiagnostic negativity_diagnostic(const PlateauFunction& w, const Nonlinearity& nl,
                                           const RadialWeight& alpha, double lambda,
                                           double omega_bar,
                                           std::span<const double> t_sequence);

// Merged table (t, Phi, Psi, ratio, J_lambda, in_sublevel) at 17 digits.
void write_diagnostic_csv(std::ostream& out, const RatioDiagnostic& ratio,
                          const NegativityDiagnostic& neg);

} // namespace hyperball
