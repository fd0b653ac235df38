#include "hyperball/testfn.hpp"

#include <array>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>

namespace hyperball {

Annulus::Annulus(double half_width_, double center_) : half_width(half_width_), center(center_) {
    if (!(half_width > 0.0 && center > half_width)) {
        throw std::invalid_argument("Annulus: requires 0 < half_width < center");
    }
}

bool Annulus::contains_radius(double rho) const {
    return rho > center - half_width && rho < center + half_width;
}

bool Annulus::contains(const BallPoint& p) const {
    return contains_radius(geodesic_distance_origin(p));
}

double plateau_value(double rho_point, double center, double half_width) {
    const double d = std::abs(rho_point - center);
    if (d >= half_width) return 0.0;
    if (d <= 0.5 * half_width) return 1.0;
    return (2.0 / half_width) * (half_width - d);
}

PlateauFunction build_plateau(double rho, double r, int dim, const GridSpec& hint) {
    if (!(r > 0.0 && r < rho)) throw std::invalid_argument("build_plateau: requires 0 < r < rho");
    if (!(rho + r <= hint.R_max)) {
        throw std::invalid_argument("build_plateau: support rho + r must fit inside R_max");
    }
    const std::array<double, 4> kinks = {rho - r, rho - 0.5 * r, rho + 0.5 * r, rho + r};
    const auto grid =
        RadialGrid::uniform_with_knots(dim, hint.R_max, hint.M, kinks, hint.quad_order);
    RadialFunction fn = RadialFunction::sample(
        grid, [rho, r](double x) { return plateau_value(x, rho, r); });
    return PlateauFunction{rho, r, std::move(fn)};
}

std::pair<double, double> default_plateau_params(const RadialWeight& alpha, double R_max) {
    if (R_max >= 3.0) {
        double min_alpha = alpha(1.0);
        for (int i = 0; i <= 400; ++i) {
            min_alpha = std::min(min_alpha, alpha(1.0 + 2.0 * static_cast<double>(i) / 400.0));
        }
        if (min_alpha > 0.0) return {2.0, 1.0};
    }
    const EssInfWitness& w = alpha.witness();
    double rho = w.rho;
    double r = w.r;
    if (rho + r > R_max) {
        // Shrink the witness annulus into the representable range.
        const double scale = R_max / (rho + r) * (1.0 - 1e-9);
        rho *= scale;
        r *= scale;
    }
    return {rho, r};
}

std::vector<double> default_t_sequence() {
    std::vector<double> t(8);
    double v = 1.0;
    for (int j = 0; j < 8; ++j) {
        v *= 0.1;
        t[j] = v;
    }
    return t;
}

namespace {

void validate_t_sequence(std::span<const double> t_sequence) {
    if (t_sequence.empty()) throw std::invalid_argument("diagnostic: empty t sequence");
    double prev = 1.0 + 1e-12;
    for (double t : t_sequence) {
        if (!(t > 0.0 && t <= 1.0)) {
            throw std::invalid_argument("diagnostic: t values must lie in (0, 1]");
        }
        if (!(t < prev)) throw std::invalid_argument("diagnostic: t sequence must be strictly decreasing");
        prev = t;
    }
}

RadialFunction scaled(const PlateauFunction& w, double t) {
    return RadialFunction(w.fn.grid_ptr(), t * w.fn.values());
}

} // namespace

RatioDiagnostic ratio_blowup_diagnostic(const PlateauFunction& w, const Nonlinearity& nl,
                                        const RadialWeight& alpha,
                                        std::span<const double> t_sequence,
                                        std::optional<double> threshold) {
    validate_t_sequence(t_sequence);
    if (!(dirichlet_energy(w.fn) > 0.0)) {
        throw std::invalid_argument("ratio_blowup_diagnostic: test function is trivial");
    }
    RatioDiagnostic diag;
    diag.rows.reserve(t_sequence.size());
    for (double t : t_sequence) {
        const RadialFunction tw = scaled(w, t);
        RatioRow row;
        row.t = t;
        row.phi = Phi(tw);
        row.psi = Psi(tw, alpha, nl);
        row.ratio = row.psi / row.phi;
        diag.rows.push_back(row);
    }
    diag.ratios_strictly_increasing = true;
    for (std::size_t i = 1; i < diag.rows.size(); ++i) {
        if (!(diag.rows[i].ratio > diag.rows[i - 1].ratio)) {
            diag.ratios_strictly_increasing = false;
            break;
        }
    }
    diag.blowup_detected = diag.ratios_strictly_increasing && diag.rows.size() >= 2 &&
                           diag.rows.back().ratio >= 10.0 * std::abs(diag.rows.front().ratio);
    if (threshold) {
        for (const auto& row : diag.rows) {
            if (row.ratio > *threshold) {
                diag.first_t_exceeding = row.t;
                break;
            }
        }
    }
    return diag;
}

NegativityDiagnostic negativity_diagnostic(const PlateauFunction& w, const Nonlinearity& nl,
                                           const RadialWeight& alpha, double lambda,
                                           double omega_bar,
                                           std::span<const double> t_sequence) {
    validate_t_sequence(t_sequence);
    if (lambda < 0.0) throw std::invalid_argument("negativity_diagnostic: lambda must be >= 0");
    NegativityDiagnostic diag;
    diag.rows.reserve(t_sequence.size());
    double best_j = 0.0;
    for (double t : t_sequence) {
        const RadialFunction tw = scaled(w, t);
        NegativityRow row;
        row.t = t;
        row.phi = Phi(tw);
        row.psi = Psi(tw, alpha, nl);
        row.j_lambda = row.phi - lambda * row.psi;
        row.in_sublevel = omega_bar > 0.0 && row.phi < omega_bar * omega_bar;
        if (!diag.first_negative_t && row.j_lambda < 0.0) diag.first_negative_t = t;
        if (row.j_lambda < best_j) {
            best_j = row.j_lambda;
            diag.best_t = t;
        }
        diag.rows.push_back(row);
    }
    return diag;
}

void write_diagnostic_csv(std::ostream& out, const RatioDiagnostic& ratio,
                          const NegativityDiagnostic& neg) {
    if (ratio.rows.size() != neg.rows.size()) {
        throw std::invalid_argument("write_diagnostic_csv: row count mismatch");
    }
    out << "t,Phi,Psi,ratio,J_lambda,in_sublevel\n";
    char buf[160];
    for (std::size_t i = 0; i < ratio.rows.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g,%.17g,%.17g,%d\n", ratio.rows[i].t,
                      ratio.rows[i].phi, ratio.rows[i].psi, ratio.rows[i].ratio,
                      neg.rows[i].j_lambda, neg.rows[i].in_sublevel ? 1 : 0);
        out << buf;
    }
}

} // namespace hyperball
