#pragma once

#include <functional>
#include <vector>

namespace hyperball {

// Gauss-Legendre rule on (-1, 1); exact for polynomials of degree 2n-1.
struct GaussRule {
    std::vector<double> nodes;   // ascending
    std::vector<double> weights; // positive, sum to 2
};

// Cached rule with n points. Thread-safe. Throws std::invalid_argument for n < 1.
const GaussRule& gauss_legendre(int n);

// Adaptive Simpson on [a, b] with absolute tolerance.
double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                        double abs_tol = 1e-12, int max_depth = 48);

} // namespace hyperball
