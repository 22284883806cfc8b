#pragma once

// Quadrature rules for averages over a zero-mean Gaussian velocity
// distribution, E[f(u)] with u ~ N(0, σ²).

#include <complex>
#include <span>
#include <string>
#include <vector>

namespace eitlock::quad {

enum class Method {
    gauss_hermite,  // global Gauss-Hermite; only accurate when f is smooth on the scale of σ
    trapezoid,      // uniform grid on ±cutoff·σ
    adaptive,       // composite Gauss-Legendre, graded toward the integrand's poles
};

std::string to_string(Method m);
Method method_from_string(const std::string& s);

struct QuadratureSpec {
    Method method = Method::adaptive;
    // Total nodes for gauss_hermite/trapezoid; nodes per panel for adaptive.
    int node_count = 16;
    // Half-width of the integration range in units of σ (trapezoid, adaptive).
    double velocity_cutoff = 8.0;
    // When > 0, every average is repeated with doubled node_count and a
    // difference larger than this raises QuadratureNotConverged.
    double convergence_tolerance = 0.0;

    void validate() const;
    QuadratureSpec doubled() const;
};

struct Rule {
    std::vector<double> nodes;
    std::vector<double> weights;  // include the normalized Gaussian density
};

// Gauss-Legendre on [-1, 1] and Gauss-Hermite for weight exp(-x²), via Golub-Welsch. Cached.
const Rule& legendre(int n);
const Rule& hermite(int n);

// Rule for E[f(u)], u ~ N(0, sigma²). `poles` are the complex singularities of f;
// only the adaptive method uses them.
Rule gaussian_rule(const QuadratureSpec& spec, double sigma,
                   std::span<const std::complex<double>> poles = {});

}  // namespace eitlock::quad
