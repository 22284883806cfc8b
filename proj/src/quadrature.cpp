#include "eitlock/quadrature.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>

#include "eitlock/errors.hpp"
#include "eitlock/units.hpp"

namespace eitlock::quad {

std::string to_string(Method m) {
    switch (m) {
        case Method::gauss_hermite: return "gauss_hermite";
        case Method::trapezoid: return "trapezoid";
        case Method::adaptive: return "adaptive";
    }
    return "adaptive";
}

Method method_from_string(const std::string& s) {
    if (s == "gauss_hermite") return Method::gauss_hermite;
    if (s == "trapezoid") return Method::trapezoid;
    if (s == "adaptive") return Method::adaptive;
    throw InvalidArgument("unknown quadrature method '" + s + "'");
}

void QuadratureSpec::validate() const {
    if (node_count < 8) throw InvalidArgument("quadrature.node_count must be >= 8");
    if (!(velocity_cutoff > 0)) throw InvalidArgument("quadrature.velocity_cutoff must be > 0");
    if (!(convergence_tolerance >= 0)) throw InvalidArgument("quadrature.convergence_tolerance must be >= 0");
}

QuadratureSpec QuadratureSpec::doubled() const {
    QuadratureSpec d = *this;
    d.node_count = method == Method::trapezoid ? 2 * node_count - 1 : 2 * node_count;
    return d;
}

namespace {

// Golub-Welsch: nodes are eigenvalues of the Jacobi matrix, weights mu0 * v0².
Rule golub_welsch(const Eigen::VectorXd& diag, const Eigen::VectorXd& offdiag, double mu0) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
    solver.computeFromTridiagonal(diag, offdiag, Eigen::ComputeEigenvectors);
    const auto n = diag.size();
    Rule r;
    r.nodes.resize(n);
    r.weights.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        r.nodes[i] = solver.eigenvalues()(i);
        const double v0 = solver.eigenvectors()(0, i);
        r.weights[i] = mu0 * v0 * v0;
    }
    return r;
}

template <class Build>
const Rule& cached(std::map<int, std::unique_ptr<Rule>>& cache, std::mutex& m, int n, Build build) {
    std::lock_guard lock(m);
    auto& slot = cache[n];
    if (!slot) slot = std::make_unique<Rule>(build(n));
    return *slot;
}

// Symmetrize to remove eigen-solver round-off; the exact rules are symmetric.
void symmetrize(Rule& r) {
    const std::size_t n = r.nodes.size();
    for (std::size_t i = 0; i < n / 2; ++i) {
        const std::size_t j = n - 1 - i;
        const double x = 0.5 * (r.nodes[j] - r.nodes[i]);
        const double w = 0.5 * (r.weights[i] + r.weights[j]);
        r.nodes[i] = -x;
        r.nodes[j] = x;
        r.weights[i] = r.weights[j] = w;
    }
    if (n % 2 == 1) r.nodes[n / 2] = 0.0;
}

}  // namespace

const Rule& legendre(int n) {
    static std::map<int, std::unique_ptr<Rule>> cache;
    static std::mutex m;
    return cached(cache, m, n, [](int k) {
        Eigen::VectorXd diag = Eigen::VectorXd::Zero(k);
        Eigen::VectorXd off(k - 1);
        for (int i = 1; i < k; ++i) off(i - 1) = i / std::sqrt(4.0 * i * i - 1.0);
        Rule r = golub_welsch(diag, off, 2.0);
        symmetrize(r);
        return r;
    });
}

const Rule& hermite(int n) {
    static std::map<int, std::unique_ptr<Rule>> cache;
    static std::mutex m;
    return cached(cache, m, n, [](int k) {
        Eigen::VectorXd diag = Eigen::VectorXd::Zero(k);
        Eigen::VectorXd off(k - 1);
        for (int i = 1; i < k; ++i) off(i - 1) = std::sqrt(0.5 * i);
        Rule r = golub_welsch(diag, off, std::sqrt(kPi));
        symmetrize(r);
        return r;
    });
}

namespace {

double gaussian_density(double u, double sigma) {
    const double z = u / sigma;
    return std::exp(-0.5 * z * z) / (std::sqrt(kTwoPi) * sigma);
}

Rule hermite_rule(int n, double sigma) {
    const Rule& base = hermite(n);
    Rule r;
    r.nodes.reserve(base.nodes.size());
    r.weights.reserve(base.nodes.size());
    const double scale = std::sqrt(2.0) * sigma;
    const double norm = 1.0 / std::sqrt(kPi);
    for (std::size_t i = 0; i < base.nodes.size(); ++i) {
        if (base.weights[i] == 0.0) continue;
        r.nodes.push_back(scale * base.nodes[i]);
        r.weights.push_back(norm * base.weights[i]);
    }
    return r;
}

Rule trapezoid_rule(int n, double sigma, double cutoff) {
    const double half = cutoff * sigma;
    const double h = 2.0 * half / (n - 1);
    Rule r;
    r.nodes.resize(n);
    r.weights.resize(n);
    for (int i = 0; i < n; ++i) {
        const double u = -half + h * i;
        r.nodes[i] = u;
        r.weights[i] = h * gaussian_density(u, sigma) * ((i == 0 || i == n - 1) ? 0.5 : 1.0);
    }
    return r;
}

// Breakpoints: a σ/2 lattice for the Gaussian plus, for every pole z, a mesh
// x0 ± d·2^k (x0 = Re z, d = |Im z|) so each panel sits at least its own width
// away from the nearest singularity.
Rule adaptive_rule(int order, double sigma, double cutoff,
                   std::span<const std::complex<double>> poles) {
    const double half = cutoff * sigma;
    std::vector<double> breaks;
    const int lattice = static_cast<int>(std::ceil(2.0 * cutoff));
    for (int i = -lattice; i <= lattice; ++i) breaks.push_back(half * i / lattice);

    const double floor_d = 1e-10 * sigma;
    for (const auto& z : poles) {
        if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) continue;
        const double x0 = z.real();
        const double d = std::max(std::abs(z.imag()), floor_d);
        const double reach = 2.0 * half + std::abs(x0);
        if (std::abs(x0) < half) breaks.push_back(x0);
        for (double step = d; step < reach; step *= 2.0) {
            breaks.push_back(x0 - step);
            breaks.push_back(x0 + step);
        }
    }
    std::erase_if(breaks, [&](double b) { return !(b >= -half && b <= half); });
    std::sort(breaks.begin(), breaks.end());
    const double min_width = 1e-13 * half;
    std::vector<double> unique;
    for (double b : breaks) {
        if (unique.empty() || b - unique.back() > min_width) unique.push_back(b);
    }
    unique.back() = half;

    const Rule& gl = legendre(order);
    Rule r;
    r.nodes.reserve((unique.size() - 1) * gl.nodes.size());
    r.weights.reserve(r.nodes.capacity());
    for (std::size_t p = 0; p + 1 < unique.size(); ++p) {
        const double a = unique[p];
        const double b = unique[p + 1];
        const double mid = 0.5 * (a + b);
        const double hw = 0.5 * (b - a);
        for (std::size_t i = 0; i < gl.nodes.size(); ++i) {
            const double u = mid + hw * gl.nodes[i];
            r.nodes.push_back(u);
            r.weights.push_back(hw * gl.weights[i] * gaussian_density(u, sigma));
        }
    }
    return r;
}

}  // namespace

Rule gaussian_rule(const QuadratureSpec& spec, double sigma,
                   std::span<const std::complex<double>> poles) {
    spec.validate();
    if (!(sigma >= 0) || !std::isfinite(sigma)) throw InvalidArgument("Doppler width must be finite and >= 0");
    if (sigma == 0.0) return Rule{{0.0}, {1.0}};
    switch (spec.method) {
        case Method::gauss_hermite: return hermite_rule(spec.node_count, sigma);
        case Method::trapezoid: return trapezoid_rule(spec.node_count, sigma, spec.velocity_cutoff);
        case Method::adaptive: return adaptive_rule(spec.node_count, sigma, spec.velocity_cutoff, poles);
    }
    return {};
}

}  // namespace eitlock::quad
