#pragma once

// Damped (Levenberg-Marquardt) nonlinear least squares with a central-difference
// Jacobian. Minimizes ½‖r(x)‖².

#include <Eigen/Dense>
#include <functional>

namespace eitlock::lsq {

using ResidualFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

struct LmOptions {
    int max_iterations = 200;
    // Converged when every column of J is within this cosine of orthogonal to r
    // (MINPACK's gtol test), or r vanishes.
    double gradient_tolerance = 1e-6;
    // Or when ‖Jᵀr‖ ≤ this · ‖J‖ (residuals at rounding level on exact data).
    double absolute_gradient_tolerance = 1e-12;
    double relative_step = 1e-6;      // finite-difference step, relative to max(|x_j|, 1e-3)
    double max_condition = 1e12;      // of J at the optimum; above this the Jacobian is degenerate
};

struct LmResult {
    Eigen::VectorXd x;
    Eigen::VectorXd residuals;
    Eigen::MatrixXd jacobian;
    double cost = 0.0;  // ½‖r‖²
    double gradient_cosine = 0.0;
    int iterations = 0;
    bool converged = false;
};

Eigen::MatrixXd numeric_jacobian(const ResidualFn& f, const Eigen::VectorXd& x, const Eigen::VectorXd& fx,
                                 double relative_step);

// Throws FitError when the iteration limit is reached without convergence, when no
// downhill step can be found, or when the Jacobian at the optimum is degenerate.
LmResult levenberg_marquardt(const ResidualFn& f, Eigen::VectorXd x0, const LmOptions& options = {});

// (JᵀJ)⁻¹ via the SVD of J.
Eigen::MatrixXd normal_inverse(const Eigen::MatrixXd& jacobian);

}  // namespace eitlock::lsq
