#include "eitlock/least_squares.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "eitlock/errors.hpp"

namespace eitlock::lsq {

Eigen::MatrixXd numeric_jacobian(const ResidualFn& f, const Eigen::VectorXd& x, const Eigen::VectorXd& fx,
                                 double relative_step) {
    Eigen::MatrixXd jac(fx.size(), x.size());
    Eigen::VectorXd xp = x;
    for (Eigen::Index j = 0; j < x.size(); ++j) {
        const double h = relative_step * std::max(std::abs(x[j]), 1e-3);
        xp[j] = x[j] + h;
        const Eigen::VectorXd up = f(xp);
        xp[j] = x[j] - h;
        const Eigen::VectorXd down = f(xp);
        xp[j] = x[j];
        jac.col(j) = (up - down) / (2.0 * h);
    }
    return jac;
}

namespace {

double gradient_cosine(const Eigen::MatrixXd& jac, const Eigen::VectorXd& r) {
    const double rn = r.norm();
    if (rn == 0.0) return 0.0;
    double worst = 0.0;
    for (Eigen::Index j = 0; j < jac.cols(); ++j) {
        const double cn = jac.col(j).norm();
        if (cn == 0.0) continue;
        worst = std::max(worst, std::abs(jac.col(j).dot(r)) / (cn * rn));
    }
    return worst;
}

bool small_gradient(double cosine, const Eigen::VectorXd& g, const Eigen::MatrixXd& jac, const LmOptions& opt) {
    return cosine <= opt.gradient_tolerance || g.norm() <= opt.absolute_gradient_tolerance * jac.norm();
}

}  // namespace

LmResult levenberg_marquardt(const ResidualFn& f, Eigen::VectorXd x, const LmOptions& opt) {
    if (x.size() == 0) throw InvalidArgument("no free parameters");
    Eigen::VectorXd r = f(x);
    if (r.size() < x.size()) throw FitError("fewer residuals than free parameters");
    if (!r.allFinite()) throw FitError("model is not finite at the initial parameters");
    double cost = 0.5 * r.squaredNorm();
    Eigen::MatrixXd jac = numeric_jacobian(f, x, r, opt.relative_step);

    LmResult out;
    // Nielsen's damping update.
    Eigen::MatrixXd jtj = jac.transpose() * jac;
    double lambda = 1e-3 * jtj.diagonal().maxCoeff();
    double nu = 2.0;
    int it = 0;
    for (; it < opt.max_iterations; ++it) {
        const Eigen::VectorXd g = jac.transpose() * r;
        out.gradient_cosine = gradient_cosine(jac, r);
        if (small_gradient(out.gradient_cosine, g, jac, opt)) {
            out.converged = true;
            break;
        }
        bool accepted = false;
        for (int attempt = 0; attempt < 60 && !accepted; ++attempt) {
            Eigen::MatrixXd a = jtj;
            for (Eigen::Index j = 0; j < a.rows(); ++j) a(j, j) += lambda * std::max(jtj(j, j), 1e-300);
            const Eigen::VectorXd step = a.ldlt().solve(-g);
            const Eigen::VectorXd trial = x + step;
            const Eigen::VectorXd rt = f(trial);
            const double trial_cost = rt.allFinite() ? 0.5 * rt.squaredNorm() : INFINITY;
            const double predicted = -(step.dot(g) + 0.5 * step.dot(jtj * step));
            const double rho = predicted > 0 ? (cost - trial_cost) / predicted : -1.0;
            if (rho > 0 && trial_cost < cost) {
                x = trial;
                r = rt;
                cost = trial_cost;
                jac = numeric_jacobian(f, x, r, opt.relative_step);
                jtj = jac.transpose() * jac;
                lambda *= std::max(1.0 / 3.0, 1.0 - std::pow(2.0 * rho - 1.0, 3));
                nu = 2.0;
                accepted = true;
            } else {
                lambda *= nu;
                nu *= 2.0;
            }
        }
        if (!accepted) {
            out.gradient_cosine = gradient_cosine(jac, r);
            out.converged = small_gradient(out.gradient_cosine, jac.transpose() * r, jac, opt);
            break;
        }
    }
    out.x = x;
    out.residuals = r;
    out.jacobian = jac;
    out.cost = cost;
    out.iterations = it;
    if (!out.converged) {
        throw FitError("no convergence after " + std::to_string(it) + " iterations (gradient cosine " +
                       std::to_string(out.gradient_cosine) + ")");
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(jac);
    const auto& s = svd.singularValues();
    if (s(s.size() - 1) == 0.0 || s(0) / s(s.size() - 1) > opt.max_condition) {
        throw FitError("degenerate Jacobian at the optimum (condition number " +
                       std::to_string(s(s.size() - 1) == 0.0 ? INFINITY : s(0) / s(s.size() - 1)) + ")");
    }
    return out;
}

Eigen::MatrixXd normal_inverse(const Eigen::MatrixXd& jacobian) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(jacobian, Eigen::ComputeThinV);
    const Eigen::VectorXd s = svd.singularValues();
    const Eigen::MatrixXd& v = svd.matrixV();
    Eigen::VectorXd inv_sq(s.size());
    for (Eigen::Index i = 0; i < s.size(); ++i) inv_sq[i] = s[i] > 0 ? 1.0 / (s[i] * s[i]) : 0.0;
    return v * inv_sq.asDiagonal() * v.transpose();
}

}  // namespace eitlock::lsq
