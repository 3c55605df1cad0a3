#include "spinmech/least_squares.hpp"

#include <cmath>

namespace spinmech {

namespace {

Eigen::VectorXd column_scales(const Eigen::MatrixXd& jacobian)
{
    Eigen::VectorXd scale = jacobian.colwise().norm().transpose();
    for (Eigen::Index i = 0; i < scale.size(); ++i) {
        if (!(scale[i] > 0.0) || !std::isfinite(scale[i])) {
            scale[i] = 1.0;
        }
    }
    return scale;
}

void finish(LmResult& result, const LmOptions& options)
{
    const Eigen::Index n = result.residuals.size();
    const Eigen::Index p = result.params.size();
    const Eigen::VectorXd scale = column_scales(result.jacobian);
    const Eigen::MatrixXd scaled = result.jacobian * scale.cwiseInverse().asDiagonal();

    Eigen::JacobiSVD<Eigen::MatrixXd> svd(scaled, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Eigen::VectorXd& sv = svd.singularValues();
    const double smax = sv.size() > 0 ? sv[0] : 0.0;
    result.rank_deficient = false;
    for (Eigen::Index i = 0; i < p; ++i) {
        if (result.jacobian.col(i).norm() == 0.0) {
            result.rank_deficient = true;
        }
    }
    Eigen::VectorXd inv_sq(sv.size());
    for (Eigen::Index i = 0; i < sv.size(); ++i) {
        if (smax <= 0.0 || sv[i] <= options.rank_tol * smax) {
            result.rank_deficient = true;
            inv_sq[i] = 0.0;
        } else {
            inv_sq[i] = 1.0 / (sv[i] * sv[i]);
        }
    }
    if (sv.size() < p) {
        result.rank_deficient = true;
    }
    const Eigen::MatrixXd& v = svd.matrixV();
    const Eigen::MatrixXd scaled_inv = v * inv_sq.asDiagonal() * v.transpose();
    const double s2 = n > p ? result.cost / static_cast<double>(n - p) : 0.0;
    result.covariance = s2 * (scale.cwiseInverse().asDiagonal() * scaled_inv * scale.cwiseInverse().asDiagonal());
}

}  // namespace

LmResult levenberg_marquardt(const ResidualFunction& fn, Eigen::VectorXd initial, const LmOptions& options,
                             const Projection& project)
{
    LmResult result;
    if (project) {
        project(initial);
    }
    result.params = std::move(initial);
    fn(result.params, result.residuals, &result.jacobian);
    result.cost = result.residuals.squaredNorm();

    double lambda = options.lambda0;
    Eigen::VectorXd trial_residuals;

    for (result.iterations = 0; result.iterations < options.max_iterations; ++result.iterations) {
        if (result.cost == 0.0) {
            result.converged = true;
            break;
        }
        const Eigen::VectorXd scale = column_scales(result.jacobian);
        const Eigen::MatrixXd scaled = result.jacobian * scale.cwiseInverse().asDiagonal();
        const Eigen::VectorXd gradient = scaled.transpose() * result.residuals;
        if (gradient.lpNorm<Eigen::Infinity>() <= options.gtol * std::sqrt(result.cost)) {
            result.converged = true;
            break;
        }
        const Eigen::MatrixXd normal = scaled.transpose() * scaled;

        bool accepted = false;
        bool stalled = false;
        while (!accepted) {
            Eigen::MatrixXd damped = normal;
            damped.diagonal().array() += lambda;
            const Eigen::VectorXd step_scaled = damped.ldlt().solve(-gradient);
            Eigen::VectorXd trial = result.params + step_scaled.cwiseQuotient(scale);
            if (project) {
                project(trial);
            }
            fn(trial, trial_residuals, nullptr);
            const double trial_cost = trial_residuals.squaredNorm();

            if (std::isfinite(trial_cost) && trial_cost < result.cost) {
                const Eigen::VectorXd actual_step = (trial - result.params).cwiseProduct(scale);
                const double step_norm = actual_step.norm();
                const double param_norm = result.params.cwiseProduct(scale).norm();
                const double decrease = result.cost - trial_cost;

                result.params = std::move(trial);
                result.cost = trial_cost;
                fn(result.params, result.residuals, &result.jacobian);
                lambda = std::max(lambda / options.lambda_down, 1e-300);
                accepted = true;

                if (step_norm <= options.xtol * (param_norm + options.xtol) ||
                    decrease <= options.ftol * (result.cost + decrease)) {
                    result.converged = true;
                }
            } else {
                lambda *= options.lambda_up;
                if (lambda > options.lambda_max) {
                    // No representable descent step: numerically stationary.
                    stalled = true;
                    break;
                }
            }
        }
        if (stalled || result.converged) {
            result.converged = true;
            ++result.iterations;
            break;
        }
    }

    finish(result, options);
    return result;
}

}  // namespace spinmech
