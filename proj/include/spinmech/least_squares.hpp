#pragma once

/**
 * @file   least_squares.hpp
 * @brief  Levenberg-Marquardt solver shared by every fitter in the library.
 *
 * The damped normal equations are solved in column-normalised coordinates
 * (Marquardt scaling), so parameters with wildly different magnitudes (a
 * dipole moment of 1e-13 A m² next to a position of 1e-6 m) are handled
 * without user-supplied scales. Damping starts at `lambda0`, is multiplied
 * by `lambda_up` after a rejected step and divided by `lambda_down` after an
 * accepted one.
 */

#include <Eigen/Dense>

#include <functional>

namespace spinmech {

struct LmOptions {
    int max_iterations = 200;
    double lambda0 = 1e-3;
    double lambda_up = 10.0;
    double lambda_down = 10.0;
    double lambda_max = 1e16;
    double xtol = 1e-13;  ///< scaled relative step size
    double ftol = 1e-16;  ///< relative cost decrease
    double gtol = 1e-14;  ///< cosine between residual and Jacobian columns
    double rank_tol = 1e-10;  ///< singular-value ratio of the scaled Jacobian
};

struct LmResult {
    Eigen::VectorXd params;
    Eigen::VectorXd residuals;
    Eigen::MatrixXd jacobian;
    Eigen::MatrixXd covariance;  ///< s² (JᵀJ)⁻¹, s² = SSR / (n − p)
    double cost = 0.0;           ///< sum of squared residuals
    int iterations = 0;
    bool converged = false;
    bool rank_deficient = false;
};

/// Fills residuals r(p) and, when the pointer is non-null, the Jacobian dr/dp.
using ResidualFunction =
    std::function<void(const Eigen::VectorXd& params, Eigen::VectorXd& residuals, Eigen::MatrixXd* jacobian)>;

/// Optional in-place projection onto the feasible set (e.g. clamping a bound).
using Projection = std::function<void(Eigen::VectorXd& params)>;

LmResult levenberg_marquardt(const ResidualFunction& fn, Eigen::VectorXd initial, const LmOptions& options = {},
                             const Projection& project = {});

}  // namespace spinmech
