#pragma once

/**
 * @file   dipole.hpp
 * @brief  Point-dipole field, its projection on the NV axis, analytic
 *         gradients, and a Levenberg-Marquardt fit to axial-field maps.
 *
 * B(p) = (μ0/4π)·[3(m·r̂)r̂ − m]/r³ with r = p − position.
 */

#include "spinmech/common.hpp"
#include "spinmech/field_map.hpp"

#include <Eigen/Core>

#include <optional>
#include <string>

namespace spinmech {

struct Dipole {
    Vec3 moment = Vec3::Zero();    ///< A m²
    Vec3 position = Vec3::Zero();  ///< m
};

/// Unit vector; construction normalises and rejects zero-length input.
class NvAxis {
public:
    explicit NvAxis(const Vec3& direction);
    const Vec3& axis() const { return axis_; }

private:
    Vec3 axis_;
};

using Mat3 = Eigen::Matrix3d;

Vec3 dipole_field(const Dipole& d, const Vec3& point);

/// ∂B_i/∂p_j at `point`.
Mat3 dipole_field_jacobian(const Dipole& d, const Vec3& point);

double axial_field(const Dipole& d, const Vec3& point, const NvAxis& nv);

/// Directional derivative of the axial field along `motion_axis` (normalised internally).
double axial_gradient(const Dipole& d, const Vec3& point, const NvAxis& nv, const Vec3& motion_axis);

/// d(axial field)/d(mx, my, mz, x, y, z) of the dipole parameters.
Eigen::Matrix<double, 1, 6> axial_field_parameter_gradient(const Dipole& d, const Vec3& point, const NvAxis& nv);

struct FitReport {
    double rms_residual = 0.0;  ///< T
    double max_residual = 0.0;  ///< T
    int iterations = 0;
    bool converged = false;
    Eigen::Matrix<double, 6, 6> covariance = Eigen::Matrix<double, 6, 6>::Zero();
};

struct DipoleFitOptions {
    int max_iterations = 200;
};

struct DipoleFit {
    Dipole dipole;
    FitReport report;
};

/// Fits the six dipole parameters to the valid pixels of an axial-field map
/// measured at height `scan_height`. Without `init`, seeds from a 3×3×3
/// position grid below the map centre with a linear moment solve per node.
/// Throws DegenerateMap for structureless maps or a rank-deficient Jacobian,
/// NoConvergence when the iteration limit is hit, Underdetermined with < 6 pixels.
DipoleFit fit_dipole(const FieldMap& map, const NvAxis& nv, double scan_height,
                     const std::optional<Dipole>& init = std::nullopt, const DipoleFitOptions& options = {});

/// Coarse seed used by fit_dipole when no initial guess is given.
Dipole grid_search_seed(const FieldMap& map, const NvAxis& nv, double scan_height);

struct GradientMap {
    FieldMap map;  ///< T/m
    double max_abs_gradient = 0.0;
};

/// axial_gradient over every pixel of `geometry` at height `scan_height`.
GradientMap gradient_map(const Dipole& d, const GridGeometry& geometry, double scan_height, const NvAxis& nv,
                         const Vec3& motion_axis, unsigned threads = 1);

/// Forward-synthesised axial map of a dipole.
FieldMap synthesize_axial_map(const Dipole& d, const GridGeometry& geometry, double scan_height, const NvAxis& nv);

// Dipole JSON: {"moment_am2":[mx,my,mz],"position_m":[x,y,z]}
std::string dipole_to_json(const Dipole& d);
Dipole dipole_from_json(const std::string& text);

}  // namespace spinmech
