#pragma once

/**
 * @file   spinmodel.hpp
 * @brief  NV ground-state spin-1 Hamiltonian: ESR frequencies from a field and
 *         the inverse problem (field from a measured ESR pair).
 *
 * H/h = D·Sz² + γe·(Bz·Sz + Bx·Sx) in plain Hz, basis ordered m = +1, 0, −1.
 * No hyperfine terms. Both Bz and Bx enter only through their magnitudes, so
 * the inverse reports bz ≥ 0 and bx ≥ 0.
 */

#include "spinmech/common.hpp"

#include <array>

namespace spinmech {

struct SpinParams {
    double zero_field_splitting = constants::zero_field_splitting;  ///< D, Hz
    double gamma_e = constants::gamma_e;                             ///< Hz/T

    void validate() const;
};

struct FieldComponents {
    double bz = 0.0;  ///< along the NV axis, T
    double bx = 0.0;  ///< perpendicular magnitude, T
};

struct EsrPair {
    double f_minus = 0.0;  ///< Hz
    double f_plus = 0.0;   ///< Hz
};

/// Eigenvalues of H/h (ascending) and which one is the |m=0⟩-like level.
struct SpinSpectrum {
    std::array<double, 3> energies{};
    int zero_level = 0;
};

using SpinMatrix = Eigen::Matrix3d;

SpinMatrix spin_hamiltonian(const SpinParams& params, const FieldComponents& field);

/// Cyclic Jacobi diagonalisation of H/h.
SpinSpectrum spin_spectrum(const SpinParams& params, const FieldComponents& field);

EsrPair esr_frequencies(const SpinParams& params, const FieldComponents& field);

struct InvertOptions {
    int max_iterations = 100;
    double residual_tolerance = 1e-3;  ///< Hz
};

/// Damped Newton on (bz, bx²) seeded from the axial closed form.
/// Throws OutOfRange if f_plus < f_minus, NoConvergence if no field reproduces the pair.
FieldComponents invert_field(const SpinParams& params, const EsrPair& esr, const InvertOptions& options = {});

}  // namespace spinmech
