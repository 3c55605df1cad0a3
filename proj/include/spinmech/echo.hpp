#pragma once

/**
 * @file   echo.hpp
 * @brief  Hahn-echo response of a spin coupled to a mechanical mode.
 *
 * Semiclassical picture: during one π/2–τ–π–τ–π/2 shot the resonator follows
 * x(t) = x0·cos(ω_r t + φ0) and the spin picks up
 *
 *     φ(τ) = (λ/(z_p ω_r))·x0·(sin(2ω_rτ + φ0) − 2 sin(ω_rτ + φ0) + sin φ0).
 *
 * Averaging cos φ over φ0 gives a J0 law (coherent drive); averaging that over
 * a Rayleigh-distributed x0 with RMS Δx gives exp(−q(τ)) with
 *
 *     q(τ) = 8 Δx² λ² sin⁴(ω_rτ/2) / (ω_r² z_p²).
 *
 * λ is angular (rad/s) throughout; I/O layers report λ/2π in Hz. The model
 * assumes the mode does not ring down within one sequence (Q ≫ ω_rτ).
 */

#include "spinmech/common.hpp"
#include "spinmech/mech.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <vector>

namespace spinmech {

struct Coupling {
    double lambda = 0.0;   ///< single-phonon coupling, rad/s
    double z_p = 0.0;      ///< m
    double omega_r = 0.0;  ///< rad/s

    static Coupling from_hz(double lambda_over_2pi, double z_p, double f_r)
    {
        return {kTwoPi * lambda_over_2pi, z_p, kTwoPi * f_r};
    }
    void validate() const;
};

struct EchoCurve {
    std::vector<double> tau;       ///< s, strictly increasing, > 0
    std::vector<double> contrast;

    void validate() const;
};

/// χ(τ) = (2τ/T2)^p.
struct DecoherenceModel {
    double t2 = 1e-3;
    double exponent = 3.0;

    double chi(double tau) const;
};

double accumulated_phase(const Coupling& c, const PhaseSpaceSample& s, double tau);

/// ⟨cos φ(τ)⟩ over φ0 at fixed amplitude x0.
double coherent_contrast(const Coupling& c, double x0, double tau);

/// q(τ) above.
double thermal_exponent(const Coupling& c, double delta_x, double tau);

double thermal_contrast(const Coupling& c, double delta_x, double tau);

struct McOptions {
    std::size_t samples = 100000;
    std::uint64_t seed = 0;
    std::size_t chunk_size = 4096;  ///< part of the determinism contract
    unsigned threads = 1;
};

struct McEstimate {
    double estimate = 0.0;
    double std_error = 0.0;
};

/// Mean of cos φ over thermal draws. Chunk k uses RandomStream(seed, k) and
/// chunks are reduced in index order, so the result is independent of threads.
McEstimate mc_contrast(const Coupling& c, double delta_x, double tau, const McOptions& options);

/// α·exp(−q(τ))·exp(−χ(τ)).
double signal_with_decoherence(const Coupling& c, double delta_x, double tau, const DecoherenceModel& dec,
                               double alpha);

struct CouplingFit {
    double lambda = 0.0;        ///< rad/s
    double lambda_sigma = 0.0;  ///< rad/s, 1σ
    double alpha = 1.0;
    double alpha_sigma = 0.0;
    Eigen::MatrixXd covariance;  ///< of (λ², α) or (λ²)
    double rms_residual = 0.0;
    int iterations = 0;

    double lambda_over_2pi() const { return lambda / kTwoPi; }
    double sigma_over_2pi() const { return lambda_sigma / kTwoPi; }
};

/// Fits α·exp(−q(τ; λ)) with Δx, ω_r, z_p fixed; α stays 1 unless fit_alpha.
/// Throws Underdetermined below 3 points or when no τ is sensitive to λ.
CouplingFit fit_coupling(const EchoCurve& curve, double delta_x, double omega_r, double z_p, bool fit_alpha = false);

/// λ = 2π·γe·z_p·G (rad/s).
double coupling_from_gradient(double gamma_e, double z_p, double gradient);

/// True when the no-damping assumption holds over the sequence: Q > 100·ω_r·τ_max/2π.
bool high_q_assumption_holds(double q_factor, double omega_r, double tau_max);

}  // namespace spinmech
