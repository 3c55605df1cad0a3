#pragma once

/**
 * @file   register.hpp
 * @brief  Electron–¹⁵N two-qubit memory sequence under mechanical transport.
 *
 * Basis index 2e + n over {|0↓⟩, |0↑⟩, |−1↓⟩, |−1↑⟩}: e = 0 for m_s = 0,
 * e = 1 for m_s = −1; n = 0 for ↓, n = 1 for ↑. The electron never leaves
 * the {0, −1} subspace. Gates are instantaneous and ideal.
 *
 * Sequence per ¹³C branch δ_b and nuclear start state:
 *   R_n(π/2, x) → CnNOTe → electron phase 2πδ_bτ → CnNOTe
 *   → transport phase φ₁ → R_n(π, y) at t_π → transport phase φ₂
 *   → R_n(π/2, −θ) → readout P(↑) − P(↓).
 * The ideal result is (2p − 1)·Σ_b w_b cos(2πδ_bτ − θ − φ_n), φ_n = φ₁ − φ₂.
 */

#include "spinmech/common.hpp"
#include "spinmech/transport.hpp"

#include <Eigen/Core>

#include <complex>
#include <optional>
#include <string>
#include <vector>

namespace spinmech {

using Complex = std::complex<double>;

struct RegisterState {
    Eigen::Vector4cd amplitudes = Eigen::Vector4cd::Zero();

    static std::size_t index(int electron, int nuclear) { return static_cast<std::size_t>(2 * electron + nuclear); }
    static RegisterState basis(int electron, int nuclear);

    double norm() const { return amplitudes.norm(); }
    /// P(n = ↑) − P(n = ↓).
    double nuclear_contrast() const;
};

// Gates. Rotations act on the nucleus: R(a, φ) = cos(a/2)·I − i·sin(a/2)(cos φ σx + sin φ σy).
void apply_nuclear_rotation(RegisterState& s, double angle, double axis_phase);
/// Electron flip |0⟩ ↔ |−1⟩ conditioned on nucleus ↑.
void apply_cnot(RegisterState& s);
/// exp(−iφ) on the e = 1 (m_s = −1) amplitudes.
void apply_electron_phase(RegisterState& s, double phase);
/// exp(−iφ) on the n = ↑ amplitudes.
void apply_nuclear_phase(RegisterState& s, double phase);

struct DetuningBranch {
    double detuning_hz = 0.0;
    double probability = 1.0;
};

struct SequenceConfig {
    double tau = 1e-6;                    ///< entangled accumulation interval, s
    double theta = 0.0;                   ///< final π/2 axis angle, rad
    double f_acc = 0.9e6;                 ///< Hz
    double nuclear_polarization = 0.78;
    double t_pi = 0.85e-3;                ///< s
    double t_move = 1.7e-3;               ///< s
    double nuclear_pi_duration = 20e-6;   ///< s, timing budget only
    std::vector<DetuningBranch> branches; ///< empty: ±f_acc, 1/2 each

    std::vector<DetuningBranch> effective_branches() const;
    /// InvalidProbability for bad polarization or branch weights; OutOfRange for t_π.
    void validate() const;
};

/// Set when the two nuclear π pulses take more than 5% of the move.
std::optional<std::string> timing_warning(const SequenceConfig& cfg);

/// Pure-state run for one start state and branch; φ₁, φ₂ are the transport
/// phases before and after the nuclear π.
RegisterState run_register_sequence(int nuclear_start, double branch_detuning_hz, double tau, double theta,
                                    double phase_before, double phase_after);

struct SequenceResult {
    double contrast = 0.0;
    double residual_phase = 0.0;  ///< φ_n, rad
};

/// Convex average over the polarization mixture and ¹³C branches.
/// The transport phase is taken from `profile` at cfg.t_pi.
SequenceResult simulate_memory_sequence(const SequenceConfig& cfg, const DetuningProfile& profile);

/// simulate_memory_sequence over a τ grid (θ fixed).
std::vector<double> ramsey_vs_tau(const SequenceConfig& cfg, const DetuningProfile& profile,
                                  const std::vector<double>& tau_grid, unsigned threads = 1);

/// simulate_memory_sequence over a θ grid (τ fixed).
std::vector<double> theta_scan(const SequenceConfig& cfg, const DetuningProfile& profile,
                               const std::vector<double>& theta_grid, unsigned threads = 1);

// JSON keys: tau_s, theta_rad, f_acc_hz, nuclear_polarization, t_pi_s, t_move_s,
// nuclear_pi_duration_s, branches [{detuning_hz, probability}]. Missing keys keep defaults.
SequenceConfig sequence_config_from_json(const std::string& text);
std::string sequence_config_to_json(const SequenceConfig& cfg);

}  // namespace spinmech
