#pragma once

/**
 * @file   mech.hpp
 * @brief  Mechanical mode: derived quantities, thermal-state sampling, and the
 *         PSD / ringdown / RMS-amplitude analyses of interferometer records.
 */

#include "spinmech/common.hpp"
#include "spinmech/random.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <vector>

namespace spinmech {

struct Resonator {
    double frequency = 1.4e6;       ///< f_r, Hz
    double q_factor = 8.25e5;
    double m_eff = constants::default_m_eff;  ///< kg
    double temperature = 20.0;      ///< K

    double omega() const { return kTwoPi * frequency; }
    double linewidth() const { return frequency / q_factor; }  ///< κ/2π, Hz
    void validate() const;
};

struct PhaseSpaceSample {
    double x0 = 0.0;    ///< amplitude, m
    double phi0 = 0.0;  ///< phase in [0, 2π)
};

/// Sampled record: `t` is time (s) or frequency (Hz) depending on context.
struct TimeSeries {
    std::vector<double> t;
    std::vector<double> value;

    void validate(std::size_t min_points) const;
};

double zero_point_motion(const Resonator& r);
double zero_point_motion(double m_eff, double frequency);

/// Bose-Einstein occupation; 0 at T = 0.
double thermal_occupation(double temperature, double frequency);

/// φ0 uniform on [0, 2π), x0 Rayleigh with scale delta_x.
PhaseSpaceSample sample_thermal_state(double delta_x, RandomStream& rng);

/// Analytic Rayleigh CDF, 1 − exp(−x²/2Δx²).
double rayleigh_cdf(double x, double delta_x);

struct FitStatus {
    int iterations = 0;
    bool converged = false;
    double rms_residual = 0.0;
    Eigen::MatrixXd covariance;
};

struct LorentzianFit {
    double frequency = 0.0;        ///< f_r, Hz
    double kappa_over_2pi = 0.0;   ///< FWHM, Hz
    double peak_area = 0.0;        ///< ∫ (L − offset) df, m²
    double offset = 0.0;           ///< m²/Hz
    FitStatus report;
};

/// Area-normalised Lorentzian with FWHM `kappa_over_2pi`.
double lorentzian(double f, double frequency, double kappa_over_2pi, double area, double offset);

/// Throws NoPeak if max/median < 3, NoConvergence if LM stalls out.
LorentzianFit fit_lorentzian(const TimeSeries& psd);

struct RingdownFit {
    double q_factor = 0.0;
    double amplitude0 = 0.0;   ///< m
    double decay_time = 0.0;   ///< amplitude 1/e time τ_a = 2Q/ω_r, s
    FitStatus report;
};

/// a(t) = a0·exp(−t/τ_a), Q = ω_r·τ_a/2. Throws NotDecaying.
RingdownFit fit_ringdown(const TimeSeries& series, double frequency);

/// sqrt(∫ PSD df) over [f_lo, f_hi], trapezoidal. Throws EmptyBand.
double rms_from_psd(const TimeSeries& psd, double f_lo, double f_hi);

}  // namespace spinmech
