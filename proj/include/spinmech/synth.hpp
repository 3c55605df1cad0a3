#pragma once

// Deterministic synthetic fixtures (planted dipole maps, ESR maps, PSDs,
// ringdowns, echo curves, detuning profiles). Noise comes from
// RandomStream(seed, 0), so a kind/params/seed triple always yields the same
// bytes.

#include "spinmech/echo.hpp"
#include "spinmech/mech.hpp"

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace spinmech {

using SynthParams = std::map<std::string, double>;

std::vector<std::string> synth_kinds();

/// Default parameters of a kind; UnknownKind otherwise.
SynthParams synth_defaults(const std::string& kind);

/// Writes the fixture CSV. Unknown parameter names are InvalidArgument.
void generate_synthetic(const std::string& kind, const SynthParams& overrides, std::uint64_t seed,
                        std::ostream& out);

/// Normalized echo curve exp(−q(τ)) plus N(0, noise²) on n points τ_k = τ_max·k/n.
EchoCurve synth_echo_curve(double lambda_over_2pi, double delta_x, double f_r, double z_p, std::size_t n,
                           double tau_max, double noise, std::uint64_t seed);

/// Lorentzian PSD with area Δx² on a uniform grid f_r ± span/2.
TimeSeries synth_psd(double f_r, double kappa_over_2pi, double delta_x, double span, std::size_t n,
                     double offset, double noise_rel, std::uint64_t seed);

/// a0·exp(−ω_r t/(2Q)) on [0, duration].
TimeSeries synth_ringdown(double f_r, double q_factor, double a0, double duration, std::size_t n, double noise_rel,
                          std::uint64_t seed);

}  // namespace spinmech
