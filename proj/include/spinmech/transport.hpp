#pragma once

/**
 * @file   transport.hpp
 * @brief  Detuning profiles seen by a transported spin and the nuclear π-pulse
 *         timing that cancels the phase they imprint.
 *
 * A nuclear π pulse at t_π splits the move in two, so the stored nuclear phase
 * is
 *
 *     φ_n(t_π) = 2π·(∫₀^{t_π} δ_n dt − ∫_{t_π}^{T} δ_n dt),
 *
 * with δ_n = δ_e·γ_n/γ_e. Integrals are trapezoidal on the profile grid.
 */

#include "spinmech/common.hpp"
#include "spinmech/dipole.hpp"
#include "spinmech/csv.hpp"

#include <iosfwd>
#include <vector>

namespace spinmech {

struct DetuningProfile {
    std::vector<double> t;        ///< s, starts at 0, strictly increasing
    std::vector<double> delta_e;  ///< electron ESR detuning, Hz
    double gamma_ratio = constants::gamma_n15 / constants::gamma_e;  ///< γ_n/γ_e

    static constexpr std::size_t kMinPoints = 64;

    std::size_t size() const { return t.size(); }
    double t_move() const { return t.empty() ? 0.0 : t.back(); }
    double delta_n(std::size_t i) const { return delta_e[i] * gamma_ratio; }

    /// Grid checks only; see returns_to_start() for the closure condition.
    void validate() const;
    /// δ_e(0) and δ_e(T) both within `tolerance` Hz of zero.
    bool returns_to_start(double tolerance = 1e3) const;
};

/// p(t) = start + d·(1 − cos(2πt/T))/2, δ_e(t) = γe·(B_ax(p(t)) − B_ax(p(0))).
DetuningProfile build_movement_profile(const Dipole& dipole, const NvAxis& nv, const Vec3& start,
                                       const Vec3& displacement, double t_move, std::size_t n_points,
                                       double gamma_e = constants::gamma_e,
                                       double gamma_n = constants::gamma_n15);

/// δ_e(t) = peak·(1 − cos(2πt/T))/2 on a uniform grid.
DetuningProfile sinusoidal_profile(double peak_hz, double t_move, std::size_t n_points,
                                   double gamma_ratio = constants::gamma_n15 / constants::gamma_e);

DetuningProfile zero_profile(double t_move, std::size_t n_points = DetuningProfile::kMinPoints);

/// Cumulative trapezoid of δ_n; evaluates φ_n at arbitrary t_π in O(log n).
class PhaseIntegrator {
public:
    explicit PhaseIntegrator(const DetuningProfile& profile);

    /// ∫₀^t δ_n dt in cycles (Hz·s), linear interpolation inside a cell.
    double integral(double t) const;
    double total() const { return cumulative_.back(); }
    double phase(double t_pi) const;

private:
    const DetuningProfile& profile_;
    std::vector<double> cumulative_;
};

/// φ_n(t_π) in rad. OutOfRange unless 0 ≤ t_π ≤ T.
double nuclear_phase(const DetuningProfile& profile, double t_pi);

struct PiTimeOptions {
    double phase_tolerance = 1e-6;  ///< rad
    int max_iterations = 200;
};

/// Bisection for φ_n(t_π) = 0. NoRoot unless φ_n(0) and φ_n(T) differ in sign.
double solve_pi_time(const DetuningProfile& profile, const PiTimeOptions& options = {});

/// cos φ_n(t_π) for each grid entry.
std::vector<double> fringe_scan(const DetuningProfile& profile, const std::vector<double>& t_pi_grid,
                                unsigned threads = 1);

// CSV `t_s,delta_e_hz`.
DetuningProfile profile_from_csv(const csv::Table& table,
                                 double gamma_ratio = constants::gamma_n15 / constants::gamma_e);
void write_profile(std::ostream& out, const DetuningProfile& profile);

}  // namespace spinmech
