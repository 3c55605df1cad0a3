#include "spinmech/transport.hpp"

#include "spinmech/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

namespace spinmech {

void DetuningProfile::validate() const
{
    require(t.size() == delta_e.size(), ErrorCode::InvalidArgument, "profile columns differ in length");
    require(t.size() >= kMinPoints, ErrorCode::InvalidArgument,
            "profile needs at least " + std::to_string(kMinPoints) + " points, got " + std::to_string(t.size()));
    require(t.front() == 0.0, ErrorCode::InvalidArgument, "profile must start at t = 0");
    for (std::size_t i = 1; i < t.size(); ++i) {
        require(t[i] > t[i - 1], ErrorCode::InvalidArgument, "profile times must be strictly increasing");
    }
    for (double d : delta_e) {
        require(std::isfinite(d), ErrorCode::InvalidArgument, "profile detuning must be finite");
    }
    require(std::isfinite(gamma_ratio), ErrorCode::InvalidArgument, "gyromagnetic ratio must be finite");
}

bool DetuningProfile::returns_to_start(double tolerance) const
{
    return !delta_e.empty() && std::abs(delta_e.front()) <= tolerance && std::abs(delta_e.back()) <= tolerance;
}

namespace {

std::vector<double> uniform_grid(double t_move, std::size_t n)
{
    require(t_move > 0.0, ErrorCode::InvalidArgument, "movement time must be positive");
    require(n >= DetuningProfile::kMinPoints, ErrorCode::InvalidArgument,
            "profile needs at least " + std::to_string(DetuningProfile::kMinPoints) + " points");
    std::vector<double> t(n);
    for (std::size_t i = 0; i < n; ++i) {
        t[i] = t_move * static_cast<double>(i) / static_cast<double>(n - 1);
    }
    t.back() = t_move;
    return t;
}

// (1 − cos(2πt/T))/2, symmetric in t ↔ T − t by construction.
double excursion(double t, double t_move)
{
    const double s = std::sin(kPi * t / t_move);
    return s * s;
}

}  // namespace

DetuningProfile build_movement_profile(const Dipole& dipole, const NvAxis& nv, const Vec3& start,
                                       const Vec3& displacement, double t_move, std::size_t n_points,
                                       double gamma_e, double gamma_n)
{
    require(gamma_e > 0.0 && gamma_n > 0.0, ErrorCode::InvalidArgument, "gyromagnetic ratios must be positive");
    DetuningProfile p;
    p.t = uniform_grid(t_move, n_points);
    p.gamma_ratio = gamma_n / gamma_e;
    p.delta_e.resize(n_points);
    const double b0 = axial_field(dipole, start, nv);
    for (std::size_t i = 0; i < n_points; ++i) {
        const Vec3 point = start + displacement * excursion(p.t[i], t_move);
        p.delta_e[i] = gamma_e * (axial_field(dipole, point, nv) - b0);
    }
    return p;
}

DetuningProfile sinusoidal_profile(double peak_hz, double t_move, std::size_t n_points, double gamma_ratio)
{
    DetuningProfile p;
    p.t = uniform_grid(t_move, n_points);
    p.gamma_ratio = gamma_ratio;
    p.delta_e.resize(n_points);
    for (std::size_t i = 0; i < n_points; ++i) {
        p.delta_e[i] = peak_hz * excursion(p.t[i], t_move);
    }
    return p;
}

DetuningProfile zero_profile(double t_move, std::size_t n_points)
{
    return sinusoidal_profile(0.0, t_move, n_points);
}

PhaseIntegrator::PhaseIntegrator(const DetuningProfile& profile) : profile_(profile)
{
    profile.validate();
    cumulative_.resize(profile.size());
    cumulative_[0] = 0.0;
    for (std::size_t i = 1; i < profile.size(); ++i) {
        cumulative_[i] = cumulative_[i - 1] +
                         0.5 * (profile.delta_n(i - 1) + profile.delta_n(i)) * (profile.t[i] - profile.t[i - 1]);
    }
}

double PhaseIntegrator::integral(double t) const
{
    const auto& ts = profile_.t;
    if (t <= ts.front()) {
        return 0.0;
    }
    if (t >= ts.back()) {
        return cumulative_.back();
    }
    const auto hi = static_cast<std::size_t>(std::upper_bound(ts.begin(), ts.end(), t) - ts.begin());
    const std::size_t lo = hi - 1;
    const double dt = t - ts[lo];
    const double slope = (profile_.delta_n(hi) - profile_.delta_n(lo)) / (ts[hi] - ts[lo]);
    const double at_t = profile_.delta_n(lo) + slope * dt;
    return cumulative_[lo] + 0.5 * (profile_.delta_n(lo) + at_t) * dt;
}

double PhaseIntegrator::phase(double t_pi) const
{
    require(t_pi >= 0.0 && t_pi <= profile_.t_move(), ErrorCode::OutOfRange, "π-pulse time outside the move");
    const double before = integral(t_pi);
    return kTwoPi * (before - (cumulative_.back() - before));
}

double nuclear_phase(const DetuningProfile& profile, double t_pi)
{
    return PhaseIntegrator(profile).phase(t_pi);
}

double solve_pi_time(const DetuningProfile& profile, const PiTimeOptions& options)
{
    const PhaseIntegrator integ(profile);
    double lo = 0.0;
    double hi = profile.t_move();
    const double f_lo = integ.phase(lo);
    const double f_hi = integ.phase(hi);
    // φ_n(0) = −φ_n(T) always, so both ends vanish together when the profile
    // integrates to zero; rounding must not pass that off as a sign change.
    require(std::abs(f_lo) >= options.phase_tolerance || std::abs(f_hi) >= options.phase_tolerance,
            ErrorCode::NoRoot, "profile integrates to zero; no unique π time");
    if (std::abs(f_lo) < options.phase_tolerance && std::abs(f_hi) >= options.phase_tolerance) {
        return lo;
    }
    if (std::abs(f_hi) < options.phase_tolerance && std::abs(f_lo) >= options.phase_tolerance) {
        return hi;
    }
    require(f_lo * f_hi < 0.0, ErrorCode::NoRoot, "nuclear phase does not change sign over the move");

    const bool rising = f_lo < 0.0;
    double mid = 0.5 * (lo + hi);
    for (int it = 0; it < options.max_iterations; ++it) {
        mid = 0.5 * (lo + hi);
        const double f = integ.phase(mid);
        if (std::abs(f) < options.phase_tolerance || mid <= lo || mid >= hi) {
            return mid;
        }
        if ((f < 0.0) == rising) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return mid;
}

std::vector<double> fringe_scan(const DetuningProfile& profile, const std::vector<double>& t_pi_grid, unsigned threads)
{
    const PhaseIntegrator integ(profile);
    std::vector<double> out(t_pi_grid.size());
    parallel_for(t_pi_grid.size(), threads, [&](std::size_t i) { out[i] = std::cos(integ.phase(t_pi_grid[i])); });
    return out;
}

DetuningProfile profile_from_csv(const csv::Table& table, double gamma_ratio)
{
    DetuningProfile p;
    p.t = table.numbers("t_s");
    p.delta_e = table.numbers("delta_e_hz");
    p.gamma_ratio = gamma_ratio;
    p.validate();
    return p;
}

void write_profile(std::ostream& out, const DetuningProfile& profile)
{
    out << "t_s,delta_e_hz\n";
    for (std::size_t i = 0; i < profile.size(); ++i) {
        out << csv::format_exact(profile.t[i]) << ',' << csv::format_exact(profile.delta_e[i]) << '\n';
    }
}

}  // namespace spinmech
