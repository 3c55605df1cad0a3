#include "spinmech/mech.hpp"

#include "spinmech/least_squares.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace spinmech {

void Resonator::validate() const
{
    require(frequency > 0.0 && q_factor > 0.0 && m_eff > 0.0 && temperature > 0.0, ErrorCode::InvalidArgument,
            "resonator frequency, Q, effective mass and temperature must be positive");
}

void TimeSeries::validate(std::size_t min_points) const
{
    require(t.size() == value.size(), ErrorCode::InvalidArgument, "time series columns differ in length");
    require(t.size() >= min_points, ErrorCode::Underdetermined,
            "need at least " + std::to_string(min_points) + " points, got " + std::to_string(t.size()));
    for (std::size_t i = 1; i < t.size(); ++i) {
        require(t[i] > t[i - 1], ErrorCode::InvalidArgument, "abscissa must be strictly increasing");
    }
}

double zero_point_motion(double m_eff, double frequency)
{
    require(m_eff > 0.0 && std::isfinite(m_eff), ErrorCode::InvalidArgument, "effective mass must be positive");
    require(frequency > 0.0 && std::isfinite(frequency), ErrorCode::InvalidArgument, "frequency must be positive");
    return std::sqrt(constants::hbar / (2.0 * m_eff * kTwoPi * frequency));
}

double zero_point_motion(const Resonator& r)
{
    r.validate();
    return zero_point_motion(r.m_eff, r.frequency);
}

double thermal_occupation(double temperature, double frequency)
{
    require(temperature >= 0.0, ErrorCode::InvalidArgument, "temperature must be non-negative");
    if (temperature == 0.0) {
        return 0.0;
    }
    const double x = constants::hbar * kTwoPi * frequency / (constants::k_boltzmann * temperature);
    return 1.0 / std::expm1(x);
}

PhaseSpaceSample sample_thermal_state(double delta_x, RandomStream& rng)
{
    PhaseSpaceSample s;
    s.x0 = delta_x * std::sqrt(-2.0 * std::log1p(-rng.uniform()));
    s.phi0 = kTwoPi * rng.uniform();
    return s;
}

double rayleigh_cdf(double x, double delta_x)
{
    if (x <= 0.0) {
        return 0.0;
    }
    return -std::expm1(-x * x / (2.0 * delta_x * delta_x));
}

double lorentzian(double f, double frequency, double kappa_over_2pi, double area, double offset)
{
    const double d = f - frequency;
    const double hw = 0.5 * kappa_over_2pi;
    return area * (kappa_over_2pi / kTwoPi) / (d * d + hw * hw) + offset;
}

namespace {

double median(std::vector<double> v)
{
    const std::size_t mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<long>(mid), v.end());
    double m = v[mid];
    if (v.size() % 2 == 0) {
        m = 0.5 * (m + *std::max_element(v.begin(), v.begin() + static_cast<long>(mid)));
    }
    return m;
}

FitStatus status_from(const LmResult& res)
{
    FitStatus s;
    s.iterations = res.iterations;
    s.converged = res.converged;
    s.rms_residual = std::sqrt(res.cost / static_cast<double>(std::max<Eigen::Index>(1, res.residuals.size())));
    s.covariance = res.covariance;
    return s;
}

}  // namespace

LorentzianFit fit_lorentzian(const TimeSeries& psd)
{
    psd.validate(8);
    const auto& f = psd.t;
    const auto& y = psd.value;
    const std::size_t n = f.size();

    const auto imax = static_cast<std::size_t>(std::max_element(y.begin(), y.end()) - y.begin());
    const double peak = y[imax];
    const double med = median(y);
    require(peak > 0.0 && (med <= 0.0 || peak / med >= 3.0), ErrorCode::NoPeak,
            "no dominant peak (max/median below 3)");

    const double base = std::max(0.0, *std::min_element(y.begin(), y.end()));
    const double half = base + 0.5 * (peak - base);
    auto crossing = [&](int dir) -> double {
        for (long i = static_cast<long>(imax); i + dir >= 0 && i + dir < static_cast<long>(n); i += dir) {
            const auto a = static_cast<std::size_t>(i);
            const auto b = static_cast<std::size_t>(i + dir);
            if (y[b] <= half) {
                const double frac = (y[a] - half) / (y[a] - y[b]);
                return std::abs(f[a] + frac * (f[b] - f[a]) - f[imax]);
            }
        }
        return std::numeric_limits<double>::quiet_NaN();
    };
    const double left = crossing(-1);
    const double right = crossing(+1);
    double width = 0.0;
    if (std::isfinite(left) && std::isfinite(right)) {
        width = left + right;
    } else if (std::isfinite(left)) {
        width = 2.0 * left;
    } else if (std::isfinite(right)) {
        width = 2.0 * right;
    } else {
        width = 0.1 * (f.back() - f.front());
    }
    const double min_step = (f.back() - f.front()) / static_cast<double>(n - 1);
    width = std::max(width, 0.5 * min_step);

    const double f_seed = f[imax];
    Eigen::VectorXd p0(4);
    p0 << 0.0, width, (peak - base) * kPi * width / 2.0, base;

    auto residuals = [&](const Eigen::VectorXd& p, Eigen::VectorXd& r, Eigen::MatrixXd* jac) {
        const double fr = f_seed + p[0];
        const double w = p[1];
        const double area = p[2];
        r.resize(static_cast<Eigen::Index>(n));
        if (jac) {
            jac->resize(static_cast<Eigen::Index>(n), 4);
        }
        for (std::size_t i = 0; i < n; ++i) {
            const double d = f[i] - fr;
            const double den = d * d + 0.25 * w * w;
            const auto k = static_cast<Eigen::Index>(i);
            r[k] = area * (w / kTwoPi) / den + p[3] - y[i];
            if (jac) {
                (*jac)(k, 0) = area * (w / kTwoPi) * 2.0 * d / (den * den);
                (*jac)(k, 1) = area / kTwoPi * (d * d - 0.25 * w * w) / (den * den);
                (*jac)(k, 2) = (w / kTwoPi) / den;
                (*jac)(k, 3) = 1.0;
            }
        }
    };
    const double w_floor = 1e-6 * min_step;
    auto project = [&](Eigen::VectorXd& p) { p[1] = std::max(p[1], w_floor); };

    const LmResult res = levenberg_marquardt(residuals, p0, {}, project);
    require(res.converged, ErrorCode::NoConvergence, "Lorentzian fit did not converge");

    LorentzianFit fit;
    fit.frequency = f_seed + res.params[0];
    fit.kappa_over_2pi = res.params[1];
    fit.peak_area = res.params[2];
    fit.offset = res.params[3];
    fit.report = status_from(res);
    return fit;
}

RingdownFit fit_ringdown(const TimeSeries& series, double frequency)
{
    series.validate(8);
    require(frequency > 0.0, ErrorCode::InvalidArgument, "mode frequency must be positive");
    const auto& t = series.t;
    const auto& a = series.value;
    const std::size_t n = t.size();
    for (double v : a) {
        require(v > 0.0, ErrorCode::InvalidArgument, "ringdown amplitudes must be positive");
    }

    // Log-linear regression for the seed.
    double st = 0.0, sl = 0.0, stt = 0.0, stl = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double l = std::log(a[i]);
        st += t[i];
        sl += l;
        stt += t[i] * t[i];
        stl += t[i] * l;
    }
    const double dn = static_cast<double>(n);
    const double slope = (dn * stl - st * sl) / (dn * stt - st * st);
    const double intercept = (sl - slope * st) / dn;

    Eigen::VectorXd p0(2);
    p0 << std::exp(intercept), -slope;

    auto residuals = [&](const Eigen::VectorXd& p, Eigen::VectorXd& r, Eigen::MatrixXd* jac) {
        r.resize(static_cast<Eigen::Index>(n));
        if (jac) {
            jac->resize(static_cast<Eigen::Index>(n), 2);
        }
        for (std::size_t i = 0; i < n; ++i) {
            const double e = std::exp(-p[1] * t[i]);
            const auto k = static_cast<Eigen::Index>(i);
            r[k] = p[0] * e - a[i];
            if (jac) {
                (*jac)(k, 0) = e;
                (*jac)(k, 1) = -p[0] * t[i] * e;
            }
        }
    };
    const LmResult res = levenberg_marquardt(residuals, p0);
    require(res.converged, ErrorCode::NoConvergence, "ringdown fit did not converge");

    const double rate = res.params[1];
    const double span = t.back() - t.front();
    require(rate * span > 1e-12, ErrorCode::NotDecaying, "record shows no amplitude decay");

    RingdownFit fit;
    fit.amplitude0 = res.params[0];
    fit.decay_time = 1.0 / rate;
    fit.q_factor = kTwoPi * frequency * fit.decay_time / 2.0;
    fit.report = status_from(res);
    return fit;
}

double rms_from_psd(const TimeSeries& psd, double f_lo, double f_hi)
{
    psd.validate(2);
    const auto& f = psd.t;
    const auto& y = psd.value;
    const double lo = std::max(f_lo, f.front());
    const double hi = std::min(f_hi, f.back());
    require(f_hi > f_lo && hi > lo, ErrorCode::EmptyBand, "band does not overlap the record");

    auto interp = [&](std::size_t i, double x) {
        return y[i] + (y[i + 1] - y[i]) * (x - f[i]) / (f[i + 1] - f[i]);
    };
    double integral = 0.0;
    for (std::size_t i = 0; i + 1 < f.size(); ++i) {
        const double a = std::max(f[i], lo);
        const double b = std::min(f[i + 1], hi);
        if (b <= a) {
            continue;
        }
        integral += 0.5 * (interp(i, a) + interp(i, b)) * (b - a);
    }
    require(integral >= 0.0, ErrorCode::InvalidArgument, "PSD integrates to a negative power");
    return std::sqrt(integral);
}

}  // namespace spinmech
