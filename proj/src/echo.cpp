#include "spinmech/echo.hpp"

#include "spinmech/bessel.hpp"
#include "spinmech/least_squares.hpp"
#include "spinmech/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace spinmech {

void Coupling::validate() const
{
    require(lambda >= 0.0 && z_p > 0.0 && omega_r > 0.0, ErrorCode::InvalidArgument,
            "coupling needs λ ≥ 0, z_p > 0 and ω_r > 0");
}

void EchoCurve::validate() const
{
    require(tau.size() == contrast.size(), ErrorCode::InvalidArgument, "echo columns differ in length");
    for (std::size_t i = 0; i < tau.size(); ++i) {
        require(tau[i] > 0.0, ErrorCode::InvalidArgument, "τ must be positive");
        require(i == 0 || tau[i] > tau[i - 1], ErrorCode::InvalidArgument, "τ must be strictly increasing");
    }
}

double DecoherenceModel::chi(double tau) const
{
    return std::pow(2.0 * tau / t2, exponent);
}

double accumulated_phase(const Coupling& c, const PhaseSpaceSample& s, double tau)
{
    const double wt = c.omega_r * tau;
    return c.lambda / (c.z_p * c.omega_r) * s.x0 *
           (std::sin(2.0 * wt + s.phi0) - 2.0 * std::sin(wt + s.phi0) + std::sin(s.phi0));
}

double coherent_contrast(const Coupling& c, double x0, double tau)
{
    const double arg = 2.0 * c.lambda * x0 / (c.z_p * c.omega_r) * (std::cos(c.omega_r * tau) - 1.0);
    return bessel_j0(arg);
}

double thermal_exponent(const Coupling& c, double delta_x, double tau)
{
    const double s = std::sin(0.5 * c.omega_r * tau);
    const double s2 = s * s;
    const double ratio = delta_x * c.lambda / (c.omega_r * c.z_p);
    return 8.0 * ratio * ratio * s2 * s2;
}

double thermal_contrast(const Coupling& c, double delta_x, double tau)
{
    return std::exp(-thermal_exponent(c, delta_x, tau));
}

namespace {

struct Moments {
    double count = 0.0;
    double mean = 0.0;
    double m2 = 0.0;

    void add(double x)
    {
        count += 1.0;
        const double d = x - mean;
        mean += d / count;
        m2 += d * (x - mean);
    }

    void merge(const Moments& o)
    {
        if (o.count == 0.0) {
            return;
        }
        const double n = count + o.count;
        const double d = o.mean - mean;
        mean += d * o.count / n;
        m2 += o.m2 + d * d * count * o.count / n;
        count = n;
    }
};

}  // namespace

McEstimate mc_contrast(const Coupling& c, double delta_x, double tau, const McOptions& options)
{
    require(options.samples >= 100, ErrorCode::InvalidArgument, "Monte Carlo needs at least 100 samples");
    require(options.chunk_size > 0, ErrorCode::InvalidArgument, "chunk size must be positive");
    require(delta_x >= 0.0, ErrorCode::InvalidArgument, "Δx must be non-negative");

    const std::size_t chunks = (options.samples + options.chunk_size - 1) / options.chunk_size;
    std::vector<Moments> partial(chunks);
    parallel_for(chunks, options.threads, [&](std::size_t k) {
        RandomStream rng(options.seed, k);
        const std::size_t begin = k * options.chunk_size;
        const std::size_t end = std::min(options.samples, begin + options.chunk_size);
        Moments m;
        for (std::size_t i = begin; i < end; ++i) {
            const PhaseSpaceSample s = sample_thermal_state(delta_x, rng);
            m.add(std::cos(accumulated_phase(c, s, tau)));
        }
        partial[k] = m;
    });

    Moments total;
    for (const auto& m : partial) {
        total.merge(m);
    }
    McEstimate out;
    out.estimate = total.mean;
    const double variance = total.count > 1.0 ? total.m2 / (total.count - 1.0) : 0.0;
    out.std_error = std::sqrt(variance / total.count);
    return out;
}

double signal_with_decoherence(const Coupling& c, double delta_x, double tau, const DecoherenceModel& dec,
                               double alpha)
{
    return alpha * thermal_contrast(c, delta_x, tau) * std::exp(-dec.chi(tau));
}

CouplingFit fit_coupling(const EchoCurve& curve, double delta_x, double omega_r, double z_p, bool fit_alpha)
{
    curve.validate();
    const std::size_t n = curve.tau.size();
    require(n >= 3, ErrorCode::Underdetermined, "echo fit needs at least 3 points, got " + std::to_string(n));
    require(delta_x > 0.0 && omega_r > 0.0 && z_p > 0.0, ErrorCode::InvalidArgument,
            "Δx, ω_r and z_p must be positive");

    // q(τ) = sensitivity(τ)·λ².
    std::vector<double> sensitivity(n);
    double max_sens = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double s = std::sin(0.5 * omega_r * curve.tau[i]);
        sensitivity[i] = 8.0 * delta_x * delta_x * s * s * s * s / (omega_r * omega_r * z_p * z_p);
        max_sens = std::max(max_sens, sensitivity[i]);
    }
    // sin⁴(ωτ/2) below rounding level means every τ sits on a mechanical revival.
    const double peak_sens = 8.0 * delta_x * delta_x / (omega_r * omega_r * z_p * z_p);
    require(max_sens > std::numeric_limits<double>::epsilon() * peak_sens, ErrorCode::Underdetermined,
            "no τ point is sensitive to the coupling");

    double alpha0 = 1.0;
    if (fit_alpha) {
        alpha0 = *std::max_element(curve.contrast.begin(), curve.contrast.end());
        if (!(alpha0 > 0.0)) {
            alpha0 = 1.0;
        }
    }
    std::vector<double> estimates;
    for (std::size_t i = 0; i < n; ++i) {
        const double ratio = curve.contrast[i] / alpha0;
        if (sensitivity[i] >= 0.25 * max_sens && ratio > 0.0 && ratio < 1.0) {
            estimates.push_back(-std::log(ratio) / sensitivity[i]);
        }
    }
    double u0 = 0.0;
    if (!estimates.empty()) {
        std::nth_element(estimates.begin(), estimates.begin() + static_cast<long>(estimates.size() / 2),
                         estimates.end());
        u0 = estimates[estimates.size() / 2];
    }

    const Eigen::Index np = fit_alpha ? 2 : 1;
    Eigen::VectorXd p0(np);
    p0[0] = u0;
    if (fit_alpha) {
        p0[1] = alpha0;
    }

    auto residuals = [&](const Eigen::VectorXd& p, Eigen::VectorXd& r, Eigen::MatrixXd* jac) {
        const double u = p[0];
        const double alpha = fit_alpha ? p[1] : 1.0;
        r.resize(static_cast<Eigen::Index>(n));
        if (jac) {
            jac->resize(static_cast<Eigen::Index>(n), np);
        }
        for (std::size_t i = 0; i < n; ++i) {
            const double e = std::exp(-sensitivity[i] * u);
            const auto k = static_cast<Eigen::Index>(i);
            r[k] = alpha * e - curve.contrast[i];
            if (jac) {
                (*jac)(k, 0) = -alpha * sensitivity[i] * e;
                if (fit_alpha) {
                    (*jac)(k, 1) = e;
                }
            }
        }
    };
    auto project = [](Eigen::VectorXd& p) { p[0] = std::max(p[0], 0.0); };

    const LmResult res = levenberg_marquardt(residuals, p0, {}, project);
    require(res.converged, ErrorCode::NoConvergence, "coupling fit did not converge");

    CouplingFit fit;
    const double u = res.params[0];
    const double sigma_u = std::sqrt(std::max(0.0, res.covariance(0, 0)));
    fit.lambda = std::sqrt(u);
    fit.lambda_sigma = std::sqrt(u + sigma_u) - fit.lambda;
    if (fit_alpha) {
        fit.alpha = res.params[1];
        fit.alpha_sigma = std::sqrt(std::max(0.0, res.covariance(1, 1)));
    }
    fit.covariance = res.covariance;
    fit.rms_residual = std::sqrt(res.cost / static_cast<double>(n));
    fit.iterations = res.iterations;
    return fit;
}

double coupling_from_gradient(double gamma_e, double z_p, double gradient)
{
    return kTwoPi * gamma_e * z_p * gradient;
}

bool high_q_assumption_holds(double q_factor, double omega_r, double tau_max)
{
    return q_factor > 100.0 * omega_r * tau_max / kTwoPi;
}

}  // namespace spinmech
