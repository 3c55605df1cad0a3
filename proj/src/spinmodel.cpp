#include "spinmech/spinmodel.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace spinmech {

void SpinParams::validate() const
{
    require(zero_field_splitting > 0.0 && std::isfinite(zero_field_splitting), ErrorCode::InvalidArgument,
            "zero-field splitting must be positive");
    require(gamma_e > 0.0 && std::isfinite(gamma_e), ErrorCode::InvalidArgument,
            "gyromagnetic ratio must be positive");
}

SpinMatrix spin_hamiltonian(const SpinParams& params, const FieldComponents& field)
{
    const double d = params.zero_field_splitting;
    const double z = params.gamma_e * field.bz;
    const double x = params.gamma_e * field.bx / std::sqrt(2.0);
    SpinMatrix h;
    h << d + z, x, 0.0,
         x, 0.0, x,
         0.0, x, d - z;
    return h;
}

namespace {

// Newton polish of a Jacobi eigenvalue on det(H − E) in extended precision.
// Jacobi leaves a few ulp of absolute error; the factored determinant keeps
// the residual well below that.
double polish_level(const SpinMatrix& h, double e)
{
    using ld = long double;
    const ld a = h(0, 0);
    const ld b = h(2, 2);
    const ld x2 = static_cast<ld>(h(0, 1)) * h(0, 1);
    auto poly = [&](ld v) { return (a - v) * (v * v - b * v - x2) - x2 * (b - v); };
    auto slope = [&](ld v) { return -(v * v - b * v - x2) + (a - v) * (2 * v - b) + x2; };
    const ld cap = 1e-4L * std::max<ld>(1.0L, std::abs(static_cast<ld>(e)) * 1e-9L);
    ld v = e;
    ld r = std::abs(poly(v));
    for (int it = 0; it < 4 && r > 0; ++it) {
        const ld d = slope(v);
        if (d == 0) {
            break;
        }
        const ld step = poly(v) / d;
        if (!(std::abs(step) <= cap)) {
            break;
        }
        const ld next = v - step;
        const ld rn = std::abs(poly(next));
        if (!(rn < r)) {
            break;
        }
        v = next;
        r = rn;
    }
    return static_cast<double>(v);
}

}  // namespace

SpinSpectrum spin_spectrum(const SpinParams& params, const FieldComponents& field)
{
    const SpinMatrix h = spin_hamiltonian(params, field);
    SpinMatrix a = h;
    SpinMatrix v = SpinMatrix::Identity();

    for (int sweep = 0; sweep < 64; ++sweep) {
        const double off = a(0, 1) * a(0, 1) + a(0, 2) * a(0, 2) + a(1, 2) * a(1, 2);
        const double diag = a.diagonal().squaredNorm();
        if (off == 0.0 || off <= 1e-36 * diag) {
            break;
        }
        for (int p = 0; p < 2; ++p) {
            for (int q = p + 1; q < 3; ++q) {
                const double apq = a(p, q);
                if (apq == 0.0) {
                    continue;
                }
                const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
                const double t = std::copysign(1.0, theta) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                const double tau = s / (1.0 + c);
                // Diagonal moves by ±t·apq, so the pair sum is kept to rounding.
                a(p, p) -= t * apq;
                a(q, q) += t * apq;
                a(p, q) = 0.0;
                a(q, p) = 0.0;
                const int r = 3 - p - q;
                const double arp = a(r, p);
                const double arq = a(r, q);
                a(r, p) = a(p, r) = arp - s * (arq + tau * arp);
                a(r, q) = a(q, r) = arq + s * (arp - tau * arq);
                SpinMatrix g = SpinMatrix::Identity();
                g(p, p) = c;
                g(q, q) = c;
                g(p, q) = s;
                g(q, p) = -s;
                v = v * g;
            }
        }
    }

    std::array<int, 3> order{0, 1, 2};
    std::sort(order.begin(), order.end(), [&](int i, int j) { return a(i, i) < a(j, j); });

    SpinSpectrum out;
    double best_weight = -1.0;
    for (int k = 0; k < 3; ++k) {
        out.energies[k] = polish_level(h, a(order[k], order[k]));
        const double weight = v(1, order[k]) * v(1, order[k]);
        if (weight > best_weight) {
            best_weight = weight;
            out.zero_level = k;
        }
    }
    return out;
}

EsrPair esr_frequencies(const SpinParams& params, const FieldComponents& field)
{
    const SpinSpectrum spectrum = spin_spectrum(params, field);
    const double e0 = spectrum.energies[spectrum.zero_level];
    std::array<double, 2> f{};
    int j = 0;
    for (int k = 0; k < 3; ++k) {
        if (k != spectrum.zero_level) {
            f[j++] = std::abs(spectrum.energies[k] - e0);
        }
    }
    if (f[0] > f[1]) {
        std::swap(f[0], f[1]);
    }
    return {f[0], f[1]};
}

namespace {

struct NewtonState {
    Eigen::Vector2d residual;
    Eigen::Matrix2d jacobian;
};

// Residual and its Jacobian with respect to (bz, s = bx²). Level derivatives
// come from implicit differentiation of the characteristic polynomial
//   E³ − 2D E² + (D² − γ²(bz² + s)) E + γ² s D = 0.
NewtonState evaluate(const SpinParams& params, const EsrPair& target, double bz, double s)
{
    const double d = params.zero_field_splitting;
    const double g2 = params.gamma_e * params.gamma_e;
    const SpinSpectrum spec = spin_spectrum(params, {bz, std::sqrt(s)});

    std::array<double, 3> d_bz{};
    std::array<double, 3> d_s{};
    for (int k = 0; k < 3; ++k) {
        const double e = spec.energies[k];
        double slope = 3.0 * e * e - 4.0 * d * e + d * d - g2 * (bz * bz + s);
        if (slope == 0.0) {
            slope = std::numeric_limits<double>::min();
        }
        d_bz[k] = 2.0 * g2 * bz * e / slope;
        d_s[k] = -g2 * (d - e) / slope;
    }

    const int z = spec.zero_level;
    std::array<int, 2> idx{};
    int j = 0;
    for (int k = 0; k < 3; ++k) {
        if (k != z) {
            idx[j++] = k;
        }
    }
    std::array<double, 2> freq{};
    std::array<double, 2> sign{};
    for (int i = 0; i < 2; ++i) {
        const double diff = spec.energies[idx[i]] - spec.energies[z];
        freq[i] = std::abs(diff);
        sign[i] = diff < 0.0 ? -1.0 : 1.0;
    }
    if (freq[0] > freq[1]) {
        std::swap(freq[0], freq[1]);
        std::swap(sign[0], sign[1]);
        std::swap(idx[0], idx[1]);
    }

    NewtonState st;
    st.residual << freq[0] - target.f_minus, freq[1] - target.f_plus;
    for (int i = 0; i < 2; ++i) {
        st.jacobian(i, 0) = sign[i] * (d_bz[idx[i]] - d_bz[z]);
        st.jacobian(i, 1) = sign[i] * (d_s[idx[i]] - d_s[z]);
    }
    return st;
}

}  // namespace

FieldComponents invert_field(const SpinParams& params, const EsrPair& esr, const InvertOptions& options)
{
    params.validate();
    require(std::isfinite(esr.f_minus) && std::isfinite(esr.f_plus), ErrorCode::OutOfRange,
            "ESR frequencies must be finite");
    require(esr.f_plus >= esr.f_minus, ErrorCode::OutOfRange, "f_plus < f_minus");
    require(esr.f_minus > 0.0, ErrorCode::OutOfRange, "f_minus must be positive");

    double bz = (esr.f_plus - esr.f_minus) / (2.0 * params.gamma_e);
    double s = 0.0;
    NewtonState st = evaluate(params, esr, bz, s);
    double norm = st.residual.lpNorm<Eigen::Infinity>();

    for (int iter = 0; iter < options.max_iterations; ++iter) {
        if (norm < options.residual_tolerance) {
            return {std::abs(bz), std::sqrt(s)};
        }
        Eigen::Vector2d step = st.jacobian.colPivHouseholderQr().solve(-st.residual);
        if (!step.allFinite()) {
            step = st.jacobian.completeOrthogonalDecomposition().solve(-st.residual);
        }
        if (!step.allFinite()) {
            break;
        }

        double damping = 1.0;
        bool improved = false;
        for (int halving = 0; halving < 40; ++halving) {
            const double bz_trial = bz + damping * step[0];
            const double s_trial = std::max(0.0, s + damping * step[1]);
            NewtonState trial = evaluate(params, esr, bz_trial, s_trial);
            const double trial_norm = trial.residual.lpNorm<Eigen::Infinity>();
            if (trial_norm < norm) {
                bz = bz_trial;
                s = s_trial;
                st = trial;
                norm = trial_norm;
                improved = true;
                break;
            }
            damping *= 0.5;
        }
        if (!improved) {
            break;
        }
    }
    if (norm < options.residual_tolerance) {
        return {std::abs(bz), std::sqrt(s)};
    }
    throw Error(ErrorCode::NoConvergence,
                "no field reproduces the ESR pair (residual " + std::to_string(norm) + " Hz)");
}

}  // namespace spinmech
