#include "spinmech/bessel.hpp"

#include <cmath>

namespace spinmech {

namespace {

double j0_series(double x)
{
    const double q = 0.25 * x * x;
    double term = 1.0;
    double sum = 1.0;
    for (int k = 1; k < 200; ++k) {
        term *= -q / (static_cast<double>(k) * static_cast<double>(k));
        sum += term;
        if (std::abs(term) < 1e-18) {
            break;
        }
    }
    return sum;
}

// Backward recurrence J_{k-1} = (2k/x) J_k − J_{k+1}, normalised with
// J0 + 2·Σ J_{2k} = 1.
double j0_miller(double x)
{
    int start = static_cast<int>(x) + 40;
    start += start % 2;
    double above = 0.0;
    double current = 1e-30;
    double even_sum = current;
    for (int k = start; k > 0; --k) {
        const double below = (2.0 * k / x) * current - above;
        above = current;
        current = below;
        if ((k - 1) % 2 == 0 && k - 1 > 0) {
            even_sum += current;
        }
    }
    return current / (current + 2.0 * even_sum);
}

double j0_asymptotic(double x)
{
    // P = A0 − A2/x² + A4/x⁴ − …, Q = −A1/x + A3/x³ − …,
    // A_k = Π_{j=1..k} (2j − 1)² / (k! 8^k).
    double p = 0.0;
    double q = 0.0;
    double a = 1.0;
    double last = INFINITY;
    for (int k = 0; k < 60; ++k) {
        const double term = a / std::pow(x, k);
        if (term > last) {
            break;
        }
        last = term;
        switch (k % 4) {
        case 0: p += term; break;
        case 1: q -= term; break;
        case 2: p -= term; break;
        case 3: q += term; break;
        }
        if (term < 1e-20) {
            break;
        }
        const double odd = 2.0 * k + 1.0;
        a *= odd * odd / (8.0 * (k + 1));
    }
    // cos(x − π/4) and sin(x − π/4) without forming x − π/4.
    const double c = std::cos(x);
    const double s = std::sin(x);
    const double cos_chi = (c + s) / std::sqrt(2.0);
    const double sin_chi = (s - c) / std::sqrt(2.0);
    return std::sqrt(2.0 / (M_PI * x)) * (p * cos_chi - q * sin_chi);
}

}  // namespace

double bessel_j0(double x)
{
    x = std::abs(x);
    if (x < 8.0) {
        return j0_series(x);
    }
    if (x <= 25.0) {
        return j0_miller(x);
    }
    return j0_asymptotic(x);
}

}  // namespace spinmech
