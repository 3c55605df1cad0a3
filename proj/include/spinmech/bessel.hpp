#pragma once

namespace spinmech {

/// Bessel function of the first kind, order zero. Absolute error below 1e-12
/// everywhere: power series for |x| < 8, Miller backward recurrence up to
/// |x| = 25, Hankel asymptotic expansion beyond.
double bessel_j0(double x);

}  // namespace spinmech
