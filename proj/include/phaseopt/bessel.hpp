#pragma once

#include <vector>

namespace phaseopt {

/// J_m(x) by the ascending series with long double accumulation; adequate for
/// the zero ranges used here (x up to ~60, m up to ~40).
double bessel_j(int m, double x);

/// First `count` positive zeros of J_m, by sign-change bracketing + bisection.
std::vector<double> bessel_zeros(int m, int count);

/// All positive zeros of J_m in (0, x_max].
std::vector<double> bessel_zeros_below(int m, double x_max);

}  // namespace phaseopt
