#include "phaseopt/bessel.hpp"

#include <cmath>
#include <stdexcept>

namespace phaseopt {

namespace {

// Ascending series; fine while the peak term stays small (x <= ~12).
double bessel_j_series(int m, double x) {
    const long double half = static_cast<long double>(x) / 2.0L;
    long double term = 1.0L;
    for (int i = 1; i <= m; ++i) term *= half / i;
    long double sum = term;
    const long double x2 = half * half;
    for (int s = 1; s < 400; ++s) {
        term *= -x2 / (static_cast<long double>(s) * (s + m));
        sum += term;
        if (std::abs(static_cast<double>(term)) < 1e-22 * (1.0 + std::abs(static_cast<double>(sum))))
            break;
    }
    return static_cast<double>(sum);
}

// Miller's downward recurrence with the J_0 + 2 sum J_{2k} = 1 normalization;
// stable for the larger arguments where the series cancels badly.
double bessel_j_miller(int m, double x) {
    const int start = m + 20 + static_cast<int>(1.2 * x);
    const int M = start % 2 == 0 ? start : start + 1;
    long double jp1 = 0.0L, j = 1e-30L, target = 0.0L, norm = 0.0L;
    for (int k = M; k >= 1; --k) {
        const long double jm1 = (2.0L * k / x) * j - jp1;
        jp1 = j;
        j = jm1;
        if (k - 1 == m) target = j;
        if ((k - 1) % 2 == 0) norm += (k - 1 == 0 ? 1.0L : 2.0L) * j;
        if (std::abs(static_cast<double>(j)) > 1e250) {
            j *= 1e-250L;
            jp1 *= 1e-250L;
            target *= 1e-250L;
            norm *= 1e-250L;
        }
    }
    return static_cast<double>(target / norm);
}

}  // namespace

double bessel_j(int m, double x) {
    if (m < 0) throw std::invalid_argument("bessel_j: m must be >= 0");
    if (x < 0.0) return (m % 2 == 0 ? 1.0 : -1.0) * bessel_j(m, -x);
    if (x == 0.0) return m == 0 ? 1.0 : 0.0;
    return x <= 12.0 ? bessel_j_series(m, x) : bessel_j_miller(m, x);
}

std::vector<double> bessel_zeros_below(int m, double x_max) {
    std::vector<double> zeros;
    if (x_max <= 0.0) return zeros;
    // J_m > 0 on (0, j_{m,1}) and j_{m,1} > m, so scanning from m misses
    // nothing; step 0.05 is far below the zero spacing (~pi).
    const double step = 0.05;
    double a = std::max(static_cast<double>(m), step);
    double fa = bessel_j(m, a);
    for (double b = a + step; a < x_max; a = b, b += step) {
        const double fb = bessel_j(m, std::min(b, x_max));
        if ((fa < 0.0) != (fb < 0.0)) {
            double lo = a, hi = std::min(b, x_max), flo = fa;
            for (int it = 0; it < 200; ++it) {
                const double mid = 0.5 * (lo + hi);
                const double fm = bessel_j(m, mid);
                if ((flo < 0.0) != (fm < 0.0))
                    hi = mid;
                else {
                    lo = mid;
                    flo = fm;
                }
                if (hi - lo < 1e-15 * hi) break;
            }
            const double z = 0.5 * (lo + hi);
            if (z <= x_max) zeros.push_back(z);
        }
        fa = fb;
        if (b > x_max) break;
    }
    return zeros;
}

std::vector<double> bessel_zeros(int m, int count) {
    if (count < 1) throw std::invalid_argument("bessel_zeros: count must be >= 1");
    // Zeros are spaced by roughly pi and j_{m,1} < m + 2 m^{1/3} + 3.
    double x_max = m + 2.0 * std::cbrt(static_cast<double>(std::max(m, 1))) + 3.0 +
                   3.3 * (count + 1);
    std::vector<double> zeros = bessel_zeros_below(m, x_max);
    while (static_cast<int>(zeros.size()) < count) {
        x_max *= 1.5;
        zeros = bessel_zeros_below(m, x_max);
    }
    zeros.resize(count);
    return zeros;
}

}  // namespace phaseopt
