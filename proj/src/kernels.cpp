#include "deconviv/kernels.hpp"

#include <algorithm>
#include <cmath>

#include <gsl/gsl_sf_expint.h>

namespace deconviv {

namespace {
constexpr double kPi = 3.14159265358979323846;
constexpr double kTwoPi = 2.0 * kPi;
constexpr double kPi2 = kPi * kPi;

// A(u) = sin^2(2 pi u) - sin^2(pi u) = (cos(2 pi u) - cos(4 pi u)) / 2, so K = A / (pi u)^2.
inline double numer_a(double u) { return 0.5 * (std::cos(kTwoPi * u) - std::cos(2.0 * kTwoPi * u)); }
} // namespace

double flattop_k(double u) {
    const double au = std::fabs(u);
    if (au < 1e-4) {
        const double u2 = u * u;
        return 3.0 - 5.0 * kPi2 * u2 + 2.8 * kPi2 * kPi2 * u2 * u2;
    }
    return numer_a(u) / (kPi2 * u * u);
}

double flattop_k_deriv(double u) {
    const double au = std::fabs(u);
    if (au < 1e-4) {
        const double u2 = u * u;
        return -10.0 * kPi2 * u + 11.2 * kPi2 * kPi2 * u * u2;
    }
    const double a = numer_a(u);
    const double ap = kTwoPi * std::sin(2.0 * kTwoPi * u) - kPi * std::sin(kTwoPi * u);
    return (ap * u - 2.0 * a) / (kPi2 * u * u * u);
}

double flattop_k_cdf(double u) {
    if (std::fabs(u) < 1e-6) return 0.5 + 3.0 * u;
    const double si4 = gsl_sf_Si(2.0 * kTwoPi * u);
    const double si2 = gsl_sf_Si(kTwoPi * u);
    return (2.0 / kPi) * si4 - (1.0 / kPi) * si2 - numer_a(u) / (kPi2 * u) + 0.5;
}

double phi_k(double s) {
    const double a = std::fabs(s);
    return std::clamp(2.0 - a / kTwoPi, 0.0, 1.0);
}

double flattop_kw(double u) { return flattop_k(u / (2.0 * kTwoPi)) / (2.0 * kTwoPi); }

double phi_kw(double s) { return std::clamp(2.0 * (1.0 - std::fabs(s)), 0.0, 1.0); }

double flattop_k_selfconv(double v) {
    if (std::fabs(v) < 1e-3) return 8.0 / 3.0 - (52.0 / 15.0) * kPi2 * v * v;
    const double c = std::cos(kTwoPi * v);
    const double s = std::sin(kTwoPi * v);
    return c / (kPi2 * v * v) + s * (1.0 - 2.0 * c) / (2.0 * kPi2 * kPi * v * v * v);
}

double sine_integral(double x) { return gsl_sf_Si(x); }

} // namespace deconviv
