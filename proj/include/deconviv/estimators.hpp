#pragma once
#include <span>

#include "deconviv/condist.hpp"

namespace deconviv {

struct RhoEstimate {
    double value;          // structural derivative at (y, x, w*)
    double dF_dy, dF_dx, dF_dw; // conditional-CDF partials of Y | (X, W*)
    double mdF_dx, mdF_dw;      // conditional-CDF partials of X | W*
};

// rho(y, x, w*) = -dF_dx/dF_dy + (dF_dw/dF_dy) * (mdF_dx/mdF_dw).
// Throws DegenerateDenominator when |dF_dy| or |mdF_dw| is below tau (on top
// of the slice-level density guards).
RhoEstimate structural_derivative(double y, double x, double wstar, const EstimationContext&);

// Mean of structural_derivative over the given w* values; points whose
// denominators trim are dropped, and AllPointsTrimmed is thrown when none
// survive.
double structural_derivative_averaged(double y, double x, std::span<const double> wstars,
                                      const EstimationContext&);

// Integration window for the weighted local average response.
struct WeightSpec {
    double delta_lo = 0.25, delta_hi = 0.35; // quantile levels
    double w_lo = 0.0, w_hi = 0.0;           // w* range
    int n_delta = 11, n_w = 11;              // trapezoid nodes per axis
};

// Weighted local average response at x:
//   int int [dq/dx - dq/dw * (mdF_dx / mdF_dw)] f_{X,W*}(x, w*) dw* d delta
//   ------------------------------------------------------------------------
//              (delta_hi - delta_lo) * int f_{X,W*}(x, w*) dw*
// by tensor trapezoid over the window. Any trimmed or unbracketed node aborts
// the whole computation (the exception propagates).
double wlar(double x, const WeightSpec&, const EstimationContext&);

} // namespace deconviv
