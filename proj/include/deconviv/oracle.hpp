#pragma once

namespace deconviv {

double normal_pdf(double z, double mu = 0.0, double sd = 1.0);
double normal_cdf(double z, double mu = 0.0, double sd = 1.0);
double normal_quantile(double p); // standard normal inverse CDF

// Closed forms for the linear Gaussian design (design 1), where
//   Y | X, W*  ~  N(0.375 X - 0.125 W*, 0.0546875)
//   X | W*     ~  N(W*, 0.5)
// so the structural derivative is 0.375 + 0.125 * (-1) = 0.25 identically.
struct OracleFunctionals {
    double F, dF_dy, dF_dx, dF_dw; // conditional CDF of Y given (X, W*)
    double mF, mdF_dx, mdF_dw;     // conditional CDF of X given W*
};
OracleFunctionals oracle_functionals(double y, double x, double wstar);

double oracle_cond_quantile(double delta, double x, double wstar);

struct OracleQuantileDerivs {
    double q, dq_dx, dq_dw;
};
OracleQuantileDerivs oracle_quantile_derivs(double delta, double x, double wstar);

// The two representations of the structural derivative, assembled exactly the
// way the estimators assemble them. Both are 0.25 up to rounding.
double oracle_structural_derivative(double y, double x, double wstar);
double oracle_structural_derivative_quantile(double delta, double x, double wstar);

} // namespace deconviv
