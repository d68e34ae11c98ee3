#include "deconviv/oracle.hpp"

#include <cmath>

#include <gsl/gsl_cdf.h>
#include <gsl/gsl_randist.h>

#include "deconviv/errors.hpp"

namespace deconviv {

namespace {
// Y = 0.25 X + 0.25 eps with (eps, eta) jointly normal, X = W* + eta:
//   E[eps | eta] = 0.5 eta, Var(eps | eta) = 0.875, eta ~ N(0, 0.5)
constexpr double kMuX = 0.375;    // d E[Y | X = x, W* = w] / dx
constexpr double kMuW = -0.125;   // d E[Y | X = x, W* = w] / dw
constexpr double kVarY = 0.0546875;
constexpr double kVarEta = 0.5;
} // namespace

double normal_pdf(double z, double mu, double sd) {
    return gsl_ran_gaussian_pdf(z - mu, sd);
}

double normal_cdf(double z, double mu, double sd) {
    return gsl_cdf_gaussian_P(z - mu, sd);
}

double normal_quantile(double p) {
    if (!(p > 0.0) || !(p < 1.0))
        throw InvalidParameter("normal_quantile needs p strictly inside (0, 1)");
    return gsl_cdf_ugaussian_Pinv(p);
}

OracleFunctionals oracle_functionals(double y, double x, double wstar) {
    const double mu = kMuX * x + kMuW * wstar;
    const double sd = std::sqrt(kVarY);
    const double dens = normal_pdf(y, mu, sd);
    OracleFunctionals out;
    out.F = normal_cdf(y, mu, sd);
    out.dF_dy = dens;
    out.dF_dx = -kMuX * dens;
    out.dF_dw = -kMuW * dens;
    const double sd_eta = std::sqrt(kVarEta);
    const double mdens = normal_pdf(x, wstar, sd_eta);
    out.mF = normal_cdf(x, wstar, sd_eta);
    out.mdF_dx = mdens;
    out.mdF_dw = -mdens;
    return out;
}

double oracle_cond_quantile(double delta, double x, double wstar) {
    return kMuX * x + kMuW * wstar + std::sqrt(kVarY) * normal_quantile(delta);
}

OracleQuantileDerivs oracle_quantile_derivs(double delta, double x, double wstar) {
    return {oracle_cond_quantile(delta, x, wstar), kMuX, kMuW};
}

double oracle_structural_derivative(double y, double x, double wstar) {
    const OracleFunctionals o = oracle_functionals(y, x, wstar);
    return -o.dF_dx / o.dF_dy + (o.dF_dw / o.dF_dy) * (o.mdF_dx / o.mdF_dw);
}

double oracle_structural_derivative_quantile(double delta, double x, double wstar) {
    const OracleQuantileDerivs qd = oracle_quantile_derivs(delta, x, wstar);
    const OracleFunctionals o = oracle_functionals(qd.q, x, wstar);
    return qd.dq_dx - qd.dq_dw * (o.mdF_dx / o.mdF_dw);
}

} // namespace deconviv
