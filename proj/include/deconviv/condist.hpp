#pragma once
#include <vector>

#include "deconviv/density.hpp"

namespace deconviv {

// Everything an estimator call needs besides its query point. The CF
// estimates drive the deconvolution path; the naive path ignores them and
// uses `grid` directly (no denominator guard applies there).
struct EstimationContext {
    const Sample* sample = nullptr;
    BandwidthSet bw{};
    const CharFnEstimates* cf = nullptr; // required unless naive
    const FrequencyGrid* grid = nullptr; // required when naive
    bool naive = false;
    double tau = 1e-3;      // trimming threshold for denominators
    int quantile_grid = 256; // y-grid size for the isotonized CDF curve
};

struct CondCdfDerivs {
    double F;     // F_{Y|X,W*}(y | x, w*)
    double dF_dy; // conditional density of Y
    double dF_dx;
    double dF_dw;
};

struct MarginalCdfDerivs {
    double F;     // F_{X|W*}(x | w*)
    double dF_dx; // conditional density of X
    double dF_dw;
};

struct QuantileDerivs {
    double q; // conditional delta-quantile of Y given (x, w*)
    double dq_dx;
    double dq_dw;
};

// Pool-adjacent-violators: least-squares nondecreasing fit (equal weights).
std::vector<double> isotonic_regression(std::vector<double> v);

// One (x, w*) slice: spectral weights and x-axis kernel factors are computed
// once, after which every y-query is a single O(n) contraction.
// The constructor throws DegenerateDenominator when |f_{X,W*}(x,w*)| or
// |f_{W*}(w*)| falls below tau.
class ConditionalSlice {
  public:
    ConditionalSlice(const EstimationContext&, double x, double wstar);

    double x() const { return x_; }
    double wstar() const { return wstar_; }
    double fxw() const { return fxw_; }       // f_{X,W*}(x, w*)
    double fxw_dw() const { return fxw_dw_; } // d/dw* of the above
    double fw() const { return fw_; }         // f_{W*}(w*)

    CondCdfDerivs cond_cdf_y(double y) const;
    MarginalCdfDerivs marginal_cdf_x() const;

    struct CdfCurve {
        std::vector<double> y, F; // isotone piecewise-linear CDF fit
    };
    // Equispaced grid over [min Y - 5 h21, max Y + 5 h21], then isotonized.
    CdfCurve cdf_curve() const;
    // Same curve from a caller-precomputed integrated-kernel matrix
    // cy[i*n + j] = flattop_k_cdf((ygrid[i] - Y_j)/h21): lets one matrix be
    // shared across slices with a common y-grid.
    CdfCurve cdf_curve(const std::vector<double>& ygrid, const std::vector<double>& cy) const;

    // Piecewise-linear inversion of the isotone curve (flat runs resolve to
    // their left edge). Throws QuantileBracketFailure when delta is outside
    // [F.front(), F.back()].
    double quantile(double delta, const CdfCurve&) const;

    // Implicit-function derivatives of the conditional quantile, evaluated at
    // q = quantile(delta): dq/da = -(dF/da)/(dF/dy) for a in {x, w*}, using
    // the raw CDF level at q so the chain-rule identity holds exactly.
    // Throws DegenerateDenominator when the conditional density at q is
    // below tau.
    QuantileDerivs quantile_derivs(double delta, const CdfCurve&) const;

    double imag_residual() const { return imag_residual_; }

  private:
    struct RawMoments {
        double g000, gy000, gy100, gy001;
    };
    RawMoments raw_moments(double y) const;

    const Sample* smp_;
    BandwidthSet bw_;
    double tau_;
    int quantile_grid_;
    double x_, wstar_;
    WstarWeights w_;
    std::vector<double> kx_, kxd_, cx_; // K, K', integrated K on the x axis
    double fxw_, fxw_dw_, fxw_dx_, fw_, fw_dw_, gx000_, gx100_;
    double imag_residual_;
};

// Free-function forms; each builds a fresh slice.
CondCdfDerivs cond_cdf_y(double y, double x, double wstar, const EstimationContext&);
MarginalCdfDerivs marginal_cdf_x(double x, double wstar, const EstimationContext&);
double cond_quantile(double delta, double x, double wstar, const EstimationContext&);
QuantileDerivs cond_quantile_derivs(double delta, double x, double wstar,
                                    const EstimationContext&);

} // namespace deconviv
