#pragma once
#include <vector>

#include "deconviv/charfn.hpp"
#include "deconviv/sample.hpp"

namespace deconviv {

struct BandwidthSet {
    double h1 = 1.0;  // w* axis
    double h21 = 1.0; // y axis
    double h22 = 1.0; // x axis
};

// How each observed axis enters the joint estimate.
enum class AxisMode { kernel, kernel_deriv, kernel_cdf, integrate_out };

// Query for g(.; w*) = E[ c_Y(y, Y_j) c_X(x, X_j) | W* = w* ] f_{W*}(w*) style
// objects: a kernel / kernel-derivative / integrated-kernel factor per
// observed axis, the latent w* evaluation point, and an optional first
// derivative in w*.
struct DensityQuery {
    int deriv_wstar = 0; // 0 or 1
    AxisMode y_mode = AxisMode::integrate_out;
    AxisMode x_mode = AxisMode::integrate_out;
    double y = 0.0;
    double x = 0.0;
    double wstar = 0.0;
};

struct DensityEstimate {
    double value = 0.0;
    double imag_residual = 0.0; // |imaginary part| of the inversion sum (diagnostic)
};

// Spectral weights at a fixed w*: for each observation j,
//   s0_j = (1/2pi) sum_k wt_k window(h1 t_k) R(t_k) exp(i t_k (W2_j - w*)) dt-weighted,
//   s1_j = the same sum with an extra (-i t_k) factor (d/dw*),
// where R = phi_wstar / phi_w2 on the deconvolution path and R = 1 on the
// naive path. Real parts carry the estimate; imaginary parts are kept to
// report the inversion residual.
struct WstarWeights {
    double wstar = 0.0;
    std::vector<double> s0, s1;   // real parts
    std::vector<double> s0i, s1i; // imaginary parts
};

// Deconvolution path: unit-width window phi_kw(h1 t), which is supported on
// |t| <= 1/h1; throws GridTooCoarse when grid.t_max < 1/h1.
WstarWeights deconv_weights(const Sample&, const CharFnEstimates&, double h1, double wstar);

// Naive path: plain transform phi_k(h1 t) with the CF ratio replaced by 1
// (a smoother that treats W2 as if it were W*); support |t| <= 4 pi / h1,
// so grid.t_max must reach 4 pi / h1.
WstarWeights naive_weights(const Sample&, const FrequencyGrid&, double h1, double wstar);

// Contract the cached weights against the per-axis kernel factors:
//   value = (1/n) sum_j c_j * s_j,   c_j = c_Y(q.y, Y_j; h21) * c_X(q.x, X_j; h22)
// with c built from flattop_k / flattop_k_deriv / flattop_k_cdf / 1 per mode.
DensityEstimate reduce_query(const DensityQuery&, const Sample&, const BandwidthSet&,
                             const WstarWeights&);

// One-shot conveniences: build the weights, then reduce.
DensityEstimate estimate_g(const DensityQuery&, const Sample&, const BandwidthSet&,
                           const CharFnEstimates&);
DensityEstimate estimate_g_naive(const DensityQuery&, const Sample&, const BandwidthSet&,
                                 const FrequencyGrid&);

} // namespace deconviv
