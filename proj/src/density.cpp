#include "deconviv/density.hpp"

#include <cmath>
#include <complex>
#include <sstream>

#include "deconviv/errors.hpp"
#include "deconviv/kernels.hpp"

namespace deconviv {

namespace {

constexpr double kTwoPi = 6.28318530717958647693;

void check_bandwidth(double h, const char* name) {
    if (!(h > 0.0) || !std::isfinite(h))
        throw InvalidParameter(std::string(name) + " must be positive and finite");
}

// Shared spectral-weight builder. phi_wstar/phi_w2 == nullptr means R = 1.
WstarWeights build_weights(const Sample& s, const FrequencyGrid& g,
                           const std::vector<std::complex<double>>* phi_wstar,
                           const std::vector<std::complex<double>>* phi_w2,
                           double (*window)(double), double window_support, double h1,
                           double wstar) {
    validate(s);
    check_bandwidth(h1, "h1");
    if (!std::isfinite(wstar)) throw InvalidParameter("wstar must be finite");
    const double required = window_support / h1;
    if (g.t_max < required * (1.0 - 1e-12)) {
        std::ostringstream msg;
        msg << "frequency grid reaches |t| = " << g.t_max
            << " but the spectral window for h1 = " << h1 << " is supported out to |t| = "
            << required;
        throw GridTooCoarse(msg.str());
    }
    const std::size_t npts = g.size();
    const double dt = g.dt();
    // a0_k = wt_k window(h1 t_k) R(t_k) e^{-i t_k w*} / (2 pi),  a1_k = a0_k (-i t_k)
    std::vector<std::complex<double>> a0(npts), a1(npts);
    for (std::size_t k = 0; k < npts; ++k) {
        const double t = g.t[k];
        double wt = dt;
        if (k == 0 || k + 1 == npts) wt *= 0.5;
        std::complex<double> v = (wt * window(h1 * t) / kTwoPi) * std::polar(1.0, -t * wstar);
        if (phi_wstar) v *= (*phi_wstar)[k] / (*phi_w2)[k];
        a0[k] = v;
        a1[k] = v * std::complex<double>(0.0, -t);
    }
    const std::size_t n = s.size();
    WstarWeights out;
    out.wstar = wstar;
    out.s0.resize(n);
    out.s1.resize(n);
    out.s0i.resize(n);
    out.s1i.resize(n);
    for (std::size_t j = 0; j < n; ++j) {
        const std::complex<double> rot = std::polar(1.0, dt * s.w2[j]);
        std::complex<double> z = std::polar(1.0, g.t.front() * s.w2[j]);
        std::complex<double> acc0(0.0, 0.0), acc1(0.0, 0.0);
        for (std::size_t k = 0; k < npts; ++k) {
            acc0 += a0[k] * z;
            acc1 += a1[k] * z;
            z *= rot;
        }
        out.s0[j] = acc0.real();
        out.s0i[j] = acc0.imag();
        out.s1[j] = acc1.real();
        out.s1i[j] = acc1.imag();
    }
    return out;
}

double axis_factor(AxisMode m, double q, double z, double h) {
    switch (m) {
    case AxisMode::kernel: return flattop_k((q - z) / h) / h;
    case AxisMode::kernel_deriv: return flattop_k_deriv((q - z) / h) / (h * h);
    case AxisMode::kernel_cdf: return flattop_k_cdf((q - z) / h);
    case AxisMode::integrate_out: return 1.0;
    }
    throw InvalidParameter("unknown axis mode");
}

} // namespace

WstarWeights deconv_weights(const Sample& s, const CharFnEstimates& cf, double h1, double wstar) {
    return build_weights(s, cf.grid, &cf.phi_wstar, &cf.phi_w2, phi_kw, 1.0, h1, wstar);
}

WstarWeights naive_weights(const Sample& s, const FrequencyGrid& g, double h1, double wstar) {
    return build_weights(s, g, nullptr, nullptr, phi_k, 2.0 * kTwoPi, h1, wstar);
}

DensityEstimate reduce_query(const DensityQuery& q, const Sample& s, const BandwidthSet& bw,
                             const WstarWeights& w) {
    if (q.deriv_wstar != 0 && q.deriv_wstar != 1)
        throw InvalidParameter("deriv_wstar must be 0 or 1");
    if (w.s0.size() != s.size())
        throw InvalidParameter("spectral weights were built for a different sample");
    if (q.y_mode != AxisMode::integrate_out) check_bandwidth(bw.h21, "h21");
    if (q.x_mode != AxisMode::integrate_out) check_bandwidth(bw.h22, "h22");
    const std::vector<double>& sr = q.deriv_wstar ? w.s1 : w.s0;
    const std::vector<double>& si = q.deriv_wstar ? w.s1i : w.s0i;
    const std::size_t n = s.size();
    double acc_re = 0.0, acc_im = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        const double c = axis_factor(q.y_mode, q.y, s.y[j], bw.h21) *
                         axis_factor(q.x_mode, q.x, s.x[j], bw.h22);
        acc_re += c * sr[j];
        acc_im += c * si[j];
    }
    return {acc_re / static_cast<double>(n), std::fabs(acc_im / static_cast<double>(n))};
}

DensityEstimate estimate_g(const DensityQuery& q, const Sample& s, const BandwidthSet& bw,
                           const CharFnEstimates& cf) {
    return reduce_query(q, s, bw, deconv_weights(s, cf, bw.h1, q.wstar));
}

DensityEstimate estimate_g_naive(const DensityQuery& q, const Sample& s, const BandwidthSet& bw,
                                 const FrequencyGrid& g) {
    return reduce_query(q, s, bw, naive_weights(s, g, bw.h1, q.wstar));
}

} // namespace deconviv
