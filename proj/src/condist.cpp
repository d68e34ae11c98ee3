#include "deconviv/condist.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "deconviv/errors.hpp"
#include "deconviv/kernels.hpp"

namespace deconviv {

namespace {

void check_context(const EstimationContext& ctx) {
    if (!ctx.sample) throw InvalidParameter("estimation context has no sample");
    if (ctx.naive) {
        if (!ctx.grid) throw InvalidParameter("naive context needs a frequency grid");
    } else if (!ctx.cf) {
        throw InvalidParameter("context needs characteristic-function estimates");
    }
    if (!(ctx.tau > 0.0) || !std::isfinite(ctx.tau))
        throw InvalidParameter("tau must be positive and finite");
    if (ctx.quantile_grid < 8) throw InvalidParameter("quantile_grid must be at least 8");
    if (!(ctx.bw.h21 > 0.0) || !(ctx.bw.h22 > 0.0))
        throw InvalidParameter("h21 and h22 must be positive");
}

[[noreturn]] void throw_degenerate(const char* what, double value, double tau) {
    std::ostringstream msg;
    msg << what << " = " << value << " is below the trimming threshold tau = " << tau;
    throw DegenerateDenominator(msg.str());
}

} // namespace

std::vector<double> isotonic_regression(std::vector<double> v) {
    const std::size_t n = v.size();
    std::vector<double> level;
    std::vector<std::size_t> count;
    level.reserve(n);
    count.reserve(n);
    for (double value : v) {
        level.push_back(value);
        count.push_back(1);
        while (level.size() > 1 && level[level.size() - 1] < level[level.size() - 2]) {
            const double pooled = (level[level.size() - 2] * count[count.size() - 2] +
                                   level[level.size() - 1] * count[count.size() - 1]) /
                                  static_cast<double>(count[count.size() - 2] + count[count.size() - 1]);
            count[count.size() - 2] += count[count.size() - 1];
            level[level.size() - 2] = pooled;
            level.pop_back();
            count.pop_back();
        }
    }
    std::vector<double> out;
    out.reserve(n);
    for (std::size_t b = 0; b < level.size(); ++b)
        out.insert(out.end(), count[b], level[b]);
    return out;
}

ConditionalSlice::ConditionalSlice(const EstimationContext& ctx, double x, double wstar)
    : smp_(ctx.sample), bw_(ctx.bw), tau_(ctx.tau), quantile_grid_(ctx.quantile_grid), x_(x),
      wstar_(wstar) {
    check_context(ctx);
    const Sample& s = *smp_;
    w_ = ctx.naive ? naive_weights(s, *ctx.grid, bw_.h1, wstar)
                   : deconv_weights(s, *ctx.cf, bw_.h1, wstar);
    const std::size_t n = s.size();
    kx_.resize(n);
    kxd_.resize(n);
    cx_.resize(n);
    double fxw = 0, fxw_dw = 0, fxw_dx = 0, fw = 0, fw_dw = 0, gx000 = 0, gx100 = 0;
    double im_fxw = 0, im_fw = 0;
    for (std::size_t j = 0; j < n; ++j) {
        const double u = (x - s.x[j]) / bw_.h22;
        kx_[j] = flattop_k(u) / bw_.h22;
        kxd_[j] = flattop_k_deriv(u) / (bw_.h22 * bw_.h22);
        cx_[j] = flattop_k_cdf(u);
        fxw += kx_[j] * w_.s0[j];
        fxw_dw += kx_[j] * w_.s1[j];
        fxw_dx += kxd_[j] * w_.s0[j];
        fw += w_.s0[j];
        fw_dw += w_.s1[j];
        gx000 += cx_[j] * w_.s0[j];
        gx100 += cx_[j] * w_.s1[j];
        im_fxw += kx_[j] * w_.s0i[j];
        im_fw += w_.s0i[j];
    }
    const double dn = static_cast<double>(n);
    fxw_ = fxw / dn;
    fxw_dw_ = fxw_dw / dn;
    fxw_dx_ = fxw_dx / dn;
    fw_ = fw / dn;
    fw_dw_ = fw_dw / dn;
    gx000_ = gx000 / dn;
    gx100_ = gx100 / dn;
    imag_residual_ = std::max(std::fabs(im_fxw / dn), std::fabs(im_fw / dn));
    if (std::fabs(fxw_) < tau_) throw_degenerate("joint density f_{X,W*}", fxw_, tau_);
    if (std::fabs(fw_) < tau_) throw_degenerate("instrument density f_{W*}", fw_, tau_);
}

ConditionalSlice::RawMoments ConditionalSlice::raw_moments(double y) const {
    const Sample& s = *smp_;
    const std::size_t n = s.size();
    double g000 = 0, gy000 = 0, gy100 = 0, gy001 = 0;
    for (std::size_t j = 0; j < n; ++j) {
        const double u = (y - s.y[j]) / bw_.h21;
        const double ky = flattop_k(u) / bw_.h21;
        const double cy = flattop_k_cdf(u);
        g000 += ky * kx_[j] * w_.s0[j];
        gy000 += cy * kx_[j] * w_.s0[j];
        gy100 += cy * kx_[j] * w_.s1[j];
        gy001 += cy * kxd_[j] * w_.s0[j];
    }
    const double dn = static_cast<double>(n);
    return {g000 / dn, gy000 / dn, gy100 / dn, gy001 / dn};
}

CondCdfDerivs ConditionalSlice::cond_cdf_y(double y) const {
    const RawMoments m = raw_moments(y);
    CondCdfDerivs out;
    out.F = m.gy000 / fxw_;
    out.dF_dy = m.g000 / fxw_;
    out.dF_dw = m.gy100 / fxw_ - m.gy000 * fxw_dw_ / (fxw_ * fxw_);
    out.dF_dx = m.gy001 / fxw_ - m.gy000 * fxw_dx_ / (fxw_ * fxw_);
    return out;
}

MarginalCdfDerivs ConditionalSlice::marginal_cdf_x() const {
    MarginalCdfDerivs out;
    out.F = gx000_ / fw_;
    out.dF_dx = fxw_ / fw_;
    out.dF_dw = gx100_ / fw_ - gx000_ * fw_dw_ / (fw_ * fw_);
    return out;
}

ConditionalSlice::CdfCurve ConditionalSlice::cdf_curve() const {
    const Sample& s = *smp_;
    const auto [lo_it, hi_it] = std::minmax_element(s.y.begin(), s.y.end());
    const double ylo = *lo_it - 5.0 * bw_.h21;
    const double yhi = *hi_it + 5.0 * bw_.h21;
    const int ng = quantile_grid_;
    CdfCurve curve;
    curve.y.resize(ng);
    std::vector<double> raw(ng);
    const std::size_t n = s.size();
    for (int i = 0; i < ng; ++i) {
        const double y = ylo + (yhi - ylo) * i / (ng - 1);
        curve.y[i] = y;
        double acc = 0;
        for (std::size_t j = 0; j < n; ++j)
            acc += flattop_k_cdf((y - s.y[j]) / bw_.h21) * kx_[j] * w_.s0[j];
        raw[i] = acc / (static_cast<double>(n) * fxw_);
    }
    curve.F = isotonic_regression(std::move(raw));
    return curve;
}

ConditionalSlice::CdfCurve ConditionalSlice::cdf_curve(const std::vector<double>& ygrid,
                                                       const std::vector<double>& cy) const {
    const std::size_t n = smp_->size();
    const std::size_t ng = ygrid.size();
    if (cy.size() != ng * n)
        throw InvalidParameter("integrated-kernel matrix does not match ygrid x sample");
    CdfCurve curve;
    curve.y = ygrid;
    std::vector<double> raw(ng);
    for (std::size_t i = 0; i < ng; ++i) {
        const double* row = cy.data() + i * n;
        double acc = 0;
        for (std::size_t j = 0; j < n; ++j) acc += row[j] * kx_[j] * w_.s0[j];
        raw[i] = acc / (static_cast<double>(n) * fxw_);
    }
    curve.F = isotonic_regression(std::move(raw));
    return curve;
}

double ConditionalSlice::quantile(double delta, const CdfCurve& curve) const {
    if (curve.y.size() < 2 || curve.F.size() != curve.y.size())
        throw InvalidParameter("CDF curve is empty or inconsistent");
    if (delta < curve.F.front() || delta > curve.F.back()) {
        std::ostringstream msg;
        msg << "quantile level " << delta << " is outside the fitted CDF range ["
            << curve.F.front() << ", " << curve.F.back() << "]";
        throw QuantileBracketFailure(msg.str());
    }
    const auto it = std::lower_bound(curve.F.begin(), curve.F.end(), delta);
    const std::size_t i = static_cast<std::size_t>(it - curve.F.begin());
    if (i == 0) return curve.y.front();
    const double f0 = curve.F[i - 1], f1 = curve.F[i];
    const double y0 = curve.y[i - 1], y1 = curve.y[i];
    return y0 + (delta - f0) * (y1 - y0) / (f1 - f0); // f1 > f0 since f0 < delta <= f1
}

QuantileDerivs ConditionalSlice::quantile_derivs(double delta, const CdfCurve& curve) const {
    const double q = quantile(delta, curve);
    const RawMoments m = raw_moments(q);
    const double dens = m.g000 / fxw_;
    if (std::fabs(dens) < tau_) throw_degenerate("conditional density at the quantile", dens, tau_);
    // Raw CDF level at q (not the requested delta): with it the implicit-
    // function identities dq/da = -(dF/da)/(dF/dy) hold to machine precision.
    const double delta_eff = m.gy000 / fxw_;
    QuantileDerivs out;
    out.q = q;
    out.dq_dw = (delta_eff * fxw_dw_ - m.gy100) / m.g000;
    out.dq_dx = (delta_eff * fxw_dx_ - m.gy001) / m.g000;
    return out;
}

CondCdfDerivs cond_cdf_y(double y, double x, double wstar, const EstimationContext& ctx) {
    return ConditionalSlice(ctx, x, wstar).cond_cdf_y(y);
}

MarginalCdfDerivs marginal_cdf_x(double x, double wstar, const EstimationContext& ctx) {
    return ConditionalSlice(ctx, x, wstar).marginal_cdf_x();
}

double cond_quantile(double delta, double x, double wstar, const EstimationContext& ctx) {
    const ConditionalSlice slice(ctx, x, wstar);
    return slice.quantile(delta, slice.cdf_curve());
}

QuantileDerivs cond_quantile_derivs(double delta, double x, double wstar,
                                    const EstimationContext& ctx) {
    const ConditionalSlice slice(ctx, x, wstar);
    return slice.quantile_derivs(delta, slice.cdf_curve());
}

} // namespace deconviv
