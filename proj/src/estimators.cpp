#include "deconviv/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

#include "deconviv/errors.hpp"
#include "deconviv/kernels.hpp"

namespace deconviv {

namespace {

[[noreturn]] void throw_degenerate(const char* what, double value, double tau) {
    std::ostringstream msg;
    msg << what << " = " << value << " is below the trimming threshold tau = " << tau;
    throw DegenerateDenominator(msg.str());
}

void check_window(const WeightSpec& w) {
    if (!(w.delta_lo > 0.0) || !(w.delta_hi < 1.0) || !(w.delta_lo <= w.delta_hi))
        throw InvalidParameter("quantile window needs 0 < delta_lo <= delta_hi < 1");
    if (!(w.w_lo <= w.w_hi)) throw InvalidParameter("w* window needs w_lo <= w_hi");
    if (w.n_delta < 1 || w.n_w < 1) throw InvalidParameter("window needs n_delta, n_w >= 1");
    if ((w.delta_lo < w.delta_hi) != (w.n_delta > 1))
        throw InvalidParameter("a positive-width quantile window needs n_delta >= 2 "
                               "and a point window needs n_delta == 1");
    if ((w.w_lo < w.w_hi) != (w.n_w > 1))
        throw InvalidParameter("a positive-width w* window needs n_w >= 2 "
                               "and a point window needs n_w == 1");
}

// Trapezoid nodes and weights; a single node gets weight 1 (point evaluation).
void trapezoid(double lo, double hi, int n, std::vector<double>& nodes,
               std::vector<double>& weights) {
    nodes.resize(n);
    weights.resize(n);
    if (n == 1) {
        nodes[0] = lo;
        weights[0] = 1.0;
        return;
    }
    const double step = (hi - lo) / (n - 1);
    for (int i = 0; i < n; ++i) {
        nodes[i] = lo + step * i;
        weights[i] = (i == 0 || i == n - 1) ? 0.5 * step : step;
    }
}

} // namespace

RhoEstimate structural_derivative(double y, double x, double wstar,
                                  const EstimationContext& ctx) {
    const ConditionalSlice slice(ctx, x, wstar);
    const CondCdfDerivs c = slice.cond_cdf_y(y);
    const MarginalCdfDerivs m = slice.marginal_cdf_x();
    if (std::fabs(c.dF_dy) < ctx.tau)
        throw_degenerate("conditional density of Y at the query", c.dF_dy, ctx.tau);
    if (std::fabs(m.dF_dw) < ctx.tau)
        throw_degenerate("marginal-CDF w* slope", m.dF_dw, ctx.tau);
    RhoEstimate out;
    out.dF_dy = c.dF_dy;
    out.dF_dx = c.dF_dx;
    out.dF_dw = c.dF_dw;
    out.mdF_dx = m.dF_dx;
    out.mdF_dw = m.dF_dw;
    out.value = -c.dF_dx / c.dF_dy + (c.dF_dw / c.dF_dy) * (m.dF_dx / m.dF_dw);
    return out;
}

double structural_derivative_averaged(double y, double x, std::span<const double> wstars,
                                      const EstimationContext& ctx) {
    if (wstars.empty()) throw InvalidParameter("averaged estimate needs at least one w* value");
    double acc = 0.0;
    std::size_t kept = 0;
    for (double w : wstars) {
        try {
            acc += structural_derivative(y, x, w, ctx).value;
            ++kept;
        } catch (const DegenerateDenominator&) {
            // trimmed point: drop it
        }
    }
    if (kept == 0)
        throw AllPointsTrimmed("all " + std::to_string(wstars.size()) +
                               " w* points were trimmed");
    return acc / static_cast<double>(kept);
}

double wlar(double x, const WeightSpec& window, const EstimationContext& ctx) {
    check_window(window);
    if (!ctx.sample) throw InvalidParameter("estimation context has no sample");
    std::vector<double> dnodes, dweights, wnodes, wweights;
    trapezoid(window.delta_lo, window.delta_hi, window.n_delta, dnodes, dweights);
    trapezoid(window.w_lo, window.w_hi, window.n_w, wnodes, wweights);

    // The integrated-kernel matrix over the quantile y-grid depends only on
    // (Y, h21), so build it once and share it across the w* slices.
    const Sample& s = *ctx.sample;
    const std::size_t n = s.size();
    const auto [lo_it, hi_it] = std::minmax_element(s.y.begin(), s.y.end());
    const double ylo = *lo_it - 5.0 * ctx.bw.h21;
    const double yhi = *hi_it + 5.0 * ctx.bw.h21;
    const int ng = ctx.quantile_grid;
    std::vector<double> ygrid(ng);
    std::vector<double> cy(static_cast<std::size_t>(ng) * n);
    for (int i = 0; i < ng; ++i) {
        ygrid[i] = ylo + (yhi - ylo) * i / (ng - 1);
        for (std::size_t j = 0; j < n; ++j)
            cy[static_cast<std::size_t>(i) * n + j] = flattop_k_cdf((ygrid[i] - s.y[j]) / ctx.bw.h21);
    }

    double numer = 0.0, denom = 0.0;
    for (int iw = 0; iw < window.n_w; ++iw) {
        const ConditionalSlice slice(ctx, x, wnodes[iw]);
        const MarginalCdfDerivs m = slice.marginal_cdf_x();
        if (std::fabs(m.dF_dw) < ctx.tau)
            throw_degenerate("marginal-CDF w* slope", m.dF_dw, ctx.tau);
        const double ratio = m.dF_dx / m.dF_dw;
        const auto curve = slice.cdf_curve(ygrid, cy);
        double inner = 0.0;
        for (int id = 0; id < window.n_delta; ++id) {
            const QuantileDerivs qd = slice.quantile_derivs(dnodes[id], curve);
            inner += dweights[id] * (qd.dq_dx - qd.dq_dw * ratio);
        }
        numer += wweights[iw] * inner * slice.fxw();
        denom += wweights[iw] * slice.fxw();
    }
    const double level_width = window.delta_hi - window.delta_lo;
    const double scale = (window.n_delta == 1) ? 1.0 : level_width;
    if (std::fabs(denom) < ctx.tau)
        throw_degenerate("integrated joint density over the w* window", denom, ctx.tau);
    return numer / (scale * denom);
}

} // namespace deconviv
