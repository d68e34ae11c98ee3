#include "deconviv/charfn.hpp"

#include <cmath>
#include <complex>
#include <sstream>

#include "deconviv/errors.hpp"

namespace deconviv {

FrequencyGrid::FrequencyGrid(double t_max_, int m_) : t_max(t_max_), m(m_) {
    if (!(t_max_ > 0.0) || m_ < 1)
        throw InvalidParameter("frequency grid needs t_max > 0 and m >= 1");
    t.resize(2 * static_cast<std::size_t>(m_) + 1);
    const double dt_ = t_max_ / m_;
    for (int k = 0; k <= 2 * m_; ++k) t[k] = (k - m_) * dt_;
}

std::vector<std::complex<double>> ecf(const Sample& s, EcfWeight w, const FrequencyGrid& g) {
    validate(s);
    const std::size_t n = s.size();
    const int m = g.m;
    const double dt = g.dt();
    std::vector<std::complex<double>> half(m + 1, std::complex<double>(0.0, 0.0));
    for (std::size_t j = 0; j < n; ++j) {
        const double wj = (w == EcfWeight::w1) ? s.w1[j] : 1.0;
        const std::complex<double> rot = std::polar(1.0, dt * s.w2[j]);
        std::complex<double> z(1.0, 0.0);
        for (int k = 0; k <= m; ++k) {
            half[k] += wj * z;
            z *= rot;
        }
    }
    std::vector<std::complex<double>> out(g.size());
    for (int k = 0; k <= m; ++k) {
        const std::complex<double> v = half[k] / static_cast<double>(n);
        out[m + k] = v;
        out[m - k] = std::conj(v);
    }
    return out;
}

CharFnEstimates estimate_phi_wstar(const Sample& s, const FrequencyGrid& g, double eps_denom) {
    validate(s);
    if (!(eps_denom > 0.0)) throw InvalidParameter("eps_denom must be positive");
    const std::size_t n = s.size();
    const int m = g.m;
    const double dt = g.dt();

    // One fused pass over the data accumulates both half-grid sums.
    std::vector<std::complex<double>> ph(m + 1, std::complex<double>(0.0, 0.0));
    std::vector<std::complex<double>> th(m + 1, std::complex<double>(0.0, 0.0));
    for (std::size_t j = 0; j < n; ++j) {
        const std::complex<double> rot = std::polar(1.0, dt * s.w2[j]);
        const double w1j = s.w1[j];
        std::complex<double> z(1.0, 0.0);
        for (int k = 0; k <= m; ++k) {
            ph[k] += z;
            th[k] += w1j * z;
            z *= rot;
        }
    }
    const double dn = static_cast<double>(n);
    double min_abs = 1.0;
    double argmin_t = 0.0;
    for (int k = 0; k <= m; ++k) {
        ph[k] /= dn; // division keeps phi(0) == 1 exact
        th[k] /= dn;
        const double a = std::abs(ph[k]);
        if (a < min_abs) {
            min_abs = a;
            argmin_t = k * dt;
        }
    }
    if (min_abs < eps_denom) {
        std::ostringstream msg;
        msg << "min |phi_hat_W2| = " << min_abs << " at |t| = " << argmin_t
            << " is below eps_denom = " << eps_denom
            << " (frequency window too wide for this sample)";
        throw IllPosedDenominator(msg.str());
    }

    // Cumulative trapezoid of i * theta / phi_w2 over the nonnegative half grid.
    const std::complex<double> iu(0.0, 1.0);
    CharFnEstimates out;
    out.grid = g;
    out.eps_denom = eps_denom;
    out.min_abs_phi_w2 = min_abs;
    out.phi_w2.resize(g.size());
    out.phi_wstar.resize(g.size());
    std::complex<double> run(0.0, 0.0);
    std::complex<double> prev = iu * th[0] / ph[0];
    for (int k = 0; k <= m; ++k) {
        if (k > 0) {
            const std::complex<double> cur = iu * th[k] / ph[k];
            run += 0.5 * dt * (prev + cur);
            prev = cur;
        }
        const std::complex<double> pw = std::exp(run); // k = 0: exp(0) = 1 exactly
        out.phi_w2[m + k] = ph[k];
        out.phi_w2[m - k] = std::conj(ph[k]);
        out.phi_wstar[m + k] = pw;
        out.phi_wstar[m - k] = std::conj(pw);
    }
    return out;
}

} // namespace deconviv
