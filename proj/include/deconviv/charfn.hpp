#pragma once
#include <complex>
#include <vector>

#include "deconviv/sample.hpp"

namespace deconviv {

// Symmetric frequency grid: 2m+1 equally spaced points on [-t_max, t_max],
// with t[m] == 0 exactly. Spacing dt = t_max / m.
struct FrequencyGrid {
    double t_max = 0.0;
    int m = 0;
    std::vector<double> t;

    FrequencyGrid() = default;
    FrequencyGrid(double t_max_, int m_);
    double dt() const { return m ? t_max / m : 0.0; }
    std::size_t size() const { return t.size(); }
};

enum class EcfWeight { unit, w1 };

// Empirical characteristic function of W2 on the grid:
//   unit: (1/n) sum_j exp(i t W2_j)      w1: (1/n) sum_j W1_j exp(i t W2_j)
// Computed on the nonnegative half by incremental phase rotation and extended
// by conjugate symmetry, so phi(0) = 1 exactly for the unit weight and
// phi(-t) == conj(phi(t)) holds bitwise.
std::vector<std::complex<double>> ecf(const Sample&, EcfWeight, const FrequencyGrid&);

struct CharFnEstimates {
    FrequencyGrid grid;
    std::vector<std::complex<double>> phi_w2;    // empirical CF of W2
    std::vector<std::complex<double>> phi_wstar; // recovered CF of the latent W*
    double min_abs_phi_w2 = 0.0;                 // minimum modulus over the grid
    double eps_denom = 0.0;                      // guard threshold that was applied
};

// Recovers the instrument CF from the two measurements:
//   phi_wstar(t) = exp( int_0^t i * E[W1 e^{i s W2}] / E[e^{i s W2}] ds ),
// the inner integral taken by cumulative trapezoid over the nonnegative half
// grid and extended by conjugate symmetry (phi_wstar(0) = 1 exactly).
// Throws IllPosedDenominator when min |phi_w2| < eps_denom on the grid.
CharFnEstimates estimate_phi_wstar(const Sample&, const FrequencyGrid&, double eps_denom = 1e-3);

} // namespace deconviv
