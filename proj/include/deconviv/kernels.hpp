#pragma once

namespace deconviv {

// Infinite-order flat-top kernel
//   K(u) = (cos(2 pi u) - cos(4 pi u)) / (2 pi^2 u^2),   K(0) = 3,
// with Fourier transform phi_k that is 1 on |s| <= 2 pi, linear down to 0 at
// |s| = 4 pi, and 0 beyond. Near u = 0 a 4th-order Taylor branch is used.
double flattop_k(double u);

// K'(u); odd, K'(0) = 0.
double flattop_k_deriv(double u);

// Integrated kernel int_{-inf}^{u} K, expressed through the sine integral;
// equals 1/2 at 0 and tends to 0 / 1 in the tails (non-monotone in between).
double flattop_k_cdf(double u);

// Fourier transform of K: 1 on [0, 2 pi], 2 - s/(2 pi) on (2 pi, 4 pi], 0 after.
double phi_k(double s);

// Unit-width rescaling K_w(u) = K(u / (4 pi)) / (4 pi) whose transform
// phi_kw is 1 on |s| <= 1/2, 2 (1 - |s|) on (1/2, 1], 0 beyond. This is the
// spectral window used on the deconvolved w* axis: its support [-1, 1] makes
// a grid reaching |t| = 1/h1 sufficient, keeping the empirical CF denominator
// away from its noise-dominated tail.
double flattop_kw(double u);
double phi_kw(double s);

// Self-convolution (K*K)(v); (K*K)(0) = 8/3. Used by least-squares CV.
double flattop_k_selfconv(double v);

// Sine integral Si(x) = int_0^x sin(t)/t dt.
double sine_integral(double x);

} // namespace deconviv
