#pragma once
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "deconviv/estimators.hpp"
#include "deconviv/sample.hpp"

namespace deconviv {

// Deterministic, platform-independent stream: xoshiro256++ seeded through a
// splitmix64 expansion, so (seed, replication index) -> identical draws on
// every machine and thread layout.
class RngStream {
  public:
    explicit RngStream(std::uint64_t seed);
    static RngStream substream(std::uint64_t master, std::uint64_t index);
    std::uint64_t next_u64();
    double uniform01();                  // in (0, 1]
    double normal(double mu, double sd); // Box-Muller, spare value cached
    double chisq2_centered();            // chi^2(2) - 2 == -2 ln U - 2
  private:
    std::uint64_t s_[4];
    bool have_spare_ = false;
    double spare_ = 0.0;
};

enum class Design { linear_gaussian = 1, nonlinear_quartic = 2 };

// One synthetic draw: the observed sample plus the latent variables that
// produced it (handy for diagnostics and truth checks).
struct SimData {
    Sample sample;
    std::vector<double> wstar, eps, eta;
    long redraws = 0; // design-2 rejection count for the eta < 0 domain constraint
};
SimData generate(Design, std::size_t n, RngStream&);

// True structural derivative: 0.25 for design 1; 1 - exp(-y) for design 2.
double truth_rho(Design, double y);

// True weighted local average response over the window. Design 1's integrand
// is identically 0.25. Design 2 is computed by quadrature of the closed-form
// conditional laws of (eps, eta).
double truth_wlar(Design, double x, const WeightSpec&);

// Uncentered linear IV slope sum(y * w2) / sum(x * w2).
double tsls_slope(const Sample&);

enum class Estimator { deconv_rho, naive_rho, tsls, deconv_wlar };
const char* estimator_name(Estimator);
Estimator estimator_from_name(const std::string&);

struct MCConfig {
    Design design = Design::linear_gaussian;
    Estimator estimator = Estimator::deconv_rho;
    std::size_t n = 500;
    int reps = 200;
    BandwidthSet bw{1.0, 1.05, 2.92};
    double y = 0.0, x = 0.0, wstar = 0.7; // rho query point
    WeightSpec window{};                  // wlar window (x above is its anchor)
    std::uint64_t seed = 12345;
    int grid_m = 512;
    double eps_denom = 1e-3;
    double tau = 1e-3;
    int quantile_grid = 256;
    int threads = 0; // 0 = hardware concurrency
    double max_failure_frac = 0.10;
};

struct MCReport {
    int design = 1;
    std::string estimator;
    BandwidthSet bw{};
    std::size_t n = 0;
    int reps = 0;
    double truth = 0, mse = 0, var = 0, abs_bias = 0;
    int failures = 0;
    std::uint64_t seed = 0;
    std::vector<double> estimates;          // successful replications, in rep order
    std::vector<std::string> failure_notes; // "rep <r>: <reason>"

    static std::string csv_header(); // design,estimator,h1,h21,h22,n,reps,truth,mse,var,abs_bias,failures,seed
    std::string csv_row() const;
};

// Runs the replication study; failed replications are dropped from the
// statistics and disclosed in the report. Throws TooManyFailures when more
// than max_failure_frac of the replications fail.
MCReport run_mc(const MCConfig&);

// Least-squares cross-validation score for the (Y, X) product kernel.
double lscv_score(const Sample&, double h21, double h22);

struct CrossvalResult {
    double h21, h22, score;
};
// Grid minimizer of lscv_score; exact ties resolve toward larger bandwidths.
CrossvalResult crossval_bandwidths(const Sample&, std::span<const double> h21_grid,
                                   std::span<const double> h22_grid);
// {0.25, 0.35, 0.5, 0.7, 1.0, 1.4, 2.0, 2.8, 4.0} scaled by sd.
std::vector<double> default_bandwidth_grid(double sd);

} // namespace deconviv
