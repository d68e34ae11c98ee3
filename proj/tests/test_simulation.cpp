#include <doctest.h>

#include <cmath>
#include <set>
#include <sstream>
#include <vector>

#include "deconviv/errors.hpp"
#include "deconviv/simulation.hpp"

using namespace deconviv;

TEST_CASE("random streams are deterministic and substreams are distinct") {
    RngStream a(42), b(42), c(43);
    for (int i = 0; i < 64; ++i) {
        const std::uint64_t va = a.next_u64();
        CHECK(va == b.next_u64());
    }
    bool differs = false;
    RngStream a2(42);
    for (int i = 0; i < 64; ++i) differs |= (a2.next_u64() != c.next_u64());
    CHECK(differs);

    RngStream s0 = RngStream::substream(12345, 0);
    RngStream s0b = RngStream::substream(12345, 0);
    RngStream s1 = RngStream::substream(12345, 1);
    std::set<std::uint64_t> firsts;
    for (std::uint64_t r = 0; r < 100; ++r)
        firsts.insert(RngStream::substream(12345, r).next_u64());
    CHECK(firsts.size() == 100); // no colliding substreams
    CHECK(s0.next_u64() == s0b.next_u64());
    CHECK(s0.next_u64() != s1.next_u64());
}

TEST_CASE("uniform draws live in the half-open unit interval") {
    RngStream rng(7);
    for (int i = 0; i < 10000; ++i) {
        const double u = rng.uniform01();
        CHECK(u > 0.0);
        CHECK(u <= 1.0);
    }
}

TEST_CASE("normal and centered chi-square moments") {
    RngStream rng(11);
    const int n = 200000;
    double m1 = 0, m2 = 0;
    for (int i = 0; i < n; ++i) {
        const double z = rng.normal(0.0, 1.0);
        m1 += z;
        m2 += z * z;
    }
    m1 /= n;
    m2 /= n;
    CHECK(std::fabs(m1) < 0.01);
    CHECK(std::fabs(m2 - 1.0) < 0.02);

    double c1 = 0, c2 = 0;
    for (int i = 0; i < n; ++i) {
        const double z = rng.chisq2_centered();
        c1 += z;
        c2 += z * z;
    }
    c1 /= n;
    c2 /= n;
    CHECK(std::fabs(c1) < 0.03);      // mean 0
    CHECK(std::fabs(c2 - 4.0) < 0.2); // variance 4
}

TEST_CASE("linear-Gaussian design observables tie to their latent parts") {
    RngStream rng(123);
    const SimData d = generate(Design::linear_gaussian, 20000, rng);
    REQUIRE(d.sample.size() == 20000);
    for (std::size_t i = 0; i < d.sample.size(); ++i) {
        CHECK(d.sample.y[i] == 0.25 * d.sample.x[i] + 0.25 * d.eps[i]);
        CHECK(d.sample.x[i] == d.wstar[i] + d.eta[i]);
    }
    double mw = 0, vw = 0, mw2 = 0;
    for (std::size_t i = 0; i < d.sample.size(); ++i) {
        mw += d.wstar[i];
        mw2 += d.sample.w2[i];
    }
    mw /= static_cast<double>(d.sample.size());
    mw2 /= static_cast<double>(d.sample.size());
    for (double w : d.wstar) vw += (w - mw) * (w - mw);
    vw /= static_cast<double>(d.wstar.size());
    CHECK(std::fabs(mw) < 0.02);       // W* ~ N(0, 1/2)
    CHECK(std::fabs(vw - 0.5) < 0.03);
    CHECK(std::fabs(mw2) < 0.06);      // centered chi-square noise keeps the mean
    CHECK(d.redraws == 0);
}

TEST_CASE("nonlinear design satisfies its domain constraints") {
    RngStream rng(321);
    const SimData d = generate(Design::nonlinear_quartic, 3000, rng);
    for (std::size_t i = 0; i < d.sample.size(); ++i) {
        CHECK(d.eta[i] < 0.0);
        CHECK(d.sample.x[i] > 0.0);
        CHECK(std::isfinite(d.sample.y[i]));
        CHECK(d.sample.y[i] > 0.0); // softplus is positive
        const double me = -d.eta[i];
        const double w2 = d.wstar[i] * d.wstar[i];
        CHECK(d.sample.x[i] == (27.0 / 256.0) * w2 * w2 / (me * me * me));
        const double z = d.sample.x[i] + d.eps[i];
        const double y = z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
        CHECK(d.sample.y[i] == y);
    }
    CHECK(d.redraws >= 0);
    CHECK_THROWS_AS(generate(Design::linear_gaussian, 1, rng), EmptySample);
}

TEST_CASE("true structural derivative") {
    CHECK(truth_rho(Design::linear_gaussian, -1.3) == 0.25);
    CHECK(truth_rho(Design::linear_gaussian, 0.8) == 0.25);
    CHECK(truth_rho(Design::nonlinear_quartic, 0.6) ==
          doctest::Approx(0.451188363905973).epsilon(1e-12));
    CHECK(truth_rho(Design::nonlinear_quartic, 0.0) == 0.0);
}

TEST_CASE("true windowed response by quadrature") {
    CHECK(truth_wlar(Design::linear_gaussian, 0.0, WeightSpec{}) == 0.25);
    WeightSpec win{0.25, 0.35, 6.0, 6.23, 11, 11};
    CHECK(truth_wlar(Design::nonlinear_quartic, 0.6, win) ==
          doctest::Approx(0.503234470959146).epsilon(1e-9));
    WeightSpec point{0.3, 0.3, 6.1, 6.1, 1, 1};
    CHECK(truth_wlar(Design::nonlinear_quartic, 0.6, point) ==
          doctest::Approx(0.506021650664901).epsilon(1e-9));
    CHECK_THROWS_AS(truth_wlar(Design::nonlinear_quartic, -0.6, win), InvalidParameter);
    CHECK_THROWS_AS(truth_wlar(Design::nonlinear_quartic, 0.0, win), InvalidParameter);
}

TEST_CASE("linear IV slope") {
    Sample s;
    s.x = {1.0, 2.0, 3.0, 4.0};
    s.w2 = {4.0, 3.0, 2.0, 1.0};
    s.w1 = {0.0, 0.0, 0.0, 0.0};
    for (double x : s.x) s.y.push_back(0.25 * x);
    CHECK(tsls_slope(s) == 0.25); // exact: every product is a small dyadic

    Sample z;
    z.x = {1.0, -1.0};
    z.w2 = {1.0, 1.0};
    z.w1 = {0.0, 0.0};
    z.y = {1.0, 1.0};
    CHECK_THROWS_AS(tsls_slope(z), ZeroCovariance);
}

TEST_CASE("estimator names round trip") {
    for (Estimator e : {Estimator::deconv_rho, Estimator::naive_rho, Estimator::tsls,
                        Estimator::deconv_wlar})
        CHECK(estimator_from_name(estimator_name(e)) == e);
    CHECK_THROWS_AS(estimator_from_name("ols"), InvalidParameter);
}

TEST_CASE("replication study bookkeeping") {
    MCConfig cfg;
    cfg.n = 200;
    cfg.reps = 20;
    cfg.grid_m = 256;
    cfg.threads = 2;
    const MCReport rep = run_mc(cfg);
    CHECK(rep.failures == 0);
    REQUIRE(rep.estimates.size() == 20);
    CHECK(rep.truth == 0.25);

    // mse = var + bias^2, and all three recompute from the kept estimates
    double mean = 0;
    for (double v : rep.estimates) mean += v;
    mean /= static_cast<double>(rep.estimates.size());
    double mse = 0, var = 0;
    for (double v : rep.estimates) {
        mse += (v - rep.truth) * (v - rep.truth);
        var += (v - mean) * (v - mean);
    }
    mse /= static_cast<double>(rep.estimates.size());
    var /= static_cast<double>(rep.estimates.size());
    CHECK(rep.mse == doctest::Approx(mse).epsilon(1e-12));
    CHECK(rep.var == doctest::Approx(var).epsilon(1e-12));
    CHECK(rep.abs_bias == doctest::Approx(std::fabs(mean - rep.truth)).epsilon(1e-12));
    CHECK(rep.mse == doctest::Approx(rep.var + rep.abs_bias * rep.abs_bias).epsilon(1e-12));

    // csv row matches the advertised header
    CHECK(MCReport::csv_header() ==
          "design,estimator,h1,h21,h22,n,reps,truth,mse,var,abs_bias,failures,seed");
    std::stringstream row(rep.csv_row());
    std::string field;
    int fields = 0;
    while (std::getline(row, field, ',')) ++fields;
    CHECK(fields == 13);
}

TEST_CASE("replication results do not depend on the thread count") {
    MCConfig cfg;
    cfg.n = 150;
    cfg.reps = 12;
    cfg.grid_m = 128;
    cfg.threads = 1;
    const MCReport one = run_mc(cfg);
    cfg.threads = 4;
    const MCReport four = run_mc(cfg);
    REQUIRE(one.estimates.size() == four.estimates.size());
    for (std::size_t i = 0; i < one.estimates.size(); ++i)
        CHECK(one.estimates[i] == four.estimates[i]);
    CHECK(one.mse == four.mse);
    CHECK(one.var == four.var);
    CHECK(one.abs_bias == four.abs_bias);
}

TEST_CASE("over-tight denominator guard aborts the study") {
    MCConfig cfg;
    cfg.n = 200;
    cfg.reps = 10;
    cfg.grid_m = 256;
    cfg.eps_denom = 0.5; // population min |phi_W2| on [-1,1] is ~0.35
    CHECK_THROWS_AS(run_mc(cfg), TooManyFailures);

    cfg.max_failure_frac = 1.0; // same failures, now tolerated and disclosed
    const MCReport rep = run_mc(cfg);
    CHECK(rep.failures == 10);
    CHECK(rep.estimates.empty());
    REQUIRE(rep.failure_notes.size() == 10);
    CHECK(rep.failure_notes.front().find("rep 0:") != std::string::npos);
}

TEST_CASE("config validation") {
    MCConfig cfg;
    cfg.reps = 0;
    CHECK_THROWS_AS(run_mc(cfg), InvalidParameter);
    cfg = MCConfig{};
    cfg.n = 1;
    CHECK_THROWS_AS(run_mc(cfg), EmptySample);
    cfg = MCConfig{};
    cfg.max_failure_frac = 1.5;
    CHECK_THROWS_AS(run_mc(cfg), InvalidParameter);
    cfg = MCConfig{};
    cfg.threads = -1;
    CHECK_THROWS_AS(run_mc(cfg), InvalidParameter);
}

TEST_CASE("cross-validation scores and selection") {
    RngStream rng(17);
    const SimData d = generate(Design::linear_gaussian, 150, rng);
    const Sample& s = d.sample;

    const std::vector<double> g21{0.5, 0.8, 1.2};
    const std::vector<double> g22{1.0, 2.0};
    const CrossvalResult cv = crossval_bandwidths(s, g21, g22);
    // brute force over the same grid with the same tie rule
    double best = std::numeric_limits<double>::infinity();
    double b21 = 0, b22 = 0;
    for (double h21 : {1.2, 0.8, 0.5}) {   // descending
        for (double h22 : {2.0, 1.0}) {
            const double sc = lscv_score(s, h21, h22);
            if (sc < best) {
                best = sc;
                b21 = h21;
                b22 = h22;
            }
        }
    }
    CHECK(cv.h21 == b21);
    CHECK(cv.h22 == b22);
    CHECK(cv.score == doctest::Approx(best).epsilon(1e-12));

    // doubling the data and the grids doubles the pick and quarters the score
    Sample s2 = s;
    for (auto& v : s2.y) v *= 2.0;
    for (auto& v : s2.x) v *= 2.0;
    std::vector<double> g21x2, g22x2;
    for (double h : g21) g21x2.push_back(2.0 * h);
    for (double h : g22) g22x2.push_back(2.0 * h);
    const CrossvalResult cv2 = crossval_bandwidths(s2, g21x2, g22x2);
    CHECK(cv2.h21 == 2.0 * cv.h21);
    CHECK(cv2.h22 == 2.0 * cv.h22);
    CHECK(cv2.score == 0.25 * cv.score); // exact: kernel arguments are unchanged

    CHECK_THROWS_AS(crossval_bandwidths(s, {}, g22), EmptyCandidateGrid);
    CHECK_THROWS_AS(crossval_bandwidths(s, g21, {}), EmptyCandidateGrid);
    const std::vector<double> bad{-1.0};
    CHECK_THROWS_AS(crossval_bandwidths(s, bad, g22), InvalidParameter);
    CHECK_THROWS_AS(lscv_score(s, -1.0, 1.0), InvalidParameter);

    const auto def = default_bandwidth_grid(2.0);
    REQUIRE(def.size() == 9);
    CHECK(def.front() == 0.5);
    CHECK(def.back() == 8.0);
    CHECK_THROWS_AS(default_bandwidth_grid(0.0), InvalidParameter);
}
