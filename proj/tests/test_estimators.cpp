#include <doctest.h>

#include <cmath>
#include <vector>

#include "deconviv/errors.hpp"
#include "deconviv/estimators.hpp"
#include "deconviv/simulation.hpp"

using namespace deconviv;

namespace {

struct Fixture {
    SimData sim;
    FrequencyGrid grid;
    CharFnEstimates cf;
    EstimationContext ctx;

    explicit Fixture(std::uint64_t seed = 2021, std::size_t n = 2000) {
        RngStream rng(seed);
        sim = generate(Design::linear_gaussian, n, rng);
        grid = FrequencyGrid(1.0, 512);
        cf = estimate_phi_wstar(sim.sample, grid);
        ctx.sample = &sim.sample;
        ctx.bw = BandwidthSet{1.0, 1.05, 2.92};
        ctx.cf = &cf;
    }
};

} // namespace

TEST_CASE("structural derivative reassembles from its reported parts") {
    const Fixture fx;
    const RhoEstimate r = structural_derivative(0.0, 0.0, 0.7, fx.ctx);
    const double rebuilt =
        -r.dF_dx / r.dF_dy + (r.dF_dw / r.dF_dy) * (r.mdF_dx / r.mdF_dw);
    CHECK(r.value == doctest::Approx(rebuilt).epsilon(1e-13));
    // the parts agree with the conditional-distribution layer
    const CondCdfDerivs c = cond_cdf_y(0.0, 0.0, 0.7, fx.ctx);
    const MarginalCdfDerivs m = marginal_cdf_x(0.0, 0.7, fx.ctx);
    CHECK(r.dF_dy == c.dF_dy);
    CHECK(r.dF_dx == c.dF_dx);
    CHECK(r.dF_dw == c.dF_dw);
    CHECK(r.mdF_dx == m.dF_dx);
    CHECK(r.mdF_dw == m.dF_dw);
}

TEST_CASE("linear-Gaussian design estimate lands near the constant truth") {
    const Fixture fx;
    const RhoEstimate r = structural_derivative(0.0, 0.0, 0.7, fx.ctx);
    CHECK(std::fabs(r.value - 0.25) < 0.2);
    CHECK(r.dF_dy > 0.0);
    CHECK(r.mdF_dw < 0.0); // F_{X|W*}(x | w*) falls as the instrument grows
}

TEST_CASE("averaging drops trimmed points and fails only when all trim") {
    const Fixture fx;
    const double a = structural_derivative(0.0, 0.0, 0.5, fx.ctx).value;
    const double b = structural_derivative(0.0, 0.0, 0.9, fx.ctx).value;
    const std::vector<double> ws{0.5, 0.9};
    CHECK(structural_derivative_averaged(0.0, 0.0, ws, fx.ctx) ==
          doctest::Approx(0.5 * (a + b)).epsilon(1e-15));

    // a far-out point is dropped, not fatal
    const std::vector<double> mixed{0.5, 50.0};
    CHECK(structural_derivative_averaged(0.0, 0.0, mixed, fx.ctx) ==
          doctest::Approx(a).epsilon(1e-15));

    const std::vector<double> far{50.0, 60.0};
    CHECK_THROWS_AS(structural_derivative_averaged(0.0, 0.0, far, fx.ctx), AllPointsTrimmed);
    CHECK_THROWS_AS(structural_derivative_averaged(0.0, 0.0, std::vector<double>{}, fx.ctx),
                    InvalidParameter);
}

TEST_CASE("naive context demands the wider frequency grid") {
    const Fixture fx;
    EstimationContext nctx = fx.ctx;
    nctx.naive = true;
    nctx.cf = nullptr;
    nctx.grid = &fx.grid; // t_max = 1 < 4 pi / h1
    CHECK_THROWS_AS(structural_derivative(0.0, 0.0, 0.7, nctx), GridTooCoarse);

    const FrequencyGrid wide(4.0 * 3.14159265358979323846 / nctx.bw.h1, 512);
    nctx.grid = &wide;
    const RhoEstimate r = structural_derivative(0.0, 0.0, 0.7, nctx);
    CHECK(std::isfinite(r.value));
}

TEST_CASE("window validation") {
    const Fixture fx(3, 200);
    auto call = [&](WeightSpec w) { return wlar(0.0, w, fx.ctx); };
    CHECK_THROWS_AS(call({0.0, 0.35, 0.7, 0.9, 11, 11}), InvalidParameter);  // delta_lo <= 0
    CHECK_THROWS_AS(call({0.25, 1.0, 0.7, 0.9, 11, 11}), InvalidParameter);  // delta_hi >= 1
    CHECK_THROWS_AS(call({0.5, 0.25, 0.7, 0.9, 11, 11}), InvalidParameter);  // reversed levels
    CHECK_THROWS_AS(call({0.25, 0.35, 0.9, 0.7, 11, 11}), InvalidParameter); // reversed w*
    CHECK_THROWS_AS(call({0.25, 0.35, 0.7, 0.9, 0, 11}), InvalidParameter);  // n_delta < 1
    CHECK_THROWS_AS(call({0.25, 0.35, 0.7, 0.9, 11, 0}), InvalidParameter);  // n_w < 1
    CHECK_THROWS_AS(call({0.3, 0.3, 0.7, 0.9, 11, 11}), InvalidParameter);   // flat level, many nodes
    CHECK_THROWS_AS(call({0.25, 0.35, 0.7, 0.7, 11, 11}), InvalidParameter); // flat w*, many nodes
    CHECK_THROWS_AS(call({0.25, 0.35, 0.7, 0.9, 1, 11}), InvalidParameter);  // wide level, one node
    EstimationContext empty;
    CHECK_THROWS_AS(wlar(0.0, WeightSpec{}, empty), InvalidParameter);
}

TEST_CASE("point-window response reduces to the quantile formula") {
    const Fixture fx;
    const WeightSpec w{0.3, 0.3, 0.7, 0.7, 1, 1};
    const double lar = wlar(0.0, w, fx.ctx);
    const QuantileDerivs qd = cond_quantile_derivs(0.3, 0.0, 0.7, fx.ctx);
    const MarginalCdfDerivs m = marginal_cdf_x(0.0, 0.7, fx.ctx);
    const double direct = qd.dq_dx - qd.dq_dw * (m.dF_dx / m.dF_dw);
    CHECK(lar == doctest::Approx(direct).epsilon(1e-13));
}

TEST_CASE("windowed response runs and lands near the constant truth") {
    const Fixture fx;
    const WeightSpec w{0.25, 0.35, 0.70, 0.90, 11, 11};
    const double lar = wlar(0.0, w, fx.ctx);
    CHECK(std::isfinite(lar));
    CHECK(std::fabs(lar - 0.25) < 0.2);
}
