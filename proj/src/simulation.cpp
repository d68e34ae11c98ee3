#include "deconviv/simulation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

#include "deconviv/csv.hpp"
#include "deconviv/errors.hpp"
#include "deconviv/kernels.hpp"
#include "deconviv/oracle.hpp"

namespace deconviv {

namespace {

constexpr double kTwoPi = 6.28318530717958647693;

inline std::uint64_t splitmix64(std::uint64_t& x) {
    std::uint64_t z = (x += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::uint64_t rotl64(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

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

RngStream::RngStream(std::uint64_t seed) {
    std::uint64_t x = seed;
    for (auto& si : s_) si = splitmix64(x);
    if (!(s_[0] | s_[1] | s_[2] | s_[3])) s_[0] = 0x9e3779b97f4a7c15ULL;
}

RngStream RngStream::substream(std::uint64_t master, std::uint64_t index) {
    std::uint64_t x = master;
    const std::uint64_t a = splitmix64(x);
    x ^= index * 0x9e3779b97f4a7c15ULL + 0xbf58476d1ce4e5b9ULL;
    const std::uint64_t b = splitmix64(x);
    return RngStream(a ^ rotl64(b, 31));
}

std::uint64_t RngStream::next_u64() {
    const std::uint64_t result = rotl64(s_[0] + s_[3], 23) + s_[0];
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl64(s_[3], 45);
    return result;
}

double RngStream::uniform01() {
    return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
}

double RngStream::normal(double mu, double sd) {
    if (have_spare_) {
        have_spare_ = false;
        return mu + sd * spare_;
    }
    const double u1 = uniform01();
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = kTwoPi * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return mu + sd * r * std::cos(a);
}

double RngStream::chisq2_centered() { return -2.0 * std::log(uniform01()) - 2.0; }

SimData generate(Design d, std::size_t n, RngStream& rng) {
    if (n < 2) throw EmptySample("simulated sample needs n >= 2");
    SimData out;
    out.sample.y.reserve(n);
    out.sample.x.reserve(n);
    out.sample.w1.reserve(n);
    out.sample.w2.reserve(n);
    out.wstar.reserve(n);
    out.eps.reserve(n);
    out.eta.reserve(n);
    const double s05 = std::sqrt(0.5);
    const double s075 = std::sqrt(0.75);
    for (std::size_t i = 0; i < n; ++i) {
        if (d == Design::linear_gaussian) {
            // scalar unobservable theta links eps = theta + e1 and eta = theta + n1
            const double th = rng.normal(0.0, 0.5);
            const double e1 = rng.normal(0.0, s075);
            const double n1 = rng.normal(0.0, 0.5);
            const double ws = rng.normal(0.0, s05);
            const double d1 = rng.normal(0.0, s05);
            const double d2 = rng.chisq2_centered();
            const double eps = th + e1;
            const double eta = th + n1;
            const double x = ws + eta;
            out.sample.y.push_back(0.25 * x + 0.25 * eps);
            out.sample.x.push_back(x);
            out.sample.w1.push_back(ws + d1);
            out.sample.w2.push_back(ws + d2);
            out.wstar.push_back(ws);
            out.eps.push_back(eps);
            out.eta.push_back(eta);
        } else {
            double th = rng.normal(-3.0, s05);
            const double e1 = rng.normal(3.0, s05);
            double n1 = rng.normal(-3.0, s05);
            while (th + n1 >= 0.0) { // eta must stay negative; essentially never triggers
                ++out.redraws;
                th = rng.normal(-3.0, s05);
                n1 = rng.normal(-3.0, s05);
            }
            const double ws = rng.normal(6.0, 1.0);
            const double d1 = rng.normal(0.0, s05);
            const double d2 = rng.chisq2_centered();
            const double eps = th + e1;
            const double eta = th + n1;
            const double me = -eta;
            const double ws2 = ws * ws;
            const double x = (27.0 / 256.0) * ws2 * ws2 / (me * me * me);
            const double z = x + eps;
            // softplus in its overflow-safe form
            const double y = z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
            out.sample.y.push_back(y);
            out.sample.x.push_back(x);
            out.sample.w1.push_back(ws + d1);
            out.sample.w2.push_back(ws + d2);
            out.wstar.push_back(ws);
            out.eps.push_back(eps);
            out.eta.push_back(eta);
        }
    }
    return out;
}

double truth_rho(Design d, double y) {
    if (d == Design::linear_gaussian) return 0.25;
    return 1.0 - std::exp(-y); // d/dx softplus(x + eps) at y = softplus(x + eps)
}

double truth_wlar(Design d, double x, const WeightSpec& win) {
    if (d == Design::linear_gaussian) return 0.25; // integrand is constant
    if (!(x > 0.0)) throw InvalidParameter("design-2 truth needs x > 0");
    // Given X = x and W* = w the production equation pins eta at
    // etabar = -cbrt(27 w^4 / (256 x)), and eps | eta ~ N(0.5 (eta + 6), 0.75).
    // The delta-quantile response is logistic(x + eps_delta), weighted by
    //   f_{X,W*}(x, w) = phi(w; 6, 1) phi(etabar; -6, 1) |d etabar / dx|,
    // where |d etabar / dx| = |etabar| / (3 x).
    const int nw = (win.w_hi > win.w_lo) ? 2001 : 1;
    const int nd = (win.delta_hi > win.delta_lo) ? 2001 : 1;
    std::vector<double> wn, ww, dn, dw;
    trapezoid(win.w_lo, win.w_hi, nw, wn, ww);
    trapezoid(win.delta_lo, win.delta_hi, nd, dn, dw);
    const double sd_eps = std::sqrt(0.75);
    std::vector<double> zq(nd);
    for (int k = 0; k < nd; ++k) zq[k] = sd_eps * normal_quantile(dn[k]);
    double numer = 0.0, denom = 0.0;
    for (int i = 0; i < nw; ++i) {
        const double w = wn[i];
        const double w2 = w * w;
        const double etabar = -std::cbrt(27.0 * w2 * w2 / (256.0 * x));
        const double fxw = normal_pdf(w, 6.0, 1.0) * normal_pdf(etabar, -6.0, 1.0) *
                           std::fabs(etabar) / (3.0 * x);
        const double mu_eps = 0.5 * (etabar + 6.0);
        double inner = 0.0;
        for (int k = 0; k < nd; ++k)
            inner += dw[k] / (1.0 + std::exp(-(x + mu_eps + zq[k])));
        numer += ww[i] * inner * fxw;
        denom += ww[i] * fxw;
    }
    const double level_width = (nd == 1) ? 1.0 : (win.delta_hi - win.delta_lo);
    return numer / (level_width * denom);
}

double tsls_slope(const Sample& s) {
    validate(s);
    double num = 0.0, den = 0.0, scale = 0.0;
    for (std::size_t j = 0; j < s.size(); ++j) {
        num += s.y[j] * s.w2[j];
        den += s.x[j] * s.w2[j];
        scale += std::fabs(s.x[j] * s.w2[j]);
    }
    if (std::fabs(den) <= 1e-12 * std::max(1.0, scale))
        throw ZeroCovariance("sum of x * w2 is numerically zero");
    return num / den;
}

const char* estimator_name(Estimator e) {
    switch (e) {
    case Estimator::deconv_rho: return "deconv_rho";
    case Estimator::naive_rho: return "naive_rho";
    case Estimator::tsls: return "tsls";
    case Estimator::deconv_wlar: return "deconv_wlar";
    }
    return "unknown";
}

Estimator estimator_from_name(const std::string& name) {
    if (name == "deconv_rho") return Estimator::deconv_rho;
    if (name == "naive_rho") return Estimator::naive_rho;
    if (name == "tsls") return Estimator::tsls;
    if (name == "deconv_wlar") return Estimator::deconv_wlar;
    throw InvalidParameter("unknown estimator '" + name +
                           "' (expected deconv_rho, naive_rho, tsls, deconv_wlar)");
}

std::string MCReport::csv_header() {
    return "design,estimator,h1,h21,h22,n,reps,truth,mse,var,abs_bias,failures,seed";
}

std::string MCReport::csv_row() const {
    std::ostringstream row;
    row << design << ',' << estimator << ',' << format_g17(bw.h1) << ',' << format_g17(bw.h21)
        << ',' << format_g17(bw.h22) << ',' << n << ',' << reps << ',' << format_g17(truth)
        << ',' << format_g17(mse) << ',' << format_g17(var) << ',' << format_g17(abs_bias)
        << ',' << failures << ',' << seed;
    return row.str();
}

MCReport run_mc(const MCConfig& cfg) {
    if (cfg.reps < 1) throw InvalidParameter("reps must be >= 1");
    if (cfg.n < 2) throw EmptySample("n must be >= 2");
    if (cfg.grid_m < 2) throw InvalidParameter("grid_m must be >= 2");
    if (!(cfg.max_failure_frac >= 0.0 && cfg.max_failure_frac <= 1.0))
        throw InvalidParameter("max_failure_frac must lie in [0, 1]");
    if (cfg.threads < 0) throw InvalidParameter("threads must be >= 0");

    const bool needs_grid = cfg.estimator != Estimator::tsls;
    FrequencyGrid grid;
    if (needs_grid) {
        const double support = (cfg.estimator == Estimator::naive_rho) ? 2.0 * kTwoPi : 1.0;
        grid = FrequencyGrid(support / cfg.bw.h1, cfg.grid_m);
    }
    const double truth = (cfg.estimator == Estimator::deconv_wlar)
                             ? truth_wlar(cfg.design, cfg.x, cfg.window)
                             : truth_rho(cfg.design, cfg.y);

    const int reps = cfg.reps;
    std::vector<double> vals(reps, std::numeric_limits<double>::quiet_NaN());
    std::vector<std::string> notes(reps);
    std::atomic<int> cursor{0};
    std::exception_ptr fatal;
    std::mutex fatal_mu;

    auto worker = [&]() {
        try {
            for (;;) {
                const int r = cursor.fetch_add(1);
                if (r >= reps) return;
                RngStream rng = RngStream::substream(cfg.seed, static_cast<std::uint64_t>(r));
                try {
                    const SimData data = generate(cfg.design, cfg.n, rng);
                    double v = 0.0;
                    switch (cfg.estimator) {
                    case Estimator::tsls: v = tsls_slope(data.sample); break;
                    case Estimator::naive_rho: {
                        EstimationContext ctx;
                        ctx.sample = &data.sample;
                        ctx.bw = cfg.bw;
                        ctx.grid = &grid;
                        ctx.naive = true;
                        ctx.tau = cfg.tau;
                        ctx.quantile_grid = cfg.quantile_grid;
                        v = structural_derivative(cfg.y, cfg.x, cfg.wstar, ctx).value;
                        break;
                    }
                    case Estimator::deconv_rho:
                    case Estimator::deconv_wlar: {
                        const CharFnEstimates cf =
                            estimate_phi_wstar(data.sample, grid, cfg.eps_denom);
                        EstimationContext ctx;
                        ctx.sample = &data.sample;
                        ctx.bw = cfg.bw;
                        ctx.cf = &cf;
                        ctx.tau = cfg.tau;
                        ctx.quantile_grid = cfg.quantile_grid;
                        v = (cfg.estimator == Estimator::deconv_rho)
                                ? structural_derivative(cfg.y, cfg.x, cfg.wstar, ctx).value
                                : wlar(cfg.x, cfg.window, ctx);
                        break;
                    }
                    }
                    if (!std::isfinite(v)) throw EstimationError("estimate is not finite");
                    vals[r] = v;
                } catch (const Error& e) {
                    notes[r] = e.what();
                }
            }
        } catch (...) {
            std::lock_guard<std::mutex> lock(fatal_mu);
            if (!fatal) fatal = std::current_exception();
        }
    };

    unsigned hw = std::thread::hardware_concurrency();
    if (hw == 0) hw = 1;
    const int nthreads = std::min<int>(cfg.threads > 0 ? cfg.threads : static_cast<int>(hw), reps);
    if (nthreads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(nthreads);
        for (int i = 0; i < nthreads; ++i) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    if (fatal) std::rethrow_exception(fatal);

    MCReport rep;
    rep.design = static_cast<int>(cfg.design);
    rep.estimator = estimator_name(cfg.estimator);
    rep.bw = cfg.bw;
    rep.n = cfg.n;
    rep.reps = reps;
    rep.truth = truth;
    rep.seed = cfg.seed;
    for (int r = 0; r < reps; ++r) {
        if (std::isnan(vals[r])) {
            ++rep.failures;
            rep.failure_notes.push_back("rep " + std::to_string(r) + ": " + notes[r]);
        } else {
            rep.estimates.push_back(vals[r]);
        }
    }
    if (static_cast<double>(rep.failures) > cfg.max_failure_frac * reps) {
        std::ostringstream msg;
        msg << rep.failures << " of " << reps << " replications failed (allowed fraction "
            << cfg.max_failure_frac << ")";
        if (!rep.failure_notes.empty()) msg << "; first: " << rep.failure_notes.front();
        throw TooManyFailures(msg.str());
    }
    const std::size_t k = rep.estimates.size();
    double mean = 0.0;
    for (double v : rep.estimates) mean += v;
    mean /= static_cast<double>(k);
    double mse = 0.0, var = 0.0;
    for (double v : rep.estimates) {
        mse += (v - truth) * (v - truth);
        var += (v - mean) * (v - mean);
    }
    rep.mse = mse / static_cast<double>(k);
    rep.var = var / static_cast<double>(k);
    rep.abs_bias = std::fabs(mean - truth);
    return rep;
}

double lscv_score(const Sample& s, double h21, double h22) {
    validate(s);
    if (!(h21 > 0.0) || !(h22 > 0.0)) throw InvalidParameter("bandwidths must be positive");
    const std::size_t n = s.size();
    const double kb0 = flattop_k_selfconv(0.0);
    double acc1 = static_cast<double>(n) * kb0 * kb0; // i == j diagonal
    double acc2 = 0.0;
    for (std::size_t i = 0; i + 1 < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double dy = (s.y[i] - s.y[j]) / h21;
            const double dx = (s.x[i] - s.x[j]) / h22;
            acc1 += 2.0 * flattop_k_selfconv(dy) * flattop_k_selfconv(dx);
            acc2 += 2.0 * flattop_k(dy) * flattop_k(dx);
        }
    }
    const double dn = static_cast<double>(n);
    return acc1 / (dn * dn * h21 * h22) - 2.0 * acc2 / (dn * (dn - 1.0) * h21 * h22);
}

CrossvalResult crossval_bandwidths(const Sample& s, std::span<const double> h21_grid,
                                   std::span<const double> h22_grid) {
    validate(s);
    if (h21_grid.empty() || h22_grid.empty())
        throw EmptyCandidateGrid("bandwidth candidate grids must be nonempty");
    for (double h : h21_grid)
        if (!(h > 0.0) || !std::isfinite(h)) throw InvalidParameter("h21 candidates must be positive");
    for (double h : h22_grid)
        if (!(h > 0.0) || !std::isfinite(h)) throw InvalidParameter("h22 candidates must be positive");

    // Descending order makes exact score ties resolve toward larger bandwidths.
    std::vector<double> ga(h21_grid.begin(), h21_grid.end());
    std::vector<double> gb(h22_grid.begin(), h22_grid.end());
    std::sort(ga.rbegin(), ga.rend());
    std::sort(gb.rbegin(), gb.rend());
    const std::size_t a = ga.size(), b = gb.size();

    const std::size_t n = s.size();
    std::vector<double> acc1(a * b, 0.0), acc2(a * b, 0.0);
    std::vector<double> kby(a), ky(a), kbx(b), kx(b);
    for (std::size_t i = 0; i + 1 < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double dy = s.y[i] - s.y[j];
            const double dx = s.x[i] - s.x[j];
            for (std::size_t p = 0; p < a; ++p) {
                const double u = dy / ga[p];
                kby[p] = flattop_k_selfconv(u);
                ky[p] = flattop_k(u);
            }
            for (std::size_t q = 0; q < b; ++q) {
                const double u = dx / gb[q];
                kbx[q] = flattop_k_selfconv(u);
                kx[q] = flattop_k(u);
            }
            for (std::size_t p = 0; p < a; ++p)
                for (std::size_t q = 0; q < b; ++q) {
                    acc1[p * b + q] += kby[p] * kbx[q];
                    acc2[p * b + q] += ky[p] * kx[q];
                }
        }
    }
    const double dn = static_cast<double>(n);
    const double kb0 = flattop_k_selfconv(0.0);
    CrossvalResult best{0.0, 0.0, std::numeric_limits<double>::infinity()};
    for (std::size_t p = 0; p < a; ++p) {
        for (std::size_t q = 0; q < b; ++q) {
            const double score =
                (dn * kb0 * kb0 + 2.0 * acc1[p * b + q]) / (dn * dn * ga[p] * gb[q]) -
                4.0 * acc2[p * b + q] / (dn * (dn - 1.0) * ga[p] * gb[q]);
            if (score < best.score) best = {ga[p], gb[q], score};
        }
    }
    return best;
}

std::vector<double> default_bandwidth_grid(double sd) {
    if (!(sd > 0.0) || !std::isfinite(sd))
        throw InvalidParameter("default bandwidth grid needs a positive sd");
    const double base[] = {0.25, 0.35, 0.5, 0.7, 1.0, 1.4, 2.0, 2.8, 4.0};
    std::vector<double> out;
    out.reserve(std::size(base));
    for (double c : base) out.push_back(c * sd);
    return out;
}

} // namespace deconviv
