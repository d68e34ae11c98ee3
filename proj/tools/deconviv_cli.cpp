#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "deconviv/csv.hpp"
#include "deconviv/errors.hpp"
#include "deconviv/estimators.hpp"
#include "deconviv/oracle.hpp"
#include "deconviv/simulation.hpp"

namespace {

using namespace deconviv;

constexpr double kTwoPi = 6.28318530717958647693;

std::vector<double> parse_doubles(const std::string& text, std::size_t min_n, std::size_t max_n,
                                  const char* what) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string field;
    while (std::getline(ss, field, ',')) {
        try {
            std::size_t used = 0;
            out.push_back(std::stod(field, &used));
            while (used < field.size() && std::isspace(static_cast<unsigned char>(field[used])))
                ++used;
            if (used != field.size()) throw std::invalid_argument(field);
        } catch (const std::exception&) {
            throw InvalidParameter(std::string(what) + ": cannot parse '" + field + "' in '" +
                                   text + "'");
        }
    }
    if (out.size() < min_n || out.size() > max_n)
        throw InvalidParameter(std::string(what) + ": expected between " +
                               std::to_string(min_n) + " and " + std::to_string(max_n) +
                               " comma-separated numbers, got " + std::to_string(out.size()));
    return out;
}

double population_sd(const std::vector<double>& v) {
    double mean = 0.0;
    for (double z : v) mean += z;
    mean /= static_cast<double>(v.size());
    double var = 0.0;
    for (double z : v) var += (z - mean) * (z - mean);
    return std::sqrt(var / static_cast<double>(v.size()));
}

WeightSpec window_from_values(const std::vector<double>& v) {
    // layout: x, delta_lo, delta_hi, w_lo, w_hi [, n_delta, n_w]
    WeightSpec w;
    w.delta_lo = v[1];
    w.delta_hi = v[2];
    w.w_lo = v[3];
    w.w_hi = v[4];
    if (v.size() == 7) {
        w.n_delta = static_cast<int>(v[5]);
        w.n_w = static_cast<int>(v[6]);
    }
    return w;
}

struct OutputTarget {
    std::ofstream file;
    std::ostream* os = &std::cout;
    explicit OutputTarget(const std::string& path) {
        if (path != "-") {
            file.open(path);
            if (!file) throw InvalidParameter("cannot open output file '" + path + "'");
            os = &file;
        }
    }
    std::ostream& stream() { return *os; }
};

// ---------------------------------------------------------------- estimate

struct EstimateOpts {
    std::string input;
    std::string output = "-";
    std::string format = "csv";
    double h1 = 1.0;
    double h21 = 0.0, h22 = 0.0; // 0 = pick by cross-validation
    double eps_denom = 1e-3, tau = 1e-3;
    int m = 512, quantile_grid = 256;
    bool naive = false;
    std::vector<std::string> rho, rho_avg, wlar_specs;
};

void run_estimate(const EstimateOpts& o) {
    if (o.rho.empty() && o.rho_avg.empty() && o.wlar_specs.empty())
        throw InvalidParameter("nothing to do: pass at least one --rho, --rho-avg, or --wlar");
    if (o.format != "csv" && o.format != "json")
        throw InvalidParameter("--format must be csv or json");
    const Sample sample = read_sample_csv(o.input);

    BandwidthSet bw{o.h1, o.h21, o.h22};
    bool cv_used = false;
    if (!(bw.h21 > 0.0) || !(bw.h22 > 0.0)) {
        const auto g21 = default_bandwidth_grid(population_sd(sample.y));
        const auto g22 = default_bandwidth_grid(population_sd(sample.x));
        const CrossvalResult cv = crossval_bandwidths(sample, g21, g22);
        if (!(bw.h21 > 0.0)) bw.h21 = cv.h21;
        if (!(bw.h22 > 0.0)) bw.h22 = cv.h22;
        cv_used = true;
        std::cerr << "cross-validated bandwidths: h21 = " << format_g17(bw.h21)
                  << ", h22 = " << format_g17(bw.h22) << "\n";
    }

    const double support = o.naive ? 2.0 * kTwoPi : 1.0;
    const FrequencyGrid grid(support / bw.h1, o.m);
    CharFnEstimates cf;
    EstimationContext ctx;
    ctx.sample = &sample;
    ctx.bw = bw;
    ctx.naive = o.naive;
    ctx.tau = o.tau;
    ctx.quantile_grid = o.quantile_grid;
    if (o.naive) {
        ctx.grid = &grid;
    } else {
        cf = estimate_phi_wstar(sample, grid, o.eps_denom);
        ctx.cf = &cf;
    }

    nlohmann::json results = nlohmann::json::array();
    std::vector<std::string> csv_rows;
    auto blank = std::string();
    for (const std::string& spec : o.rho) {
        const auto v = parse_doubles(spec, 3, 3, "--rho");
        const RhoEstimate r = structural_derivative(v[0], v[1], v[2], ctx);
        csv_rows.push_back("rho," + format_g17(v[0]) + ',' + format_g17(v[1]) + ',' +
                           format_g17(v[2]) + ",,,,,,," + format_g17(r.value));
        results.push_back({{"kind", "rho"},
                           {"y", v[0]},
                           {"x", v[1]},
                           {"wstar", v[2]},
                           {"value", r.value}});
    }
    for (const std::string& spec : o.rho_avg) {
        const auto v = parse_doubles(spec, 4, 1024, "--rho-avg");
        const std::vector<double> ws(v.begin() + 2, v.end());
        const double value = structural_derivative_averaged(v[0], v[1], ws, ctx);
        csv_rows.push_back("rho_avg," + format_g17(v[0]) + ',' + format_g17(v[1]) +
                           ",,,,,,,," + format_g17(value));
        results.push_back({{"kind", "rho_avg"},
                           {"y", v[0]},
                           {"x", v[1]},
                           {"wstar_points", ws},
                           {"value", value}});
    }
    for (const std::string& spec : o.wlar_specs) {
        const auto v = parse_doubles(spec, 5, 7, "--wlar");
        if (v.size() == 6) throw InvalidParameter("--wlar takes 5 or 7 numbers");
        const WeightSpec w = window_from_values(v);
        const double value = wlar(v[0], w, ctx);
        csv_rows.push_back("wlar,," + format_g17(v[0]) + ",," + format_g17(w.delta_lo) + ',' +
                           format_g17(w.delta_hi) + ',' + format_g17(w.w_lo) + ',' +
                           format_g17(w.w_hi) + ',' + std::to_string(w.n_delta) + ',' +
                           std::to_string(w.n_w) + ',' + format_g17(value));
        results.push_back({{"kind", "wlar"},
                           {"x", v[0]},
                           {"delta_lo", w.delta_lo},
                           {"delta_hi", w.delta_hi},
                           {"w_lo", w.w_lo},
                           {"w_hi", w.w_hi},
                           {"n_delta", w.n_delta},
                           {"n_w", w.n_w},
                           {"value", value}});
    }
    (void)blank;

    OutputTarget out(o.output);
    if (o.format == "csv") {
        out.stream() << "kind,y,x,wstar,delta_lo,delta_hi,w_lo,w_hi,n_delta,n_w,value\n";
        for (const auto& row : csv_rows) out.stream() << row << "\n";
    } else {
        nlohmann::json doc;
        doc["bandwidths"] = {{"h1", bw.h1}, {"h21", bw.h21}, {"h22", bw.h22},
                             {"cross_validated", cv_used}};
        doc["naive"] = o.naive;
        doc["results"] = results;
        out.stream() << doc.dump(2) << "\n";
    }
}

// ---------------------------------------------------------------- simulate

struct SimulateOpts {
    int design = 1;
    std::string estimator = "deconv_rho";
    std::uint64_t n = 500;
    int reps = 200;
    std::uint64_t seed = 12345;
    std::vector<double> h1;
    double h21 = 1.05, h22 = 2.92;
    std::string point = "0,0,0.7";
    std::string window;
    int m = 512, threads = 0, quantile_grid = 256;
    double eps_denom = 1e-3, tau = 1e-3, max_failure_frac = 0.10;
    std::string output = "-";
    bool list_failures = false;
};

void run_simulate(const SimulateOpts& o) {
    if (o.design != 1 && o.design != 2) throw InvalidParameter("--design must be 1 or 2");
    MCConfig cfg;
    cfg.design = o.design == 1 ? Design::linear_gaussian : Design::nonlinear_quartic;
    cfg.estimator = estimator_from_name(o.estimator);
    cfg.n = o.n;
    cfg.reps = o.reps;
    cfg.seed = o.seed;
    cfg.grid_m = o.m;
    cfg.threads = o.threads;
    cfg.quantile_grid = o.quantile_grid;
    cfg.eps_denom = o.eps_denom;
    cfg.tau = o.tau;
    cfg.max_failure_frac = o.max_failure_frac;
    cfg.bw.h21 = o.h21;
    cfg.bw.h22 = o.h22;
    if (cfg.estimator == Estimator::deconv_wlar) {
        if (o.window.empty())
            throw InvalidParameter("--window x,dlo,dhi,wlo,whi[,nd,nw] is required for deconv_wlar");
        const auto v = parse_doubles(o.window, 5, 7, "--window");
        if (v.size() == 6) throw InvalidParameter("--window takes 5 or 7 numbers");
        cfg.x = v[0];
        cfg.window = window_from_values(v);
    } else {
        const auto v = parse_doubles(o.point, 3, 3, "--point");
        cfg.y = v[0];
        cfg.x = v[1];
        cfg.wstar = v[2];
    }
    std::vector<double> h1s = o.h1;
    if (h1s.empty()) h1s.push_back(1.0);

    OutputTarget out(o.output);
    out.stream() << MCReport::csv_header() << "\n";
    for (double h1 : h1s) {
        cfg.bw.h1 = h1;
        const MCReport rep = run_mc(cfg);
        out.stream() << rep.csv_row() << "\n";
        if (rep.failures > 0) {
            std::cerr << "h1 = " << h1 << ": " << rep.failures << " of " << rep.reps
                      << " replications failed and were excluded\n";
            if (o.list_failures)
                for (const auto& note : rep.failure_notes) std::cerr << "  " << note << "\n";
        }
    }
}

// ---------------------------------------------------------------- crossval

struct CrossvalOpts {
    std::string input;
    std::string h21_grid, h22_grid;
    std::string output = "-";
};

void run_crossval(const CrossvalOpts& o) {
    const Sample sample = read_sample_csv(o.input);
    std::vector<double> g21, g22;
    if (o.h21_grid.empty())
        g21 = default_bandwidth_grid(population_sd(sample.y));
    else
        g21 = parse_doubles(o.h21_grid, 1, 4096, "--h21-grid");
    if (o.h22_grid.empty())
        g22 = default_bandwidth_grid(population_sd(sample.x));
    else
        g22 = parse_doubles(o.h22_grid, 1, 4096, "--h22-grid");
    const CrossvalResult cv = crossval_bandwidths(sample, g21, g22);
    OutputTarget out(o.output);
    out.stream() << "h21,h22,score\n"
                 << format_g17(cv.h21) << ',' << format_g17(cv.h22) << ','
                 << format_g17(cv.score) << "\n";
}

// ---------------------------------------------------------------- oracle

struct OracleOpts {
    double design2_truth_y = std::numeric_limits<double>::quiet_NaN();
};

void run_oracle(const OracleOpts& o) {
    const double ys[] = {-0.6, -0.3, 0.0, 0.3, 0.6};
    const double xs[] = {-1.0, -0.5, 0.0, 0.5, 1.0};
    const double wsv[] = {-1.0, -0.5, 0.0, 0.5, 1.0};
    const double deltas[] = {0.1, 0.3, 0.5, 0.7, 0.9};
    double dev = 0.0;
    for (double y : ys)
        for (double x : xs)
            for (double w : wsv)
                dev = std::max(dev, std::fabs(oracle_structural_derivative(y, x, w) - 0.25));
    for (double d : deltas)
        for (double x : xs)
            for (double w : wsv)
                dev = std::max(dev,
                               std::fabs(oracle_structural_derivative_quantile(d, x, w) - 0.25));
    std::cout << "linear-Gaussian benchmark: structural derivative deviates from 0.25 by at most "
              << format_g17(dev) << " over the check grid (tolerance 1e-10)\n";
    if (!std::isnan(o.design2_truth_y))
        std::cout << "design-2 true structural derivative at y = " << o.design2_truth_y << ": "
                  << format_g17(truth_rho(Design::nonlinear_quartic, o.design2_truth_y)) << "\n";
    if (dev > 1e-10) throw EstimationError("benchmark identity violated");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"nonparametric structural-derivative estimation with a mismeasured instrument"};
    app.require_subcommand(1);
    app.set_config("--config", "", "read options from an INI file ([subcommand] sections)");

    EstimateOpts eo;
    auto* est = app.add_subcommand("estimate", "estimate from a y,x,w1,w2 CSV sample");
    est->add_option("--input", eo.input, "input CSV path")->required();
    est->add_option("--h1", eo.h1, "instrument-axis bandwidth")->required();
    est->add_option("--h21", eo.h21, "y-axis bandwidth (omit to cross-validate)");
    est->add_option("--h22", eo.h22, "x-axis bandwidth (omit to cross-validate)");
    est->add_option("--eps-denom", eo.eps_denom, "CF denominator guard threshold");
    est->add_option("--tau", eo.tau, "denominator trimming threshold");
    est->add_option("--m", eo.m, "frequency half-grid size (2m+1 points)");
    est->add_option("--quantile-grid", eo.quantile_grid, "y-grid size for CDF inversion");
    est->add_flag("--naive", eo.naive, "skip deconvolution (treat w2 as the instrument)");
    est->add_option("--rho", eo.rho, "structural derivative at y,x,wstar (repeatable)");
    est->add_option("--rho-avg", eo.rho_avg, "averaged derivative: y,x,w1,w2,... (repeatable)");
    est->add_option("--wlar", eo.wlar_specs,
                    "local average response: x,dlo,dhi,wlo,whi[,nd,nw] (repeatable)");
    est->add_option("--output", eo.output, "output path, - for stdout");
    est->add_option("--format", eo.format, "csv or json");
    est->callback([&eo] { run_estimate(eo); });

    SimulateOpts so;
    auto* sim = app.add_subcommand("simulate", "run a Monte Carlo replication study");
    sim->add_option("--design", so.design, "1 (linear Gaussian) or 2 (nonlinear quartic)");
    sim->add_option("--estimator", so.estimator, "deconv_rho | naive_rho | tsls | deconv_wlar");
    sim->add_option("--n", so.n, "sample size per replication");
    sim->add_option("--reps", so.reps, "number of replications");
    sim->add_option("--seed", so.seed, "master seed (each replication gets a substream)");
    sim->add_option("--h1", so.h1, "instrument-axis bandwidth (repeatable for a scan)");
    sim->add_option("--h21", so.h21, "y-axis bandwidth");
    sim->add_option("--h22", so.h22, "x-axis bandwidth");
    sim->add_option("--point", so.point, "rho query point y,x,wstar");
    sim->add_option("--window", so.window, "wlar window x,dlo,dhi,wlo,whi[,nd,nw]");
    sim->add_option("--m", so.m, "frequency half-grid size");
    sim->add_option("--threads", so.threads, "worker threads (0 = all cores)");
    sim->add_option("--quantile-grid", so.quantile_grid, "y-grid size for CDF inversion");
    sim->add_option("--eps-denom", so.eps_denom, "CF denominator guard threshold");
    sim->add_option("--tau", so.tau, "denominator trimming threshold");
    sim->add_option("--max-failure-frac", so.max_failure_frac,
                    "abort when more than this fraction of replications fail");
    sim->add_option("--output", so.output, "output path, - for stdout");
    sim->add_flag("--list-failures", so.list_failures, "print every failed replication");
    sim->callback([&so] { run_simulate(so); });

    CrossvalOpts co;
    auto* cv = app.add_subcommand("crossval", "least-squares cross-validation for h21, h22");
    cv->add_option("--input", co.input, "input CSV path")->required();
    cv->add_option("--h21-grid", co.h21_grid, "comma-separated h21 candidates");
    cv->add_option("--h22-grid", co.h22_grid, "comma-separated h22 candidates");
    cv->add_option("--output", co.output, "output path, - for stdout");
    cv->callback([&co] { run_crossval(co); });

    OracleOpts oo;
    auto* orc = app.add_subcommand("oracle", "closed-form benchmark self-check");
    orc->add_option("--design2-truth", oo.design2_truth_y,
                    "also print the design-2 true derivative at this y");
    orc->callback([&oo] { run_oracle(oo); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    } catch (const deconviv::InputError& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return 2;
    } catch (const deconviv::Error& e) {
        std::cerr << "estimation error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
