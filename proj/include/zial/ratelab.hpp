#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "zial/estimation.hpp"
#include "zial/model.hpp"

// Convergence-rate experiments: sweep the sample size, fit replicates,
// record the Voronoi loss, the gating-factor error and the Monte-Carlo
// L2(mu) regression error, then fit log-log slopes on per-n medians.

namespace zial {

struct RateExperimentConfig {
    ModelSpec spec;
    FitConfig fit_cfg;
    std::vector<std::size_t> n_grid;   // ascending sample sizes
    std::size_t replicates = 20;
    std::size_t l2_mc_samples = 10000;
    std::uint64_t master_seed = 0;

    void validate() const;  // structural errors throw; span/replicate advisories surface as warnings
};

struct RateRow {
    std::size_t n = 0;
    std::size_t replicate = 0;
    double voronoi_loss = 0.0;
    double alpha_err = 0.0;
    double l2_err = 0.0;
    double final_loss = 0.0;
    bool converged = false;
    std::uint64_t work_evals = 0;    // deterministic optimizer work (objective evaluations)
    std::size_t occupied_cells = 0;  // true atoms with a nonempty Voronoi cell
};

struct SlopeFit {
    bool defined = false;
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
};

struct MedianRow {
    std::size_t n = 0;
    std::size_t converged_count = 0;
    double voronoi_loss = 0.0;
    double alpha_err = 0.0;
    double l2_err = 0.0;
};

struct RateTable {
    std::vector<RateRow> rows;        // one per (n, replicate), grid order
    std::vector<MedianRow> medians;   // per n, over converged replicates
    SlopeFit slope_D;
    SlopeFit slope_alpha;
    SlopeFit slope_l2;
    std::vector<std::string> warnings;
};

// Runs the full (n, replicate) grid on a bounded worker pool. Every task
// derives its streams from (master_seed, n, replicate), so the table is
// bit-identical for any thread count. threads = 0 means hardware count.
RateTable run_rate_experiment(const RateExperimentConfig& cfg, std::size_t threads = 0);

//-root of the Monte-Carlo average of ||f_hat(X) - f_star(X)||^2 over m
// draws X ~ mu; approximates the L2(mu) distance between the fitted and
// true regression functions.
double estimate_l2_error(const ModelSpec& spec, const MixingMeasure& G_hat, double alpha_hat,
                         std::size_t m, RngStream& rng);

// Ordinary least squares of log(values) on log(ns). Needs at least two
// distinct sample sizes and strictly positive values; throws otherwise.
SlopeFit fit_rate(const std::vector<std::size_t>& ns, const std::vector<double>& values);

double median(std::vector<double> values);  // empty input throws

}  // namespace zial
