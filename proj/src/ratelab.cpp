#include "zial/ratelab.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <stdexcept>
#include <thread>

#include "zial/voronoi.hpp"

namespace zial {

void RateExperimentConfig::validate() const {
    spec.validate();
    fit_cfg.validate();
    if (n_grid.empty()) throw std::invalid_argument("RateExperimentConfig: empty n_grid");
    for (std::size_t i = 0; i < n_grid.size(); ++i) {
        if (n_grid[i] == 0) throw std::invalid_argument("RateExperimentConfig: n must be positive");
        if (i > 0 && n_grid[i] <= n_grid[i - 1])
            throw std::invalid_argument("RateExperimentConfig: n_grid must be strictly ascending");
    }
    if (replicates < 1) throw std::invalid_argument("RateExperimentConfig: replicates must be >= 1");
    if (l2_mc_samples < 1)
        throw std::invalid_argument("RateExperimentConfig: l2_mc_samples must be >= 1");
}

double median(std::vector<double> values) {
    if (values.empty()) throw std::invalid_argument("median: empty input");
    std::sort(values.begin(), values.end());
    const std::size_t mid = values.size() / 2;
    if (values.size() % 2 == 1) return values[mid];
    return 0.5 * (values[mid - 1] + values[mid]);
}

SlopeFit fit_rate(const std::vector<std::size_t>& ns, const std::vector<double>& values) {
    if (ns.size() != values.size()) throw std::invalid_argument("fit_rate: length mismatch");
    std::vector<double> xs;
    for (std::size_t n : ns) {
        if (n == 0) throw std::invalid_argument("fit_rate: sample sizes must be positive");
        xs.push_back(std::log(static_cast<double>(n)));
    }
    {
        std::vector<double> uniq = xs;
        std::sort(uniq.begin(), uniq.end());
        uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
        if (uniq.size() < 2) throw std::invalid_argument("fit_rate: need >= 2 distinct sample sizes");
    }
    std::vector<double> ys;
    for (double v : values) {
        if (!(v > 0.0)) throw std::invalid_argument("fit_rate: values must be positive");
        ys.push_back(std::log(v));
    }

    const double n = static_cast<double>(xs.size());
    double xbar = 0.0, ybar = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        xbar += xs[i];
        ybar += ys[i];
    }
    xbar /= n;
    ybar /= n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double dx = xs[i] - xbar;
        const double dy = ys[i] - ybar;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }

    SlopeFit out;
    out.defined = true;
    out.slope = sxy / sxx;
    out.intercept = ybar - out.slope * xbar;
    if (syy > 0.0) {
        double ss_res = 0.0;
        for (std::size_t i = 0; i < xs.size(); ++i) {
            const double resid = ys[i] - (out.intercept + out.slope * xs[i]);
            ss_res += resid * resid;
        }
        out.r_squared = 1.0 - ss_res / syy;
    } else {
        out.r_squared = 1.0;  // constant values: the flat line is exact
    }
    return out;
}

double estimate_l2_error(const ModelSpec& spec, const MixingMeasure& G_hat, double alpha_hat,
                         std::size_t m, RngStream& rng) {
    if (m < 1) throw std::invalid_argument("estimate_l2_error: m must be >= 1");
    const std::size_t dim = spec.d();
    double acc = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
        Vector X(dim);
        for (double& x : X) x = rng.uniform(spec.mu.lo, spec.mu.hi);
        const Vector fhat = eval_regression(spec, G_hat, alpha_hat, X);
        const Vector ftrue = eval_regression(spec, spec.G_star, spec.alpha_star, X);
        for (std::size_t c = 0; c < fhat.size(); ++c) {
            const double diff = fhat[c] - ftrue[c];
            acc += diff * diff;
        }
    }
    return std::sqrt(acc / static_cast<double>(m));
}

namespace {

RateRow run_cell(const RateExperimentConfig& cfg, std::size_t n, std::size_t replicate) {
    // All randomness is derived from (master_seed, n, replicate), never from
    // scheduling: lane 0 data, lane 1 fit restarts, lane 2 the L2 probe.
    RngStream base = RngStream(cfg.master_seed, 0).split(n).split(replicate);
    RngStream data_rng = base.split(0);
    RngStream fit_rng = base.split(1);
    RngStream l2_rng = base.split(2);

    const Dataset data = sample_dataset(cfg.spec, n, data_rng);
    const FitResult fr = fit(cfg.spec, data, cfg.fit_cfg, fit_rng);

    RateRow row;
    row.n = n;
    row.replicate = replicate;
    row.final_loss = fr.final_loss;
    row.converged = fr.converged;
    row.work_evals = fr.total_evals;
    row.voronoi_loss = voronoi_loss(fr.G_hat, cfg.spec.G_star).total;
    row.alpha_err = std::fabs(fr.alpha_hat - cfg.spec.alpha_star);
    row.l2_err = estimate_l2_error(cfg.spec, fr.G_hat, fr.alpha_hat, cfg.l2_mc_samples, l2_rng);
    row.occupied_cells = assign_cells(fr.G_hat, cfg.spec.G_star).occupied_count();
    return row;
}

}  // namespace

RateTable run_rate_experiment(const RateExperimentConfig& cfg, std::size_t threads) {
    cfg.validate();
    RateTable table;

    // Advisory checks: slope fitting wants >= 1.5 decades of n and >= 10
    // replicates per cell. Narrower grids still run, with a warning.
    if (cfg.n_grid.back() < 30 * cfg.n_grid.front())
        table.warnings.push_back("validity: n_grid spans less than 1.5 decades (max/min < 30)");
    if (cfg.replicates < 10)
        table.warnings.push_back("validity: fewer than 10 replicates per sample size");

    const std::size_t cells = cfg.n_grid.size() * cfg.replicates;
    table.rows.resize(cells);

    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = std::min(threads, cells);

    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        while (true) {
            const std::size_t task = next.fetch_add(1);
            if (task >= cells) return;
            const std::size_t n = cfg.n_grid[task / cfg.replicates];
            const std::size_t rep = task % cfg.replicates;
            table.rows[task] = run_cell(cfg, n, rep);
        }
    };
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t i = 0; i < threads; ++i) pool.emplace_back(worker);
        for (std::thread& th : pool) th.join();
    }

    // Per-n medians over converged replicates only.
    std::vector<std::size_t> slope_ns;
    std::vector<double> med_d, med_a, med_l2;
    for (std::size_t gi = 0; gi < cfg.n_grid.size(); ++gi) {
        const std::size_t n = cfg.n_grid[gi];
        std::vector<double> ds, as, l2s;
        for (std::size_t rep = 0; rep < cfg.replicates; ++rep) {
            const RateRow& row = table.rows[gi * cfg.replicates + rep];
            if (!row.converged) continue;
            ds.push_back(row.voronoi_loss);
            as.push_back(row.alpha_err);
            l2s.push_back(row.l2_err);
        }
        const std::size_t failed = cfg.replicates - ds.size();
        if (failed * 2 > cfg.replicates)
            table.warnings.push_back("validity: n=" + std::to_string(n) + " has " +
                                     std::to_string(failed) + "/" + std::to_string(cfg.replicates) +
                                     " failed replicates");
        if (ds.empty()) continue;

        MedianRow mr;
        mr.n = n;
        mr.converged_count = ds.size();
        mr.voronoi_loss = median(ds);
        mr.alpha_err = median(as);
        mr.l2_err = median(l2s);
        table.medians.push_back(mr);

        slope_ns.push_back(n);
        med_d.push_back(mr.voronoi_loss);
        med_a.push_back(mr.alpha_err);
        med_l2.push_back(mr.l2_err);
    }

    auto try_fit = [&](const std::vector<double>& vals) {
        SlopeFit sf;
        bool positive = true;
        for (double v : vals) positive = positive && v > 0.0;
        if (slope_ns.size() >= 2 && positive) sf = fit_rate(slope_ns, vals);
        return sf;
    };
    table.slope_D = try_fit(med_d);
    table.slope_alpha = try_fit(med_a);
    table.slope_l2 = try_fit(med_l2);
    if (!table.slope_D.defined)
        table.warnings.push_back("slope undefined: need >= 2 sample sizes with positive medians");

    return table;
}

}  // namespace zial
