#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <stdexcept>

#include "zial/ratelab.hpp"

#include "support.hpp"

using namespace zial;

TEST_CASE("median of odd and even counts") {
    CHECK(median({3.0, 1.0, 2.0}) == 2.0);
    CHECK(median({4.0, 1.0, 3.0, 2.0}) == 2.5);
    CHECK_THROWS_AS(median({}), std::invalid_argument);
}

TEST_CASE("fit_rate recovers a planted power law exactly") {
    const SlopeFit two_point = fit_rate({100, 10000}, {0.1, 0.01});
    CHECK(two_point.defined);
    CHECK(two_point.slope == doctest::Approx(-0.5).epsilon(1e-12));
    CHECK(two_point.r_squared == doctest::Approx(1.0).epsilon(1e-12));

    std::vector<std::size_t> ns{100, 400, 1600, 6400};
    std::vector<double> vals;
    for (std::size_t n : ns) vals.push_back(1.0 / std::sqrt(static_cast<double>(n)));
    const SlopeFit sf = fit_rate(ns, vals);
    CHECK(sf.slope == doctest::Approx(-0.5).epsilon(1e-12));
    CHECK(sf.r_squared == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("fit_rate on constant values gives slope zero") {
    const SlopeFit sf = fit_rate({10, 100, 1000}, {0.7, 0.7, 0.7});
    CHECK(sf.slope == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("fit_rate matches a hand OLS computation") {
    const SlopeFit sf = fit_rate({10, 100, 1000}, {1.0, 0.4, 0.15});
    // Closed-form OLS on logs, computed independently here.
    const double x1 = std::log(10.0), x2 = std::log(100.0), x3 = std::log(1000.0);
    const double y1 = std::log(1.0), y2 = std::log(0.4), y3 = std::log(0.15);
    const double xbar = (x1 + x2 + x3) / 3.0, ybar = (y1 + y2 + y3) / 3.0;
    const double slope = ((x1 - xbar) * (y1 - ybar) + (x2 - xbar) * (y2 - ybar) +
                          (x3 - xbar) * (y3 - ybar)) /
                         ((x1 - xbar) * (x1 - xbar) + (x2 - xbar) * (x2 - xbar) +
                          (x3 - xbar) * (x3 - xbar));
    CHECK(sf.slope == doctest::Approx(slope).epsilon(1e-12));
    CHECK(sf.slope == doctest::Approx(-0.41195).epsilon(1e-4));
}

TEST_CASE("fit_rate input validation") {
    CHECK_THROWS_AS(fit_rate({100}, {0.5}), std::invalid_argument);
    CHECK_THROWS_AS(fit_rate({100, 100}, {0.5, 0.5}), std::invalid_argument);
    CHECK_THROWS_AS(fit_rate({100, 1000}, {0.5, 0.0}), std::invalid_argument);
    CHECK_THROWS_AS(fit_rate({100, 1000}, {0.5, -0.1}), std::invalid_argument);
}

TEST_CASE("estimate_l2_error is zero at the truth") {
    RngStream rng(81, 0);
    const ModelSpec spec = test::random_model_spec(2, 2, 2, 2, rng);
    RngStream mc(3, 0);
    CHECK(estimate_l2_error(spec, spec.G_star, spec.alpha_star, 1000, mc) == 0.0);
}

TEST_CASE("d = 1 Monte-Carlo error agrees with grid quadrature") {
    RngStream rng(82, 0);
    ModelSpec spec = test::random_model_spec(1, 1, 1, 1, rng);
    MixingMeasure g_hat = spec.G_star;
    g_hat.atoms[0].p[0] += 0.4;
    g_hat.atoms[0].b += 0.2;
    const double alpha_hat = spec.alpha_star + 0.15;

    // Trapezoid quadrature of the squared difference over mu = U[-1, 1].
    const std::size_t grid = 100000;
    double acc = 0.0;
    for (std::size_t k = 0; k <= grid; ++k) {
        const double x = -1.0 + 2.0 * static_cast<double>(k) / grid;
        const Vector fh = eval_f(spec, g_hat, alpha_hat, {x});
        const Vector ft = eval_f(spec, spec.G_star, spec.alpha_star, {x});
        const double d2 = (fh[0] - ft[0]) * (fh[0] - ft[0]);
        acc += (k == 0 || k == grid) ? 0.5 * d2 : d2;
    }
    const double quad = std::sqrt(acc / grid);

    RngStream mc(4, 0);
    const double est = estimate_l2_error(spec, g_hat, alpha_hat, 100000, mc);
    CHECK(std::fabs(est - quad) / quad <= 0.02);
}

TEST_CASE("doubling the Monte-Carlo budget barely moves the estimate") {
    RngStream rng(83, 0);
    ModelSpec spec = test::random_model_spec(2, 2, 2, 2, rng);
    MixingMeasure g_hat = spec.G_star;
    for (Atom& a : g_hat.atoms)
        for (double& c : a.p) c += 0.3;
    RngStream mc1(5, 0), mc2(6, 0);
    const double e1 = estimate_l2_error(spec, g_hat, spec.alpha_star, 10000, mc1);
    const double e2 = estimate_l2_error(spec, g_hat, spec.alpha_star, 100000, mc2);
    CHECK(std::fabs(e1 - e2) / e2 <= 0.01);
}

namespace {

RateExperimentConfig tiny_experiment() {
    RateExperimentConfig rc;
    RngStream ens_rng(301, 0);
    rc.spec.ensemble = sample_ensemble(2, 2, 2, ens_rng);
    rc.spec.G_star.atoms = {{0.3, {1.5, -1.0}}, {-0.3, {-1.0, 1.5}}};
    rc.spec.alpha_star = 1.0;
    rc.spec.noise_var = 0.01;
    rc.fit_cfg.L_prime = 2;
    rc.fit_cfg.restarts = 2;
    rc.fit_cfg.max_iters = 2000;
    rc.n_grid = {50, 200};
    rc.replicates = 4;
    rc.l2_mc_samples = 500;
    rc.master_seed = 777;
    return rc;
}

}  // namespace

TEST_CASE("rate tables are identical across thread counts") {
    const RateExperimentConfig rc = tiny_experiment();
    const RateTable t1 = run_rate_experiment(rc, 1);
    const RateTable t2 = run_rate_experiment(rc, 2);
    const RateTable t4 = run_rate_experiment(rc, 4);

    REQUIRE(t1.rows.size() == 8);
    REQUIRE(t2.rows.size() == 8);
    for (std::size_t i = 0; i < t1.rows.size(); ++i) {
        CHECK(t1.rows[i].n == t2.rows[i].n);
        CHECK(t1.rows[i].replicate == t2.rows[i].replicate);
        CHECK(t1.rows[i].voronoi_loss == t2.rows[i].voronoi_loss);
        CHECK(t1.rows[i].alpha_err == t2.rows[i].alpha_err);
        CHECK(t1.rows[i].l2_err == t2.rows[i].l2_err);
        CHECK(t1.rows[i].final_loss == t4.rows[i].final_loss);
        CHECK(t1.rows[i].work_evals == t4.rows[i].work_evals);
        CHECK(t1.rows[i].converged == t4.rows[i].converged);
    }
    CHECK(t1.slope_D.slope == t2.slope_D.slope);
    CHECK(t1.slope_D.slope == t4.slope_D.slope);
}

TEST_CASE("single-n grids populate the table but leave slopes undefined") {
    RateExperimentConfig rc = tiny_experiment();
    rc.n_grid = {100};
    const RateTable t = run_rate_experiment(rc, 2);
    CHECK(t.rows.size() == 4);
    CHECK_FALSE(t.slope_D.defined);
    CHECK_FALSE(t.slope_alpha.defined);
    CHECK_FALSE(t.slope_l2.defined);
    bool has_slope_warning = false;
    for (const std::string& w : t.warnings)
        has_slope_warning = has_slope_warning || w.find("slope undefined") != std::string::npos;
    CHECK(has_slope_warning);
}

TEST_CASE("narrow grids carry a validity warning") {
    RateExperimentConfig rc = tiny_experiment();  // 200/50 = 4 < 30
    const RateTable t = run_rate_experiment(rc, 2);
    bool warned = false;
    for (const std::string& w : t.warnings)
        warned = warned || w.find("1.5 decades") != std::string::npos;
    CHECK(warned);
}

TEST_CASE("experiment config validation") {
    RateExperimentConfig rc = tiny_experiment();
    rc.n_grid = {200, 100};
    CHECK_THROWS_AS(rc.validate(), std::invalid_argument);
    rc.n_grid = {};
    CHECK_THROWS_AS(rc.validate(), std::invalid_argument);
    rc = tiny_experiment();
    rc.replicates = 0;
    CHECK_THROWS_AS(rc.validate(), std::invalid_argument);
}
