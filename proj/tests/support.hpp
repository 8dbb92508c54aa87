#pragma once

#include <cmath>
#include <vector>

#include "zial/model.hpp"
#include "zial/numerics.hpp"

// Shared helpers for the test suites: random object builders and the
// finite-difference gradient oracle.

namespace zial::test {

inline Matrix random_matrix(std::size_t r, std::size_t c, RngStream& rng, double sd = 1.0) {
    Matrix m(r, c);
    for (double& x : m.data) x = rng.normal(0.0, sd);
    return m;
}

inline Vector random_vector(std::size_t n, RngStream& rng, double sd = 1.0) {
    Vector v(n);
    for (double& x : v) x = rng.normal(0.0, sd);
    return v;
}

inline double max_abs_diff(const Vector& a, const Vector& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::fabs(a[i] - b[i]));
    return m;
}

// Small random model spec for estimation tests.
inline ModelSpec random_model_spec(std::size_t d, std::size_t d_prime, std::size_t N,
                                   std::size_t L, RngStream& rng,
                                   PromptMode mode = PromptMode::linear,
                                   Activation act = Activation::tanh) {
    ModelSpec spec;
    spec.ensemble = sample_ensemble(d, d_prime, N, rng);
    for (std::size_t j = 0; j < L; ++j) {
        Atom a;
        a.b = rng.uniform(-0.5, 0.5);
        a.p = random_vector(d, rng);
        spec.G_star.atoms.push_back(std::move(a));
    }
    spec.alpha_star = rng.uniform(0.5, 1.5);
    spec.mode = mode;
    spec.sigma_act = act;
    spec.noise_var = 0.0;
    return spec;
}

// Central finite differences of a scalar function of a flat parameter
// vector; the independent oracle for the analytic gradient.
template <typename F>
std::vector<double> finite_difference_gradient(F&& f, std::vector<double> x, double h = 1e-5) {
    std::vector<double> g(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double saved = x[i];
        x[i] = saved + h;
        const double fp = f(x);
        x[i] = saved - h;
        const double fm = f(x);
        x[i] = saved;
        g[i] = (fp - fm) / (2.0 * h);
    }
    return g;
}

}  // namespace zial::test
