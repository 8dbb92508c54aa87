#pragma once

#include <cstdint>
#include <vector>

#include "zial/model.hpp"

// Least-squares estimation of the prompt atoms and the gating factor by
// multi-restart projected gradient descent with backtracking line search.
// Gradients are hand-derived and oracle-checked against finite differences.

namespace zial {

enum class InitMode { zero_like, random };

struct FitConfig {
    std::size_t L_prime = 2;       // fitted atom count (may exceed the true L)
    std::size_t restarts = 1;
    std::size_t max_iters = 20000;
    double step_init = 0.1;
    double grad_tol = 1e-8;        // on the mean-scaled projected gradient
    InitMode init_mode = InitMode::zero_like;
    double box = 5.0;              // prompts projected onto ||p||_inf <= box
    bool record_trace = false;     // keep per-iteration losses on the result
    // Secondary stop: declare convergence when the relative loss decrease
    // over a 100-iteration window falls below this. Cuts dead-basin crawls
    // without touching healthy descents; 0 disables.
    double plateau_rel = 1e-9;

    void validate() const;
};

struct FitResult {
    MixingMeasure G_hat;
    double alpha_hat = 0.0;
    double final_loss = 0.0;       // sum of squared residuals at the solution
    std::size_t iterations_used = 0;   // iterations of the winning restart
    std::size_t restart_index = 0;
    bool converged = false;
    std::uint64_t total_evals = 0;     // objective+gradient evaluations across all restarts
    std::vector<double> loss_trace;    // accepted-iteration losses, if requested
};

// Sum over samples of ||Y_i - f_{G,alpha}(X_i)||^2 (or g in nonlinear mode).
double sse_loss(const ModelSpec& spec, const MixingMeasure& G, double alpha,
                const Dataset& data);

struct SseGradient {
    std::vector<double> b;   // d loss / d b_j
    std::vector<Vector> p;   // d loss / d p_j
    double alpha = 0.0;      // d loss / d alpha

    std::vector<double> flatten() const;
};

// Exact analytic gradient of sse_loss in every coordinate. Nonlinear mode
// requires a smooth activation (tanh or identity).
SseGradient sse_gradient(const ModelSpec& spec, const MixingMeasure& G, double alpha,
                         const Dataset& data);

// Multi-restart fit: each restart draws its own initialization from a split
// of `rng` and runs projected gradient descent; the restart with the lowest
// final loss wins. Non-convergence is reported, never thrown.
FitResult fit(const ModelSpec& spec, const Dataset& data, const FitConfig& cfg, RngStream& rng);

// Single descent from an explicit starting point (e.g. the truth).
FitResult fit_from(const ModelSpec& spec, const Dataset& data, const FitConfig& cfg,
                   const MixingMeasure& G0, double alpha0);

}  // namespace zial
