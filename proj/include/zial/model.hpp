#pragma once

#include <cstdint>
#include <vector>

#include "zial/activation.hpp"
#include "zial/numerics.hpp"

// Synthetic ground truth for the prompt-estimation experiments: a frozen
// softmax-gated ensemble of N linear experts plus a trainable prompt branch
// gated by tanh(alpha), in linear and nonlinear-prompt variants.

namespace zial {

struct Atom {
    double b = 0.0;  // log-weight; the atom's mass is exp(b)
    Vector p;        // prompt location, dim d
};

// Weighted atom set G = sum_j exp(b_j) * delta_{p_j}.
struct MixingMeasure {
    std::vector<Atom> atoms;

    std::size_t size() const { return atoms.size(); }
};

struct PretrainedEnsemble {
    std::vector<Matrix> A0;    // N gating matrices, d x d
    std::vector<double> a0;    // N gating biases
    std::vector<Matrix> eta0;  // N expert matrices, d' x d (expert j maps X -> eta0_j X)
    Matrix B_bar;              // d x d prompt-gate projection
    Matrix C_bar;              // d' x d prompt-output projection

    std::size_t N() const { return A0.size(); }
    std::size_t d() const { return B_bar.cols; }
    std::size_t d_prime() const { return C_bar.rows; }
    void validate() const;
};

enum class PromptMode { linear, nonlinear };

// Uniform box input distribution on [lo, hi]^d.
struct InputDistribution {
    double lo = -1.0;
    double hi = 1.0;
};

struct ModelSpec {
    PretrainedEnsemble ensemble;
    MixingMeasure G_star;
    double alpha_star = 1.0;
    PromptMode mode = PromptMode::linear;
    Activation sigma_act = Activation::tanh;  // used in nonlinear mode only
    double noise_var = 0.0;                   // sigma^2, isotropic over d' coords
    InputDistribution mu;
    double box = 5.0;        // prompt box radius, ||p||_inf <= box
    double alpha_min = 0.1;  // |alpha_star| must stay above this

    std::size_t d() const { return ensemble.d(); }
    std::size_t d_prime() const { return ensemble.d_prime(); }

    // Structural checks plus |alpha_star| >= alpha_min and, in nonlinear
    // mode, an injective twice-differentiable activation. Evaluation of
    // eval_f/eval_g does not require a validated spec; dataset sampling,
    // fitting and the CLI do.
    void validate() const;
};

struct Dataset {
    std::vector<Vector> inputs;   // n vectors of dim d
    std::vector<Vector> targets;  // n vectors of dim d'
    std::uint64_t spec_fingerprint = 0;

    std::size_t n() const { return inputs.size(); }
};

// Softmax-gated frozen part: sum_j softmax_j(X^T A0_j X + a0_j) * eta0_j X.
Vector pretrained_part(const PretrainedEnsemble& ens, const Vector& X);

// Linear-prompt regression function:
// pretrained_part(X) + tanh(alpha) * sum_j softmax_j((B p_j)^T X + b_j) * C p_j.
Vector eval_f(const ModelSpec& spec, const MixingMeasure& G, double alpha, const Vector& X);

// Nonlinear-prompt variant; p_j enters gate and expert through sigma(p_j).
Vector eval_g(const ModelSpec& spec, const MixingMeasure& G, double alpha, const Vector& X);

// Dispatches on spec.mode.
Vector eval_regression(const ModelSpec& spec, const MixingMeasure& G, double alpha,
                       const Vector& X);

// X_i i.i.d. from spec.mu, Y_i = f-or-g(X_i) + eps_i with isotropic Gaussian
// noise of variance spec.noise_var. Deterministic under a fixed stream.
Dataset sample_dataset(const ModelSpec& spec, std::size_t n, RngStream& rng);

// Frozen "existing knowledge": all entries i.i.d. Normal(0, 1/d).
PretrainedEnsemble sample_ensemble(std::size_t d, std::size_t d_prime, std::size_t N,
                                   RngStream& rng);

// Random truth: prompts uniform in the box with a minimum pairwise
// separation (rejection sampling), biases uniform then recentered to mean
// zero so the mixture weights are reachable by gradient descent, which
// conserves the bias sum.
MixingMeasure sample_truth(std::size_t L, std::size_t d, double box, double min_separation,
                           RngStream& rng);

// Stable fingerprint of the generating spec, stored on each Dataset.
std::uint64_t spec_fingerprint(const ModelSpec& spec);

}  // namespace zial
