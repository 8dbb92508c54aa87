#pragma once

#include <cstdint>
#include <vector>

#include "zial/attention.hpp"
#include "zial/numerics.hpp"

// Mixture-of-experts view of zero-initialized attention: L + N + 1 experts
// (N word tokens, the query token, L prompts) with softmax gates normalized
// per block. Exists as a verification lens against the attention module.

namespace zial {

// Concatenated token vector [x_1; ...; x_N; t] with implicit selectors:
// token(i) slices out the i-th block, selector_dense(i) materializes E_i.
struct TokenBundle {
    Vector X_bar;       // (N+1) * d entries
    std::size_t d = 0;
    std::size_t N = 0;

    static TokenBundle concat(const std::vector<Vector>& X_tokens, const Vector& t);

    // i is 1-based: token(i) = x_i for i <= N, token(N+1) = t.
    Vector token(std::size_t i) const;
    Matrix selector_dense(std::size_t i) const;  // d x (N+1)d with E_i X_bar = token(i)
};

struct MoeSystem {
    TokenBundle bundle;
    AttentionConfig cfg;
    PromptBlock prompts;

    void validate() const;
};

// Expert index j is 1-based: j in [1, N] word tokens, j = N+1 the query
// token, j in [N+2, N+1+L] prompts. Throws std::out_of_range otherwise.
Vector expert_output(const MoeSystem& sys, std::size_t j);

// Gate for expert j; word-token gates normalize over the N+1 token logits,
// prompt gates over the L prompt logits. Same 1-based indexing.
double gate_weight(const MoeSystem& sys, std::size_t j);

// y = sum_j G_j f_j + tanh(alpha) * sum_j' G_{N+1+j'} f_{N+1+j'}.
Vector moe_output(const MoeSystem& sys);

struct EquivalenceBounds {
    std::size_t max_n = 8;    // word tokens drawn from [0, max_n]
    std::size_t max_l = 4;    // prompts drawn from [1, max_l]
    std::size_t max_d = 16;   // d, d_k, d_v drawn from [1, max_d]
};

struct EquivalenceReport {
    std::size_t trials = 0;
    double max_abs_deviation = 0.0;
    std::size_t worst_trial = 0;
};

// Evaluates both pipelines on identical random inputs and reports the max
// per-coordinate absolute difference over all trials. Never throws on
// deviation; callers compare against their own tolerance.
EquivalenceReport check_equivalence(std::size_t trials, const EquivalenceBounds& bounds,
                                    RngStream& rng);

}  // namespace zial
