#pragma once

#include <vector>

#include "zial/activation.hpp"
#include "zial/numerics.hpp"

// Single-head, single-query attention over a prefix of L adaptation prompts,
// N word tokens, and the current token t. Keys and values keep the fixed row
// order [prompts; word tokens; t]; score splitting indexes by that order.

namespace zial {

struct AttentionConfig {
    std::size_t d = 0;    // token feature dimension
    std::size_t d_k = 0;  // key/query dimension
    std::size_t d_v = 0;  // value dimension
    std::size_t N = 0;    // word-token count (>= 0)
    std::size_t L = 1;    // prompt count (>= 1)
    Matrix W_Q;           // d x d_k
    Matrix W_K;           // d x d_k
    Matrix W_V;           // d x d_v

    void validate() const;  // throws std::invalid_argument on bad shapes
};

struct PromptBlock {
    std::vector<Vector> rows;  // L prompt vectors of dim d
    double alpha = 0.0;        // gating factor, pre-tanh
};

// Two-layer MLP prompt transform: p -> f2(phi(f1(p))).
struct MlpPrompt {
    Matrix f1_weights;
    Vector f1_bias;
    Matrix f2_weights;  // output dim must be d
    Vector f2_bias;
    Activation activation = Activation::tanh;
};

struct QkvProjection {
    Vector Q;                // d_k
    std::vector<Vector> K;   // L + N + 1 rows of dim d_k
    std::vector<Vector> V;   // L + N + 1 rows of dim d_v
};

// Projects the query token and the [P; X; t] stack through the frozen
// W_Q/W_K/W_V matrices.
QkvProjection project_qkv(const Vector& t, const std::vector<Vector>& X_tokens,
                          const std::vector<Vector>& P_eff, const AttentionConfig& cfg);

// Split-softmax attention with the tanh(alpha) gate on the prompt branch:
// y = softmax(S_P) * tanh(alpha) * V_P + softmax(S_X) * V_X.
Vector zero_init_attention(const Vector& t, const std::vector<Vector>& X_tokens,
                           const PromptBlock& prompts, const AttentionConfig& cfg);

// One joint softmax over all L + N + 1 scores, no gating factor.
Vector vanilla_attention(const Vector& t, const std::vector<Vector>& X_tokens,
                         const PromptBlock& prompts, const AttentionConfig& cfg);

// Attention over the word-token block only (no prompts); the alpha = 0
// limit of zero_init_attention.
Vector word_token_attention(const Vector& t, const std::vector<Vector>& X_tokens,
                            const AttentionConfig& cfg);

// Applies the MLP row-wise: P~_j = f2(phi(f1(p_j))).
std::vector<Vector> apply_mlp_prompt(const std::vector<Vector>& P_raw, const MlpPrompt& mlp);

}  // namespace zial
