#include "zial/attention.hpp"

#include <cmath>
#include <stdexcept>

namespace zial {

void AttentionConfig::validate() const {
    if (d == 0 || d_k == 0 || d_v == 0) throw std::invalid_argument("AttentionConfig: zero dimension");
    if (L < 1) throw std::invalid_argument("AttentionConfig: L must be >= 1");
    if (W_Q.rows != d || W_Q.cols != d_k) throw std::invalid_argument("AttentionConfig: W_Q must be d x d_k");
    if (W_K.rows != d || W_K.cols != d_k) throw std::invalid_argument("AttentionConfig: W_K must be d x d_k");
    if (W_V.rows != d || W_V.cols != d_v) throw std::invalid_argument("AttentionConfig: W_V must be d x d_v");
    if (!all_finite(W_Q) || !all_finite(W_K) || !all_finite(W_V))
        throw std::invalid_argument("AttentionConfig: non-finite projection entries");
}

namespace {

void check_token(const Vector& v, std::size_t d, const char* what) {
    if (v.size() != d) throw std::invalid_argument(std::string(what) + ": expected dim d");
}

// Scores for a list of key rows against the query, scaled by 1/sqrt(d_k).
Vector scores_against(const Vector& Q, const std::vector<Vector>& K, std::size_t begin,
                      std::size_t end, double inv_sqrt_dk) {
    Vector s(end - begin);
    for (std::size_t i = begin; i < end; ++i) s[i - begin] = dot(Q, K[i]) * inv_sqrt_dk;
    return s;
}

void accumulate_weighted(Vector& y, const std::vector<Vector>& V, std::size_t begin,
                         const Vector& weights, double scale) {
    for (std::size_t i = 0; i < weights.size(); ++i) {
        const Vector& row = V[begin + i];
        const double w = weights[i] * scale;
        for (std::size_t c = 0; c < y.size(); ++c) y[c] += w * row[c];
    }
}

}  // namespace

QkvProjection project_qkv(const Vector& t, const std::vector<Vector>& X_tokens,
                          const std::vector<Vector>& P_eff, const AttentionConfig& cfg) {
    cfg.validate();
    check_token(t, cfg.d, "project_qkv: t");
    if (X_tokens.size() != cfg.N) throw std::invalid_argument("project_qkv: token count != N");
    if (P_eff.size() != cfg.L) throw std::invalid_argument("project_qkv: prompt count != L");

    QkvProjection out;
    out.Q = matvec_t(cfg.W_Q, t);
    out.K.reserve(cfg.L + cfg.N + 1);
    out.V.reserve(cfg.L + cfg.N + 1);
    auto push = [&](const Vector& row, const char* what) {
        check_token(row, cfg.d, what);
        out.K.push_back(matvec_t(cfg.W_K, row));
        out.V.push_back(matvec_t(cfg.W_V, row));
    };
    for (const Vector& p : P_eff) push(p, "project_qkv: prompt row");
    for (const Vector& x : X_tokens) push(x, "project_qkv: word token");
    push(t, "project_qkv: t");
    return out;
}

Vector zero_init_attention(const Vector& t, const std::vector<Vector>& X_tokens,
                           const PromptBlock& prompts, const AttentionConfig& cfg) {
    if (prompts.rows.size() != cfg.L)
        throw std::invalid_argument("zero_init_attention: prompt rows != L");
    const QkvProjection qkv = project_qkv(t, X_tokens, prompts.rows, cfg);
    const double inv_sqrt_dk = 1.0 / std::sqrt(static_cast<double>(cfg.d_k));

    const Vector s_p = scores_against(qkv.Q, qkv.K, 0, cfg.L, inv_sqrt_dk);
    const Vector s_x = scores_against(qkv.Q, qkv.K, cfg.L, cfg.L + cfg.N + 1, inv_sqrt_dk);
    const Vector w_p = softmax(s_p);
    const Vector w_x = softmax(s_x);

    Vector y(cfg.d_v, 0.0);
    accumulate_weighted(y, qkv.V, 0, w_p, stable_tanh(prompts.alpha));
    accumulate_weighted(y, qkv.V, cfg.L, w_x, 1.0);
    return y;
}

Vector vanilla_attention(const Vector& t, const std::vector<Vector>& X_tokens,
                         const PromptBlock& prompts, const AttentionConfig& cfg) {
    if (prompts.rows.size() != cfg.L)
        throw std::invalid_argument("vanilla_attention: prompt rows != L");
    const QkvProjection qkv = project_qkv(t, X_tokens, prompts.rows, cfg);
    const double inv_sqrt_dk = 1.0 / std::sqrt(static_cast<double>(cfg.d_k));

    const std::size_t total = cfg.L + cfg.N + 1;
    const Vector w = softmax(scores_against(qkv.Q, qkv.K, 0, total, inv_sqrt_dk));
    Vector y(cfg.d_v, 0.0);
    accumulate_weighted(y, qkv.V, 0, w, 1.0);
    return y;
}

Vector word_token_attention(const Vector& t, const std::vector<Vector>& X_tokens,
                            const AttentionConfig& cfg) {
    cfg.validate();
    check_token(t, cfg.d, "word_token_attention: t");
    if (X_tokens.size() != cfg.N)
        throw std::invalid_argument("word_token_attention: token count != N");

    const Vector Q = matvec_t(cfg.W_Q, t);
    std::vector<Vector> K, V;
    K.reserve(cfg.N + 1);
    V.reserve(cfg.N + 1);
    for (const Vector& x : X_tokens) {
        check_token(x, cfg.d, "word_token_attention: word token");
        K.push_back(matvec_t(cfg.W_K, x));
        V.push_back(matvec_t(cfg.W_V, x));
    }
    K.push_back(matvec_t(cfg.W_K, t));
    V.push_back(matvec_t(cfg.W_V, t));

    const double inv_sqrt_dk = 1.0 / std::sqrt(static_cast<double>(cfg.d_k));
    const Vector w = softmax(scores_against(Q, K, 0, cfg.N + 1, inv_sqrt_dk));
    Vector y(cfg.d_v, 0.0);
    accumulate_weighted(y, V, 0, w, 1.0);
    return y;
}

std::vector<Vector> apply_mlp_prompt(const std::vector<Vector>& P_raw, const MlpPrompt& mlp) {
    if (mlp.f1_weights.rows != mlp.f1_bias.size())
        throw std::invalid_argument("apply_mlp_prompt: f1 bias dim mismatch");
    if (mlp.f2_weights.rows != mlp.f2_bias.size())
        throw std::invalid_argument("apply_mlp_prompt: f2 bias dim mismatch");
    if (mlp.f2_weights.cols != mlp.f1_weights.rows)
        throw std::invalid_argument("apply_mlp_prompt: layer dims do not compose");

    std::vector<Vector> out;
    out.reserve(P_raw.size());
    for (const Vector& p : P_raw) {
        Vector h = matvec(mlp.f1_weights, p);
        for (std::size_t i = 0; i < h.size(); ++i)
            h[i] = apply_activation(mlp.activation, h[i] + mlp.f1_bias[i]);
        Vector o = matvec(mlp.f2_weights, h);
        for (std::size_t i = 0; i < o.size(); ++i) o[i] += mlp.f2_bias[i];
        out.push_back(std::move(o));
    }
    return out;
}

}  // namespace zial
