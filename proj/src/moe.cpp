#include "zial/moe.hpp"

#include <cmath>
#include <stdexcept>

namespace zial {

TokenBundle TokenBundle::concat(const std::vector<Vector>& X_tokens, const Vector& t) {
    TokenBundle b;
    b.d = t.size();
    b.N = X_tokens.size();
    if (b.d == 0) throw std::invalid_argument("TokenBundle: empty query token");
    b.X_bar.reserve((b.N + 1) * b.d);
    for (const Vector& x : X_tokens) {
        if (x.size() != b.d) throw std::invalid_argument("TokenBundle: token dim mismatch");
        b.X_bar.insert(b.X_bar.end(), x.begin(), x.end());
    }
    b.X_bar.insert(b.X_bar.end(), t.begin(), t.end());
    return b;
}

Vector TokenBundle::token(std::size_t i) const {
    if (i < 1 || i > N + 1) throw std::out_of_range("TokenBundle::token: index out of range");
    const std::size_t off = (i - 1) * d;
    return Vector(X_bar.begin() + off, X_bar.begin() + off + d);
}

Matrix TokenBundle::selector_dense(std::size_t i) const {
    if (i < 1 || i > N + 1) throw std::out_of_range("TokenBundle::selector_dense: index out of range");
    Matrix E(d, (N + 1) * d, 0.0);
    const std::size_t off = (i - 1) * d;
    for (std::size_t r = 0; r < d; ++r) E(r, off + r) = 1.0;
    return E;
}

void MoeSystem::validate() const {
    cfg.validate();
    if (bundle.d != cfg.d) throw std::invalid_argument("MoeSystem: bundle dim != cfg.d");
    if (bundle.N != cfg.N) throw std::invalid_argument("MoeSystem: bundle token count != cfg.N");
    if (prompts.rows.size() != cfg.L) throw std::invalid_argument("MoeSystem: prompt rows != L");
    for (const Vector& p : prompts.rows)
        if (p.size() != cfg.d) throw std::invalid_argument("MoeSystem: prompt dim != d");
}

namespace {

std::size_t expert_count(const MoeSystem& sys) { return sys.cfg.N + 1 + sys.cfg.L; }

void check_index(const MoeSystem& sys, std::size_t j) {
    if (j < 1 || j > expert_count(sys)) throw std::out_of_range("moe: expert index out of range");
}

// Logit for expert j: X^T E_{N+1}^T W^Q W^K^T (E_j X or p_j') / sqrt(d_k),
// evaluated as <W_Q^T t, W_K^T v>.
double logit_for(const MoeSystem& sys, std::size_t j) {
    const Vector q = matvec_t(sys.cfg.W_Q, sys.bundle.token(sys.bundle.N + 1));
    const Vector& target = j <= sys.cfg.N + 1 ? sys.bundle.token(j) : sys.prompts.rows[j - sys.cfg.N - 2];
    const Vector k = matvec_t(sys.cfg.W_K, target);
    return dot(q, k) / std::sqrt(static_cast<double>(sys.cfg.d_k));
}

}  // namespace

Vector expert_output(const MoeSystem& sys, std::size_t j) {
    sys.validate();
    check_index(sys, j);
    if (j <= sys.cfg.N + 1) return matvec_t(sys.cfg.W_V, sys.bundle.token(j));
    return matvec_t(sys.cfg.W_V, sys.prompts.rows[j - sys.cfg.N - 2]);
}

double gate_weight(const MoeSystem& sys, std::size_t j) {
    sys.validate();
    check_index(sys, j);
    const bool is_word = j <= sys.cfg.N + 1;
    const std::size_t lo = is_word ? 1 : sys.cfg.N + 2;
    const std::size_t hi = is_word ? sys.cfg.N + 1 : sys.cfg.N + 1 + sys.cfg.L;

    // Per-gate normalization over the expert's own block, shift-stabilized.
    double shift = logit_for(sys, lo);
    for (std::size_t k = lo + 1; k <= hi; ++k) shift = std::max(shift, logit_for(sys, k));
    double denom = 0.0;
    for (std::size_t k = lo; k <= hi; ++k) denom += std::exp(logit_for(sys, k) - shift);
    return std::exp(logit_for(sys, j) - shift) / denom;
}

Vector moe_output(const MoeSystem& sys) {
    sys.validate();
    Vector y(sys.cfg.d_v, 0.0);
    const double gate_scale = stable_tanh(sys.prompts.alpha);
    for (std::size_t j = 1; j <= expert_count(sys); ++j) {
        const double w = gate_weight(sys, j) * (j <= sys.cfg.N + 1 ? 1.0 : gate_scale);
        const Vector f = expert_output(sys, j);
        for (std::size_t c = 0; c < y.size(); ++c) y[c] += w * f[c];
    }
    return y;
}

namespace {

Matrix random_matrix(std::size_t r, std::size_t c, RngStream& rng) {
    Matrix m(r, c);
    for (double& x : m.data) x = rng.normal();
    return m;
}

Vector random_vector(std::size_t n, RngStream& rng) {
    Vector v(n);
    for (double& x : v) x = rng.normal();
    return v;
}

}  // namespace

EquivalenceReport check_equivalence(std::size_t trials, const EquivalenceBounds& bounds,
                                    RngStream& rng) {
    if (trials < 1) throw std::invalid_argument("check_equivalence: trials must be >= 1");
    EquivalenceReport report;
    report.trials = trials;

    for (std::size_t trial = 0; trial < trials; ++trial) {
        RngStream r = rng.split(trial);
        AttentionConfig cfg;
        cfg.d = 1 + r.next_u64() % bounds.max_d;
        cfg.d_k = 1 + r.next_u64() % bounds.max_d;
        cfg.d_v = 1 + r.next_u64() % bounds.max_d;
        cfg.N = r.next_u64() % (bounds.max_n + 1);
        cfg.L = 1 + r.next_u64() % bounds.max_l;
        cfg.W_Q = random_matrix(cfg.d, cfg.d_k, r);
        cfg.W_K = random_matrix(cfg.d, cfg.d_k, r);
        cfg.W_V = random_matrix(cfg.d, cfg.d_v, r);

        Vector t = random_vector(cfg.d, r);
        std::vector<Vector> X_tokens;
        for (std::size_t i = 0; i < cfg.N; ++i) X_tokens.push_back(random_vector(cfg.d, r));
        PromptBlock prompts;
        for (std::size_t i = 0; i < cfg.L; ++i) prompts.rows.push_back(random_vector(cfg.d, r));
        prompts.alpha = r.uniform(-2.0, 2.0);

        const Vector via_attention = zero_init_attention(t, X_tokens, prompts, cfg);
        MoeSystem sys{TokenBundle::concat(X_tokens, t), cfg, prompts};
        const Vector via_moe = moe_output(sys);

        for (std::size_t c = 0; c < via_attention.size(); ++c) {
            const double dev = std::fabs(via_attention[c] - via_moe[c]);
            if (dev > report.max_abs_deviation) {
                report.max_abs_deviation = dev;
                report.worst_trial = trial;
            }
        }
    }
    return report;
}

}  // namespace zial
