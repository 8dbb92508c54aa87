#include "zial/model.hpp"

#include <cmath>
#include <cstring>
#include <stdexcept>
#include <string>

namespace zial {

void PretrainedEnsemble::validate() const {
    const std::size_t n = A0.size();
    if (n == 0) throw std::invalid_argument("PretrainedEnsemble: N must be >= 1");
    if (a0.size() != n || eta0.size() != n)
        throw std::invalid_argument("PretrainedEnsemble: A0/a0/eta0 length mismatch");
    const std::size_t dim = B_bar.cols;
    if (B_bar.rows != dim || dim == 0)
        throw std::invalid_argument("PretrainedEnsemble: B_bar must be square d x d");
    if (C_bar.cols != dim || C_bar.rows == 0)
        throw std::invalid_argument("PretrainedEnsemble: C_bar must be d' x d");
    for (std::size_t j = 0; j < n; ++j) {
        if (A0[j].rows != dim || A0[j].cols != dim)
            throw std::invalid_argument("PretrainedEnsemble: A0 must be d x d");
        if (eta0[j].rows != C_bar.rows || eta0[j].cols != dim)
            throw std::invalid_argument("PretrainedEnsemble: eta0 must be d' x d");
        if (!all_finite(A0[j]) || !all_finite(eta0[j]) || !std::isfinite(a0[j]))
            throw std::invalid_argument("PretrainedEnsemble: non-finite entries");
    }
    if (!all_finite(B_bar) || !all_finite(C_bar))
        throw std::invalid_argument("PretrainedEnsemble: non-finite projections");
}

void ModelSpec::validate() const {
    ensemble.validate();
    if (G_star.size() == 0) throw std::invalid_argument("ModelSpec: empty true mixing measure");
    for (const Atom& a : G_star.atoms) {
        if (a.p.size() != d()) throw std::invalid_argument("ModelSpec: atom prompt dim != d");
        if (!all_finite(a.p) || !std::isfinite(a.b))
            throw std::invalid_argument("ModelSpec: non-finite atom");
        if (norm_inf(a.p) > box + 1e-12)
            throw std::invalid_argument("ModelSpec: atom prompt outside the box");
    }
    if (std::fabs(alpha_star) < alpha_min)
        throw std::invalid_argument("ModelSpec: |alpha_star| below alpha_min; prompts unidentifiable");
    if (noise_var < 0.0) throw std::invalid_argument("ModelSpec: negative noise variance");
    if (!(mu.lo < mu.hi)) throw std::invalid_argument("ModelSpec: empty input box");
    if (mode == PromptMode::nonlinear && !activation_smooth_injective(sigma_act))
        throw std::invalid_argument(
            "ModelSpec: nonlinear mode needs an injective twice-differentiable activation "
            "(tanh or identity); " + activation_name(sigma_act) + " is evaluation-only");
}

Vector pretrained_part(const PretrainedEnsemble& ens, const Vector& X) {
    if (X.size() != ens.d()) throw std::invalid_argument("pretrained_part: dim(X) != d");
    const std::size_t n = ens.N();
    Vector logits(n);
    for (std::size_t j = 0; j < n; ++j) logits[j] = dot(X, matvec(ens.A0[j], X)) + ens.a0[j];
    const Vector gates = softmax(logits);

    Vector out(ens.d_prime(), 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        const Vector h = matvec(ens.eta0[j], X);
        for (std::size_t c = 0; c < out.size(); ++c) out[c] += gates[j] * h[c];
    }
    return out;
}

namespace {

// Shared prompt-branch evaluation; `effective` holds p_j (linear) or
// sigma(p_j) (nonlinear).
Vector prompt_branch(const PretrainedEnsemble& ens, const std::vector<Vector>& effective,
                     const std::vector<double>& biases, double alpha, const Vector& X) {
    const std::size_t ell = effective.size();
    Vector logits(ell);
    for (std::size_t j = 0; j < ell; ++j)
        logits[j] = dot(matvec(ens.B_bar, effective[j]), X) + biases[j];
    const Vector gates = softmax(logits);

    Vector branch(ens.d_prime(), 0.0);
    for (std::size_t j = 0; j < ell; ++j) {
        const Vector cp = matvec(ens.C_bar, effective[j]);
        for (std::size_t c = 0; c < branch.size(); ++c) branch[c] += gates[j] * cp[c];
    }
    const double scale = stable_tanh(alpha);
    for (double& x : branch) x *= scale;
    return branch;
}

void check_measure(const ModelSpec& spec, const MixingMeasure& G) {
    if (G.size() == 0) throw std::invalid_argument("eval: empty mixing measure");
    for (const Atom& a : G.atoms)
        if (a.p.size() != spec.d()) throw std::invalid_argument("eval: atom prompt dim != d");
}

}  // namespace

Vector eval_f(const ModelSpec& spec, const MixingMeasure& G, double alpha, const Vector& X) {
    check_measure(spec, G);
    Vector out = pretrained_part(spec.ensemble, X);

    std::vector<Vector> effective;
    std::vector<double> biases;
    effective.reserve(G.size());
    biases.reserve(G.size());
    for (const Atom& a : G.atoms) {
        effective.push_back(a.p);
        biases.push_back(a.b);
    }
    const Vector branch = prompt_branch(spec.ensemble, effective, biases, alpha, X);
    for (std::size_t c = 0; c < out.size(); ++c) out[c] += branch[c];
    return out;
}

Vector eval_g(const ModelSpec& spec, const MixingMeasure& G, double alpha, const Vector& X) {
    check_measure(spec, G);
    Vector out = pretrained_part(spec.ensemble, X);

    std::vector<Vector> effective;
    std::vector<double> biases;
    effective.reserve(G.size());
    biases.reserve(G.size());
    for (const Atom& a : G.atoms) {
        effective.push_back(apply_activation(spec.sigma_act, a.p));
        biases.push_back(a.b);
    }
    const Vector branch = prompt_branch(spec.ensemble, effective, biases, alpha, X);
    for (std::size_t c = 0; c < out.size(); ++c) out[c] += branch[c];
    return out;
}

Vector eval_regression(const ModelSpec& spec, const MixingMeasure& G, double alpha,
                       const Vector& X) {
    return spec.mode == PromptMode::linear ? eval_f(spec, G, alpha, X)
                                           : eval_g(spec, G, alpha, X);
}

Dataset sample_dataset(const ModelSpec& spec, std::size_t n, RngStream& rng) {
    spec.validate();
    if (n < 1) throw std::invalid_argument("sample_dataset: n must be >= 1");

    Dataset ds;
    ds.inputs.reserve(n);
    ds.targets.reserve(n);
    ds.spec_fingerprint = spec_fingerprint(spec);
    const double sigma = std::sqrt(spec.noise_var);
    const std::size_t dim = spec.d();
    const std::size_t dp = spec.d_prime();

    for (std::size_t i = 0; i < n; ++i) {
        Vector X(dim);
        for (double& x : X) x = rng.uniform(spec.mu.lo, spec.mu.hi);
        Vector Y = eval_regression(spec, spec.G_star, spec.alpha_star, X);
        if (sigma > 0.0)
            for (std::size_t c = 0; c < dp; ++c) Y[c] += sigma * rng.normal();
        ds.inputs.push_back(std::move(X));
        ds.targets.push_back(std::move(Y));
    }
    return ds;
}

PretrainedEnsemble sample_ensemble(std::size_t d, std::size_t d_prime, std::size_t N,
                                   RngStream& rng) {
    if (d == 0 || d_prime == 0 || N == 0)
        throw std::invalid_argument("sample_ensemble: dimensions must be positive");
    const double sd = 1.0 / std::sqrt(static_cast<double>(d));
    auto draw = [&](std::size_t r, std::size_t c) {
        Matrix m(r, c);
        for (double& x : m.data) x = rng.normal(0.0, sd);
        return m;
    };
    PretrainedEnsemble ens;
    for (std::size_t j = 0; j < N; ++j) {
        ens.A0.push_back(draw(d, d));
        ens.a0.push_back(rng.normal(0.0, sd));
        ens.eta0.push_back(draw(d_prime, d));
    }
    ens.B_bar = draw(d, d);
    ens.C_bar = draw(d_prime, d);
    return ens;
}

MixingMeasure sample_truth(std::size_t L, std::size_t d, double box, double min_separation,
                           RngStream& rng) {
    if (L == 0) throw std::invalid_argument("sample_truth: L must be >= 1");
    MixingMeasure G;
    const std::size_t max_attempts = 100000;
    std::size_t attempts = 0;
    while (G.size() < L) {
        if (++attempts > max_attempts)
            throw std::runtime_error("sample_truth: could not satisfy min_separation in the box");
        Vector p(d);
        for (double& x : p) x = rng.uniform(-box, box);
        bool ok = true;
        for (const Atom& a : G.atoms) {
            Vector diff(d);
            for (std::size_t c = 0; c < d; ++c) diff[c] = p[c] - a.p[c];
            if (norm2(diff) < min_separation) {
                ok = false;
                break;
            }
        }
        if (ok) G.atoms.push_back({0.0, std::move(p)});
    }
    double mean_b = 0.0;
    for (Atom& a : G.atoms) {
        a.b = rng.uniform(-0.5, 0.5);
        mean_b += a.b;
    }
    mean_b /= static_cast<double>(L);
    for (Atom& a : G.atoms) a.b -= mean_b;
    return G;
}

namespace {

std::uint64_t fnv_step(std::uint64_t h, const void* bytes, std::size_t len) {
    const unsigned char* b = static_cast<const unsigned char*>(bytes);
    for (std::size_t i = 0; i < len; ++i) {
        h ^= b[i];
        h *= 0x100000001B3ull;
    }
    return h;
}

std::uint64_t fnv_double(std::uint64_t h, double x) {
    std::uint64_t bits;
    std::memcpy(&bits, &x, sizeof(bits));
    return fnv_step(h, &bits, sizeof(bits));
}

std::uint64_t fnv_matrix(std::uint64_t h, const Matrix& m) {
    h = fnv_step(h, &m.rows, sizeof(m.rows));
    h = fnv_step(h, &m.cols, sizeof(m.cols));
    for (double x : m.data) h = fnv_double(h, x);
    return h;
}

}  // namespace

std::uint64_t spec_fingerprint(const ModelSpec& spec) {
    std::uint64_t h = 0xCBF29CE484222325ull;
    for (const Matrix& m : spec.ensemble.A0) h = fnv_matrix(h, m);
    for (double x : spec.ensemble.a0) h = fnv_double(h, x);
    for (const Matrix& m : spec.ensemble.eta0) h = fnv_matrix(h, m);
    h = fnv_matrix(h, spec.ensemble.B_bar);
    h = fnv_matrix(h, spec.ensemble.C_bar);
    for (const Atom& a : spec.G_star.atoms) {
        h = fnv_double(h, a.b);
        for (double x : a.p) h = fnv_double(h, x);
    }
    h = fnv_double(h, spec.alpha_star);
    h = fnv_double(h, spec.noise_var);
    h = fnv_double(h, spec.mu.lo);
    h = fnv_double(h, spec.mu.hi);
    h = fnv_double(h, spec.box);
    const int mode_tag = spec.mode == PromptMode::linear ? 0 : 1;
    h = fnv_step(h, &mode_tag, sizeof(mode_tag));
    const int act_tag = static_cast<int>(spec.sigma_act);
    h = fnv_step(h, &act_tag, sizeof(act_tag));
    return h;
}

}  // namespace zial
