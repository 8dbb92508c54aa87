#include "zial/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace zial {

void FitConfig::validate() const {
    if (L_prime < 1) throw std::invalid_argument("FitConfig: L_prime must be >= 1");
    if (restarts < 1) throw std::invalid_argument("FitConfig: restarts must be >= 1");
    if (max_iters < 1) throw std::invalid_argument("FitConfig: max_iters must be >= 1");
    if (!(step_init > 0.0)) throw std::invalid_argument("FitConfig: step_init must be positive");
    if (!(grad_tol > 0.0)) throw std::invalid_argument("FitConfig: grad_tol must be positive");
    if (!(box > 0.0)) throw std::invalid_argument("FitConfig: box must be positive");
}

double sse_loss(const ModelSpec& spec, const MixingMeasure& G, double alpha,
                const Dataset& data) {
    if (data.n() == 0) throw std::invalid_argument("sse_loss: empty dataset");
    double acc = 0.0;
    for (std::size_t i = 0; i < data.n(); ++i) {
        const Vector fx = eval_regression(spec, G, alpha, data.inputs[i]);
        if (fx.size() != data.targets[i].size())
            throw std::invalid_argument("sse_loss: target dim mismatch");
        for (std::size_t c = 0; c < fx.size(); ++c) {
            const double r = data.targets[i][c] - fx[c];
            acc += r * r;
        }
    }
    return acc;
}

std::vector<double> SseGradient::flatten() const {
    std::vector<double> out;
    out.reserve(b.size() + p.size() * (p.empty() ? 0 : p.front().size()) + 1);
    out.insert(out.end(), b.begin(), b.end());
    for (const Vector& v : p) out.insert(out.end(), v.begin(), v.end());
    out.push_back(alpha);
    return out;
}

namespace detail {

// Flattened-parameter objective with per-dataset precomputation. The frozen
// ensemble part never changes during a fit, so residual bases
// R_i = Y_i - pretrained_part(X_i) and gate directions BX_i = B_bar^T X_i
// are computed once. Parameter layout: [b_0..b_{l-1} | p_0 .. p_{l-1} | alpha].
class Objective {
  public:
    Objective(const ModelSpec& spec, const Dataset& data, std::size_t ell)
        : d_(spec.d()),
          dp_(spec.d_prime()),
          ell_(ell),
          n_(data.n()),
          nonlinear_(spec.mode == PromptMode::nonlinear),
          act_(spec.sigma_act),
          B_(spec.ensemble.B_bar),
          C_(spec.ensemble.C_bar) {
        if (n_ == 0) throw std::invalid_argument("fit: empty dataset");
        base_resid_.reserve(n_);
        bx_.reserve(n_);
        for (std::size_t i = 0; i < n_; ++i) {
            const Vector pre = pretrained_part(spec.ensemble, data.inputs[i]);
            if (data.targets[i].size() != dp_)
                throw std::invalid_argument("fit: target dim mismatch");
            Vector rb(dp_);
            for (std::size_t c = 0; c < dp_; ++c) rb[c] = data.targets[i][c] - pre[c];
            base_resid_.push_back(std::move(rb));
            bx_.push_back(matvec_t(B_, data.inputs[i]));
        }
    }

    std::size_t dim() const { return ell_ * (1 + d_) + 1; }
    std::size_t ell() const { return ell_; }
    std::size_t prompt_dim() const { return d_; }

    double b_of(const std::vector<double>& x, std::size_t j) const { return x[j]; }
    const double* p_of(const std::vector<double>& x, std::size_t j) const {
        return x.data() + ell_ + j * d_;
    }

    // Mean squared residual norm (SSE / n) and, if grad != nullptr, its
    // gradient in the same scaling. The gate coordinate x.back() is alpha
    // when tau_param is false and tau = tanh(alpha) when true: the descent
    // walks tau-space, where the gate gradient does not flatten out as
    // tanh saturates, while the public gradient stays in alpha-space.
    double value(const std::vector<double>& x, std::vector<double>* grad, bool tau_param) {
        const double tau = tau_param ? x.back() : std::tanh(x.back());

        // Per-iteration atom precomputation.
        eff_.assign(ell_, Vector(d_));
        dsig_.assign(ell_, Vector(d_, 1.0));
        cp_.assign(ell_, Vector(dp_));
        for (std::size_t j = 0; j < ell_; ++j) {
            const double* pj = p_of(x, j);
            for (std::size_t c = 0; c < d_; ++c) {
                const double v = pj[c];
                eff_[j][c] = nonlinear_ ? apply_activation(act_, v) : v;
                if (nonlinear_) dsig_[j][c] = activation_derivative(act_, v);
            }
            cp_[j] = matvec(C_, eff_[j]);
        }

        if (grad) grad->assign(dim(), 0.0);
        double loss = 0.0;
        std::vector<double> z(ell_), w(ell_);
        Vector m(dp_), r(dp_), ctr(d_);

        for (std::size_t i = 0; i < n_; ++i) {
            const Vector& bx = bx_[i];
            const Vector& rb = base_resid_[i];

            double zmax = -1e300;
            for (std::size_t j = 0; j < ell_; ++j) {
                double acc = b_of(x, j);
                for (std::size_t c = 0; c < d_; ++c) acc += eff_[j][c] * bx[c];
                z[j] = acc;
                zmax = std::max(zmax, acc);
            }
            double zsum = 0.0;
            for (std::size_t j = 0; j < ell_; ++j) {
                w[j] = std::exp(z[j] - zmax);
                zsum += w[j];
            }
            for (std::size_t j = 0; j < ell_; ++j) w[j] /= zsum;

            std::fill(m.begin(), m.end(), 0.0);
            for (std::size_t j = 0; j < ell_; ++j)
                for (std::size_t c = 0; c < dp_; ++c) m[c] += w[j] * cp_[j][c];

            double rm = 0.0;
            for (std::size_t c = 0; c < dp_; ++c) {
                r[c] = tau * m[c] - rb[c];  // f(X) - Y
                loss += r[c] * r[c];
                rm += r[c] * m[c];
            }
            if (!grad) continue;

            // ctr = C^T r, shared by all atoms' prompt gradients.
            std::fill(ctr.begin(), ctr.end(), 0.0);
            for (std::size_t rr = 0; rr < dp_; ++rr) {
                const double* crow = C_.data.data() + rr * d_;
                for (std::size_t c = 0; c < d_; ++c) ctr[c] += crow[c] * r[rr];
            }

            std::vector<double>& g = *grad;
            g.back() += 2.0 * rm;
            for (std::size_t j = 0; j < ell_; ++j) {
                double rcp = 0.0;
                for (std::size_t c = 0; c < dp_; ++c) rcp += r[c] * cp_[j][c];
                const double coef = rcp - rm;  // r . (C p_j - m)
                const double scale = 2.0 * tau * w[j];
                g[j] += scale * coef;
                double* gp = g.data() + ell_ + j * d_;
                if (nonlinear_) {
                    for (std::size_t c = 0; c < d_; ++c)
                        gp[c] += scale * dsig_[j][c] * (coef * bx[c] + ctr[c]);
                } else {
                    for (std::size_t c = 0; c < d_; ++c) gp[c] += scale * (coef * bx[c] + ctr[c]);
                }
            }
        }

        const double inv_n = 1.0 / static_cast<double>(n_);
        if (grad) {
            if (!tau_param) grad->back() *= 1.0 - tau * tau;  // chain rule back to alpha
            for (double& gv : *grad) gv *= inv_n;
        }
        return loss * inv_n;
    }

  private:
    std::size_t d_, dp_, ell_, n_;
    bool nonlinear_;
    Activation act_;
    Matrix B_, C_;
    std::vector<Vector> base_resid_;  // Y_i - pretrained_part(X_i)
    std::vector<Vector> bx_;          // B^T X_i
    std::vector<Vector> eff_, dsig_, cp_;
};

}  // namespace detail

namespace {

void require_differentiable(const ModelSpec& spec, const char* what) {
    if (spec.mode == PromptMode::nonlinear && !activation_smooth_injective(spec.sigma_act))
        throw std::invalid_argument(std::string(what) +
                                    ": nonlinear mode needs a smooth activation (tanh or identity)");
}

std::vector<double> pack(const MixingMeasure& G, double alpha, std::size_t d) {
    const std::size_t ell = G.size();
    std::vector<double> x(ell * (1 + d) + 1, 0.0);
    for (std::size_t j = 0; j < ell; ++j) {
        x[j] = G.atoms[j].b;
        for (std::size_t c = 0; c < d; ++c) x[ell + j * d + c] = G.atoms[j].p[c];
    }
    x.back() = alpha;
    return x;
}

MixingMeasure unpack(const std::vector<double>& x, std::size_t ell, std::size_t d) {
    MixingMeasure G;
    G.atoms.resize(ell);
    for (std::size_t j = 0; j < ell; ++j) {
        G.atoms[j].b = x[j];
        G.atoms[j].p.assign(x.begin() + ell + j * d, x.begin() + ell + (j + 1) * d);
    }
    return G;
}

// The descent walks tau = tanh(alpha); keep it strictly inside (-1, 1) so
// atanh stays finite on the way back out.
constexpr double kTauMax = 1.0 - 1e-12;

// Clamp prompt coordinates onto the box and the gate coordinate onto the
// open tau interval; biases stay free.
void project(std::vector<double>& x, std::size_t ell, std::size_t d, double box) {
    for (std::size_t c = ell; c < ell + ell * d; ++c) x[c] = std::clamp(x[c], -box, box);
    x.back() = std::clamp(x.back(), -kTauMax, kTauMax);
}

struct DescentOutcome {
    std::vector<double> x;
    double mean_loss = 0.0;
    std::size_t iterations = 0;
    bool converged = false;
    std::uint64_t evals = 0;
    std::vector<double> trace;
};

// Projected gradient descent with Armijo backtracking. The trial step is
// the Barzilai-Borwein (spectral) length when the curvature estimate is
// positive, which removes the slow tail of plain gradient descent; the
// backtracking safeguard keeps every accepted step a strict decrease.
DescentOutcome descend(detail::Objective& obj, std::vector<double> x, const FitConfig& cfg) {
    constexpr double kArmijo = 1e-4;
    constexpr double kMinStep = 1e-18;
    constexpr double kMaxStep = 1e8;
    const std::size_t ell = obj.ell();
    const std::size_t d = obj.prompt_dim();

    DescentOutcome out;
    project(x, ell, d, cfg.box);
    std::vector<double> grad, prev_grad, trial(x.size()), pg(x.size());
    double fx = obj.value(x, &grad, true);
    ++out.evals;
    if (cfg.record_trace) out.trace.push_back(fx);
    double step = cfg.step_init;

    // Plateau guard; the burn-in keeps it away from the slow
    // symmetry-breaking phase of zero-like starts.
    constexpr std::size_t kWindow = 100;
    constexpr std::size_t kBurnIn = 500;
    double window_start_loss = fx;

    for (std::size_t iter = 0; iter < cfg.max_iters; ++iter) {
        // Unit-step projected gradient; equals the raw gradient away from
        // the box faces.
        for (std::size_t c = 0; c < x.size(); ++c) trial[c] = x[c] - grad[c];
        project(trial, ell, d, cfg.box);
        double pg_norm2 = 0.0;
        for (std::size_t c = 0; c < x.size(); ++c) {
            pg[c] = x[c] - trial[c];
            pg_norm2 += pg[c] * pg[c];
        }
        if (std::sqrt(pg_norm2) <= cfg.grad_tol) {
            out.converged = true;
            out.iterations = iter;
            break;
        }

        bool accepted = false;
        double t = step;
        double ft = fx;
        while (t >= kMinStep) {
            for (std::size_t c = 0; c < x.size(); ++c) trial[c] = x[c] - t * grad[c];
            project(trial, ell, d, cfg.box);
            double move2 = 0.0;
            for (std::size_t c = 0; c < x.size(); ++c) {
                const double mv = trial[c] - x[c];
                move2 += mv * mv;
            }
            ft = obj.value(trial, nullptr, true);
            ++out.evals;
            if (ft <= fx - (kArmijo / t) * move2 && ft < fx) {
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if (!accepted) {
            // No decrease representable: numerically stationary.
            out.converged = true;
            out.iterations = iter;
            break;
        }

        prev_grad.swap(grad);
        fx = obj.value(trial, &grad, true);
        ++out.evals;
        if (cfg.record_trace) out.trace.push_back(fx);

        // BB1 step from the accepted move: (s.s)/(s.y).
        double ss = 0.0, sy = 0.0;
        for (std::size_t c = 0; c < x.size(); ++c) {
            const double s = trial[c] - x[c];
            ss += s * s;
            sy += s * (grad[c] - prev_grad[c]);
        }
        step = sy > 1e-300 ? std::clamp(ss / sy, 1e-12, kMaxStep) : std::min(t * 2.0, kMaxStep);

        x.swap(trial);
        out.iterations = iter + 1;

        if (fx <= 1e-18) {  // exact fit to working precision
            out.converged = true;
            break;
        }
        if ((iter + 1) % kWindow == 0) {
            if (iter + 1 >= kBurnIn && cfg.plateau_rel > 0.0 &&
                window_start_loss - fx <= cfg.plateau_rel * window_start_loss) {
                out.converged = true;
                break;
            }
            window_start_loss = fx;
        }
    }

    out.x = std::move(x);
    out.mean_loss = fx;
    return out;
}

// x0 carries alpha in its last slot; the descent itself runs in tau-space.
FitResult run_single(const ModelSpec& spec, detail::Objective& obj, const FitConfig& cfg,
                     std::vector<double> x0, std::size_t n) {
    x0.back() = std::tanh(x0.back());
    DescentOutcome res = descend(obj, std::move(x0), cfg);
    FitResult fr;
    fr.G_hat = unpack(res.x, cfg.L_prime, spec.d());
    fr.alpha_hat = std::atanh(std::clamp(res.x.back(), -kTauMax, kTauMax));
    fr.final_loss = res.mean_loss * static_cast<double>(n);
    fr.iterations_used = res.iterations;
    fr.converged = res.converged;
    fr.total_evals = res.evals;
    fr.loss_trace = std::move(res.trace);
    return fr;
}

}  // namespace

SseGradient sse_gradient(const ModelSpec& spec, const MixingMeasure& G, double alpha,
                         const Dataset& data) {
    require_differentiable(spec, "sse_gradient");
    detail::Objective obj(spec, data, G.size());
    std::vector<double> x = pack(G, alpha, spec.d());
    std::vector<double> grad;
    obj.value(x, &grad, false);

    const double n = static_cast<double>(data.n());
    SseGradient out;
    out.b.resize(G.size());
    out.p.assign(G.size(), Vector(spec.d()));
    for (std::size_t j = 0; j < G.size(); ++j) {
        out.b[j] = grad[j] * n;
        for (std::size_t c = 0; c < spec.d(); ++c) out.p[j][c] = grad[G.size() + j * spec.d() + c] * n;
    }
    out.alpha = grad.back() * n;
    return out;
}

FitResult fit(const ModelSpec& spec, const Dataset& data, const FitConfig& cfg, RngStream& rng) {
    cfg.validate();
    spec.validate();
    require_differentiable(spec, "fit");
    detail::Objective obj(spec, data, cfg.L_prime);

    const std::size_t ell = cfg.L_prime;
    const std::size_t d = spec.d();
    FitResult best;
    bool have_best = false;
    std::uint64_t total_evals = 0;

    for (std::size_t restart = 0; restart < cfg.restarts; ++restart) {
        RngStream r = rng.split(restart);
        std::vector<double> x0(ell * (1 + d) + 1, 0.0);
        if (cfg.init_mode == InitMode::zero_like) {
            // Prompts start as Normal(0, 1e-4) jitter around zero (variance
            // 1e-4), alpha at zero; biases at zero in both modes.
            for (std::size_t c = ell; c < ell + ell * d; ++c) x0[c] = r.normal(0.0, 1e-2);
            x0.back() = 0.0;
        } else {
            for (std::size_t c = ell; c < ell + ell * d; ++c) x0[c] = r.uniform(-cfg.box, cfg.box);
            x0.back() = r.uniform(-2.0, 2.0);
        }

        FitResult fr = run_single(spec, obj, cfg, std::move(x0), data.n());
        fr.restart_index = restart;
        total_evals += fr.total_evals;
        if (!have_best || fr.final_loss < best.final_loss) {
            best = fr;
            have_best = true;
        }
    }
    best.total_evals = total_evals;
    return best;
}

FitResult fit_from(const ModelSpec& spec, const Dataset& data, const FitConfig& cfg,
                   const MixingMeasure& G0, double alpha0) {
    cfg.validate();
    spec.validate();
    require_differentiable(spec, "fit_from");
    if (G0.size() != cfg.L_prime)
        throw std::invalid_argument("fit_from: starting measure must have L_prime atoms");
    detail::Objective obj(spec, data, cfg.L_prime);
    FitResult fr = run_single(spec, obj, cfg, pack(G0, alpha0, spec.d()), data.n());
    fr.restart_index = 0;
    return fr;
}

}  // namespace zial
