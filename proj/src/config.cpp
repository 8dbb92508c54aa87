#include "zial/config.hpp"

#include <set>
#include <stdexcept>

#include "json.hpp"

#include "zial/io.hpp"

namespace zial {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& where, const std::string& what) {
    throw std::runtime_error("config: " + where + ": " + what);
}

void reject_unknown(const json& obj, const std::string& where, const std::set<std::string>& known) {
    if (!obj.is_object()) fail(where, "expected a JSON object");
    for (auto it = obj.begin(); it != obj.end(); ++it)
        if (!known.count(it.key())) fail(where, "unknown key '" + it.key() + "'");
}

const json& require(const json& obj, const std::string& where, const std::string& key) {
    auto it = obj.find(key);
    if (it == obj.end()) fail(where, "missing key '" + key + "'");
    return *it;
}

double as_number(const json& v, const std::string& where) {
    if (!v.is_number()) fail(where, "expected a number");
    return v.get<double>();
}

std::size_t as_positive_int(const json& v, const std::string& where) {
    if (!v.is_number_unsigned() && !v.is_number_integer()) fail(where, "expected an integer");
    const long long n = v.get<long long>();
    if (n < 1) fail(where, "must be >= 1");
    return static_cast<std::size_t>(n);
}

std::uint64_t as_seed(const json& v, const std::string& where) {
    if (!v.is_number_unsigned() && !v.is_number_integer()) fail(where, "expected an integer seed");
    return v.get<std::uint64_t>();
}

}  // namespace

ExperimentConfig parse_experiment_config(const std::string& json_text) {
    json root;
    try {
        root = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw std::runtime_error(std::string("config: ") + e.what());
    }
    reject_unknown(root, "top level", {"model", "truth", "fit", "rates", "master_seed"});

    ExperimentConfig cfg;

    const json& model = require(root, "top level", "model");
    reject_unknown(model, "model",
                   {"d", "d_prime", "N", "L", "alpha_star", "noise_var", "mode", "activation",
                    "box", "ensemble_seed"});
    cfg.d = as_positive_int(require(model, "model", "d"), "model.d");
    cfg.d_prime = as_positive_int(require(model, "model", "d_prime"), "model.d_prime");
    cfg.N = as_positive_int(require(model, "model", "N"), "model.N");
    cfg.L = as_positive_int(require(model, "model", "L"), "model.L");
    cfg.alpha_star = as_number(require(model, "model", "alpha_star"), "model.alpha_star");
    cfg.noise_var = as_number(require(model, "model", "noise_var"), "model.noise_var");
    if (cfg.noise_var < 0.0) fail("model.noise_var", "must be >= 0");
    const std::string mode = require(model, "model", "mode").get<std::string>();
    if (mode == "linear")
        cfg.mode = PromptMode::linear;
    else if (mode == "nonlinear")
        cfg.mode = PromptMode::nonlinear;
    else
        fail("model.mode", "expected 'linear' or 'nonlinear'");
    try {
        cfg.activation = activation_from_name(require(model, "model", "activation").get<std::string>());
    } catch (const std::invalid_argument& e) {
        fail("model.activation", e.what());
    }
    cfg.box = as_number(require(model, "model", "box"), "model.box");
    if (!(cfg.box > 0.0)) fail("model.box", "must be positive");
    cfg.ensemble_seed = as_seed(require(model, "model", "ensemble_seed"), "model.ensemble_seed");

    const json& truth = require(root, "top level", "truth");
    reject_unknown(truth, "truth", {"atoms", "sample", "truth_seed", "min_separation"});
    const bool sampled = truth.value("sample", false);
    cfg.truth_sampled = sampled;
    if (sampled) {
        cfg.truth_seed = as_seed(require(truth, "truth", "truth_seed"), "truth.truth_seed");
        cfg.truth_min_separation =
            as_number(require(truth, "truth", "min_separation"), "truth.min_separation");
        if (!(cfg.truth_min_separation > 0.0)) fail("truth.min_separation", "must be positive");
        if (truth.count("atoms")) fail("truth", "give either explicit atoms or sample: true");
    } else {
        const json& atoms = require(truth, "truth", "atoms");
        if (!atoms.is_array() || atoms.empty()) fail("truth.atoms", "expected a nonempty array");
        for (const json& a : atoms) {
            reject_unknown(a, "truth.atoms[]", {"b", "p"});
            Atom atom;
            atom.b = as_number(require(a, "truth.atoms[]", "b"), "truth.atoms[].b");
            const json& p = require(a, "truth.atoms[]", "p");
            if (!p.is_array() || p.size() != cfg.d)
                fail("truth.atoms[].p", "expected an array of length model.d");
            for (const json& x : p) atom.p.push_back(as_number(x, "truth.atoms[].p[]"));
            cfg.truth_atoms.atoms.push_back(std::move(atom));
        }
        if (cfg.truth_atoms.size() != cfg.L)
            fail("truth.atoms", "atom count must equal model.L");
    }

    const json& fit = require(root, "top level", "fit");
    reject_unknown(fit, "fit",
                   {"L_prime", "restarts", "max_iters", "step_init", "grad_tol", "init_mode"});
    cfg.fit.L_prime = as_positive_int(require(fit, "fit", "L_prime"), "fit.L_prime");
    cfg.fit.restarts = as_positive_int(require(fit, "fit", "restarts"), "fit.restarts");
    cfg.fit.max_iters = as_positive_int(require(fit, "fit", "max_iters"), "fit.max_iters");
    cfg.fit.step_init = as_number(require(fit, "fit", "step_init"), "fit.step_init");
    cfg.fit.grad_tol = as_number(require(fit, "fit", "grad_tol"), "fit.grad_tol");
    const std::string init = require(fit, "fit", "init_mode").get<std::string>();
    if (init == "zero_like")
        cfg.fit.init_mode = InitMode::zero_like;
    else if (init == "random")
        cfg.fit.init_mode = InitMode::random;
    else
        fail("fit.init_mode", "expected 'zero_like' or 'random'");
    cfg.fit.box = cfg.box;

    const json& rates = require(root, "top level", "rates");
    reject_unknown(rates, "rates", {"n_grid", "replicates", "l2_mc_samples"});
    const json& grid = require(rates, "rates", "n_grid");
    if (!grid.is_array() || grid.empty()) fail("rates.n_grid", "expected a nonempty array");
    for (const json& n : grid) cfg.n_grid.push_back(as_positive_int(n, "rates.n_grid[]"));
    cfg.replicates = as_positive_int(require(rates, "rates", "replicates"), "rates.replicates");
    cfg.l2_mc_samples =
        as_positive_int(require(rates, "rates", "l2_mc_samples"), "rates.l2_mc_samples");

    cfg.master_seed = as_seed(require(root, "top level", "master_seed"), "master_seed");

    try {
        cfg.fit.validate();
    } catch (const std::invalid_argument& e) {
        fail("fit", e.what());
    }
    return cfg;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
    return parse_experiment_config(read_file(path));
}

ModelSpec ExperimentConfig::build_model_spec() const {
    ModelSpec spec;
    RngStream ens_rng(ensemble_seed, 0);
    spec.ensemble = sample_ensemble(d, d_prime, N, ens_rng);
    if (truth_sampled) {
        RngStream truth_rng(truth_seed, 1);
        spec.G_star = sample_truth(L, d, box, truth_min_separation, truth_rng);
    } else {
        spec.G_star = truth_atoms;
    }
    spec.alpha_star = alpha_star;
    spec.mode = mode;
    spec.sigma_act = activation;
    spec.noise_var = noise_var;
    spec.box = box;
    spec.validate();
    return spec;
}

RateExperimentConfig ExperimentConfig::build_rate_config() const {
    RateExperimentConfig rc;
    rc.spec = build_model_spec();
    rc.fit_cfg = fit;
    rc.n_grid = n_grid;
    rc.replicates = replicates;
    rc.l2_mc_samples = l2_mc_samples;
    rc.master_seed = master_seed;
    rc.validate();
    return rc;
}

}  // namespace zial
