// zial: zero-initialized attention laboratory.
//
// Subcommands:
//   check-equivalence  randomized attention-vs-MoE agreement check
//   generate           synthesize a dataset CSV from a config
//   fit                least-squares prompt/gating fit, JSON result
//   rates              convergence-rate sweep: CSV table + SVG plots
//
// Exit codes: 0 success, 1 scientific-check failure, 2 usage/input error,
// 3 validity warning.

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "zial/config.hpp"
#include "zial/io.hpp"
#include "zial/moe.hpp"
#include "zial/version.hpp"
#include "zial/voronoi.hpp"

namespace fs = std::filesystem;
using namespace zial;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitCheckFailed = 1;
constexpr int kExitUsage = 2;
constexpr int kExitWarning = 3;

constexpr double kEquivalenceTol = 1e-10;

struct Timer {
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    }
};

std::optional<std::uint64_t> env_seed_override() {
    const char* env = std::getenv("ZIAL_SEED");
    if (!env || !*env) return std::nullopt;
    try {
        std::size_t used = 0;
        const unsigned long long v = std::stoull(env, &used);
        if (used != std::string(env).size()) throw std::invalid_argument("trailing junk");
        return static_cast<std::uint64_t>(v);
    } catch (const std::exception&) {
        throw std::runtime_error("ZIAL_SEED must be an unsigned integer");
    }
}

void refuse_overwrite(const fs::path& path, bool force) {
    if (!force && fs::exists(path))
        throw std::runtime_error("refusing to overwrite " + path.string() + " (use --force)");
}

void write_manifest(const fs::path& primary_output, const std::string& config_bytes,
                    std::uint64_t master_seed, double wall_seconds,
                    const std::vector<std::string>& outputs) {
    RunManifest m;
    m.config_hash = fnv1a64_hex(config_bytes);
    m.artifact_version = kVersion;
    m.wall_clock_seconds = wall_seconds;
    m.master_seed = master_seed;
    m.outputs = outputs;
    atomic_write_file(manifest_path_for(primary_output), run_manifest_json(m));
}

int cmd_check_equivalence(std::size_t trials, std::uint64_t seed, const EquivalenceBounds& bounds) {
    RngStream rng(seed, 0);
    const EquivalenceReport report = check_equivalence(trials, bounds, rng);
    const bool pass = report.max_abs_deviation <= kEquivalenceTol;
    std::cout << "trials=" << report.trials << " max_abs_deviation="
              << format_g17(report.max_abs_deviation) << " tolerance=" << kEquivalenceTol << " "
              << (pass ? "PASS" : "FAIL") << "\n";
    return pass ? kExitOk : kExitCheckFailed;
}

int cmd_generate(const fs::path& config_path, std::size_t n, const fs::path& out, bool force,
                 std::optional<std::uint64_t> seed_flag) {
    Timer timer;
    const std::string config_bytes = read_file(config_path);
    ExperimentConfig cfg = parse_experiment_config(config_bytes);
    if (auto env = env_seed_override()) cfg.master_seed = *env;
    if (seed_flag) cfg.master_seed = *seed_flag;

    refuse_overwrite(out, force);
    const ModelSpec spec = cfg.build_model_spec();
    RngStream data_rng = RngStream(cfg.master_seed, 0).split(n).split(0);
    const Dataset ds = sample_dataset(spec, n, data_rng);
    write_dataset_csv(out, ds, spec.d(), spec.d_prime());
    write_manifest(out, config_bytes, cfg.master_seed, timer.seconds(), {out.string()});
    std::cout << "wrote " << out.string() << " (" << ds.n() << " samples)\n";
    return kExitOk;
}

int cmd_fit(const fs::path& config_path, const std::optional<fs::path>& data_path,
            std::optional<std::size_t> generate_n, const fs::path& out, bool force,
            const std::optional<std::string>& init_override,
            std::optional<std::size_t> lprime_override, std::optional<std::uint64_t> seed_flag) {
    Timer timer;
    const std::string config_bytes = read_file(config_path);
    ExperimentConfig cfg = parse_experiment_config(config_bytes);
    if (auto env = env_seed_override()) cfg.master_seed = *env;
    if (seed_flag) cfg.master_seed = *seed_flag;
    if (init_override) {
        if (*init_override == "zero_like")
            cfg.fit.init_mode = InitMode::zero_like;
        else if (*init_override == "random")
            cfg.fit.init_mode = InitMode::random;
        else
            throw std::runtime_error("--init expects 'zero_like' or 'random'");
    }
    if (lprime_override) cfg.fit.L_prime = *lprime_override;
    cfg.fit.validate();

    if (!data_path && !generate_n)
        throw std::runtime_error("fit needs --data FILE or --generate N");
    if (data_path && generate_n)
        throw std::runtime_error("give either --data or --generate, not both");

    refuse_overwrite(out, force);
    const ModelSpec spec = cfg.build_model_spec();

    Dataset data;
    if (data_path) {
        data = read_dataset_csv(*data_path, spec.d(), spec.d_prime());
    } else {
        RngStream data_rng = RngStream(cfg.master_seed, 0).split(*generate_n).split(0);
        data = sample_dataset(spec, *generate_n, data_rng);
    }

    RngStream fit_rng = RngStream(cfg.master_seed, 0).split(data.n()).split(1);
    const FitResult fr = fit(spec, data, cfg.fit, fit_rng);

    atomic_write_file(out, fit_result_json(fr));
    write_manifest(out, config_bytes, cfg.master_seed, timer.seconds(), {out.string()});

    const LossBreakdown d = voronoi_loss(fr.G_hat, spec.G_star);
    std::cout << "final_loss=" << format_g17(fr.final_loss)
              << " voronoi_loss=" << format_g17(d.total)
              << " alpha_hat=" << format_g17(fr.alpha_hat)
              << " iterations=" << fr.iterations_used
              << " converged=" << (fr.converged ? "true" : "false") << "\n";
    std::cout << "wrote " << out.string() << "\n";
    return kExitOk;
}

int cmd_rates(const fs::path& config_path, const fs::path& out,
              const std::optional<fs::path>& plot, std::size_t threads, bool force,
              std::optional<std::uint64_t> seed_flag) {
    Timer timer;
    const std::string config_bytes = read_file(config_path);
    ExperimentConfig cfg = parse_experiment_config(config_bytes);
    if (auto env = env_seed_override()) cfg.master_seed = *env;
    if (seed_flag) cfg.master_seed = *seed_flag;

    refuse_overwrite(out, force);
    if (plot) refuse_overwrite(*plot, force);

    const RateExperimentConfig rc = cfg.build_rate_config();
    const RateTable table = run_rate_experiment(rc, threads);

    std::vector<std::string> outputs{out.string()};
    atomic_write_file(out, rate_table_csv(table));
    if (plot) {
        atomic_write_file(*plot, rate_plots_svg(table));
        outputs.push_back(plot->string());
    }
    write_manifest(out, config_bytes, cfg.master_seed, timer.seconds(), outputs);

    auto show = [](const char* name, const SlopeFit& s) {
        if (s.defined)
            std::cout << name << "=" << format_g17(s.slope) << " (R^2=" << format_g17(s.r_squared)
                      << ")\n";
        else
            std::cout << name << "=undefined\n";
    };
    show("slope_D", table.slope_D);
    show("slope_alpha", table.slope_alpha);
    show("slope_l2", table.slope_l2);
    std::cout << "wall_seconds=" << format_g17(timer.seconds()) << "\n";
    for (const std::string& w : table.warnings) std::cerr << "warning: " << w << "\n";
    return table.warnings.empty() ? kExitOk : kExitWarning;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"zero-initialized attention laboratory"};
    app.require_subcommand(1);
    app.failure_message(CLI::FailureMessage::help);

    // check-equivalence
    auto* eq = app.add_subcommand("check-equivalence",
                                  "compare zero-init attention against its mixture-of-experts form");
    std::size_t eq_trials = 100;
    std::uint64_t eq_seed = 0;
    EquivalenceBounds bounds;
    eq->add_option("--trials", eq_trials, "number of randomized trials")->required();
    eq->add_option("--seed", eq_seed, "random seed")->required();
    eq->add_option("--max-n", bounds.max_n, "max word-token count (default 8)");
    eq->add_option("--max-l", bounds.max_l, "max prompt count (default 4)");
    eq->add_option("--dim", bounds.max_d, "max of d, d_k, d_v (default 16)");

    // generate
    auto* gen = app.add_subcommand("generate", "synthesize a dataset CSV");
    fs::path gen_config, gen_out;
    std::size_t gen_n = 0;
    bool gen_force = false;
    std::optional<std::uint64_t> gen_seed;
    gen->add_option("--config", gen_config, "experiment config JSON")->required();
    gen->add_option("--n", gen_n, "sample count")->required();
    gen->add_option("--out", gen_out, "output CSV path")->required();
    gen->add_option("--seed", gen_seed, "override master_seed");
    gen->add_flag("--force", gen_force, "overwrite existing outputs");

    // fit
    auto* fit_cmd = app.add_subcommand("fit", "least-squares prompt and gating-factor fit");
    fs::path fit_config, fit_out;
    std::optional<fs::path> fit_data;
    std::optional<std::size_t> fit_generate, fit_lprime;
    std::optional<std::string> fit_init;
    std::optional<std::uint64_t> fit_seed;
    bool fit_force = false;
    fit_cmd->add_option("--config", fit_config, "experiment config JSON")->required();
    fit_cmd->add_option("--data", fit_data, "dataset CSV");
    fit_cmd->add_option("--generate", fit_generate, "synthesize this many samples instead of --data");
    fit_cmd->add_option("--out", fit_out, "output JSON path")->required();
    fit_cmd->add_option("--init", fit_init, "override init mode: zero_like | random");
    fit_cmd->add_option("--lprime", fit_lprime, "override fitted atom count L'");
    fit_cmd->add_option("--seed", fit_seed, "override master_seed");
    fit_cmd->add_flag("--force", fit_force, "overwrite existing outputs");

    // rates
    auto* rates = app.add_subcommand("rates", "convergence-rate sweep over sample sizes");
    fs::path rates_config, rates_out;
    std::optional<fs::path> rates_plot;
    std::size_t rates_threads = 0;
    std::optional<std::uint64_t> rates_seed;
    bool rates_force = false;
    rates->add_option("--config", rates_config, "experiment config JSON")->required();
    rates->add_option("--out", rates_out, "output CSV path")->required();
    rates->add_option("--plot", rates_plot, "output SVG path");
    rates->add_option("--threads", rates_threads, "worker threads (default: core count)");
    rates->add_option("--seed", rates_seed, "override master_seed");
    rates->add_flag("--force", rates_force, "overwrite existing outputs");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (eq->parsed()) {
            if (eq_trials < 1) {
                std::cerr << "usage error: --trials must be >= 1\n" << eq->help();
                return kExitUsage;
            }
            if (bounds.max_l < 1 || bounds.max_d < 1) {
                std::cerr << "usage error: --max-l and --dim must be >= 1\n" << eq->help();
                return kExitUsage;
            }
            return cmd_check_equivalence(eq_trials, eq_seed, bounds);
        }
        if (gen->parsed()) {
            if (gen_n < 1) {
                std::cerr << "usage error: --n must be >= 1\n";
                return kExitUsage;
            }
            return cmd_generate(gen_config, gen_n, gen_out, gen_force, gen_seed);
        }
        if (fit_cmd->parsed())
            return cmd_fit(fit_config, fit_data, fit_generate, fit_out, fit_force, fit_init,
                           fit_lprime, fit_seed);
        if (rates->parsed())
            return cmd_rates(rates_config, rates_out, rates_plot, rates_threads, rates_force,
                             rates_seed);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }
    return kExitUsage;
}
