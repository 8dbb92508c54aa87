#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "zial/estimation.hpp"
#include "zial/model.hpp"
#include "zial/ratelab.hpp"

// Experiment configuration file: a JSON document with `model`, `truth`,
// `fit`, `rates` sections and a `master_seed`. Unknown keys are rejected
// before any computation.

namespace zial {

struct ExperimentConfig {
    // model
    std::size_t d = 2;
    std::size_t d_prime = 2;
    std::size_t N = 2;
    std::size_t L = 2;
    double alpha_star = 1.0;
    double noise_var = 0.01;
    PromptMode mode = PromptMode::linear;
    Activation activation = Activation::tanh;
    double box = 5.0;
    std::uint64_t ensemble_seed = 0;

    // truth: either explicit atoms or sampled
    bool truth_sampled = false;
    MixingMeasure truth_atoms;         // used when !truth_sampled
    std::uint64_t truth_seed = 0;      // used when truth_sampled
    double truth_min_separation = 1.0;

    FitConfig fit;
    std::vector<std::size_t> n_grid;
    std::size_t replicates = 20;
    std::size_t l2_mc_samples = 10000;
    std::uint64_t master_seed = 0;

    // Builds the frozen spec: samples the ensemble from ensemble_seed and,
    // if requested, the truth from truth_seed.
    ModelSpec build_model_spec() const;
    RateExperimentConfig build_rate_config() const;
};

// Parses and schema-validates; throws std::runtime_error with a pointered
// message on unknown keys, wrong types, or missing sections.
ExperimentConfig parse_experiment_config(const std::string& json_text);
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

}  // namespace zial
