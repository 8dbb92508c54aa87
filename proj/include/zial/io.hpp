#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "zial/estimation.hpp"
#include "zial/model.hpp"
#include "zial/ratelab.hpp"

// File formats: dataset CSV, rate-table CSV, fit-result JSON, static SVG
// rate plots, and the run manifest written alongside every output set.

namespace zial {

// Shortest round-trip-exact decimal ("%.17g").
std::string format_g17(double x);

// Non-cryptographic content hash used to tie manifests to config files.
std::uint64_t fnv1a64(const std::string& bytes);
std::string fnv1a64_hex(const std::string& bytes);

std::string read_file(const std::filesystem::path& path);  // throws on failure

// Writes via a temp file in the same directory plus rename, so readers
// never observe a partial file.
void atomic_write_file(const std::filesystem::path& path, const std::string& contents);

// Dataset CSV: header x_1..x_d,y_1..y_d', one sample per line.
void write_dataset_csv(const std::filesystem::path& path, const Dataset& ds, std::size_t d,
                       std::size_t d_prime);
// Throws std::runtime_error with a line-numbered message on malformed input.
Dataset read_dataset_csv(const std::filesystem::path& path, std::size_t d, std::size_t d_prime);

// Rate CSV columns:
// n,replicate,voronoi_loss,alpha_err,l2_err,final_loss,converged,wall_ms
// wall_ms carries the row's deterministic optimizer work counter (objective
// evaluations), not a measured time: identical configs must produce
// byte-identical CSVs regardless of thread count or machine load.
std::string rate_table_csv(const RateTable& table);

std::string fit_result_json(const FitResult& fr);

// One SVG document with a log-log panel per metric; the fitted slope is
// annotated in each legend. Plain static SVG 1.1.
std::string rate_plots_svg(const RateTable& table);

struct RunManifest {
    std::string config_hash;       // fnv1a64 hex of the config file bytes
    std::string artifact_version;
    double wall_clock_seconds = 0.0;
    std::uint64_t master_seed = 0;  // effective seed after any override
    std::vector<std::string> outputs;
};

std::string run_manifest_json(const RunManifest& m);

// Manifest path for an output file: same directory, extension replaced
// with ".manifest.json".
std::filesystem::path manifest_path_for(const std::filesystem::path& output);

}  // namespace zial
