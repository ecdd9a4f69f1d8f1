#pragma once

#include <cstddef>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "acpd/config.hpp"
#include "acpd/data.hpp"
#include "acpd/simcluster.hpp"

namespace acpd {

/// Sparse Gaussian samples (each feature present with probability `density`),
/// normalized, labelled sign(x.w_true + noise * xi) for a seeded w_true.
Dataset generate_synthetic(const SyntheticSpec& spec);

/// Loads or generates the configured dataset (normalizing when enabled).
Dataset load_dataset(const ExperimentConfig& cfg, std::ostream& log);

/// Hyperparameters the chosen algorithm actually runs with: CoCoA+ uses B = K
/// and T = 1, single-machine SDCA additionally K = 1.
HyperParams effective_hyperparams(const ExperimentConfig& cfg);

struct GapReport {
    double target = 0.0;
    std::optional<std::size_t> rounds;
    std::optional<double> seconds;
};

struct ExperimentResult {
    SimTrace trace;
    std::vector<GapReport> reports;
    std::string output_path;
    bool clean = true;  // stop rule met without invariant violations
};

/// Output path after applying the ACPD_OUTPUT_DIR override.
std::string resolve_output_path(const std::string& configured);

/// Runs one configured experiment, writes its trace CSV (config echoed as
/// `# key = value` comment lines, then the header row) and prints a summary.
ExperimentResult run_experiment(const ExperimentConfig& cfg, std::ostream& log);

/// Parses `key=v1,v2,...`. Throws ConfigError on an unknown key or empty list.
std::pair<std::string, std::vector<std::string>> parse_sweep_arg(const std::string& arg);

struct SweepPoint {
    std::vector<std::pair<std::string, std::string>> assignment;
    ExperimentResult result;
};

/// Runs the Cartesian product of the sweep axes (first axis varies slowest),
/// one CSV per point plus `<stem>_summary.csv`. Every key is validated before
/// the first run starts. `jobs` > 1 runs points concurrently.
std::vector<SweepPoint> run_sweep(const ExperimentConfig& base,
                                  const std::vector<std::pair<std::string, std::vector<std::string>>>& axes,
                                  std::ostream& log, std::size_t jobs = 1);

}  // namespace acpd
