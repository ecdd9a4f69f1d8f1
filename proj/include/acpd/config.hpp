#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "acpd/objective.hpp"
#include "acpd/simcluster.hpp"

namespace acpd {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class Algorithm { acpd, cocoaplus, sdca_single };

struct SyntheticSpec {
    std::size_t samples = 2000;
    std::size_t dim = 200;
    double density = 0.1;
    double noise = 0.1;
    std::uint64_t seed = 7;
};

struct ExperimentConfig {
    Algorithm algorithm = Algorithm::acpd;

    // dataset: either a LIBSVM file or the synthetic generator
    bool synthetic = true;
    SyntheticSpec synth;
    std::string data_path;
    std::size_t data_dim = 0;  // 0: max index in the file
    bool normalize = true;

    HyperParams hp;
    SimConfig sim;
    StopRule stop;

    std::vector<double> gap_targets{1e-2, 1e-4, 1e-6};
    double theta = 0.9;
    std::size_t sigma_iters = 100;

    std::string output = "trace.csv";
};

/// Parses flat `key = value` text. Blank lines and lines starting with '#'
/// are skipped. Unknown keys, malformed values, and invalid combinations
/// raise ConfigError.
ExperimentConfig parse_config(std::string_view text);
ExperimentConfig load_config(const std::string& path);

/// Applies one `key = value` assignment.
void set_config_value(ExperimentConfig& cfg, std::string_view key, std::string_view value);

bool is_config_key(std::string_view key);

/// Cross-field checks (one dataset source, stop rules present, K consistent).
void validate_config(const ExperimentConfig& cfg);

/// Every key with its resolved value, in a fixed order.
std::vector<std::pair<std::string, std::string>> effective_config(const ExperimentConfig& cfg);

/// One line per key with its meaning, for --help.
std::string config_key_help();

const char* to_string(Algorithm a);

}  // namespace acpd
