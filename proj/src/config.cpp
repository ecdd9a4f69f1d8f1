#include "acpd/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>

namespace acpd {

const char* to_string(Algorithm a) {
    switch (a) {
        case Algorithm::acpd: return "acpd";
        case Algorithm::cocoaplus: return "cocoaplus";
        case Algorithm::sdca_single: return "sdca_single";
    }
    return "unknown";
}

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value, const char* expected) {
    throw ConfigError("config key '" + std::string(key) + "': cannot read '" + std::string(value) + "' as " +
                      expected);
}

double to_double(std::string_view key, std::string_view v) {
    double out = 0.0;
    std::string_view t = v;
    if (!t.empty() && t.front() == '+') t.remove_prefix(1);
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), out);
    if (t.empty() || ec != std::errc{} || ptr != t.data() + t.size() || std::isnan(out)) bad_value(key, v, "a number");
    return out;
}

std::uint64_t to_u64(std::string_view key, std::string_view v) {
    std::uint64_t out = 0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (v.empty() || ec != std::errc{} || ptr != v.data() + v.size()) bad_value(key, v, "a non-negative integer");
    return out;
}

bool to_bool(std::string_view key, std::string_view v) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    bad_value(key, v, "a boolean");
}

std::vector<double> to_list(std::string_view key, std::string_view v) {
    std::vector<double> out;
    if (trim(v).empty()) return out;
    std::size_t pos = 0;
    while (pos <= v.size()) {
        const auto comma = v.find(',', pos);
        const auto item = trim(v.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos));
        out.push_back(to_double(key, item));
        if (comma == std::string_view::npos) break;
        pos = comma + 1;
    }
    return out;
}

std::string fmt(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::string fmt_list(const std::vector<double>& xs) {
    std::string out;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (i) out += ',';
        out += fmt(xs[i]);
    }
    return out;
}

struct Key {
    const char* name;
    const char* help;
    std::function<void(ExperimentConfig&, std::string_view key, std::string_view value)> set;
    std::function<std::string(const ExperimentConfig&)> get;
};

#define ACPD_DOUBLE(field) \
    [](ExperimentConfig& c, std::string_view k, std::string_view v) { c.field = to_double(k, v); }, \
    [](const ExperimentConfig& c) { return fmt(c.field); }
#define ACPD_SIZE(field) \
    [](ExperimentConfig& c, std::string_view k, std::string_view v) { c.field = static_cast<std::size_t>(to_u64(k, v)); }, \
    [](const ExperimentConfig& c) { return std::to_string(c.field); }
#define ACPD_U64(field) \
    [](ExperimentConfig& c, std::string_view k, std::string_view v) { c.field = to_u64(k, v); }, \
    [](const ExperimentConfig& c) { return std::to_string(c.field); }

const std::vector<Key>& keys() {
    static const std::vector<Key> table = {
        {"algorithm", "acpd | cocoaplus | sdca_single",
         [](ExperimentConfig& c, std::string_view k, std::string_view v) {
             if (v == "acpd") c.algorithm = Algorithm::acpd;
             else if (v == "cocoaplus") c.algorithm = Algorithm::cocoaplus;
             else if (v == "sdca_single") c.algorithm = Algorithm::sdca_single;
             else bad_value(k, v, "an algorithm name");
         },
         [](const ExperimentConfig& c) { return std::string(to_string(c.algorithm)); }},
        {"data.source", "synthetic | libsvm",
         [](ExperimentConfig& c, std::string_view k, std::string_view v) {
             if (v == "synthetic") c.synthetic = true;
             else if (v == "libsvm") c.synthetic = false;
             else bad_value(k, v, "a dataset source");
         },
         [](const ExperimentConfig& c) { return std::string(c.synthetic ? "synthetic" : "libsvm"); }},
        {"data.path", "LIBSVM file (data.source = libsvm)",
         [](ExperimentConfig& c, std::string_view, std::string_view v) { c.data_path = std::string(v); },
         [](const ExperimentConfig& c) { return c.data_path; }},
        {"data.dim", "feature dimension override for LIBSVM input, 0 = max index seen", ACPD_SIZE(data_dim)},
        {"data.normalize", "scale samples with norm > 1 onto the unit sphere (true/false)",
         [](ExperimentConfig& c, std::string_view k, std::string_view v) { c.normalize = to_bool(k, v); },
         [](const ExperimentConfig& c) { return std::string(c.normalize ? "true" : "false"); }},
        {"synthetic.n", "synthetic sample count", ACPD_SIZE(synth.samples)},
        {"synthetic.d", "synthetic feature dimension", ACPD_SIZE(synth.dim)},
        {"synthetic.density", "probability a feature is present, in (0, 1]", ACPD_DOUBLE(synth.density)},
        {"synthetic.noise", "label noise scale", ACPD_DOUBLE(synth.noise)},
        {"synthetic.seed", "synthetic generator seed", ACPD_U64(synth.seed)},
        {"hp.lambda", "l2 regularization, > 0", ACPD_DOUBLE(hp.lambda)},
        {"hp.gamma", "aggregation step, in (0, 1]", ACPD_DOUBLE(hp.gamma)},
        {"hp.K", "number of workers",
         [](ExperimentConfig& c, std::string_view k, std::string_view v) {
             c.hp.workers = static_cast<std::size_t>(to_u64(k, v));
             c.sim.workers = c.hp.workers;
         },
         [](const ExperimentConfig& c) { return std::to_string(c.hp.workers); }},
        {"hp.B", "group size: server commits after B arrivals", ACPD_SIZE(hp.group)},
        {"hp.T", "epoch length: every T-th step waits for all workers", ACPD_SIZE(hp.epoch)},
        {"hp.H", "local SDCA iterations per round", ACPD_SIZE(hp.local_iters)},
        {"hp.L", "maximum outer iterations (rounds for the synchronous baselines)", ACPD_SIZE(hp.outer_iters)},
        {"hp.rho_d", "coordinates kept per worker message", ACPD_SIZE(hp.keep)},
        {"hp.seed", "partition and sampling seed", ACPD_U64(hp.seed)},
        {"hp.sigma_prime", "subproblem coupling override, or auto (gamma*B; gamma*K for CoCoA+)",
         [](ExperimentConfig& c, std::string_view k, std::string_view v) {
             if (v == "auto") c.hp.sigma_prime_override.reset();
             else c.hp.sigma_prime_override = to_double(k, v);
         },
         [](const ExperimentConfig& c) {
             return c.hp.sigma_prime_override ? fmt(*c.hp.sigma_prime_override) : std::string("auto");
         }},
        {"sim.base_seconds", "compute seconds per H local iterations", ACPD_DOUBLE(sim.base_seconds)},
        {"sim.jitter_sigma", "log-std of mean-one lognormal compute jitter, 0 = off", ACPD_DOUBLE(sim.jitter_sigma)},
        {"sim.straggler_sigma", "slowdown factor of the straggler, >= 1", ACPD_DOUBLE(sim.straggler_sigma)},
        {"sim.straggler_worker", "index of the straggler", ACPD_SIZE(sim.straggler_worker)},
        {"sim.slowdowns", "explicit comma-separated per-worker slowdowns (overrides straggler keys)",
         [](ExperimentConfig& c, std::string_view k, std::string_view v) { c.sim.slowdowns = to_list(k, v); },
         [](const ExperimentConfig& c) { return fmt_list(c.sim.slowdowns); }},
        {"sim.latency", "per-message latency in seconds", ACPD_DOUBLE(sim.latency)},
        {"sim.seconds_per_byte", "transfer cost per byte", ACPD_DOUBLE(sim.seconds_per_byte)},
        {"sim.seed", "jitter seed", ACPD_U64(sim.seed)},
        {"stop.gap", "stop once the duality gap is at or below this", ACPD_DOUBLE(stop.gap)},
        {"stop.time_budget", "stop once virtual time reaches this (inf = none)", ACPD_DOUBLE(stop.time_budget)},
        {"report.gap_targets", "comma-separated gaps for time/rounds-to-gap reporting",
         [](ExperimentConfig& c, std::string_view k, std::string_view v) { c.gap_targets = to_list(k, v); },
         [](const ExperimentConfig& c) { return fmt_list(c.gap_targets); }},
        {"report.theta", "local solver quality assumed by the printed round bound", ACPD_DOUBLE(theta)},
        {"report.sigma_iters", "power iterations for the sigma_max estimate", ACPD_SIZE(sigma_iters)},
        {"output.path", "trace CSV path (directory overridable via ACPD_OUTPUT_DIR)",
         [](ExperimentConfig& c, std::string_view, std::string_view v) { c.output = std::string(v); },
         [](const ExperimentConfig& c) { return c.output; }},
    };
    return table;
}

#undef ACPD_DOUBLE
#undef ACPD_SIZE
#undef ACPD_U64

const Key* find_key(std::string_view name) {
    for (const Key& k : keys()) {
        if (name == k.name) return &k;
    }
    return nullptr;
}

}  // namespace

bool is_config_key(std::string_view key) { return find_key(key) != nullptr; }

void set_config_value(ExperimentConfig& cfg, std::string_view key, std::string_view value) {
    const Key* k = find_key(key);
    if (!k) throw ConfigError("unknown config key '" + std::string(key) + "'");
    k->set(cfg, key, trim(value));
}

void validate_config(const ExperimentConfig& cfg) {
    if (!cfg.synthetic && cfg.data_path.empty()) throw ConfigError("data.source = libsvm needs data.path");
    if (cfg.synthetic && !cfg.data_path.empty()) {
        throw ConfigError("data.path is set but data.source = synthetic; pick one dataset source");
    }
    if (cfg.synthetic) {
        if (cfg.synth.samples < 1 || cfg.synth.dim < 1) throw ConfigError("synthetic.n and synthetic.d must be >= 1");
        if (!(cfg.synth.density > 0.0 && cfg.synth.density <= 1.0)) throw ConfigError("synthetic.density must lie in (0, 1]");
        if (!(cfg.synth.noise >= 0.0)) throw ConfigError("synthetic.noise must be >= 0");
    }
    if (cfg.hp.outer_iters < 1) throw ConfigError("hp.L must be >= 1");
    if (!(cfg.stop.gap >= 0.0)) throw ConfigError("stop.gap must be >= 0");
    if (!(cfg.stop.time_budget > 0.0)) throw ConfigError("stop.time_budget must be > 0");
    for (double g : cfg.gap_targets) {
        if (!(g > 0.0)) throw ConfigError("report.gap_targets must be positive");
    }
    if (!(cfg.theta >= 0.0 && cfg.theta < 1.0)) throw ConfigError("report.theta must lie in [0, 1)");
    if (cfg.sigma_iters < 1) throw ConfigError("report.sigma_iters must be >= 1");
    if (cfg.sim.workers != cfg.hp.workers) throw ConfigError("sim and hp disagree on the worker count");
    try {
        cfg.sim.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
}

ExperimentConfig parse_config(std::string_view text) {
    ExperimentConfig cfg;
    std::size_t lineno = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto nl = text.find('\n', pos);
        const auto raw = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
        ++lineno;
        const auto line = trim(raw);
        if (line.empty() || line.front() == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) {
            throw ConfigError("config line " + std::to_string(lineno) + ": expected 'key = value'");
        }
        set_config_value(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    validate_config(cfg);
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::vector<std::pair<std::string, std::string>> effective_config(const ExperimentConfig& cfg) {
    std::vector<std::pair<std::string, std::string>> out;
    for (const Key& k : keys()) out.emplace_back(k.name, k.get(cfg));
    return out;
}

std::string config_key_help() {
    std::string out;
    const ExperimentConfig defaults;
    for (const Key& k : keys()) {
        std::string name = k.name;
        name.resize(std::max<std::size_t>(name.size(), 22), ' ');
        out += "  " + name + " " + k.help + " [" + k.get(defaults) + "]\n";
    }
    return out;
}

}  // namespace acpd
