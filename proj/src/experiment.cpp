#include "acpd/experiment.hpp"

#include <atomic>
#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <thread>

#include "acpd/rng.hpp"

namespace acpd {

namespace fs = std::filesystem;

Dataset generate_synthetic(const SyntheticSpec& spec) {
    if (spec.samples < 1 || spec.dim < 1) throw std::invalid_argument("generate_synthetic: n and d must be >= 1");
    if (!(spec.density > 0.0 && spec.density <= 1.0)) {
        throw std::invalid_argument("generate_synthetic: density must lie in (0, 1]");
    }
    if (!(spec.noise >= 0.0)) throw std::invalid_argument("generate_synthetic: noise must be >= 0");
    if (spec.dim > UINT32_MAX) throw std::invalid_argument("generate_synthetic: dimension too large");

    Rng truth_rng(derive_seed(spec.seed, 1));
    Rng sample_rng(derive_seed(spec.seed, 2));
    Rng noise_rng(derive_seed(spec.seed, 3));

    std::vector<double> w_true(spec.dim);
    for (double& w : w_true) w = standard_normal(truth_rng);

    std::vector<std::vector<Feature>> rows(spec.samples);
    std::vector<double> labels(spec.samples);
    for (std::size_t i = 0; i < spec.samples; ++i) {
        double margin = 0.0;
        for (std::size_t j = 0; j < spec.dim; ++j) {
            if (uniform01(sample_rng) >= spec.density) continue;
            double v = standard_normal(sample_rng);
            while (v == 0.0) v = standard_normal(sample_rng);
            rows[i].push_back({static_cast<std::uint32_t>(j), v});
            margin += v * w_true[j];
        }
        margin += spec.noise * standard_normal(noise_rng);
        labels[i] = margin >= 0.0 ? 1.0 : -1.0;
    }
    return normalize(Dataset(spec.dim, std::move(rows), std::move(labels)));
}

Dataset load_dataset(const ExperimentConfig& cfg, std::ostream& log) {
    if (cfg.synthetic) {
        log << "dataset: synthetic n=" << cfg.synth.samples << " d=" << cfg.synth.dim
            << " density=" << cfg.synth.density << " noise=" << cfg.synth.noise << " seed=" << cfg.synth.seed << '\n';
        return generate_synthetic(cfg.synth);
    }
    auto ds = load_libsvm(cfg.data_path, cfg.data_dim ? std::optional<std::size_t>(cfg.data_dim) : std::nullopt);
    log << "dataset: " << cfg.data_path << " n=" << ds.size() << " d=" << ds.dim() << " nnz=" << ds.nnz() << '\n';
    if (cfg.normalize) {
        const std::size_t scaled = count_outside_unit_ball(ds);
        log << "normalization: scaled " << scaled << " of " << ds.size() << " samples onto the unit sphere\n";
        ds = normalize(ds);
    } else {
        log << "normalization: skipped (" << count_outside_unit_ball(ds) << " samples have norm > 1)\n";
    }
    return ds;
}

HyperParams effective_hyperparams(const ExperimentConfig& cfg) {
    HyperParams hp = cfg.hp;
    switch (cfg.algorithm) {
        case Algorithm::acpd:
            break;
        case Algorithm::cocoaplus:
            hp.group = hp.workers;
            hp.epoch = 1;
            break;
        case Algorithm::sdca_single:
            hp.workers = 1;
            hp.group = 1;
            hp.epoch = 1;
            break;
    }
    return hp;
}

std::string resolve_output_path(const std::string& configured) {
    const char* dir = std::getenv("ACPD_OUTPUT_DIR");
    if (!dir || !*dir) return configured;
    return (fs::path(dir) / fs::path(configured).filename()).string();
}

namespace {

std::string fmt(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

void write_trace_csv(const std::string& path, const ExperimentConfig& cfg, const SimTrace& trace) {
    const fs::path p(path);
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    for (const auto& [key, value] : effective_config(cfg)) out << "# " << key << " = " << value << '\n';
    out << kTraceHeader << '\n' << trace_rows_csv(trace);
    if (!out) throw std::runtime_error("failed writing '" + path + "'");
}

void print_theory(const ExperimentConfig& cfg, const Dataset& ds, const HyperParams& hp, std::ostream& log) {
    double eps = cfg.stop.gap;
    if (!(eps > 0.0)) {
        if (cfg.gap_targets.empty()) return;
        eps = *std::min_element(cfg.gap_targets.begin(), cfg.gap_targets.end());
    }
    const auto parts = partition(ds, hp.workers, hp.seed);
    BoundInputs in;
    in.samples = ds.size();
    in.sigma_max = estimate_sigma_max(parts, ds, cfg.sigma_iters, hp.seed);
    in.theta = cfg.theta;
    in.epsilon = eps;
    in.mode = BoundMode::duality_gap;
    const auto bound = theoretical_rounds(hp, in);
    log << "theory (Theta=" << cfg.theta << "): ";
    if (bound) {
        log << "L >= " << std::ceil(bound->rounds) << " outer iterations for gap <= " << eps << " (s=" << bound->s
            << ", sigma_max~" << in.sigma_max << ")\n";
    } else {
        log << "bound undefined for these parameters (sigma_max~" << in.sigma_max << ")\n";
    }
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& cfg, std::ostream& log) {
    validate_config(cfg);
    const Dataset ds = load_dataset(cfg, log);

    const HyperParams hp = effective_hyperparams(cfg);
    SimConfig sim = cfg.sim;
    sim.workers = hp.workers;
    if (cfg.algorithm == Algorithm::sdca_single) sim.slowdowns.clear();

    ExperimentResult res;
    res.trace = cfg.algorithm == Algorithm::acpd ? run_acpd(ds, hp, sim, cfg.stop)
                                                  : run_cocoaplus(ds, hp, sim, cfg.stop);
    for (double target : cfg.gap_targets) {
        res.reports.push_back({target, rounds_to_gap(res.trace, target), measure_time_to_gap(res.trace, target)});
    }
    res.clean = res.trace.audit.consistency_violations == 0;
    res.output_path = resolve_output_path(cfg.output);
    write_trace_csv(res.output_path, cfg, res.trace);

    const TraceRow& last = res.trace.rows.back();
    log << "summary: algorithm=" << to_string(cfg.algorithm) << " rounds=" << last.round << " outer=" << last.outer
        << " virt_seconds=" << last.seconds << " final_gap=" << std::scientific << std::setprecision(3) << last.gap
        << std::defaultfloat << std::setprecision(6) << " stop=" << to_string(res.trace.stop)
        << " bytes_up=" << last.bytes_up << " bytes_down=" << last.bytes_down << '\n';
    for (const GapReport& r : res.reports) {
        log << "  gap <= " << r.target << ": ";
        if (r.rounds) log << "round " << *r.rounds << ", " << *r.seconds << " s\n";
        else log << "not reached\n";
    }
    if (cfg.algorithm == Algorithm::acpd) {
        log << "  max staleness " << res.trace.audit.max_staleness << " (T-1 = " << hp.epoch - 1
            << "), max consistency residual " << res.trace.audit.max_consistency_residual << '\n';
    }
    print_theory(cfg, ds, hp, log);
    if (!res.clean) log << "error: " << res.trace.audit.consistency_violations << " consistency violations\n";
    log << "trace: " << res.output_path << '\n';
    return res;
}

std::pair<std::string, std::vector<std::string>> parse_sweep_arg(const std::string& arg) {
    const auto eq = arg.find('=');
    if (eq == std::string::npos) throw ConfigError("sweep spec must look like key=v1,v2,... (got '" + arg + "')");
    std::string key = arg.substr(0, eq);
    if (!is_config_key(key)) throw ConfigError("unknown sweep key '" + key + "'");
    std::vector<std::string> values;
    std::stringstream ss(arg.substr(eq + 1));
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) values.push_back(item);
    }
    if (values.empty()) throw ConfigError("sweep over '" + key + "' has an empty value list");
    return {key, values};
}

std::vector<SweepPoint> run_sweep(const ExperimentConfig& base,
                                  const std::vector<std::pair<std::string, std::vector<std::string>>>& axes,
                                  std::ostream& log, std::size_t jobs) {
    if (axes.empty()) throw ConfigError("sweep needs at least one axis");
    for (const auto& [key, values] : axes) {
        if (!is_config_key(key)) throw ConfigError("unknown sweep key '" + key + "'");
        if (values.empty()) throw ConfigError("sweep over '" + key + "' has an empty value list");
    }

    // Cartesian product, first axis slowest.
    std::vector<SweepPoint> points(1);
    for (const auto& [key, values] : axes) {
        std::vector<SweepPoint> next;
        for (const SweepPoint& p : points) {
            for (const std::string& v : values) {
                SweepPoint q = p;
                q.assignment.emplace_back(key, v);
                next.push_back(std::move(q));
            }
        }
        points = std::move(next);
    }

    const fs::path out(base.output);
    const std::string stem = out.stem().string();
    std::vector<ExperimentConfig> configs;
    for (const SweepPoint& p : points) {
        ExperimentConfig cfg = base;
        std::string suffix;
        for (const auto& [key, value] : p.assignment) {
            set_config_value(cfg, key, value);
            std::string slug = key + "-" + value;
            for (char& c : slug) {
                if (c == '.' || c == '/' || c == ',') c = '_';
            }
            suffix += "_" + slug;
        }
        cfg.output = (out.parent_path() / (stem + suffix + ".csv")).string();
        validate_config(cfg);
        configs.push_back(std::move(cfg));
    }

    std::vector<std::string> logs(points.size());
    std::vector<std::exception_ptr> errors(points.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        for (std::size_t i = next++; i < points.size(); i = next++) {
            std::ostringstream os;
            try {
                points[i].result = run_experiment(configs[i], os);
            } catch (...) {
                errors[i] = std::current_exception();
            }
            logs[i] = os.str();
        }
    };
    const std::size_t threads = std::max<std::size_t>(1, std::min(jobs, points.size()));
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    for (std::size_t i = 0; i < points.size(); ++i) {
        log << "== point " << i;
        for (const auto& [key, value] : points[i].assignment) log << ' ' << key << '=' << value;
        log << '\n' << logs[i];
        if (errors[i]) std::rethrow_exception(errors[i]);
    }

    const std::string summary_path = resolve_output_path((out.parent_path() / (stem + "_summary.csv")).string());
    const fs::path sp(summary_path);
    if (sp.has_parent_path()) fs::create_directories(sp.parent_path());
    std::ofstream sum(summary_path, std::ios::binary);
    if (!sum) throw std::runtime_error("cannot write '" + summary_path + "'");
    sum << "point";
    for (const auto& axis : axes) sum << ',' << axis.first;
    sum << ",rounds,virt_seconds,final_gap";
    for (double t : base.gap_targets) sum << ",rounds_to_" << fmt(t) << ",seconds_to_" << fmt(t);
    sum << '\n';
    for (std::size_t i = 0; i < points.size(); ++i) {
        const auto& r = points[i].result;
        const TraceRow& last = r.trace.rows.back();
        sum << i;
        for (const auto& kv : points[i].assignment) sum << ',' << kv.second;
        sum << ',' << last.round << ',' << fmt(last.seconds) << ',' << fmt(last.gap);
        for (const GapReport& g : r.reports) {
            sum << ',' << (g.rounds ? std::to_string(*g.rounds) : "nan") << ',' << (g.seconds ? fmt(*g.seconds) : "nan");
        }
        sum << '\n';
    }
    log << "sweep summary: " << summary_path << '\n';
    return points;
}

}  // namespace acpd
