#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "acpd/data.hpp"
#include "acpd/objective.hpp"

namespace acpd {

/// Timing model of the simulated cluster.
///
/// A worker's compute phase (H local iterations) takes
///   base_seconds * slowdown(k) * jitter
/// where jitter is a mean-one lognormal with log-std `jitter_sigma` (exactly 1
/// when jitter_sigma == 0). A message of b bytes takes latency + b * seconds_per_byte.
struct SimConfig {
    std::size_t workers = 4;
    double base_seconds = 1.0;
    double jitter_sigma = 0.0;
    double straggler_sigma = 1.0;    // slowdown of the straggler
    std::size_t straggler_worker = 0;
    std::vector<double> slowdowns;   // explicit per-worker factors; overrides the two fields above
    double latency = 0.01;
    double seconds_per_byte = 1e-8;
    std::uint64_t seed = 1;

    double slowdown(std::size_t k) const;
    void validate() const;
};

struct StopRule {
    double gap = 1e-6;
    double time_budget = std::numeric_limits<double>::infinity();
};

enum class StopReason { gap_reached, max_outer, time_budget };

const char* to_string(StopReason r);

struct TraceRow {
    std::size_t round = 0;
    std::size_t outer = 0;
    double seconds = 0.0;
    double gap = 0.0;
    std::uint64_t bytes_up = 0;
    std::uint64_t bytes_down = 0;
    std::vector<std::size_t> phi;
    std::size_t max_staleness = 0;
};

/// Invariant bookkeeping gathered while a run executes.
struct SimAudit {
    double max_consistency_residual = 0.0;  // |w_server + gamma sum(residual + in transit) - w(alpha)|_inf
    double max_boundary_residual = 0.0;     // same, restricted to epoch boundaries
    std::size_t boundaries_checked = 0;
    std::size_t max_staleness = 0;
    double min_raw_gap = std::numeric_limits<double>::infinity();
    std::size_t consistency_violations = 0;  // residual checks above 1e-9
};

struct SimTrace {
    std::vector<TraceRow> rows;
    SimAudit audit;
    StopReason stop = StopReason::max_outer;
};

inline constexpr const char* kTraceHeader = "round,outer,virt_seconds,duality_gap,bytes_up,bytes_down,phi_size";

/// Rows in the CSV schema (no header, no comments).
std::string trace_rows_csv(const SimTrace& trace);

/// Group-wise ACPD run on the event-driven cluster. Row 0 is the initial state;
/// one row follows every completed server step. Stops at the first satisfied
/// rule among: gap <= stop.gap, L outer iterations completed, time budget spent.
SimTrace run_acpd(const Dataset& ds, const HyperParams& hp, const SimConfig& sc, const StopRule& stop = {});

/// Synchronous CoCoA+ baseline. Each round costs the slowest worker's compute
/// plus upload, then one broadcast of the aggregated update. L caps the rounds.
SimTrace run_cocoaplus(const Dataset& ds, const HyperParams& hp, const SimConfig& sc, const StopRule& stop = {});

/// First logged virtual time with gap <= eps.
std::optional<double> measure_time_to_gap(const SimTrace& trace, double eps);

/// First logged round with gap <= eps.
std::optional<std::size_t> rounds_to_gap(const SimTrace& trace, double eps);

}  // namespace acpd
