#include "acpd/simcluster.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <deque>
#include <queue>
#include <stdexcept>

#include "acpd/local_solver.hpp"
#include "acpd/protocol.hpp"
#include "acpd/rng.hpp"

namespace acpd {

double SimConfig::slowdown(std::size_t k) const {
    if (!slowdowns.empty()) return slowdowns.at(k);
    return k == straggler_worker ? straggler_sigma : 1.0;
}

void SimConfig::validate() const {
    auto fail = [](const std::string& msg) { throw std::invalid_argument("sim config: " + msg); };
    if (workers < 1) fail("K must be >= 1");
    if (!(base_seconds > 0.0)) fail("base compute time must be > 0");
    if (!(jitter_sigma >= 0.0)) fail("jitter sigma must be >= 0");
    if (!(latency >= 0.0)) fail("latency must be >= 0");
    if (!(seconds_per_byte >= 0.0)) fail("seconds per byte must be >= 0");
    if (!slowdowns.empty() && slowdowns.size() != workers) fail("need one slowdown per worker");
    for (std::size_t k = 0; k < workers; ++k) {
        if (!(slowdown(k) >= 1.0)) fail("slowdown factors must be >= 1");
    }
}

const char* to_string(StopReason r) {
    switch (r) {
        case StopReason::gap_reached: return "gap_reached";
        case StopReason::max_outer: return "max_outer";
        case StopReason::time_budget: return "time_budget";
    }
    return "unknown";
}

std::string trace_rows_csv(const SimTrace& trace) {
    std::string out;
    char buf[64];
    auto num = [&](double v) {
        const auto res = std::to_chars(buf, buf + sizeof buf, v);
        out.append(buf, res.ptr);
    };
    for (const TraceRow& r : trace.rows) {
        out += std::to_string(r.round);
        out += ',';
        out += std::to_string(r.outer);
        out += ',';
        num(r.seconds);
        out += ',';
        num(r.gap);
        out += ',';
        out += std::to_string(r.bytes_up);
        out += ',';
        out += std::to_string(r.bytes_down);
        out += ',';
        out += std::to_string(r.phi.size());
        out += '\n';
    }
    return out;
}

namespace {

constexpr double kResidualTolerance = 1e-9;

void check_inputs(const Dataset& ds, const HyperParams& hp, const SimConfig& sc) {
    hp.validate(ds.dim(), ds.size());
    sc.validate();
    if (hp.workers != sc.workers) {
        throw std::invalid_argument("config mismatch: hyperparameters use K=" + std::to_string(hp.workers) +
                                    " but the cluster has " + std::to_string(sc.workers) + " workers");
    }
}

std::vector<LocalState> make_workers(const Dataset& ds, const HyperParams& hp) {
    std::vector<LocalState> states;
    for (const Partition& p : partition(ds, hp.workers, hp.seed)) {
        states.push_back(LocalState::create(p, ds.dim(), hp.seed));
    }
    return states;
}

void gather_alpha(const std::vector<LocalState>& states, std::vector<double>& alpha) {
    for (const LocalState& st : states) {
        for (std::size_t j = 0; j < st.owned.size(); ++j) alpha[st.owned[j]] = st.alpha[j];
    }
}

class ComputeClock {
public:
    ComputeClock(const SimConfig& sc) : sc_(sc), rng_(derive_seed(sc.seed, 0xC10C)) {}

    double next(std::size_t k) {
        double t = sc_.base_seconds * sc_.slowdown(k);
        if (sc_.jitter_sigma > 0.0) {
            const double s = sc_.jitter_sigma;
            t *= std::exp(s * standard_normal(rng_) - 0.5 * s * s);
        }
        return t;
    }

    double transfer(std::size_t bytes) const {
        return sc_.latency + sc_.seconds_per_byte * static_cast<double>(bytes);
    }

private:
    const SimConfig& sc_;
    Rng rng_;
};

enum class EventKind : int { compute_done = 0, message_arrives_server = 1, reply_arrives_worker = 2 };

struct Event {
    double time;
    EventKind kind;
    std::size_t worker;
    std::uint64_t seq;

    // total order: time, then kind, then worker, then insertion
    bool operator>(const Event& o) const {
        if (time != o.time) return time > o.time;
        if (kind != o.kind) return static_cast<int>(kind) > static_cast<int>(o.kind);
        if (worker != o.worker) return worker > o.worker;
        return seq > o.seq;
    }
};

}  // namespace

SimTrace run_acpd(const Dataset& ds, const HyperParams& hp, const SimConfig& sc, const StopRule& stop) {
    check_inputs(ds, hp, sc);
    const std::size_t K = hp.workers;
    const std::size_t d = ds.dim();

    auto workers = make_workers(ds, hp);
    ServerState server(d, hp);
    ComputeClock clock(sc);

    std::priority_queue<Event, std::vector<Event>, std::greater<>> events;
    std::uint64_t seq = 0;
    auto schedule = [&](double t, EventKind kind, std::size_t k) { events.push({t, kind, k, seq++}); };

    std::vector<std::optional<WorkerMessage>> outbox(K);  // sent, not yet at the server
    std::vector<std::optional<ServerReply>> inbox(K);     // reply on its way back
    std::vector<bool> awaiting(K, false);
    std::deque<WorkerMessage> arrived;                    // at the server, not yet consumed

    SimTrace trace;
    std::vector<double> alpha(ds.size(), 0.0);
    std::uint64_t bytes_up = 0, bytes_down = 0;

    auto log_gap = [&]() {
        gather_alpha(workers, alpha);
        const double raw = raw_duality_gap(alpha, ds, hp.lambda);
        trace.audit.min_raw_gap = std::min(trace.audit.min_raw_gap, raw);
        return duality_gap(alpha, ds, hp.lambda);
    };

    // w_server + gamma * (residuals + updates in transit) must equal w(alpha).
    auto consistency_residual = [&]() {
        std::vector<double> expected(server.model().begin(), server.model().end());
        for (const LocalState& st : workers) {
            for (std::size_t c = 0; c < d; ++c) expected[c] += hp.gamma * st.residual[c];
        }
        for (const auto& m : outbox) {
            if (m) add_scaled(expected, hp.gamma, m->update);
        }
        for (const auto& m : arrived) add_scaled(expected, hp.gamma, m.update);
        const auto w = primal_from_dual(alpha, ds, hp.lambda);
        double worst = 0.0;
        for (std::size_t c = 0; c < d; ++c) worst = std::max(worst, std::abs(expected[c] - w[c]));
        return worst;
    };

    trace.rows.push_back({0, 0, 0.0, log_gap(), 0, 0, {}, 0});
    if (trace.rows.back().gap <= stop.gap) {
        trace.stop = StopReason::gap_reached;
        return trace;
    }

    for (std::size_t k = 0; k < K; ++k) schedule(clock.next(k), EventKind::compute_done, k);

    bool done = false;
    while (!done && !events.empty()) {
        const Event ev = events.top();
        events.pop();
        const std::size_t k = ev.worker;
        switch (ev.kind) {
            case EventKind::compute_done: {
                if (awaiting[k]) throw ProtocolError("worker " + std::to_string(k) + " has two messages in flight");
                WorkerMessage msg = worker_round(workers[k], ds, hp);
                const std::size_t bytes = encoded_size(msg.update.nnz());
                bytes_up += bytes;
                awaiting[k] = true;
                outbox[k] = std::move(msg);
                schedule(ev.time + clock.transfer(bytes), EventKind::message_arrives_server, k);
                break;
            }
            case EventKind::message_arrives_server: {
                arrived.push_back(std::move(*outbox[k]));
                outbox[k].reset();
                while (!done) {
                    auto step = server_step(server, arrived);
                    if (!step) break;
                    for (ServerReply& reply : step->replies) {
                        const std::size_t bytes = encoded_size(reply.update.nnz());
                        bytes_down += bytes;
                        const std::size_t to = reply.recipient;
                        inbox[to] = std::move(reply);
                        schedule(ev.time + clock.transfer(bytes), EventKind::reply_arrives_worker, to);
                    }
                    TraceRow row{step->step + 1, step->outer, ev.time, log_gap(), bytes_up, bytes_down,
                                 step->phi, 0};
                    for (std::size_t s : step->staleness) row.max_staleness = std::max(row.max_staleness, s);
                    trace.audit.max_staleness = std::max(trace.audit.max_staleness, row.max_staleness);

                    const double resid = consistency_residual();
                    trace.audit.max_consistency_residual = std::max(trace.audit.max_consistency_residual, resid);
                    if (step->inner + 1 == hp.epoch) {
                        trace.audit.max_boundary_residual = std::max(trace.audit.max_boundary_residual, resid);
                        ++trace.audit.boundaries_checked;
                    }
                    if (resid > kResidualTolerance) ++trace.audit.consistency_violations;

                    trace.rows.push_back(std::move(row));
                    if (trace.rows.back().gap <= stop.gap) {
                        trace.stop = StopReason::gap_reached;
                        done = true;
                    } else if (server.outer() >= hp.outer_iters) {
                        trace.stop = StopReason::max_outer;
                        done = true;
                    } else if (ev.time >= stop.time_budget) {
                        trace.stop = StopReason::time_budget;
                        done = true;
                    }
                }
                break;
            }
            case EventKind::reply_arrives_worker: {
                worker_apply_reply(workers[k], *inbox[k]);
                inbox[k].reset();
                awaiting[k] = false;
                schedule(ev.time + clock.next(k), EventKind::compute_done, k);
                break;
            }
        }
    }
    return trace;
}

SimTrace run_cocoaplus(const Dataset& ds, const HyperParams& hp, const SimConfig& sc, const StopRule& stop) {
    check_inputs(ds, hp, sc);
    const std::size_t K = hp.workers;

    auto workers = make_workers(ds, hp);
    std::vector<double> global(ds.dim(), 0.0);
    ComputeClock clock(sc);

    SimTrace trace;
    std::vector<double> alpha(ds.size(), 0.0);
    auto log_gap = [&]() {
        gather_alpha(workers, alpha);
        trace.audit.min_raw_gap = std::min(trace.audit.min_raw_gap, raw_duality_gap(alpha, ds, hp.lambda));
        return duality_gap(alpha, ds, hp.lambda);
    };

    std::vector<std::size_t> everyone(K);
    for (std::size_t k = 0; k < K; ++k) everyone[k] = k;

    trace.rows.push_back({0, 0, 0.0, log_gap(), 0, 0, {}, 0});
    if (trace.rows.back().gap <= stop.gap) {
        trace.stop = StopReason::gap_reached;
        return trace;
    }

    double now = 0.0;
    std::uint64_t bytes_up = 0, bytes_down = 0;
    for (std::size_t round = 1;; ++round) {
        std::vector<double> compute(K);
        for (std::size_t k = 0; k < K; ++k) compute[k] = clock.next(k);

        const auto stats = cocoaplus_round(workers, ds, hp, global);

        double slowest = 0.0;
        for (std::size_t k = 0; k < K; ++k) {
            const std::size_t up = encoded_size(stats.up_nnz[k]);
            bytes_up += up;
            slowest = std::max(slowest, compute[k] + clock.transfer(up));
        }
        const std::size_t down = encoded_size(stats.down_nnz);
        bytes_down += K * down;
        now += slowest + clock.transfer(down);

        trace.rows.push_back({round, round - 1, now, log_gap(), bytes_up, bytes_down, everyone, 0});
        if (trace.rows.back().gap <= stop.gap) {
            trace.stop = StopReason::gap_reached;
            break;
        }
        if (round >= hp.outer_iters) {
            trace.stop = StopReason::max_outer;
            break;
        }
        if (now >= stop.time_budget) {
            trace.stop = StopReason::time_budget;
            break;
        }
    }
    return trace;
}

std::optional<double> measure_time_to_gap(const SimTrace& trace, double eps) {
    if (!(eps > 0.0)) return std::nullopt;
    for (const TraceRow& r : trace.rows) {
        if (r.gap <= eps) return r.seconds;
    }
    return std::nullopt;
}

std::optional<std::size_t> rounds_to_gap(const SimTrace& trace, double eps) {
    if (!(eps > 0.0)) return std::nullopt;
    for (const TraceRow& r : trace.rows) {
        if (r.gap <= eps) return r.round;
    }
    return std::nullopt;
}

}  // namespace acpd
