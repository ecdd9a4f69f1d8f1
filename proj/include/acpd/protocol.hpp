#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "acpd/data.hpp"
#include "acpd/local_solver.hpp"
#include "acpd/objective.hpp"

namespace acpd {

class ProtocolError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DecodeError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A sparse model delta: strictly increasing indices below `dim`, nonzero values.
struct SparseUpdate {
    std::uint32_t dim = 0;
    std::vector<Feature> entries;

    std::size_t nnz() const noexcept { return entries.size(); }
    friend bool operator==(const SparseUpdate&, const SparseUpdate&) = default;
};

/// Nonzeros of a dense vector.
SparseUpdate sparsify(std::span<const double> dense);

/// dense += scale * u
void add_scaled(std::span<double> dense, double scale, const SparseUpdate& u);

/// Wire layout, little-endian: u32 dim, u32 nnz, then nnz x (u32 index, f64 value).
std::vector<std::uint8_t> encode(const SparseUpdate& u);
SparseUpdate decode(std::span<const std::uint8_t> bytes);

constexpr std::size_t encoded_size(std::size_t nnz) noexcept { return 8 + 12 * nnz; }

struct FilterResult {
    std::vector<bool> mask;
    SparseUpdate filtered;
};

/// Keeps the `keep` largest-magnitude nonzeros of `dw`; ties go to the lower
/// index. Selection is nth_element based, expected linear in nnz(dw).
FilterResult topk_filter(std::span<const double> dw, std::size_t keep);

struct WorkerMessage {
    std::size_t sender = 0;
    SparseUpdate update;
};

struct ServerReply {
    std::size_t recipient = 0;
    SparseUpdate update;
};

/// One bandwidth-efficient worker round: local solve at w_k + gamma dw_k,
/// alpha_k += gamma delta, dw_k += A_k delta / (lambda n), then the top-rho*d
/// part of dw_k is sent and the rest stays behind as the residual.
WorkerMessage worker_round(LocalState& st, const Dataset& ds, const HyperParams& hp);

/// w_k += reply. Throws ProtocolError if the reply is addressed elsewhere.
void worker_apply_reply(LocalState& st, const ServerReply& reply);

/// Outcome of one completed server step.
struct StepResult {
    std::size_t step = 0;    // global step index, 0-based
    std::size_t inner = 0;   // t within the outer iteration
    std::size_t outer = 0;   // l
    std::vector<std::size_t> phi;        // senders in arrival order
    std::vector<std::size_t> staleness;  // step - version of each sender's model
    std::vector<ServerReply> replies;
};

/// Group-wise server. A step commits once B workers have been received, or all
/// K on the last inner step of each outer iteration. Every received update
/// F(dw_k) is added as gamma * F to the global model and to the pending delta
/// of every worker (sender included); the members of the step then receive
/// and clear their pending deltas.
class ServerState {
public:
    ServerState(std::size_t dim, const HyperParams& hp);

    /// Adds one arrival to the current step. Returns the step result when the
    /// arrival completes it. Throws ProtocolError on a duplicate sender.
    std::optional<StepResult> receive(const WorkerMessage& msg);

    /// Arrivals still needed to complete the current step.
    std::size_t required() const noexcept;

    std::span<const double> model() const noexcept { return model_; }
    std::span<const double> pending(std::size_t k) const { return pending_[k]; }
    std::size_t inner() const noexcept { return inner_; }
    std::size_t outer() const noexcept { return outer_; }
    std::size_t completed_steps() const noexcept { return steps_; }
    std::span<const std::size_t> current_phi() const noexcept { return phi_; }

private:
    HyperParams hp_;
    std::vector<double> model_;
    std::vector<std::vector<double>> pending_;
    std::vector<std::size_t> synced_version_;
    std::vector<std::size_t> phi_;
    std::vector<std::size_t> staleness_;
    std::size_t inner_ = 0;
    std::size_t outer_ = 0;
    std::size_t steps_ = 0;
};

/// Feeds arrivals in order until the current step completes. Consumed
/// messages are popped; returns nullopt if the queue runs dry first.
std::optional<StepResult> server_step(ServerState& ss, std::deque<WorkerMessage>& arrivals);

struct CocoaRoundStats {
    std::vector<std::size_t> up_nnz;  // per worker
    std::size_t down_nnz = 0;         // aggregated update
};

/// One synchronous CoCoA+ round over all workers with sigma' = gamma * K.
/// Every replica and `global_model` receive gamma * sum_k A_k delta_k / (lambda n).
CocoaRoundStats cocoaplus_round(std::span<LocalState> states, const Dataset& ds, const HyperParams& hp,
                                std::vector<double>& global_model);

}  // namespace acpd
