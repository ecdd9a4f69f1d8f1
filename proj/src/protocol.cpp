#include "acpd/protocol.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <numeric>
#include <string>

namespace acpd {

SparseUpdate sparsify(std::span<const double> dense) {
    SparseUpdate u;
    u.dim = static_cast<std::uint32_t>(dense.size());
    for (std::size_t i = 0; i < dense.size(); ++i) {
        if (dense[i] != 0.0) u.entries.push_back({static_cast<std::uint32_t>(i), dense[i]});
    }
    return u;
}

void add_scaled(std::span<double> dense, double scale, const SparseUpdate& u) {
    if (dense.size() != u.dim) throw std::invalid_argument("add_scaled: dimension mismatch");
    for (const Feature& e : u.entries) dense[e.index] += scale * e.value;
}

namespace {

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int b = 0; b < 4; ++b) out.push_back(static_cast<std::uint8_t>(v >> (8 * b)));
}

void put_f64(std::vector<std::uint8_t>& out, double v) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    for (int b = 0; b < 8; ++b) out.push_back(static_cast<std::uint8_t>(bits >> (8 * b)));
}

std::uint32_t get_u32(const std::uint8_t* p) {
    std::uint32_t v = 0;
    for (int b = 0; b < 4; ++b) v |= static_cast<std::uint32_t>(p[b]) << (8 * b);
    return v;
}

double get_f64(const std::uint8_t* p) {
    std::uint64_t bits = 0;
    for (int b = 0; b < 8; ++b) bits |= static_cast<std::uint64_t>(p[b]) << (8 * b);
    return std::bit_cast<double>(bits);
}

}  // namespace

std::vector<std::uint8_t> encode(const SparseUpdate& u) {
    std::vector<std::uint8_t> out;
    out.reserve(encoded_size(u.nnz()));
    put_u32(out, u.dim);
    put_u32(out, static_cast<std::uint32_t>(u.nnz()));
    for (const Feature& e : u.entries) {
        put_u32(out, e.index);
        put_f64(out, e.value);
    }
    return out;
}

SparseUpdate decode(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 8) throw DecodeError("decode: truncated header");
    SparseUpdate u;
    u.dim = get_u32(bytes.data());
    const std::uint32_t nnz = get_u32(bytes.data() + 4);
    if (nnz > u.dim) throw DecodeError("decode: nnz exceeds dimension");
    if (bytes.size() != encoded_size(nnz)) {
        throw DecodeError("decode: buffer holds " + std::to_string(bytes.size()) + " bytes, header implies " +
                          std::to_string(encoded_size(nnz)));
    }
    u.entries.reserve(nnz);
    const std::uint8_t* p = bytes.data() + 8;
    for (std::uint32_t j = 0; j < nnz; ++j, p += 12) {
        const Feature e{get_u32(p), get_f64(p + 4)};
        if (e.index >= u.dim) throw DecodeError("decode: index out of range");
        if (!u.entries.empty() && u.entries.back().index >= e.index) {
            throw DecodeError("decode: indices not ascending");
        }
        if (e.value == 0.0) throw DecodeError("decode: explicit zero value");
        u.entries.push_back(e);
    }
    return u;
}

FilterResult topk_filter(std::span<const double> dw, std::size_t keep) {
    if (keep == 0 || keep > dw.size()) {
        throw std::invalid_argument("topk_filter: rho*d must satisfy 1 <= rho*d <= d (got " + std::to_string(keep) +
                                    ", d=" + std::to_string(dw.size()) + ")");
    }
    std::vector<std::uint32_t> candidates;
    for (std::size_t i = 0; i < dw.size(); ++i) {
        if (dw[i] != 0.0) candidates.push_back(static_cast<std::uint32_t>(i));
    }
    if (candidates.size() > keep) {
        const auto before = [&](std::uint32_t a, std::uint32_t b) {
            const double ma = std::abs(dw[a]), mb = std::abs(dw[b]);
            return ma > mb || (ma == mb && a < b);
        };
        std::nth_element(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(keep) - 1,
                         candidates.end(), before);
        candidates.resize(keep);
        std::sort(candidates.begin(), candidates.end());
    }

    FilterResult out;
    out.mask.assign(dw.size(), false);
    out.filtered.dim = static_cast<std::uint32_t>(dw.size());
    out.filtered.entries.reserve(candidates.size());
    for (std::uint32_t i : candidates) {
        out.mask[i] = true;
        out.filtered.entries.push_back({i, dw[i]});
    }
    return out;
}

WorkerMessage worker_round(LocalState& st, const Dataset& ds, const HyperParams& hp) {
    const auto delta = solve_local(st, ds, hp);
    for (std::size_t j = 0; j < delta.size(); ++j) st.alpha[j] += hp.gamma * delta[j];
    accumulate_primal_delta(delta, st, ds, hp.lambda, st.residual);

    auto filtered = topk_filter(st.residual, hp.keep);
    // what was not sent stays behind as the residual
    for (const Feature& e : filtered.filtered.entries) st.residual[e.index] = 0.0;
    return {st.worker, std::move(filtered.filtered)};
}

void worker_apply_reply(LocalState& st, const ServerReply& reply) {
    if (reply.recipient != st.worker) {
        throw ProtocolError("reply for worker " + std::to_string(reply.recipient) + " delivered to worker " +
                            std::to_string(st.worker));
    }
    add_scaled(st.model, 1.0, reply.update);
}

ServerState::ServerState(std::size_t dim, const HyperParams& hp)
    : hp_(hp),
      model_(dim, 0.0),
      pending_(hp.workers, std::vector<double>(dim, 0.0)),
      synced_version_(hp.workers, 0) {
    if (hp.group < 1 || hp.group > hp.workers || hp.epoch < 1) {
        throw std::invalid_argument("ServerState: need 1 <= B <= K and T >= 1");
    }
}

std::size_t ServerState::required() const noexcept {
    const std::size_t target = inner_ + 1 == hp_.epoch ? hp_.workers : hp_.group;
    return target - phi_.size();
}

std::optional<StepResult> ServerState::receive(const WorkerMessage& msg) {
    const std::size_t k = msg.sender;
    if (k >= hp_.workers) throw ProtocolError("message from unknown worker " + std::to_string(k));
    if (std::find(phi_.begin(), phi_.end(), k) != phi_.end()) {
        throw ProtocolError("worker " + std::to_string(k) + " sent twice within one server step");
    }
    if (msg.update.dim != model_.size()) throw ProtocolError("message dimension mismatch");

    phi_.push_back(k);
    staleness_.push_back(steps_ - synced_version_[k]);
    for (const Feature& e : msg.update.entries) {
        const double step = hp_.gamma * e.value;
        model_[e.index] += step;
        for (auto& acc : pending_) acc[e.index] += step;
    }
    if (required() > 0) return std::nullopt;

    StepResult res;
    res.step = steps_;
    res.inner = inner_;
    res.outer = outer_;
    ++steps_;
    for (std::size_t member : phi_) {
        res.replies.push_back({member, sparsify(pending_[member])});
        std::fill(pending_[member].begin(), pending_[member].end(), 0.0);
        synced_version_[member] = steps_;
    }
    res.phi = std::move(phi_);
    res.staleness = std::move(staleness_);
    phi_.clear();
    staleness_.clear();
    if (++inner_ == hp_.epoch) {
        inner_ = 0;
        ++outer_;
    }
    return res;
}

std::optional<StepResult> server_step(ServerState& ss, std::deque<WorkerMessage>& arrivals) {
    while (!arrivals.empty()) {
        auto msg = std::move(arrivals.front());
        arrivals.pop_front();
        if (auto res = ss.receive(msg)) return res;
    }
    return std::nullopt;
}

CocoaRoundStats cocoaplus_round(std::span<LocalState> states, const Dataset& ds, const HyperParams& hp,
                                std::vector<double>& global_model) {
    HyperParams sync = hp;
    sync.group = hp.workers;

    const std::size_t d = ds.dim();
    std::vector<double> aggregate(d, 0.0);
    std::vector<double> dw(d);
    CocoaRoundStats stats;
    for (LocalState& st : states) {
        const auto delta = solve_local(st, ds, sync);
        for (std::size_t j = 0; j < delta.size(); ++j) st.alpha[j] += hp.gamma * delta[j];
        std::fill(dw.begin(), dw.end(), 0.0);
        accumulate_primal_delta(delta, st, ds, hp.lambda, dw);
        std::size_t nnz = 0;
        for (std::size_t c = 0; c < d; ++c) {
            if (dw[c] == 0.0) continue;
            ++nnz;
            aggregate[c] += hp.gamma * dw[c];
        }
        stats.up_nnz.push_back(nnz);
    }
    for (std::size_t c = 0; c < d; ++c) {
        if (aggregate[c] == 0.0) continue;
        ++stats.down_nnz;
        global_model[c] += aggregate[c];
        for (LocalState& st : states) st.model[c] += aggregate[c];
    }
    return stats;
}

}  // namespace acpd
