#include <cmath>

#include "acpd/protocol.hpp"
#include "acpd/simcluster.hpp"
#include "doctest.h"
#include "oracle.hpp"

namespace {

acpd::HyperParams base_hp(std::size_t K, std::size_t B, std::size_t T) {
    acpd::HyperParams hp;
    hp.workers = K;
    hp.group = B;
    hp.epoch = T;
    hp.lambda = 0.01;
    hp.local_iters = 50;
    hp.outer_iters = 5;
    hp.keep = 10;
    return hp;
}

acpd::SimConfig compute_bound(std::size_t K, double sigma) {
    acpd::SimConfig sc;
    sc.workers = K;
    sc.straggler_sigma = sigma;
    sc.latency = 0.0;
    sc.seconds_per_byte = 0.0;
    return sc;
}

const acpd::Dataset& shared_data() {
    static const acpd::Dataset ds = oracle::random_dataset(200, 20, 0.3, 42);
    return ds;
}

}  // namespace

TEST_CASE("symmetric cluster runs in lockstep") {
    auto hp = base_hp(4, 4, 1);
    const auto trace = acpd::run_acpd(shared_data(), hp, compute_bound(4, 1.0), {0.0});
    REQUIRE(trace.rows.size() == 6);
    for (std::size_t r = 1; r < trace.rows.size(); ++r) {
        CHECK(trace.rows[r].phi == std::vector<std::size_t>{0, 1, 2, 3});
        CHECK(trace.rows[r].seconds == static_cast<double>(r));
        CHECK(trace.rows[r].round == r);
        CHECK(trace.rows[r].outer == r - 1);
    }
    CHECK(trace.stop == acpd::StopReason::max_outer);
}

TEST_CASE("straggler visits are rare and fast workers make up the difference") {
    const double sigma = 10.0;
    auto hp = base_hp(4, 2, 20);
    hp.outer_iters = 6;
    const auto trace = acpd::run_acpd(shared_data(), hp, compute_bound(4, sigma), {0.0});
    std::vector<std::size_t> visits(4, 0);
    std::size_t boundary_visits = 0;
    for (const auto& row : trace.rows) {
        for (std::size_t k : row.phi) ++visits[k];
        if (row.round > 0 && row.round % hp.epoch == 0) {
            CHECK(row.phi.size() == 4);
            ++boundary_visits;
        }
    }
    CHECK(boundary_visits == hp.outer_iters);
    // the straggler computes for sigma seconds per round; fast workers for 1
    const double total = trace.rows.back().seconds;
    const double predicted_fast = total / 1.0, predicted_slow = total / sigma;
    for (std::size_t k = 1; k < 4; ++k) {
        const double ratio = static_cast<double>(visits[k]) / static_cast<double>(visits[0]);
        CHECK(ratio >= 0.5 * predicted_fast / predicted_slow);
        CHECK(ratio <= 1.5 * predicted_fast / predicted_slow);
    }
    CHECK(trace.audit.max_staleness <= hp.epoch - 1);
}

TEST_CASE("identical seeds give byte-identical traces") {
    auto hp = base_hp(4, 2, 5);
    auto sc = compute_bound(4, 3.0);
    sc.jitter_sigma = 0.3;
    sc.latency = 0.01;
    sc.seconds_per_byte = 1e-6;
    const auto a = acpd::run_acpd(shared_data(), hp, sc, {0.0});
    const auto b = acpd::run_acpd(shared_data(), hp, sc, {0.0});
    CHECK(acpd::trace_rows_csv(a) == acpd::trace_rows_csv(b));
    CHECK(acpd::trace_rows_csv(acpd::run_cocoaplus(shared_data(), hp, sc, {0.0})) ==
          acpd::trace_rows_csv(acpd::run_cocoaplus(shared_data(), hp, sc, {0.0})));

    sc.seed = 2;
    CHECK(acpd::trace_rows_csv(acpd::run_acpd(shared_data(), hp, sc, {0.0})) != acpd::trace_rows_csv(a));
}

TEST_CASE("CoCoA+ round time scales with the straggler in the compute-bound regime") {
    auto hp = base_hp(4, 4, 1);
    const auto fast = acpd::run_cocoaplus(shared_data(), hp, compute_bound(4, 1.0), {0.0});
    const auto slow = acpd::run_cocoaplus(shared_data(), hp, compute_bound(4, 10.0), {0.0});
    REQUIRE(fast.rows.size() == slow.rows.size());
    for (std::size_t r = 1; r < fast.rows.size(); ++r) {
        CHECK(slow.rows[r].seconds - slow.rows[r - 1].seconds ==
              doctest::Approx(10.0 * (fast.rows[r].seconds - fast.rows[r - 1].seconds)).epsilon(1e-14));
    }
}

TEST_CASE("CoCoA+ gap curve does not depend on timing") {
    auto hp = base_hp(4, 4, 1);
    auto sc = compute_bound(4, 7.0);
    sc.jitter_sigma = 0.5;
    sc.latency = 0.3;
    const auto a = acpd::run_cocoaplus(shared_data(), hp, compute_bound(4, 1.0), {0.0});
    const auto b = acpd::run_cocoaplus(shared_data(), hp, sc, {0.0});
    REQUIRE(a.rows.size() == b.rows.size());
    for (std::size_t r = 0; r < a.rows.size(); ++r) CHECK(a.rows[r].gap == b.rows[r].gap);
}

TEST_CASE("CoCoA+ with one worker is timed single-machine SDCA") {
    auto hp = base_hp(1, 1, 1);
    hp.outer_iters = 3;
    const auto trace = acpd::run_cocoaplus(shared_data(), hp, compute_bound(1, 1.0), {0.0});
    std::vector<acpd::LocalState> states{
        acpd::LocalState::create(acpd::partition(shared_data(), 1, hp.seed)[0], shared_data().dim(), hp.seed)};
    std::vector<double> w(shared_data().dim(), 0.0);
    for (std::size_t r = 1; r <= 3; ++r) {
        acpd::cocoaplus_round(states, shared_data(), hp, w);
        CHECK(trace.rows[r].gap == acpd::duality_gap(states[0].alpha, shared_data(), hp.lambda));
        CHECK(trace.rows[r].seconds == static_cast<double>(r));
    }
}

TEST_CASE("measure_time_to_gap and rounds_to_gap") {
    acpd::SimTrace t;
    t.rows = {{0, 0, 0.0, 0.5, 0, 0, {}, 0}, {1, 0, 2.0, 0.1, 0, 0, {}, 0}, {2, 1, 3.5, 0.01, 0, 0, {}, 0}};
    CHECK(acpd::measure_time_to_gap(t, 1.0) == 0.0);
    CHECK(acpd::measure_time_to_gap(t, 0.05) == 3.5);
    CHECK(acpd::measure_time_to_gap(t, 0.1) == 2.0);
    CHECK_FALSE(acpd::measure_time_to_gap(t, 0.0).has_value());
    CHECK_FALSE(acpd::measure_time_to_gap(t, 1e-3).has_value());
    CHECK(acpd::rounds_to_gap(t, 0.05) == std::size_t{2});
    CHECK_FALSE(acpd::rounds_to_gap(t, 0.0).has_value());
}

TEST_CASE("byte accounting follows the wire format") {
    auto hp = base_hp(4, 4, 1);
    hp.keep = 3;
    hp.outer_iters = 4;
    const auto trace = acpd::run_acpd(shared_data(), hp, compute_bound(4, 1.0), {0.0});
    // every worker's residual has more than 3 nonzeros, so each message carries exactly 3
    for (std::size_t r = 1; r < trace.rows.size(); ++r) {
        CHECK(trace.rows[r].bytes_up - trace.rows[r - 1].bytes_up == 4 * acpd::encoded_size(3));
    }

    const auto sync = acpd::run_cocoaplus(shared_data(), hp, compute_bound(4, 1.0), {0.0});
    for (std::size_t r = 1; r < sync.rows.size(); ++r) {
        const auto up = sync.rows[r].bytes_up - sync.rows[r - 1].bytes_up;
        const auto down = sync.rows[r].bytes_down - sync.rows[r - 1].bytes_down;
        CHECK((up - 4 * 8) % 12 == 0);
        CHECK(up <= 4 * acpd::encoded_size(shared_data().dim()));
        CHECK(down % 4 == 0);
        CHECK((down / 4 - 8) % 12 == 0);
    }
}

TEST_CASE("ACPD audits: staleness, consistency, weak duality") {
    for (std::size_t T : {1u, 3u, 8u}) {
        auto hp = base_hp(4, 2, T);
        hp.keep = 4;
        auto sc = compute_bound(4, 5.0);
        sc.jitter_sigma = 0.4;
        sc.latency = 0.05;
        const auto trace = acpd::run_acpd(shared_data(), hp, sc, {0.0});
        CHECK(trace.audit.max_staleness <= T - 1);
        CHECK(trace.audit.max_consistency_residual <= 1e-9);
        CHECK(trace.audit.consistency_violations == 0);
        CHECK(trace.audit.boundaries_checked == hp.outer_iters);
        CHECK(trace.audit.min_raw_gap >= -1e-10);
        for (std::size_t r = 1; r < trace.rows.size(); ++r) {
            CHECK(trace.rows[r].seconds >= trace.rows[r - 1].seconds);
            CHECK(trace.rows[r].round == trace.rows[r - 1].round + 1);
        }
    }
}

TEST_CASE("group-wise epochs beat synchronous rounds under a straggler") {
    const std::size_t T = 10;
    auto hp = base_hp(4, 2, T);
    hp.outer_iters = 3;
    const auto acpd_trace = acpd::run_acpd(shared_data(), hp, compute_bound(4, 10.0), {0.0});
    const double per_epoch = acpd_trace.rows.back().seconds / static_cast<double>(hp.outer_iters);
    CHECK(per_epoch < static_cast<double>(T) * 10.0);
}

TEST_CASE("simulator input validation") {
    auto hp = base_hp(4, 2, 2);
    auto sc = compute_bound(3, 1.0);
    CHECK_THROWS_AS(acpd::run_acpd(shared_data(), hp, sc), std::invalid_argument);
    sc = compute_bound(4, 0.5);
    CHECK_THROWS_AS(acpd::run_acpd(shared_data(), hp, sc), std::invalid_argument);
    sc = compute_bound(4, 1.0);
    sc.latency = -1.0;
    CHECK_THROWS_AS(acpd::run_cocoaplus(shared_data(), hp, sc), std::invalid_argument);
}
