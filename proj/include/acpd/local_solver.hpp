#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "acpd/data.hpp"
#include "acpd/objective.hpp"
#include "acpd/rng.hpp"

namespace acpd {

/// Everything one worker owns between communication rounds.
///
/// `alpha` is the worker's dual block, aligned with `owned` (alpha[j] is the
/// dual variable of sample owned[j]). `model` is the worker's replica of the
/// server model and `residual` holds the part of its primal update that has
/// not been sent yet.
struct LocalState {
    std::size_t worker = 0;
    std::vector<std::size_t> owned;
    std::vector<double> alpha;
    std::vector<double> model;
    std::vector<double> residual;
    Rng rng;

    /// Zero-initialized state for one partition; the sampling stream is
    /// derived from (seed, worker).
    static LocalState create(const Partition& part, std::size_t dim, std::uint64_t seed);

    /// The point the local subproblem is linearized at: model + gamma * residual.
    std::vector<double> effective_model(double gamma) const;
};

/// Value of the worker's local dual subproblem at block increment
/// `delta_alpha` (aligned with st.owned), using the effective model
/// w_k + gamma * dw_k and coupling sigma' = hp.sigma_prime():
///
///   (1/n) sum_{i in P_k} -phi_i*(-(alpha + delta)_i) - (lambda / 2K) |w_eff|^2
///     - (1/n) w_eff^T A_k delta - (lambda sigma' / 2) |A_k delta / (lambda n)|^2
///
/// The 1/(q_k K) prefactor is left out. It is a positive per-worker constant,
/// so it cannot move the maximizer.
double local_subproblem_value(std::span<const double> delta_alpha, const LocalState& st, const Dataset& ds,
                              const HyperParams& hp);

/// Same objective for an increment given as (sample index, value) pairs over
/// [0, n). Throws std::invalid_argument if any index is not owned by st.
double local_subproblem_value(std::span<const std::pair<std::size_t, double>> delta_alpha, const LocalState& st,
                              const Dataset& ds, const HyperParams& hp);

/// Exact maximizer of the subproblem along sample `i`:
///   (y_i - a_i - v.x_i) / (1 + sigma' |x_i|^2 / (lambda n))
/// where a_i is the current (alpha + delta)_i and v the running direction
/// w_eff + (sigma' / (lambda n)) A_k delta.
double coordinate_delta(std::span<const Feature> x, double sq_norm, double label, double current_alpha,
                        std::span<const double> direction, double sigma_prime, double lambda_n);

/// Runs H uniformly sampled coordinate steps and returns the block increment
/// (aligned with st.owned). Only st.rng advances.
std::vector<double> solve_local(LocalState& st, const Dataset& ds, const HyperParams& hp);

/// Same as solve_local but reports the subproblem value before the first and
/// after every step; used to audit monotonicity.
std::vector<double> solve_local_traced(LocalState& st, const Dataset& ds, const HyperParams& hp,
                                       std::vector<double>& values);

/// dw += A_k delta / (lambda n), accumulated in owned order.
void accumulate_primal_delta(std::span<const double> delta_alpha, const LocalState& st, const Dataset& ds,
                             double lambda, std::span<double> dw);

}  // namespace acpd
