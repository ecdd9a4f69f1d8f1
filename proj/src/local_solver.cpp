#include "acpd/local_solver.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace acpd {

LocalState LocalState::create(const Partition& part, std::size_t dim, std::uint64_t seed) {
    LocalState st;
    st.worker = part.worker;
    st.owned = part.indices;
    st.alpha.assign(st.owned.size(), 0.0);
    st.model.assign(dim, 0.0);
    st.residual.assign(dim, 0.0);
    st.rng.seed(derive_seed(seed, 0x10000 + part.worker));
    return st;
}

std::vector<double> LocalState::effective_model(double gamma) const {
    std::vector<double> v(model.size());
    for (std::size_t j = 0; j < v.size(); ++j) v[j] = model[j] + gamma * residual[j];
    return v;
}

double local_subproblem_value(std::span<const double> delta_alpha, const LocalState& st, const Dataset& ds,
                              const HyperParams& hp) {
    if (delta_alpha.size() != st.owned.size()) {
        throw std::invalid_argument("local_subproblem_value: increment length does not match the owned block");
    }
    const double n = static_cast<double>(ds.size());
    const double lambda_n = hp.lambda * n;
    const auto w_eff = st.effective_model(hp.gamma);

    double conj = 0.0;
    std::vector<double> u(ds.dim(), 0.0);
    for (std::size_t j = 0; j < st.owned.size(); ++j) {
        const std::size_t i = st.owned[j];
        conj += LeastSquares::neg_conjugate(st.alpha[j] + delta_alpha[j], ds.label(i));
        if (delta_alpha[j] != 0.0) axpy(delta_alpha[j], ds.sample(i), u);
    }
    double w_sq = 0.0, cross = 0.0, u_sq = 0.0;
    for (std::size_t c = 0; c < u.size(); ++c) {
        w_sq += w_eff[c] * w_eff[c];
        cross += w_eff[c] * u[c];
        u_sq += u[c] * u[c];
    }
    const double K = static_cast<double>(hp.workers);
    return conj / n - 0.5 * hp.lambda / K * w_sq - cross / n -
           0.5 * hp.lambda * hp.sigma_prime() * u_sq / (lambda_n * lambda_n);
}

double local_subproblem_value(std::span<const std::pair<std::size_t, double>> delta_alpha, const LocalState& st,
                              const Dataset& ds, const HyperParams& hp) {
    std::vector<double> block(st.owned.size(), 0.0);
    for (const auto& [i, value] : delta_alpha) {
        const auto it = std::lower_bound(st.owned.begin(), st.owned.end(), i);
        if (it == st.owned.end() || *it != i) {
            throw std::invalid_argument("local_subproblem_value: sample " + std::to_string(i) +
                                        " is not owned by worker " + std::to_string(st.worker));
        }
        block[static_cast<std::size_t>(it - st.owned.begin())] += value;
    }
    return local_subproblem_value(block, st, ds, hp);
}

double coordinate_delta(std::span<const Feature> x, double sq_norm, double label, double current_alpha,
                        std::span<const double> direction, double sigma_prime, double lambda_n) {
    return (label - current_alpha - dot(x, direction)) / (1.0 + sigma_prime * sq_norm / lambda_n);
}

namespace {

template <typename OnStep>
std::vector<double> run_sdca(LocalState& st, const Dataset& ds, const HyperParams& hp, OnStep&& on_step) {
    std::vector<double> delta(st.owned.size(), 0.0);
    if (st.owned.empty() || hp.local_iters == 0) return delta;

    const double lambda_n = hp.lambda * static_cast<double>(ds.size());
    const double sigma_prime = hp.sigma_prime();
    const double step_scale = sigma_prime / lambda_n;
    // running direction v = w_eff + (sigma'/(lambda n)) A_k delta, rebuilt every call
    auto v = st.effective_model(hp.gamma);

    for (std::size_t h = 0; h < hp.local_iters; ++h) {
        const auto j = static_cast<std::size_t>(uniform_index(st.rng, st.owned.size()));
        const std::size_t i = st.owned[j];
        const auto x = ds.sample(i);
        const double step =
            coordinate_delta(x, ds.sq_norm(i), ds.label(i), st.alpha[j] + delta[j], v, sigma_prime, lambda_n);
        delta[j] += step;
        if (step != 0.0) axpy(step_scale * step, x, v);
        on_step(delta);
    }
    return delta;
}

}  // namespace

std::vector<double> solve_local(LocalState& st, const Dataset& ds, const HyperParams& hp) {
    return run_sdca(st, ds, hp, [](const std::vector<double>&) {});
}

std::vector<double> solve_local_traced(LocalState& st, const Dataset& ds, const HyperParams& hp,
                                       std::vector<double>& values) {
    values.clear();
    values.push_back(local_subproblem_value(std::vector<double>(st.owned.size(), 0.0), st, ds, hp));
    return run_sdca(st, ds, hp, [&](const std::vector<double>& delta) {
        values.push_back(local_subproblem_value(delta, st, ds, hp));
    });
}

void accumulate_primal_delta(std::span<const double> delta_alpha, const LocalState& st, const Dataset& ds,
                             double lambda, std::span<double> dw) {
    const double scale = 1.0 / (lambda * static_cast<double>(ds.size()));
    for (std::size_t j = 0; j < st.owned.size(); ++j) {
        if (delta_alpha[j] != 0.0) axpy(delta_alpha[j] * scale, ds.sample(st.owned[j]), dw);
    }
}

}  // namespace acpd
