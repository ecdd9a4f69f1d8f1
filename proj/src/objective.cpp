#include "acpd/objective.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "acpd/rng.hpp"

namespace acpd {

void HyperParams::validate(std::size_t dim, std::size_t samples) const {
    auto fail = [](const std::string& msg) { throw std::invalid_argument("hyperparameters: " + msg); };
    if (!(lambda > 0.0) || !std::isfinite(lambda)) fail("lambda must be > 0");
    if (!(gamma > 0.0 && gamma <= 1.0)) fail("gamma must lie in (0, 1]");
    if (workers < 1) fail("K must be >= 1");
    if (workers > samples) fail("K must not exceed the number of samples");
    if (group < 1 || group > workers) fail("B must satisfy 1 <= B <= K");
    if (epoch < 1) fail("T must be >= 1");
    if (outer_iters < 1) fail("L must be >= 1");
    if (keep < 1 || keep > dim) fail("rho*d must satisfy 1 <= rho*d <= d");
    if (sigma_prime_override && !(*sigma_prime_override > 0.0)) fail("sigma' override must be > 0");
}

namespace {

void check_dims(std::size_t got, std::size_t want, const char* what) {
    if (got != want) {
        throw std::invalid_argument(std::string(what) + ": expected length " + std::to_string(want) + ", got " +
                                    std::to_string(got));
    }
}

double sq_norm(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return s;
}

}  // namespace

double primal_value(std::span<const double> w, const Dataset& ds, double lambda) {
    check_dims(w.size(), ds.dim(), "primal_value");
    double loss = 0.0;
    for (std::size_t i = 0; i < ds.size(); ++i) loss += LeastSquares::loss(dot(ds.sample(i), w), ds.label(i));
    return loss / static_cast<double>(ds.size()) + 0.5 * lambda * sq_norm(w);
}

std::vector<double> primal_from_dual(std::span<const double> alpha, const Dataset& ds, double lambda) {
    check_dims(alpha.size(), ds.size(), "primal_from_dual");
    const double scale = 1.0 / (lambda * static_cast<double>(ds.size()));
    std::vector<double> w(ds.dim(), 0.0);
    for (std::size_t i = 0; i < ds.size(); ++i) {
        if (alpha[i] != 0.0) axpy(alpha[i] * scale, ds.sample(i), w);
    }
    return w;
}

double dual_value(std::span<const double> alpha, const Dataset& ds, double lambda) {
    check_dims(alpha.size(), ds.size(), "dual_value");
    double conj = 0.0;
    for (std::size_t i = 0; i < ds.size(); ++i) conj += LeastSquares::neg_conjugate(alpha[i], ds.label(i));
    const auto w = primal_from_dual(alpha, ds, lambda);
    return conj / static_cast<double>(ds.size()) - 0.5 * lambda * sq_norm(w);
}

double raw_duality_gap(std::span<const double> alpha, const Dataset& ds, double lambda) {
    check_dims(alpha.size(), ds.size(), "duality_gap");
    const auto w = primal_from_dual(alpha, ds, lambda);
    const double n = static_cast<double>(ds.size());
    // P(w) - D(alpha) with the shared (lambda/2)|w|^2 terms added once each.
    double loss = 0.0;
    double conj = 0.0;
    for (std::size_t i = 0; i < ds.size(); ++i) {
        loss += LeastSquares::loss(dot(ds.sample(i), w), ds.label(i));
        conj += LeastSquares::neg_conjugate(alpha[i], ds.label(i));
    }
    return (loss - conj) / n + lambda * sq_norm(w);
}

double duality_gap(std::span<const double> alpha, const Dataset& ds, double lambda) {
    const double gap = raw_duality_gap(alpha, ds, lambda);
    if (gap < -1e-10) {
        throw ConsistencyError("duality gap " + std::to_string(gap) + " violates weak duality");
    }
    return std::max(gap, 0.0);
}

std::optional<RoundBound> theoretical_rounds(const HyperParams& hp, const BoundInputs& in) {
    if (!(in.theta >= 0.0 && in.theta < 1.0)) throw std::invalid_argument("theoretical_rounds: Theta must lie in [0, 1)");
    if (!(in.epsilon > 0.0)) throw std::invalid_argument("theoretical_rounds: epsilon must be > 0");
    if (in.samples == 0) throw std::invalid_argument("theoretical_rounds: n must be >= 1");
    if (!(in.mu > 0.0)) throw std::invalid_argument("theoretical_rounds: mu must be > 0");
    if (!(in.sigma_max >= 0.0)) throw std::invalid_argument("theoretical_rounds: sigma_max must be >= 0");
    if (!(hp.lambda > 0.0) || !(hp.gamma > 0.0) || hp.epoch < 1 || hp.group < 1 || hp.group > hp.workers) {
        throw std::invalid_argument("theoretical_rounds: invalid hyperparameters");
    }

    const double n = static_cast<double>(in.samples);
    const double lmn = hp.lambda * in.mu * n;
    const double drift = 2.0 * hp.gamma * n * static_cast<double>(hp.epoch - 1);
    const double coupling = hp.sigma_prime() * in.sigma_max + lmn;

    const double lead = drift - lmn;
    const double delta = lead * lead - (4.0 * drift / (1.0 - in.theta)) * coupling;
    if (delta < 0.0) return std::nullopt;
    const double s = (lmn - drift + std::sqrt(delta)) / (2.0 * coupling);
    if (!(s > 0.0 && s <= 1.0)) return std::nullopt;

    const double rate = static_cast<double>(hp.workers) /
                        (static_cast<double>(hp.group) * hp.gamma * (1.0 - in.theta) * s);
    const double rounds = in.mode == BoundMode::dual_suboptimality ? rate * std::log(1.0 / in.epsilon)
                                                                   : rate * std::log(rate / in.epsilon);
    return RoundBound{s, delta, rounds};
}

double estimate_sigma_max(std::span<const Partition> parts, const Dataset& ds, std::size_t iters,
                          std::uint64_t seed) {
    if (iters < 1) throw std::invalid_argument("estimate_sigma_max: iters must be >= 1");
    const std::size_t d = ds.dim();
    double best = 0.0;
    std::vector<double> v(d), u(d);
    for (const Partition& part : parts) {
        if (part.indices.empty()) continue;
        Rng rng(derive_seed(seed, part.worker));
        for (double& x : v) x = standard_normal(rng);
        double norm = std::sqrt(sq_norm(v));
        if (norm == 0.0) continue;
        for (double& x : v) x /= norm;

        double running = 0.0;
        for (std::size_t it = 0; it < iters; ++it) {
            // u = A_k A_k^T v, and v^T u = |A_k^T v|^2
            std::fill(u.begin(), u.end(), 0.0);
            double rayleigh = 0.0;
            for (std::size_t i : part.indices) {
                const double s = dot(ds.sample(i), v);
                rayleigh += s * s;
                axpy(s, ds.sample(i), u);
            }
            running = std::max(running, rayleigh);
            norm = std::sqrt(sq_norm(u));
            if (norm == 0.0) break;
            for (std::size_t j = 0; j < d; ++j) v[j] = u[j] / norm;
        }
        best = std::max(best, running);
    }
    return best;
}

}  // namespace acpd
