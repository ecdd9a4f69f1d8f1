#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "acpd/data.hpp"

namespace acpd {

/// Raised when a run produces values that break a mathematical invariant
/// (for example a duality gap clearly below zero).
class ConsistencyError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct HyperParams {
    double lambda = 1e-3;      // regularization, > 0
    double gamma = 1.0;        // aggregation step, in (0, 1]
    std::size_t workers = 4;   // K
    std::size_t group = 2;     // B, the server commits after B arrivals
    std::size_t epoch = 20;    // T, every T-th server step waits for all K
    std::size_t local_iters = 1000;  // H
    std::size_t outer_iters = 200;   // L
    std::size_t keep = 100;    // rho*d, coordinates kept per message
    std::uint64_t seed = 1;
    std::optional<double> sigma_prime_override;

    /// Subproblem coupling sigma' = gamma * B unless overridden.
    double sigma_prime() const {
        return sigma_prime_override.value_or(gamma * static_cast<double>(group));
    }

    /// Throws std::invalid_argument if a bound is violated for a problem of
    /// dimension `dim` with `samples` samples.
    void validate(std::size_t dim, std::size_t samples) const;
};

/// Least-squares loss phi_i(a) = (a - y_i)^2 / 2, which is 1/mu-smooth with mu = 1.
struct LeastSquares {
    static constexpr double mu = 1.0;

    static double loss(double margin, double y) {
        const double r = margin - y;
        return 0.5 * r * r;
    }
    /// -phi*(-alpha)
    static double neg_conjugate(double alpha, double y) { return alpha * y - 0.5 * alpha * alpha; }
};

/// (1/n) sum_i phi_i(w.x_i) + (lambda/2) |w|^2
double primal_value(std::span<const double> w, const Dataset& ds, double lambda);

/// (1/n) sum_i (alpha_i y_i - alpha_i^2/2) - (lambda/2) |A alpha / (lambda n)|^2
double dual_value(std::span<const double> alpha, const Dataset& ds, double lambda);

/// w(alpha) = A alpha / (lambda n)
std::vector<double> primal_from_dual(std::span<const double> alpha, const Dataset& ds, double lambda);

/// P(w(alpha)) - D(alpha). Values in [-1e-10, 0) are clamped to zero; anything
/// lower throws ConsistencyError.
double duality_gap(std::span<const double> alpha, const Dataset& ds, double lambda);

/// Unclamped gap, for audits that want to see the raw sign.
double raw_duality_gap(std::span<const double> alpha, const Dataset& ds, double lambda);

enum class BoundMode { dual_suboptimality, duality_gap };

struct RoundBound {
    double s;       // effective step fraction in (0, 1]
    double delta;   // discriminant
    double rounds;  // lower bound on outer iterations
};

struct BoundInputs {
    std::size_t samples = 0;   // n
    double mu = LeastSquares::mu;
    double sigma_max = 1.0;
    double theta = 0.9;        // local solver quality, a reporting convention
    double epsilon = 1e-6;
    BoundMode mode = BoundMode::duality_gap;
};

/// Outer-iteration bound for the group-wise protocol. Returns nullopt when the
/// discriminant is negative or s falls outside (0, 1]; throws
/// std::invalid_argument for out-of-range inputs.
std::optional<RoundBound> theoretical_rounds(const HyperParams& hp, const BoundInputs& in);

/// max_k of the top eigenvalue of A_k A_k^T, by seeded power iteration. The
/// running maximum of Rayleigh quotients is returned, so the estimate never
/// decreases as `iters` grows.
double estimate_sigma_max(std::span<const Partition> parts, const Dataset& ds, std::size_t iters,
                          std::uint64_t seed);

/// Sparse dot product of one sample with a dense vector.
inline double dot(std::span<const Feature> x, std::span<const double> v) {
    double s = 0.0;
    for (const Feature& f : x) s += f.value * v[f.index];
    return s;
}

/// v += scale * x
inline void axpy(double scale, std::span<const Feature> x, std::span<double> v) {
    for (const Feature& f : x) v[f.index] += scale * f.value;
}

}  // namespace acpd
