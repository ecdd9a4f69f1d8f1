#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace acpd {

/// One stored nonzero of a sparse vector.
struct Feature {
    std::uint32_t index;
    double value;

    friend bool operator==(const Feature&, const Feature&) = default;
};

class ParseError : public std::runtime_error {
public:
    ParseError(std::size_t line, const std::string& what)
        : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// Sample-major sparse data matrix with +-1 labels.
///
/// Rows are stored CSR-style. Indices inside a row are strictly increasing,
/// below dim(), and explicit zeros are never stored.
class Dataset {
public:
    Dataset() = default;

    /// Validates and takes ownership; throws std::invalid_argument on any
    /// violated invariant.
    Dataset(std::size_t dim, std::vector<std::vector<Feature>> rows, std::vector<double> labels);

    std::size_t size() const noexcept { return labels_.size(); }
    std::size_t dim() const noexcept { return dim_; }
    std::size_t nnz() const noexcept { return entries_.size(); }

    std::span<const Feature> sample(std::size_t i) const {
        return {entries_.data() + offsets_[i], offsets_[i + 1] - offsets_[i]};
    }
    double label(std::size_t i) const { return labels_[i]; }
    std::span<const double> labels() const noexcept { return labels_; }

    /// Squared euclidean norm of sample i (cached).
    double sq_norm(std::size_t i) const { return sq_norms_[i]; }

    friend bool operator==(const Dataset&, const Dataset&) = default;

private:
    friend Dataset normalize(const Dataset&);

    std::size_t dim_ = 0;
    std::vector<std::size_t> offsets_{0};
    std::vector<Feature> entries_;
    std::vector<double> labels_;
    std::vector<double> sq_norms_;
};

/// Parses LIBSVM text (`<label> <idx>:<val> ...`, 1-based indices).
/// Labels 0/1 map to -1/+1; anything outside {-1, 0, 1} is rejected.
/// When `dim` is given it must cover every observed index.
Dataset parse_libsvm(std::istream& in, std::optional<std::size_t> dim = std::nullopt);
Dataset parse_libsvm(std::string_view text, std::optional<std::size_t> dim = std::nullopt);
Dataset load_libsvm(const std::string& path, std::optional<std::size_t> dim = std::nullopt);

/// Serializes with enough digits that parse_libsvm reproduces the values exactly.
std::string to_libsvm(const Dataset& ds);

/// Scales every sample with norm > 1 onto the unit sphere.
Dataset normalize(const Dataset& ds);

/// Number of samples normalize() would rescale.
std::size_t count_outside_unit_ball(const Dataset& ds);

/// Samples owned by one worker, sorted ascending.
struct Partition {
    std::size_t worker = 0;
    std::vector<std::size_t> indices;

    std::size_t size() const noexcept { return indices.size(); }
};

/// Deals `order` round-robin over K workers. `order` must be a permutation of [0, n).
std::vector<Partition> partition_order(std::span<const std::size_t> order, std::size_t workers);

/// Seeded shuffle of [0, n) followed by a round-robin deal.
std::vector<Partition> partition(const Dataset& ds, std::size_t workers, std::uint64_t seed);

}  // namespace acpd
