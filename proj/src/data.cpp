#include "acpd/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "acpd/rng.hpp"

namespace acpd {

Dataset::Dataset(std::size_t dim, std::vector<std::vector<Feature>> rows, std::vector<double> labels)
    : dim_(dim), labels_(std::move(labels)) {
    if (rows.size() != labels_.size()) {
        throw std::invalid_argument("Dataset: row count and label count differ");
    }
    offsets_.reserve(rows.size() + 1);
    sq_norms_.reserve(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const double y = labels_[i];
        if (y != 1.0 && y != -1.0) {
            throw std::invalid_argument("Dataset: label of sample " + std::to_string(i) + " is not +-1");
        }
        double sq = 0.0;
        for (std::size_t j = 0; j < rows[i].size(); ++j) {
            const Feature& f = rows[i][j];
            if (f.index >= dim_) {
                throw std::invalid_argument("Dataset: feature index out of range in sample " + std::to_string(i));
            }
            if (j > 0 && rows[i][j - 1].index >= f.index) {
                throw std::invalid_argument("Dataset: indices not increasing in sample " + std::to_string(i));
            }
            if (f.value == 0.0 || !std::isfinite(f.value)) {
                throw std::invalid_argument("Dataset: zero or non-finite value in sample " + std::to_string(i));
            }
            sq += f.value * f.value;
            entries_.push_back(f);
        }
        offsets_.push_back(entries_.size());
        sq_norms_.push_back(sq);
    }
}

namespace {

std::string_view trim(std::string_view s) {
    const auto is_space = [](char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n'; };
    while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
    while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
    return s;
}

template <typename T>
bool parse_number(std::string_view tok, T& out) {
    if (!tok.empty() && tok.front() == '+') tok.remove_prefix(1);
    if (tok.empty()) return false;
    const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), out);
    return ec == std::errc{} && ptr == tok.data() + tok.size();
}

std::vector<std::string_view> split_ws(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t pos = 0;
    while (pos < line.size()) {
        while (pos < line.size() && (line[pos] == ' ' || line[pos] == '\t')) ++pos;
        std::size_t end = pos;
        while (end < line.size() && line[end] != ' ' && line[end] != '\t') ++end;
        if (end > pos) out.push_back(line.substr(pos, end - pos));
        pos = end;
    }
    return out;
}

}  // namespace

Dataset parse_libsvm(std::istream& in, std::optional<std::size_t> dim) {
    std::vector<std::vector<Feature>> rows;
    std::vector<double> labels;
    std::size_t max_index = 0;
    std::string raw;
    std::size_t lineno = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        const std::string_view line = trim(raw);
        if (line.empty()) continue;
        const auto tokens = split_ws(line);

        double label = 0.0;
        if (!parse_number(tokens[0], label)) {
            throw ParseError(lineno, "malformed label '" + std::string(tokens[0]) + "'");
        }
        if (label == 0.0) {
            label = -1.0;
        } else if (label != 1.0 && label != -1.0) {
            throw ParseError(lineno, "label must be one of -1, 0, +1");
        }

        std::vector<Feature> row;
        row.reserve(tokens.size() - 1);
        std::uint64_t prev = 0;
        for (std::size_t t = 1; t < tokens.size(); ++t) {
            const std::string_view tok = tokens[t];
            const auto colon = tok.find(':');
            std::uint64_t idx = 0;
            double val = 0.0;
            if (colon == std::string_view::npos || !parse_number(tok.substr(0, colon), idx) ||
                !parse_number(tok.substr(colon + 1), val)) {
                throw ParseError(lineno, "malformed feature '" + std::string(tok) + "'");
            }
            if (idx == 0) throw ParseError(lineno, "feature indices are 1-based");
            if (idx <= prev) throw ParseError(lineno, "feature indices not strictly increasing");
            if (idx > UINT32_MAX) throw ParseError(lineno, "feature index too large");
            if (!std::isfinite(val)) throw ParseError(lineno, "non-finite feature value");
            prev = idx;
            max_index = std::max<std::size_t>(max_index, idx);
            if (val != 0.0) row.push_back({static_cast<std::uint32_t>(idx - 1), val});
        }
        rows.push_back(std::move(row));
        labels.push_back(label);
    }
    if (rows.empty()) throw ParseError(0, "empty input");
    if (dim && *dim < max_index) {
        throw ParseError(0, "dimension override " + std::to_string(*dim) + " is below max index " +
                                std::to_string(max_index));
    }
    return Dataset(dim.value_or(max_index), std::move(rows), std::move(labels));
}

Dataset parse_libsvm(std::string_view text, std::optional<std::size_t> dim) {
    std::istringstream in{std::string(text)};
    return parse_libsvm(in, dim);
}

Dataset load_libsvm(const std::string& path, std::optional<std::size_t> dim) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open dataset '" + path + "'");
    return parse_libsvm(in, dim);
}

std::string to_libsvm(const Dataset& ds) {
    std::string out;
    char buf[64];
    for (std::size_t i = 0; i < ds.size(); ++i) {
        out += ds.label(i) > 0 ? "+1" : "-1";
        for (const Feature& f : ds.sample(i)) {
            out += ' ';
            out += std::to_string(f.index + 1);
            out += ':';
            const auto res = std::to_chars(buf, buf + sizeof buf, f.value);
            out.append(buf, res.ptr);
        }
        out += '\n';
    }
    return out;
}

std::size_t count_outside_unit_ball(const Dataset& ds) {
    std::size_t count = 0;
    for (std::size_t i = 0; i < ds.size(); ++i) {
        if (ds.sq_norm(i) > 1.0) ++count;
    }
    return count;
}

Dataset normalize(const Dataset& ds) {
    Dataset out = ds;
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (out.sq_norms_[i] <= 1.0) continue;
        const double norm = std::sqrt(out.sq_norms_[i]);
        double sq = 0.0;
        for (std::size_t j = out.offsets_[i]; j < out.offsets_[i + 1]; ++j) {
            out.entries_[j].value /= norm;
            sq += out.entries_[j].value * out.entries_[j].value;
        }
        // Rounding can leave the norm a few ulps above one; pull it back so a
        // second pass is a no-op.
        while (sq > 1.0) {
            sq = 0.0;
            for (std::size_t j = out.offsets_[i]; j < out.offsets_[i + 1]; ++j) {
                out.entries_[j].value = std::nextafter(out.entries_[j].value, 0.0);
                sq += out.entries_[j].value * out.entries_[j].value;
            }
        }
        out.sq_norms_[i] = sq;
    }
    return out;
}

std::vector<Partition> partition_order(std::span<const std::size_t> order, std::size_t workers) {
    const std::size_t n = order.size();
    if (workers == 0 || workers > n) {
        throw std::invalid_argument("partition: need 1 <= K <= n (K=" + std::to_string(workers) +
                                    ", n=" + std::to_string(n) + ")");
    }
    std::vector<bool> seen(n, false);
    std::vector<Partition> parts(workers);
    for (std::size_t k = 0; k < workers; ++k) parts[k].worker = k;
    for (std::size_t pos = 0; pos < n; ++pos) {
        const std::size_t i = order[pos];
        if (i >= n || seen[i]) throw std::invalid_argument("partition: order is not a permutation");
        seen[i] = true;
        parts[pos % workers].indices.push_back(i);
    }
    for (auto& p : parts) std::sort(p.indices.begin(), p.indices.end());
    return parts;
}

std::vector<Partition> partition(const Dataset& ds, std::size_t workers, std::uint64_t seed) {
    std::vector<std::size_t> order(ds.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(derive_seed(seed, 0x5041525449ULL));
    for (std::size_t i = order.size(); i > 1; --i) {
        std::swap(order[i - 1], order[uniform_index(rng, i)]);
    }
    return partition_order(order, workers);
}

}  // namespace acpd
