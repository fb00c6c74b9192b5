#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <unordered_map>
#include <vector>

#include "sparselight/math.hpp"

namespace sparselight {

struct Observation {
    std::uint32_t row = 0;
    std::uint32_t col = 0;
    Color value;
};

/// Known entries of one slice's lighting matrix (rows = slice pixels,
/// columns = cut lights).
class SparseObservations {
public:
    SparseObservations() = default;
    SparseObservations(std::size_t rows, std::size_t cols);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return entries_.size(); }
    bool empty() const { return entries_.empty(); }
    double density() const;

    bool contains(std::uint32_t row, std::uint32_t col) const {
        return mask_[static_cast<std::size_t>(row) * cols_ + col] != 0;
    }
    /// Throws std::out_of_range / std::invalid_argument on bad index,
    /// duplicate, or a negative or non-finite value.
    void add(std::uint32_t row, std::uint32_t col, const Color& value);

    std::span<const Observation> entries() const { return entries_; }
    std::vector<std::size_t> column_counts() const;
    std::vector<std::size_t> row_counts() const;

    /// Row-major order; makes downstream summation order independent of
    /// the order entries were sampled in.
    void sort();

private:
    std::size_t rows_ = 0, cols_ = 0;
    std::vector<Observation> entries_;
    std::vector<std::uint8_t> mask_;
};

/// Evaluates one entry of a slice matrix on demand.
using EntryFn = std::function<Color(std::uint32_t row, std::uint32_t col)>;

/// Memo of unit-intensity responses keyed by (row, VPL). Every lighting-matrix
/// entry of a cut node is response(row, representative) * I(node), so merged
/// clusters sharing a representative reuse the same evaluation.
class ResponseCache {
public:
    using ResponseFn = std::function<Color(std::uint32_t row, std::uint32_t vpl)>;

    explicit ResponseCache(ResponseFn fn) : fn_(std::move(fn)) {}

    const Color& get(std::uint32_t row, std::uint32_t vpl);
    bool contains(std::uint32_t row, std::uint32_t vpl) const { return map_.count(key(row, vpl)) != 0; }
    std::size_t evaluations() const { return evaluations_; }

    template <typename Fn>
    void for_each(Fn&& fn) const {
        for (const auto& [k, v] : map_) fn(static_cast<std::uint32_t>(k >> 32), static_cast<std::uint32_t>(k), v);
    }

private:
    static std::uint64_t key(std::uint32_t row, std::uint32_t vpl) { return (std::uint64_t{row} << 32) | vpl; }

    ResponseFn fn_;
    std::unordered_map<std::uint64_t, Color> map_;
    std::size_t evaluations_ = 0;
};

}  // namespace sparselight
