#include "sparselight/observations.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace sparselight {

SparseObservations::SparseObservations(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), mask_(rows * cols, 0) {}

double SparseObservations::density() const {
    return rows_ * cols_ == 0 ? 0.0 : static_cast<double>(entries_.size()) / static_cast<double>(rows_ * cols_);
}

void SparseObservations::add(std::uint32_t row, std::uint32_t col, const Color& value) {
    if (row >= rows_ || col >= cols_)
        throw std::out_of_range("observation (" + std::to_string(row) + ", " + std::to_string(col) + ") out of range");
    auto& bit = mask_[static_cast<std::size_t>(row) * cols_ + col];
    if (bit) throw std::invalid_argument("duplicate observation");
    for (int c = 0; c < 3; ++c)
        if (!(value[c] >= 0.0) || !std::isfinite(value[c]))
            throw std::invalid_argument("observation values must be finite and non-negative");
    bit = 1;
    entries_.push_back({row, col, value});
}

std::vector<std::size_t> SparseObservations::column_counts() const {
    std::vector<std::size_t> counts(cols_, 0);
    for (const auto& e : entries_) ++counts[e.col];
    return counts;
}

std::vector<std::size_t> SparseObservations::row_counts() const {
    std::vector<std::size_t> counts(rows_, 0);
    for (const auto& e : entries_) ++counts[e.row];
    return counts;
}

void SparseObservations::sort() {
    std::sort(entries_.begin(), entries_.end(), [](const Observation& a, const Observation& b) {
        return a.row < b.row || (a.row == b.row && a.col < b.col);
    });
}

const Color& ResponseCache::get(std::uint32_t row, std::uint32_t vpl) {
    auto [it, inserted] = map_.try_emplace(key(row, vpl));
    if (inserted) {
        it->second = fn_(row, vpl);
        ++evaluations_;
    }
    return it->second;
}

}  // namespace sparselight
