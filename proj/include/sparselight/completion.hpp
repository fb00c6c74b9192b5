#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "sparselight/observations.hpp"
#include "sparselight/rng.hpp"

namespace sparselight {

/// max - min of the observed luminances in column j. A column without
/// observations gets the mean importance of the observed columns.
double light_importance(const SparseObservations& obs, std::uint32_t j);
std::vector<double> light_importances(const SparseObservations& obs);

/// pdf(i, j) = f(i) g(j) / norm with f = 1.
struct Pdf {
    std::vector<double> column_weight;  // g(j) including the floor
    std::size_t rows = 0;
    double normalization = 0.0;  // rows * sum(g)

    double operator()(std::uint32_t, std::uint32_t j) const { return column_weight[j] / normalization; }
    double column_probability(std::uint32_t j) const {
        return column_weight[j] * static_cast<double>(rows) / normalization;
    }
};

/// g(j) = importance(j) + floor * mean importance. Falls back to the uniform
/// pdf when every importance is zero.
Pdf build_pdf(const SparseObservations& obs, double floor = 0.1);

struct SamplingStats {
    std::size_t draws = 0;        // column/row draws, duplicates included
    std::size_t duplicates = 0;
    std::size_t filled = 0;       // entries added by the fallback scan
    std::vector<std::size_t> column_draws;
};

/// Adds entries until |obs| >= ceil(rate * rows * cols): column from the pdf
/// marginal, row uniform, duplicates skipped without evaluation. After
/// 10x the missing count in draws, the rest comes from a shuffled scan of the
/// unobserved entries.
SparseObservations sample_entries(SparseObservations obs, double rate, const Pdf& pdf, Rng& rng,
                                  const EntryFn& entry, SamplingStats* stats = nullptr);

/// One forced sample at a random row for every empty column and, when
/// `rows_too`, at a random column for every empty row. Returns the count added.
std::size_t ensure_coverage(SparseObservations& obs, Rng& rng, const EntryFn& entry, bool rows_too = true);

class FactorizationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct AdmmParams {
    int rank = 16;  // q
    double alpha = 1.0;
    double beta = 1.0;
    double gamma = 1.6;
    int max_iter = 100;
    double tol = 1e-4;
    std::uint64_t seed = 0;

    /// Throws std::invalid_argument.
    void validate() const;
};

struct FactorPair {
    Eigen::MatrixXd x;  // m x q
    Eigen::MatrixXd y;  // q x n
};

struct ScalarEntry {
    std::uint32_t row = 0;
    std::uint32_t col = 0;
    double value = 0.0;
};

struct AdmmState {
    int iteration = 0;
    const Eigen::MatrixXd& x;
    const Eigen::MatrixXd& y;
    const Eigen::MatrixXd& z;
    const Eigen::MatrixXd& u;
    const Eigen::MatrixXd& v;
    double data_scale = 1.0;  // z holds M * data_scale on the known entries
};

struct AdmmTrace {
    std::vector<double> residual;  // observed-entry residual of (U, V), relative
    std::vector<double> primal;    // (|X - U| + |Y - V|) / |P(M)|
    int iterations = 0;
    std::function<void(const AdmmState&)> observer;  // called after each iteration
};

/// Nonnegative factorization M ~ X Y from the known entries, by the
/// alternating direction scheme on X, Y, Z, U, V and multipliers. Returns the
/// projected pair (U, V). Throws FactorizationError("rank exceeds dimensions")
/// or FactorizationError("diverged").
FactorPair admm_nmf(std::size_t rows, std::size_t cols, std::span<const ScalarEntry> entries,
                    const AdmmParams& params, AdmmTrace* trace = nullptr);

struct ColorFactors {
    std::array<FactorPair, 3> channel;
    int iterations = 0;  // max over channels
};

/// One independent factorization per color channel, all with params.seed.
ColorFactors admm_nmf(const SparseObservations& obs, const AdmmParams& params);

/// |P(XY - M)|_F / |P(M)|_F over the known entries; 0 when both vanish.
double completion_residual(std::span<const ScalarEntry> entries, const FactorPair& factors);
double completion_residual(const SparseObservations& obs, const ColorFactors& factors);

std::vector<ScalarEntry> channel_entries(const SparseObservations& obs, int channel);

}  // namespace sparselight
