#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "sparselight/completion.hpp"

using namespace sparselight;

namespace {

// Nonnegative low-rank ground truth with uniform(0,1) factors.
Eigen::MatrixXd low_rank(int m, int n, int r, std::uint64_t seed) {
    Rng rng(seed);
    Eigen::MatrixXd a(m, r), b(r, n);
    for (int i = 0; i < m; ++i)
        for (int k = 0; k < r; ++k) a(i, k) = rng.uniform();
    for (int k = 0; k < r; ++k)
        for (int j = 0; j < n; ++j) b(k, j) = rng.uniform();
    return a * b;
}

std::vector<ScalarEntry> all_entries(const Eigen::MatrixXd& m) {
    std::vector<ScalarEntry> e;
    for (int i = 0; i < m.rows(); ++i)
        for (int j = 0; j < m.cols(); ++j)
            e.push_back({static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j), m(i, j)});
    return e;
}

std::vector<ScalarEntry> random_entries(const Eigen::MatrixXd& m, double rate, Rng& rng) {
    std::vector<ScalarEntry> e;
    for (int i = 0; i < m.rows(); ++i)
        for (int j = 0; j < m.cols(); ++j)
            if (rng.uniform() < rate)
                e.push_back({static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j), m(i, j)});
    return e;
}

// Mean of each consecutive window of `w` values must not increase. Windows at
// round-off level (converged) may jitter by 1e-12.
bool windowed_non_increasing(const std::vector<double>& r, std::size_t w) {
    double prev = std::numeric_limits<double>::infinity();
    for (std::size_t s = 0; s + w <= r.size(); s += w) {
        const double mean = std::accumulate(r.begin() + s, r.begin() + s + w, 0.0) / w;
        if (mean > prev * (1 + 1e-9) + 1e-12) return false;
        prev = mean;
    }
    return true;
}

SparseObservations observations_from(std::size_t m, std::size_t n, std::initializer_list<Observation> list) {
    SparseObservations obs(m, n);
    for (const auto& o : list) obs.add(o.row, o.col, o.value);
    return obs;
}

}  // namespace

TEST(Importance, RangeOfObservedLuminance) {
    const auto obs = observations_from(3, 2, {{0, 0, Color::gray(0)}, {1, 0, Color::gray(1)}, {2, 0, Color::gray(0.2)}});
    EXPECT_NEAR(light_importance(obs, 0), 1.0, 1e-12);
    // Column 1 has no observations: mean of the observed columns.
    EXPECT_NEAR(light_importance(obs, 1), 1.0, 1e-12);
    const auto single = observations_from(2, 1, {{0, 0, Color::gray(5)}});
    EXPECT_EQ(light_importance(single, 0), 0.0);
}

TEST(Pdf, MarginalsFollowImportanceAndSumToOne) {
    const auto obs = observations_from(
        4, 2, {{0, 0, Color::gray(0)}, {1, 0, Color::gray(3)}, {0, 1, Color::gray(1)}, {1, 1, Color::gray(2)}});
    const Pdf pdf = build_pdf(obs, 0.0);
    EXPECT_NEAR(pdf.column_probability(0), 0.75, 1e-12);
    EXPECT_NEAR(pdf.column_probability(1), 0.25, 1e-12);
    double total = 0.0;
    for (std::uint32_t i = 0; i < 4; ++i)
        for (std::uint32_t j = 0; j < 2; ++j) total += pdf(i, j);
    EXPECT_NEAR(total, 1.0, 1e-12);
    // The floor lifts zero-importance columns off zero.
    const auto flat = observations_from(2, 2, {{0, 0, Color::gray(0)}, {1, 0, Color::gray(1)}, {0, 1, Color::gray(1)}});
    EXPECT_GT(build_pdf(flat, 0.1).column_probability(1), 0.0);
    EXPECT_EQ(build_pdf(flat, 0.0).column_probability(1), 0.0);
}

TEST(Sampling, RateOneGivesFullMatrix) {
    SparseObservations obs(30, 7);
    obs.add(3, 2, Color::gray(1));
    Rng rng(1);
    const auto full = sample_entries(obs, 1.0, build_pdf(obs), rng, [](auto i, auto j) { return Color::gray(i + j); });
    EXPECT_EQ(full.size(), 210u);
    for (std::uint32_t i = 0; i < 30; ++i)
        for (std::uint32_t j = 0; j < 7; ++j) EXPECT_TRUE(full.contains(i, j));
}

TEST(Sampling, ReachesTargetCountWithoutDuplicates) {
    SparseObservations obs(800, 120);
    Rng rng(2);
    for (std::uint32_t j = 0; j < 120; ++j) obs.add(static_cast<std::uint32_t>(rng.below(800)), j, Color::gray(j % 7));
    SamplingStats stats;
    const auto out = sample_entries(obs, 0.1, build_pdf(obs), rng, [](auto, auto j) { return Color::gray(j); }, &stats);
    EXPECT_GE(out.size(), 9600u);
    EXPECT_EQ(out.size(), 9600u);
    EXPECT_EQ(stats.draws, out.size() - obs.size() + stats.duplicates);
}

TEST(Sampling, ColumnFrequenciesFollowPdf) {
    // Columns with importance 1, 2, 3, 4 (no floor); draws per column within 3 sigma.
    SparseObservations obs(10000, 4);
    for (std::uint32_t j = 0; j < 4; ++j) {
        obs.add(0, j, Color{});
        obs.add(1, j, Color::gray(j + 1.0));
    }
    const Pdf pdf = build_pdf(obs, 0.0);
    Rng rng(3);
    SamplingStats stats;
    sample_entries(obs, 0.5, pdf, rng, [](auto, auto) { return Color{}; }, &stats);
    for (std::uint32_t j = 0; j < 4; ++j) {
        const double p = pdf.column_probability(j);
        const double expected = p * stats.draws;
        const double sigma = std::sqrt(stats.draws * p * (1 - p));
        EXPECT_NEAR(static_cast<double>(stats.column_draws[j]), expected, 3 * sigma) << "column " << j;
    }
}

TEST(Sampling, CoverageFillsEmptyRowsAndColumns) {
    SparseObservations obs(5, 4);
    obs.add(0, 0, Color::gray(1));
    Rng rng(4);
    const std::size_t added = ensure_coverage(obs, rng, [](auto, auto) { return Color::gray(1); });
    EXPECT_GE(added, 4u);
    for (const auto c : obs.column_counts()) EXPECT_GT(c, 0u);
    for (const auto c : obs.row_counts()) EXPECT_GT(c, 0u);
}

TEST(Admm, FullyObservedRankOneConverges) {
    const auto m = low_rank(30, 20, 1, 5);
    const auto e = all_entries(m);
    AdmmParams p;
    p.rank = 1;
    p.max_iter = 100;
    p.tol = 0.0;
    AdmmTrace trace;
    const auto f = admm_nmf(30, 20, e, p, &trace);
    EXPECT_LE(completion_residual(e, f), 1e-3);
    EXPECT_LE(trace.iterations, 100);
    EXPECT_TRUE(windowed_non_increasing(trace.residual, 10));
}

TEST(Admm, FactorsAreExactlyNonnegative) {
    const auto m = low_rank(60, 40, 3, 6);
    Rng rng(7);
    const auto e = random_entries(m, 0.3, rng);
    AdmmParams p;
    p.rank = 4;
    const auto f = admm_nmf(60, 40, e, p);
    EXPECT_GE(f.x.minCoeff(), 0.0);
    EXPECT_GE(f.y.minCoeff(), 0.0);
}

TEST(Admm, ZAgreesWithDataOnKnownEntries) {
    const auto m = low_rank(25, 15, 2, 8);
    Rng rng(9);
    const auto e = random_entries(m, 0.5, rng);
    AdmmParams p;
    p.rank = 2;
    p.max_iter = 20;
    AdmmTrace trace;
    bool checked = false;
    trace.observer = [&](const AdmmState& s) {
        for (const auto& x : e) EXPECT_EQ(s.z(x.row, x.col), x.value * s.data_scale);
        checked = true;
    };
    admm_nmf(25, 15, e, p, &trace);
    EXPECT_TRUE(checked);
}

TEST(Admm, WindowedResidualTrendOnPartialData) {
    const auto m = low_rank(100, 60, 4, 10);
    Rng rng(11);
    const auto e = random_entries(m, 0.3, rng);
    AdmmParams p;
    p.rank = 4;
    p.tol = 0.0;
    AdmmTrace trace;
    admm_nmf(100, 60, e, p, &trace);
    ASSERT_EQ(trace.residual.size(), 100u);
    EXPECT_TRUE(windowed_non_increasing(trace.residual, 10));
}

TEST(Admm, ZeroMatrixGivesZeroFactors) {
    std::vector<ScalarEntry> e{{0, 0, 0.0}, {1, 2, 0.0}};
    AdmmParams p;
    p.rank = 2;
    const auto f = admm_nmf(3, 4, e, p);
    EXPECT_EQ(f.x.rows(), 3);
    EXPECT_EQ(f.y.cols(), 4);
    EXPECT_EQ((f.x * f.y).norm(), 0.0);
}

TEST(Admm, RankAboveDimensionsThrows) {
    std::vector<ScalarEntry> e{{0, 0, 1.0}};
    AdmmParams p;
    p.rank = 5;
    EXPECT_THROW(admm_nmf(4, 10, e, p), FactorizationError);
}

TEST(Admm, ParamsValidate) {
    AdmmParams p;
    EXPECT_NO_THROW(p.validate());
    p.gamma = 1.7;
    EXPECT_THROW(p.validate(), std::invalid_argument);
    p = {};
    p.alpha = 0.0;
    EXPECT_THROW(p.validate(), std::invalid_argument);
    p = {};
    p.rank = 0;
    EXPECT_THROW(p.validate(), std::invalid_argument);
}

TEST(Admm, ChannelsAreIndependent) {
    // Permuting the color channels permutes the factors.
    const auto a = low_rank(20, 12, 2, 12), b = low_rank(20, 12, 2, 13), c = low_rank(20, 12, 2, 14);
    SparseObservations o1(20, 12), o2(20, 12);
    Rng rng(15);
    for (std::uint32_t i = 0; i < 20; ++i)
        for (std::uint32_t j = 0; j < 12; ++j)
            if (rng.uniform() < 0.6) {
                o1.add(i, j, Color{a(i, j), b(i, j), c(i, j)});
                o2.add(i, j, Color{c(i, j), a(i, j), b(i, j)});
            }
    AdmmParams p;
    p.rank = 2;
    const auto f1 = admm_nmf(o1, p), f2 = admm_nmf(o2, p);
    EXPECT_EQ(f1.channel[0].x, f2.channel[1].x);
    EXPECT_EQ(f1.channel[1].y, f2.channel[2].y);
    EXPECT_EQ(f1.channel[2].x, f2.channel[0].x);
}

TEST(CompletionResidual, Examples) {
    FactorPair f{Eigen::MatrixXd::Ones(2, 1), Eigen::MatrixXd::Ones(1, 2)};
    const std::vector<ScalarEntry> exact{{0, 0, 1.0}, {1, 1, 1.0}};
    EXPECT_EQ(completion_residual(exact, f), 0.0);
    const std::vector<ScalarEntry> off{{0, 0, 2.0}};
    EXPECT_NEAR(completion_residual(off, f), 0.5, 1e-12);
    FactorPair z{Eigen::MatrixXd::Zero(2, 1), Eigen::MatrixXd::Zero(1, 2)};
    EXPECT_NEAR(completion_residual(exact, z), 1.0, 1e-12);
    const std::vector<ScalarEntry> zeros{{0, 0, 0.0}};
    EXPECT_EQ(completion_residual(zeros, z), 0.0);
}
