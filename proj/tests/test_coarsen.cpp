#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "sparselight/coarsen.hpp"
#include "sparselight/rng.hpp"

using namespace sparselight;

namespace {

std::vector<Vpl> random_vpls(std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<Vpl> v(n);
    for (auto& l : v) {
        l.position = {rng.uniform(), rng.uniform(), rng.uniform()};
        l.normal = {0, -1, 0};
        l.intensity = Color{0.2 + rng.uniform(), 0.2 + rng.uniform(), 0.2 + rng.uniform()};
    }
    return v;
}

// Dense table of unit responses, smooth in light position so nearby lights look alike.
struct SyntheticSlice {
    std::size_t rows;
    std::vector<Vpl> vpls;
    std::vector<Color> table;  // rows x vpls

    SyntheticSlice(std::size_t m, std::vector<Vpl> v, std::uint64_t seed) : rows(m), vpls(std::move(v)) {
        Rng rng(seed);
        std::vector<Vec3> receivers(m);
        for (auto& r : receivers) r = {rng.uniform(), rng.uniform() - 1.0, rng.uniform()};
        table.resize(m * vpls.size());
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < vpls.size(); ++j) {
                const Vec3 d = vpls[j].position - receivers[i];
                table[i * vpls.size() + j] = Color::gray(1.0 / (0.1 + dot(d, d)));
            }
    }
    Color response(std::uint32_t i, std::uint32_t j) const { return table[i * vpls.size() + j]; }
    ResponseCache cache() const {
        return ResponseCache([this](std::uint32_t i, std::uint32_t j) { return response(i, j); });
    }
};

bool audit_cut(const LightTree& tree, const Cut& cut) {
    std::vector<int> mark(tree.size(), 0);
    for (const auto c : cut) mark[c] = 1;
    for (std::uint32_t v = 0; v < tree.leaf_count(); ++v) {
        int hits = 0;
        for (std::uint32_t n = tree.leaf_of(v); n != LightTreeNode::kNone; n = tree.node(n).parent) hits += mark[n];
        if (hits != 1) return false;
    }
    return true;
}

Cut all_leaves(const LightTree& tree) {
    Cut cut;
    for (std::uint32_t i = 0; i < tree.size(); ++i)
        if (tree.node(i).is_leaf()) cut.push_back(i);
    return cut;
}

}  // namespace

TEST(SampleCount, Examples) {
    EXPECT_EQ(sample_count(Color::gray(10.0), 2.0, 1, 100), 20u);
    EXPECT_EQ(sample_count(Color{}, 2.0, 3, 100), 3u);
    EXPECT_EQ(sample_count(Color::gray(1e9), 2.0, 1, 100), 100u);
    EXPECT_EQ(sample_count(Color::gray(10.0), 2.0, 50, 40), 40u);
    EXPECT_THROW(sample_count(Color::gray(1.0), 0.0, 1, 10), std::invalid_argument);
}

TEST(PickPixels, DistinctSortedAndAllWhenLarge) {
    Rng rng(1);
    const auto rows = pick_pixels(50, 20, rng);
    ASSERT_EQ(rows.size(), 20u);
    EXPECT_TRUE(std::is_sorted(rows.begin(), rows.end()));
    EXPECT_EQ(std::set<std::uint32_t>(rows.begin(), rows.end()).size(), 20u);
    EXPECT_EQ(pick_pixels(7, 9, rng).size(), 7u);
}

TEST(PickPixels, UniformChiSquare) {
    // 10000 draws of 10 rows from 100: each row expected 1000 times.
    Rng rng(2);
    std::vector<double> hits(100, 0.0);
    for (int k = 0; k < 10000; ++k)
        for (const auto r : pick_pixels(100, 10, rng)) hits[r] += 1.0;
    double chi2 = 0.0;
    for (const double h : hits) chi2 += (h - 1000.0) * (h - 1000.0) / 1000.0;
    // 99 dof; 99.9th percentile is about 148.
    EXPECT_LT(chi2, 148.0);
}

TEST(MergeError, Examples) {
    const std::vector<Color> a{Color::gray(1), Color::gray(2)};
    const std::vector<Color> b{Color::gray(2), Color::gray(3)};
    EXPECT_NEAR(merge_error(a, b, Color::gray(1), Color::gray(1)), 1.0, 1e-12);
    const std::vector<Color> zero{Color{}, Color{}};
    const std::vector<Color> c{Color::gray(0.7), Color::gray(0.2)};
    EXPECT_NEAR(merge_error(zero, c, Color{}, Color::gray(1)), 0.7, 1e-12);
    // Proportional columns merge for free.
    const std::vector<Color> d{Color::gray(2), Color::gray(4)};
    EXPECT_NEAR(merge_error(a, d, Color::gray(1), Color::gray(2)), 0.0, 1e-12);
}

TEST(Coarsen, ZeroBoundLeavesCutUnchanged) {
    const SyntheticSlice s(40, random_vpls(32, 3), 4);
    const LightTree tree(s.vpls);
    auto cache = s.cache();
    Rng rng(5);
    const Cut g = all_leaves(tree);
    const auto res = coarsen_cut(s.rows, g, tree, ErrorBound{0.0}, {1.0, 40, 0}, rng, cache);
    EXPECT_EQ(res.cut, g);
    EXPECT_TRUE(res.merges.empty());
}

TEST(Coarsen, TargetAboveCutSizeLeavesCutUnchanged) {
    const SyntheticSlice s(40, random_vpls(32, 6), 7);
    const LightTree tree(s.vpls);
    auto cache = s.cache();
    Rng rng(8);
    const Cut g = all_leaves(tree);
    EXPECT_EQ(coarsen_cut(s.rows, g, tree, TargetLights{100}, {1.0, 4, 0}, rng, cache).cut, g);
}

TEST(Coarsen, ProportionalLightsMergeToRoot) {
    // Every light has the same response column: every merge is exact.
    std::vector<Vpl> v = random_vpls(16, 9);
    LightTree tree(v);
    ResponseCache cache([](std::uint32_t i, std::uint32_t) { return Color::gray(1.0 + i); });
    Rng rng(10);
    const auto res = coarsen_cut(30, all_leaves(tree), tree, ErrorBound{1e-9}, {1.0, 30, 0}, rng, cache);
    EXPECT_EQ(res.cut, Cut{0});
    for (const auto& m : res.merges) EXPECT_NEAR(m.cost, 0.0, 1e-9);
}

TEST(Coarsen, AuditAfterEveryMergeAndExactIntensities) {
    const SyntheticSlice s(60, random_vpls(64, 11), 12);
    const LightTree tree(s.vpls);
    for (std::uint32_t i = 0; i < tree.size(); ++i) {
        const auto& n = tree.node(i);
        if (!n.is_leaf()) EXPECT_EQ(n.intensity, tree.node(n.left).intensity + tree.node(n.right).intensity);
    }
    const Cut g = all_leaves(tree);
    for (std::size_t target = 64; target >= 1; --target) {
        auto cache = s.cache();
        Rng rng(13);
        const auto res = coarsen_cut(s.rows, g, tree, TargetLights{target}, {1.0, 8, 0}, rng, cache);
        EXPECT_EQ(res.cut.size(), target);
        EXPECT_TRUE(audit_cut(tree, res.cut)) << "target " << target;
        EXPECT_TRUE(is_valid_cut(tree, res.cut));
    }
}

TEST(Coarsen, CostsAreAccumulatedAlongDiscardedChildren) {
    const SyntheticSlice s(60, random_vpls(64, 14), 15);
    const LightTree tree(s.vpls);
    auto cache = s.cache();
    Rng rng(16);
    const auto res = coarsen_cut(s.rows, all_leaves(tree), tree, TargetLights{1}, {1.0, 8, 0}, rng, cache);
    std::vector<double> cost(tree.size(), 0.0);
    for (const auto& m : res.merges) {
        EXPECT_EQ(m.kept, tree.representative_child(m.parent));
        EXPECT_NEAR(m.cost, m.error + cost[m.discarded], 1e-12);
        EXPECT_GE(m.error, 0.0);
        cost[m.parent] = m.cost;
    }
}

TEST(Coarsen, EvaluationsAreBoundedBySampleSets) {
    const SyntheticSlice s(200, random_vpls(64, 17), 18);
    const LightTree tree(s.vpls);
    auto cache = s.cache();
    Rng rng(19);
    const auto res = coarsen_cut(s.rows, all_leaves(tree), tree, TargetLights{1}, {1.0, 6, 0}, rng, cache);
    std::size_t total = 0;
    for (const auto& m : res.merges) {
        total += m.new_evaluations;
        // Each merge evaluates at most its two columns on its sample set.
        EXPECT_LE(m.new_evaluations, 2 * m.samples);
    }
    EXPECT_EQ(total, cache.evaluations());
}

TEST(Coarsen, ObservationsAreExactCutEntries) {
    const SyntheticSlice s(80, random_vpls(64, 20), 21);
    const LightTree tree(s.vpls);
    auto cache = s.cache();
    Rng rng(22);
    const auto res = coarsen_cut(s.rows, all_leaves(tree), tree, TargetLights{12}, {1.0, 8, 0}, rng, cache);
    ASSERT_EQ(res.observations.cols(), res.cut.size());
    EXPECT_GT(res.observations.size(), 0u);
    for (const auto& o : res.observations.entries()) {
        const auto& n = tree.node(res.cut[o.col]);
        EXPECT_EQ(o.value, s.response(o.row, n.representative) * n.intensity);
    }
}

// Exhaustive oracle: at each step evaluate every mergeable pair of the current
// cut on all rows straight from the dense table and take the cheapest.
TEST(Coarsen, GreedyOrderMatchesExhaustiveEvaluation) {
    const SyntheticSlice s(48, random_vpls(64, 23), 24);
    const LightTree tree(s.vpls);
    auto cache = s.cache();
    Rng rng(25);
    // min_samples = rows: every sample set is the whole slice, so the greedy costs are deterministic.
    const auto res = coarsen_cut(s.rows, all_leaves(tree), tree, TargetLights{1}, {1.0, s.rows, 0}, rng, cache);
    ASSERT_EQ(res.merges.size(), 63u);

    std::vector<char> in(tree.size(), 0);
    std::vector<double> cost(tree.size(), 0.0);
    for (std::uint32_t i = 0; i < tree.size(); ++i) in[i] = tree.node(i).is_leaf();
    auto entry = [&](std::uint32_t node, std::uint32_t row) {
        const auto& n = tree.node(node);
        return luminance(s.response(row, n.representative) * n.intensity);
    };
    for (std::size_t step = 0; step < res.merges.size(); ++step) {
        double best = std::numeric_limits<double>::infinity();
        std::uint32_t best_parent = 0;
        for (std::uint32_t p = 0; p < tree.size(); ++p) {
            const auto& n = tree.node(p);
            if (n.is_leaf() || !in[n.left] || !in[n.right]) continue;
            const std::uint32_t a = tree.node(n.left).representative == n.representative ? n.left : n.right;
            const std::uint32_t b = a == n.left ? n.right : n.left;
            const double ratio = luminance(tree.node(b).intensity) / luminance(tree.node(a).intensity);
            double eps = 0.0;
            for (std::uint32_t r = 0; r < s.rows; ++r)
                eps = std::max(eps, std::abs(entry(b, r) - entry(a, r) * ratio));
            const double c = eps + cost[b];
            if (c < best) best = c, best_parent = p;
        }
        const auto& m = res.merges[step];
        ASSERT_EQ(m.parent, best_parent) << "step " << step;
        EXPECT_NEAR(m.cost, best, 1e-9 * std::max(1.0, best));
        in[tree.node(best_parent).left] = in[tree.node(best_parent).right] = 0;
        in[best_parent] = 1;
        cost[best_parent] = best;
    }
}

TEST(Coarsen, SamplesPerLuminanceTargetsBrightestParent) {
    const LightTree tree(random_vpls(32, 26));
    const Cut g = all_leaves(tree);
    const double k = samples_per_luminance_for(tree, g, 16.0);
    double brightest = 0.0;
    for (const auto c : g) brightest = std::max(brightest, luminance(tree.node(tree.node(c).parent).intensity));
    EXPECT_NEAR(k * brightest, 16.0, 1e-9);
}

TEST(Coarsen, RejectsInvalidCut) {
    const LightTree tree(random_vpls(8, 27));
    ResponseCache cache([](std::uint32_t, std::uint32_t) { return Color::gray(1); });
    Rng rng(28);
    EXPECT_THROW(coarsen_cut(10, Cut{}, tree, ErrorBound{1.0}, {}, rng, cache), std::invalid_argument);
}
