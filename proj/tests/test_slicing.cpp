#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "sparselight/rng.hpp"
#include "sparselight/slicing.hpp"

using namespace sparselight;

namespace {

std::vector<SurfacePoint> random_points(std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<SurfacePoint> pts(n);
    for (std::size_t i = 0; i < n; ++i) {
        pts[i].pixel = static_cast<std::uint32_t>(i);
        pts[i].position = {rng.uniform(), rng.uniform(), rng.uniform()};
        const int axis = static_cast<int>(rng.below(3));
        Vec3 nrm{};
        nrm[axis] = rng.uniform() < 0.5 ? -1.0 : 1.0;
        pts[i].normal = nrm;
    }
    return pts;
}

}  // namespace

TEST(Slicing, PartitionsEveryPointOnce) {
    const auto pts = random_points(4096, 1);
    const auto slices = slice_points(pts, {800, std::sqrt(3.0), 0.3});
    std::vector<int> seen(pts.size(), 0);
    for (const auto& s : slices) {
        EXPECT_LE(s.rows.size(), 800u);
        EXPECT_GT(s.rows.size(), 0u);
        EXPECT_TRUE(std::is_sorted(s.rows.begin(), s.rows.end()));
        for (const auto r : s.rows) ++seen[r];
    }
    for (const auto c : seen) EXPECT_EQ(c, 1);
}

TEST(Slicing, MedianSplitGivesBalancedSizes) {
    const auto pts = random_points(4096, 2);
    const auto slices = slice_points(pts, {800, 1.0, 0.3});
    // 4096 -> 2048 -> 1024 -> 512
    ASSERT_EQ(slices.size(), 8u);
    for (const auto& s : slices) EXPECT_EQ(s.rows.size(), 512u);
}

TEST(Slicing, SmallInputIsOneSlice) {
    const auto pts = random_points(100, 3);
    const auto slices = slice_points(pts, {800, 1.0, 0.3});
    ASSERT_EQ(slices.size(), 1u);
    EXPECT_EQ(slices[0].rows.size(), 100u);
    EXPECT_TRUE(slice_points(std::span<const SurfacePoint>{}, {800, 1.0, 0.3}).empty());
}

TEST(Slicing, Deterministic) {
    const auto pts = random_points(3000, 4);
    const auto a = slice_points(pts, {300, 1.0, 0.3});
    const auto b = slice_points(pts, {300, 1.0, 0.3});
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t k = 0; k < a.size(); ++k) EXPECT_EQ(a[k].rows, b[k].rows);
}

TEST(Slicing, SeparatesOpposingNormals) {
    // Same positions, opposite normals; a large normal weight must split by normal first.
    std::vector<SurfacePoint> pts(200);
    Rng rng(5);
    for (std::size_t i = 0; i < pts.size(); ++i) {
        pts[i].pixel = static_cast<std::uint32_t>(i);
        pts[i].position = {rng.uniform() * 0.01, rng.uniform() * 0.01, rng.uniform() * 0.01};
        pts[i].normal = {0, i % 2 ? 1.0 : -1.0, 0};
    }
    const auto slices = slice_points(pts, {100, 1.0, 1.0});
    ASSERT_EQ(slices.size(), 2u);
    for (const auto& s : slices) {
        const double y = pts[s.rows[0]].normal.y;
        for (const auto r : s.rows) EXPECT_EQ(pts[r].normal.y, y);
    }
}
