#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "sparselight/geometry.hpp"

namespace sparselight {

/// A group of lighting-matrix rows with similar position and normal.
struct Slice {
    std::vector<std::uint32_t> rows;  // indices into the surface-point list, ascending
    std::array<double, 6> centroid{};  // scaled position followed by scaled normal
};

struct SliceParams {
    std::size_t target_size = 800;
    double scene_diagonal = 1.0;   // positions are divided by this
    double normal_weight = 0.3;    // normals are multiplied by this (after scaling positions)
};

/// Recursive binary split of the 6D point cloud along the dimension of largest
/// variance at the median (the lower half takes the median element), until a
/// node holds at most target_size points. Slices come out in depth-first order.
std::vector<Slice> slice_points(std::span<const SurfacePoint> points, const SliceParams& params);

}  // namespace sparselight
