#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "sparselight/math.hpp"
#include "sparselight/vpl.hpp"

namespace sparselight {

/// Bounding cone of unit directions: every member is within half_angle of axis.
struct DirectionCone {
    Vec3 axis{0.0, 0.0, 1.0};
    double half_angle = 0.0;  // radians, pi = whole sphere

    static DirectionCone of(const Vec3& n) { return {n, 0.0}; }
    bool contains(const Vec3& dir, double slack = 1e-9) const;
};

DirectionCone merge(const DirectionCone& a, const DirectionCone& b);

struct LightTreeNode {
    static constexpr std::uint32_t kNone = 0xffffffffu;

    Aabb box;              // member VPL positions
    DirectionCone cone;    // member VPL normals
    Color intensity;       // I(node) = I(left) + I(right)
    std::uint32_t representative = 0;  // brightest member VPL
    std::uint32_t left = kNone, right = kNone;
    std::uint32_t parent = kNone;
    std::uint32_t vpl = kNone;  // leaves only

    bool is_leaf() const { return left == kNone; }
};

class LightTree {
public:
    /// Top-down build: longest-axis median split of VPL positions. Throws
    /// std::invalid_argument on an empty list.
    explicit LightTree(std::vector<Vpl> vpls);

    static constexpr std::uint32_t root() { return 0; }
    const LightTreeNode& node(std::uint32_t i) const { return nodes_[i]; }
    std::span<const LightTreeNode> nodes() const { return nodes_; }
    std::size_t size() const { return nodes_.size(); }
    std::span<const Vpl> vpls() const { return vpls_; }
    std::size_t leaf_count() const { return vpls_.size(); }
    std::uint32_t leaf_of(std::uint32_t vpl) const { return leaf_of_vpl_[vpl]; }

    std::uint32_t sibling(std::uint32_t i) const;
    /// The child whose subtree holds this node's representative.
    std::uint32_t representative_child(std::uint32_t i) const;

    /// Point light standing in for node i: representative position and normal,
    /// carrying the whole node intensity.
    Vpl representative_light(std::uint32_t i) const;

private:
    std::uint32_t build(std::uint32_t begin, std::uint32_t end, std::uint32_t parent);

    std::vector<Vpl> vpls_;
    std::vector<std::uint32_t> order_;
    std::vector<LightTreeNode> nodes_;
    std::vector<std::uint32_t> leaf_of_vpl_;
};

/// Node indices of a cut, ascending. Valid when every leaf has exactly one
/// ancestor-or-self in the set.
using Cut = std::vector<std::uint32_t>;

bool is_valid_cut(const LightTree& tree, std::span<const std::uint32_t> cut);

/// Conservative bound on |exact cluster - representative| lighting at any
/// surface point inside `receivers` (albedo <= 1, visibility taken as 1).
/// Leaves return 0: a leaf is never substituted.
Color cluster_error_bound(const LightTree& tree, std::uint32_t node, const Aabb& receivers,
                          double clamp_dist);

/// Upper bound of max(cos) between a VPL with normal in `cone` and any vector
/// from `from` to `to`.
double cone_cosine_bound(const DirectionCone& cone, const Aabb& from, const Aabb& to);

struct GlobalCutStats {
    double threshold = 0.0;       // relative_error * running total estimate at exit
    double max_bound = 0.0;       // largest luminance bound left in the cut
    std::size_t splits = 0;
};

/// Starting at the root, splits the node with the largest luminance bound
/// until every node's bound is below relative_error times the running total
/// (sum over the cut of luminance(I) / (pi * max(d_min^2, clamp^2))), or the
/// cut reaches max_nodes.
Cut global_cut(const LightTree& tree, const Aabb& receivers, double clamp_dist,
               double relative_error, std::size_t max_nodes, GlobalCutStats* stats = nullptr);

void save_cut(const std::filesystem::path& path, std::span<const std::uint32_t> cut);
Cut load_cut(const std::filesystem::path& path);

}  // namespace sparselight
