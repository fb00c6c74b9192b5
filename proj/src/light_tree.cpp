#include "sparselight/light_tree.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <queue>
#include <stdexcept>
#include <string>
#include <tuple>

namespace sparselight {

namespace {

double angle_between(const Vec3& a, const Vec3& b) {
    if (dot(a, b) < 0.0) return kPi - 2.0 * std::asin(std::min(1.0, length(a + b) / 2.0));
    return 2.0 * std::asin(std::min(1.0, length(b - a) / 2.0));
}

Vec3 rotate(const Vec3& v, const Vec3& unit_axis, double theta) {
    const double c = std::cos(theta), s = std::sin(theta);
    return v * c + cross(unit_axis, v) * s + unit_axis * (dot(unit_axis, v) * (1.0 - c));
}

}  // namespace

bool DirectionCone::contains(const Vec3& dir, double slack) const {
    return angle_between(axis, normalize(dir)) <= half_angle + slack;
}

DirectionCone merge(const DirectionCone& a, const DirectionCone& b) {
    const double theta_d = angle_between(a.axis, b.axis);
    if (std::min(theta_d + b.half_angle, kPi) <= a.half_angle) return a;
    if (std::min(theta_d + a.half_angle, kPi) <= b.half_angle) return b;
    const double theta_o = 0.5 * (a.half_angle + theta_d + b.half_angle);
    if (theta_o >= kPi) return {a.axis, kPi};
    const Vec3 w = cross(a.axis, b.axis);
    if (dot(w, w) == 0.0) return {a.axis, kPi};
    const Vec3 axis = normalize(rotate(a.axis, normalize(w), theta_o - a.half_angle));
    // Rounding in the rotation can shave a hair off the cone.
    return {axis, std::min(kPi, theta_o + 1e-12)};
}

LightTree::LightTree(std::vector<Vpl> vpls) : vpls_(std::move(vpls)) {
    if (vpls_.empty()) throw std::invalid_argument("light tree needs at least one VPL");
    const auto n = static_cast<std::uint32_t>(vpls_.size());
    order_.resize(n);
    std::iota(order_.begin(), order_.end(), 0u);
    leaf_of_vpl_.resize(n);
    nodes_.reserve(2 * static_cast<std::size_t>(n) - 1);
    build(0, n, LightTreeNode::kNone);
}

std::uint32_t LightTree::build(std::uint32_t begin, std::uint32_t end, std::uint32_t parent) {
    const auto index = static_cast<std::uint32_t>(nodes_.size());
    nodes_.emplace_back();
    nodes_[index].parent = parent;
    if (end - begin == 1) {
        const std::uint32_t v = order_[begin];
        LightTreeNode& leaf = nodes_[index];
        leaf.box = Aabb(vpls_[v].position, vpls_[v].position);
        leaf.cone = DirectionCone::of(vpls_[v].normal);
        leaf.intensity = vpls_[v].intensity;
        leaf.representative = v;
        leaf.vpl = v;
        leaf_of_vpl_[v] = index;
        return index;
    }
    Aabb bounds;
    for (std::uint32_t i = begin; i < end; ++i) bounds.expand(vpls_[order_[i]].position);
    const int axis = bounds.longest_axis();
    const std::uint32_t mid = begin + (end - begin) / 2;
    std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                     [&](std::uint32_t a, std::uint32_t b) {
                         const double pa = vpls_[a].position[axis], pb = vpls_[b].position[axis];
                         return pa < pb || (pa == pb && a < b);
                     });
    const std::uint32_t left = build(begin, mid, index);
    const std::uint32_t right = build(mid, end, index);

    LightTreeNode& node = nodes_[index];
    const LightTreeNode& l = nodes_[left];
    const LightTreeNode& r = nodes_[right];
    node.left = left;
    node.right = right;
    node.box = merge(l.box, r.box);
    node.cone = merge(l.cone, r.cone);
    node.intensity = l.intensity + r.intensity;
    node.representative = luminance(vpls_[r.representative].intensity) >
                                  luminance(vpls_[l.representative].intensity)
                              ? r.representative
                              : l.representative;
    return index;
}

std::uint32_t LightTree::sibling(std::uint32_t i) const {
    const std::uint32_t p = nodes_[i].parent;
    if (p == LightTreeNode::kNone) return LightTreeNode::kNone;
    return nodes_[p].left == i ? nodes_[p].right : nodes_[p].left;
}

std::uint32_t LightTree::representative_child(std::uint32_t i) const {
    const LightTreeNode& n = nodes_[i];
    if (n.is_leaf()) return LightTreeNode::kNone;
    return nodes_[n.left].representative == n.representative ? n.left : n.right;
}

Vpl LightTree::representative_light(std::uint32_t i) const {
    Vpl v = vpls_[nodes_[i].representative];
    v.intensity = nodes_[i].intensity;
    return v;
}

bool is_valid_cut(const LightTree& tree, std::span<const std::uint32_t> cut) {
    std::vector<std::uint32_t> cover(tree.leaf_count(), 0);
    std::vector<std::uint32_t> stack;
    for (const std::uint32_t c : cut) {
        if (c >= tree.size()) return false;
        stack.push_back(c);
        while (!stack.empty()) {
            const std::uint32_t i = stack.back();
            stack.pop_back();
            const auto& n = tree.node(i);
            if (n.is_leaf()) {
                ++cover[n.vpl];
            } else {
                stack.push_back(n.left);
                stack.push_back(n.right);
            }
        }
    }
    return std::all_of(cover.begin(), cover.end(), [](std::uint32_t c) { return c == 1; });
}

double cone_cosine_bound(const DirectionCone& cone, const Aabb& from, const Aabb& to) {
    if (cone.half_angle >= kPi) return 1.0;
    const Aabb diff(to.lo - from.hi, to.hi - from.lo);
    if (diff.contains(Vec3{})) return 1.0;
    Vec3 t, b;
    orthonormal_basis(cone.axis, t, b);
    Aabb local;
    for (int corner = 0; corner < 8; ++corner) {
        const Vec3 p((corner & 1) ? diff.hi.x : diff.lo.x, (corner & 2) ? diff.hi.y : diff.lo.y,
                     (corner & 4) ? diff.hi.z : diff.lo.z);
        local.expand(Vec3(dot(p, t), dot(p, b), dot(p, cone.axis)));
    }
    auto min_sq = [](double lo, double hi) { return (lo <= 0.0 && hi >= 0.0) ? 0.0 : std::min(lo * lo, hi * hi); };
    auto max_sq = [](double lo, double hi) { return std::max(lo * lo, hi * hi); };
    const double zmax = local.hi.z;
    double cos_min_angle;
    if (zmax >= 0.0) {
        const double denom = zmax * zmax + min_sq(local.lo.x, local.hi.x) + min_sq(local.lo.y, local.hi.y);
        cos_min_angle = denom > 0.0 ? zmax / std::sqrt(denom) : 1.0;
    } else {
        const double denom = zmax * zmax + max_sq(local.lo.x, local.hi.x) + max_sq(local.lo.y, local.hi.y);
        cos_min_angle = zmax / std::sqrt(denom);
    }
    const double min_angle = std::acos(std::clamp(cos_min_angle, -1.0, 1.0));
    const double angle = std::max(0.0, min_angle - cone.half_angle);
    if (angle >= 0.5 * kPi) return 0.0;
    return std::cos(angle);
}

namespace {

double geometric_bound(const LightTreeNode& n, const Aabb& receivers, double clamp_dist) {
    const double d2 = min_distance_squared(n.box, receivers);
    return 1.0 / (kPi * std::max(d2, clamp_dist * clamp_dist));
}

}  // namespace

Color cluster_error_bound(const LightTree& tree, std::uint32_t node, const Aabb& receivers,
                          double clamp_dist) {
    const LightTreeNode& n = tree.node(node);
    if (n.is_leaf()) return {};
    const double g = geometric_bound(n, receivers, clamp_dist);
    return n.intensity * (g * cone_cosine_bound(n.cone, n.box, receivers));
}

Cut global_cut(const LightTree& tree, const Aabb& receivers, double clamp_dist,
               double relative_error, std::size_t max_nodes, GlobalCutStats* stats) {
    if (max_nodes < 1) throw std::invalid_argument("max_nodes must be at least 1");
    if (relative_error < 0.0) throw std::invalid_argument("relative_error must be non-negative");

    auto estimate = [&](std::uint32_t i) {
        return luminance(tree.node(i).intensity) * geometric_bound(tree.node(i), receivers, clamp_dist);
    };
    // (bound luminance, internal?, -index): largest bound first, internal nodes
    // before leaves, lower index on ties.
    using Entry = std::tuple<double, bool, std::int64_t>;
    std::priority_queue<Entry> heap;
    auto push = [&](std::uint32_t i) {
        heap.emplace(luminance(cluster_error_bound(tree, i, receivers, clamp_dist)),
                     !tree.node(i).is_leaf(), -static_cast<std::int64_t>(i));
    };

    double total = estimate(LightTree::root());
    std::size_t size = 1;
    std::size_t splits = 0;
    push(LightTree::root());
    while (!heap.empty()) {
        const auto [bound, internal, neg_index] = heap.top();
        if (!internal || bound < relative_error * total || size + 1 > max_nodes) break;
        heap.pop();
        const auto i = static_cast<std::uint32_t>(-neg_index);
        const auto& n = tree.node(i);
        total += estimate(n.left) + estimate(n.right) - estimate(i);
        push(n.left);
        push(n.right);
        ++size;
        ++splits;
    }

    Cut cut;
    cut.reserve(heap.size());
    double max_bound = 0.0;
    if (!heap.empty()) max_bound = std::get<0>(heap.top());
    while (!heap.empty()) {
        cut.push_back(static_cast<std::uint32_t>(-std::get<2>(heap.top())));
        heap.pop();
    }
    std::sort(cut.begin(), cut.end());
    if (stats) {
        double exact_total = 0.0;
        for (const auto i : cut) exact_total += estimate(i);
        stats->threshold = relative_error * exact_total;
        stats->max_bound = max_bound;
        stats->splits = splits;
    }
    return cut;
}

void save_cut(const std::filesystem::path& path, std::span<const std::uint32_t> cut) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    for (const auto i : cut) out << i << '\n';
}

Cut load_cut(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    Cut cut;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::size_t used = 0;
        unsigned long value = 0;
        try {
            value = std::stoul(line, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != line.size())
            throw std::runtime_error(path.string() + ":" + std::to_string(line_no) + ": not a node index");
        cut.push_back(static_cast<std::uint32_t>(value));
    }
    std::sort(cut.begin(), cut.end());
    return cut;
}

}  // namespace sparselight
