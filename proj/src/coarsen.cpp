#include "sparselight/coarsen.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <queue>
#include <stdexcept>
#include <unordered_map>

namespace sparselight {

std::size_t sample_count(const Color& total_intensity, double k, std::size_t min_n, std::size_t max_n) {
    if (!(k > 0.0)) throw std::invalid_argument("samples per luminance must be positive");
    const double raw = std::round(k * luminance(total_intensity));
    std::size_t n = min_n;
    if (raw > static_cast<double>(min_n)) {
        n = raw >= static_cast<double>(max_n) ? max_n : static_cast<std::size_t>(raw);
    }
    return std::min(n, max_n);
}

std::vector<std::uint32_t> pick_pixels(std::size_t slice_rows, std::size_t n, Rng& rng) {
    std::vector<std::uint32_t> rows;
    if (n >= slice_rows) {
        rows.resize(slice_rows);
        for (std::size_t i = 0; i < slice_rows; ++i) rows[i] = static_cast<std::uint32_t>(i);
        return rows;
    }
    // Selection sampling (Knuth's Algorithm S): uniform n-subsets, ascending.
    rows.reserve(n);
    std::size_t needed = n;
    for (std::size_t i = 0; i < slice_rows && needed > 0; ++i) {
        const std::size_t remaining = slice_rows - i;
        if (rng.below(remaining) < needed) {
            rows.push_back(static_cast<std::uint32_t>(i));
            --needed;
        }
    }
    return rows;
}

double merge_error(std::span<const Color> v_a, std::span<const Color> v_b, const Color& i_a,
                   const Color& i_b) {
    if (v_a.size() != v_b.size()) throw std::invalid_argument("merge_error: vector sizes differ");
    const double la = luminance(i_a);
    double worst = 0.0;
    if (la == 0.0) {
        for (const auto& v : v_b) worst = std::max(worst, std::abs(luminance(v)));
        return worst;
    }
    const double ratio = luminance(i_b) / la;
    for (std::size_t k = 0; k < v_a.size(); ++k)
        worst = std::max(worst, std::abs(luminance(v_b[k] - v_a[k] * ratio)));
    return worst;
}

namespace {

struct Candidate {
    MergeRecord record;
    std::vector<std::uint32_t> zeta;
};

}  // namespace

CoarsenResult coarsen_cut(std::size_t slice_rows, const Cut& global_cut, const LightTree& tree,
                          const CoarsenStop& stop, const CoarsenSampling& sampling, Rng& rng,
                          ResponseCache& cache) {
    if (slice_rows == 0) throw std::invalid_argument("empty slice");
    if (!is_valid_cut(tree, global_cut)) throw std::invalid_argument("coarsen_cut: invalid global cut");
    const std::size_t max_n =
        sampling.max_samples == 0 ? slice_rows : std::min(sampling.max_samples, slice_rows);
    const std::size_t min_n = std::min(sampling.min_samples, max_n);

    std::vector<std::uint8_t> in_cut(tree.size(), 0);
    for (const auto c : global_cut) in_cut[c] = 1;
    std::size_t cut_size = global_cut.size();

    std::unordered_map<std::uint32_t, double> cost;  // absent = 0 (global-cut nodes)
    std::unordered_map<std::uint32_t, std::vector<std::uint32_t>> samples;
    std::map<std::uint32_t, Candidate> pending;
    using HeapEntry = std::pair<double, std::uint32_t>;
    std::priority_queue<HeapEntry, std::vector<HeapEntry>, std::greater<>> heap;

    auto column = [&](std::uint32_t node, std::span<const std::uint32_t> rows) {
        const auto& n = tree.node(node);
        std::vector<Color> v(rows.size());
        for (std::size_t k = 0; k < rows.size(); ++k) v[k] = cache.get(rows[k], n.representative) * n.intensity;
        return v;
    };

    auto propose = [&](std::uint32_t parent) {
        Candidate c;
        MergeRecord& r = c.record;
        r.parent = parent;
        r.kept = tree.representative_child(parent);
        r.discarded = tree.sibling(r.kept);
        const auto za = samples.find(r.kept);
        const auto zb = samples.find(r.discarded);
        if (za != samples.end() && zb != samples.end()) {
            std::set_union(za->second.begin(), za->second.end(), zb->second.begin(), zb->second.end(),
                           std::back_inserter(c.zeta));
            r.unioned = true;
        } else {
            const std::size_t n =
                sample_count(tree.node(parent).intensity, sampling.samples_per_luminance, min_n, max_n);
            c.zeta = pick_pixels(slice_rows, n, rng);
        }
        const std::size_t before = cache.evaluations();
        const auto v_a = column(r.kept, c.zeta);
        const auto v_b = column(r.discarded, c.zeta);
        r.new_evaluations = cache.evaluations() - before;
        r.samples = c.zeta.size();
        r.error = merge_error(v_a, v_b, tree.node(r.kept).intensity, tree.node(r.discarded).intensity);
        const auto cb = cost.find(r.discarded);
        r.cost = r.error + (cb == cost.end() ? 0.0 : cb->second);
        heap.emplace(r.cost, parent);
        pending.emplace(parent, std::move(c));
    };

    auto mergeable = [&](std::uint32_t parent) {
        const auto& p = tree.node(parent);
        return !p.is_leaf() && in_cut[p.left] && in_cut[p.right];
    };

    for (const auto c : global_cut) {
        const std::uint32_t p = tree.node(c).parent;
        if (p != LightTreeNode::kNone && mergeable(p) && !pending.count(p)) propose(p);
    }

    CoarsenResult result;
    const bool by_target = std::holds_alternative<TargetLights>(stop);
    while (!heap.empty()) {
        const auto [top_cost, parent] = heap.top();
        if (by_target) {
            if (cut_size <= std::get<TargetLights>(stop).count) break;
        } else if (!(top_cost < std::get<ErrorBound>(stop).value)) {
            break;
        }
        heap.pop();
        auto it = pending.find(parent);
        if (it == pending.end() || !mergeable(parent)) continue;
        Candidate cand = std::move(it->second);
        pending.erase(it);

        const MergeRecord& r = cand.record;
        in_cut[r.kept] = 0;
        in_cut[r.discarded] = 0;
        in_cut[parent] = 1;
        --cut_size;
        cost[parent] = r.cost;
        samples[parent] = std::move(cand.zeta);
        result.merges.push_back(r);

        const std::uint32_t grand = tree.node(parent).parent;
        if (grand != LightTreeNode::kNone && mergeable(grand)) propose(grand);
    }

    for (std::uint32_t i = 0; i < tree.size(); ++i)
        if (in_cut[i]) result.cut.push_back(i);

    std::unordered_map<std::uint32_t, std::uint32_t> column_of_rep;
    for (std::uint32_t j = 0; j < result.cut.size(); ++j)
        column_of_rep.emplace(tree.node(result.cut[j]).representative, j);
    result.observations = SparseObservations(slice_rows, result.cut.size());
    cache.for_each([&](std::uint32_t row, std::uint32_t vpl, const Color& response) {
        const auto it = column_of_rep.find(vpl);
        if (it == column_of_rep.end()) return;
        result.observations.add(row, it->second, response * tree.node(result.cut[it->second]).intensity);
    });
    result.observations.sort();
    return result;
}

double samples_per_luminance_for(const LightTree& tree, const Cut& cut, double samples) {
    double brightest = 0.0;
    for (const auto c : cut) {
        const std::uint32_t p = tree.node(c).parent;
        brightest = std::max(brightest, luminance(tree.node(p == LightTreeNode::kNone ? c : p).intensity));
    }
    return brightest > 0.0 ? samples / brightest : 1.0;
}

double estimate_row_luminance(std::size_t slice_rows, const Cut& cut, const LightTree& tree,
                              std::size_t probe_rows, Rng& rng, ResponseCache& cache) {
    const auto rows = pick_pixels(slice_rows, std::max<std::size_t>(1, probe_rows), rng);
    double sum = 0.0;
    for (const auto row : rows)
        for (const auto c : cut)
            sum += luminance(cache.get(row, tree.node(c).representative) * tree.node(c).intensity);
    return sum / static_cast<double>(rows.size());
}

}  // namespace sparselight
