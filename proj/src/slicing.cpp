#include "sparselight/slicing.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace sparselight {

namespace {

using Feature = std::array<double, 6>;

struct Splitter {
    const std::vector<Feature>& features;
    std::size_t target;
    std::vector<std::uint32_t>& order;
    std::vector<Slice>& out;

    void run(std::size_t begin, std::size_t end) {
        const std::size_t n = end - begin;
        if (n <= target) {
            Slice s;
            s.rows.assign(order.begin() + begin, order.begin() + end);
            std::sort(s.rows.begin(), s.rows.end());
            for (const auto r : s.rows)
                for (int d = 0; d < 6; ++d) s.centroid[d] += features[r][d];
            for (auto& c : s.centroid) c /= static_cast<double>(n);
            out.push_back(std::move(s));
            return;
        }
        Feature mean{}, var{};
        for (std::size_t i = begin; i < end; ++i)
            for (int d = 0; d < 6; ++d) mean[d] += features[order[i]][d];
        for (auto& m : mean) m /= static_cast<double>(n);
        for (std::size_t i = begin; i < end; ++i)
            for (int d = 0; d < 6; ++d) {
                const double e = features[order[i]][d] - mean[d];
                var[d] += e * e;
            }
        const int dim = static_cast<int>(std::max_element(var.begin(), var.end()) - var.begin());
        // Lower half has ceil(n/2) elements, so it holds the median.
        const std::size_t mid = begin + (n + 1) / 2;
        std::nth_element(order.begin() + begin, order.begin() + mid, order.begin() + end,
                         [&](std::uint32_t a, std::uint32_t b) {
                             const double fa = features[a][dim], fb = features[b][dim];
                             return fa < fb || (fa == fb && a < b);
                         });
        run(begin, mid);
        run(mid, end);
    }
};

}  // namespace

std::vector<Slice> slice_points(std::span<const SurfacePoint> points, const SliceParams& params) {
    if (params.target_size < 1) throw std::invalid_argument("slice target size must be at least 1");
    if (!(params.scene_diagonal > 0.0)) throw std::invalid_argument("scene diagonal must be positive");
    std::vector<Feature> features(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) {
        const auto& p = points[i];
        features[i] = {p.position.x / params.scene_diagonal, p.position.y / params.scene_diagonal,
                       p.position.z / params.scene_diagonal, p.normal.x * params.normal_weight,
                       p.normal.y * params.normal_weight, p.normal.z * params.normal_weight};
    }
    std::vector<std::uint32_t> order(points.size());
    std::iota(order.begin(), order.end(), 0u);
    std::vector<Slice> slices;
    if (points.empty()) return slices;
    Splitter{features, params.target_size, order, slices}.run(0, points.size());
    return slices;
}

}  // namespace sparselight
