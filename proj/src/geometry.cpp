#include "sparselight/geometry.hpp"

#include <algorithm>
#include <numeric>
#include <string>
#include <tuple>

#include "sparselight/vpl.hpp"

namespace sparselight {

Ray Camera::primary_ray(int px, int py, int width, int height) const {
    const Vec3 forward = normalize(target - position);
    const Vec3 right = normalize(cross(forward, up));
    const Vec3 true_up = cross(right, forward);
    const double tan_half = std::tan(0.5 * vfov_degrees * kPi / 180.0);
    const double aspect = static_cast<double>(width) / static_cast<double>(height);
    const double sx = ((px + 0.5) / width * 2.0 - 1.0) * aspect * tan_half;
    const double sy = (1.0 - (py + 0.5) / height * 2.0) * tan_half;
    return Ray{position, normalize(forward + right * sx + true_up * sy)};
}

void Scene::validate() const {
    if (lights.empty()) throw std::invalid_argument("scene has no lights");
    for (std::size_t i = 0; i < triangles.size(); ++i) {
        if (triangles[i].material >= materials.size())
            throw std::invalid_argument("triangle " + std::to_string(i) + ": material index out of range");
        if (!(triangles[i].area() > 0.0))
            throw std::invalid_argument("triangle " + std::to_string(i) + ": degenerate");
    }
    for (std::size_t i = 0; i < materials.size(); ++i) {
        const auto& m = materials[i];
        for (int c = 0; c < 3; ++c) {
            if (!(m.albedo[c] >= 0.0 && m.albedo[c] <= 1.0))
                throw std::invalid_argument("material " + std::to_string(i) + ": albedo outside [0,1]");
            if (!(m.emission[c] >= 0.0))
                throw std::invalid_argument("material " + std::to_string(i) + ": negative emission");
        }
    }
    for (std::size_t i = 0; i < lights.size(); ++i) {
        if (!(lights[i].area() > 0.0))
            throw std::invalid_argument("light " + std::to_string(i) + ": degenerate quad");
        if (!lights[i].power.nonnegative())
            throw std::invalid_argument("light " + std::to_string(i) + ": negative power");
    }
}

Aabb Scene::bounds() const {
    Aabb box;
    for (const auto& t : triangles) box.expand(t.bounds());
    for (const auto& l : lights) {
        box.expand(l.point(0, 0));
        box.expand(l.point(1, 0));
        box.expand(l.point(0, 1));
        box.expand(l.point(1, 1));
    }
    return box;
}

std::optional<Hit> intersect_triangle(const Triangle& tri, const Ray& ray) {
    const Vec3 e1 = tri.v[1] - tri.v[0];
    const Vec3 e2 = tri.v[2] - tri.v[0];
    const Vec3 pvec = cross(ray.dir, e2);
    const double det = dot(e1, pvec);
    if (std::abs(det) <= 1e-14 * length(e1) * length(e2)) return std::nullopt;
    const double inv_det = 1.0 / det;
    const Vec3 tvec = ray.origin - tri.v[0];
    const double u = dot(tvec, pvec) * inv_det;
    if (u < 0.0 || u > 1.0) return std::nullopt;
    const Vec3 qvec = cross(tvec, e1);
    const double v = dot(ray.dir, qvec) * inv_det;
    if (v < 0.0 || u + v > 1.0) return std::nullopt;
    const double t = dot(e2, qvec) * inv_det;
    if (!(t > ray.tmin && t < ray.tmax)) return std::nullopt;
    Hit hit;
    hit.t = t;
    hit.b1 = u;
    hit.b2 = v;
    hit.position = ray.origin + ray.dir * t;
    hit.normal = normalize(cross(e1, e2));
    return hit;
}

Bvh::Bvh(std::vector<Triangle> triangles) : triangles_(std::move(triangles)) {
    if (triangles_.empty()) throw std::invalid_argument("empty scene");
    const auto n = static_cast<std::uint32_t>(triangles_.size());
    std::vector<Aabb> boxes(n);
    std::vector<Vec3> centroids(n);
    Aabb all;
    for (std::uint32_t i = 0; i < n; ++i) {
        boxes[i] = triangles_[i].bounds();
        centroids[i] = (triangles_[i].v[0] + triangles_[i].v[1] + triangles_[i].v[2]) / 3.0;
        all.expand(boxes[i]);
    }
    epsilon_ = 1e-4 * all.diagonal();
    indices_.resize(n);
    std::iota(indices_.begin(), indices_.end(), 0u);
    nodes_.reserve(2 * n);
    build(0, n, boxes, centroids);

    // Pad boxes so slab tests never reject a hit the triangle test accepts.
    const double pad = 1e-9 * std::max(all.diagonal(), 1e-300);
    for (auto& node : nodes_) {
        node.box.lo -= Vec3(pad, pad, pad);
        node.box.hi += Vec3(pad, pad, pad);
    }
}

std::uint32_t Bvh::build(std::uint32_t begin, std::uint32_t end, const std::vector<Aabb>& boxes,
                         const std::vector<Vec3>& centroids) {
    const auto index = static_cast<std::uint32_t>(nodes_.size());
    nodes_.emplace_back();
    Aabb box, centroid_box;
    for (std::uint32_t i = begin; i < end; ++i) {
        box.expand(boxes[indices_[i]]);
        centroid_box.expand(centroids[indices_[i]]);
    }
    nodes_[index].box = box;
    if (end - begin <= kLeafSize) {
        nodes_[index].first = begin;
        nodes_[index].count = end - begin;
        return index;
    }
    const int axis = centroid_box.longest_axis();
    const std::uint32_t mid = begin + (end - begin) / 2;
    std::nth_element(indices_.begin() + begin, indices_.begin() + mid, indices_.begin() + end,
                     [&](std::uint32_t a, std::uint32_t b) {
                         const double ca = centroids[a][axis], cb = centroids[b][axis];
                         return ca < cb || (ca == cb && a < b);
                     });
    build(begin, mid, boxes, centroids);
    const std::uint32_t right = build(mid, end, boxes, centroids);
    nodes_[index].first = right;
    nodes_[index].count = 0;
    return index;
}

namespace {

bool slab_test(const Aabb& box, const Vec3& origin, const Vec3& inv_dir, double tmin, double tmax,
               double& t_enter) {
    double t0 = tmin, t1 = tmax;
    for (int axis = 0; axis < 3; ++axis) {
        double a = (box.lo[axis] - origin[axis]) * inv_dir[axis];
        double b = (box.hi[axis] - origin[axis]) * inv_dir[axis];
        if (a > b) std::swap(a, b);
        // NaN (0 * inf) leaves the interval untouched
        t0 = a > t0 ? a : t0;
        t1 = b < t1 ? b : t1;
        if (t0 > t1) return false;
    }
    t_enter = t0;
    return true;
}

}  // namespace

template <bool AnyHit>
std::optional<Hit> Bvh::traverse(const Ray& ray) const {
    const Vec3 inv_dir(1.0 / ray.dir.x, 1.0 / ray.dir.y, 1.0 / ray.dir.z);
    std::optional<Hit> best;
    double best_t = ray.tmax;
    std::uint32_t stack[64];
    int top = 0;
    stack[top++] = 0;
    while (top > 0) {
        const Node& node = nodes_[stack[--top]];
        double t_enter;
        if (!slab_test(node.box, ray.origin, inv_dir, ray.tmin, best_t, t_enter)) continue;
        if (node.count == 0) {
            stack[top++] = node.first;
            stack[top++] = static_cast<std::uint32_t>(&node - nodes_.data()) + 1;
            continue;
        }
        for (std::uint32_t k = node.first; k < node.first + node.count; ++k) {
            const std::uint32_t tri = indices_[k];
            Ray probe = ray;
            if (best) probe.tmax = std::nextafter(best_t, std::numeric_limits<double>::infinity());
            auto hit = intersect_triangle(triangles_[tri], probe);
            if (!hit) continue;
            if (!best || hit->t < best->t || (hit->t == best->t && tri < best->triangle)) {
                hit->triangle = tri;
                best = hit;
                best_t = hit->t;
                if constexpr (AnyHit) return best;
            }
        }
    }
    return best;
}

std::optional<Hit> Bvh::intersect(const Ray& ray) const { return traverse<false>(ray); }

bool Bvh::occluded(const Ray& ray) const { return traverse<true>(ray).has_value(); }

bool Bvh::visible(const Vec3& p, const Vec3& q) const {
    // Always trace from the lexicographically smaller endpoint.
    const bool swap = std::tie(q.x, q.y, q.z) < std::tie(p.x, p.y, p.z);
    const Vec3& from = swap ? q : p;
    const Vec3& to = swap ? p : q;
    const Vec3 d = to - from;
    const double dist = length(d);
    if (dist <= 2.0 * epsilon_) return true;
    return !occluded(Ray{from, d / dist, epsilon_, dist - epsilon_});
}

std::vector<SurfacePoint> generate_surface_points(const Scene& scene, const Bvh& bvh, int width,
                                                  int height) {
    if (width <= 0 || height <= 0) throw std::invalid_argument("image dimensions must be positive");
    std::vector<SurfacePoint> points;
    points.reserve(static_cast<std::size_t>(width) * height);
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            const Ray ray = scene.camera.primary_ray(x, y, width, height);
            const auto hit = bvh.intersect(ray);
            if (!hit) continue;
            const Triangle& tri = bvh.triangles()[hit->triangle];
            SurfacePoint sp;
            sp.pixel = static_cast<std::uint32_t>(y * width + x);
            sp.position = hit->position;
            sp.normal = dot(hit->normal, ray.dir) > 0.0 ? -hit->normal : hit->normal;
            sp.albedo = scene.materials[tri.material].albedo;
            points.push_back(sp);
        }
    }
    return points;
}

Color shade_response(const SurfacePoint& point, const Vec3& light_position,
                     const Vec3& light_normal, const Bvh& bvh, double clamp_dist,
                     std::size_t* rays) {
    const Vec3 d = point.position - light_position;
    const double d2 = dot(d, d);
    if (d2 == 0.0) return {};
    const Vec3 w = d / std::sqrt(d2);
    const double cos_light = dot(light_normal, w);
    const double cos_surface = -dot(point.normal, w);
    if (cos_light <= 0.0 || cos_surface <= 0.0) return {};
    if (rays) ++*rays;
    if (!bvh.visible(point.position, light_position)) return {};
    const double g = cos_surface * cos_light / (std::max(d2, clamp_dist * clamp_dist) * kPi);
    return point.albedo * g;
}

Color shade_entry(const SurfacePoint& point, const Vpl& vpl, const Bvh& bvh, double clamp_dist) {
    return shade_response(point, vpl.position, vpl.normal, bvh, clamp_dist) * vpl.intensity;
}

}  // namespace sparselight
