#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "sparselight/math.hpp"

namespace sparselight {

struct Triangle {
    std::array<Vec3, 3> v;
    std::uint32_t material = 0;

    Vec3 face_normal() const { return normalize(cross(v[1] - v[0], v[2] - v[0])); }
    double area() const { return 0.5 * length(cross(v[1] - v[0], v[2] - v[0])); }
    Aabb bounds() const {
        Aabb b(v[0], v[1]);
        b.expand(v[2]);
        return b;
    }
};

struct Material {
    Color albedo{0.5, 0.5, 0.5};  // diffuse reflectance, components in [0,1]
    Color emission{};             // parsed and kept; emitters are the area lights
};

/// Parallelogram emitter `corner + u*edge_u + v*edge_v`, u,v in [0,1].
/// It emits on the side of cross(edge_u, edge_v). `power` is the radiant
/// intensity along the normal summed over the surface (Le * area).
struct AreaLight {
    Vec3 corner, edge_u, edge_v;
    Color power;

    Vec3 normal() const { return normalize(cross(edge_u, edge_v)); }
    double area() const { return length(cross(edge_u, edge_v)); }
    Vec3 point(double u, double v) const { return corner + edge_u * u + edge_v * v; }
};

struct Ray {
    Vec3 origin;
    Vec3 dir;  // unit length
    double tmin = 0.0;
    double tmax = std::numeric_limits<double>::infinity();
};

struct Camera {
    Vec3 position{0.0, 0.0, 1.0};
    Vec3 target{0.0, 0.0, 0.0};
    Vec3 up{0.0, 1.0, 0.0};
    double vfov_degrees = 40.0;

    /// Ray through the center of pixel (px, py); py = 0 is the top row.
    Ray primary_ray(int px, int py, int width, int height) const;
};

struct Scene {
    std::vector<Triangle> triangles;
    std::vector<Material> materials;
    std::vector<AreaLight> lights;
    Camera camera;

    /// Throws std::invalid_argument when an index is out of range, a triangle is
    /// degenerate, an albedo leaves [0,1], or there is no light.
    void validate() const;
    Aabb bounds() const;  // triangles and lights
    double diagonal() const { return bounds().diagonal(); }
};

struct Hit {
    std::uint32_t triangle = 0;
    double t = 0.0;
    double b1 = 0.0, b2 = 0.0;  // barycentrics of v[1], v[2]
    Vec3 position;
    Vec3 normal;  // face normal, not oriented
};

/// Moller-Trumbore. Returns t when the ray hits inside (tmin, tmax).
std::optional<Hit> intersect_triangle(const Triangle& tri, const Ray& ray);

/// Median-split bounding volume hierarchy over a triangle list.
class Bvh {
public:
    struct Node {
        Aabb box;
        std::uint32_t first = 0;  // leaf: first entry in the index array; inner: right child
        std::uint32_t count = 0;  // 0 for inner nodes (left child is the next node)
    };

    static constexpr std::uint32_t kLeafSize = 4;

    explicit Bvh(std::vector<Triangle> triangles);

    /// Nearest hit with t in (ray.tmin, ray.tmax). Equal distances resolve to
    /// the lower triangle index, so the result matches a linear scan exactly.
    std::optional<Hit> intersect(const Ray& ray) const;
    bool occluded(const Ray& ray) const;

    /// True when the segment (p, q), shortened by shadow_epsilon() at both
    /// ends, hits nothing. Symmetric in its arguments.
    bool visible(const Vec3& p, const Vec3& q) const;

    std::span<const Triangle> triangles() const { return triangles_; }
    std::span<const Node> nodes() const { return nodes_; }
    std::span<const std::uint32_t> indices() const { return indices_; }
    const Aabb& bounds() const { return nodes_.front().box; }
    double shadow_epsilon() const { return epsilon_; }

private:
    std::uint32_t build(std::uint32_t begin, std::uint32_t end, const std::vector<Aabb>& boxes,
                        const std::vector<Vec3>& centroids);
    template <bool AnyHit>
    std::optional<Hit> traverse(const Ray& ray) const;

    std::vector<Triangle> triangles_;
    std::vector<std::uint32_t> indices_;
    std::vector<Node> nodes_;
    double epsilon_ = 0.0;
};

/// One row of the lighting matrix: the first visible surface behind a pixel.
struct SurfacePoint {
    std::uint32_t pixel = 0;  // y * width + x
    Vec3 position;
    Vec3 normal;  // unit, facing the camera
    Color albedo;
};

/// One surface point per pixel whose primary ray hits geometry, in pixel order.
/// Background pixels are skipped.
std::vector<SurfacePoint> generate_surface_points(const Scene& scene, const Bvh& bvh, int width,
                                                  int height);

struct Vpl;

/// Lighting from a unit-intensity point light at (position, normal) to a
/// surface point: albedo/pi * cos_i * cos_j / max(d^2, clamp^2) * V.
/// `rays` is incremented when a shadow ray was cast.
Color shade_response(const SurfacePoint& point, const Vec3& light_position,
                     const Vec3& light_normal, const Bvh& bvh, double clamp_dist,
                     std::size_t* rays = nullptr);

/// Lighting-matrix entry A(i, j) = shade_response(...) * I_j.
Color shade_entry(const SurfacePoint& point, const Vpl& vpl, const Bvh& bvh, double clamp_dist);

}  // namespace sparselight
