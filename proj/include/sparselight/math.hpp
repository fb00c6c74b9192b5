#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>

namespace sparselight {

inline constexpr double kPi = std::numbers::pi;

struct Vec3 {
    double x = 0.0, y = 0.0, z = 0.0;

    constexpr Vec3() = default;
    constexpr Vec3(double x_, double y_, double z_) : x(x_), y(y_), z(z_) {}

    constexpr double operator[](int axis) const { return axis == 0 ? x : (axis == 1 ? y : z); }
    constexpr double& operator[](int axis) { return axis == 0 ? x : (axis == 1 ? y : z); }

    constexpr Vec3 operator-() const { return {-x, -y, -z}; }
    constexpr Vec3& operator+=(const Vec3& o) { x += o.x; y += o.y; z += o.z; return *this; }
    constexpr Vec3& operator-=(const Vec3& o) { x -= o.x; y -= o.y; z -= o.z; return *this; }
    constexpr Vec3& operator*=(double s) { x *= s; y *= s; z *= s; return *this; }

    friend constexpr Vec3 operator+(Vec3 a, const Vec3& b) { return a += b; }
    friend constexpr Vec3 operator-(Vec3 a, const Vec3& b) { return a -= b; }
    friend constexpr Vec3 operator*(Vec3 a, double s) { return a *= s; }
    friend constexpr Vec3 operator*(double s, Vec3 a) { return a *= s; }
    friend constexpr Vec3 operator/(Vec3 a, double s) { return a *= (1.0 / s); }
    friend constexpr bool operator==(const Vec3&, const Vec3&) = default;
};

constexpr double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
constexpr Vec3 cross(const Vec3& a, const Vec3& b) {
    return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
inline double length(const Vec3& v) { return std::sqrt(dot(v, v)); }
inline Vec3 normalize(const Vec3& v) { return v / length(v); }
constexpr Vec3 min(const Vec3& a, const Vec3& b) {
    return {std::min(a.x, b.x), std::min(a.y, b.y), std::min(a.z, b.z)};
}
constexpr Vec3 max(const Vec3& a, const Vec3& b) {
    return {std::max(a.x, b.x), std::max(a.y, b.y), std::max(a.z, b.z)};
}

/// Builds an orthonormal basis (t, b) perpendicular to unit vector n.
inline void orthonormal_basis(const Vec3& n, Vec3& t, Vec3& b) {
    // Duff et al. branchless construction
    const double sign = std::copysign(1.0, n.z);
    const double a = -1.0 / (sign + n.z);
    const double c = n.x * n.y * a;
    t = {1.0 + sign * n.x * n.x * a, sign * c, -sign * n.x};
    b = {c, sign + n.y * n.y * a, -n.y};
}

/// Linear RGB radiance or intensity. Lighting-matrix entries are Colors.
struct Color {
    double r = 0.0, g = 0.0, b = 0.0;

    constexpr Color() = default;
    constexpr Color(double r_, double g_, double b_) : r(r_), g(g_), b(b_) {}
    static constexpr Color gray(double v) { return {v, v, v}; }

    constexpr double operator[](int c) const { return c == 0 ? r : (c == 1 ? g : b); }
    constexpr double& operator[](int c) { return c == 0 ? r : (c == 1 ? g : b); }

    constexpr Color& operator+=(const Color& o) { r += o.r; g += o.g; b += o.b; return *this; }
    constexpr Color& operator-=(const Color& o) { r -= o.r; g -= o.g; b -= o.b; return *this; }
    constexpr Color& operator*=(const Color& o) { r *= o.r; g *= o.g; b *= o.b; return *this; }
    constexpr Color& operator*=(double s) { r *= s; g *= s; b *= s; return *this; }

    friend constexpr Color operator+(Color a, const Color& o) { return a += o; }
    friend constexpr Color operator-(Color a, const Color& o) { return a -= o; }
    friend constexpr Color operator*(Color a, const Color& o) { return a *= o; }
    friend constexpr Color operator*(Color a, double s) { return a *= s; }
    friend constexpr Color operator*(double s, Color a) { return a *= s; }
    friend constexpr Color operator/(Color a, double s) { return a *= (1.0 / s); }
    friend constexpr bool operator==(const Color&, const Color&) = default;

    constexpr bool nonnegative() const { return r >= 0.0 && g >= 0.0 && b >= 0.0; }
    constexpr bool is_black() const { return r == 0.0 && g == 0.0 && b == 0.0; }
    double max_component() const { return std::max({r, g, b}); }
};

/// Rec. 709 luminance; every scalar reduction of a Color goes through this.
constexpr double luminance(const Color& c) { return 0.2126 * c.r + 0.7152 * c.g + 0.0722 * c.b; }

struct Aabb {
    Vec3 lo{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
            std::numeric_limits<double>::infinity()};
    Vec3 hi{-std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity(),
            -std::numeric_limits<double>::infinity()};

    constexpr Aabb() = default;
    constexpr Aabb(const Vec3& a, const Vec3& b) : lo(min(a, b)), hi(max(a, b)) {}

    constexpr bool empty() const { return lo.x > hi.x || lo.y > hi.y || lo.z > hi.z; }
    constexpr void expand(const Vec3& p) { lo = min(lo, p); hi = max(hi, p); }
    constexpr void expand(const Aabb& b) { lo = min(lo, b.lo); hi = max(hi, b.hi); }
    constexpr Vec3 extent() const { return hi - lo; }
    constexpr Vec3 center() const { return (lo + hi) * 0.5; }
    double diagonal() const { return empty() ? 0.0 : length(extent()); }

    int longest_axis() const {
        const Vec3 e = extent();
        if (e.x >= e.y && e.x >= e.z) return 0;
        return e.y >= e.z ? 1 : 2;
    }

    constexpr bool contains(const Vec3& p) const {
        return p.x >= lo.x && p.x <= hi.x && p.y >= lo.y && p.y <= hi.y && p.z >= lo.z && p.z <= hi.z;
    }
    constexpr bool contains(const Aabb& b) const { return contains(b.lo) && contains(b.hi); }

    friend constexpr Aabb merge(Aabb a, const Aabb& b) { a.expand(b); return a; }
    friend constexpr bool operator==(const Aabb&, const Aabb&) = default;
};

/// Squared minimum distance between two boxes (0 when they overlap).
constexpr double min_distance_squared(const Aabb& a, const Aabb& b) {
    double d2 = 0.0;
    for (int axis = 0; axis < 3; ++axis) {
        const double gap = std::max({0.0, a.lo[axis] - b.hi[axis], b.lo[axis] - a.hi[axis]});
        d2 += gap * gap;
    }
    return d2;
}

}  // namespace sparselight
