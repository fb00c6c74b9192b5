#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "sparselight/geometry.hpp"

namespace sparselight {

/// Virtual point light with a cosine emission lobe: radiant intensity toward
/// direction w is intensity * max(dot(normal, w), 0).
struct Vpl {
    Vec3 position;
    Vec3 normal;
    Color intensity;
    std::uint32_t bounce = 0;  // 0 = on an emitter; not serialized
};

/// Instant-radiosity light tracing. Emits max(1, count / (max_bounces + 1))
/// paths, stratified over the lights by power; each path deposits one VPL per
/// bounce. Missing VPLs (escaped paths) are made up by splitting the brightest
/// VPLs in half so flux is preserved. Throws std::invalid_argument on a scene
/// without emitters or count < 1.
std::vector<Vpl> trace_vpls(const Scene& scene, const Bvh& bvh, std::size_t count, int max_bounces,
                            std::uint64_t seed);

/// Flat records of 9 little-endian float32: position, normal, intensity.
void save_vpls(const std::filesystem::path& path, std::span<const Vpl> vpls);
std::vector<Vpl> load_vpls(const std::filesystem::path& path);

}  // namespace sparselight
