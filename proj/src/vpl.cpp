#include "sparselight/vpl.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <numeric>

#include "sparselight/rng.hpp"

namespace sparselight {

namespace {

Vec3 cosine_direction(const Vec3& n, Rng& rng) {
    const double u1 = rng.uniform(), u2 = rng.uniform();
    const double r = std::sqrt(u1);
    const double phi = 2.0 * kPi * u2;
    Vec3 t, b;
    orthonormal_basis(n, t, b);
    return normalize(t * (r * std::cos(phi)) + b * (r * std::sin(phi)) + n * std::sqrt(std::max(0.0, 1.0 - u1)));
}

/// Paths per light by largest remainder on luminance(power), with every
/// emitting light receiving at least one path when there are enough paths.
std::vector<std::size_t> allocate_paths(const std::vector<AreaLight>& lights, std::size_t paths) {
    std::vector<double> weight(lights.size());
    for (std::size_t l = 0; l < lights.size(); ++l) weight[l] = std::max(0.0, luminance(lights[l].power));
    double total = std::accumulate(weight.begin(), weight.end(), 0.0);
    if (total <= 0.0) {
        std::fill(weight.begin(), weight.end(), 1.0);
        total = static_cast<double>(lights.size());
    }
    std::vector<std::size_t> alloc(lights.size());
    std::vector<std::pair<double, std::size_t>> remainders;
    std::size_t assigned = 0;
    for (std::size_t l = 0; l < lights.size(); ++l) {
        const double quota = static_cast<double>(paths) * weight[l] / total;
        alloc[l] = static_cast<std::size_t>(std::floor(quota));
        assigned += alloc[l];
        remainders.emplace_back(-(quota - std::floor(quota)), l);
    }
    std::sort(remainders.begin(), remainders.end());
    for (std::size_t k = 0; assigned < paths; ++k, ++assigned) ++alloc[remainders[k % remainders.size()].second];
    for (std::size_t l = 0; l < lights.size(); ++l) {
        if (alloc[l] != 0 || weight[l] <= 0.0) continue;
        auto donor = std::max_element(alloc.begin(), alloc.end());
        if (*donor <= 1) break;
        --*donor;
        alloc[l] = 1;
    }
    return alloc;
}

}  // namespace

std::vector<Vpl> trace_vpls(const Scene& scene, const Bvh& bvh, std::size_t count, int max_bounces,
                            std::uint64_t seed) {
    if (scene.lights.empty()) throw std::invalid_argument("no emitters");
    if (count < 1) throw std::invalid_argument("VPL count must be at least 1");
    if (max_bounces < 0) throw std::invalid_argument("max_bounces must be non-negative");

    const auto per_path = static_cast<std::size_t>(max_bounces) + 1;
    const std::size_t paths = std::max<std::size_t>(1, count / per_path);
    const auto alloc = allocate_paths(scene.lights, paths);

    std::vector<std::size_t> path_light;
    path_light.reserve(paths);
    for (std::size_t l = 0; l < alloc.size(); ++l) path_light.insert(path_light.end(), alloc[l], l);

    std::vector<Vpl> vpls;
    vpls.reserve(count);
    for (std::size_t p = 0; p < paths; ++p) {
        Rng rng(seed, p);
        const AreaLight& light = scene.lights[path_light[p]];
        const Vec3 n_light = light.normal();
        Vpl vpl;
        vpl.position = light.point(rng.uniform(), rng.uniform());
        vpl.normal = n_light;
        vpl.intensity = light.power / static_cast<double>(alloc[path_light[p]]);
        vpl.bounce = 0;
        vpls.push_back(vpl);

        Color throughput = vpl.intensity;
        Vec3 origin = vpl.position;
        Vec3 dir = cosine_direction(n_light, rng);
        for (int bounce = 1; bounce <= max_bounces; ++bounce) {
            const auto hit = bvh.intersect(Ray{origin, dir, bvh.shadow_epsilon()});
            if (!hit) break;
            const Triangle& tri = bvh.triangles()[hit->triangle];
            const Vec3 n = dot(hit->normal, dir) > 0.0 ? -hit->normal : hit->normal;
            throughput *= scene.materials[tri.material].albedo;
            vpls.push_back(Vpl{hit->position, n, throughput, static_cast<std::uint32_t>(bounce)});
            origin = hit->position;
            dir = cosine_direction(n, rng);
        }
    }

    if (vpls.size() > count) {
        // Only reachable when count < max_bounces + 1: keep the shallowest VPLs.
        vpls.resize(count);
    }
    // Pad by halving the brightest VPLs; the flux they carry is unchanged.
    std::vector<std::size_t> order(vpls.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return luminance(vpls[a].intensity) > luminance(vpls[b].intensity);
    });
    for (std::size_t k = 0; vpls.size() < count; ++k) {
        Vpl& src = vpls[order[k % order.size()]];
        src.intensity *= 0.5;
        Vpl copy = src;
        vpls.push_back(copy);
    }
    return vpls;
}

namespace {

void put_f32(std::ofstream& out, double v) {
    const auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(v));
    const unsigned char bytes[4] = {static_cast<unsigned char>(bits), static_cast<unsigned char>(bits >> 8),
                                    static_cast<unsigned char>(bits >> 16), static_cast<unsigned char>(bits >> 24)};
    out.write(reinterpret_cast<const char*>(bytes), 4);
}

double get_f32(const unsigned char* p) {
    const std::uint32_t bits = std::uint32_t{p[0]} | (std::uint32_t{p[1]} << 8) |
                               (std::uint32_t{p[2]} << 16) | (std::uint32_t{p[3]} << 24);
    return std::bit_cast<float>(bits);
}

}  // namespace

void save_vpls(const std::filesystem::path& path, std::span<const Vpl> vpls) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    for (const auto& v : vpls) {
        for (int a = 0; a < 3; ++a) put_f32(out, v.position[a]);
        for (int a = 0; a < 3; ++a) put_f32(out, v.normal[a]);
        for (int c = 0; c < 3; ++c) put_f32(out, v.intensity[c]);
    }
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

std::vector<Vpl> load_vpls(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    constexpr std::size_t kRecord = 9 * 4;
    if (bytes.size() % kRecord != 0)
        throw std::runtime_error(path.string() + ": size is not a multiple of the 36-byte VPL record");
    std::vector<Vpl> vpls(bytes.size() / kRecord);
    for (std::size_t i = 0; i < vpls.size(); ++i) {
        const unsigned char* p = bytes.data() + i * kRecord;
        for (int a = 0; a < 3; ++a) vpls[i].position[a] = get_f32(p + 4 * a);
        for (int a = 0; a < 3; ++a) vpls[i].normal[a] = get_f32(p + 12 + 4 * a);
        for (int c = 0; c < 3; ++c) vpls[i].intensity[c] = get_f32(p + 24 + 4 * c);
        if (!vpls[i].intensity.nonnegative())
            throw std::runtime_error(path.string() + ": record " + std::to_string(i) + " has negative intensity");
    }
    return vpls;
}

}  // namespace sparselight
