#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "sparselight/completion.hpp"
#include "sparselight/geometry.hpp"
#include "sparselight/image.hpp"
#include "sparselight/light_tree.hpp"
#include "sparselight/slicing.hpp"
#include "sparselight/vpl.hpp"

namespace sparselight {

enum class RenderMode { Pipeline, BruteForce, FullCut };

RenderMode parse_mode(const std::string& name);
const char* mode_name(RenderMode mode);

struct RenderConfig {
    std::string scene = "builtin:cornell";
    int width = 64;
    int height = 64;
    std::size_t vpls = 2000;
    int bounces = 3;
    std::uint64_t seed = 1;
    double cut_error = 0.02;          // global cut, relative
    std::size_t max_cut_nodes = 1024;
    std::size_t slice_size = 800;
    double coarsen_error = 0.02;      // relative to the slice's mean row luminance
    std::size_t coarsen_target = 0;   // > 0 switches coarsening to a light-count target
    std::size_t coarsen_probe_rows = 8;
    double coarsen_samples = 16.0;    // samples for the brightest sibling pair
    double rate = 0.10;
    double importance_floor = 0.1;
    AdmmParams admm;
    double clamp = 0.01;              // clamp distance as a fraction of the scene diagonal
    RenderMode mode = RenderMode::Pipeline;
    unsigned threads = 0;             // 0 = all cores

    /// Throws std::invalid_argument naming the offending field.
    void validate() const;
};

/// Per-slice line of the run report.
struct SliceReport {
    std::size_t slice = 0;
    std::size_t rows = 0;
    std::size_t cut_size = 0;
    std::size_t coarsen_observations = 0;
    std::size_t observations = 0;
    int iterations = 0;
    double residual = 0.0;
    bool fallback = false;
    std::size_t shadow_rays = 0;
};

struct RunReport {
    std::size_t vpl_count = 0;
    std::size_t global_cut_size = 0;
    std::size_t surface_points = 0;
    std::size_t pixels = 0;
    std::size_t shadow_rays = 0;
    double seconds = 0.0;
    std::vector<SliceReport> slices;

    double rays_per_pixel() const { return pixels ? static_cast<double>(shadow_rays) / pixels : 0.0; }
};

/// Columns: slice_id,rows,cut_size,coarsen_observations,observations,
/// iterations,residual,fallback,shadow_rays
void write_report_csv(const RunReport& report, std::ostream& out);

/// Everything shared by the three renderers: scene, BVH, VPLs, light tree,
/// global cut, surface points and slices.
struct RenderContext {
    Scene scene;
    std::optional<Bvh> bvh;
    std::vector<SurfacePoint> points;
    std::optional<LightTree> tree;  // empty when there are no VPLs
    Cut global_cut;
    GlobalCutStats cut_stats;
    std::vector<Slice> slices;
    double clamp_dist = 0.0;
    int width = 0, height = 0;

    std::span<const Vpl> vpls() const;
};

/// Traces VPLs unless `vpls` is given.
RenderContext prepare_render(const RenderConfig& config, const Scene& scene,
                             std::optional<std::vector<Vpl>> vpls = std::nullopt);

Image render_pipeline(const RenderContext& ctx, const RenderConfig& config, RunReport* report = nullptr,
                      const std::filesystem::path& factor_dir = {});
Image render_fullcut(const RenderContext& ctx, const RenderConfig& config, RunReport* report = nullptr);
Image render_bruteforce(const RenderContext& ctx, const RenderConfig& config, RunReport* report = nullptr);

/// Dispatches on config.mode.
Image render(const RenderContext& ctx, const RenderConfig& config, RunReport* report = nullptr,
             const std::filesystem::path& factor_dir = {});
/// Loads config.scene and renders.
Image render(const RenderConfig& config, RunReport* report = nullptr);

/// Flat color per slice, for inspecting the clustering.
Image slice_map(const RenderContext& ctx);

/// Header "rows cols rank\n" then, per channel, X and Y as row-major
/// little-endian float32.
void write_factors(const std::filesystem::path& path, const ColorFactors& factors);

}  // namespace sparselight
