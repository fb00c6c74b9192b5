#include "sparselight/pipeline.hpp"

#include <bit>
#include <chrono>
#include <fstream>
#include <stdexcept>

#include "sparselight/coarsen.hpp"
#include "sparselight/parallel.hpp"
#include "sparselight/scene_io.hpp"

namespace sparselight {

RenderMode parse_mode(const std::string& name) {
    if (name == "pipeline") return RenderMode::Pipeline;
    if (name == "bruteforce") return RenderMode::BruteForce;
    if (name == "fullcut") return RenderMode::FullCut;
    throw std::invalid_argument("unknown mode '" + name + "'");
}

const char* mode_name(RenderMode mode) {
    switch (mode) {
        case RenderMode::Pipeline: return "pipeline";
        case RenderMode::BruteForce: return "bruteforce";
        case RenderMode::FullCut: return "fullcut";
    }
    return "?";
}

void RenderConfig::validate() const {
    auto fail = [](const std::string& what) { throw std::invalid_argument(what); };
    if (width < 1 || height < 1) fail("width and height must be positive");
    if (bounces < 0) fail("bounces must be non-negative");
    if (!(cut_error >= 0.0 && cut_error < 1.0)) fail("cut-error must be in [0, 1)");
    if (max_cut_nodes < 1) fail("max-cut-nodes must be at least 1");
    if (slice_size < 1) fail("slice-size must be at least 1");
    if (!(coarsen_error >= 0.0)) fail("coarsen-error must be non-negative");
    if (!(coarsen_samples > 0.0)) fail("coarsening sample count must be positive");
    if (!(rate > 0.0 && rate <= 1.0)) fail("rate must be in (0, 1]");
    if (!(importance_floor >= 0.0)) fail("importance floor must be non-negative");
    if (!(clamp > 0.0)) fail("clamp must be positive");
    admm.validate();
}

void write_report_csv(const RunReport& report, std::ostream& out) {
    out << "slice_id,rows,cut_size,coarsen_observations,observations,iterations,residual,fallback,shadow_rays\n";
    for (const auto& s : report.slices)
        out << s.slice << ',' << s.rows << ',' << s.cut_size << ',' << s.coarsen_observations << ','
            << s.observations << ',' << s.iterations << ',' << s.residual << ',' << (s.fallback ? 1 : 0) << ','
            << s.shadow_rays << '\n';
}

std::span<const Vpl> RenderContext::vpls() const {
    if (!tree) return {};
    return tree->vpls();
}

RenderContext prepare_render(const RenderConfig& config, const Scene& scene, std::optional<std::vector<Vpl>> vpls) {
    config.validate();
    scene.validate();
    RenderContext ctx;
    ctx.scene = scene;
    ctx.width = config.width;
    ctx.height = config.height;
    ctx.bvh.emplace(scene.triangles);
    ctx.clamp_dist = config.clamp * scene.diagonal();
    if (!vpls) vpls = trace_vpls(scene, *ctx.bvh, config.vpls, config.bounces, config.seed);
    if (!vpls->empty()) {
        ctx.tree.emplace(std::move(*vpls));
        ctx.global_cut = global_cut(*ctx.tree, scene.bounds(), ctx.clamp_dist, config.cut_error,
                                    config.max_cut_nodes, &ctx.cut_stats);
    }
    ctx.points = generate_surface_points(scene, *ctx.bvh, config.width, config.height);
    ctx.slices = slice_points(ctx.points, {config.slice_size, scene.diagonal(), 0.3});
    return ctx;
}

namespace {

using Clock = std::chrono::steady_clock;

constexpr std::uint64_t kSliceStream = 0x51ce0000ULL;

struct SliceWork {
    SliceWork(const RenderContext& ctx, const RenderConfig& config, std::size_t s)
        : ctx(ctx),
          slice(ctx.slices[s]),
          rng(config.seed, kSliceStream + s),
          cache([this](std::uint32_t row, std::uint32_t vpl) {
              const auto& light = this->ctx.vpls()[vpl];
              return shade_response(this->ctx.points[slice.rows[row]], light.position, light.normal,
                                    *this->ctx.bvh, this->ctx.clamp_dist, &rays);
          }) {}

    SliceWork(const SliceWork&) = delete;
    SliceWork& operator=(const SliceWork&) = delete;

    // The coarsening is shared by the pipeline and the full-cut oracle, so both
    // see the same per-slice cut.
    CoarsenResult coarsen(const RenderConfig& config) {
        const auto& tree = *ctx.tree;
        const std::size_t m = slice.rows.size();
        const double row_lum = estimate_row_luminance(m, ctx.global_cut, tree, config.coarsen_probe_rows, rng, cache);
        CoarsenStop stop = ErrorBound{config.coarsen_error * row_lum};
        if (config.coarsen_target > 0) stop = TargetLights{config.coarsen_target};
        CoarsenSampling sampling;
        sampling.samples_per_luminance = samples_per_luminance_for(tree, ctx.global_cut, config.coarsen_samples);
        return coarsen_cut(m, ctx.global_cut, tree, stop, sampling, rng, cache);
    }

    Color entry(const Cut& cut, std::uint32_t row, std::uint32_t col) {
        const auto& n = ctx.tree->node(cut[col]);
        return cache.get(row, n.representative) * n.intensity;
    }

    const RenderContext& ctx;
    const Slice& slice;
    Rng rng;
    std::size_t rays = 0;
    ResponseCache cache;
};

void write_full_rows(SliceWork& work, const Cut& cut, Image& img) {
    for (std::uint32_t i = 0; i < work.slice.rows.size(); ++i) {
        Color sum;
        for (std::uint32_t j = 0; j < cut.size(); ++j) sum += work.entry(cut, i, j);
        img.set(work.ctx.points[work.slice.rows[i]].pixel, sum);
    }
}

void finish_report(RunReport* report, const RenderContext& ctx, std::vector<SliceReport> slices,
                   Clock::time_point start) {
    if (!report) return;
    report->vpl_count = ctx.vpls().size();
    report->global_cut_size = ctx.global_cut.size();
    report->surface_points = ctx.points.size();
    report->pixels = static_cast<std::size_t>(ctx.width) * ctx.height;
    report->shadow_rays = 0;
    for (const auto& s : slices) report->shadow_rays += s.shadow_rays;
    report->slices = std::move(slices);
    report->seconds = std::chrono::duration<double>(Clock::now() - start).count();
}

}  // namespace

Image render_pipeline(const RenderContext& ctx, const RenderConfig& config, RunReport* report,
                      const std::filesystem::path& factor_dir) {
    const auto start = Clock::now();
    Image img(ctx.width, ctx.height);
    std::vector<SliceReport> rows(ctx.slices.size());
    if (!ctx.tree) {
        finish_report(report, ctx, std::move(rows), start);
        return img;
    }
    parallel_for(ctx.slices.size(), config.threads, [&](std::size_t s) {
        SliceWork work(ctx, config, s);
        const std::size_t m = work.slice.rows.size();
        auto coarse = work.coarsen(config);
        const Cut& cut = coarse.cut;
        const std::size_t n = cut.size();
        SliceReport& rep = rows[s];
        rep.slice = s;
        rep.rows = m;
        rep.cut_size = n;
        rep.coarsen_observations = coarse.observations.size();

        const EntryFn entry = [&](std::uint32_t i, std::uint32_t j) { return work.entry(cut, i, j); };
        const Pdf pdf = build_pdf(coarse.observations, config.importance_floor);
        auto obs = sample_entries(std::move(coarse.observations), config.rate, pdf, work.rng, entry);
        ensure_coverage(obs, work.rng, entry, true);
        obs.sort();
        rep.observations = obs.size();

        AdmmParams params = config.admm;
        params.rank = static_cast<int>(std::min<std::size_t>(params.rank, std::min(m, n)));
        try {
            const ColorFactors f = admm_nmf(obs, params);
            rep.iterations = f.iterations;
            rep.residual = completion_residual(obs, f);
            if (!factor_dir.empty())
                write_factors(factor_dir / ("slice_" + std::to_string(s) + ".f32"), f);

            std::array<Eigen::VectorXd, 3> ye;
            for (int c = 0; c < 3; ++c) ye[c] = f.channel[c].y.rowwise().sum();
            const auto entries = obs.entries();
            std::size_t k = 0;
            for (std::uint32_t i = 0; i < m; ++i) {
                Color known, completed_known;
                std::size_t count = 0;
                for (; k < entries.size() && entries[k].row == i; ++k, ++count) {
                    known += entries[k].value;
                    for (int c = 0; c < 3; ++c)
                        completed_known[c] += f.channel[c].x.row(i).dot(f.channel[c].y.col(entries[k].col));
                }
                Color value = known;
                if (count < n) {
                    for (int c = 0; c < 3; ++c)
                        value[c] += std::max(0.0, f.channel[c].x.row(i).dot(ye[c]) - completed_known[c]);
                }
                img.set(ctx.points[work.slice.rows[i]].pixel, value);
            }
        } catch (const FactorizationError&) {
            rep.fallback = true;
            write_full_rows(work, cut, img);
        }
        rep.shadow_rays = work.rays;
    });
    finish_report(report, ctx, std::move(rows), start);
    return img;
}

Image render_fullcut(const RenderContext& ctx, const RenderConfig& config, RunReport* report) {
    const auto start = Clock::now();
    Image img(ctx.width, ctx.height);
    std::vector<SliceReport> rows(ctx.slices.size());
    if (!ctx.tree) {
        finish_report(report, ctx, std::move(rows), start);
        return img;
    }
    parallel_for(ctx.slices.size(), config.threads, [&](std::size_t s) {
        SliceWork work(ctx, config, s);
        const auto coarse = work.coarsen(config);
        write_full_rows(work, coarse.cut, img);
        auto& rep = rows[s];
        rep.slice = s;
        rep.rows = work.slice.rows.size();
        rep.cut_size = coarse.cut.size();
        rep.coarsen_observations = coarse.observations.size();
        rep.observations = rep.rows * rep.cut_size;
        rep.shadow_rays = work.rays;
    });
    finish_report(report, ctx, std::move(rows), start);
    return img;
}

Image render_bruteforce(const RenderContext& ctx, const RenderConfig& config, RunReport* report) {
    const auto start = Clock::now();
    Image img(ctx.width, ctx.height);
    constexpr std::size_t kChunk = 64;
    const std::size_t chunks = (ctx.points.size() + kChunk - 1) / kChunk;
    std::vector<SliceReport> rows(chunks);
    const auto vpls = ctx.vpls();
    parallel_for(chunks, config.threads, [&](std::size_t c) {
        const std::size_t end = std::min(ctx.points.size(), (c + 1) * kChunk);
        std::size_t rays = 0;
        for (std::size_t p = c * kChunk; p < end; ++p) {
            const auto& point = ctx.points[p];
            Color sum;
            for (const auto& v : vpls)
                sum += shade_response(point, v.position, v.normal, *ctx.bvh, ctx.clamp_dist, &rays) * v.intensity;
            img.set(point.pixel, sum);
        }
        rows[c] = {c, end - c * kChunk, vpls.size(), 0, (end - c * kChunk) * vpls.size(), 0, 0.0, false, rays};
    });
    finish_report(report, ctx, std::move(rows), start);
    return img;
}

Image render(const RenderContext& ctx, const RenderConfig& config, RunReport* report,
             const std::filesystem::path& factor_dir) {
    switch (config.mode) {
        case RenderMode::BruteForce: return render_bruteforce(ctx, config, report);
        case RenderMode::FullCut: return render_fullcut(ctx, config, report);
        case RenderMode::Pipeline: break;
    }
    return render_pipeline(ctx, config, report, factor_dir);
}

Image render(const RenderConfig& config, RunReport* report) {
    const auto ctx = prepare_render(config, scene_from_argument(config.scene));
    return render(ctx, config, report);
}

Image slice_map(const RenderContext& ctx) {
    Image img(ctx.width, ctx.height);
    for (std::size_t s = 0; s < ctx.slices.size(); ++s) {
        const std::uint64_t h = splitmix64(s);
        const Color c{0.2 + 0.8 * static_cast<double>(h & 0xff) / 255.0,
                      0.2 + 0.8 * static_cast<double>((h >> 8) & 0xff) / 255.0,
                      0.2 + 0.8 * static_cast<double>((h >> 16) & 0xff) / 255.0};
        for (const auto r : ctx.slices[s].rows) img.set(ctx.points[r].pixel, c);
    }
    return img;
}

void write_factors(const std::filesystem::path& path, const ColorFactors& factors) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    const auto& f0 = factors.channel[0];
    out << f0.x.rows() << ' ' << f0.y.cols() << ' ' << f0.x.cols() << '\n';
    auto put = [&](double v) {
        std::uint32_t w = std::bit_cast<std::uint32_t>(static_cast<float>(v));
        if constexpr (std::endian::native == std::endian::big) w = __builtin_bswap32(w);
        out.write(reinterpret_cast<const char*>(&w), 4);
    };
    for (const auto& f : factors.channel) {
        for (Eigen::Index i = 0; i < f.x.rows(); ++i)
            for (Eigen::Index k = 0; k < f.x.cols(); ++k) put(f.x(i, k));
        for (Eigen::Index k = 0; k < f.y.rows(); ++k)
            for (Eigen::Index j = 0; j < f.y.cols(); ++j) put(f.y(k, j));
    }
    if (!out) throw std::runtime_error("cannot write " + path.string());
}

}  // namespace sparselight
