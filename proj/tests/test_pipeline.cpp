#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "sparselight/pipeline.hpp"
#include "sparselight/scene_io.hpp"

using namespace sparselight;

namespace {

RenderConfig small_config() {
    RenderConfig c;
    c.width = c.height = 24;
    c.vpls = 300;
    c.slice_size = 200;
    c.threads = 1;
    return c;
}

double max_abs_diff(const Image& a, const Image& b) {
    double worst = 0.0;
    for (std::size_t k = 0; k < a.raw().size(); ++k)
        worst = std::max(worst, std::abs(static_cast<double>(a.raw()[k]) - b.raw()[k]));
    return worst;
}

}  // namespace

TEST(Pipeline, SingleVplEqualsBruteForce) {
    auto config = small_config();
    config.vpls = 1;
    const auto ctx = prepare_render(config, make_cornell_box());
    ASSERT_EQ(ctx.vpls().size(), 1u);
    EXPECT_EQ(render_pipeline(ctx, config), render_bruteforce(ctx, config));
}

TEST(Pipeline, NoVplsRendersBlack) {
    auto config = small_config();
    const auto ctx = prepare_render(config, make_cornell_box(), std::vector<Vpl>{});
    for (const auto mode : {RenderMode::Pipeline, RenderMode::FullCut, RenderMode::BruteForce}) {
        config.mode = mode;
        const Image img = render(ctx, config);
        for (const float v : img.raw()) EXPECT_EQ(v, 0.0f);
    }
}

TEST(Pipeline, AllLeavesFullCutEqualsBruteForce) {
    auto config = small_config();
    config.cut_error = 0.0;
    config.max_cut_nodes = 100000;
    config.coarsen_error = 0.0;
    const auto ctx = prepare_render(config, make_cornell_box());
    ASSERT_EQ(ctx.global_cut.size(), ctx.vpls().size());
    EXPECT_LE(rms_difference(render_fullcut(ctx, config), render_bruteforce(ctx, config)), 1e-6);
}

TEST(Pipeline, RateOneEqualsFullCut) {
    auto config = small_config();
    config.rate = 1.0;
    const auto ctx = prepare_render(config, make_cornell_box());
    EXPECT_LE(rms_difference(render_pipeline(ctx, config), render_fullcut(ctx, config)), 1e-5);
}

TEST(Pipeline, LinearInVplIntensity) {
    auto config = small_config();
    const Scene scene = make_cornell_box();
    const auto base = prepare_render(config, scene);
    std::vector<Vpl> doubled(base.vpls().begin(), base.vpls().end());
    for (auto& v : doubled) v.intensity *= 2.0;
    const auto twice = prepare_render(config, scene, doubled);
    const Image a = render_pipeline(base, config), b = render_pipeline(twice, config);
    for (std::size_t k = 0; k < a.raw().size(); ++k)
        EXPECT_NEAR(b.raw()[k], 2.0f * a.raw()[k], 1e-5 * (1.0 + a.raw()[k]));
}

TEST(Pipeline, ErrorShrinksWithRate) {
    auto config = small_config();
    const auto ctx = prepare_render(config, make_cornell_box());
    const Image reference = render_bruteforce(ctx, config);
    config.rate = 0.02;
    const double low = image_error(render_pipeline(ctx, config), reference);
    config.rate = 1.0;
    const double full = image_error(render_pipeline(ctx, config), reference);
    EXPECT_GE(low, full);
}

TEST(Pipeline, DeterministicAcrossRunsAndThreads) {
    auto config = small_config();
    const auto ctx = prepare_render(config, make_cornell_box());
    const Image a = render_pipeline(ctx, config);
    const Image b = render_pipeline(prepare_render(config, make_cornell_box()), config);
    config.threads = 4;
    const Image c = render_pipeline(ctx, config);
    EXPECT_EQ(a, b);
    EXPECT_EQ(a, c);
}

TEST(Pipeline, ReportIsConsistent) {
    auto config = small_config();
    const auto ctx = prepare_render(config, make_cornell_box());
    RunReport report;
    render_pipeline(ctx, config, &report);
    ASSERT_EQ(report.slices.size(), ctx.slices.size());
    std::size_t rows = 0, rays = 0;
    for (const auto& s : report.slices) {
        rows += s.rows;
        rays += s.shadow_rays;
        EXPECT_GE(s.observations, s.coarsen_observations);
        EXPECT_GE(static_cast<double>(s.observations), 0.1 * s.rows * s.cut_size);
    }
    EXPECT_EQ(rows, ctx.points.size());
    EXPECT_EQ(rays, report.shadow_rays);
    std::ostringstream csv;
    write_report_csv(report, csv);
    EXPECT_EQ(csv.str().substr(0, csv.str().find('\n')),
              "slice_id,rows,cut_size,coarsen_observations,observations,iterations,residual,fallback,shadow_rays");
}

TEST(Pipeline, ConfigValidation) {
    RenderConfig c;
    EXPECT_NO_THROW(c.validate());
    c.rate = 0.0;
    EXPECT_THROW(c.validate(), std::invalid_argument);
    c = {};
    c.width = 0;
    EXPECT_THROW(c.validate(), std::invalid_argument);
    EXPECT_EQ(parse_mode("fullcut"), RenderMode::FullCut);
    EXPECT_THROW(parse_mode("fast"), std::invalid_argument);
}

TEST(Image, WriteReadRoundTripIsBitExact) {
    Image img(5, 3);
    for (std::size_t p = 0; p < img.pixel_count(); ++p) img.set(p, Color{p * 0.1, 1.0 / (p + 1), 3.3});
    const auto path = std::filesystem::temp_directory_path() / "sparselight_img.ppm";
    write_image(img, path);
    EXPECT_EQ(read_image(path), img);
    std::ifstream in(path, std::ios::binary);
    std::string magic;
    in >> magic;
    EXPECT_EQ(magic, "P6");
}

TEST(Image, Tonemap) {
    EXPECT_EQ(tonemap_channel(1.0, 1.0), 255);
    EXPECT_EQ(tonemap_channel(7.0, 1.0), 255);
    EXPECT_EQ(tonemap_channel(0.0, 1.0), 0);
    EXPECT_EQ(tonemap_channel(-1.0, 1.0), 0);
    EXPECT_EQ(tonemap_channel(0.5, 2.0), 255);
    EXPECT_EQ(tonemap_channel(0.5, 1.0), 186);  // 255 * 0.5^(1/2.2)
}

TEST(Image, ErrorExamples) {
    Image ref(2, 2), test(2, 2), zero(2, 2);
    for (std::size_t p = 0; p < 4; ++p) {
        ref.set(p, Color::gray(p + 1.0));
        test.set(p, Color::gray(1.1 * (p + 1.0)));
    }
    EXPECT_NEAR(image_error(test, ref), 10.0, 1e-4);
    EXPECT_EQ(image_error(ref, ref), 0.0);
    EXPECT_EQ(image_error(zero, zero), 0.0);
    EXPECT_TRUE(std::isinf(image_error(ref, zero)));
    EXPECT_THROW(image_error(Image(2, 3), ref), std::invalid_argument);
}

TEST(Cli, RenderWritesImageAndReport) {
    const auto dir = std::filesystem::temp_directory_path() / "sparselight_cli";
    std::filesystem::create_directories(dir);
    const std::string cmd = std::string(SPARSELIGHT_CLI) +
                            " render --width 16 --height 16 --vpls 100 --out " + (dir / "out.ppm").string() +
                            " --report " + (dir / "report.csv").string() + " > " + (dir / "log.txt").string();
    ASSERT_EQ(std::system(cmd.c_str()), 0);
    const Image img = read_image(dir / "out.ppm");
    EXPECT_EQ(img.width(), 16);
    EXPECT_TRUE(std::filesystem::exists(dir / "report.csv"));
    const std::string bad = std::string(SPARSELIGHT_CLI) + " render --rate 2 > /dev/null 2>&1";
    EXPECT_NE(std::system(bad.c_str()), 0);
}
