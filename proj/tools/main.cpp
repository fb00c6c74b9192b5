// sparselight command-line front end: `render` and `sweep`.

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "sparselight/pipeline.hpp"
#include "sparselight/scene_io.hpp"

using namespace sparselight;

namespace {

struct CliOptions {
    RenderConfig config;
    std::string mode = "pipeline";
    std::string out = "out.ppm";
    std::string report;
    std::string dump_vpls, load_vpls, dump_cut, slice_map_path, dump_factors;
    double exposure = 1.0;
    std::string rates = "0.01,0.05,0.10,0.25,1.0";
    std::string csv;
};

void add_render_options(CLI::App& cmd, CliOptions& o) {
    auto& c = o.config;
    cmd.add_option("--scene", c.scene, "scene file, builtin:cornell or builtin:closed-box")->capture_default_str();
    cmd.add_option("--width", c.width)->capture_default_str();
    cmd.add_option("--height", c.height)->capture_default_str();
    cmd.add_option("--vpls", c.vpls, "number of virtual point lights")->capture_default_str();
    cmd.add_option("--bounces", c.bounces)->capture_default_str();
    cmd.add_option("--seed", c.seed)->capture_default_str();
    cmd.add_option("--cut-error", c.cut_error, "global cut relative error")->capture_default_str();
    cmd.add_option("--max-cut-nodes", c.max_cut_nodes)->capture_default_str();
    cmd.add_option("--slice-size", c.slice_size)->capture_default_str();
    cmd.add_option("--coarsen-error", c.coarsen_error, "merge bound relative to mean row luminance")
        ->capture_default_str();
    cmd.add_option("--coarsen-target", c.coarsen_target, "coarsen to this many lights instead (0 = off)")
        ->capture_default_str();
    cmd.add_option("--rate", c.rate, "fraction of lighting-matrix entries sampled")->capture_default_str();
    cmd.add_option("--rank", c.admm.rank)->capture_default_str();
    cmd.add_option("--max-iter", c.admm.max_iter)->capture_default_str();
    cmd.add_option("--tol", c.admm.tol)->capture_default_str();
    cmd.add_option("--alpha", c.admm.alpha)->capture_default_str();
    cmd.add_option("--beta", c.admm.beta)->capture_default_str();
    cmd.add_option("--gamma", c.admm.gamma)->capture_default_str();
    cmd.add_option("--clamp", c.clamp, "clamp distance, fraction of scene diagonal")->capture_default_str();
    cmd.add_option("--threads", c.threads, "worker threads, 0 = all cores")->capture_default_str();
    cmd.add_option("--exposure", o.exposure)->capture_default_str();
    cmd.add_option("--load-vpls", o.load_vpls, "use VPLs from a binary dump instead of tracing");
    cmd.add_option("--dump-vpls", o.dump_vpls);
}

RenderContext make_context(const CliOptions& o) {
    const Scene scene = scene_from_argument(o.config.scene);
    std::optional<std::vector<Vpl>> vpls;
    if (!o.load_vpls.empty()) vpls = load_vpls(o.load_vpls);
    auto ctx = prepare_render(o.config, scene, std::move(vpls));
    if (!o.dump_vpls.empty()) save_vpls(o.dump_vpls, ctx.vpls());
    return ctx;
}

int run_render(CliOptions& o) {
    o.config.mode = parse_mode(o.mode);
    const auto ctx = make_context(o);
    if (!o.dump_cut.empty()) save_cut(o.dump_cut, ctx.global_cut);
    if (!o.slice_map_path.empty()) write_image(slice_map(ctx), o.slice_map_path);
    if (!o.dump_factors.empty()) std::filesystem::create_directories(o.dump_factors);
    RunReport report;
    const Image img = render(ctx, o.config, &report, o.dump_factors);
    write_image(img, o.out, o.exposure);
    if (!o.report.empty()) {
        std::ofstream out(o.report);
        if (!out) throw std::runtime_error("cannot write " + o.report);
        write_report_csv(report, out);
    }
    std::size_t fallbacks = 0;
    for (const auto& s : report.slices) fallbacks += s.fallback;
    std::printf("%s: %dx%d, %zu VPLs, global cut %zu, %zu slices, %.3f s, %.1f shadow rays/pixel%s\n",
                mode_name(o.config.mode), ctx.width, ctx.height, report.vpl_count, report.global_cut_size,
                ctx.slices.size(), report.seconds, report.rays_per_pixel(),
                fallbacks ? (", " + std::to_string(fallbacks) + " fallback slices").c_str() : "");
    return 0;
}

std::vector<double> parse_rates(const std::string& text) {
    std::vector<double> rates;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        std::size_t used = 0;
        const double r = std::stod(item, &used);
        if (used != item.size() || !(r > 0.0 && r <= 1.0)) throw std::invalid_argument("bad rate '" + item + "'");
        rates.push_back(r);
    }
    if (rates.empty()) throw std::invalid_argument("no rates given");
    return rates;
}

int run_sweep(CliOptions& o) {
    const auto rates = parse_rates(o.rates);
    const auto ctx = make_context(o);
    RunReport ref_report;
    RenderConfig config = o.config;
    const Image reference = render_bruteforce(ctx, config, &ref_report);
    std::ofstream file;
    if (!o.csv.empty()) {
        file.open(o.csv);
        if (!file) throw std::runtime_error("cannot write " + o.csv);
    }
    std::ostream& out = o.csv.empty() ? std::cout : file;
    out << "rate,error_percent,seconds,shadow_rays_per_pixel\n";
    for (const double rate : rates) {
        config.rate = rate;
        RunReport report;
        const Image img = render_pipeline(ctx, config, &report);
        out << rate << ',' << image_error(img, reference) << ',' << report.seconds << ','
            << report.rays_per_pixel() << '\n';
    }
    out << "bruteforce,0," << ref_report.seconds << ',' << ref_report.rays_per_pixel() << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Many-light rendering by sparse sampling and low-rank completion"};
    app.require_subcommand(1);
    CliOptions o;

    auto* render_cmd = app.add_subcommand("render", "render one image");
    add_render_options(*render_cmd, o);
    render_cmd->add_option("--out", o.out, "output PPM; raw floats go to <out>.f32")->capture_default_str();
    render_cmd->add_option("--mode", o.mode, "pipeline | bruteforce | fullcut")
        ->check(CLI::IsMember({"pipeline", "bruteforce", "fullcut"}))
        ->capture_default_str();
    render_cmd->add_option("--report", o.report, "per-slice CSV report");
    render_cmd->add_option("--dump-cut", o.dump_cut, "write the global cut node indices");
    render_cmd->add_option("--slice-map", o.slice_map_path, "write a PPM coloring each slice");
    render_cmd->add_option("--dump-factors", o.dump_factors, "directory for per-slice factor dumps");

    auto* sweep_cmd = app.add_subcommand("sweep", "error and time over sampling rates vs brute force");
    add_render_options(*sweep_cmd, o);
    sweep_cmd->add_option("--rates", o.rates, "comma-separated rates")->capture_default_str();
    sweep_cmd->add_option("--csv", o.csv, "write the table here instead of stdout");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }
    try {
        if (*render_cmd) return run_render(o);
        return run_sweep(o);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "sparselight: %s\n", e.what());
        return 1;
    }
}
