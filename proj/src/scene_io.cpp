#include "sparselight/scene_io.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <optional>
#include <sstream>
#include <vector>

namespace sparselight {

namespace {

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// Whitespace tokens of one line with positional number parsing.
class LineTokens {
public:
    LineTokens(std::string_view line, const std::string& file, int line_no)
        : file_(file), line_(line_no) {
        if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        std::size_t i = 0;
        while (i < line.size()) {
            while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
            std::size_t j = i;
            while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
            if (j > i) tokens_.emplace_back(line.substr(i, j - i));
            i = j;
        }
    }

    bool empty() const { return tokens_.empty(); }
    bool done() const { return pos_ >= tokens_.size(); }

    std::string word(const char* what) {
        if (done()) fail(std::string("expected ") + what);
        return tokens_[pos_++];
    }

    void keyword(const char* kw) {
        const std::string got = word(kw);
        if (got != kw) fail(std::string("expected '") + kw + "', got '" + got + "'");
    }

    double number(const char* what) {
        const std::string tok = word(what);
        double value = 0.0;
        auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), value);
        if (ec != std::errc() || ptr != tok.data() + tok.size() || !std::isfinite(value))
            fail(std::string("invalid number for ") + what + ": '" + tok + "'");
        return value;
    }

    long integer(const char* what) {
        const std::string tok = word(what);
        long value = 0;
        auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), value);
        if (ec != std::errc() || ptr != tok.data() + tok.size())
            fail(std::string("invalid integer for ") + what + ": '" + tok + "'");
        return value;
    }

    Vec3 vec3(const char* what) {
        const double x = number(what), y = number(what), z = number(what);
        return {x, y, z};
    }

    Color color(const char* what) {
        const double r = number(what), g = number(what), b = number(what);
        return {r, g, b};
    }

    void finish() {
        if (!done()) fail("unexpected trailing token '" + tokens_[pos_] + "'");
    }

    [[noreturn]] void fail(const std::string& message) const { throw ParseError(file_, line_, message); }

private:
    std::vector<std::string> tokens_;
    std::size_t pos_ = 0;
    const std::string& file_;
    int line_;
};

template <typename Fn>
void for_each_line(const std::string& text, Fn&& fn) {
    std::size_t start = 0;
    int line_no = 1;
    while (start <= text.size()) {
        std::size_t end = text.find('\n', start);
        if (end == std::string::npos) end = text.size();
        std::string_view line(text.data() + start, end - start);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        fn(line, line_no);
        if (end == text.size()) break;
        start = end + 1;
        ++line_no;
    }
}

void add_quad(Scene& s, Vec3 a, Vec3 b, Vec3 c, Vec3 d, std::uint32_t material) {
    s.triangles.push_back({{a, b, c}, material});
    s.triangles.push_back({{a, c, d}, material});
}

void add_block(Scene& s, double cx, double cz, double half, double height, double angle_deg,
               std::uint32_t material) {
    const double a = angle_deg * kPi / 180.0;
    const Vec3 ux(std::cos(a) * half, 0.0, std::sin(a) * half);
    const Vec3 uz(-std::sin(a) * half, 0.0, std::cos(a) * half);
    const Vec3 c(cx, 0.0, cz);
    const Vec3 up(0.0, height, 0.0);
    const Vec3 p[4] = {c - ux - uz, c + ux - uz, c + ux + uz, c - ux + uz};
    for (int i = 0; i < 4; ++i) {
        const Vec3& p0 = p[i];
        const Vec3& p1 = p[(i + 1) % 4];
        add_quad(s, p0, p1, p1 + up, p0 + up, material);
    }
    add_quad(s, p[0] + up, p[1] + up, p[2] + up, p[3] + up, material);
}

}  // namespace

Scene parse_mesh_into(Scene scene, const std::string& text, const std::string& name) {
    std::vector<Vec3> vertices;
    std::vector<std::pair<std::array<long, 4>, int>> faces;
    for_each_line(text, [&](std::string_view line, int line_no) {
        LineTokens tok(line, name, line_no);
        if (tok.empty()) return;
        const std::string kind = tok.word("record type");
        if (kind == "v") {
            vertices.push_back(tok.vec3("vertex"));
        } else if (kind == "f") {
            std::array<long, 4> f{};
            for (int k = 0; k < 3; ++k) f[k] = tok.integer("vertex index");
            f[3] = tok.integer("material index");
            faces.emplace_back(f, line_no);
        } else {
            tok.fail("unknown record '" + kind + "'");
        }
        tok.finish();
    });
    for (const auto& [f, line_no] : faces) {
        Triangle tri;
        for (int k = 0; k < 3; ++k) {
            if (f[k] < 1 || f[k] > static_cast<long>(vertices.size()))
                throw ParseError(name, line_no, "vertex index " + std::to_string(f[k]) + " out of range");
            tri.v[k] = vertices[f[k] - 1];
        }
        if (f[3] < 0) throw ParseError(name, line_no, "negative material index");
        tri.material = static_cast<std::uint32_t>(f[3]);
        if (!(tri.area() > 0.0)) throw ParseError(name, line_no, "degenerate triangle");
        scene.triangles.push_back(tri);
    }
    return scene;
}

Scene parse_scene(const std::string& text, const std::string& name,
                  const std::filesystem::path& base_dir) {
    Scene scene;
    bool have_camera = false;
    std::optional<std::pair<std::filesystem::path, int>> mesh;
    for_each_line(text, [&](std::string_view line, int line_no) {
        LineTokens tok(line, name, line_no);
        if (tok.empty()) return;
        const std::string kind = tok.word("record type");
        if (kind == "mesh") {
            if (mesh) tok.fail("duplicate mesh record");
            mesh.emplace(base_dir / tok.word("mesh path"), line_no);
        } else if (kind == "material") {
            Material m;
            m.albedo = tok.color("albedo");
            if (!tok.done()) {
                tok.keyword("emission");
                m.emission = tok.color("emission");
            }
            for (int c = 0; c < 3; ++c) {
                if (m.albedo[c] < 0.0 || m.albedo[c] > 1.0) tok.fail("albedo outside [0,1]");
                if (m.emission[c] < 0.0) tok.fail("negative emission");
            }
            scene.materials.push_back(m);
        } else if (kind == "light") {
            Vec3 p[4];
            for (auto& corner : p) corner = tok.vec3("light corner");
            tok.keyword("power");
            AreaLight light{p[0], p[1] - p[0], p[3] - p[0], tok.color("power")};
            if (!light.power.nonnegative()) tok.fail("negative light power");
            if (!(light.area() > 0.0)) tok.fail("degenerate light quad");
            const double size = std::max(length(light.edge_u), length(light.edge_v));
            if (length(p[0] + p[2] - p[1] - p[3]) > 1e-6 * size) tok.fail("light corners are not a parallelogram");
            scene.lights.push_back(light);
        } else if (kind == "camera") {
            tok.keyword("position");
            scene.camera.position = tok.vec3("camera position");
            tok.keyword("target");
            scene.camera.target = tok.vec3("camera target");
            tok.keyword("up");
            scene.camera.up = tok.vec3("camera up");
            tok.keyword("fov");
            scene.camera.vfov_degrees = tok.number("field of view");
            if (!(scene.camera.vfov_degrees > 0.0 && scene.camera.vfov_degrees < 180.0))
                tok.fail("field of view must be in (0, 180)");
            if (length(cross(scene.camera.target - scene.camera.position, scene.camera.up)) == 0.0)
                tok.fail("degenerate camera frame");
            have_camera = true;
        } else {
            tok.fail("unknown record '" + kind + "'");
        }
        tok.finish();
    });
    if (!mesh) throw ParseError(name, 0, "missing mesh record");
    if (!have_camera) throw ParseError(name, 0, "missing camera record");
    if (scene.lights.empty()) throw ParseError(name, 0, "no light records");
    std::string mesh_text;
    try {
        mesh_text = read_file(mesh->first);
    } catch (const std::runtime_error& e) {
        throw ParseError(name, mesh->second, e.what());
    }
    scene = parse_mesh_into(std::move(scene), mesh_text, mesh->first.string());
    for (std::size_t i = 0; i < scene.triangles.size(); ++i) {
        if (scene.triangles[i].material >= scene.materials.size())
            throw ParseError(mesh->first.string(), 0,
                             "triangle " + std::to_string(i) + " uses undefined material " +
                                 std::to_string(scene.triangles[i].material));
    }
    return scene;
}

Scene load_scene(const std::filesystem::path& scene_path) {
    return parse_scene(read_file(scene_path), scene_path.string(), scene_path.parent_path());
}

void save_scene(const Scene& scene, const std::filesystem::path& scene_path,
                const std::string& mesh_name) {
    const auto mesh_path = scene_path.parent_path() / mesh_name;
    std::ofstream mesh(mesh_path);
    std::ofstream out(scene_path);
    if (!mesh) throw std::runtime_error("cannot write " + mesh_path.string());
    if (!out) throw std::runtime_error("cannot write " + scene_path.string());
    mesh << std::setprecision(17);
    out << std::setprecision(17);

    // Vertices are written per triangle; no welding.
    for (const auto& t : scene.triangles)
        for (const auto& v : t.v) mesh << "v " << v.x << ' ' << v.y << ' ' << v.z << '\n';
    for (std::size_t i = 0; i < scene.triangles.size(); ++i)
        mesh << "f " << 3 * i + 1 << ' ' << 3 * i + 2 << ' ' << 3 * i + 3 << ' '
             << scene.triangles[i].material << '\n';

    auto vec = [](const Vec3& v) {
        std::ostringstream s;
        s << std::setprecision(17) << v.x << ' ' << v.y << ' ' << v.z;
        return s.str();
    };
    out << "mesh " << mesh_name << '\n';
    for (const auto& m : scene.materials) {
        out << "material " << m.albedo.r << ' ' << m.albedo.g << ' ' << m.albedo.b;
        if (!m.emission.is_black())
            out << " emission " << m.emission.r << ' ' << m.emission.g << ' ' << m.emission.b;
        out << '\n';
    }
    for (const auto& l : scene.lights) {
        out << "light " << vec(l.point(0, 0)) << "  " << vec(l.point(1, 0)) << "  "
            << vec(l.point(1, 1)) << "  " << vec(l.point(0, 1)) << " power " << l.power.r << ' '
            << l.power.g << ' ' << l.power.b << '\n';
    }
    const Camera& c = scene.camera;
    out << "camera position " << vec(c.position) << " target " << vec(c.target) << " up "
        << vec(c.up) << " fov " << c.vfov_degrees << '\n';
}

Scene scene_from_argument(const std::string& argument) {
    if (argument == "builtin:cornell") return make_cornell_box();
    if (argument == "builtin:closed-box") return make_closed_box();
    return load_scene(argument);
}

Scene make_cornell_box() {
    Scene s;
    s.materials = {
        {Color(0.725, 0.71, 0.68), {}},   // white
        {Color(0.63, 0.065, 0.05), {}},   // red
        {Color(0.14, 0.45, 0.091), {}},   // green
    };
    const Vec3 p000(0, 0, 0), p100(1, 0, 0), p010(0, 1, 0), p110(1, 1, 0);
    const Vec3 p001(0, 0, 1), p101(1, 0, 1), p011(0, 1, 1), p111(1, 1, 1);
    add_quad(s, p000, p100, p101, p001, 0);  // floor
    add_quad(s, p010, p011, p111, p110, 0);  // ceiling
    add_quad(s, p001, p101, p111, p011, 0);  // back
    add_quad(s, p000, p001, p011, p010, 1);  // left
    add_quad(s, p100, p110, p111, p101, 2);  // right
    add_block(s, 0.34, 0.35, 0.15, 0.30, -17.0, 0);
    add_block(s, 0.66, 0.65, 0.15, 0.60, 17.0, 0);
    // Facing down, slightly below the ceiling.
    s.lights.push_back({Vec3(0.4, 0.998, 0.4), Vec3(0.2, 0.0, 0.0), Vec3(0.0, 0.0, 0.2),
                        Color(4.0, 3.6, 3.0)});
    s.camera.position = Vec3(0.5, 0.5, -1.0);
    s.camera.target = Vec3(0.5, 0.5, 0.0);
    s.camera.up = Vec3(0.0, 1.0, 0.0);
    s.camera.vfov_degrees = 40.0;
    return s;
}

Scene make_closed_box(double albedo) {
    Scene s;
    s.materials = {{Color::gray(albedo), {}}};
    const Vec3 p000(0, 0, 0), p100(1, 0, 0), p010(0, 1, 0), p110(1, 1, 0);
    const Vec3 p001(0, 0, 1), p101(1, 0, 1), p011(0, 1, 1), p111(1, 1, 1);
    add_quad(s, p000, p100, p101, p001, 0);
    add_quad(s, p010, p011, p111, p110, 0);
    add_quad(s, p001, p101, p111, p011, 0);
    add_quad(s, p000, p001, p011, p010, 0);
    add_quad(s, p100, p110, p111, p101, 0);
    add_quad(s, p000, p010, p110, p100, 0);  // front
    s.lights.push_back({Vec3(0.35, 0.995, 0.35), Vec3(0.3, 0.0, 0.0), Vec3(0.0, 0.0, 0.3),
                        Color(3.0, 3.0, 3.0)});
    s.camera.position = Vec3(0.5, 0.5, 0.05);
    s.camera.target = Vec3(0.5, 0.5, 1.0);
    s.camera.up = Vec3(0.0, 1.0, 0.0);
    s.camera.vfov_degrees = 60.0;
    return s;
}

}  // namespace sparselight
