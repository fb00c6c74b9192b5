#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>

#include "sparselight/geometry.hpp"

namespace sparselight {

/// Malformed scene or mesh input. what() reads "<file>:<line>: <message>".
class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& file, int line, const std::string& message)
        : std::runtime_error(file + ":" + std::to_string(line) + ": " + message), line_(line) {}
    int line() const { return line_; }

private:
    int line_;
};

// Mesh file (.mesh), one record per line, '#' starts a comment:
//   v <x> <y> <z>                 vertex
//   f <i> <j> <k> <material>      triangle; 1-based vertex indices, 0-based material
//
// Scene file (.scene):
//   mesh <path>                   relative to the scene file
//   material <r> <g> <b> [emission <r> <g> <b>]   diffuse albedo; index = order of appearance
//   light <x0 y0 z0> <x1 y1 z1> <x2 y2 z2> <x3 y3 z3> power <r> <g> <b>
//                                 parallelogram corners in order; emits toward
//                                 cross(p1 - p0, p3 - p0)
//   camera position <x y z> target <x y z> up <x y z> fov <degrees>

Scene parse_mesh_into(Scene scene, const std::string& text, const std::string& name);
Scene parse_scene(const std::string& text, const std::string& name,
                  const std::filesystem::path& base_dir);
Scene load_scene(const std::filesystem::path& scene_path);

/// Writes `scene_path` and a mesh file named `mesh_name` next to it.
void save_scene(const Scene& scene, const std::filesystem::path& scene_path,
                const std::string& mesh_name);

/// Resolves "builtin:cornell" and "builtin:closed-box" or loads a scene file.
Scene scene_from_argument(const std::string& argument);

/// Unit Cornell box (red left wall, green right wall, two white blocks) with a
/// ceiling light, viewed through the open front.
Scene make_cornell_box();

/// Closed white cube [0,1]^3 with a ceiling light and the camera inside.
Scene make_closed_box(double albedo = 0.75);

}  // namespace sparselight
