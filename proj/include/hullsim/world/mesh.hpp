#pragma once

#include "hullsim/core/math.hpp"

#include <array>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace hullsim {

struct MeshLoadError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Triangle mesh from the OBJ subset we read: `v`, `f` and `o`/`g` lines.
// Polygonal faces are fan-triangulated. Each `o`/`g` starts a new part.
struct Mesh {
  struct Part {
    std::string name;
    std::vector<int> vertices;  // indices into Mesh::vertices
  };

  std::vector<Vec3> vertices;
  std::vector<std::array<int, 3>> triangles;
  std::vector<Part> parts;

  void scale(double factor);
  Aabb bounds() const;
  // Points of one part, or of the whole mesh when the mesh has a single part.
  std::vector<Vec3> part_points(std::size_t part) const;
};

Mesh parse_obj(std::string_view text);
Mesh load_obj(const std::filesystem::path& path);
std::string to_obj(const Mesh& mesh);

// Append `other` as a new part.
void append_part(Mesh& mesh, const Mesh& other, const std::string& name);

// Primitive builders used for the bundled assets and in tests.
Mesh make_box(const Vec3& min, const Vec3& max);
Mesh make_icosphere(double radius, int subdivisions, const Vec3& center = Vec3::Zero());
// Right prism with a regular polygon cross-section in the xz plane.
Mesh make_prism(int sides, double radius, double y0, double y1);
// Wedge rising along +x from height 0 to `height`.
Mesh make_wedge(double length, double height, double width);
Mesh make_octahedron(double radius, const Vec3& center = Vec3::Zero());

}  // namespace hullsim
