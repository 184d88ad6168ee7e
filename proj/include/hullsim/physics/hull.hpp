#pragma once

#include "hullsim/core/math.hpp"

#include <array>
#include <span>
#include <stdexcept>
#include <vector>

namespace hullsim::physics {

struct DegenerateInput : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// A planar face of the hull after merging coplanar triangles.
// `loop` lists vertex indices counter-clockwise seen from outside.
struct HullFace {
  Vec3 normal;
  double offset = 0.0;  // dot(normal, x) == offset on the plane
  std::vector<int> loop;

  double distance(const Vec3& p) const { return normal.dot(p) - offset; }
};

struct HullEdge {
  int a = 0;
  int b = 0;
  int face_left = 0;   // face whose loop traverses a -> b
  int face_right = 0;  // face whose loop traverses b -> a
};

struct ConvexHull {
  std::vector<Vec3> vertices;
  std::vector<std::array<int, 3>> triangles;  // outward (CCW) winding
  std::vector<HullFace> faces;
  std::vector<HullEdge> edges;
  double volume = 0.0;
  Vec3 centroid = Vec3::Zero();
  Mat3 inertia_unit_density = Mat3::Zero();  // about the centroid
  Aabb bounds;

  int support_index(const Vec3& dir) const;
  Vec3 support(const Vec3& dir) const { return vertices[support_index(dir)]; }
  // Largest signed face-plane distance; <= 0 means inside.
  double max_face_distance(const Vec3& p) const;
  bool contains(const Vec3& p, double tol = 1e-9) const { return max_face_distance(p) <= tol; }

  // Same hull with every vertex moved by `delta` (mass data updated).
  ConvexHull translated(const Vec3& delta) const;
};

// 3D quickhull. Points within a scale-relative tolerance of the hull
// surface are treated as inside. Throws DegenerateInput for fewer than four
// points or (near-)coplanar input.
ConvexHull quickhull(std::span<const Vec3> points);

struct MassProperties {
  double mass = 0.0;
  Vec3 centroid = Vec3::Zero();
  Mat3 inertia = Mat3::Zero();  // about centroid, body axes
};

MassProperties mass_properties(const ConvexHull& hull, double density);

// Combined mass data of several bodies expressed in one frame.
MassProperties combine(std::span<const MassProperties> parts);

}  // namespace hullsim::physics
