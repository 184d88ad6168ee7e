// Regenerates the bundled model library (assets/models.json + meshes/*.obj)
// from primitive builders. Output is deterministic.

#include "hullsim/physics/hull.hpp"
#include "hullsim/world/library.hpp"
#include "hullsim/world/mesh.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

using namespace hullsim;
namespace fs = std::filesystem;

namespace {

Mesh hull_mesh(const std::vector<Vec3>& pts) {
  const auto h = physics::quickhull(pts);
  Mesh m;
  m.vertices = h.vertices;
  m.triangles = h.triangles;
  return m;
}

Mesh lifted(Mesh m, double dy) {
  for (auto& v : m.vertices) v.y() += dy;
  return m;
}

Mesh chamfered_box(const Vec3& half, double c) {
  std::vector<Vec3> pts;
  for (int sx : {-1, 1})
    for (int sy : {-1, 1})
      for (int sz : {-1, 1}) {
        pts.emplace_back(sx * half.x(), sy * (half.y() - c), sz * (half.z() - c));
        pts.emplace_back(sx * (half.x() - c), sy * half.y(), sz * (half.z() - c));
        pts.emplace_back(sx * (half.x() - c), sy * (half.y() - c), sz * half.z());
      }
  return lifted(hull_mesh(pts), half.y());
}

// Square-based pyramid with its base on y = 0.
Mesh pyramid(double half, double height) {
  return hull_mesh({{-half, 0, -half}, {half, 0, -half}, {half, 0, half}, {-half, 0, half}, {0, height, 0}});
}

// Round container: a base plate plus wall segments, one convex part each.
Mesh basket(double radius, double wall_height, double thickness, int segments) {
  Mesh out;
  append_part(out, make_prism(segments, radius, 0.0, thickness), "base");
  const double step = 2.0 * kPi / segments;
  for (int k = 0; k < segments; ++k) {
    const double a0 = k * step - 0.02, a1 = (k + 1) * step + 0.02;
    std::vector<Vec3> pts;
    for (double a : {a0, a1})
      for (double r : {radius - thickness, radius})
        for (double y : {0.0, wall_height}) pts.emplace_back(r * std::cos(a), y, r * std::sin(a));
    append_part(out, hull_mesh(pts), "wall" + std::to_string(k));
  }
  return out;
}

Mesh table(double width, double depth, double height, double top, double leg) {
  Mesh out;
  append_part(out, make_box(Vec3(-width / 2, height - top, -depth / 2), Vec3(width / 2, height, depth / 2)), "top");
  const double ix = width / 2 - 0.05, iz = depth / 2 - 0.05;
  int n = 0;
  for (double sx : {-1.0, 1.0})
    for (double sz : {-1.0, 1.0}) {
      const Vec3 c(sx * ix, 0, sz * iz);
      append_part(out, make_box(c + Vec3(-leg / 2, 0, -leg / 2), c + Vec3(leg / 2, height - top, leg / 2)),
                  "leg" + std::to_string(n++));
    }
  return out;
}

struct Entry {
  ModelRecord record;
  Mesh mesh;
};

ModelRecord rec(const std::string& name, const std::string& category, double density, AudioMaterial mat,
                double bounciness = 0.0, ColliderSource collider = ColliderSource::hull, double mu_s = 0.5,
                double mu_d = 0.4) {
  ModelRecord r;
  r.name = name;
  r.mesh_uri = "meshes/" + name + ".obj";
  r.wcategory = category;
  r.density = density;
  r.audio_material = mat;
  r.bounciness = bounciness;
  r.collider = collider;
  r.static_friction = mu_s;
  r.dynamic_friction = mu_d;
  return r;
}

std::vector<Entry> catalog() {
  using M = AudioMaterial;
  using C = ColliderSource;
  std::vector<Entry> v;
  v.push_back({rec("unit_cube", "cube", 1000, M::wood), make_box(Vec3(-0.5, 0, -0.5), Vec3(0.5, 1, 0.5))});
  v.push_back({rec("iron_box", "box", 7870, M::metal, 0.1, C::hull, 0.6, 0.45), chamfered_box(Vec3(0.15, 0.1, 0.12), 0.015)});
  v.push_back({rec("small_table_green_marble", "table", 2700, M::ceramic, 0.0, C::parts, 0.6, 0.5),
               table(1.2, 0.8, 0.8, 0.05, 0.06)});
  v.push_back({rec("sphere", "ball", 500, M::plastic, 0.5, C::sphere), make_icosphere(0.5, 3, Vec3(0, 0.5, 0))});
  v.push_back({rec("ball_rubber", "ball", 1100, M::plastic, 0.8, C::sphere, 0.9, 0.8), make_icosphere(0.1, 3, Vec3(0, 0.1, 0))});
  v.push_back({rec("ball_steel", "ball", 7850, M::metal, 0.6, C::sphere, 0.4, 0.3), make_icosphere(0.05, 3, Vec3(0, 0.05, 0))});
  v.push_back({rec("ball_glass", "ball", 2500, M::glass, 0.7, C::sphere, 0.4, 0.3), make_icosphere(0.04, 3, Vec3(0, 0.04, 0))});
  v.push_back({rec("basket", "bowl", 600, M::wood, 0.0, C::parts), basket(0.35, 0.25, 0.03, 12)});
  v.push_back({rec("ramp", "ramp", 700, M::wood, 0.0, C::hull, 0.3, 0.2), make_wedge(1.5, 0.5, 1.0)});
  v.push_back({rec("toy_pentagon", "toy", 900, M::plastic, 0.3), make_prism(5, 0.1, 0.0, 0.1)});
  v.push_back({rec("toy_prism", "toy", 900, M::plastic, 0.3), make_prism(3, 0.12, 0.0, 0.2)});
  v.push_back({rec("toy_octahedron", "toy", 900, M::plastic, 0.3), make_octahedron(0.1, Vec3(0, 0.1, 0))});
  v.push_back({rec("toy_cylinder", "toy", 900, M::plastic, 0.3), make_prism(16, 0.08, 0.0, 0.2)});
  v.push_back({rec("toy_pyramid", "toy", 900, M::plastic, 0.3), pyramid(0.1, 0.18)});
  v.push_back({rec("block", "block", 600, M::wood, 0.0, C::hull, 0.7, 0.6), make_box(Vec3(-0.1, 0, -0.1), Vec3(0.1, 0.1, 0.1))});
  v.push_back({rec("cardboard_box", "box", 150, M::cardboard, 0.0, C::hull, 0.6, 0.5), make_box(Vec3(-0.2, 0, -0.15), Vec3(0.2, 0.3, 0.15))});
  v.push_back({rec("ceramic_mug", "cup", 2300, M::ceramic, 0.1), make_prism(12, 0.05, 0.0, 0.11)});
  v.push_back({rec("glass_vase", "vase", 2500, M::glass, 0.2), make_prism(8, 0.07, 0.0, 0.3)});
  v.push_back({rec("occluder_board", "board", 600, M::wood), make_box(Vec3(-0.5, 0, -0.025), Vec3(0.5, 0.8, 0.025))});
  return v;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Write the bundled model library"};
  std::string out_dir = HULLSIM_ASSET_DIR;
  app.add_option("--out-dir", out_dir, "asset directory");
  CLI11_PARSE(app, argc, argv);

  const fs::path root(out_dir);
  fs::create_directories(root / "meshes");
  nlohmann::json lib = nlohmann::json::array();
  for (const auto& e : catalog()) {
    e.record.validate();
    std::ofstream(root / e.record.mesh_uri) << to_obj(e.mesh);
    lib.push_back(e.record.to_json());
  }
  std::ofstream(root / "models.json") << lib.dump(2) << '\n';
  std::cout << "wrote " << lib.size() << " records to " << (root / "models.json").string() << '\n';
  return 0;
}
