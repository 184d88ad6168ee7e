#include "hullsim/world/mesh.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

namespace hullsim {

void Mesh::scale(double factor) {
  for (auto& v : vertices) v *= factor;
}

Aabb Mesh::bounds() const {
  Aabb box;
  for (const auto& v : vertices) box.extend(v);
  return box;
}

std::vector<Vec3> Mesh::part_points(std::size_t part) const {
  std::vector<Vec3> out;
  if (parts.empty()) return vertices;
  for (int i : parts.at(part).vertices) out.push_back(vertices[i]);
  return out;
}

namespace {

int parse_index(std::string_view token, int vertex_count, int line_no) {
  const auto slash = token.find('/');
  if (slash != std::string_view::npos) token = token.substr(0, slash);
  int idx = 0;
  auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), idx);
  if (ec != std::errc{} || idx == 0) {
    throw MeshLoadError("obj line " + std::to_string(line_no) + ": bad face index '" + std::string(token) + "'");
  }
  const int resolved = idx > 0 ? idx - 1 : vertex_count + idx;
  if (resolved < 0 || resolved >= vertex_count) {
    throw MeshLoadError("obj line " + std::to_string(line_no) + ": face index out of range");
  }
  return resolved;
}

}  // namespace

Mesh parse_obj(std::string_view text) {
  Mesh mesh;
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  int current = -1;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ls(line);
    std::string tag;
    if (!(ls >> tag) || tag[0] == '#') continue;
    if (tag == "v") {
      Vec3 v;
      if (!(ls >> v.x() >> v.y() >> v.z())) {
        throw MeshLoadError("obj line " + std::to_string(line_no) + ": malformed vertex");
      }
      mesh.vertices.push_back(v);
    } else if (tag == "f") {
      std::vector<int> idx;
      std::string tok;
      while (ls >> tok) idx.push_back(parse_index(tok, static_cast<int>(mesh.vertices.size()), line_no));
      if (idx.size() < 3) throw MeshLoadError("obj line " + std::to_string(line_no) + ": face with < 3 vertices");
      if (current < 0) {
        mesh.parts.push_back({"default", {}});
        current = 0;
      }
      for (std::size_t k = 1; k + 1 < idx.size(); ++k) mesh.triangles.push_back({idx[0], idx[k], idx[k + 1]});
      auto& pv = mesh.parts[current].vertices;
      pv.insert(pv.end(), idx.begin(), idx.end());
    } else if (tag == "o" || tag == "g") {
      std::string name;
      ls >> name;
      if (current >= 0 && mesh.parts[current].vertices.empty()) {
        mesh.parts[current].name = name;
      } else {
        mesh.parts.push_back({name, {}});
        current = static_cast<int>(mesh.parts.size()) - 1;
      }
    }
  }
  std::erase_if(mesh.parts, [](const Mesh::Part& p) { return p.vertices.empty(); });
  for (auto& p : mesh.parts) {
    std::sort(p.vertices.begin(), p.vertices.end());
    p.vertices.erase(std::unique(p.vertices.begin(), p.vertices.end()), p.vertices.end());
  }
  if (mesh.triangles.empty()) throw MeshLoadError("obj has no faces");
  return mesh;
}

Mesh load_obj(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw MeshLoadError("cannot open mesh " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_obj(ss.str());
  } catch (const MeshLoadError& e) {
    throw MeshLoadError(path.string() + ": " + e.what());
  }
}

std::string to_obj(const Mesh& mesh) {
  std::ostringstream out;
  out.precision(17);
  for (const auto& v : mesh.vertices) out << "v " << v.x() << ' ' << v.y() << ' ' << v.z() << '\n';
  if (mesh.parts.size() <= 1) {
    for (const auto& t : mesh.triangles) out << "f " << t[0] + 1 << ' ' << t[1] + 1 << ' ' << t[2] + 1 << '\n';
    return out.str();
  }
  // Triangles belong to the part that owns their first vertex.
  std::vector<int> owner(mesh.vertices.size(), 0);
  for (std::size_t p = 0; p < mesh.parts.size(); ++p)
    for (int v : mesh.parts[p].vertices) owner[v] = static_cast<int>(p);
  for (std::size_t p = 0; p < mesh.parts.size(); ++p) {
    out << "o " << mesh.parts[p].name << '\n';
    for (const auto& t : mesh.triangles)
      if (owner[t[0]] == static_cast<int>(p)) out << "f " << t[0] + 1 << ' ' << t[1] + 1 << ' ' << t[2] + 1 << '\n';
  }
  return out.str();
}

void append_part(Mesh& mesh, const Mesh& other, const std::string& name) {
  const int base = static_cast<int>(mesh.vertices.size());
  Mesh::Part part{name, {}};
  for (std::size_t i = 0; i < other.vertices.size(); ++i) {
    mesh.vertices.push_back(other.vertices[i]);
    part.vertices.push_back(base + static_cast<int>(i));
  }
  for (const auto& t : other.triangles) mesh.triangles.push_back({t[0] + base, t[1] + base, t[2] + base});
  mesh.parts.push_back(std::move(part));
}

namespace {

Mesh single_part(Mesh m) {
  Mesh::Part p{"default", {}};
  for (int i = 0; i < static_cast<int>(m.vertices.size()); ++i) p.vertices.push_back(i);
  m.parts = {std::move(p)};
  return m;
}

}  // namespace

Mesh make_box(const Vec3& lo, const Vec3& hi) {
  Mesh m;
  for (int i = 0; i < 8; ++i) {
    m.vertices.emplace_back((i & 1) ? hi.x() : lo.x(), (i & 2) ? hi.y() : lo.y(), (i & 4) ? hi.z() : lo.z());
  }
  const int quads[6][4] = {{0, 4, 6, 2}, {1, 3, 7, 5}, {0, 1, 5, 4}, {2, 6, 7, 3}, {0, 2, 3, 1}, {4, 5, 7, 6}};
  for (const auto& q : quads) {
    m.triangles.push_back({q[0], q[1], q[2]});
    m.triangles.push_back({q[0], q[2], q[3]});
  }
  return single_part(std::move(m));
}

Mesh make_icosphere(double radius, int subdivisions, const Vec3& center) {
  const double t = (1.0 + std::sqrt(5.0)) / 2.0;
  std::vector<Vec3> v = {{-1, t, 0}, {1, t, 0}, {-1, -t, 0}, {1, -t, 0}, {0, -1, t}, {0, 1, t},
                         {0, -1, -t}, {0, 1, -t}, {t, 0, -1}, {t, 0, 1}, {-t, 0, -1}, {-t, 0, 1}};
  for (auto& p : v) p.normalize();
  std::vector<std::array<int, 3>> f = {{0, 11, 5}, {0, 5, 1}, {0, 1, 7}, {0, 7, 10}, {0, 10, 11},
                                       {1, 5, 9}, {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
                                       {3, 9, 4}, {3, 4, 2}, {3, 2, 6}, {3, 6, 8}, {3, 8, 9},
                                       {4, 9, 5}, {2, 4, 11}, {6, 2, 10}, {8, 6, 7}, {9, 8, 1}};
  for (int s = 0; s < subdivisions; ++s) {
    std::map<std::pair<int, int>, int> mid;
    auto midpoint = [&](int a, int b) {
      const auto key = std::minmax(a, b);
      auto it = mid.find(key);
      if (it != mid.end()) return it->second;
      v.push_back((v[a] + v[b]).normalized());
      const int idx = static_cast<int>(v.size()) - 1;
      mid.emplace(key, idx);
      return idx;
    };
    std::vector<std::array<int, 3>> next;
    for (const auto& tri : f) {
      const int a = midpoint(tri[0], tri[1]), b = midpoint(tri[1], tri[2]), c = midpoint(tri[2], tri[0]);
      next.push_back({tri[0], a, c});
      next.push_back({tri[1], b, a});
      next.push_back({tri[2], c, b});
      next.push_back({a, b, c});
    }
    f = std::move(next);
  }
  Mesh m;
  for (const auto& p : v) m.vertices.push_back(center + radius * p);
  m.triangles = std::move(f);
  return single_part(std::move(m));
}

Mesh make_prism(int sides, double radius, double y0, double y1) {
  Mesh m;
  for (int k = 0; k < sides; ++k) {
    const double a = 2.0 * kPi * k / sides;
    m.vertices.emplace_back(radius * std::cos(a), y0, radius * std::sin(a));
  }
  for (int k = 0; k < sides; ++k) {
    const double a = 2.0 * kPi * k / sides;
    m.vertices.emplace_back(radius * std::cos(a), y1, radius * std::sin(a));
  }
  // Angle increases from +x toward +z, which is clockwise seen from +y.
  for (int k = 1; k + 1 < sides; ++k) {
    m.triangles.push_back({0, k, k + 1});
    m.triangles.push_back({sides, sides + k + 1, sides + k});
  }
  for (int k = 0; k < sides; ++k) {
    const int a = k, b = (k + 1) % sides;
    m.triangles.push_back({a, sides + a, sides + b});
    m.triangles.push_back({a, sides + b, b});
  }
  return single_part(std::move(m));
}

Mesh make_wedge(double length, double height, double width) {
  const double hx = 0.5 * length, hz = 0.5 * width;
  Mesh m;
  m.vertices = {{-hx, 0, -hz}, {hx, 0, -hz}, {hx, height, -hz}, {-hx, 0, hz}, {hx, 0, hz}, {hx, height, hz}};
  m.triangles = {{0, 1, 4}, {0, 4, 3},   // bottom
                 {1, 2, 5}, {1, 5, 4},   // back (+x)
                 {0, 3, 5}, {0, 5, 2},   // slope
                 {0, 2, 1},              // -z side
                 {3, 4, 5}};             // +z side
  return single_part(std::move(m));
}

Mesh make_octahedron(double radius, const Vec3& center) {
  Mesh m;
  m.vertices = {{radius, 0, 0}, {-radius, 0, 0}, {0, radius, 0}, {0, -radius, 0}, {0, 0, radius}, {0, 0, -radius}};
  for (auto& v : m.vertices) v += center;
  m.triangles = {{0, 2, 4}, {4, 2, 1}, {1, 2, 5}, {5, 2, 0}, {0, 4, 3}, {4, 1, 3}, {1, 5, 3}, {5, 0, 3}};
  return single_part(std::move(m));
}

}  // namespace hullsim
