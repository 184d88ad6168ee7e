#include "hullsim/physics/hull.hpp"

#include <algorithm>
#include <cstdint>
#include <map>
#include <numeric>
#include <unordered_map>

namespace hullsim::physics {
namespace {

std::uint64_t edge_key(int a, int b) {
  return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(a)) << 32) | static_cast<std::uint32_t>(b);
}

struct WorkFace {
  std::array<int, 3> v;
  Vec3 normal;
  double offset = 0.0;
  std::vector<int> outside;
  bool alive = true;
  bool visited = false;
};

class QuickhullBuilder {
 public:
  explicit QuickhullBuilder(std::span<const Vec3> points) : pts_(points) {
    double scale = 0.0;
    for (int axis = 0; axis < 3; ++axis) {
      double m = 0.0;
      for (const auto& p : pts_) m = std::max(m, std::abs(p[axis]));
      scale += m;
    }
    tol_ = 1e-11 * std::max(scale, 1e-3);
  }

  std::vector<std::array<int, 3>> run() {
    if (pts_.size() < 4) throw DegenerateInput("quickhull needs at least four points");
    build_simplex();
    for (std::size_t i = 0; i < faces_.size(); ++i) {
      if (faces_[i].alive && !faces_[i].outside.empty()) add_point(static_cast<int>(i));
    }
    std::vector<std::array<int, 3>> tris;
    for (const auto& f : faces_)
      if (f.alive) tris.push_back(f.v);
    return tris;
  }

  double tolerance() const { return tol_; }

 private:
  double dist(const WorkFace& f, int p) const { return f.normal.dot(pts_[p]) - f.offset; }

  int add_face(int a, int b, int c) {
    WorkFace f;
    f.v = {a, b, c};
    Vec3 n = (pts_[b] - pts_[a]).cross(pts_[c] - pts_[a]);
    const double len = n.norm();
    f.normal = len > 0.0 ? Vec3(n / len) : Vec3::Zero();
    f.offset = f.normal.dot(pts_[a]);
    const int idx = static_cast<int>(faces_.size());
    faces_.push_back(std::move(f));
    edges_[edge_key(a, b)] = idx;
    edges_[edge_key(b, c)] = idx;
    edges_[edge_key(c, a)] = idx;
    return idx;
  }

  void build_simplex() {
    const int n = static_cast<int>(pts_.size());
    std::array<int, 3> lo{0, 0, 0}, hi{0, 0, 0};
    for (int i = 1; i < n; ++i) {
      for (int axis = 0; axis < 3; ++axis) {
        if (pts_[i][axis] < pts_[lo[axis]][axis]) lo[axis] = i;
        if (pts_[i][axis] > pts_[hi[axis]][axis]) hi[axis] = i;
      }
    }
    int i0 = lo[0], i1 = hi[0];
    double best = -1.0;
    for (int axis = 0; axis < 3; ++axis) {
      const double d = pts_[hi[axis]][axis] - pts_[lo[axis]][axis];
      if (d > best) {
        best = d;
        i0 = lo[axis];
        i1 = hi[axis];
      }
    }
    if (best <= tol_) throw DegenerateInput("quickhull input is a single point");

    const Vec3 axis_dir = (pts_[i1] - pts_[i0]).normalized();
    int i2 = -1;
    best = tol_;
    for (int i = 0; i < n; ++i) {
      const Vec3 d = pts_[i] - pts_[i0];
      const double off = (d - axis_dir * axis_dir.dot(d)).norm();
      if (off > best) {
        best = off;
        i2 = i;
      }
    }
    if (i2 < 0) throw DegenerateInput("quickhull input is collinear");

    const Vec3 plane_n = (pts_[i1] - pts_[i0]).cross(pts_[i2] - pts_[i0]).normalized();
    int i3 = -1;
    best = tol_;
    for (int i = 0; i < n; ++i) {
      const double off = std::abs(plane_n.dot(pts_[i] - pts_[i0]));
      if (off > best) {
        best = off;
        i3 = i;
      }
    }
    if (i3 < 0) throw DegenerateInput("quickhull input is coplanar");

    const std::array<std::array<int, 4>, 4> tets = {{{i0, i1, i2, i3}, {i0, i1, i3, i2}, {i0, i2, i3, i1}, {i1, i2, i3, i0}}};
    for (auto t : tets) {
      const Vec3 nrm = (pts_[t[1]] - pts_[t[0]]).cross(pts_[t[2]] - pts_[t[0]]);
      if (nrm.dot(pts_[t[3]] - pts_[t[0]]) > 0.0) std::swap(t[1], t[2]);
      add_face(t[0], t[1], t[2]);
    }

    for (int i = 0; i < n; ++i) {
      if (i == i0 || i == i1 || i == i2 || i == i3) continue;
      assign(i, 0, static_cast<int>(faces_.size()));
    }
  }

  // Attach point p to the face in [first, last) it lies furthest above.
  void assign(int p, int first, int last) {
    int best_face = -1;
    double best = tol_;
    for (int f = first; f < last; ++f) {
      if (!faces_[f].alive) continue;
      const double d = dist(faces_[f], p);
      if (d > best) {
        best = d;
        best_face = f;
      }
    }
    if (best_face >= 0) faces_[best_face].outside.push_back(p);
  }

  void add_point(int face_index) {
    const WorkFace& seed = faces_[face_index];
    int eye = seed.outside.front();
    double eye_dist = dist(seed, eye);
    for (int p : seed.outside) {
      const double d = dist(seed, p);
      if (d > eye_dist) {
        eye_dist = d;
        eye = p;
      }
    }

    std::vector<int> visible;
    std::vector<std::pair<int, int>> horizon;
    std::vector<int> stack{face_index};
    faces_[face_index].visited = true;
    while (!stack.empty()) {
      const int fi = stack.back();
      stack.pop_back();
      visible.push_back(fi);
      const auto v = faces_[fi].v;
      for (int k = 0; k < 3; ++k) {
        const int a = v[k], b = v[(k + 1) % 3];
        const int nb = edges_.at(edge_key(b, a));
        if (faces_[nb].visited) continue;
        if (dist(faces_[nb], eye) > tol_) {
          faces_[nb].visited = true;
          stack.push_back(nb);
        } else {
          horizon.emplace_back(a, b);
        }
      }
    }

    std::vector<int> orphans;
    for (int fi : visible) {
      WorkFace& f = faces_[fi];
      f.alive = false;
      for (int p : f.outside)
        if (p != eye) orphans.push_back(p);
      f.outside.clear();
      for (int k = 0; k < 3; ++k) edges_.erase(edge_key(f.v[k], f.v[(k + 1) % 3]));
    }

    const int first_new = static_cast<int>(faces_.size());
    for (const auto& [a, b] : horizon) add_face(a, b, eye);
    const int last_new = static_cast<int>(faces_.size());
    std::sort(orphans.begin(), orphans.end());
    for (int p : orphans) assign(p, first_new, last_new);
  }

  std::span<const Vec3> pts_;
  double tol_ = 0.0;
  std::vector<WorkFace> faces_;
  std::unordered_map<std::uint64_t, int> edges_;
};

int find_root(std::vector<int>& parent, int i) {
  while (parent[i] != i) {
    parent[i] = parent[parent[i]];
    i = parent[i];
  }
  return i;
}

void build_faces(ConvexHull& hull, double tol) {
  const auto& V = hull.vertices;
  const int nt = static_cast<int>(hull.triangles.size());
  std::vector<Vec3> tri_normal(nt);
  std::vector<double> tri_area(nt);
  std::unordered_map<std::uint64_t, int> owner;
  for (int t = 0; t < nt; ++t) {
    const auto& tri = hull.triangles[t];
    const Vec3 n = (V[tri[1]] - V[tri[0]]).cross(V[tri[2]] - V[tri[0]]);
    tri_area[t] = 0.5 * n.norm();
    tri_normal[t] = n.normalized();
    for (int k = 0; k < 3; ++k) owner[edge_key(tri[k], tri[(k + 1) % 3])] = t;
  }

  std::vector<int> parent(nt);
  std::iota(parent.begin(), parent.end(), 0);
  for (int t = 0; t < nt; ++t) {
    const auto& tri = hull.triangles[t];
    for (int k = 0; k < 3; ++k) {
      const int u = owner.at(edge_key(tri[(k + 1) % 3], tri[k]));
      if (u <= t) continue;
      if (tri_normal[t].dot(tri_normal[u]) < 1.0 - 1e-10) continue;
      bool coplanar = true;
      for (int corner : hull.triangles[u]) {
        if (std::abs(tri_normal[t].dot(V[corner] - V[tri[0]])) > 10.0 * tol) coplanar = false;
      }
      if (coplanar) parent[find_root(parent, u)] = find_root(parent, t);
    }
  }

  std::map<int, std::vector<int>> groups;
  for (int t = 0; t < nt; ++t) groups[find_root(parent, t)].push_back(t);

  std::unordered_map<std::uint64_t, int> face_of_edge;
  for (const auto& [root, members] : groups) {
    HullFace face;
    Vec3 n = Vec3::Zero();
    std::map<int, int> next;
    std::vector<char> in_group(nt, 0);
    for (int t : members) in_group[t] = 1;
    for (int t : members) {
      n += tri_area[t] * tri_normal[t];
      const auto& tri = hull.triangles[t];
      for (int k = 0; k < 3; ++k) {
        const int a = tri[k], b = tri[(k + 1) % 3];
        if (!in_group[owner.at(edge_key(b, a))]) next[a] = b;
      }
    }
    face.normal = n.normalized();
    const int start = next.begin()->first;
    int cur = start;
    do {
      face.loop.push_back(cur);
      cur = next.at(cur);
    } while (cur != start && face.loop.size() <= next.size());

    // Drop vertices that sit on a straight stretch of the boundary.
    std::vector<int> trimmed;
    const std::size_t m = face.loop.size();
    for (std::size_t i = 0; i < m; ++i) {
      const Vec3& prev = V[face.loop[(i + m - 1) % m]];
      const Vec3& here = V[face.loop[i]];
      const Vec3& nxt = V[face.loop[(i + 1) % m]];
      const Vec3 e0 = here - prev, e1 = nxt - here;
      if (e0.cross(e1).norm() > 1e-12 * e0.norm() * e1.norm()) trimmed.push_back(face.loop[i]);
    }
    if (trimmed.size() >= 3) face.loop = std::move(trimmed);

    double off = 0.0;
    for (int vi : face.loop) off += face.normal.dot(V[vi]);
    face.offset = off / static_cast<double>(face.loop.size());
    const int fi = static_cast<int>(hull.faces.size());
    for (std::size_t i = 0; i < face.loop.size(); ++i) {
      face_of_edge[edge_key(face.loop[i], face.loop[(i + 1) % face.loop.size()])] = fi;
    }
    hull.faces.push_back(std::move(face));
  }

  for (int fi = 0; fi < static_cast<int>(hull.faces.size()); ++fi) {
    const auto& loop = hull.faces[fi].loop;
    for (std::size_t i = 0; i < loop.size(); ++i) {
      const int a = loop[i], b = loop[(i + 1) % loop.size()];
      if (a > b) continue;
      auto it = face_of_edge.find(edge_key(b, a));
      if (it == face_of_edge.end()) continue;
      hull.edges.push_back({a, b, fi, it->second});
    }
  }
}

void compute_mass_data(ConvexHull& hull) {
  Vec3 ref = Vec3::Zero();
  for (const auto& v : hull.vertices) ref += v;
  ref /= static_cast<double>(hull.vertices.size());

  // Second moments of the canonical tetrahedron (0, e1, e2, e3).
  Mat3 canonical;
  canonical << 2, 1, 1, 1, 2, 1, 1, 1, 2;
  canonical /= 120.0;

  double six_volume = 0.0;
  Vec3 moment = Vec3::Zero();
  Mat3 covariance = Mat3::Zero();
  for (const auto& tri : hull.triangles) {
    Mat3 A;
    A.col(0) = hull.vertices[tri[0]] - ref;
    A.col(1) = hull.vertices[tri[1]] - ref;
    A.col(2) = hull.vertices[tri[2]] - ref;
    const double det = A.col(0).dot(A.col(1).cross(A.col(2)));
    six_volume += det;
    moment += det * (A.col(0) + A.col(1) + A.col(2)) / 24.0;
    covariance += det * A * canonical * A.transpose();
  }
  const double volume = six_volume / 6.0;
  const Vec3 c_rel = moment / volume;
  const Mat3 centered = covariance - volume * c_rel * c_rel.transpose();
  hull.volume = volume;
  hull.centroid = ref + c_rel;
  hull.inertia_unit_density = centered.trace() * Mat3::Identity() - centered;
}

}  // namespace

int ConvexHull::support_index(const Vec3& dir) const {
  int best = 0;
  double best_dot = vertices[0].dot(dir);
  for (int i = 1; i < static_cast<int>(vertices.size()); ++i) {
    const double d = vertices[i].dot(dir);
    if (d > best_dot) {
      best_dot = d;
      best = i;
    }
  }
  return best;
}

double ConvexHull::max_face_distance(const Vec3& p) const {
  double best = -kInf;
  for (const auto& f : faces) best = std::max(best, f.distance(p));
  return best;
}

ConvexHull ConvexHull::translated(const Vec3& delta) const {
  ConvexHull out = *this;
  for (auto& v : out.vertices) v += delta;
  for (auto& f : out.faces) f.offset += f.normal.dot(delta);
  out.centroid += delta;
  out.bounds.min += delta;
  out.bounds.max += delta;
  return out;
}

ConvexHull quickhull(std::span<const Vec3> points) {
  QuickhullBuilder builder(points);
  const auto tris = builder.run();

  std::vector<int> used;
  for (const auto& t : tris) used.insert(used.end(), t.begin(), t.end());
  std::sort(used.begin(), used.end());
  used.erase(std::unique(used.begin(), used.end()), used.end());
  std::unordered_map<int, int> remap;
  ConvexHull hull;
  for (int i : used) {
    remap[i] = static_cast<int>(hull.vertices.size());
    hull.vertices.push_back(points[i]);
    hull.bounds.extend(points[i]);
  }
  for (const auto& t : tris) hull.triangles.push_back({remap[t[0]], remap[t[1]], remap[t[2]]});

  build_faces(hull, builder.tolerance());
  compute_mass_data(hull);
  return hull;
}

MassProperties mass_properties(const ConvexHull& hull, double density) {
  return {density * hull.volume, hull.centroid, density * hull.inertia_unit_density};
}

MassProperties combine(std::span<const MassProperties> parts) {
  MassProperties out;
  for (const auto& p : parts) {
    out.mass += p.mass;
    out.centroid += p.mass * p.centroid;
  }
  if (out.mass <= 0.0) return out;
  out.centroid /= out.mass;
  for (const auto& p : parts) {
    const Vec3 d = p.centroid - out.centroid;
    out.inertia += p.inertia + p.mass * (d.squaredNorm() * Mat3::Identity() - d * d.transpose());
  }
  return out;
}

}  // namespace hullsim::physics
