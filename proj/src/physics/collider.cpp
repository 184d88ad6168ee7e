#include "hullsim/physics/collider.hpp"

#include <algorithm>

namespace hullsim::physics {

Aabb Collider::local_bounds() const {
  if (kind == Kind::sphere) {
    return {(center.array() - radius).matrix(), (center.array() + radius).matrix()};
  }
  return hull->bounds;
}

void PosedCollider::update(const Collider& collider, const Pose& pose) {
  kind = collider.kind;
  bounds = Aabb{};
  if (kind == Collider::Kind::sphere) {
    hull = nullptr;
    radius = collider.radius;
    center = pose.apply(collider.center);
    bounds = {(center.array() - radius).matrix(), (center.array() + radius).matrix()};
    return;
  }
  hull = collider.hull.get();
  const Mat3 R = pose.orientation.toRotationMatrix();
  vertices.resize(hull->vertices.size());
  for (std::size_t i = 0; i < vertices.size(); ++i) {
    vertices[i] = R * hull->vertices[i] + pose.position;
    bounds.extend(vertices[i]);
  }
  normals.resize(hull->faces.size());
  offsets.resize(hull->faces.size());
  for (std::size_t f = 0; f < normals.size(); ++f) {
    normals[f] = R * hull->faces[f].normal;
    offsets[f] = hull->faces[f].offset + normals[f].dot(pose.position);
  }
  center = R * hull->centroid + pose.position;
}

int PosedCollider::support_index(const Vec3& dir) const {
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

double PosedCollider::max_face_distance(const Vec3& p, int* face) const {
  double best = -kInf;
  for (int f = 0; f < static_cast<int>(normals.size()); ++f) {
    const double d = normals[f].dot(p) - offsets[f];
    if (d > best) {
      best = d;
      if (face) *face = f;
    }
  }
  return best;
}

namespace {

struct FaceQuery {
  int face = -1;
  double separation = -kInf;
};

struct EdgeQuery {
  int edge_a = -1;
  int edge_b = -1;
  Vec3 axis = Vec3::Zero();
  double separation = -kInf;
};

FaceQuery query_faces(const PosedCollider& ref, const PosedCollider& other) {
  FaceQuery q;
  for (int f = 0; f < static_cast<int>(ref.normals.size()); ++f) {
    const Vec3& n = ref.normals[f];
    const double s = n.dot(other.vertices[other.support_index(-n)]) - ref.offsets[f];
    if (s > q.separation) {
      q.separation = s;
      q.face = f;
    }
  }
  return q;
}

// Arcs (a,b) and (c,d) on the Gauss map intersect iff the edge pair builds a
// face of the Minkowski difference.
bool is_minkowski_face(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d) {
  const Vec3 bxa = b.cross(a);
  const Vec3 dxc = d.cross(c);
  const double cba = c.dot(bxa);
  const double dba = d.dot(bxa);
  const double adc = a.dot(dxc);
  const double bdc = b.dot(dxc);
  return cba * dba < 0.0 && adc * bdc < 0.0 && cba * bdc > 0.0;
}

EdgeQuery query_edges(const PosedCollider& A, const PosedCollider& B) {
  EdgeQuery q;
  const auto& ea = A.hull->edges;
  const auto& eb = B.hull->edges;
  for (int i = 0; i < static_cast<int>(ea.size()); ++i) {
    const Vec3& a0 = A.vertices[ea[i].a];
    const Vec3 da = A.vertices[ea[i].b] - a0;
    const Vec3& na1 = A.normals[ea[i].face_left];
    const Vec3& na2 = A.normals[ea[i].face_right];
    for (int j = 0; j < static_cast<int>(eb.size()); ++j) {
      const Vec3& nb1 = B.normals[eb[j].face_left];
      const Vec3& nb2 = B.normals[eb[j].face_right];
      if (!is_minkowski_face(na1, na2, -nb1, -nb2)) continue;
      const Vec3& b0 = B.vertices[eb[j].a];
      const Vec3 db = B.vertices[eb[j].b] - b0;
      Vec3 axis = da.cross(db);
      const double len = axis.norm();
      if (len < 1e-9 * da.norm() * db.norm()) continue;
      axis /= len;
      if (axis.dot(a0 - A.center) < 0.0) axis = -axis;
      const double s = axis.dot(b0 - a0);
      if (s > q.separation) {
        q.separation = s;
        q.edge_a = i;
        q.edge_b = j;
        q.axis = axis;
      }
    }
  }
  return q;
}

void closest_points_segments(const Vec3& p1, const Vec3& q1, const Vec3& p2, const Vec3& q2, Vec3& c1,
                             Vec3& c2) {
  const Vec3 d1 = q1 - p1, d2 = q2 - p2, r = p1 - p2;
  const double a = d1.squaredNorm(), e = d2.squaredNorm(), f = d2.dot(r);
  double s = 0.0, t = 0.0;
  const double c = d1.dot(r);
  const double b = d1.dot(d2);
  const double denom = a * e - b * b;
  if (denom > 1e-300) s = std::clamp((b * f - c * e) / denom, 0.0, 1.0);
  t = (b * s + f) / e;
  if (t < 0.0) {
    t = 0.0;
    s = std::clamp(-c / a, 0.0, 1.0);
  } else if (t > 1.0) {
    t = 1.0;
    s = std::clamp((b - c) / a, 0.0, 1.0);
  }
  c1 = p1 + d1 * s;
  c2 = p2 + d2 * t;
}

// Keep the deepest point and the three that span the largest area.
void reduce_points(std::vector<ContactPoint>& pts, const Vec3& normal) {
  if (pts.size() <= 4) return;
  auto pos = [&](std::size_t i) { return pts[i].point_b; };
  std::size_t i0 = 0;
  for (std::size_t i = 1; i < pts.size(); ++i)
    if (pts[i].separation < pts[i0].separation) i0 = i;
  std::size_t i1 = i0;
  double best = -1.0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const double d = (pos(i) - pos(i0)).squaredNorm();
    if (d > best) {
      best = d;
      i1 = i;
    }
  }
  std::size_t i2 = i0;
  best = -1.0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const double area = std::abs((pos(i) - pos(i0)).cross(pos(i) - pos(i1)).dot(normal));
    if (area > best) {
      best = area;
      i2 = i;
    }
  }
  // Orient (i0, i1, i2) counter-clockwise about the normal.
  if ((pos(i1) - pos(i0)).cross(pos(i2) - pos(i0)).dot(normal) < 0.0) std::swap(i1, i2);
  std::size_t i3 = i0;
  best = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const double a01 = (pos(i0) - pos(i)).cross(pos(i1) - pos(i)).dot(normal);
    const double a12 = (pos(i1) - pos(i)).cross(pos(i2) - pos(i)).dot(normal);
    const double a20 = (pos(i2) - pos(i)).cross(pos(i0) - pos(i)).dot(normal);
    const double m = std::min({a01, a12, a20});
    if (m < best) {
      best = m;
      i3 = i;
    }
  }
  std::vector<ContactPoint> out{pts[i0], pts[i1], pts[i2]};
  if (i3 != i0) out.push_back(pts[i3]);
  pts = std::move(out);
}

ContactManifold face_contact(const PosedCollider& ref, int ref_face, const PosedCollider& inc, bool ref_is_b,
                             double tolerance) {
  const Vec3& n = ref.normals[ref_face];
  const double off = ref.offsets[ref_face];

  int inc_face = 0;
  double most_anti = kInf;
  for (int f = 0; f < static_cast<int>(inc.normals.size()); ++f) {
    const double d = inc.normals[f].dot(n);
    if (d < most_anti) {
      most_anti = d;
      inc_face = f;
    }
  }

  std::vector<Vec3> poly;
  for (int vi : inc.hull->faces[inc_face].loop) poly.push_back(inc.vertices[vi]);

  const auto& loop = ref.hull->faces[ref_face].loop;
  std::vector<Vec3> next;
  for (std::size_t i = 0; i < loop.size() && !poly.empty(); ++i) {
    const Vec3& v0 = ref.vertices[loop[i]];
    const Vec3& v1 = ref.vertices[loop[(i + 1) % loop.size()]];
    const Vec3 side = (v1 - v0).cross(n).normalized();
    const double side_off = side.dot(v0);
    next.clear();
    for (std::size_t k = 0; k < poly.size(); ++k) {
      const Vec3& p = poly[k];
      const Vec3& q = poly[(k + 1) % poly.size()];
      const double dp = side.dot(p) - side_off;
      const double dq = side.dot(q) - side_off;
      if (dp <= 0.0) next.push_back(p);
      if ((dp < 0.0 && dq > 0.0) || (dp > 0.0 && dq < 0.0)) next.push_back(p + (q - p) * (dp / (dp - dq)));
    }
    poly.swap(next);
  }

  ContactManifold m;
  m.normal = ref_is_b ? Vec3(-n) : n;
  for (const Vec3& p : poly) {
    const double s = n.dot(p) - off;
    if (s > tolerance) continue;
    const Vec3 on_ref = p - s * n;
    ContactPoint cp;
    cp.separation = s;
    cp.point_a = ref_is_b ? p : on_ref;
    cp.point_b = ref_is_b ? on_ref : p;
    m.points.push_back(cp);
  }
  if (m.points.empty()) {
    const Vec3 p = inc.vertices[inc.support_index(-n)];
    const double s = n.dot(p) - off;
    ContactPoint cp;
    cp.separation = s;
    cp.point_a = ref_is_b ? p : Vec3(p - s * n);
    cp.point_b = ref_is_b ? Vec3(p - s * n) : p;
    m.points.push_back(cp);
  }
  reduce_points(m.points, m.normal);
  return m;
}

std::optional<ContactManifold> hull_hull(const PosedCollider& A, const PosedCollider& B, double tolerance) {
  const FaceQuery fa = query_faces(A, B);
  if (fa.separation > tolerance) return std::nullopt;
  const FaceQuery fb = query_faces(B, A);
  if (fb.separation > tolerance) return std::nullopt;
  const EdgeQuery eq = query_edges(A, B);
  if (eq.separation > tolerance) return std::nullopt;

  constexpr double kFaceBias = 5e-4;
  ContactManifold m;
  double axis_sep = fa.separation;
  if (eq.edge_a >= 0 && eq.separation > std::max(fa.separation, fb.separation) + kFaceBias) {
    axis_sep = eq.separation;
    const auto& ea = A.hull->edges[eq.edge_a];
    const auto& eb = B.hull->edges[eq.edge_b];
    ContactPoint cp;
    closest_points_segments(A.vertices[ea.a], A.vertices[ea.b], B.vertices[eb.a], B.vertices[eb.b], cp.point_a,
                            cp.point_b);
    cp.separation = eq.separation;
    m.normal = eq.axis;
    m.points.push_back(cp);
  } else if (fb.separation > fa.separation + kFaceBias) {
    axis_sep = fb.separation;
    m = face_contact(B, fb.face, A, true, tolerance);
  } else {
    m = face_contact(A, fa.face, B, false, tolerance);
  }
  // Depth along the chosen axis; clipping may drop the deepest vertex.
  m.depth = std::max(0.0, -axis_sep);
  return m;
}

Vec3 closest_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c) {
  const Vec3 ab = b - a, ac = c - a, ap = p - a;
  const double d1 = ab.dot(ap), d2 = ac.dot(ap);
  if (d1 <= 0.0 && d2 <= 0.0) return a;
  const Vec3 bp = p - b;
  const double d3 = ab.dot(bp), d4 = ac.dot(bp);
  if (d3 >= 0.0 && d4 <= d3) return b;
  const double vc = d1 * d4 - d3 * d2;
  if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) return a + ab * (d1 / (d1 - d3));
  const Vec3 cp = p - c;
  const double d5 = ab.dot(cp), d6 = ac.dot(cp);
  if (d6 >= 0.0 && d5 <= d6) return c;
  const double vb = d5 * d2 - d1 * d6;
  if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) return a + ac * (d2 / (d2 - d6));
  const double va = d3 * d6 - d5 * d4;
  if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0) return b + (c - b) * ((d4 - d3) / ((d4 - d3) + (d5 - d6)));
  const double denom = 1.0 / (va + vb + vc);
  return a + ab * (vb * denom) + ac * (vc * denom);
}

// Hull is a, sphere is b.
std::optional<ContactManifold> hull_sphere(const PosedCollider& H, const PosedCollider& S, double tolerance) {
  int face = 0;
  const double face_dist = H.max_face_distance(S.center, &face);
  if (face_dist > S.radius + tolerance) return std::nullopt;
  ContactManifold m;
  ContactPoint cp;
  if (face_dist <= 0.0) {
    m.normal = H.normals[face];
    cp.point_a = S.center - face_dist * m.normal;
    cp.separation = face_dist - S.radius;
  } else {
    Vec3 best = S.center;
    double best_d2 = kInf;
    for (const auto& tri : H.hull->triangles) {
      const Vec3 q = closest_on_triangle(S.center, H.vertices[tri[0]], H.vertices[tri[1]], H.vertices[tri[2]]);
      const double d2 = (S.center - q).squaredNorm();
      if (d2 < best_d2) {
        best_d2 = d2;
        best = q;
      }
    }
    const double dist = std::sqrt(best_d2);
    if (dist > S.radius + tolerance) return std::nullopt;
    m.normal = dist > 1e-12 ? Vec3((S.center - best) / dist) : H.normals[face];
    cp.point_a = best;
    cp.separation = dist - S.radius;
  }
  cp.point_b = S.center - S.radius * m.normal;
  m.points.push_back(cp);
  m.depth = std::max(0.0, -cp.separation);
  return m;
}

std::optional<ContactManifold> sphere_sphere(const PosedCollider& A, const PosedCollider& B, double tolerance) {
  const Vec3 d = B.center - A.center;
  const double dist = d.norm();
  const double sep = dist - A.radius - B.radius;
  if (sep > tolerance) return std::nullopt;
  ContactManifold m;
  m.normal = dist > 1e-12 ? Vec3(d / dist) : Vec3::UnitY();
  ContactPoint cp;
  cp.point_a = A.center + A.radius * m.normal;
  cp.point_b = B.center - B.radius * m.normal;
  cp.separation = sep;
  m.points.push_back(cp);
  m.depth = std::max(0.0, -sep);
  return m;
}

}  // namespace

std::optional<ContactManifold> detect_contacts(const PosedCollider& a, const PosedCollider& b, double tolerance) {
  if (!a.bounds.inflated(tolerance).overlaps(b.bounds)) return std::nullopt;
  using K = Collider::Kind;
  if (a.kind == K::sphere && b.kind == K::sphere) return sphere_sphere(a, b, tolerance);
  if (a.kind == K::hull && b.kind == K::hull) return hull_hull(a, b, tolerance);
  if (a.kind == K::hull) return hull_sphere(a, b, tolerance);
  auto m = hull_sphere(b, a, tolerance);
  if (m) {
    m->normal = -m->normal;
    for (auto& p : m->points) std::swap(p.point_a, p.point_b);
  }
  return m;
}

std::optional<RayHit> raycast(const PosedCollider& shape, const Vec3& origin, const Vec3& dir, double t_min,
                              double t_max) {
  if (shape.kind == Collider::Kind::sphere) {
    const Vec3 oc = origin - shape.center;
    const double a = dir.squaredNorm();
    const double b = oc.dot(dir);
    const double c = oc.squaredNorm() - shape.radius * shape.radius;
    if (c < 0.0) return std::nullopt;
    const double disc = b * b - a * c;
    if (disc < 0.0) return std::nullopt;
    const double t = (-b - std::sqrt(disc)) / a;
    if (t < t_min || t > t_max) return std::nullopt;
    return RayHit{t, (origin + t * dir - shape.center) / shape.radius};
  }
  double t_near = -kInf, t_far = kInf;
  int entry_face = -1;
  for (int f = 0; f < static_cast<int>(shape.normals.size()); ++f) {
    const double denom = shape.normals[f].dot(dir);
    const double dist = shape.normals[f].dot(origin) - shape.offsets[f];
    if (denom == 0.0) {
      if (dist > 0.0) return std::nullopt;
      continue;
    }
    const double t = -dist / denom;
    if (denom < 0.0) {
      if (t > t_near) {
        t_near = t;
        entry_face = f;
      }
    } else {
      t_far = std::min(t_far, t);
    }
    if (t_near > t_far) return std::nullopt;
  }
  if (entry_face < 0 || t_near < t_min || t_near > t_max) return std::nullopt;
  return RayHit{t_near, shape.normals[entry_face]};
}

}  // namespace hullsim::physics
