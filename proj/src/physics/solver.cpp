#include "hullsim/physics/solver.hpp"

#include <algorithm>
#include <numeric>

namespace hullsim::physics {

using nlohmann::json;

SolverConfig SolverConfig::from_json(const json& j) {
  SolverConfig c;
  c.dt = j.value("dt", c.dt);
  c.velocity_iterations = j.value("velocity_iterations", c.velocity_iterations);
  c.position_iterations = j.value("position_iterations", c.position_iterations);
  c.baumgarte = j.value("baumgarte", c.baumgarte);
  c.slop = j.value("slop", c.slop);
  c.max_correction = j.value("max_correction", c.max_correction);
  c.contact_tolerance = j.value("contact_tolerance", c.contact_tolerance);
  c.restitution_threshold = j.value("restitution_threshold", c.restitution_threshold);
  c.warm_start_distance = j.value("warm_start_distance", c.warm_start_distance);
  c.warm_starting = j.value("warm_starting", c.warm_starting);
  c.allow_sleeping = j.value("allow_sleeping", c.allow_sleeping);
  c.sleep_speed = j.value("sleep_speed", c.sleep_speed);
  c.sleep_delay = j.value("sleep_delay", c.sleep_delay);
  return c;
}

json SolverConfig::to_json() const {
  return {{"dt", dt},
          {"velocity_iterations", velocity_iterations},
          {"position_iterations", position_iterations},
          {"baumgarte", baumgarte},
          {"slop", slop},
          {"max_correction", max_correction},
          {"contact_tolerance", contact_tolerance},
          {"restitution_threshold", restitution_threshold},
          {"warm_start_distance", warm_start_distance},
          {"warm_starting", warm_starting},
          {"allow_sleeping", allow_sleeping},
          {"sleep_speed", sleep_speed},
          {"sleep_delay", sleep_delay}};
}

const char* to_string(ContactState s) {
  switch (s) {
    case ContactState::enter: return "enter";
    case ContactState::stay: return "stay";
    case ContactState::exit: return "exit";
  }
  return "?";
}

double combine_restitution(double a, double b) { return std::max(a, b); }
double combine_friction(double a, double b) { return std::sqrt(std::max(a, 0.0) * std::max(b, 0.0)); }

namespace {

struct Constraint {
  int ia = 0;
  int ib = 0;
  Vec3 normal;
  Vec3 tangent[2];
  Vec3 ra, rb;
  Vec3 local_a, local_b;
  double normal_mass = 0.0;
  double tangent_mass[2] = {0.0, 0.0};
  double normal_impulse = 0.0;
  double tangent_impulse[2] = {0.0, 0.0};
  double bias = 0.0;
  double restitution = 0.0;  // nonzero only for contacts that bounce this step
  double restitution_impulse = 0.0;
  double friction = 0.0;
  double separation = 0.0;
  double approach_speed = 0.0;
};

struct PairContacts {
  int ia = 0;
  int ib = 0;
  std::size_t first = 0;
  std::size_t count = 0;
};

struct Motion {
  double inv_mass = 0.0;
  Mat3 inv_inertia = Mat3::Zero();
  bool moving = false;  // dynamic and awake
};

Quat integrate_rotation(const Quat& q, const Vec3& theta) {
  const Quat dq(0.0, theta.x(), theta.y(), theta.z());
  Quat out = q;
  out.coeffs() += 0.5 * (dq * q).coeffs();
  return out.normalized();
}

double effective_mass(const Motion& A, const Motion& B, const Vec3& ra, const Vec3& rb, const Vec3& dir) {
  const Vec3 rna = ra.cross(dir), rnb = rb.cross(dir);
  const double k = A.inv_mass + B.inv_mass + rna.dot(A.inv_inertia * rna) + rnb.dot(B.inv_inertia * rnb);
  return k > 0.0 ? 1.0 / k : 0.0;
}

void apply(RigidBody& a, RigidBody& b, const Motion& ma, const Motion& mb, const Vec3& ra, const Vec3& rb,
           const Vec3& P) {
  a.state.linear_velocity -= ma.inv_mass * P;
  a.state.angular_velocity -= ma.inv_inertia * ra.cross(P);
  b.state.linear_velocity += mb.inv_mass * P;
  b.state.angular_velocity += mb.inv_inertia * rb.cross(P);
}

Vec3 relative_velocity(const RigidBody& a, const RigidBody& b, const Vec3& ra, const Vec3& rb) {
  return b.state.linear_velocity + b.state.angular_velocity.cross(rb) - a.state.linear_velocity -
         a.state.angular_velocity.cross(ra);
}

bool finite(const RigidBody& b) {
  return b.pose.position.allFinite() && b.pose.orientation.coeffs().allFinite() &&
         b.state.linear_velocity.allFinite() && b.state.angular_velocity.allFinite();
}

}  // namespace

void PhysicsSolver::forget(const BodyRef& ref) {
  std::erase_if(cache_, [&](const auto& kv) { return kv.first.first == ref || kv.first.second == ref; });
}

std::vector<CollisionEvent> PhysicsSolver::step(std::span<RigidBody* const> bodies, const Vec3& gravity,
                                                std::uint64_t frame) {
  const double dt = config_.dt;
  const int n = static_cast<int>(bodies.size());

  std::vector<Motion> motion(n);
  for (int i = 0; i < n; ++i) {
    RigidBody& b = *bodies[i];
    motion[i].moving = !b.state.is_static() && !b.sleeping;
    if (motion[i].moving) {
      b.state.linear_velocity += gravity * dt;
      motion[i].inv_mass = b.state.inv_mass;
      motion[i].inv_inertia = b.world_inv_inertia();
    }
  }

  std::vector<Vec3> pre_linear(n), pre_angular(n);
  for (int i = 0; i < n; ++i) {
    pre_linear[i] = bodies[i]->state.linear_velocity;
    pre_angular[i] = bodies[i]->state.angular_velocity;
  }

  // Posed colliders and broadphase bounds.
  std::vector<std::vector<PosedCollider>> posed(n);
  std::vector<Aabb> bounds(n);
  for (int i = 0; i < n; ++i) {
    posed[i].reserve(bodies[i]->colliders.size());
    for (const auto& c : bodies[i]->colliders) {
      posed[i].emplace_back(c, bodies[i]->pose);
      bounds[i].extend(posed[i].back().bounds);
    }
    bounds[i] = bounds[i].inflated(config_.contact_tolerance);
  }

  // Sweep and prune on x.
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int l, int r) { return bounds[l].min.x() < bounds[r].min.x(); });
  std::vector<std::pair<int, int>> candidates;
  std::vector<int> active;
  for (int i : order) {
    std::erase_if(active, [&](int j) { return bounds[j].max.x() < bounds[i].min.x(); });
    for (int j : active) {
      if (!motion[i].moving && !motion[j].moving) continue;
      if (!bounds[i].overlaps(bounds[j])) continue;
      candidates.emplace_back(std::min(i, j), std::max(i, j));
    }
    active.push_back(i);
  }
  std::sort(candidates.begin(), candidates.end());

  // Narrowphase.
  std::vector<Constraint> constraints;
  std::vector<PairContacts> pairs;
  for (const auto& [ia, ib] : candidates) {
    PairContacts pc{ia, ib, constraints.size(), 0};
    for (const auto& ca : posed[ia]) {
      for (const auto& cb : posed[ib]) {
        auto m = detect_contacts(ca, cb, config_.contact_tolerance);
        if (!m) continue;
        for (const auto& p : m->points) {
          Constraint c;
          c.ia = ia;
          c.ib = ib;
          c.normal = m->normal;
          c.separation = p.separation;
          c.local_a = bodies[ia]->pose.inverse_apply(p.point_a);
          c.local_b = bodies[ib]->pose.inverse_apply(p.point_b);
          const Vec3 mid = 0.5 * (p.point_a + p.point_b);
          c.ra = mid - bodies[ia]->pose.position;
          c.rb = mid - bodies[ib]->pose.position;
          constraints.push_back(c);
        }
      }
    }
    pc.count = constraints.size() - pc.first;
    if (pc.count > 0) pairs.push_back(pc);
  }

  // Contacts with an awake mover wake sleeping bodies.
  if (config_.allow_sleeping) {
    for (const auto& pc : pairs) {
      for (auto [i, j] : {std::pair{pc.ia, pc.ib}, std::pair{pc.ib, pc.ia}}) {
        RigidBody& sleeper = *bodies[i];
        const RigidBody& other = *bodies[j];
        if (!sleeper.sleeping || !motion[j].moving) continue;
        if (other.state.linear_velocity.norm() > config_.sleep_speed ||
            other.state.angular_velocity.norm() > config_.sleep_speed) {
          sleeper.sleeping = false;
          sleeper.sleep_steps = 0;
        }
      }
    }
  }

  // Pre-solve: effective masses, restitution bias, warm start.
  for (auto& pc : pairs) {
    RigidBody& A = *bodies[pc.ia];
    RigidBody& B = *bodies[pc.ib];
    const double restitution = combine_restitution(A.state.bounciness, B.state.bounciness);
    const double mu_static = combine_friction(A.state.static_friction, B.state.static_friction);
    const double mu_dynamic = combine_friction(A.state.dynamic_friction, B.state.dynamic_friction);
    const auto cached = cache_.find({A.ref, B.ref});
    std::vector<char> used(cached == cache_.end() ? 0 : cached->second.points.size(), 0);

    for (std::size_t k = pc.first; k < pc.first + pc.count; ++k) {
      Constraint& c = constraints[k];
      const Motion& ma = motion[pc.ia];
      const Motion& mb = motion[pc.ib];
      tangent_basis(c.normal, c.tangent[0], c.tangent[1]);
      c.normal_mass = effective_mass(ma, mb, c.ra, c.rb, c.normal);
      c.tangent_mass[0] = effective_mass(ma, mb, c.ra, c.rb, c.tangent[0]);
      c.tangent_mass[1] = effective_mass(ma, mb, c.ra, c.rb, c.tangent[1]);

      const Vec3 dv = relative_velocity(A, B, c.ra, c.rb);
      const double vn = dv.dot(c.normal);
      c.approach_speed = std::max(0.0, -vn);
      const double slide = (dv - vn * c.normal).norm();
      c.friction = slide < 0.01 ? mu_static : mu_dynamic;
      const bool bouncing = -vn > config_.restitution_threshold && restitution > 0.0;
      if (bouncing) c.restitution = restitution;
      if (c.separation > 0.0) c.bias = -c.separation / dt;

      // Reapplying last step's impulse to a fresh bounce injects energy.
      if (config_.warm_starting && !bouncing && cached != cache_.end()) {
        const auto& old = cached->second.points;
        double best = config_.warm_start_distance * config_.warm_start_distance;
        int match = -1;
        for (std::size_t m = 0; m < old.size(); ++m) {
          if (used[m]) continue;
          const double d2 = (old[m].local_a - c.local_a).squaredNorm();
          if (d2 < best) {
            best = d2;
            match = static_cast<int>(m);
          }
        }
        if (match >= 0) {
          used[match] = 1;
          c.normal_impulse = old[match].normal_impulse;
          c.tangent_impulse[0] = old[match].tangent_impulse[0];
          c.tangent_impulse[1] = old[match].tangent_impulse[1];
          const Vec3 P = c.normal_impulse * c.normal + c.tangent_impulse[0] * c.tangent[0] +
                         c.tangent_impulse[1] * c.tangent[1];
          apply(A, B, ma, mb, c.ra, c.rb, P);
        }
      }
    }
  }

  // Velocity iterations: friction first, then the non-penetration row.
  for (int it = 0; it < config_.velocity_iterations; ++it) {
    for (const auto& pc : pairs) {
      RigidBody& A = *bodies[pc.ia];
      RigidBody& B = *bodies[pc.ib];
      const Motion& ma = motion[pc.ia];
      const Motion& mb = motion[pc.ib];
      for (std::size_t k = pc.first; k < pc.first + pc.count; ++k) {
        Constraint& c = constraints[k];
        const double limit = c.friction * c.normal_impulse;
        for (int t = 0; t < 2; ++t) {
          const double vt = relative_velocity(A, B, c.ra, c.rb).dot(c.tangent[t]);
          const double old = c.tangent_impulse[t];
          c.tangent_impulse[t] = std::clamp(old - c.tangent_mass[t] * vt, -limit, limit);
          apply(A, B, ma, mb, c.ra, c.rb, (c.tangent_impulse[t] - old) * c.tangent[t]);
        }
      }
      for (std::size_t k = pc.first; k < pc.first + pc.count; ++k) {
        Constraint& c = constraints[k];
        const double vn = relative_velocity(A, B, c.ra, c.rb).dot(c.normal);
        const double old = c.normal_impulse;
        c.normal_impulse = std::max(0.0, old - c.normal_mass * (vn - c.bias));
        apply(A, B, ma, mb, c.ra, c.rb, (c.normal_impulse - old) * c.normal);
      }
    }
  }

  // Restitution as a separate impulse, e times the compression impulse of
  // each bouncing contact. When contacts with different e share an island
  // this open-loop impulse can still add energy, so each island's share is
  // scaled back until its kinetic energy does not exceed the pre-solve value.
  {
    std::vector<Vec3> dv(n, Vec3::Zero()), dw(n, Vec3::Zero());
    bool any = false;
    for (const auto& pc : pairs) {
      for (std::size_t k = pc.first; k < pc.first + pc.count; ++k) {
        Constraint& c = constraints[k];
        if (c.restitution == 0.0 || c.normal_impulse == 0.0) continue;
        c.restitution_impulse = c.restitution * c.normal_impulse;
        const Vec3 P = c.restitution_impulse * c.normal;
        const Motion& ma = motion[pc.ia];
        const Motion& mb = motion[pc.ib];
        dv[pc.ia] -= ma.inv_mass * P;
        dw[pc.ia] -= ma.inv_inertia * c.ra.cross(P);
        dv[pc.ib] += mb.inv_mass * P;
        dw[pc.ib] += mb.inv_inertia * c.rb.cross(P);
        any = true;
      }
    }
    if (any) {
      std::vector<int> parent(n);
      std::iota(parent.begin(), parent.end(), 0);
      auto root = [&](int i) {
        while (parent[i] != i) i = parent[i] = parent[parent[i]];
        return i;
      };
      for (const auto& pc : pairs) {
        if (motion[pc.ia].moving && motion[pc.ib].moving) parent[root(pc.ia)] = root(pc.ib);
      }
      std::vector<double> e0(n, 0.0), e1(n, 0.0), g(n, 0.0), h(n, 0.0);
      for (int i = 0; i < n; ++i) {
        if (!motion[i].moving) continue;
        const RigidBody& b = *bodies[i];
        const Mat3 R = b.pose.orientation.toRotationMatrix();
        const Mat3 I = R * b.state.inertia * R.transpose();
        const int r = root(i);
        const Vec3& v = b.state.linear_velocity;
        const Vec3& w = b.state.angular_velocity;
        e0[r] += 0.5 * b.state.mass * pre_linear[i].squaredNorm() + 0.5 * pre_angular[i].dot(I * pre_angular[i]);
        e1[r] += 0.5 * b.state.mass * v.squaredNorm() + 0.5 * w.dot(I * w);
        g[r] += b.state.mass * v.dot(dv[i]) + w.dot(I * dw[i]);
        h[r] += b.state.mass * dv[i].squaredNorm() + dw[i].dot(I * dw[i]);
      }
      std::vector<double> scale(n, 1.0);
      for (int r = 0; r < n; ++r) {
        if (h[r] <= 0.0) continue;
        const double full = e1[r] + g[r] + 0.5 * h[r];
        if (full <= e0[r] * (1.0 + 1e-12)) continue;
        // Largest s in [0, 1] with e1 + g s + h s^2 / 2 <= e0.
        const double disc = g[r] * g[r] - 2.0 * h[r] * (e1[r] - e0[r]);
        scale[r] = disc < 0.0 ? 0.0 : std::clamp((-g[r] + std::sqrt(disc)) / h[r], 0.0, 1.0);
      }
      for (int i = 0; i < n; ++i) {
        if (!motion[i].moving) continue;
        const double si = scale[root(i)];
        bodies[i]->state.linear_velocity += si * dv[i];
        bodies[i]->state.angular_velocity += si * dw[i];
      }
      for (auto& c : constraints) {
        if (c.restitution_impulse != 0.0) c.restitution_impulse *= scale[root(motion[c.ia].moving ? c.ia : c.ib)];
      }
    }
  }

  // Integrate positions.
  for (int i = 0; i < n; ++i) {
    if (!motion[i].moving) continue;
    RigidBody& b = *bodies[i];
    b.pose.position += b.state.linear_velocity * dt;
    b.pose.orientation = integrate_rotation(b.pose.orientation, b.state.angular_velocity * dt);
  }

  // Position iterations (non-linear Gauss-Seidel on positions only).
  for (int it = 0; it < config_.position_iterations; ++it) {
    for (const auto& pc : pairs) {
      RigidBody& A = *bodies[pc.ia];
      RigidBody& B = *bodies[pc.ib];
      Motion ma = motion[pc.ia];
      Motion mb = motion[pc.ib];
      if (ma.moving) ma.inv_inertia = A.world_inv_inertia();
      if (mb.moving) mb.inv_inertia = B.world_inv_inertia();
      for (std::size_t k = pc.first; k < pc.first + pc.count; ++k) {
        const Constraint& c = constraints[k];
        const Vec3 pa = A.pose.apply(c.local_a);
        const Vec3 pb = B.pose.apply(c.local_b);
        const double sep = c.normal.dot(pb - pa);
        const double C = std::clamp(config_.baumgarte * (sep + config_.slop), -config_.max_correction, 0.0);
        if (C == 0.0) continue;
        const Vec3 mid = 0.5 * (pa + pb);
        const Vec3 ra = mid - A.pose.position;
        const Vec3 rb = mid - B.pose.position;
        const double k_eff = effective_mass(ma, mb, ra, rb, c.normal);
        const Vec3 P = (-C * k_eff) * c.normal;
        if (ma.moving) {
          A.pose.position -= ma.inv_mass * P;
          A.pose.orientation = integrate_rotation(A.pose.orientation, -(ma.inv_inertia * ra.cross(P)));
        }
        if (mb.moving) {
          B.pose.position += mb.inv_mass * P;
          B.pose.orientation = integrate_rotation(B.pose.orientation, mb.inv_inertia * rb.cross(P));
        }
      }
    }
  }

  // Events and cache.
  std::vector<CollisionEvent> events;
  std::map<std::pair<BodyRef, BodyRef>, CachedPair> next_cache;
  for (const auto& pc : pairs) {
    const RigidBody& A = *bodies[pc.ia];
    const RigidBody& B = *bodies[pc.ib];
    CollisionEvent ev;
    ev.a = A.ref;
    ev.b = B.ref;
    ev.frame = frame;
    ev.state = cache_.contains({A.ref, B.ref}) ? ContactState::stay : ContactState::enter;
    CachedPair entry;
    Vec3 point_sum = Vec3::Zero();
    double deepest = kInf;
    for (std::size_t k = pc.first; k < pc.first + pc.count; ++k) {
      const Constraint& c = constraints[k];
      ev.impulse += c.normal_impulse + c.restitution_impulse;
      ev.relative_normal_speed = std::max(ev.relative_normal_speed, c.approach_speed);
      point_sum += 0.5 * (A.pose.apply(c.local_a) + B.pose.apply(c.local_b));
      if (c.separation < deepest) {
        deepest = c.separation;
        ev.normal = c.normal;
      }
      entry.points.push_back({c.local_a, c.normal_impulse, {c.tangent_impulse[0], c.tangent_impulse[1]}});
    }
    ev.point = point_sum / static_cast<double>(pc.count);
    entry.point = ev.point;
    entry.normal = ev.normal;
    events.push_back(ev);
    next_cache.emplace(std::pair{A.ref, B.ref}, std::move(entry));
  }
  for (const auto& [key, old] : cache_) {
    if (next_cache.contains(key)) continue;
    CollisionEvent ev;
    ev.a = key.first;
    ev.b = key.second;
    ev.point = old.point;
    ev.normal = old.normal;
    ev.frame = frame;
    ev.state = ContactState::exit;
    events.push_back(ev);
  }
  cache_ = std::move(next_cache);

  for (int i = 0; i < n; ++i) {
    RigidBody& b = *bodies[i];
    if (!finite(b)) {
      throw SimulationDiverged("non-finite state for body " + std::to_string(b.ref.id) + " at frame " +
                               std::to_string(frame));
    }
    if (!config_.allow_sleeping || !motion[i].moving) continue;
    if (b.state.linear_velocity.norm() < config_.sleep_speed && b.state.angular_velocity.norm() < config_.sleep_speed) {
      if (++b.sleep_steps >= config_.sleep_delay) {
        b.sleeping = true;
        b.state.linear_velocity.setZero();
        b.state.angular_velocity.setZero();
      }
    } else {
      b.sleep_steps = 0;
    }
  }
  return events;
}

}  // namespace hullsim::physics
