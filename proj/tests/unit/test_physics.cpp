#include "hullsim/physics/solver.hpp"
#include "hullsim/world/mesh.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <memory>
#include <random>

using namespace hullsim;
using namespace hullsim::physics;

namespace {

RigidBody make_box_body(std::uint64_t id, const Vec3& half, const Vec3& center, double density = 1000.0) {
  const Mesh box = make_box(-half, half);
  const std::vector<ConvexHull> hulls = {quickhull(box.vertices)};
  BodyShape shape = shape_from_hulls(hulls, density);
  RigidBody b;
  b.ref = {BodyKind::object, id};
  b.pose.position = center;
  b.colliders = shape.colliders;
  b.set_mass_properties(shape.mass.mass, shape.mass.inertia);
  return b;
}

RigidBody make_sphere_body(std::uint64_t id, double radius, const Vec3& center, double density = 1000.0) {
  BodyShape shape = shape_from_sphere(radius, density);
  RigidBody b;
  b.ref = {BodyKind::object, id};
  b.pose.position = center;
  b.colliders = shape.colliders;
  b.set_mass_properties(shape.mass.mass, shape.mass.inertia);
  return b;
}

RigidBody make_floor() {
  RigidBody f = make_box_body(0, Vec3(10, 0.5, 10), Vec3(0, -0.5, 0));
  f.ref = {BodyKind::environment, 0};
  f.set_mass_properties(0.0, Mat3::Zero());
  return f;
}

RigidBody* find(std::vector<RigidBody*>& ptrs, std::uint64_t id) {
  for (auto* b : ptrs)
    if (b->ref == BodyRef{BodyKind::object, id}) return b;
  return nullptr;
}

std::vector<RigidBody*> pointers(std::vector<RigidBody>& bodies) {
  std::sort(bodies.begin(), bodies.end(), [](const auto& l, const auto& r) { return l.ref < r.ref; });
  std::vector<RigidBody*> out;
  for (auto& b : bodies) out.push_back(&b);
  return out;
}

PosedCollider posed(const RigidBody& b, std::size_t i = 0) { return PosedCollider(b.colliders[i], b.pose); }

Quat random_rotation(std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Quat q(g(rng), g(rng), g(rng), g(rng));
  return q.normalized();
}

double angle_deg(const Quat& a, const Quat& b) { return rad_to_deg(a.angularDistance(b)); }

}  // namespace

TEST_CASE("separated and overlapping cubes") {
  const Mesh cube = make_box(Vec3::Constant(-0.5), Vec3::Constant(0.5));
  const Collider c = Collider::from_hull(quickhull(cube.vertices));
  Pose pa, pb;
  pb.position = Vec3(3, 0, 0);
  CHECK_FALSE(detect_contacts(PosedCollider(c, pa), PosedCollider(c, pb)).has_value());

  pb.position = Vec3(0.9, 0, 0);
  const auto m = detect_contacts(PosedCollider(c, pa), PosedCollider(c, pb));
  REQUIRE(m.has_value());
  CHECK(std::abs(std::abs(m->normal.x()) - 1.0) < 1e-12);
  CHECK(m->normal.x() > 0.0);
  CHECK(std::abs(m->depth - 0.1) < 1e-6);
  CHECK(m->points.size() == 4);
  for (const auto& p : m->points) CHECK(p.separation == doctest::Approx(-0.1));
}

TEST_CASE("touching within tolerance still reports contact") {
  const Mesh cube = make_box(Vec3::Constant(-0.5), Vec3::Constant(0.5));
  const Collider c = Collider::from_hull(quickhull(cube.vertices));
  Pose pa, pb;
  pb.position = Vec3(0, 1.00005, 0);
  const auto m = detect_contacts(PosedCollider(c, pa), PosedCollider(c, pb));
  REQUIRE(m.has_value());
  CHECK(m->depth == 0.0);
  pb.position = Vec3(0, 1.0002, 0);
  CHECK_FALSE(detect_contacts(PosedCollider(c, pa), PosedCollider(c, pb)).has_value());
}

TEST_CASE("random convex pairs agree with the brute-force separating axis oracle") {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> u(-1.2, 1.2);
  int skipped = 0, hits = 0;
  const int trials = 10000;
  for (int trial = 0; trial < trials; ++trial) {
    const auto la = oracle::random_cloud(rng, 6 + trial % 5, 0.6);
    const auto lb = oracle::random_cloud(rng, 6 + (trial / 5) % 5, 0.6);
    Pose pa, pb;
    pa.orientation = random_rotation(rng);
    pb.orientation = random_rotation(rng);
    pb.position = Vec3(u(rng), u(rng), u(rng));
    std::vector<Vec3> wa, wb;
    for (const auto& p : la) wa.push_back(pa.apply(p));
    for (const auto& p : lb) wb.push_back(pb.apply(p));
    const double gap = oracle::sat_gap(wa, wb);
    const Collider ca = Collider::from_hull(quickhull(la));
    const Collider cb = Collider::from_hull(quickhull(lb));
    const auto m = detect_contacts(PosedCollider(ca, pa), PosedCollider(cb, pb));
    if (std::abs(gap) < 1e-3) {
      ++skipped;
      continue;
    }
    CHECK(m.has_value() == (gap < 0.0));
    if (m) {
      ++hits;
      CHECK(m->depth >= 0.0);
      CHECK(std::abs(m->normal.norm() - 1.0) < 1e-9);
      CHECK_FALSE(m->points.empty());
      CHECK(m->points.size() <= 4);
      // The oracle scans a superset of the true axes, so its overlap is an
      // upper bound on the depth; the solver's face preference may overshoot
      // the best edge axis by at most its bias.
      CHECK(m->depth <= -gap + 1e-3);
      CHECK(m->depth >= -gap - 1e-9);
    }
  }
  CHECK(skipped < trials / 50);
  CHECK(hits > trials / 10);
}

TEST_CASE("sphere contacts") {
  const Collider s = Collider::sphere(0.5);
  const Mesh cube = make_box(Vec3::Constant(-0.5), Vec3::Constant(0.5));
  const Collider c = Collider::from_hull(quickhull(cube.vertices));
  Pose pa, pb;
  pb.position = Vec3(0.95, 0, 0);
  auto m = detect_contacts(PosedCollider(s, pa), PosedCollider(s, pb));
  REQUIRE(m.has_value());
  CHECK((m->normal - Vec3::UnitX()).norm() < 1e-12);
  CHECK(m->depth == doctest::Approx(0.05));
  pb.position = Vec3(0.3, 0.95, 0.1);
  m = detect_contacts(PosedCollider(c, pa), PosedCollider(s, pb));
  REQUIRE(m.has_value());
  CHECK((m->normal - Vec3::UnitY()).norm() < 1e-12);
  CHECK(m->depth == doctest::Approx(0.05));
  pb.position = Vec3(0.8, 0.8, 0);
  m = detect_contacts(PosedCollider(c, pa), PosedCollider(s, pb));
  REQUIRE(m.has_value());
  CHECK(m->depth == doctest::Approx(0.5 - std::sqrt(0.18)));
  CHECK((m->normal - Vec3(1, 1, 0).normalized()).norm() < 1e-9);
  pb.position = Vec3(1.0, 1.0, 0);
  CHECK_FALSE(detect_contacts(PosedCollider(c, pa), PosedCollider(s, pb)).has_value());
}

TEST_CASE("raycast against hull and sphere") {
  const Mesh cube = make_box(Vec3::Constant(-0.5), Vec3::Constant(0.5));
  const PosedCollider c(Collider::from_hull(quickhull(cube.vertices)), Pose{});
  auto hit = raycast(c, Vec3(0, 0, -5), Vec3(0, 0, 1), 0.0, 100.0);
  REQUIRE(hit.has_value());
  CHECK(hit->t == doctest::Approx(4.5));
  CHECK((hit->normal + Vec3::UnitZ()).norm() < 1e-12);
  CHECK_FALSE(raycast(c, Vec3(0, 0, 0), Vec3(0, 0, 1), 0.0, 100.0).has_value());
  CHECK_FALSE(raycast(c, Vec3(0, 2, -5), Vec3(0, 0, 1), 0.0, 100.0).has_value());
  CHECK_FALSE(raycast(c, Vec3(0, 0, -5), Vec3(0, 0, 1), 0.0, 4.0).has_value());

  Pose p;
  p.position = Vec3(0, 0, 3);
  const PosedCollider s(Collider::sphere(1.0), p);
  hit = raycast(s, Vec3::Zero(), Vec3(0, 0, 1), 0.0, 100.0);
  REQUIRE(hit.has_value());
  CHECK(hit->t == doctest::Approx(2.0));
}

TEST_CASE("free flight advances by dt * v") {
  std::vector<RigidBody> bodies = {make_box_body(1, Vec3::Constant(0.5), Vec3(0, 5, 0))};
  bodies[0].state.linear_velocity = Vec3(1, 0, 0);
  PhysicsSolver solver;
  const Vec3 before = bodies[0].pose.position;
  auto ptrs = pointers(bodies);
  solver.step(ptrs, Vec3::Zero(), 1);
  CHECK(bodies[0].pose.position == before + solver.config().dt * Vec3(1, 0, 0));
}

TEST_CASE("gravity integrates velocity exactly before contact") {
  std::vector<RigidBody> bodies = {make_box_body(1, Vec3::Constant(0.5), Vec3(0, 50, 0))};
  PhysicsSolver solver;
  auto ptrs = pointers(bodies);
  const Vec3 g(0, -9.81, 0);
  for (int n = 1; n <= 100; ++n) {
    CHECK(solver.step(ptrs, g, n).empty());
    CHECK(std::abs(bodies[0].state.linear_velocity.y() - (-9.81 * n * solver.config().dt)) < 1e-9);
  }
}

TEST_CASE("equal elastic spheres exchange velocities") {
  std::vector<RigidBody> bodies = {make_sphere_body(1, 0.5, Vec3(-1, 0, 0)), make_sphere_body(2, 0.5, Vec3(1, 0, 0))};
  for (auto& b : bodies) {
    b.state.bounciness = 1.0;
    b.state.static_friction = 0.0;
    b.state.dynamic_friction = 0.0;
  }
  bodies[0].state.linear_velocity = Vec3(1, 0, 0);
  bodies[1].state.linear_velocity = Vec3(-1, 0, 0);
  PhysicsSolver solver;
  auto ptrs = pointers(bodies);
  bool entered = false;
  for (int n = 1; n <= 200; ++n) {
    for (const auto& ev : solver.step(ptrs, Vec3::Zero(), n)) {
      if (ev.state == ContactState::enter) {
        entered = true;
        CHECK(ev.relative_normal_speed == doctest::Approx(2.0));
        CHECK(ev.impulse > 0.0);
      }
    }
  }
  CHECK(entered);
  CHECK((bodies[0].state.linear_velocity - Vec3(-1, 0, 0)).norm() < 1e-6);
  CHECK((bodies[1].state.linear_velocity - Vec3(1, 0, 0)).norm() < 1e-6);
}

TEST_CASE("contact events go enter, stay, exit") {
  std::vector<RigidBody> bodies = {make_sphere_body(1, 0.5, Vec3(-0.6, 0, 0)), make_sphere_body(2, 0.5, Vec3(0.6, 0, 0))};
  bodies[0].state.linear_velocity = Vec3(0.3, 0, 0);
  bodies[1].state.linear_velocity = Vec3(-0.3, 0, 0);
  for (auto& b : bodies) b.state.bounciness = 0.0;
  PhysicsSolver solver;
  auto ptrs = pointers(bodies);
  std::vector<ContactState> seen;
  for (int n = 1; n <= 60; ++n) {
    if (n == 40) {
      bodies[0].state.linear_velocity = Vec3(-1, 0, 0);
      bodies[1].state.linear_velocity = Vec3(1, 0, 0);
    }
    for (const auto& ev : solver.step(ptrs, Vec3::Zero(), n)) {
      if (seen.empty() || seen.back() != ev.state) seen.push_back(ev.state);
    }
  }
  CHECK(seen == std::vector<ContactState>{ContactState::enter, ContactState::stay, ContactState::exit});
}

TEST_CASE("frictionless soup conserves momentum and never gains energy") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int scene = 0; scene < 10; ++scene) {
    std::vector<RigidBody> bodies;
    for (int i = 0; i < 5; ++i) {
      const Vec3 pos(1.6 * i - 3.2, 0.3 * u(rng), 0.3 * u(rng));
      RigidBody b = (i % 2) ? make_sphere_body(i + 1, 0.3 + 0.2 * std::abs(u(rng)), pos)
                            : make_box_body(i + 1, Vec3(0.3, 0.35, 0.4) + 0.1 * Vec3(u(rng), u(rng), u(rng)), pos);
      b.pose.orientation = random_rotation(rng);
      b.state.linear_velocity = Vec3(-pos.x() + 0.2 * u(rng), 0.1 * u(rng), 0.1 * u(rng));
      b.state.angular_velocity = Vec3(u(rng), u(rng), u(rng));
      b.state.static_friction = b.state.dynamic_friction = 0.0;
      b.state.bounciness = std::abs(u(rng));
      bodies.push_back(std::move(b));
    }
    auto momentum = [&] {
      Vec3 p = Vec3::Zero();
      for (const auto& b : bodies) p += b.state.mass * b.state.linear_velocity;
      return p;
    };
    auto energy = [&] {
      double e = 0.0;
      for (const auto& b : bodies) e += b.kinetic_energy();
      return e;
    };
    double scale = 0.0;
    for (const auto& b : bodies) scale += b.state.mass * b.state.linear_velocity.norm();
    const Vec3 p0 = momentum();
    PhysicsSolver solver;
    auto ptrs = pointers(bodies);
    int contacts = 0;
    for (int n = 1; n <= 500; ++n) {
      const double before = energy();
      const auto events = solver.step(ptrs, Vec3::Zero(), n);
      const double after = energy();
      bool touching = false;
      for (const auto& ev : events) touching = touching || ev.state != ContactState::exit;
      if (touching) {
        ++contacts;
        CHECK(after <= before * (1.0 + 1e-3));
      }
    }
    CAPTURE(scene);
    CHECK(contacts > 0);
    CHECK((momentum() - p0).norm() <= 1e-6 * scale);
  }
}

TEST_CASE("impulses") {
  RigidBody b = make_box_body(1, Vec3::Constant(0.5), Vec3::Zero(), 1.0);
  REQUIRE(b.state.mass == doctest::Approx(1.0));
  apply_impulse(b, Vec3(2, 0, 0));
  CHECK((b.state.linear_velocity - Vec3(2, 0, 0)).norm() < 1e-12);
  CHECK(b.state.angular_velocity.norm() == 0.0);

  b.state.linear_velocity.setZero();
  apply_impulse(b, Vec3(0, 3, 0), Vec3(0, -2, 0));
  CHECK(b.state.angular_velocity.norm() == 0.0);

  // Off-center hit on a 1 kg unit cube: I = diag(1/6), arm x J computed by hand.
  b.state.linear_velocity.setZero();
  b.state.angular_velocity.setZero();
  apply_impulse(b, Vec3(0, 0, 1), Vec3(0.5, 0.25, 0));
  const Vec3 torque(0.25 * 1 - 0 * 0, 0 * 0 - 0.5 * 1, 0.5 * 0 - 0.25 * 0);
  CHECK((b.state.angular_velocity - 6.0 * torque).norm() < 1e-10);

  RigidBody floor = make_floor();
  CHECK_THROWS_AS(apply_impulse(floor, Vec3(1, 0, 0)), StaticBody);
}

TEST_CASE("resting stacks stay within twice the slop") {
  for (int count : {1, 3, 5, 7}) {
    std::vector<RigidBody> bodies = {make_floor()};
    for (int i = 0; i < count; ++i) bodies.push_back(make_box_body(i + 1, Vec3::Constant(0.25), Vec3(0, 0.25 + 0.5 * i, 0)));
    PhysicsSolver solver;
    auto ptrs = pointers(bodies);
    for (int n = 1; n <= 500; ++n) solver.step(ptrs, Vec3(0, -9.81, 0), n);
    double worst = 0.0;
    for (std::size_t i = 0; i + 1 < ptrs.size(); ++i)
      for (std::size_t j = i + 1; j < ptrs.size(); ++j) {
        if (auto m = detect_contacts(posed(*ptrs[i]), posed(*ptrs[j]))) worst = std::max(worst, m->depth);
      }
    CAPTURE(count);
    CHECK(worst <= 2.0 * solver.config().slop);
    CHECK(std::abs(find(ptrs, count)->pose.position.y() - (0.25 + 0.5 * (count - 1))) < 0.01 * count);
  }
}

TEST_CASE("aligned stack stands and offset stack topples") {
  for (double offset : {0.0, 0.6}) {
    std::vector<RigidBody> bodies = {make_floor()};
    for (int i = 0; i < 3; ++i) bodies.push_back(make_box_body(i + 1, Vec3::Constant(0.5), Vec3(offset * i, 0.5 + i, 0)));
    PhysicsSolver solver;
    auto ptrs = pointers(bodies);
    double worst = 0.0;
    for (int n = 1; n <= 1000; ++n) {
      solver.step(ptrs, Vec3(0, -9.81, 0), n);
      for (std::size_t i = 0; i + 1 < ptrs.size(); ++i) worst = std::max(worst, angle_deg(ptrs[i]->pose.orientation, Quat::Identity()));
    }
    CAPTURE(offset);
    if (offset == 0.0) {
      CHECK(worst < 5.0);
      CHECK(find(ptrs, 3)->pose.position.y() == doctest::Approx(2.5).epsilon(0.01));
    } else {
      CHECK(worst > 30.0);
      CHECK(find(ptrs, 3)->pose.position.y() < 1.5);
    }
  }
}

TEST_CASE("stepping is bit-reproducible") {
  auto run = [] {
    std::vector<RigidBody> bodies = {make_floor()};
    for (int i = 0; i < 4; ++i) {
      RigidBody b = make_box_body(i + 1, Vec3(0.2, 0.15, 0.25), Vec3(0.05 * i, 0.4 + 0.5 * i, 0.03 * i));
      b.pose.orientation = quat_from_euler_deg(Vec3(5.0 * i, 17.0 * i, 3.0));
      bodies.push_back(std::move(b));
    }
    PhysicsSolver solver;
    auto ptrs = pointers(bodies);
    for (int n = 1; n <= 300; ++n) solver.step(ptrs, Vec3(0, -9.81, 0), n);
    std::vector<double> state;
    for (const auto* b : ptrs) {
      for (int k = 0; k < 3; ++k) state.push_back(b->pose.position[k]);
      for (int k = 0; k < 4; ++k) state.push_back(b->pose.orientation.coeffs()[k]);
    }
    return state;
  };
  CHECK(run() == run());
}

TEST_CASE("non-finite state raises SimulationDiverged") {
  std::vector<RigidBody> bodies = {make_box_body(1, Vec3::Constant(0.5), Vec3::Zero())};
  bodies[0].state.linear_velocity = Vec3(std::nan(""), 0, 0);
  PhysicsSolver solver;
  auto ptrs = pointers(bodies);
  CHECK_THROWS_AS(solver.step(ptrs, Vec3::Zero(), 1), SimulationDiverged);
}

TEST_CASE("combine rules") {
  CHECK(combine_restitution(0.2, 0.7) == 0.7);
  CHECK(combine_friction(0.25, 1.0) == doctest::Approx(0.5));
}
