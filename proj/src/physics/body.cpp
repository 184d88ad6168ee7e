#include "hullsim/physics/body.hpp"

namespace hullsim::physics {

void RigidBody::set_mass_properties(double mass, const Mat3& inertia) {
  if (!(mass > 0.0) || !std::isfinite(mass)) {
    state.mass = kInf;
    state.inv_mass = 0.0;
    state.inertia = Mat3::Zero();
    state.inv_inertia = Mat3::Zero();
    return;
  }
  state.mass = mass;
  state.inv_mass = 1.0 / mass;
  state.inertia = inertia;
  state.inv_inertia = inertia.inverse();
}

void RigidBody::set_mass(double mass) {
  if (state.is_static() || !(mass > 0.0)) {
    set_mass_properties(mass, state.inertia);
    return;
  }
  set_mass_properties(mass, state.inertia * (mass / state.mass));
}

Mat3 RigidBody::world_inv_inertia() const {
  const Mat3 R = pose.orientation.toRotationMatrix();
  return R * state.inv_inertia * R.transpose();
}

Aabb RigidBody::world_bounds() const {
  Aabb box;
  for (const auto& c : colliders) box.extend(PosedCollider(c, pose).bounds);
  return box;
}

double RigidBody::kinetic_energy() const {
  if (state.is_static()) return 0.0;
  const Mat3 R = pose.orientation.toRotationMatrix();
  const Vec3 w_body = R.transpose() * state.angular_velocity;
  return 0.5 * state.mass * state.linear_velocity.squaredNorm() + 0.5 * w_body.dot(state.inertia * w_body);
}

BodyShape shape_from_hulls(std::span<const ConvexHull> hulls, double density) {
  BodyShape shape;
  std::vector<MassProperties> parts;
  for (const auto& h : hulls) parts.push_back(mass_properties(h, density));
  shape.mass = combine(parts);
  shape.com = shape.mass.centroid;
  for (const auto& h : hulls) shape.colliders.push_back(Collider::from_hull(h.translated(-shape.com)));
  shape.mass.centroid = Vec3::Zero();
  return shape;
}

BodyShape shape_from_sphere(double radius, double density, const Vec3& center) {
  BodyShape shape;
  const double mass = density * 4.0 / 3.0 * kPi * radius * radius * radius;
  shape.mass.mass = mass;
  shape.mass.inertia = Mat3::Identity() * (0.4 * mass * radius * radius);
  shape.com = center;
  shape.colliders.push_back(Collider::sphere(radius));
  return shape;
}

void apply_impulse(RigidBody& body, const Vec3& impulse, const std::optional<Vec3>& point) {
  if (body.state.is_static()) throw StaticBody("cannot apply an impulse to a static body");
  body.state.linear_velocity += impulse * body.state.inv_mass;
  if (point) {
    const Vec3 arm = *point - body.pose.position;
    body.state.angular_velocity += body.world_inv_inertia() * arm.cross(impulse);
  }
  body.sleeping = false;
  body.sleep_steps = 0;
}

}  // namespace hullsim::physics
