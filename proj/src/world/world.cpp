#include "hullsim/world/world.hpp"

#include <algorithm>
#include <cstdio>

namespace hullsim {

using physics::BodyKind;
using physics::BodyRef;
using physics::ConvexHull;
using physics::RigidBody;

std::shared_ptr<const ModelGeometry> build_geometry(const Mesh& mesh, ColliderSource source, double scale) {
  auto g = std::make_shared<ModelGeometry>();
  g->mesh = mesh;
  g->mesh.scale(scale);
  switch (source) {
    case ColliderSource::hull:
      g->hulls.push_back(physics::quickhull(g->mesh.vertices));
      break;
    case ColliderSource::parts:
      for (std::size_t p = 0; p < std::max<std::size_t>(g->mesh.parts.size(), 1); ++p) {
        g->hulls.push_back(physics::quickhull(g->mesh.part_points(p)));
      }
      break;
    case ColliderSource::sphere: {
      g->sphere = true;
      g->sphere_center = g->mesh.bounds().center();
      for (const auto& v : g->mesh.vertices) g->radius = std::max(g->radius, (v - g->sphere_center).norm());
      break;
    }
  }
  return g;
}

Pose SceneObject::pose() const {
  Pose p = body.pose;
  p.position = body.pose.position - body.pose.orientation * com_local;
  return p;
}

void SceneObject::set_pose(const Pose& origin_pose) {
  body.pose.orientation = origin_pose.orientation.normalized();
  body.pose.position = origin_pose.position + body.pose.orientation * com_local;
}

const char* to_string(AvatarKind k) {
  switch (k) {
    case AvatarKind::disembodied_camera: return "disembodied_camera";
    case AvatarKind::sphere_embodied: return "sphere_embodied";
    case AvatarKind::capsule_embodied: return "capsule_embodied";
  }
  return "?";
}

AvatarKind avatar_kind_from_string(const std::string& s) {
  if (s == "disembodied_camera" || s == "A_Img_Caps_Kinematic" || s == "A_Img") return AvatarKind::disembodied_camera;
  if (s == "sphere_embodied" || s == "A_Simple_Body") return AvatarKind::sphere_embodied;
  if (s == "capsule_embodied" || s == "A_Img_Caps") return AvatarKind::capsule_embodied;
  throw std::invalid_argument("unknown avatar type '" + s + "'");
}

void CameraIntrinsics::validate() const {
  if (!(vertical_fov > 0.0 && vertical_fov < 180.0)) throw std::invalid_argument("fov must lie in (0, 180)");
  if (width < 1 || height < 1) throw std::invalid_argument("resolution must be positive");
}

World::World(std::shared_ptr<const ModelLibrary> library, WorldConfig config)
    : library_(std::move(library)), solver_(config.solver), gravity_(config.gravity) {
  set_seed(config.seed);
}

void World::set_seed(std::uint64_t seed) {
  seed_ = seed;
  rng_.seed(seed);
}

void World::load_scene(const std::string& name) {
  scene_name_ = name;
  objects_.clear();
  avatars_.clear();
  avatar_by_body_.clear();
  environment_.clear();
  used_colors_.clear();
  last_events_.clear();
  solver_.clear();
}

void World::create_empty_room(double width, double length) {
  if (!(width > 0.0) || !(length > 0.0)) throw std::invalid_argument("room dimensions must be positive");
  constexpr double kThick = 0.1;
  constexpr double kHeight = 3.0;
  const double hx = 0.5 * width, hz = 0.5 * length;
  const std::vector<std::pair<Vec3, Vec3>> boxes = {
      {Vec3(-hx - kThick, -kThick, -hz - kThick), Vec3(hx + kThick, 0.0, hz + kThick)},  // floor
      {Vec3(-hx - kThick, 0.0, -hz - kThick), Vec3(-hx, kHeight, hz + kThick)},
      {Vec3(hx, 0.0, -hz - kThick), Vec3(hx + kThick, kHeight, hz + kThick)},
      {Vec3(-hx, 0.0, -hz - kThick), Vec3(hx, kHeight, -hz)},
      {Vec3(-hx, 0.0, hz), Vec3(hx, kHeight, hz + kThick)},
  };
  for (const auto& wall : environment_) solver_.forget(wall.ref);
  environment_.clear();
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    const Mesh m = make_box(boxes[i].first, boxes[i].second);
    RigidBody b;
    b.ref = {BodyKind::environment, i};
    const Vec3 c = 0.5 * (boxes[i].first + boxes[i].second);
    b.pose.position = c;
    b.colliders.push_back(physics::Collider::from_hull(physics::quickhull(m.vertices).translated(-c)));
    b.set_mass_properties(0.0, Mat3::Zero());
    b.state.static_friction = 0.6;
    b.state.dynamic_friction = 0.5;
    environment_.push_back(std::move(b));
  }
}

std::shared_ptr<const ModelGeometry> World::geometry_for(const ModelRecord& record, double scale,
                                                         const std::string& mesh_override) {
  char key_scale[64];
  std::snprintf(key_scale, sizeof key_scale, "%a", scale);
  const std::string key = record.name + "|" + key_scale + "|" + mesh_override;
  if (auto it = geometry_cache_.find(key); it != geometry_cache_.end()) return it->second;
  const std::filesystem::path path = mesh_override.empty() ? library_->mesh_path(record) : std::filesystem::path(mesh_override);
  auto g = build_geometry(load_obj(path), record.collider, scale);
  geometry_cache_.emplace(key, g);
  return g;
}

Rgb World::allocate_color(std::uint64_t id) {
  std::uint64_t h = mix64(id ^ 0xC0105EEDull);
  for (;;) {
    const Rgb c = {static_cast<std::uint8_t>(h), static_cast<std::uint8_t>(h >> 8), static_cast<std::uint8_t>(h >> 16)};
    if ((c[0] | c[1] | c[2]) != 0 && !used_colors_.contains(c)) {
      used_colors_.insert(c);
      return c;
    }
    h = mix64(h + 1);
  }
}

SceneObject& World::add_object(const ModelRecord& record, const Vec3& position, const Vec3& rotation_deg,
                               double scale_factor, std::uint64_t id, const std::string& mesh_override) {
  if (objects_.contains(id)) throw DuplicateId("object id " + std::to_string(id) + " already in use");
  if (!(scale_factor > 0.0)) throw std::invalid_argument("scale_factor must be > 0");
  SceneObject obj;
  obj.id = id;
  obj.record_name = record.name;
  obj.category = record.wcategory;
  obj.density = record.density;
  obj.audio_material = record.audio_material;
  obj.geometry = geometry_for(record, scale_factor, mesh_override);

  physics::BodyShape shape = obj.geometry->sphere
                                 ? physics::shape_from_sphere(obj.geometry->radius, record.density,
                                                              obj.geometry->sphere_center)
                                 : physics::shape_from_hulls(obj.geometry->hulls, record.density);
  obj.com_local = shape.com;
  obj.body.ref = {BodyKind::object, id};
  obj.body.colliders = std::move(shape.colliders);
  obj.body.set_mass_properties(shape.mass.mass, shape.mass.inertia);
  obj.body.state.static_friction = record.static_friction;
  obj.body.state.dynamic_friction = record.dynamic_friction;
  obj.body.state.bounciness = record.bounciness;
  obj.set_pose({position, quat_from_euler_deg(rotation_deg)});
  obj.segmentation_color = allocate_color(id);
  return objects_.emplace(id, std::move(obj)).first->second;
}

const SceneObject* World::find_object(std::uint64_t id) const {
  auto it = objects_.find(id);
  return it == objects_.end() ? nullptr : &it->second;
}

const SceneObject& World::object(std::uint64_t id) const {
  const SceneObject* o = find_object(id);
  if (!o) throw UnknownObject("no object with id " + std::to_string(id));
  return *o;
}

SceneObject& World::object(std::uint64_t id) { return const_cast<SceneObject&>(std::as_const(*this).object(id)); }

void World::destroy_object(std::uint64_t id) {
  SceneObject& o = object(id);
  used_colors_.erase(o.segmentation_color);
  solver_.forget(o.body.ref);
  objects_.erase(id);
}

void World::teleport_object(std::uint64_t id, const Vec3& position) {
  SceneObject& o = object(id);
  Pose p = o.pose();
  p.position = position;
  o.set_pose(p);
  o.body.sleeping = false;
}

void World::rotate_object(std::uint64_t id, const Vec3& rotation_deg) {
  SceneObject& o = object(id);
  Pose p = o.pose();
  p.orientation = quat_from_euler_deg(rotation_deg);
  o.set_pose(p);
  o.body.sleeping = false;
}

void World::apply_force(std::uint64_t id, const Vec3& impulse, const std::optional<Vec3>& point) {
  physics::apply_impulse(object(id).body, impulse, point);
}

void World::set_mass(std::uint64_t id, double mass) {
  if (!(mass > 0.0) || !std::isfinite(mass)) throw std::invalid_argument("mass must be positive and finite");
  object(id).body.set_mass(mass);
}

void World::set_physic_material(std::uint64_t id, double dynamic_friction, double static_friction,
                                double bounciness) {
  if (!(dynamic_friction >= 0.0) || !(static_friction >= 0.0)) throw std::invalid_argument("friction must be >= 0");
  if (!(bounciness >= 0.0 && bounciness <= 1.0)) throw std::invalid_argument("bounciness must lie in [0, 1]");
  auto& s = object(id).body.state;
  s.dynamic_friction = dynamic_friction;
  s.static_friction = static_friction;
  s.bounciness = bounciness;
}

void World::set_audio_material(std::uint64_t id, AudioMaterial material) { object(id).audio_material = material; }

Avatar& World::create_avatar(AvatarKind kind, const std::string& avatar_id) {
  if (avatar_id.empty()) throw std::invalid_argument("avatar_id must not be empty");
  if (avatars_.contains(avatar_id)) throw DuplicateAvatarId("avatar '" + avatar_id + "' already exists");
  Avatar a;
  a.id = avatar_id;
  a.kind = kind;
  if (kind != AvatarKind::disembodied_camera) {
    physics::BodyShape shape;
    if (kind == AvatarKind::sphere_embodied) {
      shape = physics::shape_from_sphere(0.5, 1000.0);
    } else {
      Mesh caps = make_icosphere(0.3, 2, Vec3(0, 0.4, 0));
      append_part(caps, make_icosphere(0.3, 2, Vec3(0, -0.4, 0)), "bottom");
      const std::vector<ConvexHull> hull = {physics::quickhull(caps.vertices)};
      shape = physics::shape_from_hulls(hull, 1000.0);
    }
    RigidBody b;
    b.ref = {BodyKind::avatar, next_avatar_body_++};
    b.colliders = std::move(shape.colliders);
    b.set_mass_properties(shape.mass.mass, shape.mass.inertia);
    b.pose.position = a.pose.position;
    avatar_by_body_.emplace(b.ref.id, avatar_id);
    a.body = std::move(b);
  }
  return avatars_.emplace(avatar_id, std::move(a)).first->second;
}

const Avatar& World::avatar(const std::string& id) const {
  auto it = avatars_.find(id);
  if (it == avatars_.end()) throw UnknownAvatar("no avatar '" + id + "'");
  return it->second;
}

Avatar& World::avatar(const std::string& id) { return const_cast<Avatar&>(std::as_const(*this).avatar(id)); }

void World::sync_avatar(Avatar& a) {
  if (a.body) a.pose.position = a.body->pose.position;
}

void World::teleport_avatar(const std::string& avatar_id, const Vec3& position) {
  Avatar& a = avatar(avatar_id);
  a.pose.position = position;
  if (a.body) {
    a.body->pose.position = position;
    a.body->sleeping = false;
  }
}

void World::look_at(const std::string& avatar_id, const Vec3& target) {
  Avatar& a = avatar(avatar_id);
  const Vec3 dir = target - a.pose.position;
  if (!(dir.norm() > 1e-9)) throw DegenerateLookAt("look_at target coincides with the avatar position");
  a.pose.orientation = look_rotation(dir.normalized());
}

void World::look_at_object(const std::string& avatar_id, std::uint64_t object_id) {
  look_at(avatar_id, object(object_id).body.world_bounds().center());
}

void World::move_avatar(const std::string& avatar_id, const Vec3& impulse) {
  Avatar& a = avatar(avatar_id);
  if (!a.body) throw NotEmbodied("avatar '" + avatar_id + "' has no body");
  physics::apply_impulse(*a.body, impulse);
}

void World::set_pass_masks(const std::string& avatar_id, const std::vector<std::string>& masks) {
  Avatar& a = avatar(avatar_id);
  std::set<std::string> out;
  for (const auto& m : masks) {
    if (m != "_img" && m != "_id" && m != "_depth") throw std::invalid_argument("unknown pass mask '" + m + "'");
    out.insert(m);
  }
  a.pass_masks = std::move(out);
}

const std::vector<physics::CollisionEvent>& World::step() {
  std::vector<RigidBody*> bodies;
  bodies.reserve(objects_.size() + avatars_.size() + environment_.size());
  for (auto& [id, o] : objects_) bodies.push_back(&o.body);
  std::vector<RigidBody*> avatar_bodies;
  for (auto& [id, a] : avatars_)
    if (a.body) avatar_bodies.push_back(&*a.body);
  std::sort(avatar_bodies.begin(), avatar_bodies.end(), [](auto* l, auto* r) { return l->ref < r->ref; });
  bodies.insert(bodies.end(), avatar_bodies.begin(), avatar_bodies.end());
  for (auto& e : environment_) bodies.push_back(&e);

  ++frame_;
  last_events_ = solver_.step(bodies, gravity_, frame_);
  for (auto& [id, a] : avatars_) sync_avatar(a);
  return last_events_;
}

BodyLabel World::label(const BodyRef& ref) const {
  BodyLabel l;
  l.id = ref.id;
  switch (ref.kind) {
    case BodyKind::object: l.kind = "object"; break;
    case BodyKind::avatar: {
      l.kind = "avatar";
      if (auto it = avatar_by_body_.find(ref.id); it != avatar_by_body_.end()) l.avatar_id = it->second;
      break;
    }
    case BodyKind::environment: l.kind = "environment"; break;
  }
  return l;
}

AudioMaterial World::material_of(const BodyRef& ref) const {
  switch (ref.kind) {
    case BodyKind::object:
      if (const auto* o = find_object(ref.id)) return o->audio_material;
      break;
    case BodyKind::avatar:
      if (auto it = avatar_by_body_.find(ref.id); it != avatar_by_body_.end()) return avatar(it->second).audio_material;
      break;
    case BodyKind::environment: break;
  }
  return AudioMaterial::wood;
}

double World::mass_of(const BodyRef& ref) const {
  switch (ref.kind) {
    case BodyKind::object:
      if (const auto* o = find_object(ref.id)) return o->body.state.mass;
      break;
    case BodyKind::avatar:
      if (auto it = avatar_by_body_.find(ref.id); it != avatar_by_body_.end()) return avatar(it->second).body->state.mass;
      break;
    case BodyKind::environment: break;
  }
  return kInf;
}

Aabb World::bounds_of(const BodyRef& ref) const {
  switch (ref.kind) {
    case BodyKind::object:
      if (const auto* o = find_object(ref.id)) return o->body.world_bounds();
      break;
    case BodyKind::avatar:
      if (auto it = avatar_by_body_.find(ref.id); it != avatar_by_body_.end()) return avatar(it->second).body->world_bounds();
      break;
    case BodyKind::environment:
      if (ref.id < environment_.size()) return environment_[ref.id].world_bounds();
      break;
  }
  return {};
}

}  // namespace hullsim
