#pragma once

#include "hullsim/core/rng.hpp"
#include "hullsim/physics/solver.hpp"
#include "hullsim/world/library.hpp"
#include "hullsim/world/mesh.hpp"

#include <array>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace hullsim {

struct WorldError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DuplicateId : WorldError {
  using WorldError::WorldError;
};
struct UnknownObject : WorldError {
  using WorldError::WorldError;
};
struct DuplicateAvatarId : WorldError {
  using WorldError::WorldError;
};
struct UnknownAvatar : WorldError {
  using WorldError::WorldError;
};
struct DegenerateLookAt : WorldError {
  using WorldError::WorldError;
};
struct NotEmbodied : WorldError {
  using WorldError::WorldError;
};

using Rgb = std::array<std::uint8_t, 3>;

// Scaled mesh plus the hulls derived from it, shared between instances.
struct ModelGeometry {
  Mesh mesh;
  std::vector<physics::ConvexHull> hulls;  // model frame
  bool sphere = false;
  double radius = 0.0;
  Vec3 sphere_center = Vec3::Zero();
};

std::shared_ptr<const ModelGeometry> build_geometry(const Mesh& mesh, ColliderSource source, double scale);

struct SceneObject {
  std::uint64_t id = 0;
  std::string record_name;
  std::string category;
  physics::RigidBody body;  // pose.position is the center of mass
  Vec3 com_local = Vec3::Zero();  // center of mass in the model frame
  double density = 0.0;
  AudioMaterial audio_material = AudioMaterial::wood;
  Rgb segmentation_color{};
  std::shared_ptr<const ModelGeometry> geometry;

  // Model-origin pose as seen on the wire.
  Pose pose() const;
  void set_pose(const Pose& origin_pose);
};

enum class AvatarKind { disembodied_camera, sphere_embodied, capsule_embodied };
const char* to_string(AvatarKind k);
// Accepts our names plus the avatar type names used by existing controllers.
AvatarKind avatar_kind_from_string(const std::string& s);

struct CameraIntrinsics {
  double vertical_fov = 54.43;  // degrees
  int width = 256;
  int height = 256;
  double near_clip = 0.01;

  void validate() const;  // throws std::invalid_argument
};

struct Avatar {
  std::string id;
  AvatarKind kind = AvatarKind::disembodied_camera;
  Pose pose;  // camera pose; for embodied avatars the position follows the body
  CameraIntrinsics camera;
  std::set<std::string> pass_masks = {"_img"};
  std::optional<physics::RigidBody> body;
  AudioMaterial audio_material = AudioMaterial::plastic;
};

// One contact event with wire-level identities resolved.
struct BodyLabel {
  std::string kind;  // "object" | "avatar" | "environment"
  std::uint64_t id = 0;
  std::string avatar_id;
};

struct WorldConfig {
  std::uint64_t seed = 0;
  physics::SolverConfig solver;
  Vec3 gravity = Vec3(0, -9.81, 0);
};

class World {
 public:
  explicit World(std::shared_ptr<const ModelLibrary> library, WorldConfig config = {});

  const ModelLibrary& library() const { return *library_; }

  // Clears objects, avatars and static geometry. The frame counter keeps running.
  void load_scene(const std::string& name);
  const std::string& scene_name() const { return scene_name_; }
  // Floor with its top face at y = 0 plus four walls, 3 m high and 0.1 m thick.
  void create_empty_room(double width, double length);

  SceneObject& add_object(const ModelRecord& record, const Vec3& position, const Vec3& rotation_deg,
                          double scale_factor, std::uint64_t id, const std::string& mesh_override = {});
  void destroy_object(std::uint64_t id);
  void teleport_object(std::uint64_t id, const Vec3& position);
  void rotate_object(std::uint64_t id, const Vec3& rotation_deg);
  void apply_force(std::uint64_t id, const Vec3& impulse, const std::optional<Vec3>& point = std::nullopt);
  void set_mass(std::uint64_t id, double mass);
  void set_physic_material(std::uint64_t id, double dynamic_friction, double static_friction, double bounciness);
  void set_audio_material(std::uint64_t id, AudioMaterial material);

  Avatar& create_avatar(AvatarKind kind, const std::string& avatar_id);
  void teleport_avatar(const std::string& avatar_id, const Vec3& position);
  void look_at(const std::string& avatar_id, const Vec3& target);
  void look_at_object(const std::string& avatar_id, std::uint64_t object_id);
  void move_avatar(const std::string& avatar_id, const Vec3& impulse);
  void set_pass_masks(const std::string& avatar_id, const std::vector<std::string>& masks);

  void set_gravity(const Vec3& g) { gravity_ = g; }
  const Vec3& gravity() const { return gravity_; }
  void set_seed(std::uint64_t seed);
  std::uint64_t seed() const { return seed_; }
  Rng& rng() { return rng_; }

  // Advances physics one fixed step and increments the frame counter.
  const std::vector<physics::CollisionEvent>& step();
  std::uint64_t frame() const { return frame_; }
  const std::vector<physics::CollisionEvent>& last_events() const { return last_events_; }

  const std::map<std::uint64_t, SceneObject>& objects() const { return objects_; }
  const SceneObject& object(std::uint64_t id) const;
  SceneObject& object(std::uint64_t id);
  const SceneObject* find_object(std::uint64_t id) const;
  const std::map<std::string, Avatar>& avatars() const { return avatars_; }
  const Avatar& avatar(const std::string& id) const;
  Avatar& avatar(const std::string& id);
  const std::vector<physics::RigidBody>& environment() const { return environment_; }

  BodyLabel label(const physics::BodyRef& ref) const;
  // Audio material and mass of any body taking part in a contact.
  AudioMaterial material_of(const physics::BodyRef& ref) const;
  double mass_of(const physics::BodyRef& ref) const;
  // World-space bounds of a body's colliders.
  Aabb bounds_of(const physics::BodyRef& ref) const;

  physics::PhysicsSolver& solver() { return solver_; }
  const physics::SolverConfig& solver_config() const { return solver_.config(); }

  std::shared_ptr<const ModelGeometry> geometry_for(const ModelRecord& record, double scale,
                                                    const std::string& mesh_override = {});

 private:
  Rgb allocate_color(std::uint64_t id);
  void sync_avatar(Avatar& a);

  std::shared_ptr<const ModelLibrary> library_;
  physics::PhysicsSolver solver_;
  std::string scene_name_;
  std::map<std::uint64_t, SceneObject> objects_;
  std::map<std::string, Avatar> avatars_;
  std::map<std::uint64_t, std::string> avatar_by_body_;
  std::uint64_t next_avatar_body_ = 1;
  std::vector<physics::RigidBody> environment_;
  std::set<Rgb> used_colors_;
  Vec3 gravity_;
  std::uint64_t seed_ = 0;
  Rng rng_;
  std::uint64_t frame_ = 0;
  std::vector<physics::CollisionEvent> last_events_;
  std::map<std::string, std::shared_ptr<const ModelGeometry>> geometry_cache_;
};

}  // namespace hullsim
