#pragma once

#include "hullsim/physics/body.hpp"

#include <json.hpp>

#include <cstdint>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace hullsim::physics {

struct SimulationDiverged : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SolverConfig {
  double dt = 0.01;
  int velocity_iterations = 10;
  int position_iterations = 3;
  double baumgarte = 0.2;
  double slop = 1e-3;
  double max_correction = 0.2;  // m per position iteration
  double contact_tolerance = kContactTolerance;
  double restitution_threshold = 0.2;  // m/s; slower approaches do not bounce
  double warm_start_distance = 0.02;   // m; contact point matching radius
  bool warm_starting = true;
  bool allow_sleeping = false;
  double sleep_speed = 0.02;
  int sleep_delay = 50;

  static SolverConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

enum class ContactState { enter, stay, exit };
const char* to_string(ContactState s);

struct CollisionEvent {
  BodyRef a;
  BodyRef b;
  Vec3 point = Vec3::Zero();
  Vec3 normal = Vec3::UnitY();  // a -> b
  double relative_normal_speed = 0.0;  // approach speed at first contact
  double impulse = 0.0;                // total normal impulse this step, N*s
  std::uint64_t frame = 0;
  ContactState state = ContactState::enter;
};

// Restitution combines by max, friction by geometric mean.
double combine_restitution(double a, double b);
double combine_friction(double a, double b);

// Fixed-step impulse solver. Holds the contact cache used for warm starting
// and enter/stay/exit labelling, so one instance belongs to one world.
class PhysicsSolver {
 public:
  explicit PhysicsSolver(SolverConfig config = {}) : config_(config) {}

  const SolverConfig& config() const { return config_; }
  SolverConfig& config() { return config_; }

  // `bodies` must be sorted by ref. Returns the events of this step in
  // (a, b) order, exits last. Throws SimulationDiverged on NaN state.
  std::vector<CollisionEvent> step(std::span<RigidBody* const> bodies, const Vec3& gravity, std::uint64_t frame);

  // Forget cached contacts involving `ref` (destroyed or teleported bodies).
  void forget(const BodyRef& ref);
  void clear() { cache_.clear(); }

 private:
  struct CachedPoint {
    Vec3 local_a;
    double normal_impulse = 0.0;
    double tangent_impulse[2] = {0.0, 0.0};
  };
  struct CachedPair {
    std::vector<CachedPoint> points;
    Vec3 point = Vec3::Zero();
    Vec3 normal = Vec3::UnitY();
  };

  SolverConfig config_;
  std::map<std::pair<BodyRef, BodyRef>, CachedPair> cache_;
};

}  // namespace hullsim::physics
