#pragma once

#include "hullsim/sensors/render.hpp"
#include "hullsim/world/world.hpp"

#include <json.hpp>

#include <filesystem>
#include <memory>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace hullsim::scenarios {

struct NoValidPose : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ratio:      accept iff occluded / unoccluded > threshold
// difference: accept iff unoccluded - occluded > threshold
enum class Criterion { ratio, difference };
const char* to_string(Criterion c);
Criterion criterion_from_string(const std::string& s);

struct CaptureConfig {
  int positional_resolution = 32;
  int final_resolution = 256;
  double grayscale_threshold = 0.55;
  Criterion criterion = Criterion::ratio;
  double min_coverage = 0.01;  // unoccluded coverage needed for a pose to count
  int shots_per_model = 20;
  std::uint64_t seed = 1;
  int max_attempts = 10000;  // per shot
  double room_size = 12.0;
  int scenery_count = 10;
  double fov = 54.43;

  void validate() const;  // throws std::invalid_argument
  nlohmann::json to_json() const;
};

std::vector<std::string> default_capture_models();

struct Shot {
  std::string model;
  int index = 0;
  int attempts = 0;
  Vec3 object_position = Vec3::Zero();
  double object_yaw = 0.0;  // degrees
  Pose camera;
  double unoccluded = 0.0;
  double occluded = 0.0;

  nlohmann::json to_json() const;
};

bool accepts(const CaptureConfig& config, double unoccluded, double occluded);

// One model in its cluttered room. Loop 1 samples and caches poses at low
// resolution; loop 2 replays a cached pose at the final resolution.
class CaptureStage {
 public:
  CaptureStage(std::shared_ptr<const ModelLibrary> library, const CaptureConfig& config, std::string model,
               std::uint64_t model_index);

  Shot sample(int shot_index);  // throws NoValidPose
  // (unoccluded, occluded) coverage of the target at the given resolution.
  std::pair<double, double> grayscales(const Shot& shot, int resolution);
  sensors::Image render(const Shot& shot, int resolution);
  std::string image(const Shot& shot);  // PPM at the final resolution

  const World& world() const { return world_; }
  static constexpr std::uint64_t kTargetId = 1000;

 private:
  void place(const Shot& shot);
  sensors::Camera camera(const Shot& shot, int resolution) const;

  CaptureConfig config_;
  std::string model_;
  World world_;
  Rng rng_;
  std::vector<Aabb> scenery_;
  double extent_ = 0.0;
};

struct CaptureResult {
  std::vector<Shot> shots;         // model order, then shot order
  std::vector<std::string> images;  // PPM bytes, parallel to shots
  nlohmann::json manifest() const;
};

// Models run in parallel, each with its own world and stream.
CaptureResult capture_dataset(const CaptureConfig& config, const std::vector<std::string>& models,
                              std::shared_ptr<const ModelLibrary> library);

// Writes <out>/<model>/<shot>.ppm plus <out>/manifest.json.
void write_capture(const CaptureResult& result, const CaptureConfig& config, const std::filesystem::path& out_dir);

}  // namespace hullsim::scenarios
