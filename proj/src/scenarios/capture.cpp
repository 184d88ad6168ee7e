#include "hullsim/scenarios/capture.hpp"

#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>

namespace hullsim::scenarios {

using nlohmann::json;

namespace {

json vec(const Vec3& v) { return {{"x", v.x()}, {"y", v.y()}, {"z", v.z()}}; }
json quat(const Quat& q) { return {{"x", q.x()}, {"y", q.y()}, {"z", q.z()}, {"w", q.w()}}; }

const std::vector<std::string>& scenery_models() {
  static const std::vector<std::string> v = {"occluder_board", "cardboard_box", "basket",     "small_table_green_marble",
                                             "ramp",           "glass_vase",    "unit_cube", "block"};
  return v;
}

}  // namespace

const char* to_string(Criterion c) { return c == Criterion::ratio ? "ratio" : "difference"; }

Criterion criterion_from_string(const std::string& s) {
  if (s == "ratio") return Criterion::ratio;
  if (s == "difference") return Criterion::difference;
  throw std::invalid_argument("criterion must be ratio or difference");
}

void CaptureConfig::validate() const {
  if (!(grayscale_threshold > 0.0 && grayscale_threshold <= 1.0))
    throw std::invalid_argument("grayscale threshold must lie in (0, 1]");
  if (positional_resolution < 1 || final_resolution < 1) throw std::invalid_argument("resolutions must be positive");
  if (shots_per_model < 0 || max_attempts < 1) throw std::invalid_argument("bad shot or attempt count");
  if (!(room_size > 2.0)) throw std::invalid_argument("room too small");
}

json CaptureConfig::to_json() const {
  return {{"positional_resolution", positional_resolution},
          {"final_resolution", final_resolution},
          {"grayscale_threshold", grayscale_threshold},
          {"criterion", to_string(criterion)},
          {"min_coverage", min_coverage},
          {"shots_per_model", shots_per_model},
          {"seed", seed},
          {"max_attempts", max_attempts},
          {"room_size", room_size},
          {"scenery_count", scenery_count},
          {"fov", fov}};
}

std::vector<std::string> default_capture_models() {
  return {"iron_box", "toy_pyramid", "ceramic_mug", "ball_rubber", "toy_cylinder"};
}

json Shot::to_json() const {
  return {{"model", model},
          {"index", index},
          {"attempts", attempts},
          {"object_position", vec(object_position)},
          {"object_yaw", object_yaw},
          {"camera_position", vec(camera.position)},
          {"camera_rotation", quat(camera.orientation)},
          {"unoccluded", unoccluded},
          {"occluded", occluded}};
}

bool accepts(const CaptureConfig& config, double unoccluded, double occluded) {
  if (config.criterion == Criterion::difference) return unoccluded - occluded > config.grayscale_threshold;
  if (!(unoccluded >= config.min_coverage) || unoccluded <= 0.0) return false;
  return occluded / unoccluded > config.grayscale_threshold;
}

CaptureStage::CaptureStage(std::shared_ptr<const ModelLibrary> library, const CaptureConfig& config, std::string model,
                           std::uint64_t model_index)
    : config_(config), model_(std::move(model)), world_(library), rng_(derive_seed(config.seed, model_index, 0xCA97)) {
  config_.validate();
  world_.create_empty_room(config_.room_size, config_.room_size);
  const double half = 0.5 * config_.room_size - 1.5;

  // Static clutter; overlapping pieces are redrawn.
  const auto& names = scenery_models();
  std::uint64_t next_id = 1;
  for (int k = 0; k < config_.scenery_count; ++k) {
    for (int tries = 0; tries < 50; ++tries) {
      const auto& record = world_.library().get(names[static_cast<std::size_t>(uniform_int(rng_, 0, int(names.size()) - 1))]);
      const Vec3 pos(uniform(rng_, -half, half), 0.0, uniform(rng_, -half, half));
      const double yaw = uniform(rng_, 0.0, 360.0);
      auto& obj = world_.add_object(record, pos, Vec3(0, yaw, 0), record.scale_factor, next_id);
      const Aabb box = obj.body.world_bounds();
      bool clash = false;
      for (const auto& b : scenery_)
        if (b.overlaps(box)) clash = true;
      if (clash) {
        world_.destroy_object(next_id);
        continue;
      }
      scenery_.push_back(box);
      ++next_id;
      break;
    }
  }
  const auto& record = world_.library().get(model_);
  auto& target = world_.add_object(record, Vec3(0, 50, 0), Vec3::Zero(), record.scale_factor, kTargetId);
  extent_ = target.body.world_bounds().extent().norm();
}

void CaptureStage::place(const Shot& shot) {
  world_.rotate_object(kTargetId, Vec3(0, shot.object_yaw, 0));
  world_.teleport_object(kTargetId, shot.object_position);
}

sensors::Camera CaptureStage::camera(const Shot& shot, int resolution) const {
  sensors::Camera cam;
  cam.pose = shot.camera;
  cam.intrinsics.vertical_fov = config_.fov;
  cam.intrinsics.width = resolution;
  cam.intrinsics.height = resolution;
  return cam;
}

std::pair<double, double> CaptureStage::grayscales(const Shot& shot, int resolution) {
  place(shot);
  const auto cam = camera(shot, resolution);
  const sensors::RenderScene full = sensors::snapshot(world_);
  // Same relative poses with nothing else around: the lifted pass.
  sensors::RenderScene alone;
  for (const auto& item : full.items)
    if (item.id == kTargetId) alone.items.push_back(item);
  return {sensors::grayscale(alone, cam, kTargetId), sensors::grayscale(full, cam, kTargetId)};
}

sensors::Image CaptureStage::render(const Shot& shot, int resolution) {
  place(shot);
  return sensors::render(sensors::snapshot(world_), camera(shot, resolution));
}

std::string CaptureStage::image(const Shot& shot) {
  place(shot);
  const auto scene = sensors::snapshot(world_);
  return sensors::encode_ppm(sensors::render(scene, camera(shot, config_.final_resolution)), scene);
}

Shot CaptureStage::sample(int shot_index) {
  const double half = 0.5 * config_.room_size - 1.0;
  const double wall = 0.5 * config_.room_size - 0.2;
  Shot shot;
  shot.model = model_;
  shot.index = shot_index;
  for (int attempt = 1; attempt <= config_.max_attempts; ++attempt) {
    shot.attempts = attempt;
    shot.object_position = Vec3(uniform(rng_, -half, half), 0.0, uniform(rng_, -half, half));
    shot.object_yaw = uniform(rng_, 0.0, 360.0);
    const double distance = extent_ * uniform(rng_, 1.2, 3.0);
    const double azimuth = uniform(rng_, 0.0, 2.0 * kPi);
    const double elevation = deg_to_rad(uniform(rng_, 5.0, 60.0));
    const Vec3 jitter(uniform(rng_, -0.25, 0.25), uniform(rng_, -0.25, 0.25), uniform(rng_, -0.25, 0.25));

    place(shot);
    const Aabb box = world_.object(kTargetId).body.world_bounds();
    bool clash = false;
    for (const auto& b : scenery_)
      if (b.overlaps(box)) clash = true;
    if (clash) continue;

    const Vec3 center = box.center();
    const Vec3 dir(std::cos(elevation) * std::cos(azimuth), std::sin(elevation), std::cos(elevation) * std::sin(azimuth));
    const Vec3 eye = center + distance * dir;
    if (std::abs(eye.x()) > wall || std::abs(eye.z()) > wall || eye.y() > 2.9 || eye.y() < 0.02) continue;
    bool inside = false;
    for (const auto& b : scenery_)
      if (b.contains(eye, 0.05)) inside = true;
    if (inside) continue;
    shot.camera.position = eye;
    shot.camera.orientation = look_rotation((center + extent_ * jitter - eye).normalized());

    const auto [unoccluded, occluded] = grayscales(shot, config_.positional_resolution);
    if (accepts(config_, unoccluded, occluded)) {
      shot.unoccluded = unoccluded;
      shot.occluded = occluded;
      return shot;
    }
  }
  throw NoValidPose("no acceptable pose for " + model_ + " shot " + std::to_string(shot_index) + " after " +
                    std::to_string(config_.max_attempts) + " attempts");
}

json CaptureResult::manifest() const {
  json shots_json = json::array();
  for (const auto& s : shots) shots_json.push_back(s.to_json());
  return {{"shots", shots_json}};
}

CaptureResult capture_dataset(const CaptureConfig& config, const std::vector<std::string>& models,
                              std::shared_ptr<const ModelLibrary> library) {
  config.validate();
  for (const auto& m : models) (void)library->get(m);
  const int n = static_cast<int>(models.size());
  std::vector<CaptureResult> parts(models.size());
  std::vector<std::exception_ptr> errors(models.size());
#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < n; ++i) {
    try {
      CaptureStage stage(library, config, models[i], static_cast<std::uint64_t>(i));
      auto& part = parts[i];
      for (int k = 0; k < config.shots_per_model; ++k) part.shots.push_back(stage.sample(k));
      for (const auto& shot : part.shots) part.images.push_back(stage.image(shot));
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  CaptureResult out;
  for (auto& p : parts) {
    for (auto& s : p.shots) out.shots.push_back(std::move(s));
    for (auto& img : p.images) out.images.push_back(std::move(img));
  }
  return out;
}

void write_capture(const CaptureResult& result, const CaptureConfig& config, const std::filesystem::path& out_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  json manifest = result.manifest();
  manifest["config"] = config.to_json();
  json files = json::array();
  for (std::size_t i = 0; i < result.shots.size(); ++i) {
    const auto& s = result.shots[i];
    char name[32];
    std::snprintf(name, sizeof name, "%04d.ppm", s.index);
    const fs::path rel = fs::path(s.model) / name;
    fs::create_directories(out_dir / s.model);
    std::ofstream(out_dir / rel, std::ios::binary) << result.images[i];
    files.push_back(rel.generic_string());
  }
  manifest["images"] = files;
  std::ofstream(out_dir / "manifest.json") << manifest.dump(2) << "\n";
}

}  // namespace hullsim::scenarios
