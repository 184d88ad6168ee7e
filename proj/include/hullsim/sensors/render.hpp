#pragma once

#include "hullsim/physics/collider.hpp"
#include "hullsim/world/world.hpp"

#include <json.hpp>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace hullsim::sensors {

struct PassNotEnabled : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Pixel label for "no object": empty space and static room geometry. Object
// id 0 is a valid wire id, so background needs a value outside the id space.
inline constexpr std::uint64_t kNoObject = ~std::uint64_t{0};

// Immutable copy of everything a camera can see. Items are sorted by id;
// static room geometry renders as kNoObject.
struct RenderScene {
  struct Item {
    std::uint64_t id = 0;
    Rgb color{};
    physics::PosedCollider shape;
  };
  std::vector<Item> items;

  Rgb color_of(std::uint64_t id) const;
};

RenderScene snapshot(const World& world, bool include_environment = true);

// Pinhole camera looking down local +Z with local +Y up. Image row 0 is the top.
struct Camera {
  Pose pose;
  CameraIntrinsics intrinsics;

  static Camera of(const Avatar& avatar) { return {avatar.pose, avatar.camera}; }
  // Unit direction through the center of pixel (col, row).
  Vec3 ray(int col, int row) const;
};

struct Image {
  int width = 0;
  int height = 0;
  std::vector<std::uint64_t> ids;  // kNoObject = background or room
  std::vector<double> depth;       // metres along the ray; +inf = nothing hit

  std::uint64_t id_at(int col, int row) const { return ids[static_cast<std::size_t>(row) * width + col]; }
  double depth_at(int col, int row) const { return depth[static_cast<std::size_t>(row) * width + col]; }
};

// Nearest hit wins; equal distances go to the lower id.
Image render_serial(const RenderScene& scene, const Camera& camera);
// Same output, rows shared across OpenMP threads.
Image render(const RenderScene& scene, const Camera& camera);

// Fraction of pixels showing `target`.
double coverage(const Image& image, std::uint64_t target);

// Binary PPM (P6) of segmentation colors; PFM (Pf, little-endian) of depth.
std::string encode_ppm(const Image& image, const RenderScene& scene);
std::string encode_pfm(const Image& image);

// One pass from the avatar's camera. "_img" and "_id" share the id render.
// Throws PassNotEnabled if the mask is not enabled for the avatar.
Image render_pass(const World& world, const Avatar& avatar, const std::string& mask);

// Image blobs for every enabled pass, from a single render.
std::vector<nlohmann::json> image_blobs(const World& world, const Avatar& avatar);

struct Bounds {
  std::uint64_t id = 0;
  Vec3 center, top, bottom, left, right, front, back;

  nlohmann::json to_json() const;
};

Bounds bounds_from_aabb(std::uint64_t id, const Aabb& box);
Bounds compute_bounds(const World& world, std::uint64_t id);  // throws UnknownObject

// Coverage of `target` in an id render from the avatar's camera.
double grayscale(const World& world, const Avatar& avatar, std::uint64_t target);
double grayscale(const RenderScene& scene, const Camera& camera, std::uint64_t target);

}  // namespace hullsim::sensors
