#include "hullsim/sensors/render.hpp"

#include "hullsim/core/base64.hpp"

#include <algorithm>
#include <cstring>

namespace hullsim::sensors {

using nlohmann::json;

Rgb RenderScene::color_of(std::uint64_t id) const {
  if (id == kNoObject) return {0, 0, 0};
  for (const auto& it : items)
    if (it.id == id) return it.color;
  return {0, 0, 0};
}

RenderScene snapshot(const World& world, bool include_environment) {
  RenderScene scene;
  if (include_environment) {
    for (const auto& b : world.environment())
      for (const auto& c : b.colliders) scene.items.push_back({kNoObject, {0, 0, 0}, physics::PosedCollider(c, b.pose)});
  }
  for (const auto& [id, o] : world.objects())
    for (const auto& c : o.body.colliders) scene.items.push_back({id, o.segmentation_color, physics::PosedCollider(c, o.body.pose)});
  std::stable_sort(scene.items.begin(), scene.items.end(), [](const auto& l, const auto& r) { return l.id < r.id; });
  return scene;
}

Vec3 Camera::ray(int col, int row) const {
  const double tan_half = std::tan(deg_to_rad(intrinsics.vertical_fov) / 2.0);
  const double aspect = static_cast<double>(intrinsics.width) / intrinsics.height;
  const double x = (2.0 * (col + 0.5) / intrinsics.width - 1.0) * tan_half * aspect;
  const double y = (1.0 - 2.0 * (row + 0.5) / intrinsics.height) * tan_half;
  const Vec3 forward = pose.rotate(Vec3::UnitZ());
  const Vec3 up = pose.rotate(Vec3::UnitY());
  const Vec3 right = forward.cross(up);
  return (forward + x * right + y * up).normalized();
}

namespace {

void shade_pixel(const RenderScene& scene, const Camera& camera, int col, int row, std::uint64_t& id, double& depth) {
  const Vec3 origin = camera.pose.position;
  const Vec3 dir = camera.ray(col, row);
  double best = kInf;
  std::uint64_t best_id = kNoObject;
  const double near = camera.intrinsics.near_clip;
  for (const auto& item : scene.items) {
    if (ray_aabb(origin, dir, item.shape.bounds, best) == kInf) continue;
    const auto hit = physics::raycast(item.shape, origin, dir, near, best);
    if (!hit) continue;
    if (hit->t < best || (hit->t == best && item.id < best_id)) {
      best = hit->t;
      best_id = item.id;
    }
  }
  id = best_id;
  depth = best;
}

Image blank(const Camera& camera) {
  camera.intrinsics.validate();
  Image img;
  img.width = camera.intrinsics.width;
  img.height = camera.intrinsics.height;
  img.ids.assign(static_cast<std::size_t>(img.width) * img.height, kNoObject);
  img.depth.assign(img.ids.size(), kInf);
  return img;
}

}  // namespace

Image render_serial(const RenderScene& scene, const Camera& camera) {
  Image img = blank(camera);
  for (int row = 0; row < img.height; ++row)
    for (int col = 0; col < img.width; ++col) {
      const std::size_t k = static_cast<std::size_t>(row) * img.width + col;
      shade_pixel(scene, camera, col, row, img.ids[k], img.depth[k]);
    }
  return img;
}

Image render(const RenderScene& scene, const Camera& camera) {
  Image img = blank(camera);
  const int h = img.height, w = img.width;
#pragma omp parallel for schedule(static)
  for (int row = 0; row < h; ++row)
    for (int col = 0; col < w; ++col) {
      const std::size_t k = static_cast<std::size_t>(row) * w + col;
      shade_pixel(scene, camera, col, row, img.ids[k], img.depth[k]);
    }
  return img;
}

double coverage(const Image& image, std::uint64_t target) {
  if (image.ids.empty()) return 0.0;
  const auto n = std::count(image.ids.begin(), image.ids.end(), target);
  return static_cast<double>(n) / static_cast<double>(image.ids.size());
}

std::string encode_ppm(const Image& image, const RenderScene& scene) {
  std::string out = "P6\n" + std::to_string(image.width) + " " + std::to_string(image.height) + "\n255\n";
  const std::size_t header = out.size();
  out.resize(header + image.ids.size() * 3);
  std::uint64_t last_id = kNoObject;
  Rgb last{0, 0, 0};
  for (std::size_t k = 0; k < image.ids.size(); ++k) {
    if (image.ids[k] != last_id) {
      last_id = image.ids[k];
      last = scene.color_of(last_id);
    }
    std::memcpy(&out[header + 3 * k], last.data(), 3);
  }
  return out;
}

std::string encode_pfm(const Image& image) {
  std::string out = "Pf\n" + std::to_string(image.width) + " " + std::to_string(image.height) + "\n-1.0\n";
  const std::size_t header = out.size();
  out.resize(header + image.depth.size() * 4);
  std::size_t pos = header;
  // PFM rows run bottom to top.
  for (int row = image.height - 1; row >= 0; --row)
    for (int col = 0; col < image.width; ++col) {
      const float f = static_cast<float>(image.depth_at(col, row));
      std::uint32_t bits;
      std::memcpy(&bits, &f, 4);
      for (int b = 0; b < 4; ++b) out[pos++] = static_cast<char>((bits >> (8 * b)) & 0xFF);
    }
  return out;
}

Image render_pass(const World& world, const Avatar& avatar, const std::string& mask) {
  if (!avatar.pass_masks.contains(mask)) throw PassNotEnabled("pass " + mask + " is not enabled for avatar " + avatar.id);
  return render(snapshot(world), Camera::of(avatar));
}

std::vector<json> image_blobs(const World& world, const Avatar& avatar) {
  const RenderScene scene = snapshot(world);
  const Image img = render(scene, Camera::of(avatar));
  std::vector<json> out;
  for (const auto& pass : avatar.pass_masks) {
    const bool depth = pass == "_depth";
    const std::string data = depth ? encode_pfm(img) : encode_ppm(img, scene);
    const auto* bytes = reinterpret_cast<const std::uint8_t*>(data.data());
    out.push_back({{"avatar_id", avatar.id},
                   {"pass", pass},
                   {"width", img.width},
                   {"height", img.height},
                   {"format", depth ? "pfm" : "ppm"},
                   {"data_b64", base64_encode(std::span(bytes, data.size()))}});
  }
  return out;
}

namespace {

json vec(const Vec3& v) { return {{"x", v.x()}, {"y", v.y()}, {"z", v.z()}}; }

}  // namespace

json Bounds::to_json() const {
  return {{"id", id},         {"center", vec(center)}, {"top", vec(top)},     {"bottom", vec(bottom)},
          {"left", vec(left)}, {"right", vec(right)},   {"front", vec(front)}, {"back", vec(back)}};
}

Bounds bounds_from_aabb(std::uint64_t id, const Aabb& box) {
  Bounds b;
  b.id = id;
  b.center = box.center();
  const Vec3& c = b.center;
  b.top = Vec3(c.x(), box.max.y(), c.z());
  b.bottom = Vec3(c.x(), box.min.y(), c.z());
  b.left = Vec3(box.min.x(), c.y(), c.z());
  b.right = Vec3(box.max.x(), c.y(), c.z());
  b.front = Vec3(c.x(), c.y(), box.max.z());
  b.back = Vec3(c.x(), c.y(), box.min.z());
  return b;
}

Bounds compute_bounds(const World& world, std::uint64_t id) {
  return bounds_from_aabb(id, world.object(id).body.world_bounds());
}

double grayscale(const RenderScene& scene, const Camera& camera, std::uint64_t target) {
  return coverage(render(scene, camera), target);
}

double grayscale(const World& world, const Avatar& avatar, std::uint64_t target) {
  world.object(target);
  return grayscale(snapshot(world), Camera::of(avatar), target);
}

}  // namespace hullsim::sensors
