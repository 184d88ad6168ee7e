// Acceptance run: one PASS/FAIL line per criterion. Exit status is
// the number of failed criteria.

#include "hullsim/audio/impact.hpp"
#include "hullsim/commands/registry.hpp"
#include "hullsim/commands/session.hpp"
#include "hullsim/physics/hull.hpp"
#include "hullsim/physics/solver.hpp"
#include "hullsim/protocol/codec.hpp"
#include "hullsim/scenarios/capture.hpp"
#include "hullsim/scenarios/scenario.hpp"
#include "hullsim/sensors/render.hpp"
#include "hullsim/server/server.hpp"
#include "hullsim/world/mesh.hpp"
#include "../support/golden.hpp"
#include "../unit/oracles.hpp"
#include "../unit/spectrum.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>

#include <unistd.h>

using namespace hullsim;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

// Tolerances and sizes, fixed here rather than on the command line.
constexpr int kProtocolLists = 1000;
constexpr double kProtocolSeconds = 10.0;
constexpr int kSettleSteps = 500;
constexpr double kMaxPenetration = 0.002;
constexpr double kRestTolerance = 0.005;
constexpr int kConservationScenes = 100;
constexpr int kConservationSteps = 500;
constexpr double kMomentumRel = 1e-6;
constexpr double kEnergyRel = 1e-3;
constexpr double kConservationSeconds = 60.0;
constexpr int kHullClouds = 10000;
constexpr double kVolumeTol = 1e-12;
constexpr int kImpacts = 100;
constexpr double kOcclusionDb = 12.0;
constexpr double kOcclusionTol = 0.5;
constexpr int kSensorScenes = 100;
constexpr double kDepthRel = 1e-9;
constexpr double kMinStepsPerSecond = 1000.0;

std::shared_ptr<const ModelLibrary> lib() {
  static const auto l = std::make_shared<const ModelLibrary>(ModelLibrary::bundled());
  return l;
}

std::shared_ptr<const audio::MaterialTables> tables() {
  static const auto t = std::make_shared<const audio::MaterialTables>(audio::MaterialTables::bundled());
  return t;
}

commands::Session fresh(std::uint64_t seed = 0) {
  WorldConfig cfg;
  cfg.seed = seed;
  return commands::Session(std::make_shared<World>(lib(), cfg), tables());
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// ---- protocol ----

json random_field(std::mt19937_64& rng, const protocol::FieldSpec& f) {
  static const std::vector<std::string> words = {"a", "b", "iron_box", "ProcGenScene", "A_Img_Caps_Kinematic",
                                                 "_img", "_id", "wood", "metal", "x y"};
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  std::uniform_int_distribution<int> small(0, 6);
  using protocol::FieldType;
  switch (f.type) {
    case FieldType::boolean: return rng() % 2 == 0;
    case FieldType::integer: return static_cast<std::int64_t>(rng() % 2000) - 1000;
    case FieldType::number: return u(rng);
    case FieldType::string: return words[rng() % words.size()];
    case FieldType::vector3: return {{"x", u(rng)}, {"y", u(rng)}, {"z", u(rng)}};
    case FieldType::string_list: {
      json a = json::array();
      for (int i = small(rng) % 3; i > 0; --i) a.push_back(words[rng() % words.size()]);
      return a;
    }
    case FieldType::id_list: {
      json a = json::array();
      for (int i = small(rng) % 4; i > 0; --i) a.push_back(small(rng));
      return a;
    }
    case FieldType::object_id: return small(rng);
    case FieldType::frequency: {
      static const char* f3[] = {"once", "always", "never"};
      return f3[rng() % 3];
    }
  }
  return nullptr;
}

Outcome protocol_conformance() {
  const auto t0 = std::chrono::steady_clock::now();
  auto session = fresh(5);
  const auto& reg = session.registry();
  auto names = reg.names();
  std::erase(names, std::string("terminate"));
  std::mt19937_64 rng(2718);
  int identical = 0, frames_ok = 0, commands = 0;
  for (int i = 1; i <= kProtocolLists; ++i) {
    json list = json::array();
    for (int n = static_cast<int>(rng() % 6); n > 0; --n) {
      const auto* schema = reg.find(names[rng() % names.size()]);
      json cmd = {{"$type", schema->type_name}};
      for (const auto& f : schema->required) cmd[f.name] = random_field(rng, f);
      for (const auto& f : schema->optional)
        if (rng() % 2) cmd[f.name] = random_field(rng, f);
      list.push_back(cmd);
    }
    commands += static_cast<int>(list.size());
    const std::string payload = list.dump();
    const auto framed = protocol::encode_frame(payload);
    const auto decoded = protocol::decode_command_list(framed, reg);
    const auto again = protocol::encode_command_list(decoded);
    const auto redecoded = protocol::decode_command_list(again, reg);
    if (again == protocol::encode_command_list(redecoded) && redecoded == decoded &&
        protocol::encode_command_payload(decoded) == json::parse(payload).dump())
      ++identical;

    const auto response = session.handle_payload(payload);
    const json doc = json::parse(response);
    if (doc.back().is_number_unsigned() && doc.back().get<std::uint64_t>() == static_cast<std::uint64_t>(i) &&
        session.world().frame() == static_cast<std::uint64_t>(i))
      ++frames_ok;
  }
  const double s = seconds_since(t0);
  return {identical == kProtocolLists && frames_ok == kProtocolLists && s < kProtocolSeconds,
          fmt("%d/%d lists re-encode identically, %d/%d final elements equal the frame counter, %d commands, %.2f s "
              "(limit %.0f s)",
              identical, kProtocolLists, frames_ok, kProtocolLists, commands, s, kProtocolSeconds)};
}

// ---- golden transcript ----

Outcome golden_transcript() {
  auto s = fresh(42);
  const auto run = golden::first_session(s);
  bool verbatim = true;
  for (const auto& r : run.responses)
    for (const auto& b : r.outputs) verbatim = verbatim && b.type_id != "erro";
  const bool bounds = golden::first(run.responses[0], "boun") != nullptr;
  const bool image = golden::first(run.responses[2], "imag") != nullptr;
  const auto st = golden::settle(s, 0, 1, kSettleSteps);
  const bool ok = verbatim && bounds && image && st.penetration <= kMaxPenetration &&
                  std::abs(st.box_bottom - st.table_top) <= kRestTolerance;
  return {ok, fmt("no error blobs: %s, boun: %s, imag: %s; after %d steps table top %.5f, box bottom %.5f, "
                  "penetration %.5f m (limit %.3f), |gap| %.5f m (limit %.3f)",
                  verbatim ? "yes" : "no", bounds ? "yes" : "no", image ? "yes" : "no", kSettleSteps, st.table_top,
                  st.box_bottom, st.penetration, kMaxPenetration, std::abs(st.box_bottom - st.table_top),
                  kRestTolerance)};
}

// ---- physics conservation ----

physics::RigidBody box_body(std::uint64_t id, const Vec3& half, const Vec3& center) {
  const Mesh box = make_box(-half, half);
  const std::vector<physics::ConvexHull> hulls = {physics::quickhull(box.vertices)};
  const auto shape = physics::shape_from_hulls(hulls, 1000.0);
  physics::RigidBody b;
  b.ref = {physics::BodyKind::object, id};
  b.pose.position = center;
  b.colliders = shape.colliders;
  b.set_mass_properties(shape.mass.mass, shape.mass.inertia);
  return b;
}

physics::RigidBody sphere_body(std::uint64_t id, double r, const Vec3& center) {
  const auto shape = physics::shape_from_sphere(r, 1000.0);
  physics::RigidBody b;
  b.ref = {physics::BodyKind::object, id};
  b.pose.position = center;
  b.colliders = shape.colliders;
  b.set_mass_properties(shape.mass.mass, shape.mass.inertia);
  return b;
}

Outcome physics_conservation() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(31337);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::normal_distribution<double> g;
  double worst_p = 0.0, worst_e = 0.0;
  int contact_steps = 0, scenes_with_contact = 0, gains = 0;
  for (int scene = 0; scene < kConservationScenes; ++scene) {
    std::vector<physics::RigidBody> bodies;
    for (int i = 0; i < 5; ++i) {
      const Vec3 pos(1.6 * i - 3.2, 0.3 * u(rng), 0.3 * u(rng));
      auto b = (i % 2) ? sphere_body(i + 1, 0.3 + 0.2 * std::abs(u(rng)), pos)
                       : box_body(i + 1, Vec3(0.3, 0.35, 0.4) + 0.1 * Vec3(u(rng), u(rng), u(rng)), pos);
      b.pose.orientation = Quat(g(rng), g(rng), g(rng), g(rng)).normalized();
      b.state.linear_velocity = Vec3(-pos.x() + 0.2 * u(rng), 0.1 * u(rng), 0.1 * u(rng));
      b.state.angular_velocity = Vec3(u(rng), u(rng), u(rng));
      b.state.static_friction = b.state.dynamic_friction = 0.0;
      b.state.bounciness = std::abs(u(rng));
      bodies.push_back(std::move(b));
    }
    std::vector<physics::RigidBody*> ptrs;
    for (auto& b : bodies) ptrs.push_back(&b);
    const auto momentum = [&] {
      Vec3 p = Vec3::Zero();
      for (const auto& b : bodies) p += b.state.mass * b.state.linear_velocity;
      return p;
    };
    const auto energy = [&] {
      double e = 0.0;
      for (const auto& b : bodies) e += b.kinetic_energy();
      return e;
    };
    double scale = 0.0;
    for (const auto& b : bodies) scale += b.state.mass * b.state.linear_velocity.norm();
    const Vec3 p0 = momentum();
    physics::PhysicsSolver solver;
    bool touched = false;
    for (int n = 1; n <= kConservationSteps; ++n) {
      const double before = energy();
      const auto events = solver.step(ptrs, Vec3::Zero(), static_cast<std::uint64_t>(n));
      const double after = energy();
      bool touching = false;
      for (const auto& ev : events) touching = touching || ev.state != physics::ContactState::exit;
      if (touching) {
        ++contact_steps;
        touched = true;
        const double rel = (after - before) / before;
        worst_e = std::max(worst_e, rel);
        if (rel > kEnergyRel) ++gains;
      }
    }
    scenes_with_contact += touched;
    worst_p = std::max(worst_p, (momentum() - p0).norm() / scale);
  }
  const double s = seconds_since(t0);
  const bool ok = worst_p <= kMomentumRel && gains == 0 && scenes_with_contact == kConservationScenes &&
                  s < kConservationSeconds;
  return {ok, fmt("%d scenes x %d steps, %d/%d scenes had contact, %d contact steps; worst momentum drift %.2e "
                  "(limit %.0e), worst energy gain per contact step %.2e (limit %.0e), %.1f s (limit %.0f s)",
                  kConservationScenes, kConservationSteps, scenes_with_contact, kConservationScenes, contact_steps,
                  worst_p, kMomentumRel, worst_e, kEnergyRel, s, kConservationSeconds)};
}

// ---- determinism ----

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Relative path -> contents, for every file under a directory.
std::map<std::string, std::string> snapshot_dir(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file()) out[fs::relative(e.path(), dir).generic_string()] = read_file(e.path());
  return out;
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("hullsim_accept_" + std::to_string(::getpid())) / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

Outcome determinism() {
  scenarios::ScenarioSpec spec;
  spec.kind = scenarios::ScenarioKind::stability;
  spec.seed = 3;
  spec.trials = 20;
  const fs::path a = scratch("stability_a"), b = scratch("stability_b");
  scenarios::write_scenario(spec, scenarios::generate_scenario(spec, lib(), tables()), a);
  scenarios::write_scenario(spec, scenarios::generate_scenario(spec, lib(), tables()), b);
  const auto fa = snapshot_dir(a), fb = snapshot_dir(b);
  const bool identical = fa == fb && fa.size() == 21;

  spec.trials = 50;
  int stood = 0, fell = 0;
  for (const auto& t : scenarios::generate_scenario(spec, lib(), tables()))
    t.manifest["labels"]["stood"].get<bool>() ? ++stood : ++fell;
  return {identical && stood > 0 && fell > 0,
          fmt("two runs of 20 trials: %zu files each, byte-identical: %s; 50 trials: %d stood, %d fell", fa.size(),
              identical ? "yes" : "no", stood, fell)};
}

// ---- hull ----

Outcome hull_oracle() {
  std::mt19937_64 rng(99);
  int agree = 0;
  for (int i = 0; i < kHullClouds; ++i) {
    const auto pts = oracle::random_cloud(rng, 6 + i % 15);
    const auto h = physics::quickhull(pts);
    std::set<std::size_t> got;
    for (const auto& v : h.vertices)
      for (std::size_t k = 0; k < pts.size(); ++k)
        if (pts[k] == v) got.insert(k);
    bool ok = got == oracle::brute_force_hull_vertices(pts);
    for (const auto& p : pts) ok = ok && h.contains(p, 1e-9);
    agree += ok;
  }
  std::vector<Vec3> cube;
  for (int k = 0; k < 8; ++k) cube.emplace_back(k & 1, (k >> 1) & 1, (k >> 2) & 1);
  const double cube_err = std::abs(physics::quickhull(cube).volume - 1.0);
  const double s = 1.0 / std::sqrt(2.0);
  const std::vector<Vec3> tet = {{0, 0, 0}, {s, s, 0}, {s, 0, s}, {0, s, s}};
  const double tet_err = std::abs(physics::quickhull(tet).volume - 1.0 / (6.0 * std::sqrt(2.0)));
  return {agree == kHullClouds && cube_err <= kVolumeTol && tet_err <= kVolumeTol,
          fmt("%d/%d clouds match the brute-force extreme-point and containment oracle; cube volume error %.1e, "
              "tetrahedron volume error %.1e (limit %.0e)",
              agree, kHullClouds, cube_err, tet_err, kVolumeTol)};
}

// ---- audio ----

physics::CollisionEvent impact(double speed) {
  physics::CollisionEvent e;
  e.a = {physics::BodyKind::object, 1};
  e.b = {physics::BodyKind::object, 2};
  e.relative_normal_speed = speed;
  e.state = physics::ContactState::enter;
  return e;
}

std::vector<std::string> audio_blobs(std::uint64_t seed) {
  auto s = fresh(seed);
  s.handle_payload(R"([{"$type": "create_empty_room", "width": 12, "length": 12},
                       {"$type": "add_object", "name": "ball_steel", "id": 1, "position": {"x": 0, "y": 1.0, "z": 0}},
                       {"$type": "add_object", "name": "ceramic_mug", "id": 2, "position": {"x": 0.8, "y": 0.6, "z": 0}},
                       {"$type": "add_object", "name": "block", "id": 3, "position": {"x": -0.7, "y": 0.4, "z": 0.2}},
                       {"$type": "create_avatar", "type": "A_Img_Caps_Kinematic", "avatar_id": "a"},
                       {"$type": "teleport_avatar_to", "avatar_id": "a", "position": {"x": 0, "y": 1.5, "z": -3}},
                       {"$type": "send_audio", "avatar_id": "a", "frequency": "always"}])");
  std::vector<std::string> out;
  for (int i = 0; i < 200; ++i)
    for (const auto& b : protocol::decode_response_payload(s.handle_payload("[]")).outputs)
      if (b.type_id == "audi") out.push_back(b.body.dump());
  return out;
}

Outcome audio_oracle() {
  const auto& t = *tables();
  std::size_t modes = 0, peaks = 0;
  int doubled = 0, occl = 0;
  double worst_ratio = 0.0, worst_db = 0.0;
  for (int i = 0; i < kImpacts; ++i) {
    Rng rng = audio::event_rng(7, static_cast<std::uint64_t>(i), 0);
    const AudioMaterial s = kAudioMaterials[rng() % 6], k = kAudioMaterials[rng() % 6];
    const double m1 = uniform(rng, 0.1, 10.0), m2 = uniform(rng, 0.1, 10.0), v = uniform(rng, 0.2, 1.5);
    const std::uint64_t substream = rng();
    Rng r1(substream), r2(substream);
    const auto clip = audio::synthesize_impact(impact(v), {s, m1}, {k, m2}, t, r1);
    const auto loud = audio::synthesize_impact(impact(2.0 * v), {s, m1}, {k, m2}, t, r2);
    const std::size_t n = oracle::next_pow2(std::max<std::size_t>(clip.samples.size(), 32768));
    const auto mag = oracle::magnitude_spectrum(clip.samples, n);
    const double bin = clip.sample_rate / static_cast<double>(n);
    for (const auto& m : clip.modes.modes) {
      ++modes;
      peaks += oracle::peak_near(mag, m.frequency, bin);
    }
    const double ratio = loud.raw_rms / clip.raw_rms;
    worst_ratio = std::max(worst_ratio, std::abs(ratio - 2.0));
    doubled += std::abs(ratio - 2.0) <= 1e-9;

    // Paired open/occluded render of a low single-mode clip at a seeded distance.
    audio::ModeSet low;
    low.modes.push_back({uniform(rng, 100.0, 250.0), uniform(rng, 2.0, 6.0), 1.0});
    auto tone = audio::render_modes(low, 0.5, t.config());
    Pose listener;
    tone.source_position = Vec3(uniform(rng, -2.0, 2.0), 0.0, uniform(rng, 1.0, 8.0));
    const auto open = audio::spatialize(tone, listener, false, t.config());
    const auto shut = audio::spatialize(tone, listener, true, t.config());
    const double db = 20.0 * std::log10(std::hypot(audio::rms(open.left), audio::rms(open.right)) /
                                        std::hypot(audio::rms(shut.left), audio::rms(shut.right)));
    worst_db = std::max(worst_db, std::abs(db - kOcclusionDb));
    occl += std::abs(db - kOcclusionDb) <= kOcclusionTol;
  }
  const auto run1 = audio_blobs(11), run2 = audio_blobs(11);
  const bool exact = !run1.empty() && run1 == run2;
  const bool ok = peaks == modes && doubled == kImpacts && occl == kImpacts && exact;
  return {ok, fmt("%zu/%zu modes found as FFT peaks within one bin over %d impacts; RMS doubles in %d/%d "
                  "(worst |ratio-2| %.1e); occlusion within %.1f dB of -%.0f dB in %d/%d (worst %.3f dB); "
                  "pipeline reruns: %zu clips, sample-exact: %s",
                  peaks, modes, kImpacts, doubled, kImpacts, worst_ratio, kOcclusionTol, kOcclusionDb, occl, kImpacts,
                  worst_db, run1.size(), exact ? "yes" : "no")};
}

// ---- capture ----

Outcome capture_algorithm() {
  scenarios::CaptureConfig cfg;
  cfg.seed = 1;
  const auto models = scenarios::default_capture_models();
  const auto a = scenarios::capture_dataset(cfg, models, lib());
  const auto b = scenarios::capture_dataset(cfg, models, lib());
  int passing = 0;
  for (std::size_t m = 0; m < models.size(); ++m) {
    scenarios::CaptureStage stage(lib(), cfg, models[m], m);
    for (const auto& shot : a.shots) {
      if (shot.model != models[m]) continue;
      const auto [unocc, occ] = stage.grayscales(shot, cfg.positional_resolution);
      passing += scenarios::accepts(cfg, unocc, occ) && stage.image(shot) == a.images[&shot - a.shots.data()];
    }
  }
  const fs::path da = scratch("capture_a"), db = scratch("capture_b");
  scenarios::write_capture(a, cfg, da);
  scenarios::write_capture(b, cfg, db);
  const auto fa = snapshot_dir(da), fb = snapshot_dir(db);
  std::size_t images = 0;
  for (const auto& [name, _] : fa) images += name.ends_with(".ppm");
  const bool identical = fa == fb;
  const std::size_t expected = models.size() * static_cast<std::size_t>(cfg.shots_per_model);
  return {images == expected && passing == static_cast<int>(expected) && identical,
          fmt("%zu images (expected %zu); %d/%zu cached poses re-render to a passing grayscale (%s > %.2f) and the "
              "same image; reruns byte-identical: %s",
              images, expected, passing, expected, scenarios::to_string(cfg.criterion), cfg.grayscale_threshold,
              identical ? "yes" : "no")};
}

// ---- sensors ----

// Every triangle of every posed hull, plus analytic spheres.
std::pair<std::uint64_t, double> brute_pixel(const World& w, const Vec3& o, const Vec3& d, double near) {
  double best = kInf;
  std::uint64_t id = sensors::kNoObject;
  for (const auto& [oid, obj] : w.objects()) {
    const Mat3 r = obj.body.pose.orientation.toRotationMatrix();
    for (const auto& c : obj.body.colliders) {
      if (c.kind == physics::Collider::Kind::sphere) {
        const Vec3 m = o - (obj.body.pose.position + r * c.center);
        const double b = m.dot(d), cc = m.squaredNorm() - c.radius * c.radius;
        const double disc = b * b - cc;
        if (cc > 0 && disc >= 0) {
          const double t = -b - std::sqrt(disc);
          if (t >= near && (t < best || (t == best && oid < id))) best = t, id = oid;
        }
        continue;
      }
      for (const auto& tri : c.hull->triangles) {
        const Vec3 a = obj.body.pose.position + r * c.hull->vertices[tri[0]];
        const Vec3 b = obj.body.pose.position + r * c.hull->vertices[tri[1]];
        const Vec3 e = obj.body.pose.position + r * c.hull->vertices[tri[2]];
        const double t = oracle::ray_triangle(o, d, a, b, e);
        if (t >= near && t < kInf && (t < best || (t == best && oid < id))) best = t, id = oid;
      }
    }
  }
  return {id, best};
}

Outcome sensor_oracle() {
  std::mt19937_64 rng(4242);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const std::vector<std::string> models = {"unit_cube", "iron_box", "toy_pentagon", "toy_octahedron", "toy_prism",
                                           "block",     "ball_rubber", "ceramic_mug", "small_table_green_marble"};
  std::size_t pixels = 0, id_miss = 0, depth_miss = 0, hits = 0;
  double worst = 0.0;
  for (int scene = 0; scene < kSensorScenes; ++scene) {
    World w(lib());
    const int n = 3 + static_cast<int>(rng() % 5);
    for (int i = 0; i < n; ++i) {
      const auto& rec = lib()->get(models[rng() % models.size()]);
      const Vec3 pos(u(rng), 0.5 * u(rng), u(rng));
      const Vec3 rot(180 * u(rng), 180 * u(rng), 180 * u(rng));
      w.add_object(rec, pos, rot, 0.5 + 0.5 * (u(rng) + 1.0), static_cast<std::uint64_t>(i));
    }
    sensors::Camera cam;
    cam.pose.position = 3.0 * Vec3(u(rng), 0.5 + 0.5 * u(rng), u(rng)).normalized();
    cam.pose.orientation = look_rotation((Vec3(0.1 * u(rng), 0.1 * u(rng), 0.1 * u(rng)) - cam.pose.position).normalized());
    cam.intrinsics.width = cam.intrinsics.height = 32;
    const auto img = sensors::render(sensors::snapshot(w), cam);
    for (int row = 0; row < 32; ++row)
      for (int col = 0; col < 32; ++col) {
        ++pixels;
        const auto [id, t] = brute_pixel(w, cam.pose.position, cam.ray(col, row), cam.intrinsics.near_clip);
        if (id != img.id_at(col, row)) {
          ++id_miss;
          continue;
        }
        const double got = img.depth_at(col, row);
        if (t == kInf) {
          depth_miss += got != kInf;
          continue;
        }
        ++hits;
        const double rel = std::abs(got - t) / t;
        worst = std::max(worst, rel);
        depth_miss += rel > kDepthRel;
      }
  }
  return {id_miss == 0 && depth_miss == 0 && hits > 0,
          fmt("%d scenes, %zu pixels (%zu hits): %zu id mismatches, %zu depth mismatches, worst relative depth "
              "error %.1e (limit %.0e)",
              kSensorScenes, pixels, hits, id_miss, depth_miss, worst, kDepthRel)};
}

// ---- throughput ----

Outcome throughput() {
  const auto rep = server::run_bench(lib(), tables(), 2000, 20);
  return {rep.steps_per_second >= kMinStepsPerSecond,
          fmt("%d bodies, transforms every frame: %.0f steps/s (floor %.0f); 256x256 images: %.1f frames/s",
              rep.bodies, rep.steps_per_second, kMinStepsPerSecond, rep.image_fps)};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"protocol conformance", protocol_conformance},
      {"golden transcript settle", golden_transcript},
      {"physics conservation", physics_conservation},
      {"determinism", determinism},
      {"hull oracle", hull_oracle},
      {"audio oracle", audio_oracle},
      {"capture algorithm", capture_algorithm},
      {"sensor oracle", sensor_oracle},
      {"throughput reference", throughput},
  };
  int failed = 0;
  for (const auto& [name, run] : criteria) {
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << "  " << name << ": " << o.detail
              << fmt("  [%.1f s]", seconds_since(t0)) << std::endl;
  }
  fs::remove_all(fs::temp_directory_path() / ("hullsim_accept_" + std::to_string(::getpid())));
  std::cout << (criteria.size() - failed) << "/" << criteria.size() << " criteria passed" << std::endl;
  return failed;
}
