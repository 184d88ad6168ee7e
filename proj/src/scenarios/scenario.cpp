#include "hullsim/scenarios/scenario.hpp"

#include "hullsim/commands/session.hpp"
#include "hullsim/core/base64.hpp"
#include "hullsim/sensors/render.hpp"

#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <functional>
#include <map>
#include <optional>

namespace hullsim::scenarios {

using nlohmann::json;

const char* to_string(ScenarioKind k) {
  switch (k) {
    case ScenarioKind::binary_collisions: return "binary_collisions";
    case ScenarioKind::complex_collisions: return "complex_collisions";
    case ScenarioKind::object_occlusion: return "object_occlusion";
    case ScenarioKind::object_permanence: return "object_permanence";
    case ScenarioKind::stability: return "stability";
    case ScenarioKind::containment: return "containment";
    case ScenarioKind::sliding_rolling: return "sliding_rolling";
    case ScenarioKind::bouncing: return "bouncing";
  }
  return "?";
}

ScenarioKind scenario_kind_from_string(const std::string& s) {
  for (auto k : kScenarioKinds)
    if (s == to_string(k)) return k;
  // Hyphenated and short spellings.
  std::string t = s;
  for (auto& c : t)
    if (c == '-') c = '_';
  for (auto k : kScenarioKinds)
    if (t == to_string(k)) return k;
  if (t == "occlusion") return ScenarioKind::object_occlusion;
  if (t == "permanence") return ScenarioKind::object_permanence;
  throw std::invalid_argument("unknown scenario kind '" + s + "'");
}

void ScenarioSpec::validate() const {
  if (trials < 0) throw std::invalid_argument("trial count must be >= 0");
  if (steps_per_trial < 1) throw std::invalid_argument("steps per trial must be positive");
  if (!(dt > 0.0 && dt <= 0.1)) throw std::invalid_argument("dt must lie in (0, 0.1]");
  if (frame_every < 1 || frame_resolution < 1) throw std::invalid_argument("bad frame settings");
}

json ScenarioSpec::to_json() const {
  return {{"kind", to_string(kind)}, {"seed", seed},   {"trials", trials},           {"steps_per_trial", steps_per_trial},
          {"dt", dt},                {"audio", audio}, {"frame_every", frame_every}, {"frame_resolution", frame_resolution}};
}

namespace {

json arr(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }
json arr(const Quat& q) { return json::array({q.x(), q.y(), q.z(), q.w()}); }

const std::vector<std::string> kToys = {"toy_pentagon", "toy_prism", "toy_octahedron", "toy_cylinder", "toy_pyramid"};

struct History {
  std::map<std::uint64_t, Vec3> start_center;
  std::map<std::uint64_t, std::vector<Vec3>> center;  // after each step
  std::map<std::uint64_t, std::vector<Aabb>> box;
  std::vector<std::pair<int, physics::CollisionEvent>> enters;
  std::vector<std::pair<int, std::map<std::uint64_t, int>>> visibility;
};

struct Trial {
  Trial(std::shared_ptr<const ModelLibrary> lib, const ScenarioSpec& s, int index)
      : spec(s), world(std::move(lib), config_for(s, index)), rng(derive_seed(s.seed, 0x5CE0 + int(s.kind), index)) {}

  static WorldConfig config_for(const ScenarioSpec& s, int index) {
    WorldConfig c;
    c.seed = derive_seed(s.seed, 0xA0D1, static_cast<std::uint64_t>(index));
    c.solver.dt = s.dt;
    return c;
  }

  const ScenarioSpec& spec;
  World world;
  Rng rng;
  json spawns = json::array();
  json params = json::object();
  std::map<std::string, std::vector<std::uint64_t>> roles;
  std::optional<sensors::Camera> camera;
  std::function<void(Trial&, int)> before_step;
  std::uint64_t next_id = 1;

  SceneObject& spawn(const std::string& name, const Vec3& pos, const Vec3& rot, const std::string& role,
                     std::optional<double> scale = std::nullopt) {
    const auto& rec = world.library().get(name);
    const double s = scale.value_or(rec.scale_factor);
    auto& obj = world.add_object(rec, pos, rot, s, next_id++);
    roles[role].push_back(obj.id);
    spawns.push_back({{"id", obj.id}, {"model", name},      {"role", role},        {"position", arr(pos)},
                      {"rotation", arr(rot)}, {"scale", s}, {"mass", obj.body.state.mass}});
    return obj;
  }

  // Random friction, bounciness and mass; recorded on the spawn entry.
  void randomize_physics(std::uint64_t id, double max_bounce = 0.7) {
    const double mu_s = uniform(rng, 0.2, 0.9);
    const double mu_d = mu_s * uniform(rng, 0.6, 0.95);
    const double bounce = uniform(rng, 0.0, max_bounce);
    const double mass = world.object(id).body.state.mass * uniform(rng, 0.5, 2.0);
    world.set_physic_material(id, mu_d, mu_s, bounce);
    world.set_mass(id, mass);
    for (auto& s : spawns)
      if (s["id"] == id) {
        s["static_friction"] = mu_s;
        s["dynamic_friction"] = mu_d;
        s["bounciness"] = bounce;
        s["mass"] = mass;
      }
  }

  bool clear_of_others(std::uint64_t id, double margin = 0.01) const {
    Aabb box = world.object(id).body.world_bounds();
    box.min -= Vec3::Constant(margin);
    box.max += Vec3::Constant(margin);
    for (const auto& [oid, o] : world.objects())
      if (oid != id && o.body.world_bounds().overlaps(box)) return false;
    return true;
  }

  // Bottom of the object at `base_y`; keeps x/z of the origin.
  void rest_bottom_at(std::uint64_t id, double base_y) {
    const double bottom = world.object(id).body.world_bounds().min.y();
    Vec3 p = world.object(id).pose().position;
    p.y() += base_y - bottom;
    world.teleport_object(id, p);
    for (auto& s : spawns)
      if (s["id"] == id) s["position"] = arr(p);
  }

  std::uint64_t only(const std::string& role) const { return roles.at(role).front(); }
};

physics::BodyRef obj_ref(std::uint64_t id) { return {physics::BodyKind::object, id}; }

bool involves(const physics::CollisionEvent& e, std::uint64_t id) { return e.a == obj_ref(id) || e.b == obj_ref(id); }

const std::string& pick(Rng& rng, const std::vector<std::string>& v) {
  return v[static_cast<std::size_t>(uniform_int(rng, 0, static_cast<int>(v.size()) - 1))];
}

Vec3 horizontal_dir(Rng& rng) {
  const double a = uniform(rng, 0.0, 2.0 * kPi);
  return Vec3(std::cos(a), 0.0, std::sin(a));
}

sensors::Camera make_camera(const Vec3& eye, const Vec3& target, int res) {
  sensors::Camera c;
  c.pose.position = eye;
  c.pose.orientation = look_rotation((target - eye).normalized());
  c.intrinsics.width = res;
  c.intrinsics.height = res;
  return c;
}

// ---- recipes ----

void build_binary(Trial& t) {
  const auto& a_name = pick(t.rng, kToys);
  const auto& b_name = pick(t.rng, kToys);
  const Vec3 a_pos(uniform(t.rng, -1.0, 1.0), 0.0, uniform(t.rng, -1.0, 1.0));
  const Vec3 dir = horizontal_dir(t.rng);
  const double gap = uniform(t.rng, 0.05, 0.5);
  const auto a = t.spawn(a_name, a_pos, Vec3(0, uniform(t.rng, 0, 360), 0), "pusher").id;
  const auto b = t.spawn(b_name, a_pos + Vec3(0, 0, 3), Vec3(0, uniform(t.rng, 0, 360), 0), "target").id;
  const auto radius = [&](std::uint64_t id) {
    const Vec3 e = t.world.object(id).body.world_bounds().extent();
    return 0.5 * std::max(e.x(), e.z());
  };
  const Vec3 b_pos = a_pos + (radius(a) + radius(b) + gap) * dir;
  t.world.teleport_object(b, b_pos);
  t.spawns[1]["position"] = arr(b_pos);
  t.params["gap"] = gap;
  t.randomize_physics(a);
  t.randomize_physics(b);
  const Vec3 aim = t.world.object(b).body.pose.position - t.world.object(a).body.pose.position;
  const Vec3 impulse = uniform(t.rng, 1.0, 20.0) * aim.normalized();
  t.world.apply_force(a, impulse);
  t.params["impulse"] = arr(impulse);
  t.params["pushed"] = a;
}

void build_complex(Trial& t) {
  static const std::vector<std::string> pool = {"toy_pentagon", "toy_prism", "toy_octahedron", "toy_cylinder",
                                                "toy_pyramid",  "block",     "ball_rubber",    "ball_steel",
                                                "ball_glass",   "ceramic_mug"};
  const int n = uniform_int(t.rng, 3, 6);
  t.params["count"] = n;
  for (int i = 0; i < n; ++i) {
    const auto& name = pick(t.rng, pool);
    for (int tries = 0;; ++tries) {
      const Vec3 pos(uniform(t.rng, -0.8, 0.8), 0.0, uniform(t.rng, -0.8, 0.8));
      const Vec3 rot(uniform(t.rng, 0, 360), uniform(t.rng, 0, 360), uniform(t.rng, 0, 360));
      const double height = uniform(t.rng, 0.02, 0.75);
      const auto id = t.spawn(name, pos, rot, "dropped").id;
      t.rest_bottom_at(id, height);
      if (t.clear_of_others(id) || tries >= 50) {
        t.randomize_physics(id);
        break;
      }
      t.world.destroy_object(id);
      t.roles["dropped"].pop_back();
      t.spawns.erase(t.spawns.end() - 1);
      --t.next_id;
    }
  }
}

void build_occlusion(Trial& t) {
  static const std::vector<std::string> big = {"occluder_board", "cardboard_box", "unit_cube"};
  const auto& big_name = pick(t.rng, big);
  const double big_yaw = uniform(t.rng, 0, 360);
  const auto b = t.spawn(big_name, Vec3::Zero(), Vec3(0, big_yaw, 0), "big",
                         big_name == "unit_cube" ? std::optional<double>(0.5) : std::nullopt)
                     .id;
  const double angle = uniform(t.rng, 0.0, 2.0 * kPi);
  const Vec3 dir(std::cos(angle), 0.0, std::sin(angle));
  const double dist = uniform(t.rng, 0.4, 1.2);
  const auto s = t.spawn(pick(t.rng, kToys), dist * dir, Vec3(0, uniform(t.rng, 0, 360), 0), "small").id;
  (void)s;
  const Vec3 center = t.world.object(b).body.world_bounds().center();
  const double cam_dist = uniform(t.rng, 2.0, 4.0);
  const double cam_height = uniform(t.rng, 0.3, 1.0);
  const double sweep = deg_to_rad(uniform(t.rng, 15.0, 40.0));
  t.params["camera_distance"] = cam_dist;
  t.params["camera_height"] = cam_height;
  t.params["sweep_deg"] = rad_to_deg(sweep);
  // Camera opposite the small model, sweeping across the line of sight.
  const int steps = t.spec.steps_per_trial;
  const int res = t.spec.frame_resolution;
  t.before_step = [=](Trial& tr, int step) {
    const double phase = steps > 1 ? static_cast<double>(step) / (steps - 1) : 0.0;
    const double a = angle + kPi + sweep * (2.0 * phase - 1.0);
    const Vec3 eye = center + cam_dist * Vec3(std::cos(a), 0.0, std::sin(a)) + Vec3(0, cam_height, 0);
    tr.camera = make_camera(eye, center, res);
  };
  t.before_step(t, 0);
}

void build_permanence(Trial& t) {
  static const std::vector<std::string> occluders = {"occluder_board", "cardboard_box", "block"};
  static const std::vector<std::string> balls = {"ball_rubber", "ball_steel", "ball_glass", "sphere"};
  const auto& occ = pick(t.rng, occluders);
  std::optional<double> scale;
  if (occ == "block") scale = 4.0;
  if (occ == "cardboard_box") scale = 2.0;
  t.spawn(occ, Vec3::Zero(), Vec3::Zero(), "occluder", scale);
  const auto& ball_name = pick(t.rng, balls);
  const double start = uniform(t.rng, 1.0, 2.0);
  const double behind = uniform(t.rng, 0.3, 0.6);
  const auto ball = t.spawn(ball_name, Vec3(-start, 0, behind), Vec3::Zero(), "ball",
                            ball_name == "sphere" ? std::optional<double>(0.3) : std::nullopt)
                        .id;
  t.randomize_physics(ball, 0.5);
  const double speed = uniform(t.rng, 1.0, 3.0);
  const Vec3 impulse = Vec3(t.world.object(ball).body.state.mass * speed, 0.0, 0.0);
  t.world.apply_force(ball, impulse);
  t.params["speed"] = speed;
  t.params["impulse"] = arr(impulse);
  t.camera = make_camera(Vec3(0, 0.4, -3.0), Vec3(0, 0.2, 0), t.spec.frame_resolution);
}

void build_stability(Trial& t) {
  static const std::vector<std::string> shapes = {"block", "toy_cylinder", "cardboard_box", "unit_cube"};
  static const std::vector<std::string> algorithms = {"centered", "random", "staircase"};
  const int n = uniform_int(t.rng, 4, 7);
  const auto& algo = pick(t.rng, algorithms);
  t.params["count"] = n;
  t.params["algorithm"] = algo;
  const Vec3 stair_dir = horizontal_dir(t.rng);
  double top = 0.0;
  Vec3 base_xz = Vec3::Zero();
  double base_width = 0.0;
  for (int i = 0; i < n; ++i) {
    const auto& name = pick(t.rng, shapes);
    std::optional<double> scale;
    if (name == "block") scale = uniform(t.rng, 1.0, 2.0);
    if (name == "unit_cube") scale = uniform(t.rng, 0.15, 0.3);
    if (name == "cardboard_box") scale = uniform(t.rng, 0.5, 1.0);
    if (name == "toy_cylinder") scale = uniform(t.rng, 0.8, 1.5);
    const double yaw = uniform(t.rng, 0, 360);
    double offset = 0.0;
    Vec3 dir = horizontal_dir(t.rng);
    if (i > 0) {
      if (algo == "centered") offset = uniform(t.rng, 0.0, 0.1);
      if (algo == "random") offset = uniform(t.rng, 0.0, 0.6);
      if (algo == "staircase") {
        offset = uniform(t.rng, 0.15, 0.6);
        dir = stair_dir;
      }
    }
    const Vec3 pos = base_xz + offset * base_width * dir;
    const auto id = t.spawn(name, Vec3(pos.x(), 0.0, pos.z()), Vec3(0, yaw, 0), "stack", scale).id;
    t.rest_bottom_at(id, i == 0 ? 0.0 : top + 0.001);
    const Aabb box = t.world.object(id).body.world_bounds();
    top = box.max.y();
    base_xz = Vec3(box.center().x(), 0.0, box.center().z());
    base_width = std::min(box.extent().x(), box.extent().z());
  }
}

void build_containment(Trial& t) {
  static const std::vector<std::string> small = {"ball_glass", "ball_steel", "toy_octahedron", "ball_rubber"};
  const auto bowl = t.spawn("basket", Vec3::Zero(), Vec3(0, uniform(t.rng, 0, 360), 0), "container").id;
  const double r = uniform(t.rng, 0.0, 0.12);
  const Vec3 pos = r * horizontal_dir(t.rng);
  const auto& name = pick(t.rng, small);
  const auto s = t.spawn(name, pos, Vec3(0, uniform(t.rng, 0, 360), 0), "contained").id;
  t.rest_bottom_at(s, 0.03 + uniform(t.rng, 0.02, 0.15));
  t.randomize_physics(s);
  const double bowl_mass = t.world.object(bowl).body.state.mass;
  json pushes = json::array();
  std::map<int, Vec3> schedule;
  for (int k = 1; k <= 3; ++k) {
    const int step = k * t.spec.steps_per_trial / 5;
    const Vec3 impulse = bowl_mass * uniform(t.rng, 0.1, 0.4) * horizontal_dir(t.rng);
    schedule[step] = impulse;
    pushes.push_back({{"step", step}, {"impulse", arr(impulse)}});
  }
  t.params["container_impulses"] = pushes;
  t.before_step = [schedule, bowl](Trial& tr, int step) {
    if (auto it = schedule.find(step); it != schedule.end()) tr.world.apply_force(bowl, it->second);
  };
}

void build_sliding(Trial& t) {
  static const std::vector<std::string> pool = {"toy_cylinder", "toy_prism", "block", "ball_rubber", "ball_steel",
                                                "toy_pentagon"};
  const auto table = t.spawn("small_table_green_marble", Vec3::Zero(), Vec3::Zero(), "table").id;
  const Aabb tb = t.world.object(table).body.world_bounds();
  const int n = uniform_int(t.rng, 2, 4);
  for (int i = 0; i < n; ++i) {
    const auto& name = pick(t.rng, pool);
    for (int tries = 0;; ++tries) {
      const Vec3 pos(uniform(t.rng, tb.min.x() + 0.15, tb.max.x() - 0.15), 0.0,
                     uniform(t.rng, tb.min.z() + 0.15, tb.max.z() - 0.15));
      const auto id = t.spawn(name, pos, Vec3(0, uniform(t.rng, 0, 360), 0), "object").id;
      t.rest_bottom_at(id, tb.max.y() + 0.001);
      if (t.clear_of_others(id, 0.005) || tries >= 50) {
        t.randomize_physics(id, 0.3);
        break;
      }
      t.world.destroy_object(id);
      t.roles["object"].pop_back();
      t.spawns.erase(t.spawns.end() - 1);
      --t.next_id;
    }
  }
  // Lift one edge of the table so the top tilts.
  const double mass = t.world.object(table).body.state.mass;
  const Vec3 point(uniform(t.rng, tb.min.x(), tb.max.x()), tb.max.y(), uniform(t.rng, tb.min.z(), tb.max.z()));
  const Vec3 edge = (uniform_int(t.rng, 0, 1) ? Vec3(std::copysign(1.0, point.x()) * tb.max.x(), point.y(), point.z())
                                              : Vec3(point.x(), point.y(), std::copysign(1.0, point.z()) * tb.max.z()));
  const Vec3 dir = (Vec3(0, 1, 0) + uniform(t.rng, 0.0, 0.5) * horizontal_dir(t.rng)).normalized();
  const Vec3 impulse = mass * uniform(t.rng, 1.0, 2.5) * dir;
  t.world.apply_force(table, impulse, edge);
  t.params["table_impulse"] = arr(impulse);
  t.params["table_point"] = arr(edge);
}

void build_bouncing(Trial& t) {
  for (int i = 0; i < 4; ++i) {
    for (int tries = 0;; ++tries) {
      const Vec3 pos(uniform(t.rng, -2.5, 2.5), 0.0, uniform(t.rng, -2.5, 2.5));
      const auto id = t.spawn("ramp", pos, Vec3(0, uniform(t.rng, 0, 360), 0), "ramp").id;
      if (t.clear_of_others(id) || tries >= 50) break;
      t.world.destroy_object(id);
      t.roles["ramp"].pop_back();
      t.spawns.erase(t.spawns.end() - 1);
      --t.next_id;
    }
  }
  const int n = uniform_int(t.rng, 2, 6);
  t.params["toys"] = n;
  for (int i = 0; i < n; ++i) {
    const auto& name = pick(t.rng, kToys);
    for (int tries = 0;; ++tries) {
      const Vec3 pos(uniform(t.rng, -2.0, 2.0), 0.0, uniform(t.rng, -2.0, 2.0));
      const Vec3 rot(uniform(t.rng, 0, 360), uniform(t.rng, 0, 360), uniform(t.rng, 0, 360));
      const auto id = t.spawn(name, pos, rot, "toy").id;
      t.rest_bottom_at(id, uniform(t.rng, 0.5, 1.5));
      if (t.clear_of_others(id) || tries >= 50) {
        const double mu_s = uniform(t.rng, 0.2, 0.9);
        const double bounce = uniform(t.rng, 0.4, 0.9);
        t.world.set_physic_material(id, mu_s * 0.8, mu_s, bounce);
        t.spawns.back()["bounciness"] = bounce;
        t.spawns.back()["static_friction"] = mu_s;
        const Vec3 v = uniform(t.rng, 0.5, 3.0) * (horizontal_dir(t.rng) + Vec3(0, uniform(t.rng, -0.5, 0.5), 0)).normalized();
        const Vec3 impulse = t.world.object(id).body.state.mass * v;
        t.world.apply_force(id, impulse);
        t.spawns.back()["impulse"] = arr(impulse);
        break;
      }
      t.world.destroy_object(id);
      t.roles["toy"].pop_back();
      t.spawns.erase(t.spawns.end() - 1);
      --t.next_id;
    }
  }
}

// ---- labels ----

double horizontal(const Vec3& v) { return std::hypot(v.x(), v.z()); }

json labels_for(const Trial& t, const History& h) {
  json l = json::object();
  const auto moved = [&](std::uint64_t id) { return h.center.at(id).back() - h.start_center.at(id); };
  switch (t.spec.kind) {
    case ScenarioKind::stability: {
      bool stood = true;
      double worst = 0.0;
      for (auto id : t.roles.at("stack")) {
        worst = std::max(worst, horizontal(moved(id)));
        if (!(horizontal(moved(id)) < 0.1)) stood = false;
      }
      l["stood"] = stood;
      l["outcome"] = stood ? "stood" : "fell";
      l["max_horizontal_displacement"] = worst;
      break;
    }
    case ScenarioKind::binary_collisions: {
      const auto a = t.only("pusher"), b = t.only("target");
      int first = -1;
      for (const auto& [step, e] : h.enters)
        if (involves(e, a) && involves(e, b)) {
          first = step;
          break;
        }
      l["collided"] = first >= 0;
      l["first_contact_step"] = first;
      break;
    }
    case ScenarioKind::complex_collisions: {
      int floor = 0;
      for (const auto& [step, e] : h.enters)
        if (e.a.kind == physics::BodyKind::environment || e.b.kind == physics::BodyKind::environment) ++floor;
      l["impacts"] = h.enters.size();
      l["environment_impacts"] = floor;
      break;
    }
    case ScenarioKind::object_occlusion:
    case ScenarioKind::object_permanence: {
      const auto target = t.only(t.spec.kind == ScenarioKind::object_occlusion ? "small" : "ball");
      int visible = 0, hidden = 0;
      // visible -> hidden -> visible
      int phase = 0;
      for (const auto& [step, counts] : h.visibility) {
        const bool seen = counts.contains(target);
        seen ? ++visible : ++hidden;
        if (phase == 0 && seen) phase = 1;
        else if (phase == 1 && !seen) phase = 2;
        else if (phase == 2 && seen) phase = 3;
      }
      l["visible_frames"] = visible;
      l["hidden_frames"] = hidden;
      if (t.spec.kind == ScenarioKind::object_occlusion)
        l["occluded_in_some_frames"] = visible > 0 && hidden > 0;
      else
        l["reemerged"] = phase == 3;
      break;
    }
    case ScenarioKind::containment: {
      const auto bowl = t.only("container"), s = t.only("contained");
      const auto& sc = h.center.at(s);
      const auto& boxes = h.box.at(bowl);
      int inside = 0;
      for (std::size_t k = 0; k < sc.size(); ++k) inside += boxes[k].contains(sc[k]);
      l["inside_fraction"] = sc.empty() ? 0.0 : static_cast<double>(inside) / sc.size();
      l["contained_at_end"] = !sc.empty() && boxes.back().contains(sc.back());
      break;
    }
    case ScenarioKind::sliding_rolling: {
      const auto table = t.only("table");
      const double top = h.center.at(table).back().y();
      json fell = json::object();
      int count = 0;
      for (auto id : t.roles.at("object")) {
        const bool off = h.center.at(id).back().y() < top - 0.05;
        fell[std::to_string(id)] = off;
        count += off;
      }
      l["fell_off"] = fell;
      l["fell_off_count"] = count;
      double travel = 0.0;
      for (auto id : t.roles.at("object")) travel = std::max(travel, horizontal(moved(id)));
      l["max_travel"] = travel;
      break;
    }
    case ScenarioKind::bouncing: {
      json bounces = json::object();
      for (auto id : t.roles.at("toy")) {
        int n = 0;
        for (const auto& [step, e] : h.enters) n += involves(e, id);
        bounces[std::to_string(id)] = n;
      }
      l["bounces"] = bounces;
      break;
    }
  }
  return l;
}

json event_json(const World& w, const physics::CollisionEvent& e) {
  const auto ref = [&](const physics::BodyRef& r) {
    const auto l = w.label(r);
    return l.kind == "avatar" ? json::array({l.kind, l.avatar_id}) : json::array({l.kind, l.id});
  };
  return {{"a", ref(e.a)},        {"b", ref(e.b)},          {"state", physics::to_string(e.state)},
          {"point", arr(e.point)}, {"normal", arr(e.normal)}, {"speed", e.relative_normal_speed},
          {"impulse", e.impulse}};
}

}  // namespace

TrialRecord run_trial(const ScenarioSpec& spec, int trial, std::shared_ptr<const ModelLibrary> library,
                      std::shared_ptr<const audio::MaterialTables> tables) {
  spec.validate();
  Trial t(std::move(library), spec, trial);
  t.world.create_empty_room(8.0, 8.0);
  switch (spec.kind) {
    case ScenarioKind::binary_collisions: build_binary(t); break;
    case ScenarioKind::complex_collisions: build_complex(t); break;
    case ScenarioKind::object_occlusion: build_occlusion(t); break;
    case ScenarioKind::object_permanence: build_permanence(t); break;
    case ScenarioKind::stability: build_stability(t); break;
    case ScenarioKind::containment: build_containment(t); break;
    case ScenarioKind::sliding_rolling: build_sliding(t); break;
    case ScenarioKind::bouncing: build_bouncing(t); break;
  }

  TrialRecord rec;
  rec.trial = trial;
  History h;
  for (const auto& [id, o] : t.world.objects()) h.start_center[id] = o.body.pose.position;

  std::string& out = rec.steps;
  for (int step = 0; step < spec.steps_per_trial; ++step) {
    if (t.before_step) t.before_step(t, step);
    const auto& events = t.world.step();
    json line = {{"step", step}, {"frame", t.world.frame()}};
    json objs = json::array();
    for (const auto& [id, o] : t.world.objects()) {
      const Pose p = o.pose();
      objs.push_back({{"id", id},
                      {"p", arr(p.position)},
                      {"q", arr(p.orientation)},
                      {"v", arr(o.body.state.linear_velocity)},
                      {"w", arr(o.body.state.angular_velocity)}});
      h.center[id].push_back(o.body.pose.position);
      h.box[id].push_back(o.body.world_bounds());
    }
    line["objects"] = std::move(objs);
    json evs = json::array();
    for (const auto& e : events) {
      if (e.state == physics::ContactState::stay) continue;
      evs.push_back(event_json(t.world, e));
      if (e.state == physics::ContactState::enter) h.enters.emplace_back(step, e);
    }
    line["collisions"] = std::move(evs);

    if (t.camera && step % spec.frame_every == 0) {
      const auto scene = sensors::snapshot(t.world);
      const auto img = sensors::render(scene, *t.camera);
      std::map<std::uint64_t, int> counts;
      for (auto id : img.ids)
        if (id != sensors::kNoObject) ++counts[id];
      json vis = json::object();
      for (const auto& [id, n] : counts) vis[std::to_string(id)] = n;
      const std::string ppm = sensors::encode_ppm(img, scene);
      line["id_pass"] = {{"width", img.width},
                         {"height", img.height},
                         {"visible", vis},
                         {"camera", {{"position", arr(t.camera->pose.position)}, {"rotation", arr(t.camera->pose.orientation)}}},
                         {"ppm_b64", base64_encode(std::span(reinterpret_cast<const std::uint8_t*>(ppm.data()), ppm.size()))}};
      h.visibility.emplace_back(step, std::move(counts));
    }

    if (spec.audio) {
      for (const auto& body : commands::audio_bodies(t.world, *tables, std::nullopt)) {
        char name[64];
        std::snprintf(name, sizeof name, "trial_%04d_step_%04d_event_%02d.wav", trial, step,
                      body["event_index"].get<int>());
        const auto bytes = base64_decode(body["data_b64"].get<std::string>());
        rec.wavs.emplace_back(name, std::string(bytes.begin(), bytes.end()));
      }
    }
    out += line.dump();
    out += '\n';
  }

  rec.manifest = {{"trial", trial}, {"spawns", t.spawns}, {"parameters", t.params}, {"labels", labels_for(t, h)}};
  json audio_files = json::array();
  for (const auto& [name, _] : rec.wavs) audio_files.push_back("audio/" + name);
  rec.manifest["audio"] = audio_files;
  return rec;
}

std::vector<TrialRecord> generate_scenario(const ScenarioSpec& spec, std::shared_ptr<const ModelLibrary> library,
                                           std::shared_ptr<const audio::MaterialTables> tables) {
  spec.validate();
  if (!tables) tables = std::make_shared<const audio::MaterialTables>(audio::MaterialTables::bundled());
  std::vector<TrialRecord> out(static_cast<std::size_t>(spec.trials));
  std::vector<std::exception_ptr> errors(out.size());
#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < spec.trials; ++i) {
    try {
      out[i] = run_trial(spec, i, library, tables);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

void write_scenario(const ScenarioSpec& spec, const std::vector<TrialRecord>& trials, const std::filesystem::path& out_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  json manifest = {{"spec", spec.to_json()}, {"trials", json::array()}};
  for (const auto& t : trials) {
    char name[32];
    std::snprintf(name, sizeof name, "trial_%04d.jsonl", t.trial);
    std::ofstream(out_dir / name, std::ios::binary) << t.steps;
    json entry = t.manifest;
    entry["steps_file"] = name;
    manifest["trials"].push_back(entry);
    if (!t.wavs.empty()) fs::create_directories(out_dir / "audio");
    for (const auto& [wav_name, bytes] : t.wavs) std::ofstream(out_dir / "audio" / wav_name, std::ios::binary) << bytes;
  }
  std::ofstream(out_dir / "manifest.json", std::ios::binary) << manifest.dump(2) << "\n";
}

}  // namespace hullsim::scenarios
