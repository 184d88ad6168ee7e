#include "hullsim/world/library.hpp"

#include <fstream>

namespace hullsim {

using nlohmann::json;

namespace {

constexpr std::array<const char*, 6> kMaterialNames = {"cardboard", "wood", "metal", "ceramic", "glass", "plastic"};

const char* collider_name(ColliderSource c) {
  switch (c) {
    case ColliderSource::hull: return "hull";
    case ColliderSource::parts: return "parts";
    case ColliderSource::sphere: return "sphere";
  }
  return "hull";
}

}  // namespace

const char* to_string(AudioMaterial m) { return kMaterialNames[static_cast<std::size_t>(m)]; }

AudioMaterial audio_material_from_string(std::string_view s) {
  for (std::size_t i = 0; i < kMaterialNames.size(); ++i)
    if (s == kMaterialNames[i]) return static_cast<AudioMaterial>(i);
  throw UnknownMaterial("unknown audio material '" + std::string(s) + "'");
}

void ModelRecord::validate() const {
  auto fail = [&](const std::string& why) { throw InvalidRecord("record '" + name + "': " + why); };
  if (name.empty()) fail("empty name");
  if (mesh_uri.empty()) fail("empty mesh_uri");
  if (!(density > 0.0) || !std::isfinite(density)) fail("density must be > 0");
  if (!(scale_factor > 0.0) || !std::isfinite(scale_factor)) fail("scale_factor must be > 0");
  if (!(bounciness >= 0.0 && bounciness <= 1.0)) fail("bounciness must lie in [0, 1]");
  if (!(static_friction >= 0.0) || !(dynamic_friction >= 0.0)) fail("friction must be >= 0");
}

ModelRecord ModelRecord::from_json(const json& j) {
  ModelRecord r;
  try {
    r.name = j.at("name").get<std::string>();
    r.mesh_uri = j.at("mesh_uri").get<std::string>();
    r.scale_factor = j.value("scale_factor", 1.0);
    r.wcategory = j.value("wcategory", std::string{});
    r.density = j.at("density").get<double>();
    r.audio_material = audio_material_from_string(j.value("audio_material", std::string("wood")));
    if (j.contains("default_friction")) {
      const auto& f = j.at("default_friction");
      r.static_friction = f.at(0).get<double>();
      r.dynamic_friction = f.at(1).get<double>();
    }
    r.bounciness = j.value("default_bounciness", 0.0);
    const std::string collider = j.value("collider", std::string("hull"));
    if (collider == "hull") {
      r.collider = ColliderSource::hull;
    } else if (collider == "parts") {
      r.collider = ColliderSource::parts;
    } else if (collider == "sphere") {
      r.collider = ColliderSource::sphere;
    } else {
      throw InvalidRecord("unknown collider source '" + collider + "'");
    }
  } catch (const json::exception& e) {
    throw InvalidRecord(std::string("malformed record: ") + e.what());
  } catch (const UnknownMaterial& e) {
    throw InvalidRecord(e.what());
  }
  r.validate();
  return r;
}

json ModelRecord::to_json() const {
  return {{"name", name},
          {"mesh_uri", mesh_uri},
          {"scale_factor", scale_factor},
          {"wcategory", wcategory},
          {"density", density},
          {"audio_material", hullsim::to_string(audio_material)},
          {"default_friction", {static_friction, dynamic_friction}},
          {"default_bounciness", bounciness},
          {"collider", collider_name(collider)}};
}

ModelLibrary ModelLibrary::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw LibraryNotFound("cannot open model library " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw LibraryNotFound("model library " + path.string() + " is not valid JSON: " + e.what());
  }
  if (!doc.is_array()) throw InvalidRecord("model library must be a JSON array of records");
  ModelLibrary lib;
  lib.path_ = std::filesystem::absolute(path);
  for (const auto& item : doc) {
    ModelRecord r = ModelRecord::from_json(item);
    if (lib.index_.contains(r.name)) throw InvalidRecord("duplicate record name '" + r.name + "'");
    lib.index_.emplace(r.name, lib.records_.size());
    lib.records_.push_back(std::move(r));
  }
  return lib;
}

std::filesystem::path bundled_library_path() { return std::filesystem::path(HULLSIM_ASSET_DIR) / "models.json"; }

ModelLibrary ModelLibrary::bundled() { return load(bundled_library_path()); }

const ModelRecord& ModelLibrary::get(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw RecordNotFound("no record named '" + name + "'");
  return records_[it->second];
}

std::filesystem::path ModelLibrary::mesh_path(const ModelRecord& record) const {
  return path_.parent_path() / record.mesh_uri;
}

std::string ModelLibrary::url(const ModelRecord& record) const { return "file://" + mesh_path(record).string(); }

ModelRecord load_record(const std::filesystem::path& library_path, const std::string& name) {
  return ModelLibrary::load(library_path).get(name);
}

}  // namespace hullsim
