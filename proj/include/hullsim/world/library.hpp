#pragma once

#include <json.hpp>

#include <array>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace hullsim {

struct LibraryNotFound : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct RecordNotFound : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct InvalidRecord : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct UnknownMaterial : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

enum class AudioMaterial { cardboard, wood, metal, ceramic, glass, plastic };

inline constexpr std::array<AudioMaterial, 6> kAudioMaterials = {
    AudioMaterial::cardboard, AudioMaterial::wood, AudioMaterial::metal,
    AudioMaterial::ceramic, AudioMaterial::glass, AudioMaterial::plastic};

const char* to_string(AudioMaterial m);
AudioMaterial audio_material_from_string(std::string_view s);  // throws UnknownMaterial

// How the collision shape of a record is derived from its mesh.
//   hull   - one convex hull over every vertex
//   parts  - one hull per OBJ part (precomputed convex decomposition)
//   sphere - analytic sphere inscribed in the mesh bounds
enum class ColliderSource { hull, parts, sphere };

struct ModelRecord {
  std::string name;
  std::string mesh_uri;  // relative to the library file
  double scale_factor = 1.0;
  std::string wcategory;
  double density = 1000.0;
  AudioMaterial audio_material = AudioMaterial::wood;
  double static_friction = 0.5;
  double dynamic_friction = 0.4;
  double bounciness = 0.0;
  ColliderSource collider = ColliderSource::hull;

  // Throws InvalidRecord.
  void validate() const;

  static ModelRecord from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

class ModelLibrary {
 public:
  ModelLibrary() = default;

  // Throws LibraryNotFound if the file is missing or unreadable, InvalidRecord
  // for a bad record or a duplicate name.
  static ModelLibrary load(const std::filesystem::path& path);
  static ModelLibrary bundled();

  const ModelRecord& get(const std::string& name) const;  // throws RecordNotFound
  bool contains(const std::string& name) const { return index_.contains(name); }
  const std::vector<ModelRecord>& records() const { return records_; }
  const std::filesystem::path& path() const { return path_; }

  std::filesystem::path mesh_path(const ModelRecord& record) const;
  // "file://" URL of the record's mesh, as a client would send it.
  std::string url(const ModelRecord& record) const;

 private:
  std::filesystem::path path_;
  std::vector<ModelRecord> records_;
  std::map<std::string, std::size_t> index_;
};

std::filesystem::path bundled_library_path();

// Single lookup without keeping the library around.
ModelRecord load_record(const std::filesystem::path& library_path, const std::string& name);

}  // namespace hullsim
