#pragma once

#include "hullsim/audio/impact.hpp"
#include "hullsim/world/world.hpp"

#include <json.hpp>

#include <array>
#include <filesystem>
#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace hullsim::scenarios {

enum class ScenarioKind {
  binary_collisions,
  complex_collisions,
  object_occlusion,
  object_permanence,
  stability,
  containment,
  sliding_rolling,
  bouncing,
};

inline constexpr std::array<ScenarioKind, 8> kScenarioKinds = {
    ScenarioKind::binary_collisions, ScenarioKind::complex_collisions, ScenarioKind::object_occlusion,
    ScenarioKind::object_permanence, ScenarioKind::stability,          ScenarioKind::containment,
    ScenarioKind::sliding_rolling,   ScenarioKind::bouncing};

const char* to_string(ScenarioKind k);
ScenarioKind scenario_kind_from_string(const std::string& s);  // throws std::invalid_argument

struct ScenarioSpec {
  ScenarioKind kind = ScenarioKind::stability;
  std::uint64_t seed = 0;
  int trials = 10;
  int steps_per_trial = 500;
  double dt = 0.01;
  bool audio = false;       // write a WAV per audible impact
  int frame_every = 5;      // id-pass cadence for the occlusion kinds
  int frame_resolution = 64;

  void validate() const;  // throws std::invalid_argument
  nlohmann::json to_json() const;
};

struct TrialRecord {
  int trial = 0;
  nlohmann::json manifest;  // spawns, parameters, labels
  std::string steps;        // JSON lines, one per step
  std::vector<std::pair<std::string, std::string>> wavs;  // file name, bytes
};

TrialRecord run_trial(const ScenarioSpec& spec, int trial, std::shared_ptr<const ModelLibrary> library,
                      std::shared_ptr<const audio::MaterialTables> tables);

// Trials run in parallel, each with its own world and streams; output is in trial order.
std::vector<TrialRecord> generate_scenario(const ScenarioSpec& spec, std::shared_ptr<const ModelLibrary> library,
                                           std::shared_ptr<const audio::MaterialTables> tables);

// <out>/trial_NNNN.jsonl, <out>/manifest.json, <out>/audio/*.wav
void write_scenario(const ScenarioSpec& spec, const std::vector<TrialRecord>& trials, const std::filesystem::path& out_dir);

}  // namespace hullsim::scenarios
