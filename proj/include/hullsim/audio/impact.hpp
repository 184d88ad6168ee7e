#pragma once

#include "hullsim/core/rng.hpp"
#include "hullsim/physics/solver.hpp"
#include "hullsim/world/library.hpp"

#include <json.hpp>

#include <array>
#include <filesystem>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace hullsim {
class World;
}

namespace hullsim::audio {

struct SubThresholdImpact : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct InvalidMaterialTable : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Band {
  double weight = 1.0;
  double log_mean = 0.0;  // ln(Hz)
  double log_sd = 0.0;
  double damping_mean = 10.0;  // 1/s
  double damping_sd = 0.0;
};

struct MaterialModeTable {
  AudioMaterial material = AudioMaterial::wood;
  std::vector<Band> bands;
  double amplitude_decay_exponent = 0.5;
  std::array<int, 2> mode_count{4, 12};
  double hardness = 0.5;  // as a striker, in [0, 1]

  void validate() const;  // throws InvalidMaterialTable
  // Mean and variance of ln(frequency) under the band mixture, before clamping.
  double mixture_log_mean() const;
  double mixture_log_variance() const;
};

struct AudioConfig {
  int sample_rate = 44100;
  double speed_threshold = 0.01;  // m/s
  double reference_mass = 1.0;    // kg
  double mass_exponent = 0.125;
  double gain_per_impulse = 0.1;  // peak scale per N*s
  double striker_tilt = 0.5;
  double max_duration = 3.0;  // s
  double headroom = 0.99;
  double min_frequency = 20.0;
  double max_frequency = 20000.0;
  double min_damping = 0.5;
  double min_q = 10.0;            // decay <= pi f / min_q
  double merge_bandwidths = 4.0;  // closer modes merge, in units of summed half-power bandwidth
  double min_spacing_hz = 5.0;
  double masking_fraction = 0.25;  // max neighbour-induced peak shift, in units of 1 / clip duration; 0 disables
  double occlusion_db = -12.0;
  double lowpass_hz = 1000.0;
  double speed_of_sound = 343.0;
};

class MaterialTables {
 public:
  static MaterialTables load(const std::filesystem::path& path);
  static MaterialTables bundled();
  static MaterialTables from_json(const nlohmann::json& j);

  const MaterialModeTable& get(AudioMaterial m) const;  // throws UnknownMaterial
  const AudioConfig& config() const { return config_; }
  AudioConfig& config() { return config_; }

 private:
  std::map<AudioMaterial, MaterialModeTable> tables_;
  AudioConfig config_;
};

std::filesystem::path bundled_materials_path();

struct Mode {
  double frequency = 0.0;  // Hz
  double decay = 0.0;      // 1/s
  double amplitude = 0.0;
};

struct ModeSet {
  std::vector<Mode> modes;    // ascending frequency
  std::vector<double> draws;  // raw random variates in draw order
};

ModeSet sample_modes(const MaterialTables& tables, AudioMaterial struck, AudioMaterial striker, Rng& rng);

// out[n] = sum_i a_i exp(-d_i t) sin(2 pi f_i t), t = n / sample_rate.
void synth_serial(std::span<const Mode> modes, int sample_rate, std::span<double> out);
// Same values, samples split across OpenMP threads.
void synth(std::span<const Mode> modes, int sample_rate, std::span<double> out);

struct Participant {
  AudioMaterial material = AudioMaterial::wood;
  double mass = 1.0;  // kg; infinity for static geometry
};

struct ImpactClip {
  int sample_rate = 44100;
  std::vector<float> samples;
  double gain = 0.0;            // applied before normalization
  double normalization = 1.0;   // <= 1; below 1 only when the peak would exceed headroom
  double raw_rms = 0.0;         // RMS before normalization
  Vec3 source_position = Vec3::Zero();
  physics::CollisionEvent event;
  ModeSet modes;                // after the mass shift

  double duration() const { return static_cast<double>(samples.size()) / sample_rate; }
};

double effective_mass(double m1, double m2);

// Seconds until every mode is 60 dB below the loudest one, capped at max_duration.
double clip_duration(std::span<const Mode> modes, const AudioConfig& config);
// First-order offset (Hz) of mode i's spectral peak caused by the other modes' tails.
double peak_shift(std::span<const Mode> modes, std::size_t i);

// Renders a mode set with a given gain. The clip lasts until every mode is 60 dB
// below the loudest mode's onset, capped at max_duration.
ImpactClip render_modes(ModeSet modes, double gain, const AudioConfig& config);

// Caps decay so every mode keeps a quality factor of at least min_q, then merges
// neighbours closer than the spacing rule. Input must be sorted; output stays sorted.
void consolidate_modes(ModeSet& set, const AudioConfig& config);

ImpactClip synthesize_impact(const physics::CollisionEvent& event, const Participant& struck,
                             const Participant& striker, const MaterialTables& tables, Rng& rng);

// Independent stream for one event.
inline Rng event_rng(std::uint64_t seed, std::uint64_t frame, std::uint64_t event_index) {
  return Rng(derive_seed(seed, frame, event_index));
}

struct StereoClip {
  int sample_rate = 44100;
  std::vector<float> left;
  std::vector<float> right;
  double distance = 0.0;
  double gain = 1.0;
  int delay_samples = 0;
  double pan = 0.0;  // -1 left .. +1 right
  bool occluded = false;
};

// Listener looks down local +Z; local -X is to its right.
StereoClip spatialize(const ImpactClip& clip, const Pose& listener, bool occluded, const AudioConfig& config);

// True if any body other than `exclude` blocks the segment from `from` to `to`.
bool segment_occluded(const World& world, const Vec3& from, const Vec3& to, std::span<const physics::BodyRef> exclude);

StereoClip spatialize(const ImpactClip& clip, const Pose& listener, const World& world, const AudioConfig& config,
                      std::span<const physics::BodyRef> exclude = {});

// 16-bit PCM WAV; `interleaved` holds channels * frames samples in [-1, 1].
std::string encode_wav(std::span<const float> interleaved, int channels, int sample_rate);
std::string encode_wav(const StereoClip& clip);
std::string encode_wav(const ImpactClip& clip);

double rms(std::span<const float> x);

}  // namespace hullsim::audio
