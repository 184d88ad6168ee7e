#include "hullsim/audio/impact.hpp"

#include "hullsim/physics/collider.hpp"
#include "hullsim/world/world.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace hullsim::audio {

using nlohmann::json;

void MaterialModeTable::validate() const {
  const std::string who = to_string(material);
  if (bands.empty()) throw InvalidMaterialTable(who + ": no bands");
  double total = 0.0;
  for (const auto& b : bands) {
    if (!(b.weight > 0.0)) throw InvalidMaterialTable(who + ": band weight must be > 0");
    if (!(b.log_sd >= 0.0) || !(b.damping_sd >= 0.0)) throw InvalidMaterialTable(who + ": negative sd");
    if (!(b.damping_mean > 0.0)) throw InvalidMaterialTable(who + ": damping mean must be > 0");
    if (!std::isfinite(b.log_mean)) throw InvalidMaterialTable(who + ": log mean not finite");
    total += b.weight;
  }
  if (!(total > 0.0)) throw InvalidMaterialTable(who + ": weights sum to zero");
  if (mode_count[0] < 1 || mode_count[1] > 64 || mode_count[0] > mode_count[1])
    throw InvalidMaterialTable(who + ": mode_count must lie within [1, 64]");
  if (!(hardness >= 0.0 && hardness <= 1.0)) throw InvalidMaterialTable(who + ": hardness must lie in [0, 1]");
  if (!std::isfinite(amplitude_decay_exponent)) throw InvalidMaterialTable(who + ": bad amplitude exponent");
}

double MaterialModeTable::mixture_log_mean() const {
  double w = 0.0, m = 0.0;
  for (const auto& b : bands) {
    w += b.weight;
    m += b.weight * b.log_mean;
  }
  return m / w;
}

double MaterialModeTable::mixture_log_variance() const {
  double w = 0.0, second = 0.0;
  for (const auto& b : bands) {
    w += b.weight;
    second += b.weight * (b.log_sd * b.log_sd + b.log_mean * b.log_mean);
  }
  const double mean = mixture_log_mean();
  return second / w - mean * mean;
}

MaterialTables MaterialTables::from_json(const json& j) {
  MaterialTables t;
  try {
    AudioConfig& c = t.config_;
    const json cfg = j.value("synthesis", json::object());
    c.sample_rate = cfg.value("sample_rate", c.sample_rate);
    c.speed_threshold = cfg.value("speed_threshold", c.speed_threshold);
    c.reference_mass = cfg.value("reference_mass", c.reference_mass);
    c.mass_exponent = cfg.value("mass_exponent", c.mass_exponent);
    c.gain_per_impulse = cfg.value("gain_per_impulse", c.gain_per_impulse);
    c.striker_tilt = cfg.value("striker_tilt", c.striker_tilt);
    c.max_duration = cfg.value("max_duration", c.max_duration);
    c.headroom = cfg.value("headroom", c.headroom);
    c.min_damping = cfg.value("min_damping", c.min_damping);
    c.occlusion_db = cfg.value("occlusion_db", c.occlusion_db);
    c.lowpass_hz = cfg.value("lowpass_hz", c.lowpass_hz);
    c.speed_of_sound = cfg.value("speed_of_sound", c.speed_of_sound);
    c.min_q = cfg.value("min_q", c.min_q);
    c.merge_bandwidths = cfg.value("merge_bandwidths", c.merge_bandwidths);
    c.min_spacing_hz = cfg.value("min_spacing_hz", c.min_spacing_hz);
    c.masking_fraction = cfg.value("masking_fraction", c.masking_fraction);
    if (c.sample_rate < 8000 || !(c.reference_mass > 0.0) || !(c.max_duration > 0.0) || !(c.headroom > 0.0 && c.headroom <= 1.0))
      throw InvalidMaterialTable("bad synthesis settings");

    for (const auto& [name, m] : j.at("materials").items()) {
      MaterialModeTable mt;
      mt.material = audio_material_from_string(name);
      for (const auto& b : m.at("bands")) {
        Band band;
        band.weight = b.at("weight").get<double>();
        band.log_mean = std::log(b.at("frequency_hz").get<double>());
        band.log_sd = b.at("log_sd").get<double>();
        band.damping_mean = b.at("damping_mean").get<double>();
        band.damping_sd = b.at("damping_sd").get<double>();
        mt.bands.push_back(band);
      }
      mt.amplitude_decay_exponent = m.at("amplitude_decay_exponent").get<double>();
      mt.mode_count = m.at("mode_count").get<std::array<int, 2>>();
      mt.hardness = m.at("hardness").get<double>();
      mt.validate();
      t.tables_[mt.material] = std::move(mt);
    }
  } catch (const json::exception& e) {
    throw InvalidMaterialTable(std::string("material table: ") + e.what());
  }
  return t;
}

MaterialTables MaterialTables::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidMaterialTable("cannot open " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw InvalidMaterialTable(path.string() + ": " + e.what());
  }
  return from_json(j);
}

std::filesystem::path bundled_materials_path() { return std::filesystem::path(HULLSIM_ASSET_DIR) / "audio_materials.json"; }

MaterialTables MaterialTables::bundled() { return load(bundled_materials_path()); }

const MaterialModeTable& MaterialTables::get(AudioMaterial m) const {
  const auto it = tables_.find(m);
  if (it == tables_.end()) throw UnknownMaterial(std::string("no mode table for ") + to_string(m));
  return it->second;
}

ModeSet sample_modes(const MaterialTables& tables, AudioMaterial struck, AudioMaterial striker, Rng& rng) {
  const MaterialModeTable& t = tables.get(struck);
  const double hardness = tables.get(striker).hardness;
  const AudioConfig& cfg = tables.config();
  ModeSet out;
  const int n = uniform_int(rng, t.mode_count[0], t.mode_count[1]);
  out.draws.push_back(n);

  double total = 0.0;
  for (const auto& b : t.bands) total += b.weight;
  std::normal_distribution<double> normal(0.0, 1.0);
  const double exponent = -t.amplitude_decay_exponent + cfg.striker_tilt * (hardness - 0.5);
  for (int i = 0; i < n; ++i) {
    const double u = uniform(rng, 0.0, total);
    std::size_t k = 0;
    double acc = t.bands[0].weight;
    while (u >= acc && k + 1 < t.bands.size()) acc += t.bands[++k].weight;
    const Band& b = t.bands[k];
    const double zf = normal(rng);
    const double zd = normal(rng);
    const double ua = uniform(rng, 0.5, 1.0);
    out.draws.insert(out.draws.end(), {u, zf, zd, ua});
    Mode m;
    m.frequency = std::clamp(std::exp(b.log_mean + b.log_sd * zf), cfg.min_frequency, cfg.max_frequency);
    m.decay = std::max(cfg.min_damping, b.damping_mean + b.damping_sd * zd);
    m.amplitude = ua * std::pow(m.frequency / 1000.0, exponent);
    out.modes.push_back(m);
  }
  std::stable_sort(out.modes.begin(), out.modes.end(),
                   [](const Mode& l, const Mode& r) { return l.frequency < r.frequency; });
  return out;
}

namespace {

inline double modal_sample(std::span<const Mode> modes, double t) {
  double s = 0.0;
  for (const auto& m : modes) s += m.amplitude * std::exp(-m.decay * t) * std::sin(2.0 * kPi * m.frequency * t);
  return s;
}

}  // namespace

void synth_serial(std::span<const Mode> modes, int sample_rate, std::span<double> out) {
  const double dt = 1.0 / sample_rate;
  for (std::size_t n = 0; n < out.size(); ++n) out[n] = modal_sample(modes, static_cast<double>(n) * dt);
}

void synth(std::span<const Mode> modes, int sample_rate, std::span<double> out) {
  const double dt = 1.0 / sample_rate;
  const auto count = static_cast<std::ptrdiff_t>(out.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t n = 0; n < count; ++n) out[n] = modal_sample(modes, static_cast<double>(n) * dt);
}

double clip_duration(std::span<const Mode> modes, const AudioConfig& config) {
  if (modes.empty()) return config.max_duration;
  // Long enough for every mode to fall 60 dB below the loudest one.
  double loudest = 0.0;
  for (const auto& m : modes) loudest = std::max(loudest, m.amplitude);
  double t60 = 0.0;
  for (const auto& m : modes) t60 = std::max(t60, std::log(1000.0 * m.amplitude / loudest) / m.decay);
  return std::min(config.max_duration, t60);
}

double peak_shift(std::span<const Mode> modes, std::size_t i) {
  const Mode& m = modes[i];
  double shift = 0.0;
  for (std::size_t j = 0; j < modes.size(); ++j)
    if (j != i)
      shift += modes[j].amplitude * m.decay * m.decay /
               (4.0 * kPi * kPi * m.amplitude * (m.frequency - modes[j].frequency));
  return shift;
}

double effective_mass(double m1, double m2) {
  if (std::isinf(m1) && std::isinf(m2)) return kInf;
  if (std::isinf(m1)) return m2;
  if (std::isinf(m2)) return m1;
  return m1 * m2 / (m1 + m2);
}

ImpactClip render_modes(ModeSet modes, double gain, const AudioConfig& config) {
  ImpactClip clip;
  clip.sample_rate = config.sample_rate;
  clip.gain = gain;
  const double duration = clip_duration(modes.modes, config);
  const auto n = static_cast<std::size_t>(std::max(1.0, std::ceil(duration * config.sample_rate)));
  std::vector<double> raw(n);
  synth(modes.modes, config.sample_rate, raw);

  double peak = 0.0, sq = 0.0;
  for (double v : raw) {
    peak = std::max(peak, std::abs(v));
    sq += v * v;
  }
  clip.raw_rms = gain * std::sqrt(sq / static_cast<double>(n));
  if (gain * peak > config.headroom) clip.normalization = config.headroom / (gain * peak);
  const double scale = gain * clip.normalization;
  clip.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) clip.samples[i] = static_cast<float>(scale * raw[i]);
  clip.modes = std::move(modes);
  return clip;
}

void consolidate_modes(ModeSet& set, const AudioConfig& config) {
  auto& modes = set.modes;
  for (auto& m : modes) m.decay = std::min(m.decay, kPi * m.frequency / config.min_q);
  // Merge neighbours whose spectral lines would overlap into one line.
  bool merged = true;
  while (merged && modes.size() > 1) {
    merged = false;
    for (std::size_t i = 0; i + 1 < modes.size(); ++i) {
      Mode& a = modes[i];
      const Mode& b = modes[i + 1];
      const double bandwidth = (a.decay + b.decay) / (2.0 * kPi);
      const double need = std::max(config.min_spacing_hz, config.merge_bandwidths * bandwidth);
      if (b.frequency - a.frequency >= need) continue;
      const double w = a.amplitude + b.amplitude;
      a.frequency = (a.amplitude * a.frequency + b.amplitude * b.frequency) / w;
      a.decay = (a.amplitude * a.decay + b.amplitude * b.decay) / w;
      a.amplitude = w;
      modes.erase(modes.begin() + static_cast<std::ptrdiff_t>(i) + 1);
      merged = true;
    }
  }
  // Drop masked modes: lines whose peak a louder neighbour's tail would pull
  // off their frequency by more than a fraction of the clip's resolution.
  if (config.masking_fraction <= 0.0) return;
  while (modes.size() > 1) {
    const double limit = config.masking_fraction / clip_duration(modes, config);
    std::size_t worst = 0;
    double worst_shift = 0.0;
    for (std::size_t i = 0; i < modes.size(); ++i) {
      const double s = std::abs(peak_shift(modes, i));
      if (s > worst_shift) worst_shift = s, worst = i;
    }
    if (worst_shift <= limit) break;
    modes.erase(modes.begin() + static_cast<std::ptrdiff_t>(worst));
  }
}

ImpactClip synthesize_impact(const physics::CollisionEvent& event, const Participant& struck,
                             const Participant& striker, const MaterialTables& tables, Rng& rng) {
  const AudioConfig& cfg = tables.config();
  if (event.state != physics::ContactState::enter) throw std::invalid_argument("impact sounds come from enter events");
  if (!(event.relative_normal_speed > cfg.speed_threshold))
    throw SubThresholdImpact("impact speed below " + std::to_string(cfg.speed_threshold) + " m/s");
  ModeSet modes = sample_modes(tables, struck.material, striker.material, rng);

  double m_eff = effective_mass(struck.mass, striker.mass);
  if (std::isinf(m_eff)) m_eff = cfg.reference_mass;
  // Heavier impacts ring lower.
  const double shift = std::pow(cfg.reference_mass / m_eff, cfg.mass_exponent);
  for (auto& m : modes.modes) m.frequency = std::clamp(m.frequency * shift, cfg.min_frequency, cfg.max_frequency);
  consolidate_modes(modes, cfg);

  // Nominal impulse of a perfectly inelastic hit at the contact speed.
  const double impulse = m_eff * event.relative_normal_speed;
  ImpactClip clip = render_modes(std::move(modes), cfg.gain_per_impulse * impulse, cfg);
  clip.source_position = event.point;
  clip.event = event;
  return clip;
}

StereoClip spatialize(const ImpactClip& clip, const Pose& listener, bool occluded, const AudioConfig& config) {
  StereoClip out;
  out.sample_rate = clip.sample_rate;
  out.occluded = occluded;
  const Vec3 offset = clip.source_position - listener.position;
  out.distance = offset.norm();
  out.gain = 1.0 / std::max(out.distance, 1.0);
  out.delay_samples = static_cast<int>(std::lround(out.distance / config.speed_of_sound * clip.sample_rate));

  const Vec3 local = listener.inverse_apply(clip.source_position);
  const double horizontal = std::hypot(local.x(), local.z());
  out.pan = horizontal > 1e-12 ? -local.x() / horizontal : 0.0;
  const double phi = (out.pan + 1.0) * kPi / 4.0;
  const double gl = std::cos(phi), gr = std::sin(phi);

  double g = out.gain;
  if (occluded) g *= std::pow(10.0, config.occlusion_db / 20.0);
  const double alpha = 1.0 - std::exp(-2.0 * kPi * config.lowpass_hz / clip.sample_rate);

  const std::size_t n = clip.samples.size() + static_cast<std::size_t>(out.delay_samples);
  out.left.assign(n, 0.0f);
  out.right.assign(n, 0.0f);
  double y = 0.0;
  for (std::size_t i = 0; i < clip.samples.size(); ++i) {
    double x = clip.samples[i];
    if (occluded) {
      y += alpha * (x - y);
      x = y;
    }
    const std::size_t k = i + static_cast<std::size_t>(out.delay_samples);
    out.left[k] = static_cast<float>(g * gl * x);
    out.right[k] = static_cast<float>(g * gr * x);
  }
  return out;
}

bool segment_occluded(const World& world, const Vec3& from, const Vec3& to, std::span<const physics::BodyRef> exclude) {
  const Vec3 seg = to - from;
  const double len = seg.norm();
  if (len < 1e-9) return false;
  const Vec3 dir = seg / len;
  const double t_max = len * (1.0 - 1e-9);
  auto blocks = [&](const physics::RigidBody& b) {
    if (std::find(exclude.begin(), exclude.end(), b.ref) != exclude.end()) return false;
    for (const auto& c : b.colliders) {
      const physics::PosedCollider pc(c, b.pose);
      if (ray_aabb(from, dir, pc.bounds, t_max) == kInf) continue;
      if (physics::raycast(pc, from, dir, 0.0, t_max)) return true;
    }
    return false;
  };
  for (const auto& [id, o] : world.objects())
    if (blocks(o.body)) return true;
  for (const auto& [id, a] : world.avatars())
    if (a.body && blocks(*a.body)) return true;
  for (const auto& e : world.environment())
    if (blocks(e)) return true;
  return false;
}

StereoClip spatialize(const ImpactClip& clip, const Pose& listener, const World& world, const AudioConfig& config,
                      std::span<const physics::BodyRef> exclude) {
  std::vector<physics::BodyRef> skip(exclude.begin(), exclude.end());
  skip.push_back(clip.event.a);
  skip.push_back(clip.event.b);
  return spatialize(clip, listener, segment_occluded(world, listener.position, clip.source_position, skip), config);
}

namespace {

void put_u32(std::string& s, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) s.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}
void put_u16(std::string& s, std::uint16_t v) {
  s.push_back(static_cast<char>(v & 0xFF));
  s.push_back(static_cast<char>(v >> 8));
}

}  // namespace

std::string encode_wav(std::span<const float> interleaved, int channels, int sample_rate) {
  const auto data_bytes = static_cast<std::uint32_t>(interleaved.size() * 2);
  std::string s;
  s.reserve(44 + data_bytes);
  s += "RIFF";
  put_u32(s, 36 + data_bytes);
  s += "WAVEfmt ";
  put_u32(s, 16);
  put_u16(s, 1);
  put_u16(s, static_cast<std::uint16_t>(channels));
  put_u32(s, static_cast<std::uint32_t>(sample_rate));
  put_u32(s, static_cast<std::uint32_t>(sample_rate * channels * 2));
  put_u16(s, static_cast<std::uint16_t>(channels * 2));
  put_u16(s, 16);
  s += "data";
  put_u32(s, data_bytes);
  for (float x : interleaved) {
    const double c = std::clamp(static_cast<double>(x), -1.0, 1.0);
    put_u16(s, static_cast<std::uint16_t>(static_cast<std::int16_t>(std::lround(c * 32767.0))));
  }
  return s;
}

std::string encode_wav(const StereoClip& clip) {
  std::vector<float> inter(clip.left.size() * 2);
  for (std::size_t i = 0; i < clip.left.size(); ++i) {
    inter[2 * i] = clip.left[i];
    inter[2 * i + 1] = clip.right[i];
  }
  return encode_wav(inter, 2, clip.sample_rate);
}

std::string encode_wav(const ImpactClip& clip) { return encode_wav(clip.samples, 1, clip.sample_rate); }

double rms(std::span<const float> x) {
  if (x.empty()) return 0.0;
  double sq = 0.0;
  for (float v : x) sq += static_cast<double>(v) * v;
  return std::sqrt(sq / static_cast<double>(x.size()));
}

}  // namespace hullsim::audio
