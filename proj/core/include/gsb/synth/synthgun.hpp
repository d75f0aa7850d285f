#pragma once

#include "gsb/audio.hpp"
#include "gsb/labels.hpp"
#include "gsb/manifest.hpp"
#include "gsb/rng.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

namespace gsb::synth {

struct Range {
  double lo = 0.0;
  double hi = 0.0;

  bool contains(double x) const { return x >= lo && x <= hi; }
  double sample(Rng& rng) const { return rng.uniform(lo, hi); }
};

enum class ShockwaveIncidence { No, Rare, Variable, Common };

/// Probability that a shot of a class with the given incidence carries an
/// N-wave: {0, 0.1, 0.5, 0.9}.
double shockwave_probability(ShockwaveIncidence incidence);

struct BurstSpec {
  Range rate_hz;
  int count_min = 1;
  int count_max = 1;
};

/// Acoustic envelope of one firearm category.
struct FirearmClassSpec {
  FirearmClass cls = FirearmClass::HandgunPistol;
  Range peak_freq_hz;
  Range blast_duration_ms;
  Range spl_db;
  ShockwaveIncidence shockwave = ShockwaveIncidence::No;
  std::optional<BurstSpec> burst;

  /// Throws InvalidParam if a range is empty or non-positive, or the peak
  /// band reaches Nyquist.
  void validate(int sample_rate = kPipelineRate) const;
};

/// Per-category reference characteristics, indexed by class_index().
const std::array<FirearmClassSpec, kNumClasses>& default_specs();
const FirearmClassSpec& default_spec(FirearmClass cls);

/// Relative linear amplitude for a sound pressure level, 165 dB -> 1.0.
double spl_to_amplitude(double spl_db);

// Waveform shape constants. The blast is a Friedlander pulse whose positive
// phase lasts kFriedlanderPositiveFraction of the blast duration, shaped by a
// bandpass biquad of quality kBlastBandpassQ.
inline constexpr double kFriedlanderPositiveFraction = 0.25;
inline constexpr double kBlastBandpassQ = 2.0;
inline constexpr double kShockwaveRelativeAmplitude = 0.5;
inline constexpr Range kShockwaveDurationUs{200.0, 400.0};
inline constexpr Range kShockwaveLeadMs{0.2, 1.0};
inline constexpr double kBurstJitter = 0.10;

struct ShotEvent {
  double onset_s = 0.0;  // blast onset within the shot clip
  FirearmClass cls = FirearmClass::HandgunPistol;
  double peak_freq_hz = 0.0;
  double blast_duration_ms = 0.0;
  double amplitude = 0.0;
  bool has_shockwave = false;
  double shockwave_duration_us = 0.0;
};

/// A shot, or a burst of shots for automatic weapons, with the rendered clip.
struct SynthesizedShot {
  std::vector<ShotEvent> shots;
  AudioClip clip;
};

/// Friedlander pulse p(t) = A(1 - t/t0)exp(-t/t0), bandpassed at peak_freq and
/// rescaled so that max |sample| == amplitude. Length ceil(duration * rate).
AudioClip synth_muzzle_blast(double peak_freq_hz, double duration_ms, double amplitude,
                             int sample_rate = kPipelineRate);

/// N-wave: linear ramp up, sign flip, linear return to zero. Zero mean.
AudioClip synth_shockwave(double duration_us, double amplitude, int sample_rate = kPipelineRate);

SynthesizedShot synth_shot(const FirearmClassSpec& spec, Rng& rng, int sample_rate = kPipelineRate);

/// Non-gunshot impulsive sounds whose energy sits outside the firearm bands.
enum class DistractorKind { Background, DoorSlam, Click };
inline constexpr int kNumDistractorKinds = 3;

/// Background yields an empty clip (the scene then holds only noise).
AudioClip synth_distractor(DistractorKind kind, Rng& rng, int sample_rate = kPipelineRate);

struct ReverbConfig {
  double delay_ms = 0.0;
  double decay = 0.0;  // per-tap gain, in [0, 1)
  int taps = 0;

  bool enabled() const { return taps > 0 && decay > 0.0 && delay_ms > 0.0; }
};

struct SceneConfig {
  double duration_s = 1.5;
  double snr_db = 30.0;
  ReverbConfig reverb;
  double distance_m = 1.0;
  std::uint64_t seed = 0;

  void validate() const;
};

struct PlacedEvent {
  double onset_s = 0.0;
  const AudioClip* clip = nullptr;
};

/// Noise RMS used when a scene has no event energy to reference, before the
/// 1/distance scaling and the SNR offset.
inline constexpr double kEmptySceneReferenceRms = 0.1;

/// Mixes events, applies comb reverb, scales by 1/distance, adds white noise
/// at snr_db relative to the event RMS over the samples events occupy, and
/// peak-normalizes to 0.99 only when a sample would exceed full scale.
AudioClip compose_scene(std::span<const PlacedEvent> events, const SceneConfig& config, Rng& rng);

/// Table of recording counts per class used by the "paper-ratio" preset.
inline constexpr std::array<int, kNumClasses> kReferenceClassCounts = {892, 522, 1105, 543, 396};
std::array<int, kNumClasses> scaled_class_counts(double scale);

struct DatasetRequest {
  std::array<int, kNumClasses> class_counts{};
  int negatives = 0;
  bool clean = true;
  std::filesystem::path out_dir;
  std::uint64_t seed = 0;
  double clip_duration_s = 1.5;
  int jobs = 1;
};

/// Scene draw for one clip. Exposed so tests can check the clean and noisy
/// parameter envelopes without writing audio.
SceneConfig sample_scene_config(bool clean, double duration_s, Rng& rng);

/// Renders a single dataset clip; pure in (request, index).
AudioClip render_dataset_clip(const DatasetRequest& request, std::size_t index, ManifestRow& row);

/// Writes audio/<id>.wav for every clip plus manifest.jsonl under out_dir and
/// returns the manifest. Output bytes depend only on the request.
Manifest generate_dataset(const DatasetRequest& request);

}  // namespace gsb::synth
