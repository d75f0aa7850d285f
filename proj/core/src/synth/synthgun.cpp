#include "gsb/synth/synthgun.hpp"

#include "gsb/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <thread>

namespace gsb::synth {
namespace {

constexpr double kPi = std::numbers::pi;

void check_range(const Range& r, const char* what) {
  require(r.lo > 0.0 && r.hi >= r.lo && std::isfinite(r.hi), ErrorCode::InvalidParam,
          std::string("invalid range for ") + what);
}

/// RBJ constant-0-dB-peak bandpass, direct form I, applied in place.
void bandpass_inplace(std::vector<double>& x, double center_hz, double q, int sample_rate) {
  const double w0 = 2.0 * kPi * center_hz / sample_rate;
  const double alpha = std::sin(w0) / (2.0 * q);
  const double a0 = 1.0 + alpha;
  const double b0 = alpha / a0, b2 = -alpha / a0;
  const double a1 = -2.0 * std::cos(w0) / a0, a2 = (1.0 - alpha) / a0;
  double x1 = 0, x2 = 0, y1 = 0, y2 = 0;
  for (double& s : x) {
    const double y = b0 * s + b2 * x2 - a1 * y1 - a2 * y2;
    x2 = x1;
    x1 = s;
    y2 = y1;
    y1 = y;
    s = y;
  }
}

void scale_to_peak(std::vector<double>& x, double amplitude) {
  double peak = 0.0;
  for (double s : x) peak = std::max(peak, std::abs(s));
  const double g = peak > 0.0 ? amplitude / peak : 0.0;
  for (double& s : x) s *= g;
}

std::size_t argmax_abs(const std::vector<double>& x) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < x.size(); ++i)
    if (std::abs(x[i]) > std::abs(x[best])) best = i;
  return best;
}

void mix_into(std::vector<double>& dst, const std::vector<double>& src, std::size_t at, double gain) {
  for (std::size_t i = 0; i < src.size() && at + i < dst.size(); ++i) dst[at + i] += gain * src[i];
}

}  // namespace

double shockwave_probability(ShockwaveIncidence incidence) {
  switch (incidence) {
    case ShockwaveIncidence::No: return 0.0;
    case ShockwaveIncidence::Rare: return 0.1;
    case ShockwaveIncidence::Variable: return 0.5;
    case ShockwaveIncidence::Common: return 0.9;
  }
  return 0.0;
}

void FirearmClassSpec::validate(int sample_rate) const {
  check_range(peak_freq_hz, "peak frequency");
  check_range(blast_duration_ms, "blast duration");
  check_range(spl_db, "SPL");
  require(peak_freq_hz.hi < sample_rate / 2.0, ErrorCode::InvalidParam, "peak frequency reaches Nyquist");
  if (burst) {
    check_range(burst->rate_hz, "burst rate");
    require(burst->count_min >= 1 && burst->count_max >= burst->count_min, ErrorCode::InvalidParam,
            "invalid burst count range");
  }
}

const std::array<FirearmClassSpec, kNumClasses>& default_specs() {
  static const std::array<FirearmClassSpec, kNumClasses> specs = {{
      {FirearmClass::Rifle, {200, 1500}, {5, 8}, {167, 171}, ShockwaveIncidence::Common, std::nullopt},
      {FirearmClass::SubmachineGun, {400, 2200}, {3, 4}, {160, 166}, ShockwaveIncidence::Variable,
       BurstSpec{{12, 15}, 3, 8}},
      {FirearmClass::HandgunPistol, {500, 2000}, {3, 5}, {159, 164}, ShockwaveIncidence::Rare, std::nullopt},
      {FirearmClass::MachineGun, {300, 1800}, {3, 5}, {165, 170}, ShockwaveIncidence::Common,
       BurstSpec{{10, 12}, 8, 15}},
      {FirearmClass::Shotgun, {100, 800}, {8, 12}, {161, 165}, ShockwaveIncidence::No, std::nullopt},
  }};
  return specs;
}

const FirearmClassSpec& default_spec(FirearmClass cls) {
  return default_specs()[static_cast<std::size_t>(class_index(cls))];
}

double spl_to_amplitude(double spl_db) { return std::pow(10.0, (spl_db - 165.0) / 20.0); }

AudioClip synth_muzzle_blast(double peak_freq_hz, double duration_ms, double amplitude, int sample_rate) {
  require(sample_rate > 0, ErrorCode::InvalidParam, "sample rate must be positive");
  require(duration_ms > 0.0 && duration_ms <= 20.0, ErrorCode::InvalidParam, "blast duration must be in (0, 20] ms");
  require(peak_freq_hz > 0.0 && peak_freq_hz < sample_rate / 2.0, ErrorCode::InvalidParam,
          "peak frequency must be in (0, Nyquist)");
  require(amplitude >= 0.0 && std::isfinite(amplitude), ErrorCode::InvalidParam, "amplitude must be >= 0");

  const auto n = static_cast<std::size_t>(std::ceil(duration_ms * 1e-3 * sample_rate - 1e-9));
  const double t0 = kFriedlanderPositiveFraction * duration_ms * 1e-3;
  AudioClip clip;
  clip.sample_rate = sample_rate;
  clip.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / sample_rate;
    clip.samples[i] = (1.0 - t / t0) * std::exp(-t / t0);
  }
  bandpass_inplace(clip.samples, peak_freq_hz, kBlastBandpassQ, sample_rate);
  scale_to_peak(clip.samples, amplitude);
  clip.meta.source = "synth:muzzle_blast";
  clip.meta.params = {{"peak_freq_hz", peak_freq_hz}, {"duration_ms", duration_ms}, {"amplitude", amplitude}};
  return clip;
}

AudioClip synth_shockwave(double duration_us, double amplitude, int sample_rate) {
  require(duration_us >= 100.0 && duration_us <= 1000.0, ErrorCode::InvalidParam,
          "shockwave duration must be in [100, 1000] us");
  require(amplitude >= 0.0 && std::isfinite(amplitude), ErrorCode::InvalidParam, "amplitude must be >= 0");
  const auto n = std::max<std::size_t>(2, static_cast<std::size_t>(std::lround(duration_us * 1e-6 * sample_rate)));
  AudioClip clip;
  clip.sample_rate = sample_rate;
  clip.samples.resize(n);
  // Midpoint sampling makes the shape exactly antisymmetric about its centre;
  // an odd-length wave puts its zero crossing on the middle sample.
  for (std::size_t i = 0; i < n; ++i) {
    const double t = (static_cast<double>(i) + 0.5) / static_cast<double>(n);
    if (2 * i + 1 == n)
      clip.samples[i] = 0.0;
    else
      clip.samples[i] = t < 0.5 ? 2.0 * t : -2.0 * (1.0 - t);
  }
  scale_to_peak(clip.samples, amplitude);
  clip.meta.source = "synth:shockwave";
  clip.meta.params = {{"duration_us", duration_us}, {"amplitude", amplitude}};
  return clip;
}

SynthesizedShot synth_shot(const FirearmClassSpec& spec, Rng& rng, int sample_rate) {
  spec.validate(sample_rate);

  const double peak_freq = spec.peak_freq_hz.sample(rng);
  const double duration = spec.blast_duration_ms.sample(rng);
  const double amplitude = spl_to_amplitude(spec.spl_db.sample(rng));
  const bool shock = rng.bernoulli(shockwave_probability(spec.shockwave));
  const double shock_us = shock ? kShockwaveDurationUs.sample(rng) : 0.0;
  const double lead_ms = shock ? kShockwaveLeadMs.sample(rng) : 0.0;

  int count = 1;
  double rate_hz = 0.0;
  if (spec.burst) {
    count = rng.uniform_int(spec.burst->count_min, spec.burst->count_max);
    rate_hz = spec.burst->rate_hz.sample(rng);
  }

  const auto blast = synth_muzzle_blast(peak_freq, duration, 1.0, sample_rate).samples;
  const std::size_t blast_peak = argmax_abs(blast);
  const std::vector<double> nwave = shock ? synth_shockwave(shock_us, 1.0, sample_rate).samples : std::vector<double>{};
  const auto lead = static_cast<std::size_t>(std::lround(lead_ms * 1e-3 * sample_rate));

  SynthesizedShot out;
  std::vector<std::size_t> onsets;
  std::size_t onset = lead;
  for (int k = 0; k < count; ++k) {
    if (k > 0) {
      const double interval = (1.0 / rate_hz) * (1.0 + rng.uniform(-kBurstJitter, kBurstJitter));
      onset += static_cast<std::size_t>(std::lround(interval * sample_rate));
    }
    // Successive shots in a burst vary by up to +-1 dB.
    const double amp = count > 1 ? amplitude * std::pow(10.0, rng.uniform(-1.0, 1.0) / 20.0) : amplitude;
    onsets.push_back(onset);
    out.shots.push_back({static_cast<double>(onset) / sample_rate, spec.cls, peak_freq, duration, amp, shock, shock_us});
  }

  out.clip.sample_rate = sample_rate;
  out.clip.samples.assign(onsets.back() + blast.size(), 0.0);
  for (std::size_t k = 0; k < onsets.size(); ++k) {
    const double amp = out.shots[k].amplitude;
    mix_into(out.clip.samples, blast, onsets[k], amp);
    // The N-wave starts `lead` samples ahead of the blast peak.
    if (shock) mix_into(out.clip.samples, nwave, onsets[k] + blast_peak - lead, kShockwaveRelativeAmplitude * amp);
  }
  out.clip.meta.source = std::string("synth:shot:") + std::string(class_key(spec.cls));
  out.clip.meta.params = {{"peak_freq_hz", peak_freq},   {"blast_duration_ms", duration},
                          {"amplitude", amplitude},      {"shockwave", shock ? 1.0 : 0.0},
                          {"shockwave_us", shock_us},    {"shots", static_cast<double>(count)},
                          {"burst_rate_hz", rate_hz}};
  return out;
}

AudioClip synth_distractor(DistractorKind kind, Rng& rng, int sample_rate) {
  AudioClip clip;
  clip.sample_rate = sample_rate;
  switch (kind) {
    case DistractorKind::Background:
      clip.meta.source = "synth:distractor:background";
      return clip;
    case DistractorKind::DoorSlam: {
      // Low thud: damped sinusoid below the firearm bands.
      const double f = rng.uniform(40.0, 90.0);
      const double tau = rng.uniform(15e-3, 40e-3);
      const double amp = rng.uniform(0.3, 1.0);
      const auto n = static_cast<std::size_t>(5.0 * tau * sample_rate);
      clip.samples.resize(n);
      for (std::size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) / sample_rate;
        clip.samples[i] = (1.0 - std::exp(-t / 2e-3)) * std::exp(-t / tau) * std::sin(2.0 * kPi * f * t);
      }
      scale_to_peak(clip.samples, amp);
      clip.meta.source = "synth:distractor:door_slam";
      clip.meta.params = {{"freq_hz", f}, {"tau_s", tau}, {"amplitude", amp}};
      return clip;
    }
    case DistractorKind::Click: {
      // Short high-frequency transient above the firearm bands.
      const double f = rng.uniform(4000.0, 9000.0);
      const double tau = rng.uniform(1e-3, 3e-3);
      const double amp = rng.uniform(0.2, 0.8);
      const auto n = static_cast<std::size_t>(6.0 * tau * sample_rate);
      clip.samples.resize(n);
      for (std::size_t i = 0; i < n; ++i)
        clip.samples[i] = rng.normal() * std::exp(-static_cast<double>(i) / (tau * sample_rate));
      bandpass_inplace(clip.samples, f, 1.5, sample_rate);
      bandpass_inplace(clip.samples, f, 1.5, sample_rate);
      scale_to_peak(clip.samples, amp);
      clip.meta.source = "synth:distractor:click";
      clip.meta.params = {{"freq_hz", f}, {"tau_s", tau}, {"amplitude", amp}};
      return clip;
    }
  }
  return clip;
}

void SceneConfig::validate() const {
  require(duration_s > 0.0, ErrorCode::InvalidParam, "scene duration must be positive");
  require(reverb.decay >= 0.0 && reverb.decay < 1.0, ErrorCode::InvalidParam, "reverb decay must be in [0, 1)");
  require(reverb.taps >= 0 && reverb.delay_ms >= 0.0, ErrorCode::InvalidParam, "invalid reverb taps/delay");
  require(distance_m >= 1.0, ErrorCode::InvalidParam, "distance must be >= 1 m");
  require(std::isfinite(snr_db), ErrorCode::InvalidParam, "snr must be finite");
}

AudioClip compose_scene(std::span<const PlacedEvent> events, const SceneConfig& config, Rng& rng) {
  config.validate();
  const int rate = kPipelineRate;
  const auto n = static_cast<std::size_t>(std::lround(config.duration_s * rate));

  std::vector<double> mix(n, 0.0);
  std::vector<unsigned char> active(n, 0);
  const std::size_t delay =
      config.reverb.enabled() ? std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(config.reverb.delay_ms * 1e-3 * rate)))
                              : 0;
  const std::size_t tail = config.reverb.enabled() ? delay * static_cast<std::size_t>(config.reverb.taps) : 0;

  for (const auto& ev : events) {
    require(ev.clip != nullptr, ErrorCode::InvalidParam, "event without clip");
    require(ev.clip->sample_rate == rate && ev.clip->channels == 1, ErrorCode::InvalidParam,
            "scene events must be mono at the pipeline rate");
    require(ev.onset_s >= 0.0, ErrorCode::SceneOverflow, "event onset before scene start");
    const auto start = static_cast<std::size_t>(std::lround(ev.onset_s * rate));
    require(start + ev.clip->samples.size() <= n, ErrorCode::SceneOverflow, "event extends past scene end");
    mix_into(mix, ev.clip->samples, start, 1.0);
    const std::size_t end = std::min(n, start + ev.clip->samples.size() + tail);
    std::fill(active.begin() + static_cast<std::ptrdiff_t>(start), active.begin() + static_cast<std::ptrdiff_t>(end), 1);
  }

  std::vector<double> out = mix;
  if (config.reverb.enabled()) {
    double gain = 1.0;
    for (int k = 1; k <= config.reverb.taps; ++k) {
      gain *= config.reverb.decay;
      const std::size_t shift = delay * static_cast<std::size_t>(k);
      for (std::size_t i = shift; i < n; ++i) out[i] += gain * mix[i - shift];
    }
  }

  const double inv_distance = 1.0 / config.distance_m;
  double energy = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < n; ++i) {
    out[i] *= inv_distance;
    if (active[i]) {
      energy += out[i] * out[i];
      ++count;
    }
  }
  const double event_rms = count > 0 ? std::sqrt(energy / static_cast<double>(count)) : 0.0;
  const double reference = event_rms > 0.0 ? event_rms : kEmptySceneReferenceRms * inv_distance;
  const double noise_rms = reference / std::pow(10.0, config.snr_db / 20.0);
  for (double& s : out) s += noise_rms * rng.normal();

  double peak = 0.0;
  for (double s : out) peak = std::max(peak, std::abs(s));
  if (peak > 1.0)
    for (double& s : out) s *= 0.99 / peak;

  AudioClip clip;
  clip.sample_rate = rate;
  clip.samples = std::move(out);
  clip.meta.source = "synth:scene";
  clip.meta.params = {{"snr_db", config.snr_db},
                      {"distance_m", config.distance_m},
                      {"reverb_delay_ms", config.reverb.delay_ms},
                      {"reverb_decay", config.reverb.decay},
                      {"reverb_taps", static_cast<double>(config.reverb.taps)},
                      {"noise_rms", noise_rms},
                      {"events", static_cast<double>(events.size())}};
  return clip;
}

std::array<int, kNumClasses> scaled_class_counts(double scale) {
  require(scale >= 0.0, ErrorCode::InvalidParam, "scale must be non-negative");
  std::array<int, kNumClasses> counts{};
  for (std::size_t i = 0; i < counts.size(); ++i)
    counts[i] = static_cast<int>(std::lround(kReferenceClassCounts[i] * scale));
  return counts;
}

SceneConfig sample_scene_config(bool clean, double duration_s, Rng& rng) {
  SceneConfig cfg;
  cfg.duration_s = duration_s;
  if (clean) {
    cfg.snr_db = rng.uniform(30.0, 40.0);
    cfg.distance_m = 1.0;
  } else {
    cfg.snr_db = rng.uniform(0.0, 15.0);
    cfg.reverb.delay_ms = rng.uniform(8.0, 40.0);
    cfg.reverb.decay = rng.uniform(0.2, 0.6);
    cfg.reverb.taps = rng.uniform_int(2, 5);
    cfg.distance_m = rng.uniform(1.0, 50.0);
  }
  return cfg;
}

AudioClip render_dataset_clip(const DatasetRequest& request, std::size_t index, ManifestRow& row) {
  Rng rng = Rng::for_stream(request.seed, index);
  row.seed = splitmix64(request.seed ^ splitmix64(index));

  std::size_t positives = 0;
  for (int c : request.class_counts) positives += static_cast<std::size_t>(c);

  AudioClip event;
  if (index < positives) {
    std::size_t k = index;
    int cls = 0;
    while (k >= static_cast<std::size_t>(request.class_counts[static_cast<std::size_t>(cls)])) {
      k -= static_cast<std::size_t>(request.class_counts[static_cast<std::size_t>(cls)]);
      ++cls;
    }
    row.detection = DetectionLabel::Gunshot;
    row.cls = class_at(cls);
    event = synth_shot(default_spec(class_at(cls)), rng).clip;
  } else {
    row.detection = DetectionLabel::NoGunshot;
    row.cls.reset();
    const auto kind = static_cast<DistractorKind>(rng.uniform_int(0, kNumDistractorKinds - 1));
    event = synth_distractor(kind, rng);
  }

  const double event_s = event.duration_s();
  const double margin = 0.05;
  const double duration = std::max(request.clip_duration_s, event_s + 2.0 * margin);
  auto scene = sample_scene_config(request.clean, duration, rng);
  scene.seed = row.seed;

  std::vector<PlacedEvent> placed;
  if (!event.samples.empty()) {
    const double latest = duration - event_s - margin;
    placed.push_back({rng.uniform(margin, std::max(margin, latest)), &event});
  }
  auto clip = compose_scene(placed, scene, rng);
  // Snap to the 16-bit grid so the in-memory clip equals what is written.
  for (double& s : clip.samples) s = quantize_pcm16(s);
  row.clean = request.clean;
  row.duration_s = clip.duration_s();
  return clip;
}

Manifest generate_dataset(const DatasetRequest& request) {
  std::size_t total = static_cast<std::size_t>(std::max(0, request.negatives));
  for (int c : request.class_counts) {
    require(c >= 0, ErrorCode::InvalidParam, "class counts must be non-negative");
    total += static_cast<std::size_t>(c);
  }
  require(request.negatives >= 0, ErrorCode::InvalidParam, "negative count must be non-negative");
  require(request.clip_duration_s > 0.0, ErrorCode::InvalidParam, "clip duration must be positive");

  std::error_code ec;
  std::filesystem::create_directories(request.out_dir / "audio", ec);
  if (ec) fail(ErrorCode::IoError, "cannot create " + (request.out_dir / "audio").string());

  Manifest manifest;
  manifest.root = request.out_dir;
  manifest.rows.resize(total);
  for (std::size_t i = 0; i < total; ++i) {
    char id[32];
    std::snprintf(id, sizeof id, "clip_%05zu", i);
    manifest.rows[i].id = id;
    manifest.rows[i].path = std::string("audio/") + id + ".wav";
  }

  auto work = [&](std::size_t begin, std::size_t stride, std::exception_ptr& error) {
    try {
      for (std::size_t i = begin; i < total; i += stride) {
        auto& row = manifest.rows[i];
        const auto clip = render_dataset_clip(request, i, row);
        write_wav(manifest.resolve(row), clip);
      }
    } catch (...) {
      error = std::current_exception();
    }
  };

  const auto jobs = static_cast<std::size_t>(std::max(1, request.jobs));
  std::vector<std::exception_ptr> errors(jobs);
  if (jobs == 1) {
    work(0, 1, errors[0]);
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t j = 0; j < jobs; ++j) pool.emplace_back([&, j] { work(j, jobs, errors[j]); });
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);

  save_manifest(request.out_dir / "manifest.jsonl", manifest);
  return manifest;
}

}  // namespace gsb::synth
