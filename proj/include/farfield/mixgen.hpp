// Copyright 2026 The farfield Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

// Mixture generation from single-speaker meeting segments:
//   (a) find the stretches where exactly one speaker is active,
//   (b) cut them into fixed-length clips (after alignment, see align.hpp),
//   (c) sum array clips of distinct speakers into far-field mixtures and the
//       matching aligned headset clips into reference mixtures.
// Also hosts the synthetic multichannel scene renderer used as a test fixture.

#ifndef FARFIELD_MIXGEN_HPP_
#define FARFIELD_MIXGEN_HPP_

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <numbers>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <unsupported/Eigen/FFT>

#include "farfield/beamform.hpp"
#include "farfield/common.hpp"
#include "farfield/io.hpp"
#include "farfield/stft.hpp"

namespace farfield {

struct SpeakerInterval {
  std::string speaker_id;
  double start = 0.0;  // seconds, half-open [start, end)
  double end = 0.0;

  bool operator==(const SpeakerInterval&) const = default;
};

// Maximal intervals during which exactly one speaker is active. All
// annotations are treated as speech activity of one recording.
inline std::vector<SpeakerInterval> ExtractNonoverlapSegments(
    const std::vector<SegmentAnnotation>& annotations) {
  // Per-speaker union of annotated speech.
  std::map<std::string, std::vector<std::pair<double, double>>> by_speaker;
  for (const auto& a : annotations) {
    Validate(a);
    by_speaker[a.speaker_id].emplace_back(a.start, a.end);
  }
  struct Event {
    double time;
    int delta;
    std::string speaker;
  };
  std::vector<Event> events;
  for (auto& [speaker, spans] : by_speaker) {
    std::sort(spans.begin(), spans.end());
    double s = spans.front().first, e = spans.front().second;
    for (size_t i = 1; i < spans.size(); ++i) {
      if (spans[i].first <= e) {
        e = std::max(e, spans[i].second);
      } else {
        events.push_back({s, +1, speaker});
        events.push_back({e, -1, speaker});
        s = spans[i].first;
        e = spans[i].second;
      }
    }
    events.push_back({s, +1, speaker});
    events.push_back({e, -1, speaker});
  }
  std::sort(events.begin(), events.end(), [](const Event& a, const Event& b) {
    return a.time < b.time || (a.time == b.time && a.delta < b.delta);
  });

  std::vector<SpeakerInterval> out;
  std::set<std::string> active;
  size_t i = 0;
  while (i < events.size()) {
    const double t = events[i].time;
    for (; i < events.size() && events[i].time == t; ++i) {
      if (events[i].delta > 0) active.insert(events[i].speaker);
      else active.erase(events[i].speaker);
    }
    if (i == events.size() || active.size() != 1) continue;
    const std::string& speaker = *active.begin();
    const double next = events[i].time;
    if (!out.empty() && out.back().speaker_id == speaker && out.back().end == t)
      out.back().end = next;
    else
      out.push_back({speaker, t, next});
  }
  return out;
}

struct ClipSpan {
  std::string speaker_id;
  double start = 0.0;
  double end = 0.0;
  int index = 0;  // position within the source interval

  bool operator==(const ClipSpan&) const = default;
};

// Consecutive non-overlapping clips of exactly `clip_len` seconds; the
// remainder shorter than clip_len is dropped.
inline std::vector<ClipSpan> CutClips(const SpeakerInterval& interval, double clip_len) {
  FARFIELD_REQUIRE(clip_len > 0, ErrorCode::kPrecondition, "clip_len must be positive");
  const double span = interval.end - interval.start;
  std::vector<ClipSpan> out;
  if (!(span > 0)) return out;
  const auto count = static_cast<int>(std::floor(span / clip_len + 1e-9));
  for (int k = 0; k < count; ++k)
    out.push_back({interval.speaker_id, interval.start + k * clip_len,
                   interval.start + (k + 1) * clip_len, k});
  return out;
}

// ---------------------------------------------------------------------------
// Mixture synthesis

struct PoolClip {
  std::string clip_id;
  std::string speaker_id;
  AudioClip array;      // multichannel far-field clip
  AudioClip reference;  // aligned headset clip, mono
};

struct MixtureOptions {
  int count = 0;
  int channels = 8;
  uint64_t seed = 0;
  double clip_len = 4.0;
  // Relative probability of 1, 2, 3, 4 speakers.
  std::vector<double> speaker_count_weights = {1.0, 1.0, 1.0, 1.0};
};

struct MixtureSet {
  std::vector<AudioClip> mixtures;
  std::vector<AudioClip> references;
  Manifest recipes;
};

inline std::string MixtureId(int index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "mix_%06d", index);
  return buf;
}

inline uint64_t DeriveSeed(uint64_t seed, const std::string& id) {
  const uint64_t h = Fnv1a64(&seed, sizeof seed);
  return Fnv1a64(id.data(), id.size(), h);
}

// Draws `opts.count` recipes from one seeded generator. Each recipe picks a
// speaker count, that many distinct speakers, and one clip per speaker.
inline std::vector<MixtureRecipe> SampleRecipes(const std::vector<ClipRecord>& pool,
                                                const MixtureOptions& opts) {
  FARFIELD_REQUIRE(opts.count >= 0, ErrorCode::kPrecondition, "count must be >= 0");
  FARFIELD_REQUIRE(opts.speaker_count_weights.size() == 4, ErrorCode::kConfig,
                   "speaker_count_weights needs 4 entries");
  std::map<std::string, std::vector<std::string>> clips_by_speaker;
  for (const auto& c : pool) clips_by_speaker[c.speaker_id].push_back(c.clip_id);
  int max_speakers = 0;
  for (int n = 1; n <= 4; ++n)
    if (opts.speaker_count_weights[n - 1] > 0) max_speakers = n;
  FARFIELD_REQUIRE(max_speakers > 0, ErrorCode::kConfig, "all speaker-count weights are zero");
  FARFIELD_REQUIRE(static_cast<int>(clips_by_speaker.size()) >= max_speakers, ErrorCode::kPool,
                   "pool has " + std::to_string(clips_by_speaker.size()) +
                       " speakers, need " + std::to_string(max_speakers));
  std::vector<std::string> speakers;
  for (const auto& [s, _] : clips_by_speaker) speakers.push_back(s);

  std::mt19937_64 rng(opts.seed);
  std::discrete_distribution<int> count_dist(opts.speaker_count_weights.begin(),
                                             opts.speaker_count_weights.end());
  std::vector<MixtureRecipe> recipes;
  for (int i = 0; i < opts.count; ++i) {
    MixtureRecipe r;
    r.mixture_id = MixtureId(i);
    r.n_speakers = count_dist(rng) + 1;
    r.seed = DeriveSeed(opts.seed, r.mixture_id);
    r.clip_len = opts.clip_len;
    std::vector<std::string> remaining = speakers;
    for (int k = 0; k < r.n_speakers; ++k) {
      std::uniform_int_distribution<size_t> pick_speaker(0, remaining.size() - 1);
      const size_t si = pick_speaker(rng);
      const std::string speaker = remaining[si];
      remaining.erase(remaining.begin() + static_cast<std::ptrdiff_t>(si));
      const auto& clips = clips_by_speaker[speaker];
      std::uniform_int_distribution<size_t> pick_clip(0, clips.size() - 1);
      r.components.push_back({clips[pick_clip(rng)], speaker, 1.0});
    }
    Validate(r);
    recipes.push_back(std::move(r));
  }
  return recipes;
}

// mixture[ch] = sum_k gain_k * array_k[ch] for the first `channels` channels;
// reference = sum_k gain_k * reference_k.
inline std::pair<AudioClip, AudioClip> RenderMixture(
    const MixtureRecipe& recipe, const std::map<std::string, const PoolClip*>& pool,
    int channels) {
  Validate(recipe);
  AudioClip mixture, reference;
  for (size_t k = 0; k < recipe.components.size(); ++k) {
    const auto& comp = recipe.components[k];
    auto it = pool.find(comp.clip_id);
    FARFIELD_REQUIRE(it != pool.end(), ErrorCode::kPool, "unknown clip '" + comp.clip_id + "'");
    const PoolClip& clip = *it->second;
    FARFIELD_REQUIRE(clip.array.num_channels() >= channels, ErrorCode::kPool,
                     "clip '" + comp.clip_id + "' has fewer than " + std::to_string(channels) +
                         " channels");
    FARFIELD_REQUIRE(clip.reference.num_channels() == 1 &&
                         clip.reference.num_samples() == clip.array.num_samples() &&
                         clip.reference.sample_rate == clip.array.sample_rate,
                     ErrorCode::kPool, "clip '" + comp.clip_id + "' reference mismatch");
    if (k == 0) {
      mixture = AudioClip(SampleMatrix::Zero(channels, clip.array.num_samples()),
                          clip.array.sample_rate);
      reference = AudioClip(SampleMatrix::Zero(1, clip.array.num_samples()),
                            clip.array.sample_rate);
    }
    FARFIELD_REQUIRE(clip.array.num_samples() == mixture.num_samples() &&
                         clip.array.sample_rate == mixture.sample_rate,
                     ErrorCode::kPool, "mixture components differ in length or rate");
    mixture.samples += comp.gain * clip.array.samples.topRows(channels);
    reference.samples += comp.gain * clip.reference.samples;
  }
  return {std::move(mixture), std::move(reference)};
}

inline MixtureSet SynthesizeMixtures(const std::vector<PoolClip>& pool, const MixtureOptions& opts) {
  FARFIELD_REQUIRE(opts.channels == 2 || opts.channels == 8, ErrorCode::kConfig,
                   "channels must be 2 or 8");
  std::vector<ClipRecord> records;
  std::map<std::string, const PoolClip*> lookup;
  for (const auto& c : pool) {
    FARFIELD_REQUIRE(lookup.emplace(c.clip_id, &c).second, ErrorCode::kPool,
                     "duplicate clip_id '" + c.clip_id + "'");
    ClipRecord rec;
    rec.clip_id = c.clip_id;
    rec.speaker_id = c.speaker_id;
    records.push_back(rec);
  }
  MixtureSet out;
  for (auto& recipe : SampleRecipes(records, opts)) {
    auto [mix, ref] = RenderMixture(recipe, lookup, opts.channels);
    out.mixtures.push_back(std::move(mix));
    out.references.push_back(std::move(ref));
    out.recipes.records.emplace_back(std::move(recipe));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Synthetic scenes

namespace detail {

// Linear convolution of x with h, truncated to x's length, via FFT.
inline Eigen::RowVectorXd FftConvolve(const Eigen::Ref<const Eigen::RowVectorXd>& x,
                                      const Eigen::Ref<const Eigen::RowVectorXd>& h) {
  const Eigen::Index n = x.size();
  Eigen::Index nfft = 1;
  while (nfft < n + h.size()) nfft <<= 1;
  std::vector<double> a(nfft, 0.0), b(nfft, 0.0);
  for (Eigen::Index i = 0; i < n; ++i) a[i] = x(i);
  for (Eigen::Index i = 0; i < h.size(); ++i) b[i] = h(i);
  Eigen::FFT<double> fft;
  fft.SetFlag(Eigen::FFT<double>::HalfSpectrum);
  std::vector<Complex> fa, fb;
  fft.fwd(fa, a);
  fft.fwd(fb, b);
  for (size_t k = 0; k < fa.size(); ++k) fa[k] *= fb[k];
  std::vector<double> y;
  fft.inv(y, fa, nfft);
  Eigen::RowVectorXd out(n);
  for (Eigen::Index i = 0; i < n; ++i) out(i) = y[i];
  return out;
}

}  // namespace detail

// y(t) = x(t - delay), zero outside the input. Integer delays are exact
// shifts; fractional delays use a phase ramp on a zero-padded transform.
inline Eigen::RowVectorXd DelaySignal(const Eigen::Ref<const Eigen::RowVectorXd>& x, double delay) {
  const Eigen::Index n = x.size();
  Eigen::RowVectorXd y = Eigen::RowVectorXd::Zero(n);
  if (delay == std::round(delay)) {
    const auto d = static_cast<Eigen::Index>(delay);
    if (std::abs(d) >= n) return y;
    if (d >= 0) y.tail(n - d) = x.head(n - d);
    else y.head(n + d) = x.tail(n + d);
    return y;
  }
  Eigen::Index nfft = 1;
  while (nfft < n + 2 * (static_cast<Eigen::Index>(std::ceil(std::abs(delay))) + 256)) nfft <<= 1;
  std::vector<double> a(nfft, 0.0);
  for (Eigen::Index i = 0; i < n; ++i) a[i] = x(i);
  Eigen::FFT<double> fft;
  fft.SetFlag(Eigen::FFT<double>::HalfSpectrum);
  std::vector<Complex> fa;
  fft.fwd(fa, a);
  for (size_t k = 0; k < fa.size(); ++k)
    fa[k] *= std::polar(1.0, -2.0 * std::numbers::pi * static_cast<double>(k) * delay /
                                 static_cast<double>(nfft));
  // The Nyquist bin of a real signal must stay real.
  fa.back() = Complex(fa.back().real() * std::cos(std::numbers::pi * delay), 0.0);
  std::vector<double> out;
  fft.inv(out, fa, nfft);
  for (Eigen::Index i = 0; i < n; ++i) y(i) = out[i];
  return y;
}

// White noise gated into bursts separated by exact silence, with a slowly
// varying amplitude envelope: a stand-in for dry speech.
inline Eigen::RowVectorXd SpeechLikeNoise(Eigen::Index num_samples, int sample_rate, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> burst_s(0.15, 0.45), gap_s(0.05, 0.25),
      level(0.3, 1.0);
  Eigen::RowVectorXd x = Eigen::RowVectorXd::Zero(num_samples);
  Eigen::Index t = 0;
  while (t < num_samples) {
    const auto burst = static_cast<Eigen::Index>(burst_s(rng) * sample_rate);
    const double amp = 0.1 * level(rng);
    for (Eigen::Index i = 0; i < burst && t < num_samples; ++i, ++t) {
      const double env = std::sin(std::numbers::pi * (i + 0.5) / burst);
      x(t) = amp * env * gauss(rng);
    }
    t += static_cast<Eigen::Index>(gap_s(rng) * sample_rate);
  }
  return x;
}

// Exponentially decaying noise tail after a unit direct path; energy falls by
// 60 dB over `length_ms`.
inline Eigen::RowVectorXd ExponentialImpulseResponse(double length_ms, double tail_gain,
                                                     int sample_rate, uint64_t seed) {
  const auto len = std::max<Eigen::Index>(
      1, static_cast<Eigen::Index>(std::round(length_ms * 1e-3 * sample_rate)));
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::RowVectorXd h(len);
  h(0) = 1.0;
  const double rate = 3.0 * std::log(10.0) / static_cast<double>(len);  // amplitude decay
  for (Eigen::Index n = 1; n < len; ++n) h(n) = tail_gain * gauss(rng) * std::exp(-rate * n);
  return h;
}

// Per-source placement: delay (samples) and gain per channel.
struct SourceGeometry {
  std::vector<double> delays;
  std::vector<double> gains;
};

struct SceneOptions {
  double snr_db = std::numeric_limits<double>::infinity();  // no noise when infinite
  double reverb_ms = 0.0;        // exponential tail length; 0 for anechoic
  double reverb_tail_gain = 0.1;
  uint64_t seed = 0;
  StftConfig stft;               // for the oracle mask
};

struct Scene {
  AudioClip mixture;                 // sum of source images plus noise
  std::vector<AudioClip> images;     // per source, full (reverberant) image per channel
  std::vector<AudioClip> direct;     // per source, direct path only per channel
  AudioClip noise;
  TfMask oracle_mask;                // 1 where source energy dominates noise energy
};

inline Scene SynthScene(const std::vector<Eigen::RowVectorXd>& sources,
                        const std::vector<SourceGeometry>& geometry, int sample_rate,
                        const SceneOptions& opts = {}) {
  FARFIELD_REQUIRE(!sources.empty() && sources.size() == geometry.size(), ErrorCode::kShape,
                   "one geometry per source required");
  const Eigen::Index n = sources.front().size();
  const auto channels = static_cast<Eigen::Index>(geometry.front().delays.size());
  FARFIELD_REQUIRE(channels >= 1, ErrorCode::kShape, "geometry needs channels");
  for (size_t s = 0; s < sources.size(); ++s) {
    FARFIELD_REQUIRE(sources[s].size() == n, ErrorCode::kShape, "sources differ in length");
    FARFIELD_REQUIRE(static_cast<Eigen::Index>(geometry[s].delays.size()) == channels &&
                         static_cast<Eigen::Index>(geometry[s].gains.size()) == channels,
                     ErrorCode::kShape, "geometry channel counts differ");
    for (double d : geometry[s].delays)
      FARFIELD_REQUIRE(std::abs(d) <= opts.stft.window_len / 2.0, ErrorCode::kPrecondition,
                       "delay exceeds half the analysis window");
  }

  Scene scene;
  SampleMatrix total = SampleMatrix::Zero(channels, n);
  for (size_t s = 0; s < sources.size(); ++s) {
    SampleMatrix image(channels, n), direct(channels, n);
    for (Eigen::Index c = 0; c < channels; ++c) {
      const Eigen::RowVectorXd shifted =
          geometry[s].gains[c] * DelaySignal(sources[s], geometry[s].delays[c]);
      direct.row(c) = shifted;
      if (opts.reverb_ms > 0) {
        const uint64_t ir_seed =
            DeriveSeed(opts.seed, "ir/" + std::to_string(s) + "/" + std::to_string(c));
        image.row(c) = detail::FftConvolve(
            shifted,
            ExponentialImpulseResponse(opts.reverb_ms, opts.reverb_tail_gain, sample_rate, ir_seed));
      } else {
        image.row(c) = shifted;
      }
    }
    total += image;
    scene.images.emplace_back(std::move(image), sample_rate);
    scene.direct.emplace_back(std::move(direct), sample_rate);
  }

  SampleMatrix noise = SampleMatrix::Zero(channels, n);
  if (std::isfinite(opts.snr_db)) {
    std::mt19937_64 rng(DeriveSeed(opts.seed, "noise"));
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (Eigen::Index c = 0; c < channels; ++c)
      for (Eigen::Index t = 0; t < n; ++t) noise(c, t) = gauss(rng);
    const double target = total.squaredNorm() / std::pow(10.0, opts.snr_db / 10.0);
    noise *= std::sqrt(target / noise.squaredNorm());
  }
  scene.noise = AudioClip(noise, sample_rate);
  scene.mixture = AudioClip(total + noise, sample_rate);

  const ComplexSpectrogram speech_spec = Stft(AudioClip(total, sample_rate), opts.stft);
  const ComplexSpectrogram noise_spec = Stft(scene.noise, opts.stft);
  Eigen::MatrixXd speech_power = Eigen::MatrixXd::Zero(speech_spec.num_frames(), speech_spec.num_bins());
  Eigen::MatrixXd noise_power = speech_power;
  for (Eigen::Index c = 0; c < channels; ++c) {
    speech_power += speech_spec.data[c].cwiseAbs2();
    noise_power += noise_spec.data[c].cwiseAbs2();
  }
  scene.oracle_mask.role = MaskRole::kSpeech;
  scene.oracle_mask.values = (speech_power.array() > noise_power.array()).cast<double>();
  return scene;
}

// Speech mask from a clean reference and the mixture's reference channel:
// 1 where |ref|^2 exceeds |mixture - ref|^2.
inline TfMask OracleMaskFromReference(const AudioClip& mixture_channel, const AudioClip& reference,
                                      const StftConfig& cfg = {}) {
  FARFIELD_REQUIRE(mixture_channel.num_channels() == 1 && reference.num_channels() == 1 &&
                       mixture_channel.num_samples() == reference.num_samples(),
                   ErrorCode::kShape, "oracle mask needs equal-length mono clips");
  const ComplexSpectrogram y = Stft(mixture_channel, cfg);
  const ComplexSpectrogram s = Stft(reference, cfg);
  TfMask mask;
  mask.values = (s.data[0].cwiseAbs2().array() > (y.data[0] - s.data[0]).cwiseAbs2().array())
                    .cast<double>();
  return mask;
}

}  // namespace farfield

#endif  // FARFIELD_MIXGEN_HPP_
