// Copyright 2026 The farfield Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

// Batch runners behind the command-line tool. Each runner reads its inputs,
// writes artifacts under an output directory, and finishes with
// run_manifest.json: the configuration echo plus FNV-1a hashes of every input
// and output file. Files are processed by a worker pool (FARFIELD_WORKERS);
// results are gathered per slot so outputs never depend on scheduling.

#ifndef FARFIELD_PIPELINE_HPP_
#define FARFIELD_PIPELINE_HPP_

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "farfield/align.hpp"
#include "farfield/beamform.hpp"
#include "farfield/common.hpp"
#include "farfield/dereverb.hpp"
#include "farfield/io.hpp"
#include "farfield/metrics.hpp"
#include "farfield/mixgen.hpp"
#include "farfield/stft.hpp"
#include "farfield/tdoa.hpp"

namespace farfield::pipeline {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

constexpr const char* kRunManifestName = "run_manifest.json";

enum class Method { kDas, kMvdr };
enum class Order { kWpeFirst, kBeamformFirst, kNone };

inline Method ParseMethod(const std::string& s) {
  if (s == "das") return Method::kDas;
  if (s == "mvdr") return Method::kMvdr;
  throw Error(ErrorCode::kConfig, "unknown beamformer method '" + s + "'");
}

inline const char* ToString(Method m) { return m == Method::kDas ? "das" : "mvdr"; }

inline Order ParseOrder(const std::string& s) {
  if (s == "wpe-first") return Order::kWpeFirst;
  if (s == "beamform-first") return Order::kBeamformFirst;
  if (s == "none") return Order::kNone;
  throw Error(ErrorCode::kConfig, "unknown order '" + s + "'");
}

inline const char* ToString(Order o) {
  switch (o) {
    case Order::kWpeFirst: return "wpe-first";
    case Order::kBeamformFirst: return "beamform-first";
    case Order::kNone: return "none";
  }
  return "none";
}

struct PipelineConfig {
  StftConfig stft;
  Method method = Method::kDas;
  WpeConfig wpe;
  Order order = Order::kWpeFirst;
  uint64_t seed = 0;
  int channels = 8;
  int ref_channel = 0;
};

inline void Validate(const PipelineConfig& cfg) {
  ValidateStftConfig(cfg.stft);
  ValidateWpeConfig(cfg.wpe);
  FARFIELD_REQUIRE(cfg.channels == 2 || cfg.channels == 8, ErrorCode::kConfig,
                   "channels must be 2 or 8");
  FARFIELD_REQUIRE(cfg.ref_channel >= 0 && cfg.ref_channel < cfg.channels, ErrorCode::kConfig,
                   "ref_channel out of range");
}

inline Json ToJson(const StftConfig& c) {
  return Json{{"window_len", c.window_len}, {"hop", c.hop}, {"window", ToString(c.window)},
              {"fft_len", c.fft_len}};
}

inline Json ToJson(const WpeConfig& c) {
  return Json{{"taps", c.taps}, {"delay", c.delay}, {"iterations", c.iterations},
              {"psd_floor", c.psd_floor}};
}

inline Json ToJson(const PipelineConfig& c) {
  return Json{{"stft", ToJson(c.stft)}, {"method", ToString(c.method)},
              {"wpe", ToJson(c.wpe)},   {"order", ToString(c.order)},
              {"seed", c.seed},         {"channels", c.channels},
              {"ref_channel", c.ref_channel}};
}

// +inf / -inf as strings; JSON has no infinities.
inline Json DbValue(double db) {
  if (db == std::numeric_limits<double>::infinity()) return "inf";
  if (db == -std::numeric_limits<double>::infinity()) return "-inf";
  return db;
}

// ---------------------------------------------------------------------------
// Files and manifests

inline std::string HashHex(uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

inline std::string FileHash(const fs::path& path) {
  const std::string bytes = detail::ReadFileBytes(path);
  return HashHex(Fnv1a64(bytes.data(), bytes.size()));
}

// Rethrows library errors with the stage and file prefixed, once.
template <typename Fn>
auto AtFile(const std::string& stage, const fs::path& file, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const Error& e) {
    if (e.message().rfind(stage + ": ", 0) == 0) throw;
    throw Error(e.code(), stage + ": " + file.string() + ": " + e.message());
  }
}

inline void MakeDirs(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  FARFIELD_REQUIRE(!ec, ErrorCode::kIo, "cannot create directory " + dir.string() + ": " + ec.message());
}

inline fs::path Resolve(const fs::path& base_dir, const std::string& p) {
  const fs::path path(p);
  return path.is_absolute() ? path : (base_dir / path).lexically_normal();
}

// Path written into an output manifest, relative to that manifest's directory.
inline std::string RelativeTo(const fs::path& dir, const fs::path& target) {
  const fs::path rel = fs::absolute(target).lexically_normal().lexically_relative(
      fs::absolute(dir).lexically_normal());
  return rel.empty() ? target.string() : rel.generic_string();
}

// Files named directly plus the .wav files of named directories, sorted by
// name within each directory.
inline std::vector<fs::path> ExpandWavInputs(const std::vector<std::string>& inputs) {
  std::vector<fs::path> out;
  for (const auto& in : inputs) {
    const fs::path p(in);
    if (fs::is_directory(p)) {
      std::vector<fs::path> found;
      for (const auto& entry : fs::directory_iterator(p))
        if (entry.is_regular_file() && entry.path().extension() == ".wav")
          found.push_back(entry.path());
      std::sort(found.begin(), found.end());
      out.insert(out.end(), found.begin(), found.end());
    } else {
      FARFIELD_REQUIRE(fs::exists(p), ErrorCode::kIo, "no such input: " + in);
      out.push_back(p);
    }
  }
  FARFIELD_REQUIRE(!out.empty(), ErrorCode::kPrecondition, "no input .wav files");
  std::set<std::string> names;
  for (const auto& p : out)
    FARFIELD_REQUIRE(names.insert(p.filename().string()).second, ErrorCode::kPrecondition,
                     "duplicate input file name " + p.filename().string());
  return out;
}

class RunManifest {
 public:
  RunManifest(std::string subcommand, fs::path out_dir, Json config)
      : subcommand_(std::move(subcommand)), out_dir_(std::move(out_dir)), config_(std::move(config)) {}

  void AddInput(const fs::path& p) { inputs_.push_back(p); }
  void AddOutput(const fs::path& p) { outputs_.push_back(p); }
  Json& summary() { return summary_; }

  fs::path Write() const {
    Json j;
    j["tool"] = "farfield";
    j["manifest_version"] = 1;
    j["subcommand"] = subcommand_;
    j["config"] = config_;
    auto files = [&](const std::vector<fs::path>& paths, bool relative) {
      Json arr = Json::array();
      for (const auto& p : paths)
        arr.push_back(Json{{"path", relative ? RelativeTo(out_dir_, p) : p.generic_string()},
                           {"fnv1a64", FileHash(p)}});
      return arr;
    };
    j["inputs"] = files(inputs_, false);
    j["outputs"] = files(outputs_, true);
    j["summary"] = summary_.is_null() ? Json::object() : summary_;
    const fs::path path = out_dir_ / kRunManifestName;
    detail::WriteFileBytes(path, j.dump(2) + "\n");
    return path;
  }

 private:
  std::string subcommand_;
  fs::path out_dir_;
  Json config_;
  std::vector<fs::path> inputs_, outputs_;
  Json summary_;
};

// ---------------------------------------------------------------------------
// synth: a small fake meeting for exercising the other subcommands

struct SynthOptions {
  fs::path out;
  uint64_t seed = 0;
  int speakers = 4;
  int channels = 8;
  double duration = 40.0;  // seconds
  double snr_db = 0.0;  // per channel
  double reverb_ms = 0.0;
  int sample_rate = kDefaultSampleRate;
};

inline Json ToJson(const SynthOptions& o) {
  return Json{{"out", o.out.generic_string()}, {"seed", o.seed},       {"speakers", o.speakers},
              {"channels", o.channels},        {"duration", o.duration}, {"snr_db", o.snr_db},
              {"reverb_ms", o.reverb_ms},      {"sample_rate", o.sample_rate}};
}

// Writes headset_<speaker>.wav (dry close-talk), array.wav (multichannel far
// field) and annotations.jsonl. Speakers take turns of 4.5 to 8 s that overlap
// their predecessor by up to 1 s, cycling through shuffled rounds.
inline Json RunSynth(const SynthOptions& o) {
  FARFIELD_REQUIRE(o.speakers >= 1 && o.speakers <= 26, ErrorCode::kConfig, "speakers must be 1..26");
  FARFIELD_REQUIRE(o.channels >= 1, ErrorCode::kConfig, "channels must be >= 1");
  FARFIELD_REQUIRE(o.sample_rate > 0, ErrorCode::kConfig, "sample_rate must be positive");
  FARFIELD_REQUIRE(o.duration >= 10.0 * o.speakers, ErrorCode::kConfig,
                   "duration must allow 10 s per speaker");
  MakeDirs(o.out);
  const int sr = o.sample_rate;
  const auto n = static_cast<Eigen::Index>(std::llround(o.duration * sr));
  std::mt19937_64 rng(o.seed);
  std::uniform_real_distribution<double> turn_len(4.5, 8.0), overlap(0.0, 1.0);

  struct Turn {
    int speaker;
    double start, end;
  };
  auto centis = [](double t) { return std::round(t * 100.0) / 100.0; };
  std::vector<Turn> turns;
  std::vector<int> order;
  double cursor = 0.5;
  while (true) {
    if (order.empty()) {
      for (int s = 0; s < o.speakers; ++s) order.push_back(s);
      std::shuffle(order.begin(), order.end(), rng);
      if (!turns.empty() && order.back() == turns.back().speaker && o.speakers > 1)
        std::swap(order.front(), order.back());
    }
    const double start = turns.empty() ? cursor : centis(cursor - overlap(rng));
    const double end = std::min(centis(start + turn_len(rng)), o.duration - 0.25);
    if (end - start < 4.5) break;
    turns.push_back({order.back(), start, end});
    order.pop_back();
    cursor = end;
  }

  std::vector<Eigen::RowVectorXd> sources(o.speakers, Eigen::RowVectorXd::Zero(n));
  for (size_t i = 0; i < turns.size(); ++i) {
    const auto a = static_cast<Eigen::Index>(std::llround(turns[i].start * sr));
    const auto b = static_cast<Eigen::Index>(std::llround(turns[i].end * sr));
    sources[turns[i].speaker].segment(a, b - a) =
        SpeechLikeNoise(b - a, sr, DeriveSeed(o.seed, "turn/" + std::to_string(i)));
  }

  // Compact array: a common propagation delay plus a small per-channel slope.
  std::uniform_real_distribution<double> base(10.0, 30.0), slope(-0.3, 0.3), gain(0.7, 1.0);
  std::vector<SourceGeometry> geometry(o.speakers);
  for (int s = 0; s < o.speakers; ++s) {
    const double b = std::round(base(rng)), k = slope(rng);
    for (int c = 0; c < o.channels; ++c) {
      geometry[s].delays.push_back(b + std::round(k * c));
      geometry[s].gains.push_back(gain(rng));
    }
  }
  SceneOptions scene_opts;
  scene_opts.snr_db = o.snr_db;
  scene_opts.reverb_ms = o.reverb_ms;
  scene_opts.seed = o.seed;
  const Scene scene = SynthScene(sources, geometry, sr, scene_opts);

  Json config = ToJson(o);
  RunManifest manifest("synth", o.out, config);
  const fs::path array_path = o.out / "array.wav";
  WriteAudio(scene.mixture, array_path);
  manifest.AddOutput(array_path);

  std::vector<std::string> names;
  for (int s = 0; s < o.speakers; ++s) {
    names.push_back(std::string(1, static_cast<char>('A' + s)));
    std::mt19937_64 noise_rng(DeriveSeed(o.seed, "headset/" + names.back()));
    std::normal_distribution<double> g(0.0, 1e-4);
    Eigen::RowVectorXd headset = sources[s];
    for (Eigen::Index t = 0; t < n; ++t) headset(t) += g(noise_rng);
    const fs::path p = o.out / ("headset_" + names.back() + ".wav");
    WriteAudio(MonoClip(headset, sr), p);
    manifest.AddOutput(p);
  }

  Manifest annotations;
  for (const auto& t : turns) {
    const std::string& spk = names[t.speaker];
    annotations.records.emplace_back(SegmentAnnotation{"meeting", spk, t.start, t.end,
                                                       ChannelRole::kHeadset,
                                                       "headset_" + spk + ".wav"});
    annotations.records.emplace_back(
        SegmentAnnotation{"meeting", spk, t.start, t.end, ChannelRole::kArray, "array.wav"});
  }
  const fs::path ann_path = o.out / "annotations.jsonl";
  WriteManifest(annotations, ann_path);
  manifest.AddOutput(ann_path);
  manifest.summary() = Json{{"turns", turns.size()}, {"samples", n}};
  manifest.Write();
  return manifest.summary();
}

// ---------------------------------------------------------------------------
// segments: exactly-one-active intervals per recording

struct RecordingSources {
  std::string array_path;                          // resolved
  std::map<std::string, std::string> headset_path;  // speaker -> resolved
  std::vector<SegmentAnnotation> annotations;
};

// Groups annotations by recording, keeping only `recordings` when non-empty.
// Array-role records name the array file; headset-role records name each
// speaker's close-talk file.
inline std::map<std::string, RecordingSources> GroupRecordings(
    const Manifest& m, const fs::path& base_dir, const std::vector<std::string>& recordings = {}) {
  const std::set<std::string> keep(recordings.begin(), recordings.end());
  std::map<std::string, RecordingSources> out;
  for (const auto& a : m.all<SegmentAnnotation>()) {
    if (!keep.empty() && !keep.count(a.recording_id)) continue;
    RecordingSources& r = out[a.recording_id];
    r.annotations.push_back(a);
    if (a.source_path.empty()) continue;
    const std::string path = Resolve(base_dir, a.source_path).string();
    if (a.channel_role == ChannelRole::kArray) {
      FARFIELD_REQUIRE(r.array_path.empty() || r.array_path == path, ErrorCode::kPrecondition,
                       "recording '" + a.recording_id + "' names two array files");
      r.array_path = path;
    } else {
      auto [it, fresh] = r.headset_path.emplace(a.speaker_id, path);
      FARFIELD_REQUIRE(fresh || it->second == path, ErrorCode::kPrecondition,
                       "speaker '" + a.speaker_id + "' names two headset files");
    }
  }
  for (const auto& id : keep)
    FARFIELD_REQUIRE(out.count(id), ErrorCode::kPrecondition, "no annotations for recording '" + id + "'");
  return out;
}

struct SegmentsOptions {
  fs::path annotations;
  fs::path out;
  std::vector<std::string> recordings;  // empty keeps all
};

inline Json RunSegments(const SegmentsOptions& o) {
  MakeDirs(o.out);
  const Manifest in = AtFile("segments", o.annotations, [&] { return ReadManifest(o.annotations); });
  const auto recordings = AtFile("segments", o.annotations, [&] {
    return GroupRecordings(in, o.annotations.parent_path(), o.recordings);
  });
  Manifest out;
  double total = 0.0;
  int count = 0;
  for (const auto& [rec, src] : recordings) {
    for (const auto& iv : ExtractNonoverlapSegments(src.annotations)) {
      auto hs = src.headset_path.find(iv.speaker_id);
      const std::string headset =
          hs == src.headset_path.end() ? std::string() : RelativeTo(o.out, hs->second);
      out.records.emplace_back(
          SegmentAnnotation{rec, iv.speaker_id, iv.start, iv.end, ChannelRole::kHeadset, headset});
      if (!src.array_path.empty())
        out.records.emplace_back(SegmentAnnotation{rec, iv.speaker_id, iv.start, iv.end,
                                                   ChannelRole::kArray,
                                                   RelativeTo(o.out, src.array_path)});
      total += iv.end - iv.start;
      ++count;
    }
  }
  RunManifest manifest("segments", o.out,
                       Json{{"annotations", o.annotations.generic_string()},
                            {"out", o.out.generic_string()},
                            {"recordings", o.recordings}});
  manifest.AddInput(o.annotations);
  const fs::path path = o.out / "segments.jsonl";
  WriteManifest(out, path);
  manifest.AddOutput(path);
  manifest.summary() = Json{{"recordings", recordings.size()}, {"segments", count},
                            {"seconds", total}};
  manifest.Write();
  return manifest.summary();
}

// ---------------------------------------------------------------------------
// align: matched-filter references per segment, cut into clips

struct AlignOptions {
  fs::path manifest;
  fs::path out;
  MatchedFilterOptions filter{1024, 1e-6, FilterSolver::kDense};
  int ref_channel = 0;
  double clip_len = 4.0;
  std::vector<std::string> recordings;  // empty keeps all
};

inline std::string ClipId(const std::string& rec, const std::string& spk, double start) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%09lld", static_cast<long long>(std::llround(start * 1000.0)));
  return rec + "_" + spk + "_" + buf;
}

inline Json RunAlign(const AlignOptions& o) {
  FARFIELD_REQUIRE(o.clip_len > 0, ErrorCode::kConfig, "clip_len must be positive");
  FARFIELD_REQUIRE(o.ref_channel >= 0, ErrorCode::kConfig, "ref_channel must be >= 0");
  const fs::path clip_dir = o.out / "clips";
  MakeDirs(clip_dir);
  const Manifest in = AtFile("align", o.manifest, [&] { return ReadManifest(o.manifest); });
  const auto recordings = AtFile("align", o.manifest, [&] {
    return GroupRecordings(in, o.manifest.parent_path(), o.recordings);
  });

  struct Job {
    std::string recording, speaker, headset_path, array_path;
    SpeakerInterval interval;
  };
  std::vector<Job> jobs;
  std::set<std::string> files;
  for (const auto& [rec, src] : recordings) {
    for (const auto& iv : ExtractNonoverlapSegments(src.annotations)) {
      if (CutClips(iv, o.clip_len).empty()) continue;
      auto hs = src.headset_path.find(iv.speaker_id);
      FARFIELD_REQUIRE(hs != src.headset_path.end(), ErrorCode::kPrecondition,
                       "align: " + o.manifest.string() + ": no headset file for speaker '" +
                           iv.speaker_id + "' in '" + rec + "'");
      FARFIELD_REQUIRE(!src.array_path.empty(), ErrorCode::kPrecondition,
                       "align: " + o.manifest.string() + ": no array file for '" + rec + "'");
      jobs.push_back({rec, iv.speaker_id, hs->second, src.array_path, iv});
      files.insert(hs->second);
      files.insert(src.array_path);
    }
  }

  std::map<std::string, AudioClip> audio;
  for (const auto& f : files) audio[f] = AtFile("align", f, [&] { return ReadAudio(f); });

  std::vector<std::vector<ClipRecord>> produced(jobs.size());
  std::vector<Json> job_summary(jobs.size());
  ParallelFor(static_cast<Eigen::Index>(jobs.size()), [&](Eigen::Index j) {
    const Job& job = jobs[j];
    AtFile("align", job.array_path, [&] {
      const AudioClip& headset = audio.at(job.headset_path);
      const AudioClip& array = audio.at(job.array_path);
      FARFIELD_REQUIRE(headset.sample_rate == array.sample_rate, ErrorCode::kPrecondition,
                       "headset " + job.headset_path + " has a different sample rate");
      FARFIELD_REQUIRE(o.ref_channel < array.num_channels(), ErrorCode::kPrecondition,
                       "ref_channel exceeds the array channel count");
      const int sr = array.sample_rate;
      const auto a = static_cast<Eigen::Index>(std::llround(job.interval.start * sr));
      const auto b = static_cast<Eigen::Index>(std::llround(job.interval.end * sr));
      FARFIELD_REQUIRE(b <= array.num_samples() && b <= headset.num_samples(), ErrorCode::kPrecondition,
                       "segment ends past the end of the audio");
      const AudioClip h(headset.samples.row(0).segment(a, b - a), sr);
      const AudioClip x(array.samples.row(o.ref_channel).segment(a, b - a), sr);
      const FirFilter filter = EstimateMatchedFilter(h, x, o.filter);
      const AudioClip aligned = ApplyFilter(filter, h);
      job_summary[j] = Json{{"recording_id", job.recording}, {"speaker_id", job.speaker},
                            {"start", job.interval.start}, {"end", job.interval.end},
                            {"si_sdr_headset_db", DbValue(SiSdr(h, x))},
                            {"si_sdr_aligned_db", DbValue(SiSdr(aligned, x))}};
      const auto len = static_cast<Eigen::Index>(std::llround(o.clip_len * sr));
      for (const auto& span : CutClips(job.interval, o.clip_len)) {
        const auto off = static_cast<Eigen::Index>(std::llround((span.start - job.interval.start) * sr));
        if (off + len > b - a) continue;
        ClipRecord rec;
        rec.clip_id = ClipId(job.recording, job.speaker, span.start);
        rec.recording_id = job.recording;
        rec.speaker_id = job.speaker;
        rec.start = span.start;
        rec.end = span.end;
        const fs::path array_out = clip_dir / (rec.clip_id + "_array.wav");
        const fs::path ref_out = clip_dir / (rec.clip_id + "_ref.wav");
        WriteAudio(AudioClip(array.samples.middleCols(a + off, len), sr), array_out);
        WriteAudio(AudioClip(aligned.samples.middleCols(off, len), sr), ref_out);
        rec.array_path = RelativeTo(o.out, array_out);
        rec.reference_path = RelativeTo(o.out, ref_out);
        produced[j].push_back(rec);
      }
    });
  });

  Json cfg{{"manifest", o.manifest.generic_string()},
           {"out", o.out.generic_string()},
           {"filter_len", o.filter.filter_len},
           {"regularization", o.filter.regularization},
           {"solver", o.filter.solver == FilterSolver::kDense ? "dense" : "levinson"},
           {"ref_channel", o.ref_channel},
           {"clip_len", o.clip_len},
           {"recordings", o.recordings}};
  RunManifest manifest("align", o.out, cfg);
  manifest.AddInput(o.manifest);
  for (const auto& f : files) manifest.AddInput(f);
  Manifest clips;
  for (const auto& batch : produced)
    for (const auto& rec : batch) {
      clips.records.emplace_back(rec);
      manifest.AddOutput(o.out / rec.array_path);
      manifest.AddOutput(o.out / rec.reference_path);
    }
  const fs::path path = o.out / "clips.jsonl";
  WriteManifest(clips, path);
  manifest.AddOutput(path);
  manifest.summary() = Json{{"segments", job_summary}, {"clips", clips.records.size()}};
  manifest.Write();
  return Json{{"segments", jobs.size()}, {"clips", clips.records.size()}};
}

// ---------------------------------------------------------------------------
// mix

struct MixOptions {
  fs::path clips;
  fs::path out;
  MixtureOptions mixture;
};

inline Json RunMix(const MixOptions& o) {
  const Manifest in = AtFile("mix", o.clips, [&] { return ReadManifest(o.clips); });
  const fs::path base = o.clips.parent_path();
  std::vector<PoolClip> pool;
  RunManifest manifest("mix", o.out,
                       Json{{"clips", o.clips.generic_string()},
                            {"out", o.out.generic_string()},
                            {"count", o.mixture.count},
                            {"channels", o.mixture.channels},
                            {"clip_len", o.mixture.clip_len},
                            {"seed", o.mixture.seed},
                            {"speaker_count_weights", o.mixture.speaker_count_weights}});
  manifest.AddInput(o.clips);
  for (const auto& c : in.all<ClipRecord>()) {
    PoolClip p;
    p.clip_id = c.clip_id;
    p.speaker_id = c.speaker_id;
    const fs::path ap = Resolve(base, c.array_path), rp = Resolve(base, c.reference_path);
    p.array = AtFile("mix", ap, [&] { return ReadAudio(ap); });
    p.reference = AtFile("mix", rp, [&] { return ReadAudio(rp); });
    FARFIELD_REQUIRE(p.reference.num_channels() == 1, ErrorCode::kPool,
                     "mix: " + rp.string() + ": reference must be mono");
    manifest.AddInput(ap);
    manifest.AddInput(rp);
    pool.push_back(std::move(p));
  }
  const MixtureSet set = AtFile("mix", o.clips, [&] { return SynthesizeMixtures(pool, o.mixture); });

  const fs::path mix_dir = o.out / "mixtures", ref_dir = o.out / "references";
  MakeDirs(mix_dir);
  MakeDirs(ref_dir);
  std::vector<int> histogram(4, 0);
  for (size_t i = 0; i < set.mixtures.size(); ++i) {
    const auto& recipe = std::get<MixtureRecipe>(set.recipes.records[i]);
    ++histogram[recipe.n_speakers - 1];
    const fs::path mp = mix_dir / (recipe.mixture_id + ".wav");
    const fs::path rp = ref_dir / (recipe.mixture_id + ".wav");
    WriteAudio(set.mixtures[i], mp);
    WriteAudio(set.references[i], rp);
    manifest.AddOutput(mp);
    manifest.AddOutput(rp);
  }
  const fs::path recipes = o.out / "recipes.jsonl";
  WriteManifest(set.recipes, recipes);
  manifest.AddOutput(recipes);
  manifest.summary() = Json{{"mixtures", set.mixtures.size()}, {"pool_clips", pool.size()},
                            {"speaker_count_histogram", histogram}};
  manifest.Write();
  return manifest.summary();
}

// ---------------------------------------------------------------------------
// wpe

struct WpeOptions {
  std::vector<std::string> inputs;
  fs::path out;
  StftConfig stft;
  WpeConfig wpe;
};

inline Json RunWpe(const WpeOptions& o) {
  ValidateStftConfig(o.stft);
  ValidateWpeConfig(o.wpe);
  const auto files = ExpandWavInputs(o.inputs);
  MakeDirs(o.out);
  std::vector<Json> per_file(files.size());
  ParallelFor(static_cast<Eigen::Index>(files.size()), [&](Eigen::Index i) {
    AtFile("wpe", files[i], [&] {
      const AudioClip clip = ReadAudio(files[i]);
      WpeDiagnostics diag;
      const AudioClip y = WpeTime(clip, o.stft, o.wpe, &diag);
      WriteAudio(y, o.out / files[i].filename());
      per_file[i] = Json{{"file", files[i].filename().string()},
                         {"objective", diag.objective},
                         {"loaded_bins", diag.loaded_bins}};
    });
  });
  Json inputs = Json::array();
  for (const auto& s : o.inputs) inputs.push_back(s);
  RunManifest manifest("wpe", o.out,
                       Json{{"inputs", inputs}, {"out", o.out.generic_string()},
                            {"stft", ToJson(o.stft)}, {"wpe", ToJson(o.wpe)}});
  for (const auto& f : files) {
    manifest.AddInput(f);
    manifest.AddOutput(o.out / f.filename());
  }
  manifest.summary() = Json{{"files", per_file}};
  manifest.Write();
  return Json{{"files", files.size()}};
}

// ---------------------------------------------------------------------------
// beamform

struct BeamformOptions {
  std::vector<std::string> inputs;
  fs::path out;
  PipelineConfig config;
  std::optional<fs::path> mask_dir;       // <stem>.mask per input
  std::optional<fs::path> reference_dir;  // oracle masks from clean references
  GccPhatOptions gcc;
  double diagonal_loading = 1e-6;
};

inline Json RunBeamform(const BeamformOptions& o) {
  ValidateStftConfig(o.config.stft);
  ValidateWpeConfig(o.config.wpe);
  FARFIELD_REQUIRE(o.config.ref_channel >= 0, ErrorCode::kConfig, "ref_channel must be >= 0");
  FARFIELD_REQUIRE(o.config.method == Method::kDas || o.mask_dir || o.reference_dir,
                   ErrorCode::kConfig, "mvdr needs --mask-dir or --reference-dir");
  const auto files = ExpandWavInputs(o.inputs);
  MakeDirs(o.out);
  std::vector<Json> per_file(files.size());
  std::vector<std::vector<fs::path>> side_inputs(files.size());
  ParallelFor(static_cast<Eigen::Index>(files.size()), [&](Eigen::Index i) {
    AtFile("beamform", files[i], [&] {
      const AudioClip clip = ReadAudio(files[i]);
      FARFIELD_REQUIRE(clip.num_channels() >= 2, ErrorCode::kPrecondition,
                       "beamforming needs at least 2 channels");
      FARFIELD_REQUIRE(o.config.ref_channel < clip.num_channels(), ErrorCode::kPrecondition,
                       "ref_channel exceeds the channel count");
      ComplexSpectrogram spec = Stft(clip, o.config.stft);
      if (o.config.order == Order::kWpeFirst) spec = Wpe(spec, o.config.wpe);

      Json info{{"file", files[i].filename().string()}};
      ComplexSpectrogram out;
      if (o.config.method == Method::kDas) {
        const auto estimates = EstimateArrayDelays(clip, o.config.ref_channel, o.gcc);
        Json delays = Json::array();
        SteeringDelays steering;
        for (const auto& e : estimates) {
          steering.delays.push_back(e.reliable ? e.delay : 0.0);
          delays.push_back(Json{{"delay", e.delay}, {"peak", e.peak_value}, {"reliable", e.reliable}});
        }
        info["delays"] = delays;
        out = Das(spec, steering);
      } else {
        TfMask mask;
        if (o.mask_dir) {
          const fs::path mp = *o.mask_dir / (files[i].stem().string() + ".mask");
          mask = AtFile("beamform", mp, [&] { return ReadMask(mp); });
          side_inputs[i].push_back(mp);
        } else {
          const fs::path rp = *o.reference_dir / files[i].filename();
          const AudioClip ref = AtFile("beamform", rp, [&] { return ReadAudio(rp); });
          mask = AtFile("beamform", rp, [&] {
            return OracleMaskFromReference(clip.channel(o.config.ref_channel), ref.channel(0),
                                           o.config.stft);
          });
          side_inputs[i].push_back(rp);
        }
        const SpatialCovariances cov = EstimateCovariances(spec, mask);
        int fallback = 0;
        for (size_t k = 0; k < cov.speech_fallback.size(); ++k)
          fallback += cov.speech_fallback[k] || cov.noise_fallback[k];
        info["fallback_bins"] = fallback;
        out = ApplyWeights(spec, MvdrWeights(cov, {o.config.ref_channel, o.diagonal_loading}));
      }
      if (o.config.order == Order::kBeamformFirst) out = Wpe(out, o.config.wpe);
      WriteAudio(Istft(out), o.out / files[i].filename());
      per_file[i] = info;
    });
  });
  Json cfg = ToJson(o.config);
  Json inputs = Json::array();
  for (const auto& s : o.inputs) inputs.push_back(s);
  cfg["inputs"] = inputs;
  cfg["out"] = o.out.generic_string();
  cfg["mask_dir"] = o.mask_dir ? Json(o.mask_dir->generic_string()) : Json();
  cfg["reference_dir"] = o.reference_dir ? Json(o.reference_dir->generic_string()) : Json();
  cfg["max_delay"] = o.gcc.max_delay;
  cfg["diagonal_loading"] = o.diagonal_loading;
  RunManifest manifest("beamform", o.out, cfg);
  for (size_t i = 0; i < files.size(); ++i) {
    manifest.AddInput(files[i]);
    for (const auto& p : side_inputs[i]) manifest.AddInput(p);
    manifest.AddOutput(o.out / files[i].filename());
  }
  manifest.summary() = Json{{"files", per_file}};
  manifest.Write();
  return Json{{"files", files.size()}};
}

// ---------------------------------------------------------------------------
// eval

struct EvalOptions {
  std::vector<std::string> estimates;
  std::optional<fs::path> reference_dir;
  std::optional<fs::path> mixture_dir;  // baseline for SI-SDRi: raw ref channel
  int ref_channel = 0;
  std::optional<fs::path> hyp_text;
  std::optional<fs::path> ref_text;
  fs::path out;
};

// One transcript per non-empty line.
inline std::vector<SotTranscript> ReadTranscripts(const fs::path& path) {
  return AtFile("eval", path, [&] {
    std::vector<SotTranscript> out;
    std::istringstream in(detail::ReadFileBytes(path));
    int line_no = 0;
    for (std::string line; std::getline(in, line);) {
      ++line_no;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      try {
        out.push_back(ParseSot(line));
      } catch (const Error& e) {
        throw Error(e.code(), "line " + std::to_string(line_no) + ": " + e.message());
      }
    }
    return out;
  });
}

inline Json RunEval(const EvalOptions& o) {
  FARFIELD_REQUIRE(!o.estimates.empty() || (o.hyp_text && o.ref_text), ErrorCode::kConfig,
                   "eval needs --est with --ref-dir, or --hyp-text with --ref-text");
  FARFIELD_REQUIRE(o.hyp_text.has_value() == o.ref_text.has_value(), ErrorCode::kConfig,
                   "--hyp-text and --ref-text go together");
  MakeDirs(o.out);
  Json est = Json::array();
  for (const auto& s : o.estimates) est.push_back(s);
  auto opt = [](const std::optional<fs::path>& p) { return p ? Json(p->generic_string()) : Json(); };
  RunManifest manifest("eval", o.out,
                       Json{{"est", est},
                            {"ref_dir", opt(o.reference_dir)},
                            {"mixture_dir", opt(o.mixture_dir)},
                            {"ref_channel", o.ref_channel},
                            {"hyp_text", opt(o.hyp_text)},
                            {"ref_text", opt(o.ref_text)},
                            {"out", o.out.generic_string()}});
  Json report;

  if (!o.estimates.empty()) {
    FARFIELD_REQUIRE(o.reference_dir.has_value(), ErrorCode::kConfig, "--est needs --ref-dir");
    const auto files = ExpandWavInputs(o.estimates);
    struct Row {
      double sdr = 0, base = 0, sdri = 0;
    };
    std::vector<Row> rows(files.size());
    ParallelFor(static_cast<Eigen::Index>(files.size()), [&](Eigen::Index i) {
      AtFile("eval", files[i], [&] {
        const AudioClip est = ReadAudio(files[i]);
        const fs::path rp = *o.reference_dir / files[i].filename();
        const AudioClip ref = AtFile("eval", rp, [&] { return ReadAudio(rp); });
        FARFIELD_REQUIRE(est.num_channels() == 1, ErrorCode::kPrecondition, "estimate must be mono");
        rows[i].sdr = SiSdr(est, ref.channel(0));
        if (o.mixture_dir) {
          const fs::path mp = *o.mixture_dir / files[i].filename();
          const AudioClip mix = AtFile("eval", mp, [&] { return ReadAudio(mp); });
          const AudioClip baseline = mix.channel(std::min<Eigen::Index>(o.ref_channel, mix.num_channels() - 1));
          rows[i].base = SiSdr(baseline, ref.channel(0));
          rows[i].sdri = SiSdri(est, ref.channel(0), baseline);
        }
      });
    });
    Json per_file = Json::array();
    double sum_sdr = 0, sum_sdri = 0;
    for (size_t i = 0; i < files.size(); ++i) {
      Json row{{"file", files[i].filename().string()}, {"si_sdr_db", DbValue(rows[i].sdr)}};
      if (o.mixture_dir) {
        row["baseline_si_sdr_db"] = DbValue(rows[i].base);
        row["si_sdri_db"] = DbValue(rows[i].sdri);
      }
      per_file.push_back(row);
      sum_sdr += rows[i].sdr;
      sum_sdri += rows[i].sdri;
      manifest.AddInput(files[i]);
      manifest.AddInput(*o.reference_dir / files[i].filename());
      if (o.mixture_dir) manifest.AddInput(*o.mixture_dir / files[i].filename());
    }
    const auto count = static_cast<double>(files.size());
    report["files"] = per_file;
    report["mean_si_sdr_db"] = DbValue(sum_sdr / count);
    if (o.mixture_dir) report["mean_si_sdri_db"] = DbValue(sum_sdri / count);
  }

  if (o.hyp_text) {
    const auto hyp = ReadTranscripts(*o.hyp_text), ref = ReadTranscripts(*o.ref_text);
    FARFIELD_REQUIRE(hyp.size() == ref.size(), ErrorCode::kParse,
                     "eval: " + o.hyp_text->string() + ": " + std::to_string(hyp.size()) +
                         " transcripts but the reference has " + std::to_string(ref.size()));
    WerResult wer;
    SerResult ser;
    for (size_t i = 0; i < hyp.size(); ++i) {
      wer += Wer(AllWords(hyp[i]), AllWords(ref[i]));
      ser += Ser(hyp[i], ref[i]);
    }
    report["wer_pct"] = wer.percent();
    report["substitutions"] = wer.substitutions;
    report["deletions"] = wer.deletions;
    report["insertions"] = wer.insertions;
    report["ref_words"] = wer.ref_words;
    report["empty_reference"] = wer.empty_reference;
    report["ser_pct"] = ser.percent();
    report["sentence_errors"] = ser.errors;
    report["ref_sentences"] = ser.ref_sentences;
    manifest.AddInput(*o.hyp_text);
    manifest.AddInput(*o.ref_text);
  }

  const fs::path report_path = o.out / "eval_report.json";
  detail::WriteFileBytes(report_path, report.dump(2) + "\n");
  manifest.AddOutput(report_path);
  manifest.summary() = report;
  manifest.Write();
  return report;
}

}  // namespace farfield::pipeline

#endif  // FARFIELD_PIPELINE_HPP_
