// Copyright 2026 The farfield Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

// Audio files (RIFF/WAVE, PCM16 and float32) and the JSON-lines manifests
// that connect the pipeline stages.

#ifndef FARFIELD_IO_HPP_
#define FARFIELD_IO_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

#include "farfield/common.hpp"

namespace farfield {

struct AudioClip {
  SampleMatrix samples;  // [channel][sample]
  int sample_rate = kDefaultSampleRate;

  AudioClip() = default;
  AudioClip(SampleMatrix s, int rate) : samples(std::move(s)), sample_rate(rate) {}

  Eigen::Index num_channels() const { return samples.rows(); }
  Eigen::Index num_samples() const { return samples.cols(); }

  // Mono view of one channel, copied.
  AudioClip channel(Eigen::Index c) const {
    FARFIELD_REQUIRE(c >= 0 && c < num_channels(), ErrorCode::kShape,
                     "channel index " + std::to_string(c) + " out of range");
    return AudioClip(samples.row(c), sample_rate);
  }

  bool all_finite() const { return samples.allFinite(); }

  bool operator==(const AudioClip& o) const {
    return sample_rate == o.sample_rate && samples.rows() == o.samples.rows() &&
           samples.cols() == o.samples.cols() && samples == o.samples;
  }
};

inline AudioClip MonoClip(const Eigen::Ref<const Eigen::RowVectorXd>& x,
                          int sample_rate = kDefaultSampleRate) {
  return AudioClip(SampleMatrix(x), sample_rate);
}

enum class AudioEncoding { kPcm16, kFloat32 };

namespace detail {

inline uint16_t ReadU16(const unsigned char* p) {
  return static_cast<uint16_t>(p[0] | (p[1] << 8));
}

inline uint32_t ReadU32(const unsigned char* p) {
  return static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
         (static_cast<uint32_t>(p[2]) << 16) |
         (static_cast<uint32_t>(p[3]) << 24);
}

inline void PutU16(std::string* out, uint16_t v) {
  out->push_back(static_cast<char>(v & 0xff));
  out->push_back(static_cast<char>((v >> 8) & 0xff));
}

inline void PutU32(std::string* out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out->push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline std::string ReadFileBytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  return std::string(std::istreambuf_iterator<char>(in),
                     std::istreambuf_iterator<char>());
}

inline void WriteFileBytes(const std::filesystem::path& path,
                           std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot open " + path.string() + " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::kIo, "write failed for " + path.string());
}

}  // namespace detail

// Decodes an in-memory RIFF/WAVE image. int16 samples are divided by 32768.
inline AudioClip DecodeWav(std::string_view bytes, const std::string& name = "<memory>") {
  auto fail = [&](const std::string& why) {
    return Error(ErrorCode::kFormat, name + ": " + why);
  };
  const auto* base = reinterpret_cast<const unsigned char*>(bytes.data());
  const size_t size = bytes.size();
  if (size < 12 || std::memcmp(base, "RIFF", 4) != 0 ||
      std::memcmp(base + 8, "WAVE", 4) != 0)
    throw fail("missing RIFF/WAVE header");

  bool have_fmt = false;
  uint16_t format = 0, channels = 0, bits = 0, block_align = 0;
  uint32_t rate = 0;
  const unsigned char* data = nullptr;
  size_t data_size = 0;

  size_t pos = 12;
  while (pos + 8 <= size) {
    const unsigned char* chunk = base + pos;
    const uint32_t chunk_size = detail::ReadU32(chunk + 4);
    const size_t body = pos + 8;
    if (chunk_size > size - body) throw fail("truncated chunk");
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (chunk_size < 16) throw fail("fmt chunk too small");
      const unsigned char* f = base + body;
      format = detail::ReadU16(f);
      channels = detail::ReadU16(f + 2);
      rate = detail::ReadU32(f + 4);
      block_align = detail::ReadU16(f + 12);
      bits = detail::ReadU16(f + 14);
      if (format == 0xFFFE) {
        if (chunk_size < 40) throw fail("extensible fmt chunk too small");
        format = detail::ReadU16(f + 24);  // first bytes of the subformat GUID
      }
      have_fmt = true;
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      data = base + body;
      data_size = chunk_size;
    }
    pos = body + chunk_size + (chunk_size & 1u);
  }
  if (!have_fmt) throw fail("missing fmt chunk");
  if (data == nullptr) throw fail("missing data chunk");
  if (channels == 0 || rate == 0) throw fail("zero channels or sample rate");

  const bool pcm16 = format == 1 && bits == 16;
  const bool float32 = format == 3 && bits == 32;
  if (!pcm16 && !float32)
    throw Error(ErrorCode::kUnsupported,
                name + ": encoding format=" + std::to_string(format) +
                    " bits=" + std::to_string(bits));
  const size_t bytes_per_sample = bits / 8;
  if (block_align != channels * bytes_per_sample) throw fail("inconsistent block align");
  if (data_size % block_align != 0) throw fail("data size is not a whole number of frames");

  const Eigen::Index frames = static_cast<Eigen::Index>(data_size / block_align);
  SampleMatrix samples(channels, frames);
  for (Eigen::Index t = 0; t < frames; ++t) {
    for (uint16_t c = 0; c < channels; ++c) {
      const unsigned char* p = data + (t * channels + c) * bytes_per_sample;
      if (pcm16) {
        samples(c, t) = static_cast<int16_t>(detail::ReadU16(p)) / 32768.0;
      } else {
        const uint32_t u = detail::ReadU32(p);
        float v;
        std::memcpy(&v, &u, sizeof v);
        samples(c, t) = v;
      }
    }
  }
  return AudioClip(std::move(samples), static_cast<int>(rate));
}

inline std::string EncodeWav(const AudioClip& clip, AudioEncoding encoding = AudioEncoding::kFloat32) {
  FARFIELD_REQUIRE(clip.all_finite(), ErrorCode::kPrecondition,
                   "clip contains non-finite samples");
  FARFIELD_REQUIRE(clip.sample_rate > 0 && clip.num_channels() > 0,
                   ErrorCode::kPrecondition, "clip needs channels and a positive rate");
  const auto channels = static_cast<uint16_t>(clip.num_channels());
  const bool pcm16 = encoding == AudioEncoding::kPcm16;
  const uint16_t bits = pcm16 ? 16 : 32;
  const uint16_t block_align = static_cast<uint16_t>(channels * bits / 8);
  const auto frames = static_cast<uint32_t>(clip.num_samples());
  const uint32_t data_size = frames * block_align;
  const uint32_t fmt_size = pcm16 ? 16 : 18;

  std::string out;
  out.reserve(64 + data_size);
  out += "RIFF";
  detail::PutU32(&out, 4 + (8 + fmt_size) + (pcm16 ? 0 : 12) + 8 + data_size);
  out += "WAVE";
  out += "fmt ";
  detail::PutU32(&out, fmt_size);
  detail::PutU16(&out, pcm16 ? 1 : 3);
  detail::PutU16(&out, channels);
  detail::PutU32(&out, static_cast<uint32_t>(clip.sample_rate));
  detail::PutU32(&out, static_cast<uint32_t>(clip.sample_rate) * block_align);
  detail::PutU16(&out, block_align);
  detail::PutU16(&out, bits);
  if (!pcm16) {
    detail::PutU16(&out, 0);
    out += "fact";
    detail::PutU32(&out, 4);
    detail::PutU32(&out, frames);
  }
  out += "data";
  detail::PutU32(&out, data_size);
  for (uint32_t t = 0; t < frames; ++t) {
    for (uint16_t c = 0; c < channels; ++c) {
      const double x = clip.samples(c, t);
      if (pcm16) {
        const double q = std::clamp(std::round(x * 32768.0), -32768.0, 32767.0);
        detail::PutU16(&out, static_cast<uint16_t>(static_cast<int16_t>(q)));
      } else {
        const float v = static_cast<float>(x);
        uint32_t u;
        std::memcpy(&u, &v, sizeof u);
        detail::PutU32(&out, u);
      }
    }
  }
  return out;
}

inline AudioClip ReadAudio(const std::filesystem::path& path) {
  return DecodeWav(detail::ReadFileBytes(path), path.string());
}

inline void WriteAudio(const AudioClip& clip, const std::filesystem::path& path,
                       AudioEncoding encoding = AudioEncoding::kFloat32) {
  detail::WriteFileBytes(path, EncodeWav(clip, encoding));
}

// ---------------------------------------------------------------------------
// Manifest records

enum class ChannelRole { kArray, kHeadset };

inline const char* ToString(ChannelRole role) {
  return role == ChannelRole::kArray ? "array" : "headset";
}

struct SegmentAnnotation {
  std::string recording_id;
  std::string speaker_id;
  double start = 0.0;  // seconds
  double end = 0.0;
  ChannelRole channel_role = ChannelRole::kHeadset;
  std::string source_path;

  bool operator==(const SegmentAnnotation&) const = default;
};

// One fixed-length clip with its far-field (array) audio and the aligned
// close-talk reference.
struct ClipRecord {
  std::string clip_id;
  std::string recording_id;
  std::string speaker_id;
  double start = 0.0;
  double end = 0.0;
  std::string array_path;
  std::string reference_path;

  bool operator==(const ClipRecord&) const = default;
};

struct MixtureComponent {
  std::string clip_id;
  std::string speaker_id;
  double gain = 1.0;

  bool operator==(const MixtureComponent&) const = default;
};

struct MixtureRecipe {
  std::string mixture_id;
  int n_speakers = 0;
  std::vector<MixtureComponent> components;
  uint64_t seed = 0;
  double clip_len = 4.0;

  bool operator==(const MixtureRecipe&) const = default;
};

using ManifestRecord = std::variant<SegmentAnnotation, ClipRecord, MixtureRecipe>;

constexpr int kManifestSchemaVersion = 1;

struct Manifest {
  int schema_version = kManifestSchemaVersion;
  std::vector<ManifestRecord> records;

  bool operator==(const Manifest&) const = default;

  template <typename T>
  std::vector<T> all() const {
    std::vector<T> out;
    for (const auto& r : records)
      if (const T* p = std::get_if<T>(&r)) out.push_back(*p);
    return out;
  }
};

inline void Validate(const SegmentAnnotation& a) {
  FARFIELD_REQUIRE(!a.speaker_id.empty(), ErrorCode::kPrecondition, "empty speaker_id");
  FARFIELD_REQUIRE(std::isfinite(a.start) && std::isfinite(a.end) && a.start >= 0 &&
                       a.start < a.end,
                   ErrorCode::kPrecondition, "segment needs 0 <= start < end");
}

inline void Validate(const ClipRecord& c) {
  FARFIELD_REQUIRE(!c.clip_id.empty() && !c.speaker_id.empty(), ErrorCode::kPrecondition,
                   "clip needs clip_id and speaker_id");
  FARFIELD_REQUIRE(c.start >= 0 && c.start < c.end, ErrorCode::kPrecondition,
                   "clip needs 0 <= start < end");
}

inline void Validate(const MixtureRecipe& r) {
  FARFIELD_REQUIRE(r.n_speakers >= 1 && r.n_speakers <= 4, ErrorCode::kPrecondition,
                   "n_speakers must be in 1..4");
  FARFIELD_REQUIRE(static_cast<size_t>(r.n_speakers) == r.components.size(),
                   ErrorCode::kPrecondition, "n_speakers != component count");
  std::set<std::string> speakers;
  for (const auto& c : r.components) speakers.insert(c.speaker_id);
  FARFIELD_REQUIRE(speakers.size() == r.components.size(), ErrorCode::kPrecondition,
                   "mixture components must come from distinct speakers");
  FARFIELD_REQUIRE(r.clip_len > 0, ErrorCode::kPrecondition, "clip_len must be positive");
}

namespace detail {

using OJson = nlohmann::ordered_json;

inline OJson ToJson(const SegmentAnnotation& a) {
  return OJson{{"type", "segment"},          {"recording_id", a.recording_id},
               {"speaker_id", a.speaker_id}, {"start", a.start},
               {"end", a.end},               {"channel_role", ToString(a.channel_role)},
               {"source_path", a.source_path}};
}

inline OJson ToJson(const ClipRecord& c) {
  return OJson{{"type", "clip"},          {"clip_id", c.clip_id},
               {"recording_id", c.recording_id}, {"speaker_id", c.speaker_id},
               {"start", c.start},        {"end", c.end},
               {"array_path", c.array_path}, {"reference_path", c.reference_path}};
}

inline OJson ToJson(const MixtureRecipe& r) {
  OJson comps = OJson::array();
  for (const auto& c : r.components)
    comps.push_back({{"clip_id", c.clip_id}, {"speaker_id", c.speaker_id}, {"gain", c.gain}});
  return OJson{{"type", "mixture"},       {"mixture_id", r.mixture_id},
               {"n_speakers", r.n_speakers}, {"components", comps},
               {"seed", r.seed},          {"clip_len", r.clip_len}};
}

inline ManifestRecord RecordFromJson(const OJson& j) {
  const std::string type = j.at("type").get<std::string>();
  if (type == "segment") {
    SegmentAnnotation a;
    a.recording_id = j.at("recording_id").get<std::string>();
    a.speaker_id = j.at("speaker_id").get<std::string>();
    a.start = j.at("start").get<double>();
    a.end = j.at("end").get<double>();
    const std::string role = j.at("channel_role").get<std::string>();
    if (role == "array") a.channel_role = ChannelRole::kArray;
    else if (role == "headset") a.channel_role = ChannelRole::kHeadset;
    else throw std::invalid_argument("unknown channel_role '" + role + "'");
    a.source_path = j.value("source_path", "");
    Validate(a);
    return a;
  }
  if (type == "clip") {
    ClipRecord c;
    c.clip_id = j.at("clip_id").get<std::string>();
    c.recording_id = j.value("recording_id", "");
    c.speaker_id = j.at("speaker_id").get<std::string>();
    c.start = j.at("start").get<double>();
    c.end = j.at("end").get<double>();
    c.array_path = j.at("array_path").get<std::string>();
    c.reference_path = j.at("reference_path").get<std::string>();
    Validate(c);
    return c;
  }
  if (type == "mixture") {
    MixtureRecipe r;
    r.mixture_id = j.at("mixture_id").get<std::string>();
    r.n_speakers = j.at("n_speakers").get<int>();
    for (const auto& c : j.at("components"))
      r.components.push_back({c.at("clip_id").get<std::string>(),
                              c.at("speaker_id").get<std::string>(),
                              c.value("gain", 1.0)});
    r.seed = j.at("seed").get<uint64_t>();
    r.clip_len = j.at("clip_len").get<double>();
    Validate(r);
    return r;
  }
  throw std::invalid_argument("unknown record type '" + type + "'");
}

}  // namespace detail

// One JSON object per line. Each line carries the schema version; blank lines
// are ignored.
inline Manifest ParseManifest(std::string_view text) {
  Manifest m;
  size_t line_no = 0;
  size_t pos = 0;
  while (pos < text.size()) {
    size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = text.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;

    const std::string where = "line " + std::to_string(line_no);
    detail::OJson j;
    try {
      j = detail::OJson::parse(line);
    } catch (const std::exception& e) {
      throw Error(ErrorCode::kParse, where + ": " + e.what());
    }
    if (!j.is_object()) throw Error(ErrorCode::kParse, where + ": expected a JSON object");
    int version = kManifestSchemaVersion;
    if (j.contains("schema_version")) {
      if (!j["schema_version"].is_number_integer())
        throw Error(ErrorCode::kParse, where + ": schema_version must be an integer");
      version = j["schema_version"].get<int>();
    }
    if (version != kManifestSchemaVersion)
      throw Error(ErrorCode::kVersion,
                  where + ": unsupported schema_version " + std::to_string(version));
    try {
      m.records.push_back(detail::RecordFromJson(j));
    } catch (const std::exception& e) {
      throw Error(ErrorCode::kParse, where + ": " + e.what());
    }
  }
  return m;
}

inline std::string SerializeManifest(const Manifest& m) {
  FARFIELD_REQUIRE(m.schema_version == kManifestSchemaVersion, ErrorCode::kVersion,
                   "cannot serialize schema_version " + std::to_string(m.schema_version));
  std::string out;
  for (const auto& rec : m.records) {
    detail::OJson j = std::visit([](const auto& r) { return detail::ToJson(r); }, rec);
    detail::OJson line{{"schema_version", m.schema_version}};
    line.update(j);
    out += line.dump();
    out += '\n';
  }
  return out;
}

inline Manifest ReadManifest(const std::filesystem::path& path) {
  try {
    return ParseManifest(detail::ReadFileBytes(path));
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kIo) throw;
    throw Error(e.code(), path.string() + ": " + e.message());
  }
}

inline void WriteManifest(const Manifest& m, const std::filesystem::path& path) {
  detail::WriteFileBytes(path, SerializeManifest(m));
}

}  // namespace farfield

#endif  // FARFIELD_IO_HPP_
