// Copyright 2026 The farfield Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include <filesystem>
#include <random>

#include <gtest/gtest.h>

#include "farfield/io.hpp"
#include "oracles.hpp"

namespace farfield {
namespace {

namespace fs = std::filesystem;

fs::path TempPath(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "farfield_io_test";
  fs::create_directories(dir);
  return dir / name;
}

AudioClip RandomClip(int channels, int samples, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  SampleMatrix s(channels, samples);
  for (int c = 0; c < channels; ++c)
    for (int t = 0; t < samples; ++t) s(c, t) = u(rng);
  return AudioClip(s, 16000);
}

TEST(ReadAudio, MonoHeaderEcho) {
  const AudioClip clip = RandomClip(1, 16000, 1);
  const fs::path p = TempPath("mono.wav");
  WriteAudio(clip, p, AudioEncoding::kPcm16);
  const AudioClip back = ReadAudio(p);
  EXPECT_EQ(back.num_channels(), 1);
  EXPECT_EQ(back.num_samples(), 16000);
  EXPECT_EQ(back.sample_rate, 16000);
}

TEST(ReadAudio, Int16NormalizationDivisor) {
  SampleMatrix s(1, 2);
  s << 32767.0 / 32768.0, -1.0;
  const std::string bytes = EncodeWav(AudioClip(s, 16000), AudioEncoding::kPcm16);
  const AudioClip back = DecodeWav(bytes);
  EXPECT_EQ(back.samples(0, 0), 32767.0 / 32768.0);
  EXPECT_NEAR(back.samples(0, 0), 0.99997, 1e-5);
  EXPECT_EQ(back.samples(0, 1), -1.0);
}

TEST(ReadAudio, TruncatedFileIsFormatError) {
  std::string bytes = EncodeWav(RandomClip(2, 100, 2), AudioEncoding::kPcm16);
  bytes.resize(bytes.size() - 10);
  try {
    DecodeWav(bytes);
    FAIL() << "expected format error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kFormat);
  }
}

TEST(ReadAudio, GarbageHeaderIsFormatError) {
  try {
    DecodeWav("not a wave file at all");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kFormat);
  }
}

TEST(ReadAudio, UnsupportedEncoding) {
  std::string bytes = EncodeWav(RandomClip(1, 10, 3), AudioEncoding::kPcm16);
  bytes[20] = 7;  // format tag: mu-law
  try {
    DecodeWav(bytes);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kUnsupported);
  }
}

TEST(ReadAudio, MissingFileIsIoError) {
  try {
    ReadAudio(TempPath("does_not_exist.wav"));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kIo);
  }
}

TEST(WriteAudio, Float32RoundTripIsBitExact) {
  AudioClip clip = RandomClip(3, 4000, 4);
  clip.samples = clip.samples.cast<float>().cast<double>();
  const fs::path p = TempPath("f32.wav");
  WriteAudio(clip, p, AudioEncoding::kFloat32);
  EXPECT_TRUE(ReadAudio(p) == clip);
}

TEST(WriteAudio, Int16RoundTripWithinOneLsb) {
  for (uint64_t seed = 0; seed < 5; ++seed) {
    const AudioClip clip = RandomClip(2, 5000, 10 + seed);
    const AudioClip back = DecodeWav(EncodeWav(clip, AudioEncoding::kPcm16));
    EXPECT_LE((back.samples - clip.samples).cwiseAbs().maxCoeff(), std::ldexp(1.0, -15));
  }
  SampleMatrix edge(1, 2);
  edge << 1.0, -1.0;
  const AudioClip back = DecodeWav(EncodeWav(AudioClip(edge, 8000), AudioEncoding::kPcm16));
  EXPECT_LE(std::abs(back.samples(0, 0) - 1.0), std::ldexp(1.0, -15));
}

TEST(WriteAudio, NanIsPreconditionError) {
  AudioClip clip = RandomClip(1, 10, 5);
  clip.samples(0, 3) = std::nan("");
  try {
    WriteAudio(clip, TempPath("nan.wav"));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kPrecondition);
  }
}

TEST(WriteAudio, UnwritablePathIsIoError) {
  try {
    WriteAudio(RandomClip(1, 10, 6), "/nonexistent_dir_xyz/out.wav");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kIo);
  }
}

TEST(Manifest, EmptyInput) {
  EXPECT_TRUE(ParseManifest("").records.empty());
  EXPECT_TRUE(ParseManifest("\n\n").records.empty());
}

TEST(Manifest, OneAnnotationLine) {
  const Manifest m = ParseManifest(
      R"({"type":"segment","recording_id":"ES2002a","speaker_id":"A","start":1.5,"end":3.25,"channel_role":"headset","source_path":"a.wav"})");
  ASSERT_EQ(m.records.size(), 1u);
  const auto& a = std::get<SegmentAnnotation>(m.records[0]);
  EXPECT_EQ(a.speaker_id, "A");
  EXPECT_EQ(a.end, 3.25);
  EXPECT_EQ(a.channel_role, ChannelRole::kHeadset);
}

TEST(Manifest, EndBeforeStartNamesLine) {
  const std::string text =
      "{\"type\":\"segment\",\"recording_id\":\"r\",\"speaker_id\":\"A\",\"start\":0,\"end\":1,"
      "\"channel_role\":\"array\"}\n"
      "{\"type\":\"segment\",\"recording_id\":\"r\",\"speaker_id\":\"A\",\"start\":5,\"end\":2,"
      "\"channel_role\":\"array\"}\n";
  try {
    ParseManifest(text);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kParse);
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos) << e.what();
  }
}

TEST(Manifest, UnknownSchemaVersion) {
  try {
    ParseManifest(R"({"schema_version":7,"type":"clip"})");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kVersion);
  }
}

TEST(Manifest, MalformedJsonIsParseError) {
  try {
    ParseManifest("{not json");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kParse);
    EXPECT_NE(std::string(e.what()).find("line 1"), std::string::npos);
  }
}

// Property: parse(serialize(m)) == m for randomly generated records.
TEST(Manifest, RandomRoundTripProperty) {
  std::mt19937_64 rng(1234);
  std::uniform_real_distribution<double> u(0.0, 5000.0);
  std::uniform_int_distribution<int> kind(0, 2), nspk(1, 4);
  auto name = [&](const char* prefix) {
    return std::string(prefix) + std::to_string(rng() % 100000) + (rng() % 3 == 0 ? "\"q\\\xc3\xa9" : "");
  };
  for (int trial = 0; trial < 200; ++trial) {
    Manifest m;
    const int count = static_cast<int>(rng() % 8);
    for (int i = 0; i < count; ++i) {
      const double a = u(rng), b = a + 1e-3 + u(rng);
      switch (kind(rng)) {
        case 0:
          m.records.emplace_back(SegmentAnnotation{name("rec"), name("spk"), a, b,
                                                   rng() % 2 ? ChannelRole::kArray : ChannelRole::kHeadset,
                                                   name("/data/")});
          break;
        case 1:
          m.records.emplace_back(ClipRecord{name("clip"), name("rec"), name("spk"), a, b,
                                            name("arr"), name("ref")});
          break;
        default: {
          MixtureRecipe r;
          r.mixture_id = name("mix");
          r.n_speakers = nspk(rng);
          for (int k = 0; k < r.n_speakers; ++k)
            r.components.push_back({name("clip"), "spk" + std::to_string(k), u(rng) / 1000.0});
          r.seed = rng();
          r.clip_len = 0.1 + u(rng) / 1000.0;
          m.records.emplace_back(std::move(r));
        }
      }
    }
    const std::string text = SerializeManifest(m);
    EXPECT_EQ(ParseManifest(text), m);
    EXPECT_EQ(SerializeManifest(ParseManifest(text)), text);
  }
}

TEST(Manifest, MixtureInvariantsEnforced) {
  const std::string dup =
      R"({"type":"mixture","mixture_id":"m","n_speakers":2,"components":[{"clip_id":"a","speaker_id":"s"},{"clip_id":"b","speaker_id":"s"}],"seed":1,"clip_len":4.0})";
  EXPECT_THROW(ParseManifest(dup), Error);
}

}  // namespace
}  // namespace farfield
