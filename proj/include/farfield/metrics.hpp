// Copyright 2026 The farfield Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

// Enhancement and transcription scores: SI-SDR / SI-SDRi, word error rate,
// and sentence-level speaker error rate over serialized (<sc>-separated)
// speaker-attributed transcripts.

#ifndef FARFIELD_METRICS_HPP_
#define FARFIELD_METRICS_HPP_

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "farfield/common.hpp"
#include "farfield/io.hpp"

namespace farfield {

// Returned by SiSdr when the estimate is a scaled copy of the reference.
constexpr double kPerfectSdr = std::numeric_limits<double>::infinity();

inline bool IsPerfect(double sdr_db) { return sdr_db == kPerfectSdr; }

inline double SiSdr(const Eigen::Ref<const Eigen::RowVectorXd>& est,
                    const Eigen::Ref<const Eigen::RowVectorXd>& ref) {
  FARFIELD_REQUIRE(est.size() == ref.size(), ErrorCode::kPrecondition,
                   "si_sdr inputs differ in length");
  const double ref_energy = ref.squaredNorm();
  FARFIELD_REQUIRE(ref_energy > 0, ErrorCode::kDegenerateInput, "si_sdr reference is zero");
  const double alpha = est.dot(ref) / ref_energy;
  const double target = alpha * alpha * ref_energy;
  const double residual = (est - alpha * ref).squaredNorm();
  if (target == 0) return -std::numeric_limits<double>::infinity();
  if (residual < 1e-12 * target) return kPerfectSdr;
  return 10.0 * std::log10(target / residual);
}

inline double SiSdr(const AudioClip& est, const AudioClip& ref) {
  FARFIELD_REQUIRE(est.num_channels() == 1 && ref.num_channels() == 1,
                   ErrorCode::kPrecondition, "si_sdr expects mono clips");
  return SiSdr(est.samples.row(0), ref.samples.row(0));
}

inline double SiSdri(const AudioClip& est, const AudioClip& ref, const AudioClip& baseline) {
  const double a = SiSdr(est, ref);
  const double b = SiSdr(baseline, ref);
  if (a == b) return 0.0;
  return a - b;
}

// ---------------------------------------------------------------------------
// Word error rate

// Lowercases and strips punctuation except apostrophes, then splits on
// whitespace.
inline std::vector<std::string> NormalizeWords(std::string_view text) {
  std::string cleaned;
  cleaned.reserve(text.size());
  for (char ch : text) {
    const auto u = static_cast<unsigned char>(ch);
    if (u >= 0x80 || std::isalnum(u) || ch == '\'')
      cleaned.push_back(static_cast<char>(std::tolower(u)));
    else
      cleaned.push_back(' ');
  }
  std::vector<std::string> words;
  std::istringstream in(cleaned);
  for (std::string w; in >> w;) words.push_back(w);
  return words;
}

struct WerResult {
  int substitutions = 0;
  int deletions = 0;
  int insertions = 0;
  int ref_words = 0;
  bool empty_reference = false;

  int errors() const { return substitutions + deletions + insertions; }
  double percent() const { return 100.0 * errors() / std::max(1, ref_words); }

  WerResult& operator+=(const WerResult& o) {
    substitutions += o.substitutions;
    deletions += o.deletions;
    insertions += o.insertions;
    ref_words += o.ref_words;
    empty_reference = empty_reference || o.empty_reference;
    return *this;
  }
};

// Unit-cost minimum edit distance alignment of hyp against ref.
inline WerResult Wer(const std::vector<std::string>& hyp, const std::vector<std::string>& ref) {
  const size_t n = ref.size(), m = hyp.size();
  std::vector<std::vector<int>> d(n + 1, std::vector<int>(m + 1, 0));
  for (size_t i = 0; i <= n; ++i) d[i][0] = static_cast<int>(i);
  for (size_t j = 0; j <= m; ++j) d[0][j] = static_cast<int>(j);
  for (size_t i = 1; i <= n; ++i)
    for (size_t j = 1; j <= m; ++j)
      d[i][j] = std::min({d[i - 1][j - 1] + (ref[i - 1] == hyp[j - 1] ? 0 : 1), d[i - 1][j] + 1,
                          d[i][j - 1] + 1});

  WerResult r;
  r.ref_words = static_cast<int>(n);
  r.empty_reference = n == 0;
  size_t i = n, j = m;
  while (i > 0 || j > 0) {
    if (i > 0 && j > 0 && d[i][j] == d[i - 1][j - 1] + (ref[i - 1] == hyp[j - 1] ? 0 : 1)) {
      if (ref[i - 1] != hyp[j - 1]) ++r.substitutions;
      --i;
      --j;
    } else if (i > 0 && d[i][j] == d[i - 1][j] + 1) {
      ++r.deletions;
      --i;
    } else {
      ++r.insertions;
      --j;
    }
  }
  return r;
}

// ---------------------------------------------------------------------------
// Speaker-attributed transcripts

constexpr std::string_view kSpeakerChange = "<sc>";
constexpr std::string_view kSpeakerTag = "speaker=";

struct SotSentence {
  std::string speaker_id;
  std::vector<std::string> words;

  bool operator==(const SotSentence&) const = default;
};

struct SotTranscript {
  std::vector<SotSentence> sentences;

  bool operator==(const SotTranscript&) const = default;
};

// "speaker=A w1 w2 <sc> speaker=B w3". Words are normalized as for WER.
inline SotTranscript ParseSot(std::string_view line) {
  SotTranscript out;
  std::istringstream in{std::string(line)};
  SotSentence current;
  bool open = false;
  auto close = [&] {
    if (!open) return;
    FARFIELD_REQUIRE(!current.words.empty(), ErrorCode::kParse,
                     "empty sentence for speaker '" + current.speaker_id + "'");
    out.sentences.push_back(std::move(current));
    current = {};
    open = false;
  };
  for (std::string tok; in >> tok;) {
    if (tok == kSpeakerChange) {
      FARFIELD_REQUIRE(open, ErrorCode::kParse, "<sc> without a preceding sentence");
      close();
    } else if (tok.rfind(kSpeakerTag, 0) == 0) {
      FARFIELD_REQUIRE(!open || current.words.empty(), ErrorCode::kParse,
                       "speaker tag inside a sentence; separate sentences with <sc>");
      current.speaker_id = tok.substr(kSpeakerTag.size());
      FARFIELD_REQUIRE(!current.speaker_id.empty(), ErrorCode::kParse, "empty speaker tag");
      open = true;
    } else {
      FARFIELD_REQUIRE(open, ErrorCode::kParse, "word '" + tok + "' before any speaker= tag");
      for (auto& w : NormalizeWords(tok)) current.words.push_back(std::move(w));
    }
  }
  close();
  return out;
}

inline std::string SerializeSot(const SotTranscript& t) {
  std::string out;
  for (size_t s = 0; s < t.sentences.size(); ++s) {
    if (s > 0) out += " <sc> ";
    out += std::string(kSpeakerTag) + t.sentences[s].speaker_id;
    for (const auto& w : t.sentences[s].words) out += " " + w;
  }
  return out;
}

inline std::vector<std::string> AllWords(const SotTranscript& t) {
  std::vector<std::string> words;
  for (const auto& s : t.sentences) words.insert(words.end(), s.words.begin(), s.words.end());
  return words;
}

struct SerResult {
  int errors = 0;
  int ref_sentences = 0;

  double percent() const {
    return ref_sentences == 0 ? 0.0 : 100.0 * errors / ref_sentences;
  }
  SerResult& operator+=(const SerResult& o) {
    errors += o.errors;
    ref_sentences += o.ref_sentences;
    return *this;
  }
};

// Sentences are aligned by minimum edit distance, substituting a hyp sentence
// for a ref sentence at the cost of its word error fraction and inserting or
// deleting a sentence at cost 1. A ref sentence is an error when its aligned
// hyp sentence carries another speaker or when it is left unaligned.
inline SerResult Ser(const SotTranscript& hyp, const SotTranscript& ref) {
  const size_t n = ref.sentences.size(), m = hyp.sentences.size();
  std::vector<std::vector<double>> sub(n, std::vector<double>(m));
  for (size_t i = 0; i < n; ++i)
    for (size_t j = 0; j < m; ++j) {
      const WerResult w = Wer(hyp.sentences[j].words, ref.sentences[i].words);
      sub[i][j] = static_cast<double>(w.errors()) / std::max(1, w.ref_words);
    }
  std::vector<std::vector<double>> d(n + 1, std::vector<double>(m + 1, 0.0));
  for (size_t i = 0; i <= n; ++i) d[i][0] = static_cast<double>(i);
  for (size_t j = 0; j <= m; ++j) d[0][j] = static_cast<double>(j);
  for (size_t i = 1; i <= n; ++i)
    for (size_t j = 1; j <= m; ++j)
      d[i][j] = std::min({d[i - 1][j - 1] + sub[i - 1][j - 1], d[i - 1][j] + 1.0,
                          d[i][j - 1] + 1.0});

  SerResult r;
  r.ref_sentences = static_cast<int>(n);
  size_t i = n, j = m;
  while (i > 0 || j > 0) {
    if (i > 0 && j > 0 && d[i][j] == d[i - 1][j - 1] + sub[i - 1][j - 1]) {
      if (hyp.sentences[j - 1].speaker_id != ref.sentences[i - 1].speaker_id) ++r.errors;
      --i;
      --j;
    } else if (i > 0 && d[i][j] == d[i - 1][j] + 1.0) {
      ++r.errors;  // unaligned ref sentence
      --i;
    } else {
      --j;
    }
  }
  return r;
}

struct ScoreReport {
  double si_sdr_db = 0.0;
  double si_sdri_db = 0.0;
  WerResult wer;
  SerResult ser;

  double wer_pct() const { return wer.percent(); }
  double ser_pct() const { return ser.percent(); }
};

}  // namespace farfield

#endif  // FARFIELD_METRICS_HPP_
