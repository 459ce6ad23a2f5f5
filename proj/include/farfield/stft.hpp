// Copyright 2026 The farfield Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef FARFIELD_STFT_HPP_
#define FARFIELD_STFT_HPP_

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include <unsupported/Eigen/FFT>

#include "farfield/common.hpp"
#include "farfield/io.hpp"

namespace farfield {

enum class WindowType { kHann, kSqrtHann };

inline WindowType ParseWindowType(const std::string& name) {
  if (name == "hann") return WindowType::kHann;
  if (name == "sqrt-hann" || name == "sqrthann") return WindowType::kSqrtHann;
  throw Error(ErrorCode::kConfig, "unknown window '" + name + "'");
}

inline const char* ToString(WindowType w) {
  return w == WindowType::kHann ? "hann" : "sqrt-hann";
}

struct StftConfig {
  int window_len = 512;
  int hop = 128;
  WindowType window = WindowType::kHann;
  int fft_len = 512;

  bool operator==(const StftConfig&) const = default;
};

// Periodic window of length `len`.
inline Eigen::VectorXd MakeWindow(WindowType type, int len) {
  Eigen::VectorXd w(len);
  for (int n = 0; n < len; ++n) {
    const double hann = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * n / len);
    w(n) = type == WindowType::kHann ? hann : std::sqrt(hann);
  }
  return w;
}

// Throws a config error unless the squared analysis window overlap-adds to a
// constant at this hop (relative tolerance 1e-10).
inline void ValidateStftConfig(const StftConfig& cfg) {
  FARFIELD_REQUIRE(cfg.window_len >= 2, ErrorCode::kConfig, "window_len must be >= 2");
  FARFIELD_REQUIRE(cfg.hop >= 1 && cfg.hop <= cfg.window_len, ErrorCode::kConfig,
                   "hop must be in [1, window_len]");
  FARFIELD_REQUIRE(cfg.fft_len >= cfg.window_len, ErrorCode::kConfig,
                   "fft_len must be >= window_len");
  const Eigen::VectorXd w = MakeWindow(cfg.window, cfg.window_len);
  Eigen::VectorXd ola = Eigen::VectorXd::Zero(cfg.hop);
  for (int n = 0; n < cfg.window_len; ++n) ola(n % cfg.hop) += w(n) * w(n);
  const double mean = ola.mean();
  const double spread = (ola.array() - mean).abs().maxCoeff();
  FARFIELD_REQUIRE(mean > 0 && spread <= 1e-10 * mean, ErrorCode::kConfig,
                   std::string("window '") + ToString(cfg.window) + "' with length " +
                       std::to_string(cfg.window_len) + " and hop " +
                       std::to_string(cfg.hop) + " violates constant overlap-add");
}

// Presets known to satisfy constant overlap-add; the first is the default.
inline const std::vector<StftConfig>& ShippedStftConfigs() {
  static const std::vector<StftConfig> configs = {
      {512, 128, WindowType::kHann, 512},
      {512, 256, WindowType::kSqrtHann, 512},
      {512, 128, WindowType::kSqrtHann, 512},
      {1024, 256, WindowType::kHann, 1024},
      {400, 100, WindowType::kHann, 512},
  };
  return configs;
}

struct ComplexSpectrogram {
  std::vector<Eigen::MatrixXcd> data;  // [channel] -> frames x bins
  StftConfig config;
  int sample_rate = kDefaultSampleRate;
  Eigen::Index num_samples = 0;  // time-domain length restored by Istft

  Eigen::Index num_channels() const { return static_cast<Eigen::Index>(data.size()); }
  Eigen::Index num_frames() const { return data.empty() ? 0 : data.front().rows(); }
  Eigen::Index num_bins() const { return config.fft_len / 2 + 1; }

  double bin_hz(Eigen::Index k) const {
    return static_cast<double>(k) * sample_rate / config.fft_len;
  }

  void check_shape() const {
    for (const auto& m : data)
      FARFIELD_REQUIRE(m.rows() == num_frames() && m.cols() == num_bins(), ErrorCode::kShape,
                       "spectrogram channels disagree in shape");
  }
};

// Frames in the reflect-padded signal: floor(len / hop) + 1, i.e.
// floor((padded_len - window_len) / hop) + 1 with window_len/2 padding per side.
inline Eigen::Index NumStftFrames(Eigen::Index num_samples, const StftConfig& cfg) {
  const Eigen::Index pad = cfg.window_len / 2;
  return (num_samples + 2 * pad - cfg.window_len) / cfg.hop + 1;
}

inline ComplexSpectrogram Stft(const AudioClip& clip, const StftConfig& cfg = {}) {
  ValidateStftConfig(cfg);
  const Eigen::Index len = clip.num_samples();
  const int win = cfg.window_len;
  const Eigen::Index pad = win / 2;
  FARFIELD_REQUIRE(len >= win, ErrorCode::kPrecondition,
                   "clip shorter than window (" + std::to_string(len) + " < " +
                       std::to_string(win) + ")");

  const Eigen::VectorXd window = MakeWindow(cfg.window, win);
  const Eigen::Index frames = NumStftFrames(len, cfg);
  const Eigen::Index bins = cfg.fft_len / 2 + 1;

  ComplexSpectrogram spec;
  spec.config = cfg;
  spec.sample_rate = clip.sample_rate;
  spec.num_samples = len;

  Eigen::FFT<double> fft;
  fft.SetFlag(Eigen::FFT<double>::HalfSpectrum);
  std::vector<double> frame(cfg.fft_len, 0.0);
  std::vector<Complex> out;

  std::vector<double> padded(len + 2 * pad);
  for (Eigen::Index c = 0; c < clip.num_channels(); ++c) {
    const auto x = clip.samples.row(c);
    for (Eigen::Index i = 0; i < pad; ++i) {
      padded[i] = x(pad - i);
      padded[pad + len + i] = x(len - 2 - i);
    }
    for (Eigen::Index i = 0; i < len; ++i) padded[pad + i] = x(i);

    Eigen::MatrixXcd m(frames, bins);
    for (Eigen::Index t = 0; t < frames; ++t) {
      const Eigen::Index start = t * cfg.hop;
      for (int n = 0; n < win; ++n) frame[n] = padded[start + n] * window(n);
      fft.fwd(out, frame);
      for (Eigen::Index k = 0; k < bins; ++k) m(t, k) = out[k];
    }
    spec.data.push_back(std::move(m));
  }
  return spec;
}

// Weighted overlap-add with the analysis window as synthesis window, divided
// by the accumulated squared-window envelope. Exact inverse of Stft.
inline AudioClip Istft(const ComplexSpectrogram& spec) {
  const StftConfig& cfg = spec.config;
  ValidateStftConfig(cfg);
  spec.check_shape();
  const int win = cfg.window_len;
  const Eigen::Index pad = win / 2;
  const Eigen::Index frames = spec.num_frames();
  FARFIELD_REQUIRE(spec.num_samples > 0 && NumStftFrames(spec.num_samples, cfg) == frames,
                   ErrorCode::kShape,
                   "frame count " + std::to_string(frames) +
                       " inconsistent with signal length " + std::to_string(spec.num_samples));

  const Eigen::VectorXd window = MakeWindow(cfg.window, win);
  const Eigen::Index padded_len = spec.num_samples + 2 * pad;
  Eigen::VectorXd envelope = Eigen::VectorXd::Zero(padded_len);
  for (Eigen::Index t = 0; t < frames; ++t)
    envelope.segment(t * cfg.hop, win) += window.cwiseAbs2();

  Eigen::FFT<double> fft;
  fft.SetFlag(Eigen::FFT<double>::HalfSpectrum);
  std::vector<Complex> bins(spec.num_bins());
  std::vector<double> frame;

  SampleMatrix out(spec.num_channels(), spec.num_samples);
  Eigen::VectorXd acc(padded_len);
  for (Eigen::Index c = 0; c < spec.num_channels(); ++c) {
    acc.setZero();
    const Eigen::MatrixXcd& m = spec.data[c];
    for (Eigen::Index t = 0; t < frames; ++t) {
      for (Eigen::Index k = 0; k < spec.num_bins(); ++k) bins[k] = m(t, k);
      fft.inv(frame, bins, cfg.fft_len);
      const Eigen::Index start = t * cfg.hop;
      for (int n = 0; n < win; ++n) acc(start + n) += frame[n] * window(n);
    }
    for (Eigen::Index i = 0; i < spec.num_samples; ++i) {
      const double e = envelope(pad + i);
      out(c, i) = e > 1e-12 ? acc(pad + i) / e : 0.0;
    }
  }
  return AudioClip(std::move(out), spec.sample_rate);
}

}  // namespace farfield

#endif  // FARFIELD_STFT_HPP_
