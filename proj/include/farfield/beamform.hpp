// Copyright 2026 The farfield Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

// Delay-and-sum and mask-driven MVDR beamforming in the STFT domain.
//
// Channel sums are accumulated in a canonical order (terms sorted by value)
// so permuting channels together with their delays or weights reproduces the
// output bit for bit.

#ifndef FARFIELD_BEAMFORM_HPP_
#define FARFIELD_BEAMFORM_HPP_

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <numbers>
#include <string>
#include <vector>

#include "farfield/common.hpp"
#include "farfield/io.hpp"
#include "farfield/stft.hpp"
#include "farfield/tdoa.hpp"

namespace farfield {

// Per-channel delay in samples relative to the reference channel (whose entry
// is 0). Positive means the channel lags the reference.
struct SteeringDelays {
  std::vector<double> delays;
};

enum class MaskRole : uint32_t { kSpeech = 0, kNoise = 1 };

struct TfMask {
  Eigen::MatrixXd values;  // frames x bins, each in [0, 1]
  MaskRole role = MaskRole::kSpeech;

  bool valid() const {
    return values.size() == 0 ||
           (values.allFinite() && values.minCoeff() >= 0.0 && values.maxCoeff() <= 1.0);
  }
  // Speech-role view of the mask.
  Eigen::MatrixXd speech() const {
    return role == MaskRole::kSpeech ? values : Eigen::MatrixXd(1.0 - values.array());
  }
};

struct BeamformerWeights {
  Eigen::MatrixXcd w;  // bins x channels
  Eigen::Index ref_channel = 0;
};

struct SpatialCovariances {
  std::vector<Eigen::MatrixXcd> speech;  // [bin] -> M x M
  std::vector<Eigen::MatrixXcd> noise;
  // Bins where the mask (or its complement) summed to zero and uniform frame
  // weights were used instead.
  std::vector<bool> speech_fallback;
  std::vector<bool> noise_fallback;

  Eigen::Index num_bins() const { return static_cast<Eigen::Index>(speech.size()); }
};

struct MvdrOptions {
  Eigen::Index ref_channel = 0;
  double diagonal_loading = 1e-6;  // relative to mean eigenvalue of the noise covariance
};

inline SteeringDelays DelaysFromEstimates(const std::vector<TdoaEstimate>& estimates) {
  SteeringDelays d;
  for (const auto& e : estimates) d.delays.push_back(e.delay);
  return d;
}

namespace detail {

inline bool ComplexLess(const Complex& a, const Complex& b) {
  return a.real() < b.real() || (a.real() == b.real() && a.imag() < b.imag());
}

// Sum independent of the order in which `terms` were produced.
inline Complex CanonicalSum(std::vector<Complex>& terms) {
  std::sort(terms.begin(), terms.end(), ComplexLess);
  Complex s(0.0, 0.0);
  for (const auto& t : terms) s += t;
  return s;
}

inline ComplexSpectrogram MonoLike(const ComplexSpectrogram& spec) {
  ComplexSpectrogram out;
  out.config = spec.config;
  out.sample_rate = spec.sample_rate;
  out.num_samples = spec.num_samples;
  out.data.assign(1, Eigen::MatrixXcd::Zero(spec.num_frames(), spec.num_bins()));
  return out;
}

}  // namespace detail

// Phase-aligns every channel to the reference by a pure phase ramp and
// averages: out(t,f) = (1/M) sum_i exp(+j 2 pi f d_i / fs) x_i(t,f).
inline ComplexSpectrogram Das(const ComplexSpectrogram& spec, const SteeringDelays& delays) {
  spec.check_shape();
  const Eigen::Index m = spec.num_channels();
  FARFIELD_REQUIRE(m >= 1, ErrorCode::kShape, "das needs at least one channel");
  FARFIELD_REQUIRE(static_cast<Eigen::Index>(delays.delays.size()) == m, ErrorCode::kShape,
                   "delay count " + std::to_string(delays.delays.size()) +
                       " != channel count " + std::to_string(m));
  const Eigen::Index bins = spec.num_bins();
  const double n_fft = spec.config.fft_len;

  Eigen::MatrixXcd ramps(bins, m);
  for (Eigen::Index c = 0; c < m; ++c)
    for (Eigen::Index k = 0; k < bins; ++k)
      ramps(k, c) = std::polar(1.0, 2.0 * std::numbers::pi * k * delays.delays[c] / n_fft);

  ComplexSpectrogram out = detail::MonoLike(spec);
  std::vector<Complex> terms(m);
  for (Eigen::Index t = 0; t < spec.num_frames(); ++t) {
    for (Eigen::Index k = 0; k < bins; ++k) {
      for (Eigen::Index c = 0; c < m; ++c) terms[c] = ramps(k, c) * spec.data[c](t, k);
      out.data[0](t, k) = detail::CanonicalSum(terms) / static_cast<double>(m);
    }
  }
  return out;
}

// Mask-weighted spatial covariances per frequency bin.
inline SpatialCovariances EstimateCovariances(const ComplexSpectrogram& spec,
                                              const TfMask& mask) {
  spec.check_shape();
  const Eigen::Index frames = spec.num_frames(), bins = spec.num_bins(),
                     m = spec.num_channels();
  FARFIELD_REQUIRE(mask.values.rows() == frames && mask.values.cols() == bins,
                   ErrorCode::kShape, "mask shape does not match spectrogram");
  FARFIELD_REQUIRE(mask.valid(), ErrorCode::kPrecondition, "mask values outside [0, 1]");
  const Eigen::MatrixXd speech_mask = mask.speech();

  SpatialCovariances cov;
  cov.speech.resize(bins);
  cov.noise.resize(bins);
  cov.speech_fallback.assign(bins, false);
  cov.noise_fallback.assign(bins, false);

  Eigen::MatrixXcd y(m, frames);
  auto weighted = [&](const Eigen::VectorXd& weights, bool* fallback) {
    const double total = weights.sum();
    if (!(total > 0.0)) {
      *fallback = true;
      return Eigen::MatrixXcd((y * y.adjoint()) / static_cast<double>(frames));
    }
    Eigen::MatrixXcd phi = (y * weights.asDiagonal() * y.adjoint()) / total;
    return Eigen::MatrixXcd(0.5 * (phi + phi.adjoint()));
  };
  for (Eigen::Index k = 0; k < bins; ++k) {
    for (Eigen::Index c = 0; c < m; ++c) y.row(c) = spec.data[c].col(k).transpose();
    const Eigen::VectorXd ms = speech_mask.col(k);
    const Eigen::VectorXd mn = (1.0 - ms.array()).matrix();
    bool fs = false, fn = false;
    cov.speech[k] = weighted(ms, &fs);
    cov.noise[k] = weighted(mn, &fn);
    cov.speech_fallback[k] = fs;
    cov.noise_fallback[k] = fn;
  }
  return cov;
}

// Principal eigenvector of `phi_s`, scaled so the `ref_channel` entry is 1.
// Left at unit norm when that entry vanishes.
inline Eigen::VectorXcd PrincipalSteering(const Eigen::MatrixXcd& phi_s, Eigen::Index ref_channel) {
  FARFIELD_REQUIRE(phi_s.allFinite(), ErrorCode::kNumeric, "non-finite speech covariance");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(phi_s);
  FARFIELD_REQUIRE(eig.info() == Eigen::Success, ErrorCode::kNumeric,
                   "eigendecomposition failed");
  Eigen::VectorXcd d = eig.eigenvectors().col(phi_s.rows() - 1);
  const Complex r = d(ref_channel);
  if (std::abs(r) > 1e-12 * d.norm()) {
    d /= r;
    d(ref_channel) = Complex(1.0, 0.0);
  }
  return d;
}

// w = inv(phi_n + load I) d / (d^H inv(phi_n + load I) d), with
// load = loading * tr(phi_n) / M.
inline Eigen::VectorXcd MvdrFromSteering(const Eigen::MatrixXcd& phi_n,
                                         const Eigen::VectorXcd& d, double loading) {
  FARFIELD_REQUIRE(phi_n.allFinite() && d.allFinite(), ErrorCode::kNumeric,
                   "non-finite covariance or steering vector");
  const Eigen::Index m = phi_n.rows();
  double load = loading * phi_n.trace().real() / static_cast<double>(m);
  if (!(load > 0.0) && loading > 0.0) load = loading;
  const Eigen::MatrixXcd loaded =
      phi_n + load * Eigen::MatrixXcd::Identity(m, m);

  Eigen::VectorXcd u;
  Eigen::LLT<Eigen::MatrixXcd> llt(loaded);
  if (llt.info() == Eigen::Success) {
    u = llt.solve(d);
  } else {
    u = loaded.fullPivLu().solve(d);
  }
  const Complex denom = d.dot(u);  // d^H u
  FARFIELD_REQUIRE(std::abs(denom) > 0 && u.allFinite(), ErrorCode::kNumeric,
                   "degenerate MVDR solve");
  return u / std::conj(denom);
}

inline BeamformerWeights MvdrWeights(const SpatialCovariances& cov, const MvdrOptions& opts = {}) {
  FARFIELD_REQUIRE(cov.num_bins() > 0, ErrorCode::kShape, "empty covariance set");
  const Eigen::Index m = cov.speech.front().rows();
  FARFIELD_REQUIRE(opts.ref_channel >= 0 && opts.ref_channel < m, ErrorCode::kShape,
                   "reference channel out of range");
  BeamformerWeights out;
  out.ref_channel = opts.ref_channel;
  out.w.resize(cov.num_bins(), m);
  for (Eigen::Index k = 0; k < cov.num_bins(); ++k) {
    const Eigen::VectorXcd d = PrincipalSteering(cov.speech[k], opts.ref_channel);
    out.w.row(k) = MvdrFromSteering(cov.noise[k], d, opts.diagonal_loading).transpose();
  }
  return out;
}

// out(t,f) = w(f)^H y(t,f)
inline ComplexSpectrogram ApplyWeights(const ComplexSpectrogram& spec,
                                       const BeamformerWeights& weights) {
  spec.check_shape();
  const Eigen::Index m = spec.num_channels();
  FARFIELD_REQUIRE(weights.w.rows() == spec.num_bins() && weights.w.cols() == m,
                   ErrorCode::kShape, "weights shape does not match spectrogram");
  ComplexSpectrogram out = detail::MonoLike(spec);
  std::vector<Complex> terms(m);
  for (Eigen::Index t = 0; t < spec.num_frames(); ++t) {
    for (Eigen::Index k = 0; k < spec.num_bins(); ++k) {
      for (Eigen::Index c = 0; c < m; ++c)
        terms[c] = std::conj(weights.w(k, c)) * spec.data[c](t, k);
      out.data[0](t, k) = detail::CanonicalSum(terms);
    }
  }
  return out;
}

inline ComplexSpectrogram Mvdr(const ComplexSpectrogram& spec, const TfMask& mask,
                               const MvdrOptions& opts = {}) {
  return ApplyWeights(spec, MvdrWeights(EstimateCovariances(spec, mask), opts));
}

// ---------------------------------------------------------------------------
// Mask container: 8-byte magic "FFMASK01", then little-endian uint32 frames,
// uint32 bins, uint32 role (0 speech, 1 noise), then frames*bins float32
// values in frame-major order.

inline std::string EncodeMask(const TfMask& mask) {
  FARFIELD_REQUIRE(mask.valid(), ErrorCode::kPrecondition, "mask values outside [0, 1]");
  std::string out = "FFMASK01";
  detail::PutU32(&out, static_cast<uint32_t>(mask.values.rows()));
  detail::PutU32(&out, static_cast<uint32_t>(mask.values.cols()));
  detail::PutU32(&out, static_cast<uint32_t>(mask.role));
  for (Eigen::Index t = 0; t < mask.values.rows(); ++t)
    for (Eigen::Index k = 0; k < mask.values.cols(); ++k) {
      const float v = static_cast<float>(mask.values(t, k));
      uint32_t u;
      std::memcpy(&u, &v, sizeof u);
      detail::PutU32(&out, u);
    }
  return out;
}

inline TfMask DecodeMask(std::string_view bytes, const std::string& name = "<memory>") {
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  FARFIELD_REQUIRE(bytes.size() >= 20 && bytes.substr(0, 8) == "FFMASK01", ErrorCode::kFormat,
                   name + ": not a mask container");
  const uint32_t frames = detail::ReadU32(p + 8), bins = detail::ReadU32(p + 12),
                 role = detail::ReadU32(p + 16);
  FARFIELD_REQUIRE(role <= 1, ErrorCode::kFormat, name + ": unknown mask role");
  FARFIELD_REQUIRE(bytes.size() == 20 + 4ull * frames * bins, ErrorCode::kFormat,
                   name + ": mask payload size mismatch");
  TfMask mask;
  mask.role = static_cast<MaskRole>(role);
  mask.values.resize(frames, bins);
  const unsigned char* q = p + 20;
  for (uint32_t t = 0; t < frames; ++t)
    for (uint32_t k = 0; k < bins; ++k, q += 4) {
      const uint32_t u = detail::ReadU32(q);
      float v;
      std::memcpy(&v, &u, sizeof v);
      mask.values(t, k) = v;
    }
  FARFIELD_REQUIRE(mask.valid(), ErrorCode::kFormat, name + ": mask values outside [0, 1]");
  return mask;
}

inline TfMask ReadMask(const std::filesystem::path& path) {
  return DecodeMask(detail::ReadFileBytes(path), path.string());
}

inline void WriteMask(const TfMask& mask, const std::filesystem::path& path) {
  detail::WriteFileBytes(path, EncodeMask(mask));
}

}  // namespace farfield

#endif  // FARFIELD_BEAMFORM_HPP_
