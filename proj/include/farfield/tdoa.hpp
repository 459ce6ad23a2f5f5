// Copyright 2026 The farfield Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

// Time difference of arrival by generalized cross-correlation with phase
// transform (GCC-PHAT).

#ifndef FARFIELD_TDOA_HPP_
#define FARFIELD_TDOA_HPP_

#include <algorithm>
#include <cmath>
#include <vector>

#include <unsupported/Eigen/FFT>

#include "farfield/common.hpp"
#include "farfield/io.hpp"

namespace farfield {

struct TdoaEstimate {
  double delay = 0.0;       // samples; positive when `other` lags `reference`
  double peak_value = 0.0;  // PHAT-weighted correlation at the peak, in [0, 1]
  bool reliable = false;
};

struct GccPhatOptions {
  int max_delay = 64;  // samples
  double reliability_threshold = 0.2;
  double spectral_floor = 1e-8;
};

namespace detail {

inline Eigen::Index NextPow2(Eigen::Index n) {
  Eigen::Index p = 1;
  while (p < n) p <<= 1;
  return p;
}

}  // namespace detail

// PHAT-whitened cross-correlation of two equal-length signals over lags
// [-max_delay, max_delay]; element i holds lag i - max_delay.
inline Eigen::VectorXd GccPhatCorrelation(const Eigen::Ref<const Eigen::RowVectorXd>& reference,
                                          const Eigen::Ref<const Eigen::RowVectorXd>& other,
                                          int max_delay, double spectral_floor = 1e-8) {
  const Eigen::Index n = reference.size();
  const Eigen::Index nfft = detail::NextPow2(2 * n);
  std::vector<double> a(nfft, 0.0), b(nfft, 0.0);
  for (Eigen::Index i = 0; i < n; ++i) {
    a[i] = reference(i);
    b[i] = other(i);
  }
  Eigen::FFT<double> fft;
  fft.SetFlag(Eigen::FFT<double>::HalfSpectrum);
  std::vector<Complex> fa, fb;
  fft.fwd(fa, a);
  fft.fwd(fb, b);
  std::vector<Complex> cross(fa.size());
  for (size_t k = 0; k < fa.size(); ++k) {
    const Complex g = fb[k] * std::conj(fa[k]);
    cross[k] = g / std::max(std::abs(g), spectral_floor);
  }
  std::vector<double> corr;
  fft.inv(corr, cross, nfft);

  Eigen::VectorXd out(2 * max_delay + 1);
  for (int lag = -max_delay; lag <= max_delay; ++lag)
    out(lag + max_delay) = corr[(lag + nfft) % nfft];
  return out;
}

inline TdoaEstimate GccPhat(const AudioClip& reference, const AudioClip& other,
                            const GccPhatOptions& opts = {}) {
  FARFIELD_REQUIRE(reference.num_channels() == 1 && other.num_channels() == 1,
                   ErrorCode::kPrecondition, "gcc_phat expects mono clips");
  FARFIELD_REQUIRE(reference.num_samples() == other.num_samples(), ErrorCode::kPrecondition,
                   "gcc_phat inputs differ in length");
  FARFIELD_REQUIRE(reference.sample_rate == other.sample_rate, ErrorCode::kPrecondition,
                   "gcc_phat inputs differ in sample rate");
  const Eigen::Index n = reference.num_samples();
  FARFIELD_REQUIRE(opts.max_delay >= 0 && 2 * static_cast<Eigen::Index>(opts.max_delay) < n,
                   ErrorCode::kPrecondition, "max_delay must be below half the length");
  FARFIELD_REQUIRE(reference.samples.squaredNorm() > 0 && other.samples.squaredNorm() > 0,
                   ErrorCode::kDegenerateInput, "zero-energy input to gcc_phat");

  const Eigen::VectorXd corr = GccPhatCorrelation(reference.samples.row(0), other.samples.row(0),
                                                  opts.max_delay, opts.spectral_floor);
  Eigen::Index best = 0;
  corr.maxCoeff(&best);

  double offset = 0.0;
  if (best > 0 && best + 1 < corr.size()) {
    const double left = corr(best - 1), mid = corr(best), right = corr(best + 1);
    const double denom = left - 2.0 * mid + right;
    if (denom < 0) offset = std::clamp(0.5 * (left - right) / denom, -0.5, 0.5);
  }

  TdoaEstimate est;
  est.delay = std::clamp(static_cast<double>(best - opts.max_delay) + offset,
                         -static_cast<double>(opts.max_delay),
                         static_cast<double>(opts.max_delay));
  est.peak_value = std::clamp(corr(best), 0.0, 1.0);
  est.reliable = est.peak_value >= opts.reliability_threshold;
  return est;
}

// One estimate per channel relative to `ref_channel`; the reference entry is
// exactly {0, 1, reliable}.
inline std::vector<TdoaEstimate> EstimateArrayDelays(const AudioClip& clip,
                                                     Eigen::Index ref_channel,
                                                     const GccPhatOptions& opts = {}) {
  FARFIELD_REQUIRE(clip.num_channels() >= 2, ErrorCode::kPrecondition,
                   "delay estimation needs at least two channels");
  FARFIELD_REQUIRE(ref_channel >= 0 && ref_channel < clip.num_channels(), ErrorCode::kShape,
                   "reference channel out of range");
  const AudioClip ref = clip.channel(ref_channel);
  std::vector<TdoaEstimate> out(clip.num_channels());
  for (Eigen::Index c = 0; c < clip.num_channels(); ++c) {
    if (c == ref_channel) {
      out[c] = {0.0, 1.0, true};
      continue;
    }
    out[c] = GccPhat(ref, clip.channel(c), opts);
  }
  return out;
}

}  // namespace farfield

#endif  // FARFIELD_TDOA_HPP_
