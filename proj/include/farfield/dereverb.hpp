// Copyright 2026 The farfield Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

// Weighted prediction error (WPE) dereverberation: per frequency bin, late
// reverberation is predicted from delayed past frames of all channels and
// subtracted, alternating with re-estimation of the time-varying power.

#ifndef FARFIELD_DEREVERB_HPP_
#define FARFIELD_DEREVERB_HPP_

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "farfield/common.hpp"
#include "farfield/io.hpp"
#include "farfield/stft.hpp"

namespace farfield {

struct WpeConfig {
  int taps = 10;        // K
  int delay = 3;        // prediction delay in frames
  int iterations = 3;
  double psd_floor = 1e-10;
};

struct WpeDiagnostics {
  // Weighted prediction-error objective after each iteration:
  //   sum_{t,f} mean_c |x(t,f,c)|^2 / lambda(t,f) + log lambda(t,f)
  std::vector<double> objective;
  // Bins with a rank-deficient tap stack, solved with diagonal loading.
  int loaded_bins = 0;
};

inline void ValidateWpeConfig(const WpeConfig& cfg) {
  FARFIELD_REQUIRE(cfg.taps >= 0, ErrorCode::kConfig, "taps must be >= 0");
  FARFIELD_REQUIRE(cfg.delay >= 1, ErrorCode::kConfig, "delay must be >= 1 frame");
  FARFIELD_REQUIRE(cfg.iterations >= 1, ErrorCode::kConfig, "iterations must be >= 1");
  FARFIELD_REQUIRE(cfg.psd_floor > 0, ErrorCode::kConfig, "psd_floor must be positive");
}

namespace detail {

// Stacks taps [y(t-delay); y(t-delay-1); ...] for every frame, zero before t=0.
inline Eigen::MatrixXcd StackTaps(const Eigen::MatrixXcd& y, int taps, int delay) {
  const Eigen::Index m = y.rows(), frames = y.cols();
  Eigen::MatrixXcd stacked = Eigen::MatrixXcd::Zero(m * taps, frames);
  for (int j = 0; j < taps; ++j) {
    const Eigen::Index shift = delay + j;
    if (shift >= frames) break;
    stacked.block(j * m, shift, m, frames - shift) = y.leftCols(frames - shift);
  }
  return stacked;
}

inline Eigen::RowVectorXd FrameMeanPower(const Eigen::MatrixXcd& x) {
  return x.cwiseAbs2().colwise().mean();
}

}  // namespace detail

inline ComplexSpectrogram Wpe(const ComplexSpectrogram& spec, const WpeConfig& cfg = {},
                              WpeDiagnostics* diagnostics = nullptr) {
  ValidateWpeConfig(cfg);
  spec.check_shape();
  if (diagnostics) *diagnostics = {};
  if (cfg.taps == 0) return spec;

  const Eigen::Index m = spec.num_channels(), frames = spec.num_frames(),
                     bins = spec.num_bins();
  FARFIELD_REQUIRE(frames > cfg.taps + cfg.delay, ErrorCode::kPrecondition,
                   "wpe needs more than taps + delay frames (" + std::to_string(frames) + ")");

  ComplexSpectrogram out = spec;
  // Per-bin slots, reduced in bin order afterwards.
  Eigen::MatrixXd objective = Eigen::MatrixXd::Zero(bins, cfg.iterations);
  std::vector<char> loaded(bins, 0);

  ParallelFor(bins, [&](Eigen::Index k) {
    Eigen::MatrixXcd y(m, frames);
    for (Eigen::Index c = 0; c < m; ++c) y.row(c) = spec.data[c].col(k).transpose();
    const Eigen::MatrixXcd stacked = detail::StackTaps(y, cfg.taps, cfg.delay);
    const Eigen::Index dim = stacked.rows();

    Eigen::MatrixXcd x = y;
    for (int it = 0; it < cfg.iterations; ++it) {
      const Eigen::RowVectorXd lambda =
          detail::FrameMeanPower(x).cwiseMax(cfg.psd_floor);
      const Eigen::VectorXd inv_lambda = lambda.cwiseInverse().transpose();

      const Eigen::VectorXd scale = inv_lambda.cwiseSqrt();
      const Eigen::MatrixXcd root = stacked * scale.asDiagonal();
      Eigen::MatrixXcd corr = Eigen::MatrixXcd::Zero(dim, dim);
      corr.selfadjointView<Eigen::Lower>().rankUpdate(root);
      corr.triangularView<Eigen::StrictlyUpper>() = corr.adjoint();
      const Eigen::MatrixXcd cross = root * (y * scale.asDiagonal()).adjoint();

      Eigen::MatrixXcd g;
      Eigen::LLT<Eigen::MatrixXcd> llt(corr);
      if (llt.info() == Eigen::Success && llt.rcond() >= 1e-12) {
        g = llt.solve(cross);
      } else {
        // Ill-conditioned: solve the weighted least-squares problem directly.
        const Eigen::MatrixXcd design = scale.asDiagonal() * stacked.adjoint();
        Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXcd> cod(design);
        if (cod.rank() == dim) {
          g = cod.solve(scale.asDiagonal() * y.adjoint());
        } else {
          const double load = 1e-6 * std::max(corr.trace().real() / dim, 1e-300);
          llt.compute(corr + load * Eigen::MatrixXcd::Identity(dim, dim));
          g = llt.solve(cross);
          loaded[k] = 1;
        }
      }
      x = y - g.adjoint() * stacked;

      const Eigen::RowVectorXd power = detail::FrameMeanPower(x);
      double j = 0.0;
      for (Eigen::Index t = 0; t < frames; ++t) j += power(t) / lambda(t) + std::log(lambda(t));
      objective(k, it) = j;
    }
    for (Eigen::Index c = 0; c < m; ++c) out.data[c].col(k) = x.row(c).transpose();
  });
  if (diagnostics) {
    diagnostics->objective.assign(cfg.iterations, 0.0);
    for (int it = 0; it < cfg.iterations; ++it)
      for (Eigen::Index k = 0; k < bins; ++k) diagnostics->objective[it] += objective(k, it);
    diagnostics->loaded_bins = static_cast<int>(std::count(loaded.begin(), loaded.end(), 1));
  }
  return out;
}

// stft -> wpe -> istft
inline AudioClip WpeTime(const AudioClip& clip, const StftConfig& stft_cfg = {},
                         const WpeConfig& wpe_cfg = {}, WpeDiagnostics* diagnostics = nullptr) {
  return Istft(Wpe(Stft(clip, stft_cfg), wpe_cfg, diagnostics));
}

}  // namespace farfield

#endif  // FARFIELD_DEREVERB_HPP_
