// Copyright 2026 The farfield Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

// Least-squares FIR matched filter mapping a close-talk (headset) signal onto
// a far-field array channel:
//
//   min_f  sum_{t=0}^{N-1} ( sum_k f_k h(t-k) - x(t) )^2,   h(t < 0) = 0
//
// The normal equations R f = r are solved exactly over the segment, so the
// residual is orthogonal to every lagged copy of h. R differs from the
// Toeplitz autocorrelation matrix only by end-of-segment terms of rank < L;
// the fast solver uses that Toeplitz matrix (inverted by Levinson recursion)
// as a preconditioner for conjugate gradients on the exact system.

#ifndef FARFIELD_ALIGN_HPP_
#define FARFIELD_ALIGN_HPP_

#include <cmath>
#include <string>
#include <vector>

#include "farfield/common.hpp"
#include "farfield/io.hpp"

namespace farfield {

struct FirFilter {
  Eigen::VectorXd coeffs;
  double regularization = 0.0;  // epsilon used at solve time
};

enum class FilterSolver { kDense, kLevinson };

struct MatchedFilterOptions {
  int filter_len = 1024;  // 64 ms at 16 kHz
  double regularization = 0.0;
  FilterSolver solver = FilterSolver::kDense;
};

// Normal equations of the segment least-squares problem.
struct NormalEquations {
  Eigen::MatrixXd gram;          // R, L x L
  Eigen::VectorXd cross;         // r
  Eigen::VectorXd autocorr;      // first row of R (Toeplitz generator)
};

inline NormalEquations BuildNormalEquations(const Eigen::Ref<const Eigen::VectorXd>& headset,
                                            const Eigen::Ref<const Eigen::VectorXd>& array,
                                            int filter_len) {
  const Eigen::Index n = headset.size();
  const Eigen::Index len = filter_len;
  NormalEquations eq;
  eq.autocorr.resize(len);
  eq.cross.resize(len);
  for (Eigen::Index k = 0; k < len; ++k) {
    const Eigen::Index span = n - k;
    eq.autocorr(k) = headset.head(span).dot(headset.tail(span));
    eq.cross(k) = headset.head(span).dot(array.tail(span));
  }
  // R(k+1, l+1) = R(k, l) - h(N-1-k) h(N-1-l)
  eq.gram.resize(len, len);
  eq.gram.row(0) = eq.autocorr.transpose();
  eq.gram.col(0) = eq.autocorr;
  for (Eigen::Index k = 0; k + 1 < len; ++k)
    for (Eigen::Index l = k; l + 1 < len; ++l) {
      const double v = eq.gram(k, l) - headset(n - 1 - k) * headset(n - 1 - l);
      eq.gram(k + 1, l + 1) = v;
      eq.gram(l + 1, k + 1) = v;
    }
  return eq;
}

// Solves T x = b for symmetric positive-definite Toeplitz T with first column
// `column` by Levinson recursion, O(n^2).
inline Eigen::VectorXd LevinsonSolve(const Eigen::Ref<const Eigen::VectorXd>& column,
                                     const Eigen::Ref<const Eigen::VectorXd>& b) {
  const Eigen::Index n = column.size();
  FARFIELD_REQUIRE(b.size() == n && n > 0, ErrorCode::kShape, "levinson size mismatch");
  const double t0 = column(0);
  FARFIELD_REQUIRE(t0 > 0, ErrorCode::kSingular, "toeplitz diagonal must be positive");
  const Eigen::VectorXd r = column / t0;
  const Eigen::VectorXd rhs = b / t0;

  Eigen::VectorXd x = Eigen::VectorXd::Zero(n), y = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd scratch(n);
  x(0) = rhs(0);
  if (n == 1) return x;
  y(0) = -r(1);
  double beta = 1.0, alpha = -r(1);
  for (Eigen::Index k = 1; k < n; ++k) {
    beta *= (1.0 - alpha * alpha);
    FARFIELD_REQUIRE(beta > 0, ErrorCode::kSingular, "toeplitz matrix is not positive definite");
    double acc = rhs(k);
    for (Eigen::Index i = 0; i < k; ++i) acc -= r(i + 1) * x(k - 1 - i);
    const double mu = acc / beta;
    for (Eigen::Index i = 0; i < k; ++i) scratch(i) = x(i) + mu * y(k - 1 - i);
    x.head(k) = scratch.head(k);
    x(k) = mu;
    if (k < n - 1) {
      double a = -r(k + 1);
      for (Eigen::Index i = 0; i < k; ++i) a -= r(i + 1) * y(k - 1 - i);
      alpha = a / beta;
      for (Eigen::Index i = 0; i < k; ++i) scratch(i) = y(i) + alpha * y(k - 1 - i);
      y.head(k) = scratch.head(k);
      y(k) = alpha;
    }
  }
  return x;
}

namespace detail {

inline double LoadingFor(const NormalEquations& eq, double regularization) {
  return regularization * eq.gram.trace() / static_cast<double>(eq.gram.rows());
}

inline Eigen::VectorXd DenseFilterSolve(const NormalEquations& eq, double regularization) {
  const Eigen::Index len = eq.gram.rows();
  const Eigen::MatrixXd a =
      eq.gram + LoadingFor(eq, regularization) * Eigen::MatrixXd::Identity(len, len);
  Eigen::LLT<Eigen::MatrixXd> llt(a);
  if (llt.info() != Eigen::Success || !(llt.rcond() > 1e-13))
    throw Error(ErrorCode::kSingular,
                "headset autocorrelation matrix is singular; use regularization > 0");
  return llt.solve(eq.cross);
}

// Preconditioned conjugate gradients on the exact system with the loaded
// Toeplitz matrix as preconditioner.
inline Eigen::VectorXd LevinsonFilterSolve(const NormalEquations& eq, double regularization) {
  const Eigen::Index len = eq.gram.rows();
  const double load = LoadingFor(eq, regularization);
  const Eigen::MatrixXd a = eq.gram + load * Eigen::MatrixXd::Identity(len, len);
  Eigen::VectorXd column = eq.autocorr;
  column(0) += load;
  if (!(column(0) > 0))
    throw Error(ErrorCode::kSingular,
                "headset autocorrelation matrix is singular; use regularization > 0");

  auto precondition = [&](const Eigen::VectorXd& v) {
    try {
      return LevinsonSolve(column, v);
    } catch (const Error&) {
      throw Error(ErrorCode::kSingular,
                  "headset autocorrelation matrix is singular; use regularization > 0");
    }
  };

  const double b_norm = eq.cross.norm();
  Eigen::VectorXd f = precondition(eq.cross);
  if (b_norm == 0) return Eigen::VectorXd::Zero(len);
  Eigen::VectorXd res = eq.cross - a * f;
  Eigen::VectorXd z = precondition(res);
  Eigen::VectorXd p = z;
  double rz = res.dot(z);
  for (int it = 0; it < 4 * len + 50 && res.norm() > 1e-14 * b_norm; ++it) {
    const Eigen::VectorXd ap = a * p;
    const double pap = p.dot(ap);
    if (!(pap > 0))
      throw Error(ErrorCode::kSingular,
                  "headset autocorrelation matrix is singular; use regularization > 0");
    const double step = rz / pap;
    f += step * p;
    res -= step * ap;
    z = precondition(res);
    const double rz_next = res.dot(z);
    p = z + (rz_next / rz) * p;
    rz = rz_next;
  }
  if (!f.allFinite())
    throw Error(ErrorCode::kSingular,
                "headset autocorrelation matrix is singular; use regularization > 0");
  return f;
}

}  // namespace detail

inline FirFilter EstimateMatchedFilter(const AudioClip& headset, const AudioClip& array,
                                       const MatchedFilterOptions& opts = {}) {
  FARFIELD_REQUIRE(headset.num_channels() == 1 && array.num_channels() == 1,
                   ErrorCode::kPrecondition, "matched filter expects mono clips");
  FARFIELD_REQUIRE(headset.sample_rate == array.sample_rate, ErrorCode::kPrecondition,
                   "headset and array sample rates differ");
  FARFIELD_REQUIRE(headset.num_samples() == array.num_samples(), ErrorCode::kPrecondition,
                   "headset and array lengths differ");
  FARFIELD_REQUIRE(opts.filter_len >= 1, ErrorCode::kPrecondition, "filter_len must be >= 1");
  FARFIELD_REQUIRE(headset.num_samples() >= 4 * static_cast<Eigen::Index>(opts.filter_len),
                   ErrorCode::kPrecondition, "segment shorter than 4 * filter_len");
  FARFIELD_REQUIRE(opts.regularization >= 0, ErrorCode::kPrecondition,
                   "regularization must be >= 0");
  FARFIELD_REQUIRE(headset.all_finite() && array.all_finite(), ErrorCode::kPrecondition,
                   "non-finite samples");

  const NormalEquations eq = BuildNormalEquations(headset.samples.row(0).transpose(),
                                                  array.samples.row(0).transpose(),
                                                  opts.filter_len);
  FirFilter filter;
  filter.regularization = opts.regularization;
  filter.coeffs = opts.solver == FilterSolver::kDense
                      ? detail::DenseFilterSolve(eq, opts.regularization)
                      : detail::LevinsonFilterSolve(eq, opts.regularization);
  return filter;
}

// Causal linear convolution truncated to the input length, per channel.
inline AudioClip ApplyFilter(const FirFilter& filter, const AudioClip& clip) {
  const Eigen::Index n = clip.num_samples();
  const Eigen::Index len = filter.coeffs.size();
  SampleMatrix out = SampleMatrix::Zero(clip.num_channels(), n);
  for (Eigen::Index c = 0; c < clip.num_channels(); ++c) {
    for (Eigen::Index k = 0; k < std::min(len, n); ++k) {
      const double f = filter.coeffs(k);
      if (f == 0.0) continue;
      out.row(c).tail(n - k) += f * clip.samples.row(c).head(n - k);
    }
  }
  return AudioClip(std::move(out), clip.sample_rate);
}

// Filtered headset signal f * h, time-aligned to the array segment.
inline AudioClip AlignSegment(const AudioClip& headset_seg, const AudioClip& array_seg,
                              const MatchedFilterOptions& opts = {}) {
  FARFIELD_REQUIRE(headset_seg.num_samples() >= 4 * static_cast<Eigen::Index>(opts.filter_len),
                   ErrorCode::kTooShort,
                   "segment of " + std::to_string(headset_seg.num_samples()) +
                       " samples is shorter than 4 * filter_len");
  return ApplyFilter(EstimateMatchedFilter(headset_seg, array_seg, opts), headset_seg);
}

}  // namespace farfield

#endif  // FARFIELD_ALIGN_HPP_
