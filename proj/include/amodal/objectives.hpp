#pragma once

#include <cmath>
#include <cstddef>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "amodal/raster.hpp"
#include "amodal/sample.hpp"

namespace amodal {

/// Values below this are raised to it before any logarithm is taken.
inline constexpr double kDepthFloor = 1e-6;

// ---------------------------------------------------------------------------
// Scale-invariant log loss
// ---------------------------------------------------------------------------

struct SilogConfig {
  double lambda = 0.85;
  double alpha = 10.0;

  void validate() const {
    if (!(lambda >= 0.0 && lambda <= 1.0)) {
      throw Error(ErrorKind::InvalidInput, "silog lambda must lie in [0, 1]");
    }
    if (!(alpha > 0.0) || !std::isfinite(alpha)) {
      throw Error(ErrorKind::InvalidInput, "silog alpha must be positive");
    }
  }
};

namespace detail {

template <typename Derived>
double floored_log(const Eigen::ArrayBase<Derived>& a, Eigen::Index i, Eigen::Index j,
                   const char* what) {
  const double v = static_cast<double>(a(i, j));
  if (!std::isfinite(v) || v < 0.0) {
    throw Error(ErrorKind::InvalidDepth, std::string(what) + " value " + std::to_string(v) +
                                             " at (u=" + std::to_string(j) +
                                             ", v=" + std::to_string(i) + ")");
  }
  return std::log(std::max(v, kDepthFloor));
}

// Log residuals g_i = ln(pred_i) - ln(gt_i) over the valid pixels, row-major.
template <typename P, typename G>
Eigen::ArrayXd log_residuals(const Eigen::ArrayBase<P>& pred, const Eigen::ArrayBase<G>& gt,
                             const Mask& valid) {
  require_same_shape(pred, gt, "silog pred/gt");
  require_same_shape(pred, valid, "silog valid mask");
  const Eigen::Index n = valid.count();
  if (n == 0) throw Error(ErrorKind::EmptyMask, "silog: valid mask is empty");
  Eigen::ArrayXd g(n);
  Eigen::Index k = 0;
  for (Eigen::Index i = 0; i < valid.rows(); ++i)
    for (Eigen::Index j = 0; j < valid.cols(); ++j)
      if (valid(i, j)) g(k++) = floored_log(pred, i, j, "pred") - floored_log(gt, i, j, "gt");
  return g;
}

inline double silog_from_residuals(const Eigen::ArrayXd& g, const SilogConfig& cfg) {
  // Centered form of mean(g^2) - lambda mean(g)^2.
  const double mean = g.mean();
  const double var = (g - mean).square().mean();
  return cfg.alpha * std::sqrt(std::max(0.0, var + (1.0 - cfg.lambda) * mean * mean));
}

}  // namespace detail

/// alpha * sqrt(mean(g^2) - lambda * mean(g)^2) with g = ln pred - ln gt over
/// `valid` (natural log, values floored at kDepthFloor).
template <typename P, typename G>
double silog_loss(const Eigen::ArrayBase<P>& pred, const Eigen::ArrayBase<G>& gt, const Mask& valid,
                  const SilogConfig& cfg = {}) {
  cfg.validate();
  return detail::silog_from_residuals(detail::log_residuals(pred, gt, valid), cfg);
}

struct SilogGradient {
  DepthMap grad;  // dL/dpred, zero outside the valid mask
  double loss = 0.0;
  bool at_minimum = false;  // loss == 0: gradient undefined, grad left at zero
};

template <typename P, typename G>
SilogGradient silog_grad(const Eigen::ArrayBase<P>& pred, const Eigen::ArrayBase<G>& gt,
                         const Mask& valid, const SilogConfig& cfg = {}) {
  cfg.validate();
  const Eigen::ArrayXd g = detail::log_residuals(pred, gt, valid);
  SilogGradient out;
  out.loss = detail::silog_from_residuals(g, cfg);
  out.grad = DepthMap::Zero(pred.rows(), pred.cols());
  if (!(out.loss > 0.0)) {
    out.at_minimum = true;
    return out;
  }

  const double n = static_cast<double>(g.size());
  const double sum = g.sum();
  const double scale = cfg.alpha * cfg.alpha / out.loss;
  Eigen::Index k = 0;
  for (Eigen::Index i = 0; i < valid.rows(); ++i) {
    for (Eigen::Index j = 0; j < valid.cols(); ++j) {
      if (!valid(i, j)) continue;
      const double p = static_cast<double>(pred(i, j));
      // The floor is flat, so floored pixels carry no gradient.
      if (p >= kDepthFloor) out.grad(i, j) = scale * (g(k) / n - cfg.lambda * sum / (n * n)) / p;
      ++k;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Conditional flow matching
// ---------------------------------------------------------------------------

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
struct FlowState {
  Vector<Scalar> x0;  // start point (encoded input representation)
  Vector<Scalar> x1;  // target depth representation
  Scalar t = 0;
  Scalar sigma_min = Scalar(1e-4);

  void validate() const {
    if (x0.size() != x1.size()) {
      throw Error(ErrorKind::DimensionError, "flow state: x0 and x1 differ in dimension");
    }
    if (!(t >= 0 && t <= 1)) throw Error(ErrorKind::InvalidInput, "flow state: t outside [0, 1]");
    if (!(sigma_min >= 0)) throw Error(ErrorKind::InvalidInput, "flow state: sigma_min < 0");
  }
};

/// Draw from N(t*x1 + (1-t)*x0, sigma_min^2 I). With sigma_min == 0 no random
/// numbers are consumed and the result is the straight-line interpolant.
template <typename Scalar, typename Rng>
Vector<Scalar> flow_path(const FlowState<Scalar>& state, Rng& rng) {
  state.validate();
  Vector<Scalar> x = state.t * state.x1 + (Scalar(1) - state.t) * state.x0;
  if (state.sigma_min > 0) {
    std::normal_distribution<Scalar> normal(Scalar(0), Scalar(1));
    for (Eigen::Index i = 0; i < x.size(); ++i) x(i) += state.sigma_min * normal(rng);
  }
  return x;
}

/// Regression target x1 - x0 (independent of t).
template <typename D0, typename D1>
Vector<typename D0::Scalar> flow_target(const Eigen::MatrixBase<D0>& x0,
                                        const Eigen::MatrixBase<D1>& x1) {
  if (x0.size() != x1.size()) {
    throw Error(ErrorKind::DimensionError, "flow_target: x0 and x1 differ in dimension");
  }
  return x1 - x0;
}

namespace detail {

/// Unevaluated sum hi + lo with |lo| <= ulp(hi) / 2.
template <typename Scalar>
struct DoubleWord {
  Scalar hi = 0;
  Scalar lo = 0;
};

template <typename Scalar>
DoubleWord<Scalar> two_sum(Scalar a, Scalar b) {
  const Scalar s = a + b;
  const Scalar bp = s - a;
  return {s, (a - (s - bp)) + (b - bp)};
}

template <typename Scalar>
DoubleWord<Scalar> add(DoubleWord<Scalar> x, Scalar y) {
  const DoubleWord<Scalar> s = two_sum(x.hi, y);
  return two_sum(s.hi, s.lo + x.lo);
}

/// x / n, exact whenever the quotient is representable as a double word.
template <typename Scalar>
DoubleWord<Scalar> divide(DoubleWord<Scalar> x, Scalar n) {
  const Scalar q = x.hi / n;
  const Scalar r = std::fma(-q, n, x.hi) + x.lo;
  return two_sum(q, r / n);
}

/// Correctly rounded x0 + d for the common cases (d.lo == 0 included).
template <typename Scalar>
Scalar add_rounded(Scalar x0, DoubleWord<Scalar> d) {
  const DoubleWord<Scalar> s = two_sum(x0, d.hi);
  return s.hi + (s.lo + d.lo);
}

}  // namespace detail

/// Forward Euler from t = 0 to t = 1 in `n_steps` uniform steps:
/// x <- x + (1/n) v(k/n, x), k = 0 .. n-1.
///
/// The state is formed as x0 + (1/n) sum_j v_j with the velocity sum held in
/// double-word precision, so a constant field v returns x0 + v rounded once.
template <typename Scalar, typename Field>
Vector<Scalar> euler_sample(Field&& velocity_field, const Vector<Scalar>& x0, int n_steps) {
  if (n_steps < 1) throw Error(ErrorKind::InvalidInput, "euler_sample: n_steps must be >= 1");
  const Scalar n = static_cast<Scalar>(n_steps);
  std::vector<detail::DoubleWord<Scalar>> sum(static_cast<std::size_t>(x0.size()));
  Vector<Scalar> x = x0;

  for (int k = 0; k < n_steps; ++k) {
    const Scalar t = static_cast<Scalar>(k) / n;
    const Vector<Scalar> v = velocity_field(t, static_cast<const Vector<Scalar>&>(x));
    if (v.size() != x0.size()) {
      throw Error(ErrorKind::DimensionError,
                  "euler_sample: field output dimension changed at step " + std::to_string(k));
    }
    if (!v.allFinite()) {
      throw Error(ErrorKind::NumericalError,
                  "euler_sample: non-finite field output at step " + std::to_string(k));
    }
    for (Eigen::Index i = 0; i < x0.size(); ++i) {
      auto& s = sum[static_cast<std::size_t>(i)];
      s = detail::add(s, v(i));
      x(i) = detail::add_rounded(x0(i), detail::divide(s, n));
    }
    if (!x.allFinite()) {
      throw Error(ErrorKind::NumericalError,
                  "euler_sample: state became non-finite at step " + std::to_string(k));
    }
  }
  return x;
}

// ---------------------------------------------------------------------------
// Guidance
// ---------------------------------------------------------------------------

/// Observation depth and amodal mask, the conditioning channels that sit
/// next to the image representation.
struct GuidancePack {
  DepthMap observation_depth;
  Mask amodal_mask;

  static GuidancePack from_sample(const AmodalSample& s) {
    return {s.observation_depth, s.amodal_mask};
  }

  /// 2 x (H*W): row 0 is depth, row 1 the mask as 0/1, both row-major.
  Eigen::MatrixXd channels() const {
    require_same_shape(observation_depth, amodal_mask, "guidance pack");
    Eigen::MatrixXd c(2, observation_depth.size());
    for (Eigen::Index i = 0; i < observation_depth.size(); ++i) {
      c(0, i) = observation_depth.data()[i];
      c(1, i) = amodal_mask.data()[i] ? 1.0 : 0.0;
    }
    return c;
  }
};

}  // namespace amodal
