#pragma once

#include <cmath>
#include <cstddef>

#include <Eigen/Core>

#include "amodal/raster.hpp"

namespace amodal {

/// Scale-and-shift mapping source -> target: target ~= s * source + t.
struct AffineFit {
  double s = 1.0;
  double t = 0.0;
  double rmse_residual = 0.0;
  std::size_t n_pixels = 0;
};

/// Relative variance floor below which the support is treated as flat.
inline constexpr double kDegenerateTolerance = 1e-12;

/// Least-squares (s, t) minimising sum over `support` of (s*source + t - target)^2.
///
/// Accumulation is in double regardless of the input scalar. Sums are taken
/// about the support means, which gives the same minimiser as the raw normal
/// equations s = (N*C - B*D) / (N*A - B^2), t = (D - s*B) / N without their
/// cancellation. The support is degenerate when the source variance falls
/// below kDegenerateTolerance times the mean squared source value.
template <typename SourceDerived, typename TargetDerived>
AffineFit fit_scale_shift(const Eigen::ArrayBase<SourceDerived>& source,
                          const Eigen::ArrayBase<TargetDerived>& target, const Mask& support) {
  require_same_shape(source, target, "fit_scale_shift source/target");
  require_same_shape(source, support, "fit_scale_shift support");

  std::size_t n = 0;
  double sum_b = 0.0;
  double sum_o = 0.0;
  for (Eigen::Index i = 0; i < support.rows(); ++i) {
    for (Eigen::Index j = 0; j < support.cols(); ++j) {
      if (!support(i, j)) continue;
      ++n;
      sum_b += static_cast<double>(source(i, j));
      sum_o += static_cast<double>(target(i, j));
    }
  }
  if (n < 2) {
    throw Error(ErrorKind::InsufficientSupport,
                "fit_scale_shift needs >= 2 support pixels, got " + std::to_string(n));
  }
  const double count = static_cast<double>(n);
  const double mean_b = sum_b / count;
  const double mean_o = sum_o / count;

  double sxx = 0.0;
  double sxy = 0.0;
  double sbb = 0.0;
  for (Eigen::Index i = 0; i < support.rows(); ++i) {
    for (Eigen::Index j = 0; j < support.cols(); ++j) {
      if (!support(i, j)) continue;
      const double b = static_cast<double>(source(i, j));
      const double db = b - mean_b;
      sxx += db * db;
      sxy += db * (static_cast<double>(target(i, j)) - mean_o);
      sbb += b * b;
    }
  }
  if (!(sxx > kDegenerateTolerance * sbb)) {
    throw Error(ErrorKind::DegenerateSupport,
                "fit_scale_shift: source values are (numerically) constant on the support");
  }

  AffineFit fit;
  fit.n_pixels = n;
  fit.s = sxy / sxx;
  fit.t = mean_o - fit.s * mean_b;
  if (!std::isfinite(fit.s) || !std::isfinite(fit.t)) {
    throw Error(ErrorKind::NumericalError, "fit_scale_shift produced a non-finite fit");
  }

  double sse = 0.0;
  for (Eigen::Index i = 0; i < support.rows(); ++i) {
    for (Eigen::Index j = 0; j < support.cols(); ++j) {
      if (!support(i, j)) continue;
      const double r = fit.s * static_cast<double>(source(i, j)) + fit.t -
                       static_cast<double>(target(i, j));
      sse += r * r;
    }
  }
  fit.rmse_residual = std::sqrt(sse / count);
  return fit;
}

struct AffineResult {
  DepthMap depth;
  std::size_t clamped = 0;  // pixels where s*value + t < 0, stored as 0
};

template <typename Derived>
AffineResult apply_affine(const Eigen::ArrayBase<Derived>& d, const AffineFit& fit) {
  if (!std::isfinite(fit.s) || !std::isfinite(fit.t)) {
    throw Error(ErrorKind::InvalidInput, "apply_affine: non-finite fit");
  }
  AffineResult out;
  out.depth = fit.s * d.template cast<double>() + fit.t;
  for (Eigen::Index i = 0; i < out.depth.size(); ++i) {
    double& v = out.depth.data()[i];
    if (v < 0.0) {
      v = 0.0;
      ++out.clamped;
    }
  }
  return out;
}

struct BlendResult {
  DepthMap depth;
  AffineFit fit;            // predicted -> observed over the visible support
  std::size_t clamped = 0;  // occluded pixels clamped to 0
};

/// Aligns `predicted` to `observed` over `visible` and writes the aligned
/// prediction into the occluded region (amodal AND NOT visible). Every other
/// pixel is copied from `observed` unchanged.
BlendResult blend_prediction(const DepthMap& observed, const DepthMap& predicted,
                             const Mask& amodal, const Mask& visible);

}  // namespace amodal
