#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <string_view>

#include <Eigen/Core>

#include "amodal/error.hpp"

namespace amodal {

/// Row-major H x W raster. Rows index v (image y), columns index u (image x).
template <typename Scalar>
using Raster = Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Relative depth, smaller = nearer. Stored in double; files carry float32.
using DepthMap = Raster<double>;
using Mask = Raster<bool>;

template <typename A, typename B>
void require_same_shape(const Eigen::ArrayBase<A>& a, const Eigen::ArrayBase<B>& b,
                        std::string_view what) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw Error(ErrorKind::DimensionError,
                std::string(what) + ": " + std::to_string(a.cols()) + "x" +
                    std::to_string(a.rows()) + " vs " + std::to_string(b.cols()) + "x" +
                    std::to_string(b.rows()));
  }
}

/// Throws InvalidInput unless every value is finite and non-negative.
template <typename Derived>
void validate_depth(const Eigen::ArrayBase<Derived>& d, std::string_view what) {
  for (Eigen::Index i = 0; i < d.rows(); ++i) {
    for (Eigen::Index j = 0; j < d.cols(); ++j) {
      const double v = static_cast<double>(d(i, j));
      if (!std::isfinite(v) || v < 0.0) {
        throw Error(ErrorKind::InvalidInput, std::string(what) + ": value " + std::to_string(v) +
                                                 " at (u=" + std::to_string(j) +
                                                 ", v=" + std::to_string(i) + ")");
      }
    }
  }
}

struct NormalizedDepth {
  DepthMap depth;
  bool constant = false;  // max == min; depth is all zeros
};

/// (d - min) / (max - min). A flat map yields zeros with `constant` set.
template <typename Derived>
NormalizedDepth normalize_unit(const Eigen::ArrayBase<Derived>& d) {
  if (d.size() == 0) throw Error(ErrorKind::InvalidInput, "normalize_unit: empty raster");
  DepthMap values = d.template cast<double>();
  if (!values.allFinite()) throw Error(ErrorKind::InvalidInput, "normalize_unit: non-finite value");
  const double lo = values.minCoeff();
  const double hi = values.maxCoeff();
  if (hi == lo) return {DepthMap::Zero(values.rows(), values.cols()), true};
  return {(values - lo) / (hi - lo), false};
}

/// Flips a disparity-like map (larger = nearer) into depth order, preserving
/// the value range: out = (min + max) - d.
DepthMap invert_depth_order(const DepthMap& d);

Mask mask_and(const Mask& a, const Mask& b);
Mask mask_and_not(const Mask& a, const Mask& b);
Mask mask_or(const Mask& a, const Mask& b);
std::size_t popcount(const Mask& m);
bool is_subset(const Mask& inner, const Mask& outer);

/// |visible AND amodal| / |amodal|.
double visible_ratio(const Mask& amodal, const Mask& visible);

/// Difficulty split by visible ratio: Easy (0.75, 1], Medium (0.5, 0.75],
/// Hard (0, 0.5].
enum class Bucket { Easy, Medium, Hard };

Bucket bucket_for(double visible_ratio);
std::string_view to_string(Bucket b) noexcept;
Bucket bucket_from_string(std::string_view name);

}  // namespace amodal
