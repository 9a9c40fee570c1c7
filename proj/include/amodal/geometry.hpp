#pragma once

#include <Eigen/Core>

#include "amodal/raster.hpp"

namespace amodal {

struct CameraIntrinsics {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;

  void validate() const;
};

/// Back-projects every pixel of `region` with depth z > 0 through the pinhole
/// model. Points are returned as columns, in row-major pixel order.
/// With relative (non-metric) depth the cloud is only defined up to the
/// unknown affine ambiguity of the depth map.
Eigen::Matrix3Xd unproject(const DepthMap& depth, const CameraIntrinsics& k, const Mask& region);

/// Pinhole projection, the inverse of `unproject`. Returns (u, v) columns.
Eigen::Matrix2Xd project(const Eigen::Matrix3Xd& points, const CameraIntrinsics& k);

}  // namespace amodal
