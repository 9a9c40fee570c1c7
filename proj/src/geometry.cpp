#include "amodal/geometry.hpp"

#include <cmath>

namespace amodal {

void CameraIntrinsics::validate() const {
  if (!(fx > 0.0) || !(fy > 0.0) || !std::isfinite(fx) || !std::isfinite(fy) ||
      !std::isfinite(cx) || !std::isfinite(cy)) {
    throw Error(ErrorKind::InvalidInput, "camera intrinsics need finite fx > 0, fy > 0");
  }
}

Eigen::Matrix3Xd unproject(const DepthMap& depth, const CameraIntrinsics& k, const Mask& region) {
  require_same_shape(depth, region, "unproject");
  k.validate();

  Eigen::Index n = 0;
  for (Eigen::Index v = 0; v < depth.rows(); ++v)
    for (Eigen::Index u = 0; u < depth.cols(); ++u)
      if (region(v, u) && depth(v, u) > 0.0) ++n;

  Eigen::Matrix3Xd points(3, n);
  Eigen::Index col = 0;
  for (Eigen::Index v = 0; v < depth.rows(); ++v) {
    for (Eigen::Index u = 0; u < depth.cols(); ++u) {
      const double z = depth(v, u);
      if (!region(v, u) || !(z > 0.0)) continue;
      points.col(col++) << (static_cast<double>(u) - k.cx) * z / k.fx,
          (static_cast<double>(v) - k.cy) * z / k.fy, z;
    }
  }
  return points;
}

Eigen::Matrix2Xd project(const Eigen::Matrix3Xd& points, const CameraIntrinsics& k) {
  k.validate();
  Eigen::Matrix2Xd uv(2, points.cols());
  uv.row(0) = (points.row(0).array() / points.row(2).array()) * k.fx + k.cx;
  uv.row(1) = (points.row(1).array() / points.row(2).array()) * k.fy + k.cy;
  return uv;
}

}  // namespace amodal
