#include "amodal/align.hpp"

namespace amodal {

BlendResult blend_prediction(const DepthMap& observed, const DepthMap& predicted,
                             const Mask& amodal, const Mask& visible) {
  require_same_shape(observed, predicted, "blend_prediction observed/predicted");
  require_same_shape(observed, amodal, "blend_prediction amodal");
  require_same_shape(observed, visible, "blend_prediction visible");
  if (!is_subset(visible, amodal)) {
    throw Error(ErrorKind::InvariantViolation, "blend_prediction: visible mask not inside amodal mask");
  }

  BlendResult out;
  out.fit = fit_scale_shift(predicted, observed, visible);
  out.depth = observed;
  const Mask occluded = mask_and_not(amodal, visible);
  for (Eigen::Index i = 0; i < observed.size(); ++i) {
    if (!occluded.data()[i]) continue;
    double v = out.fit.s * predicted.data()[i] + out.fit.t;
    if (v < 0.0) {
      v = 0.0;
      ++out.clamped;
    }
    out.depth.data()[i] = v;
  }
  return out;
}

}  // namespace amodal
