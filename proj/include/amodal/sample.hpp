#pragma once

#include <string>

#include "amodal/raster.hpp"

namespace amodal {

/// One amodal-depth task instance. All rasters share the same shape.
struct AmodalSample {
  std::string sample_id;
  DepthMap observation_depth;  // composited view, occluder depth present
  DepthMap gt_amodal_depth;    // full raster; meaningful on amodal_mask
  Mask amodal_mask;
  Mask visible_mask;
  Mask occluded_mask;  // amodal AND NOT visible
  double visible_ratio = 1.0;
  Bucket bucket = Bucket::Easy;
};

/// Derives the occluded mask, visible ratio and bucket, then validates.
AmodalSample make_sample(std::string sample_id, DepthMap observation_depth,
                         DepthMap gt_amodal_depth, Mask amodal_mask, Mask visible_mask);

/// Checks every AmodalSample invariant; throws InvariantViolation or
/// DimensionError.
void validate_sample(const AmodalSample& s);

}  // namespace amodal
