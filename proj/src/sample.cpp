#include "amodal/sample.hpp"

#include <utility>

namespace amodal {

AmodalSample make_sample(std::string sample_id, DepthMap observation_depth,
                         DepthMap gt_amodal_depth, Mask amodal_mask, Mask visible_mask) {
  require_same_shape(observation_depth, gt_amodal_depth, "make_sample depth");
  require_same_shape(observation_depth, amodal_mask, "make_sample amodal");
  require_same_shape(observation_depth, visible_mask, "make_sample visible");

  AmodalSample s;
  s.sample_id = std::move(sample_id);
  s.visible_ratio = visible_ratio(amodal_mask, visible_mask);
  s.bucket = bucket_for(s.visible_ratio);
  s.occluded_mask = mask_and_not(amodal_mask, visible_mask);
  s.observation_depth = std::move(observation_depth);
  s.gt_amodal_depth = std::move(gt_amodal_depth);
  s.amodal_mask = std::move(amodal_mask);
  s.visible_mask = std::move(visible_mask);
  validate_sample(s);
  return s;
}

void validate_sample(const AmodalSample& s) {
  require_same_shape(s.observation_depth, s.gt_amodal_depth, "sample depth");
  require_same_shape(s.observation_depth, s.amodal_mask, "sample amodal");
  require_same_shape(s.observation_depth, s.visible_mask, "sample visible");
  require_same_shape(s.observation_depth, s.occluded_mask, "sample occluded");
  validate_depth(s.observation_depth, "sample observation depth");
  validate_depth(s.gt_amodal_depth, "sample gt depth");

  auto fail = [&](const std::string& what) {
    throw Error(ErrorKind::InvariantViolation, "sample '" + s.sample_id + "': " + what);
  };
  if (!is_subset(s.visible_mask, s.amodal_mask)) fail("visible mask not inside amodal mask");
  if (!(s.occluded_mask == mask_and_not(s.amodal_mask, s.visible_mask)).all()) {
    fail("occluded mask != amodal AND NOT visible");
  }
  if (s.visible_ratio != visible_ratio(s.amodal_mask, s.visible_mask)) {
    fail("visible ratio does not match masks");
  }
  if (s.bucket != bucket_for(s.visible_ratio)) fail("bucket does not match visible ratio");
}

}  // namespace amodal
