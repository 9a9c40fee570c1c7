#include "amodal/raster.hpp"

namespace amodal {

DepthMap invert_depth_order(const DepthMap& d) {
  if (d.size() == 0) return d;
  return (d.minCoeff() + d.maxCoeff()) - d;
}

Mask mask_and(const Mask& a, const Mask& b) {
  require_same_shape(a, b, "mask_and");
  return a && b;
}

Mask mask_and_not(const Mask& a, const Mask& b) {
  require_same_shape(a, b, "mask_and_not");
  return a && !b;
}

Mask mask_or(const Mask& a, const Mask& b) {
  require_same_shape(a, b, "mask_or");
  return a || b;
}

std::size_t popcount(const Mask& m) { return static_cast<std::size_t>(m.count()); }

bool is_subset(const Mask& inner, const Mask& outer) {
  require_same_shape(inner, outer, "is_subset");
  return !(inner && !outer).any();
}

double visible_ratio(const Mask& amodal, const Mask& visible) {
  require_same_shape(amodal, visible, "visible_ratio");
  const std::size_t total = popcount(amodal);
  if (total == 0) throw Error(ErrorKind::EmptyMask, "visible_ratio: amodal mask is empty");
  if (!is_subset(visible, amodal)) {
    throw Error(ErrorKind::InvariantViolation, "visible_ratio: visible mask not inside amodal mask");
  }
  return static_cast<double>(popcount(mask_and(visible, amodal))) / static_cast<double>(total);
}

Bucket bucket_for(double r) {
  if (!(r > 0.0) || r > 1.0) {
    throw Error(ErrorKind::InvalidInput, "visible ratio outside (0, 1]: " + std::to_string(r));
  }
  if (r > 0.75) return Bucket::Easy;
  if (r > 0.5) return Bucket::Medium;
  return Bucket::Hard;
}

std::string_view to_string(Bucket b) noexcept {
  switch (b) {
    case Bucket::Easy: return "easy";
    case Bucket::Medium: return "medium";
    case Bucket::Hard: return "hard";
  }
  return "?";
}

Bucket bucket_from_string(std::string_view name) {
  if (name == "easy") return Bucket::Easy;
  if (name == "medium") return Bucket::Medium;
  if (name == "hard") return Bucket::Hard;
  throw Error(ErrorKind::InvalidInput, "unknown bucket '" + std::string(name) + "'");
}

}  // namespace amodal
