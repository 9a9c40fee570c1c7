#pragma once

#include <cstdint>
#include <string>

#include <nlohmann/json.hpp>

#include "amodal/align.hpp"
#include "amodal/raster.hpp"
#include "amodal/sample.hpp"

namespace amodal {

enum class LayerRole { Background, Foreground };

/// A depth raster plus the mask of the one object it contributes.
struct SceneLayer {
  DepthMap depth;
  Mask object_mask;
  LayerRole role = LayerRole::Background;
};

/// Synthetic mode requires the occluder to sit strictly in front of the
/// background wherever it is drawn. Pseudo-label mode (2D cut-and-paste over
/// network depth) only uses the mask relation.
enum class CompositeMode { Synthetic, PseudoLabel };

struct Composite {
  DepthMap observed_depth;
  Mask amodal_mask;
  Mask visible_mask;
};

/// Pastes the foreground object over the background. The amodal mask is the
/// background object mask; the visible mask is what the occluder leaves.
Composite composite(const SceneLayer& background, const SceneLayer& foreground,
                    CompositeMode mode = CompositeMode::Synthetic);

/// Composites, then aligns `gt_background_depth` to the observed depth over
/// the visible object pixels and stores the aligned map as ground truth.
AmodalSample build_sample(const SceneLayer& background, const SceneLayer& foreground,
                          const DepthMap& gt_background_depth, std::string sample_id,
                          CompositeMode mode = CompositeMode::Synthetic);

// ---------------------------------------------------------------------------
// Analytic synthetic scenes
// ---------------------------------------------------------------------------

enum class PrimitiveKind { Ramp, Plane, Sphere };

/// Depth field anchored at (center_u, center_v), in pixel coordinates:
///   Plane:  z0
///   Ramp:   z0 + grad_u (u - center_u) + grad_v (v - center_v)
///   Sphere: z0 - relief * sqrt(max(0, radius^2 - (u - center_u)^2 - (v - center_v)^2))
struct Primitive {
  PrimitiveKind kind = PrimitiveKind::Plane;
  double z0 = 1.0;
  double center_u = 0.0;
  double center_v = 0.0;
  double grad_u = 0.0;
  double grad_v = 0.0;
  double radius = 0.0;
  double relief = 1.0;

  double depth_at(double u, double v) const;
};

enum class ShapeKind { Box, Ellipse };

/// Object footprint: |u - cu| <= half_u and |v - cv| <= half_v for a box,
/// ((u - cu)/half_u)^2 + ((v - cv)/half_v)^2 <= 1 for an ellipse.
struct Placement {
  ShapeKind shape = ShapeKind::Box;
  double center_u = 0.0;
  double center_v = 0.0;
  double half_u = 1.0;
  double half_v = 1.0;

  Mask rasterize(int width, int height) const;
};

struct SynthSpec {
  int width = 64;
  int height = 64;
  Primitive background;
  Primitive object;
  Placement object_placement;
  Primitive occluder;
  Placement occluder_placement;
  std::uint64_t seed = 0;

  /// Throws InvalidSpec.
  void validate() const;
};

struct SynthScene {
  SceneLayer background;  // scene depth with the object drawn in
  SceneLayer foreground;  // occluder
  DepthMap true_amodal_depth;
};

SynthScene synth_scene(const SynthSpec& spec);

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

/// Uniform sampling ranges for random scenes. Extents are in pixels; the
/// object center range is a fraction of the raster size.
struct SynthRanges {
  int width = 64;
  int height = 64;
  Interval background_z0{0.75, 1.0};
  Interval background_grad{-0.002, 0.002};
  Interval background_radius{16.0, 40.0};
  Interval background_relief{0.001, 0.004};
  Interval object_z0{0.45, 0.65};
  Interval object_grad{-0.006, 0.006};
  Interval object_relief{0.005, 0.012};
  Interval object_center_frac{0.3, 0.7};
  Interval object_half_extent{6.0, 16.0};
  Interval occluder_z0{0.05, 0.2};
  Interval occluder_grad{-0.001, 0.001};
  Interval occluder_half_extent{3.0, 16.0};
  int max_attempts = 1000;

  void validate() const;
};

/// Draws a scene whose sample is usable: at least two visible object pixels
/// with non-flat depth, at least one occluded pixel, occluder in front.
/// Fully determined by (ranges, seed).
SynthSpec sample_synth_spec(const SynthRanges& ranges, std::uint64_t seed);

/// synth_scene + build_sample against the exact background depth.
AmodalSample synth_sample(const SynthSpec& spec, std::string sample_id);

void to_json(nlohmann::json& j, const SynthSpec& spec);
void from_json(const nlohmann::json& j, SynthSpec& spec);
void to_json(nlohmann::json& j, const SynthRanges& ranges);
void from_json(const nlohmann::json& j, SynthRanges& ranges);

}  // namespace amodal
