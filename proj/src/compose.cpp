#include "amodal/compose.hpp"

#include <cmath>
#include <random>
#include <utility>

namespace amodal {

Composite composite(const SceneLayer& background, const SceneLayer& foreground, CompositeMode mode) {
  require_same_shape(background.depth, foreground.depth, "composite depth");
  require_same_shape(background.depth, background.object_mask, "composite background mask");
  require_same_shape(background.depth, foreground.object_mask, "composite foreground mask");

  const Mask& occluder = foreground.object_mask;
  if (mode == CompositeMode::Synthetic) {
    for (Eigen::Index i = 0; i < occluder.size(); ++i) {
      if (occluder.data()[i] && !(foreground.depth.data()[i] < background.depth.data()[i])) {
        const Eigen::Index v = i / occluder.cols();
        const Eigen::Index u = i % occluder.cols();
        throw Error(ErrorKind::DepthOrderViolation,
                    "occluder not in front of background at (u=" + std::to_string(u) +
                        ", v=" + std::to_string(v) + ")");
      }
    }
  }

  Composite out;
  out.observed_depth = occluder.select(foreground.depth, background.depth);
  out.amodal_mask = background.object_mask;
  out.visible_mask = mask_and_not(out.amodal_mask, occluder);
  if (popcount(out.amodal_mask) == 0) throw Error(ErrorKind::EmptyMask, "composite: empty object mask");
  if (popcount(out.visible_mask) == 0) {
    throw Error(ErrorKind::FullyOccluded, "composite: occluder hides the whole object");
  }
  return out;
}

AmodalSample build_sample(const SceneLayer& background, const SceneLayer& foreground,
                          const DepthMap& gt_background_depth, std::string sample_id,
                          CompositeMode mode) {
  require_same_shape(background.depth, gt_background_depth, "build_sample gt depth");
  validate_depth(gt_background_depth, "build_sample gt depth");
  Composite c = composite(background, foreground, mode);
  const AffineFit fit = fit_scale_shift(gt_background_depth, c.observed_depth, c.visible_mask);
  DepthMap gt = apply_affine(gt_background_depth, fit).depth;
  return make_sample(std::move(sample_id), std::move(c.observed_depth), std::move(gt),
                     std::move(c.amodal_mask), std::move(c.visible_mask));
}

// ---------------------------------------------------------------------------

double Primitive::depth_at(double u, double v) const {
  const double du = u - center_u;
  const double dv = v - center_v;
  switch (kind) {
    case PrimitiveKind::Plane: return z0;
    case PrimitiveKind::Ramp: return z0 + grad_u * du + grad_v * dv;
    case PrimitiveKind::Sphere:
      return z0 - relief * std::sqrt(std::max(0.0, radius * radius - du * du - dv * dv));
  }
  return z0;
}

Mask Placement::rasterize(int width, int height) const {
  Mask m(height, width);
  for (int v = 0; v < height; ++v) {
    for (int u = 0; u < width; ++u) {
      const double du = (u - center_u) / half_u;
      const double dv = (v - center_v) / half_v;
      m(v, u) = shape == ShapeKind::Box ? (std::abs(du) <= 1.0 && std::abs(dv) <= 1.0)
                                        : (du * du + dv * dv <= 1.0);
    }
  }
  return m;
}

namespace {

constexpr int kMaxSide = 16384;

void check_primitive(const Primitive& p, const char* what) {
  auto bad = [&](const std::string& why) {
    throw Error(ErrorKind::InvalidSpec, std::string(what) + " primitive: " + why);
  };
  for (double x : {p.z0, p.center_u, p.center_v, p.grad_u, p.grad_v, p.radius, p.relief}) {
    if (!std::isfinite(x)) bad("non-finite parameter");
  }
  if (p.kind == PrimitiveKind::Sphere && !(p.radius > 0.0)) bad("sphere radius must be positive");
  if (p.relief < 0.0) bad("relief must be non-negative");
}

void check_placement(const Placement& p, int width, int height, const char* what) {
  auto bad = [&](const std::string& why) {
    throw Error(ErrorKind::InvalidSpec, std::string(what) + " placement: " + why);
  };
  if (!std::isfinite(p.center_u) || !std::isfinite(p.center_v)) bad("non-finite center");
  if (p.center_u < 0.0 || p.center_u > width - 1 || p.center_v < 0.0 || p.center_v > height - 1) {
    bad("center outside the raster");
  }
  if (!(p.half_u > 0.0) || !(p.half_v > 0.0) || !std::isfinite(p.half_u) || !std::isfinite(p.half_v)) {
    bad("half extents must be positive");
  }
}

DepthMap render(const Primitive& p, int width, int height) {
  DepthMap d(height, width);
  for (int v = 0; v < height; ++v)
    for (int u = 0; u < width; ++u) d(v, u) = p.depth_at(u, v);
  return d;
}

double uniform(std::mt19937_64& rng, Interval range) {
  return range.lo + (range.hi - range.lo) * std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

template <typename Enum>
Enum pick(std::mt19937_64& rng, std::initializer_list<Enum> options) {
  const auto k = std::uniform_int_distribution<std::size_t>(0, options.size() - 1)(rng);
  return *(options.begin() + static_cast<std::ptrdiff_t>(k));
}

bool usable(const SynthSpec& spec) {
  try {
    const SynthScene scene = synth_scene(spec);
    const Composite c = composite(scene.background, scene.foreground, CompositeMode::Synthetic);
    if (popcount(mask_and_not(c.amodal_mask, c.visible_mask)) == 0) return false;
    fit_scale_shift(scene.true_amodal_depth, scene.true_amodal_depth, c.visible_mask);
    return true;
  } catch (const Error&) {
    return false;
  }
}

}  // namespace

void SynthSpec::validate() const {
  if (width < 1 || height < 1 || width > kMaxSide || height > kMaxSide) {
    throw Error(ErrorKind::InvalidSpec, "raster size must be within [1, 16384]");
  }
  check_primitive(background, "background");
  check_primitive(object, "object");
  check_primitive(occluder, "occluder");
  check_placement(object_placement, width, height, "object");
  check_placement(occluder_placement, width, height, "occluder");
}

SynthScene synth_scene(const SynthSpec& spec) {
  spec.validate();
  SynthScene scene;
  const Mask object = spec.object_placement.rasterize(spec.width, spec.height);
  if (popcount(object) == 0) throw Error(ErrorKind::InvalidSpec, "object placement covers no pixel");

  DepthMap bg = render(spec.background, spec.width, spec.height);
  bg = object.select(render(spec.object, spec.width, spec.height), bg);
  if (!bg.allFinite() || (bg < 0.0).any()) {
    throw Error(ErrorKind::InvalidSpec, "background or object depth is negative somewhere");
  }

  Mask occluder = spec.occluder_placement.rasterize(spec.width, spec.height);
  DepthMap fg = render(spec.occluder, spec.width, spec.height);
  if ((occluder && (fg < 0.0)).any()) {
    throw Error(ErrorKind::InvalidSpec, "occluder depth is negative on its footprint");
  }

  scene.true_amodal_depth = bg;
  scene.background = {std::move(bg), object, LayerRole::Background};
  scene.foreground = {std::move(fg), std::move(occluder), LayerRole::Foreground};
  return scene;
}

void SynthRanges::validate() const {
  if (width < 1 || height < 1 || width > kMaxSide || height > kMaxSide) {
    throw Error(ErrorKind::InvalidSpec, "raster size must be within [1, 16384]");
  }
  for (const Interval& r :
       {background_z0, background_grad, background_radius, background_relief, object_z0, object_grad,
        object_relief, object_center_frac, object_half_extent, occluder_z0, occluder_grad,
        occluder_half_extent}) {
    if (!std::isfinite(r.lo) || !std::isfinite(r.hi) || r.lo > r.hi) {
      throw Error(ErrorKind::InvalidSpec, "sampling interval must satisfy lo <= hi");
    }
  }
  if (max_attempts < 1) throw Error(ErrorKind::InvalidSpec, "max_attempts must be >= 1");
}

SynthSpec sample_synth_spec(const SynthRanges& ranges, std::uint64_t seed) {
  ranges.validate();
  std::mt19937_64 rng(seed);
  const double w = ranges.width;
  const double h = ranges.height;

  for (int attempt = 0; attempt < ranges.max_attempts; ++attempt) {
    SynthSpec spec;
    spec.width = ranges.width;
    spec.height = ranges.height;
    spec.seed = seed;

    Primitive& bg = spec.background;
    bg.kind = pick(rng, {PrimitiveKind::Ramp, PrimitiveKind::Plane, PrimitiveKind::Sphere});
    bg.z0 = uniform(rng, ranges.background_z0);
    bg.center_u = (w - 1) / 2;
    bg.center_v = (h - 1) / 2;
    if (bg.kind == PrimitiveKind::Ramp) {
      bg.grad_u = uniform(rng, ranges.background_grad);
      bg.grad_v = uniform(rng, ranges.background_grad);
    } else if (bg.kind == PrimitiveKind::Sphere) {
      bg.center_u = uniform(rng, {0.0, w - 1});
      bg.center_v = uniform(rng, {0.0, h - 1});
      bg.radius = uniform(rng, ranges.background_radius);
      bg.relief = uniform(rng, ranges.background_relief);
    }

    // Flat objects are excluded: their visible depth cannot anchor an alignment.
    Placement& place = spec.object_placement;
    place.shape = pick(rng, {ShapeKind::Box, ShapeKind::Ellipse});
    place.center_u = uniform(rng, ranges.object_center_frac) * (w - 1);
    place.center_v = uniform(rng, ranges.object_center_frac) * (h - 1);
    place.half_u = uniform(rng, ranges.object_half_extent);
    place.half_v = uniform(rng, ranges.object_half_extent);

    Primitive& obj = spec.object;
    obj.kind = pick(rng, {PrimitiveKind::Ramp, PrimitiveKind::Sphere});
    obj.z0 = uniform(rng, ranges.object_z0);
    obj.center_u = place.center_u;
    obj.center_v = place.center_v;
    if (obj.kind == PrimitiveKind::Ramp) {
      obj.grad_u = uniform(rng, ranges.object_grad);
      obj.grad_v = uniform(rng, ranges.object_grad);
    } else {
      obj.radius = std::max(place.half_u, place.half_v);
      obj.relief = uniform(rng, ranges.object_relief);
    }

    Placement& occ_place = spec.occluder_placement;
    occ_place.shape = pick(rng, {ShapeKind::Box, ShapeKind::Ellipse});
    occ_place.center_u = uniform(rng, {place.center_u - place.half_u, place.center_u + place.half_u});
    occ_place.center_v = uniform(rng, {place.center_v - place.half_v, place.center_v + place.half_v});
    occ_place.half_u = uniform(rng, ranges.occluder_half_extent);
    occ_place.half_v = uniform(rng, ranges.occluder_half_extent);

    Primitive& occ = spec.occluder;
    occ.kind = pick(rng, {PrimitiveKind::Plane, PrimitiveKind::Ramp});
    occ.z0 = uniform(rng, ranges.occluder_z0);
    occ.center_u = occ_place.center_u;
    occ.center_v = occ_place.center_v;
    if (occ.kind == PrimitiveKind::Ramp) {
      occ.grad_u = uniform(rng, ranges.occluder_grad);
      occ.grad_v = uniform(rng, ranges.occluder_grad);
    }

    if (usable(spec)) return spec;
  }
  throw Error(ErrorKind::InvalidSpec, "no usable scene after " + std::to_string(ranges.max_attempts) +
                                          " attempts (seed " + std::to_string(seed) + ")");
}

AmodalSample synth_sample(const SynthSpec& spec, std::string sample_id) {
  const SynthScene scene = synth_scene(spec);
  return build_sample(scene.background, scene.foreground, scene.true_amodal_depth,
                      std::move(sample_id), CompositeMode::Synthetic);
}

// ---------------------------------------------------------------------------
// JSON

NLOHMANN_JSON_SERIALIZE_ENUM(PrimitiveKind, {{PrimitiveKind::Ramp, "ramp"},
                                             {PrimitiveKind::Plane, "plane"},
                                             {PrimitiveKind::Sphere, "sphere"}})
NLOHMANN_JSON_SERIALIZE_ENUM(ShapeKind, {{ShapeKind::Box, "box"}, {ShapeKind::Ellipse, "ellipse"}})

namespace {

using nlohmann::json;

json primitive_json(const Primitive& p) {
  return {{"kind", p.kind},         {"z0", p.z0},         {"center_u", p.center_u},
          {"center_v", p.center_v}, {"grad_u", p.grad_u}, {"grad_v", p.grad_v},
          {"radius", p.radius},     {"relief", p.relief}};
}

Primitive primitive_from(const json& j) {
  Primitive p;
  const std::string kind = j.at("kind").get<std::string>();
  if (kind != "ramp" && kind != "plane" && kind != "sphere") {
    throw Error(ErrorKind::InvalidSpec, "unknown primitive kind '" + kind + "'");
  }
  p.kind = j.at("kind").get<PrimitiveKind>();
  p.z0 = j.at("z0").get<double>();
  p.center_u = j.value("center_u", 0.0);
  p.center_v = j.value("center_v", 0.0);
  p.grad_u = j.value("grad_u", 0.0);
  p.grad_v = j.value("grad_v", 0.0);
  p.radius = j.value("radius", 0.0);
  p.relief = j.value("relief", 1.0);
  return p;
}

json placement_json(const Placement& p) {
  return {{"shape", p.shape},   {"center_u", p.center_u}, {"center_v", p.center_v},
          {"half_u", p.half_u}, {"half_v", p.half_v}};
}

Placement placement_from(const json& j) {
  Placement p;
  const std::string shape = j.at("shape").get<std::string>();
  if (shape != "box" && shape != "ellipse") {
    throw Error(ErrorKind::InvalidSpec, "unknown placement shape '" + shape + "'");
  }
  p.shape = j.at("shape").get<ShapeKind>();
  p.center_u = j.at("center_u").get<double>();
  p.center_v = j.at("center_v").get<double>();
  p.half_u = j.at("half_u").get<double>();
  p.half_v = j.at("half_v").get<double>();
  return p;
}

json interval_json(Interval r) { return json::array({r.lo, r.hi}); }

void read_interval(const json& j, const char* key, Interval& r) {
  if (!j.contains(key)) return;
  const json& v = j.at(key);
  if (!v.is_array() || v.size() != 2) {
    throw Error(ErrorKind::InvalidSpec, std::string(key) + " must be a [lo, hi] pair");
  }
  r = {v[0].get<double>(), v[1].get<double>()};
}

}  // namespace

void to_json(nlohmann::json& j, const SynthSpec& spec) {
  j = {{"width", spec.width},
       {"height", spec.height},
       {"seed", spec.seed},
       {"background", primitive_json(spec.background)},
       {"object", primitive_json(spec.object)},
       {"object_placement", placement_json(spec.object_placement)},
       {"occluder", primitive_json(spec.occluder)},
       {"occluder_placement", placement_json(spec.occluder_placement)}};
}

void from_json(const nlohmann::json& j, SynthSpec& spec) {
  try {
    spec.width = j.at("width").get<int>();
    spec.height = j.at("height").get<int>();
    spec.seed = j.value("seed", std::uint64_t{0});
    spec.background = primitive_from(j.at("background"));
    spec.object = primitive_from(j.at("object"));
    spec.object_placement = placement_from(j.at("object_placement"));
    spec.occluder = primitive_from(j.at("occluder"));
    spec.occluder_placement = placement_from(j.at("occluder_placement"));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::InvalidSpec, std::string("scene document: ") + e.what());
  }
  spec.validate();
}

void to_json(nlohmann::json& j, const SynthRanges& r) {
  j = {{"width", r.width},
       {"height", r.height},
       {"background_z0", interval_json(r.background_z0)},
       {"background_grad", interval_json(r.background_grad)},
       {"background_radius", interval_json(r.background_radius)},
       {"background_relief", interval_json(r.background_relief)},
       {"object_z0", interval_json(r.object_z0)},
       {"object_grad", interval_json(r.object_grad)},
       {"object_relief", interval_json(r.object_relief)},
       {"object_center_frac", interval_json(r.object_center_frac)},
       {"object_half_extent", interval_json(r.object_half_extent)},
       {"occluder_z0", interval_json(r.occluder_z0)},
       {"occluder_grad", interval_json(r.occluder_grad)},
       {"occluder_half_extent", interval_json(r.occluder_half_extent)},
       {"max_attempts", r.max_attempts}};
}

// Missing keys keep their defaults.
void from_json(const nlohmann::json& j, SynthRanges& r) {
  try {
    r.width = j.value("width", r.width);
    r.height = j.value("height", r.height);
    read_interval(j, "background_z0", r.background_z0);
    read_interval(j, "background_grad", r.background_grad);
    read_interval(j, "background_radius", r.background_radius);
    read_interval(j, "background_relief", r.background_relief);
    read_interval(j, "object_z0", r.object_z0);
    read_interval(j, "object_grad", r.object_grad);
    read_interval(j, "object_relief", r.object_relief);
    read_interval(j, "object_center_frac", r.object_center_frac);
    read_interval(j, "object_half_extent", r.object_half_extent);
    read_interval(j, "occluder_z0", r.occluder_z0);
    read_interval(j, "occluder_grad", r.occluder_grad);
    read_interval(j, "occluder_half_extent", r.occluder_half_extent);
    r.max_attempts = j.value("max_attempts", r.max_attempts);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::InvalidSpec, std::string("sampling ranges: ") + e.what());
  }
  r.validate();
}

}  // namespace amodal
