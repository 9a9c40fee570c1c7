#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "amodal/error.hpp"
#include "amodal/manifest.hpp"
#include "amodal/raster.hpp"
#include "amodal/sample.hpp"

namespace amodal {

enum class EvalRegion { OccludedOnly, FullAmodal };

std::string_view to_string(EvalRegion r) noexcept;
EvalRegion eval_region_from_string(std::string_view name);

struct EvalConfig {
  double delta_threshold = 1.25;
  EvalRegion region = EvalRegion::OccludedOnly;

  void validate() const;
};

struct SampleMetrics {
  std::string sample_id;
  Bucket bucket = Bucket::Easy;
  double rmse_x100 = 0.0;
  double log10_err = 0.0;
  double delta_acc = 0.0;  // fraction in [0, 1]
  std::size_t n_eval_pixels = 0;
  std::size_t n_floored = 0;  // pred/gt values raised to kDepthFloor for log/ratio terms
};

/// RMSE x 100 on raw values; log10 error and delta accuracy on values floored
/// at kDepthFloor. Delta counts max(p/g, g/p) < threshold (strict).
SampleMetrics evaluate_sample(const DepthMap& pred, const DepthMap& gt, const Mask& eval_mask,
                              double delta_threshold = 1.25);

/// evaluate_sample over the sample's occluded or amodal region, tagged with
/// its id and bucket.
SampleMetrics evaluate_amodal(const AmodalSample& sample, const DepthMap& pred, const EvalConfig& cfg);

struct BucketSummary {
  std::size_t count = 0;
  double rmse_x100 = 0.0;
  double log10_err = 0.0;
  double delta_pct = 0.0;  // mean delta accuracy x 100
};

struct MetricsReport {
  EvalConfig config;
  std::array<BucketSummary, 3> buckets;  // indexed by Bucket
  BucketSummary overall;

  const BucketSummary& operator[](Bucket b) const { return buckets[static_cast<std::size_t>(b)]; }
};

/// Unweighted per-sample means, per bucket and overall, folded in input order.
MetricsReport aggregate(std::span<const SampleMetrics> samples, const EvalConfig& cfg);

struct SampleFailure {
  std::string sample_id;
  ErrorKind kind = ErrorKind::InvalidInput;
  std::string message;
};

struct SetEvaluation {
  MetricsReport report;
  std::vector<SampleMetrics> samples;   // manifest order, successes only
  std::vector<SampleFailure> failures;  // manifest order
};

/// Prediction for sample `id` is read from `pred_dir`/`id`.pfm. Per-sample
/// problems are collected, not thrown.
SetEvaluation evaluate_set(const Manifest& manifest, const std::filesystem::path& manifest_dir,
                           const std::filesystem::path& pred_dir, const EvalConfig& cfg,
                           unsigned workers = 1);

std::filesystem::path prediction_path(const std::filesystem::path& pred_dir, const std::string& sample_id);

/// Reference predictor that ignores occlusion: returns the observation.
DepthMap copy_observed_baseline(const AmodalSample& sample);

nlohmann::ordered_json report_to_json(const MetricsReport& report);
MetricsReport report_from_json(const nlohmann::json& j);
/// Aligned-column table, one row per bucket plus Overall.
std::string format_report(const MetricsReport& report);

}  // namespace amodal
