#include "amodal/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <optional>
#include <sstream>

#include "amodal/io.hpp"
#include "amodal/objectives.hpp"
#include "amodal/parallel.hpp"

namespace amodal {

std::string_view to_string(EvalRegion r) noexcept {
  return r == EvalRegion::OccludedOnly ? "occluded" : "amodal";
}

EvalRegion eval_region_from_string(std::string_view name) {
  if (name == "occluded") return EvalRegion::OccludedOnly;
  if (name == "amodal") return EvalRegion::FullAmodal;
  throw Error(ErrorKind::InvalidInput, "unknown eval region '" + std::string(name) + "'");
}

void EvalConfig::validate() const {
  if (!(delta_threshold > 1.0) || !std::isfinite(delta_threshold)) {
    throw Error(ErrorKind::InvalidInput, "delta threshold must be a finite value > 1");
  }
}

SampleMetrics evaluate_sample(const DepthMap& pred, const DepthMap& gt, const Mask& eval_mask,
                              double delta_threshold) {
  require_same_shape(pred, gt, "evaluate_sample pred/gt");
  require_same_shape(pred, eval_mask, "evaluate_sample mask");

  SampleMetrics m;
  long double sq = 0.0L;
  long double log_abs = 0.0L;
  std::size_t within = 0;
  for (Eigen::Index i = 0; i < pred.size(); ++i) {
    if (!eval_mask.data()[i]) continue;
    const double p = pred.data()[i];
    const double g = gt.data()[i];
    if (!std::isfinite(p) || !std::isfinite(g) || p < 0.0 || g < 0.0) {
      throw Error(ErrorKind::InvalidDepth, "evaluate_sample: negative or non-finite depth at index " +
                                               std::to_string(i));
    }
    ++m.n_eval_pixels;
    const long double diff = static_cast<long double>(p) - g;
    sq += diff * diff;
    const double pf = std::max(p, kDepthFloor);
    const double gf = std::max(g, kDepthFloor);
    m.n_floored += (pf != p) + (gf != g);
    log_abs += std::abs(std::log10(pf) - std::log10(gf));
    if (std::max(pf / gf, gf / pf) < delta_threshold) ++within;
  }
  if (m.n_eval_pixels == 0) throw Error(ErrorKind::EmptyMask, "evaluate_sample: evaluation mask is empty");

  const long double n = static_cast<long double>(m.n_eval_pixels);
  m.rmse_x100 = static_cast<double>(100.0L * std::sqrt(sq / n));
  m.log10_err = static_cast<double>(log_abs / n);
  m.delta_acc = static_cast<double>(static_cast<long double>(within) / n);
  return m;
}

SampleMetrics evaluate_amodal(const AmodalSample& sample, const DepthMap& pred, const EvalConfig& cfg) {
  cfg.validate();
  const Mask& region = cfg.region == EvalRegion::OccludedOnly ? sample.occluded_mask : sample.amodal_mask;
  SampleMetrics m = evaluate_sample(pred, sample.gt_amodal_depth, region, cfg.delta_threshold);
  m.sample_id = sample.sample_id;
  m.bucket = sample.bucket;
  return m;
}

MetricsReport aggregate(std::span<const SampleMetrics> samples, const EvalConfig& cfg) {
  MetricsReport report;
  report.config = cfg;
  auto add = [](BucketSummary& s, const SampleMetrics& m) {
    ++s.count;
    s.rmse_x100 += m.rmse_x100;
    s.log10_err += m.log10_err;
    s.delta_pct += 100.0 * m.delta_acc;
  };
  auto finish = [](BucketSummary& s) {
    if (s.count == 0) return;
    const double n = static_cast<double>(s.count);
    s.rmse_x100 /= n;
    s.log10_err /= n;
    s.delta_pct /= n;
  };
  for (const SampleMetrics& m : samples) {
    add(report.buckets[static_cast<std::size_t>(m.bucket)], m);
    add(report.overall, m);
  }
  for (auto& b : report.buckets) finish(b);
  finish(report.overall);
  return report;
}

std::filesystem::path prediction_path(const std::filesystem::path& pred_dir, const std::string& sample_id) {
  return pred_dir / (sample_id + ".pfm");
}

SetEvaluation evaluate_set(const Manifest& manifest, const std::filesystem::path& manifest_dir,
                           const std::filesystem::path& pred_dir, const EvalConfig& cfg, unsigned workers) {
  cfg.validate();
  std::vector<std::optional<SampleMetrics>> results(manifest.size());
  std::vector<std::optional<SampleFailure>> failures(manifest.size());

  parallel_for(manifest.size(), workers, [&](std::size_t i) {
    const ManifestRecord& record = manifest[i];
    try {
      const std::filesystem::path path = prediction_path(pred_dir, record.sample_id);
      if (!std::filesystem::exists(path)) {
        throw Error(ErrorKind::MissingPrediction, "no prediction at " + path.string());
      }
      const AmodalSample sample = load_sample(record, manifest_dir);
      const DepthMap pred = read_depth(path);
      if (pred.rows() != sample.gt_amodal_depth.rows() || pred.cols() != sample.gt_amodal_depth.cols()) {
        throw Error(ErrorKind::DimensionError, "prediction " + std::to_string(pred.cols()) + "x" +
                                                   std::to_string(pred.rows()) + " vs sample " +
                                                   std::to_string(sample.gt_amodal_depth.cols()) + "x" +
                                                   std::to_string(sample.gt_amodal_depth.rows()));
      }
      results[i] = evaluate_amodal(sample, pred, cfg);
    } catch (const Error& e) {
      failures[i] = SampleFailure{record.sample_id, e.kind(), e.what()};
    } catch (const std::exception& e) {
      failures[i] = SampleFailure{record.sample_id, ErrorKind::IoError, e.what()};
    }
  });

  SetEvaluation out;
  for (std::size_t i = 0; i < manifest.size(); ++i) {
    if (results[i]) out.samples.push_back(std::move(*results[i]));
    if (failures[i]) out.failures.push_back(std::move(*failures[i]));
  }
  out.report = aggregate(out.samples, cfg);
  return out;
}

DepthMap copy_observed_baseline(const AmodalSample& sample) { return sample.observation_depth; }

// ---------------------------------------------------------------------------

namespace {

constexpr std::array<const char*, 3> kBucketNames{"easy", "medium", "hard"};

nlohmann::ordered_json summary_json(const BucketSummary& s) {
  nlohmann::ordered_json j;
  j["count"] = s.count;
  if (s.count == 0) {
    j["rmse_x100"] = nullptr;
    j["log10"] = nullptr;
    j["delta_pct"] = nullptr;
  } else {
    j["rmse_x100"] = s.rmse_x100;
    j["log10"] = s.log10_err;
    j["delta_pct"] = s.delta_pct;
  }
  return j;
}

BucketSummary summary_from(const nlohmann::json& j) {
  BucketSummary s;
  s.count = j.at("count").get<std::size_t>();
  if (s.count > 0) {
    s.rmse_x100 = j.at("rmse_x100").get<double>();
    s.log10_err = j.at("log10").get<double>();
    s.delta_pct = j.at("delta_pct").get<double>();
  }
  return s;
}

}  // namespace

nlohmann::ordered_json report_to_json(const MetricsReport& report) {
  nlohmann::ordered_json j;
  j["config"] = {{"delta_threshold", report.config.delta_threshold},
                 {"eval_region", std::string(to_string(report.config.region))},
                 {"depth_floor", kDepthFloor},
                 {"aggregation", "per_sample_mean"},
                 {"depth_order", "smaller_is_nearer"}};
  for (std::size_t b = 0; b < 3; ++b) j[kBucketNames[b]] = summary_json(report.buckets[b]);
  j["overall"] = summary_json(report.overall);
  return j;
}

MetricsReport report_from_json(const nlohmann::json& j) {
  MetricsReport r;
  try {
    r.config.delta_threshold = j.at("config").at("delta_threshold").get<double>();
    r.config.region = eval_region_from_string(j.at("config").at("eval_region").get<std::string>());
    for (std::size_t b = 0; b < 3; ++b) r.buckets[b] = summary_from(j.at(kBucketNames[b]));
    r.overall = summary_from(j.at("overall"));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::FormatError, std::string("metrics report: ") + e.what());
  }
  return r;
}

std::string format_report(const MetricsReport& report) {
  std::ostringstream os;
  char line[160];
  std::snprintf(line, sizeof line, "%-9s %7s %12s %10s %10s\n", "bucket", "count", "rmse_x100", "log10",
                "delta%");
  os << line;
  auto row = [&](const char* name, const BucketSummary& s) {
    if (s.count == 0) {
      std::snprintf(line, sizeof line, "%-9s %7zu %12s %10s %10s\n", name, s.count, "-", "-", "-");
    } else {
      std::snprintf(line, sizeof line, "%-9s %7zu %12.6f %10.6f %10.3f\n", name, s.count, s.rmse_x100,
                    s.log10_err, s.delta_pct);
    }
    os << line;
  };
  row("Easy", report.buckets[0]);
  row("Medium", report.buckets[1]);
  row("Hard", report.buckets[2]);
  row("Overall", report.overall);
  std::snprintf(line, sizeof line, "delta threshold %.6g, region %s, per-sample means\n",
                report.config.delta_threshold, std::string(to_string(report.config.region)).c_str());
  os << line;
  return os.str();
}

}  // namespace amodal
