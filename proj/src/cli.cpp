#include "amodal/cli.hpp"

#include <cstdio>
#include <fstream>
#include <optional>
#include <ostream>
#include <utility>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "amodal/align.hpp"
#include "amodal/compose.hpp"
#include "amodal/io.hpp"
#include "amodal/manifest.hpp"
#include "amodal/metrics.hpp"
#include "amodal/parallel.hpp"
#include "amodal/selfcheck.hpp"

namespace amodal::cli {

int exit_code_for(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::IoError:
    case ErrorKind::FormatError:
    case ErrorKind::MissingPrediction: return kIoFormat;
    case ErrorKind::InsufficientSupport:
    case ErrorKind::DegenerateSupport: return kFitFailure;
    case ErrorKind::NumericalError: return kNumerical;
    default: return kInvalidData;
  }
}

namespace {

namespace fs = std::filesystem;

struct GlobalOptions {
  std::uint64_t seed = 42;
  unsigned workers = default_workers();
  std::string out;
};

std::string format_number(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  std::string s(buf);
  if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
  return s;
}

fs::path require_out(const GlobalOptions& g, const char* command) {
  if (g.out.empty()) throw CLI::ValidationError(std::string(command) + " requires --out");
  return g.out;
}

void print_failures(const std::vector<SampleFailure>& failures, std::ostream& err) {
  for (const SampleFailure& f : failures) err << "sample " << f.sample_id << ": " << f.message << '\n';
}

// --- synth ------------------------------------------------------------------

struct SynthOptions {
  std::size_t n = 100;
  std::optional<int> width;
  std::optional<int> height;
  std::string config;
};

int cmd_synth(const GlobalOptions& g, const SynthOptions& o, std::ostream& out) {
  const fs::path root = require_out(g, "synth");
  SynthRanges ranges;
  if (!o.config.empty()) {
    try {
      ranges = nlohmann::json::parse(read_file(o.config)).get<SynthRanges>();
    } catch (const nlohmann::json::parse_error& e) {
      throw FormatError(o.config + ": " + e.what(), e.byte);
    }
  }
  if (o.width) ranges.width = *o.width;
  if (o.height) ranges.height = *o.height;
  ranges.validate();

  Manifest manifest(o.n);
  parallel_for(o.n, g.workers, [&](std::size_t i) {
    char id[32];
    std::snprintf(id, sizeof id, "synth_%06zu", i);
    const SynthSpec spec = sample_synth_spec(ranges, g.seed ^ static_cast<std::uint64_t>(i));
    write_file_atomic(root / "scenes" / (std::string(id) + ".json"), nlohmann::json(spec).dump(2) + "\n");
    manifest[i] = save_sample(synth_sample(spec, id), root, "synthetic");
  });
  write_manifest(manifest, root / "manifest.jsonl");

  std::array<std::size_t, 3> counts{};
  for (const auto& r : manifest) ++counts[static_cast<std::size_t>(r.bucket)];
  out << "wrote " << manifest.size() << " samples to " << root.string() << " (easy " << counts[0]
      << ", medium " << counts[1] << ", hard " << counts[2] << ")\n";
  return kOk;
}

// --- compose ----------------------------------------------------------------

struct ComposeOptions {
  std::string jobs;
  bool no_normalize = false;
  bool disparity_input = false;
};

DepthMap ingest_depth(const fs::path& path, const ComposeOptions& o) {
  DepthMap d = read_depth(path);
  if (o.disparity_input) d = invert_depth_order(d);
  if (o.no_normalize) return d;
  NormalizedDepth n = normalize_unit(d);
  if (n.constant) throw Error(ErrorKind::InvalidInput, path.string() + " is a constant map; skipped");
  return std::move(n.depth);
}

int cmd_compose(const GlobalOptions& g, const ComposeOptions& o, std::ostream& out, std::ostream& err) {
  const fs::path root = require_out(g, "compose");
  const fs::path jobs_path(o.jobs);
  const fs::path base = jobs_path.parent_path();
  const std::string text = read_file(jobs_path);

  std::vector<nlohmann::json> jobs;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string::npos) end = text.size();
    const std::string line = text.substr(pos, end - pos);
    if (line.find_first_not_of(" \t\r") != std::string::npos) {
      try {
        jobs.push_back(nlohmann::json::parse(line));
      } catch (const nlohmann::json::parse_error& e) {
        throw FormatError(jobs_path.string() + ": " + e.what(), pos);
      }
    }
    pos = end + 1;
  }

  std::vector<std::optional<ManifestRecord>> records(jobs.size());
  std::vector<std::optional<SampleFailure>> failures(jobs.size());
  parallel_for(jobs.size(), g.workers, [&](std::size_t i) {
    std::string id = "job_" + std::to_string(i);
    try {
      const nlohmann::json& job = jobs[i];
      id = job.at("sample_id").get<std::string>();
      auto path = [&](const char* key) { return base / job.at(key).get<std::string>(); };
      const DepthMap observed = ingest_depth(path("depth_obs"), o);
      const DepthMap background = ingest_depth(path("depth_bg"), o);
      const SceneLayer bg{observed, read_mask(path("mask_object")), LayerRole::Background};
      const SceneLayer fg{observed, read_mask(path("mask_occluder")), LayerRole::Foreground};
      const AmodalSample s = build_sample(bg, fg, background, id, CompositeMode::PseudoLabel);
      records[i] = save_sample(s, root, "pseudo_label");
    } catch (const Error& e) {
      failures[i] = SampleFailure{id, e.kind(), e.what()};
    } catch (const std::exception& e) {
      failures[i] = SampleFailure{id, ErrorKind::InvalidInput, e.what()};
    }
  });

  Manifest manifest;
  std::vector<SampleFailure> failed;
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    if (records[i]) manifest.push_back(std::move(*records[i]));
    if (failures[i]) failed.push_back(std::move(*failures[i]));
  }
  write_manifest(manifest, root / "manifest.jsonl");
  out << "composed " << manifest.size() << " of " << jobs.size() << " samples into " << root.string() << '\n';
  print_failures(failed, err);
  return failed.empty() ? kOk : kPartialFailure;
}

// --- align / blend ----------------------------------------------------------

struct AlignOptions {
  std::string source;
  std::string target;
  std::string support;
};

int cmd_align(const GlobalOptions& g, const AlignOptions& o, std::ostream& out) {
  const DepthMap source = read_depth(o.source);
  const DepthMap target = read_depth(o.target);
  const Mask support = o.support.empty() ? Mask::Constant(source.rows(), source.cols(), true)
                                         : read_mask(o.support);
  const AffineFit fit = fit_scale_shift(source, target, support);
  out << "s=" << format_number(fit.s) << " t=" << format_number(fit.t)
      << " rmse=" << format_number(fit.rmse_residual) << " n=" << fit.n_pixels << '\n';
  if (!g.out.empty()) {
    const AffineResult aligned = apply_affine(source, fit);
    write_depth(aligned.depth, g.out);
    out << "wrote " << g.out << " (clamped " << aligned.clamped << ")\n";
  }
  return kOk;
}

struct BlendOptions {
  std::string observed;
  std::string predicted;
  std::string amodal;
  std::string visible;
};

int cmd_blend(const GlobalOptions& g, const BlendOptions& o, std::ostream& out) {
  const fs::path target = require_out(g, "blend");
  const BlendResult r = blend_prediction(read_depth(o.observed), read_depth(o.predicted),
                                         read_mask(o.amodal), read_mask(o.visible));
  write_depth(r.depth, target);
  out << "s=" << format_number(r.fit.s) << " t=" << format_number(r.fit.t)
      << " rmse=" << format_number(r.fit.rmse_residual) << " n=" << r.fit.n_pixels
      << " clamped=" << r.clamped << '\n';
  return kOk;
}

// --- eval / report ----------------------------------------------------------

struct EvalOptions {
  std::string manifest;
  std::string pred_dir;
  std::string baseline;
  double delta_threshold = 1.25;
  std::string region = "occluded";
};

int cmd_eval(const GlobalOptions& g, const EvalOptions& o, std::ostream& out, std::ostream& err) {
  EvalConfig cfg;
  cfg.delta_threshold = o.delta_threshold;
  cfg.region = eval_region_from_string(o.region);
  cfg.validate();

  const fs::path manifest_path(o.manifest);
  const Manifest manifest = read_manifest(manifest_path);
  SetEvaluation result;
  if (o.baseline.empty()) {
    if (o.pred_dir.empty()) throw CLI::ValidationError("eval requires --pred-dir or --baseline");
    result = evaluate_set(manifest, manifest_path.parent_path(), o.pred_dir, cfg, g.workers);
  } else {
    // copy-observed: score the observation itself as the prediction.
    std::vector<std::optional<SampleMetrics>> metrics(manifest.size());
    std::vector<std::optional<SampleFailure>> failures(manifest.size());
    parallel_for(manifest.size(), g.workers, [&](std::size_t i) {
      try {
        const AmodalSample s = load_sample(manifest[i], manifest_path.parent_path());
        metrics[i] = evaluate_amodal(s, copy_observed_baseline(s), cfg);
      } catch (const Error& e) {
        failures[i] = SampleFailure{manifest[i].sample_id, e.kind(), e.what()};
      }
    });
    for (std::size_t i = 0; i < manifest.size(); ++i) {
      if (metrics[i]) result.samples.push_back(std::move(*metrics[i]));
      if (failures[i]) result.failures.push_back(std::move(*failures[i]));
    }
    result.report = aggregate(result.samples, cfg);
  }

  const std::string table = format_report(result.report);
  out << table;
  if (!g.out.empty()) {
    const fs::path dir(g.out);
    nlohmann::ordered_json j = report_to_json(result.report);
    j["failures"] = nlohmann::json::array();
    for (const SampleFailure& f : result.failures) {
      j["failures"].push_back({{"sample_id", f.sample_id},
                               {"error", std::string(to_string(f.kind))},
                               {"message", f.message}});
    }
    write_file_atomic(dir / "report.json", j.dump(2) + "\n");
    write_file_atomic(dir / "report.txt", table);
  }
  print_failures(result.failures, err);
  return result.failures.empty() ? kOk : kPartialFailure;
}

struct ReportOptions {
  std::string metrics;
  std::string manifest;
};

int cmd_report(const ReportOptions& o, std::ostream& out) {
  if (!o.metrics.empty()) {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(read_file(o.metrics));
    } catch (const nlohmann::json::parse_error& e) {
      throw FormatError(o.metrics + ": " + e.what(), e.byte);
    }
    out << format_report(report_from_json(j));
  }
  if (!o.manifest.empty()) {
    const Manifest m = read_manifest(o.manifest);
    std::array<std::size_t, 3> counts{};
    for (const auto& r : m) ++counts[static_cast<std::size_t>(r.bucket)];
    out << "samples " << m.size() << ": easy " << counts[0] << ", medium " << counts[1] << ", hard "
        << counts[2] << '\n';
  }
  if (o.metrics.empty() && o.manifest.empty()) {
    throw CLI::ValidationError("report requires --metrics or --manifest");
  }
  return kOk;
}

int cmd_selfcheck(const GlobalOptions& g, std::ostream& out) {
  bool ok = true;
  for (const CheckResult& r : run_selfcheck(g.seed)) {
    out << (r.passed ? "PASS  " : "FAIL  ") << r.name;
    if (!r.passed) out << "  (" << r.detail << ")";
    out << '\n';
    ok = ok && r.passed;
  }
  out << (ok ? "all checks passed\n" : "some checks FAILED\n");
  return ok ? kOk : kSelfcheckFailed;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Amodal depth dataset and evaluation toolkit", "amodal"};
  app.require_subcommand(1);
  app.fallthrough();

  GlobalOptions g;
  app.add_option("--seed", g.seed, "Random seed")->capture_default_str();
  app.add_option("--workers", g.workers, "Worker threads")->check(CLI::PositiveNumber)->capture_default_str();
  app.add_option("--out", g.out, "Output directory or file");

  SynthOptions synth;
  auto* synth_cmd = app.add_subcommand("synth", "Generate synthetic amodal samples");
  synth_cmd->add_option("--n", synth.n, "Number of samples")->capture_default_str();
  synth_cmd->add_option("--width", synth.width, "Raster width")->check(CLI::PositiveNumber);
  synth_cmd->add_option("--height", synth.height, "Raster height")->check(CLI::PositiveNumber);
  synth_cmd->add_option("--config", synth.config, "Sampling ranges JSON")->check(CLI::ExistingFile);

  ComposeOptions compose;
  auto* compose_cmd = app.add_subcommand("compose", "Build samples from pseudo-label depth maps");
  compose_cmd->add_option("--jobs", compose.jobs, "JSON Lines job list")->required()->check(CLI::ExistingFile);
  compose_cmd->add_flag("--no-normalize", compose.no_normalize, "Skip [0, 1] normalization");
  compose_cmd->add_flag("--disparity-input", compose.disparity_input, "Inputs are larger-is-nearer");

  AlignOptions align;
  auto* align_cmd = app.add_subcommand("align", "Fit scale and shift from SOURCE onto TARGET");
  align_cmd->add_option("source", align.source, "Source depth (PFM)")->required()->check(CLI::ExistingFile);
  align_cmd->add_option("target", align.target, "Target depth (PFM)")->required()->check(CLI::ExistingFile);
  align_cmd->add_option("--support", align.support, "Support mask (PGM)")->check(CLI::ExistingFile);

  BlendOptions blend;
  auto* blend_cmd = app.add_subcommand("blend", "Blend a predicted amodal depth into the observation");
  blend_cmd->add_option("--observed", blend.observed)->required()->check(CLI::ExistingFile);
  blend_cmd->add_option("--predicted", blend.predicted)->required()->check(CLI::ExistingFile);
  blend_cmd->add_option("--amodal", blend.amodal)->required()->check(CLI::ExistingFile);
  blend_cmd->add_option("--visible", blend.visible)->required()->check(CLI::ExistingFile);

  EvalOptions eval;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate predictions against a manifest");
  eval_cmd->add_option("--manifest", eval.manifest)->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--pred-dir", eval.pred_dir, "Directory of <sample_id>.pfm predictions");
  eval_cmd->add_option("--baseline", eval.baseline, "Built-in predictor instead of --pred-dir")
      ->check(CLI::IsMember({"copy-observed"}));
  eval_cmd->add_option("--delta-threshold", eval.delta_threshold)->capture_default_str();
  eval_cmd->add_option("--eval-region", eval.region)
      ->check(CLI::IsMember({"occluded", "amodal"}))
      ->capture_default_str();

  ReportOptions report;
  auto* report_cmd = app.add_subcommand("report", "Render a saved report or summarize a manifest");
  report_cmd->add_option("--metrics", report.metrics, "report.json from eval")->check(CLI::ExistingFile);
  report_cmd->add_option("--manifest", report.manifest)->check(CLI::ExistingFile);

  auto* selfcheck_cmd = app.add_subcommand("selfcheck", "Run the invariant battery");

  std::vector<const char*> argv{"amodal"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kUsage;
  }

  try {
    if (synth_cmd->parsed()) return cmd_synth(g, synth, out);
    if (compose_cmd->parsed()) return cmd_compose(g, compose, out, err);
    if (align_cmd->parsed()) return cmd_align(g, align, out);
    if (blend_cmd->parsed()) return cmd_blend(g, blend, out);
    if (eval_cmd->parsed()) return cmd_eval(g, eval, out, err);
    if (report_cmd->parsed()) return cmd_report(report, out);
    if (selfcheck_cmd->parsed()) return cmd_selfcheck(g, out);
  } catch (const CLI::ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kIoFormat;
  }
  return kUsage;
}

}  // namespace amodal::cli
