#include "amodal/manifest.hpp"

#include <set>
#include <utility>

#include <nlohmann/json.hpp>

#include "amodal/io.hpp"

namespace amodal {
namespace {

using ordered_json = nlohmann::ordered_json;

constexpr const char* kFields[] = {"sample_id",    "depth_obs",     "depth_gt", "mask_amodal",
                                   "mask_visible", "visible_ratio", "bucket",   "provenance"};

bool is_safe_relative(const std::string& p) {
  if (p.empty()) return false;
  const std::filesystem::path path(p);
  if (path.is_absolute() || path.has_root_name() || path.has_root_directory()) return false;
  for (const auto& part : path) {
    if (part == "..") return false;
  }
  return true;
}

// Ids become file names under samples/.
bool is_safe_id(const std::string& id) {
  if (id.empty() || id.size() > 128 || id.front() == '.') return false;
  for (const char c : id) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
                    c == '_' || c == '-' || c == '.';
    if (!ok) return false;
  }
  return true;
}

}  // namespace

void validate_manifest(const Manifest& manifest) {
  std::set<std::string> seen;
  for (const auto& r : manifest) {
    auto fail = [&](const std::string& what) {
      throw Error(ErrorKind::InvariantViolation, "manifest record '" + r.sample_id + "': " + what);
    };
    if (r.sample_id.empty()) fail("empty sample_id");
    if (!seen.insert(r.sample_id).second) fail("duplicate sample_id");
    for (const auto* p : {&r.depth_obs, &r.depth_gt, &r.mask_amodal, &r.mask_visible}) {
      if (!is_safe_relative(*p)) fail("path '" + *p + "' is not relative to the manifest");
    }
    if (!(r.visible_ratio > 0.0 && r.visible_ratio <= 1.0)) fail("visible_ratio outside (0, 1]");
    if (bucket_for(r.visible_ratio) != r.bucket) fail("bucket does not match visible_ratio");
  }
}

std::string encode_manifest(const Manifest& manifest) {
  validate_manifest(manifest);
  std::string out;
  for (const auto& r : manifest) {
    ordered_json j;
    j["sample_id"] = r.sample_id;
    j["depth_obs"] = r.depth_obs;
    j["depth_gt"] = r.depth_gt;
    j["mask_amodal"] = r.mask_amodal;
    j["mask_visible"] = r.mask_visible;
    j["visible_ratio"] = r.visible_ratio;
    j["bucket"] = std::string(to_string(r.bucket));
    j["provenance"] = r.provenance;
    out += j.dump();
    out += '\n';
  }
  return out;
}

Manifest decode_manifest(std::string_view text) {
  Manifest manifest;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    const std::string_view line = text.substr(pos, end - pos);
    const std::size_t line_start = pos;
    pos = end + 1;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;

    ordered_json j;
    try {
      j = ordered_json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw FormatError(std::string("manifest line is not valid JSON: ") + e.what(),
                        line_start + (e.byte > 0 ? e.byte - 1 : 0));
    }
    if (!j.is_object()) throw FormatError("manifest line is not a JSON object", line_start);
    if (j.size() != std::size(kFields)) {
      throw FormatError("manifest record must have exactly the fields sample_id, depth_obs, "
                        "depth_gt, mask_amodal, mask_visible, visible_ratio, bucket, provenance",
                        line_start);
    }
    try {
      ManifestRecord r;
      r.sample_id = j.at("sample_id").get<std::string>();
      r.depth_obs = j.at("depth_obs").get<std::string>();
      r.depth_gt = j.at("depth_gt").get<std::string>();
      r.mask_amodal = j.at("mask_amodal").get<std::string>();
      r.mask_visible = j.at("mask_visible").get<std::string>();
      r.visible_ratio = j.at("visible_ratio").get<double>();
      r.bucket = bucket_from_string(j.at("bucket").get<std::string>());
      r.provenance = j.at("provenance").get<std::string>();
      manifest.push_back(std::move(r));
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(std::string("bad manifest record: ") + e.what(), line_start);
    } catch (const Error& e) {
      throw FormatError(std::string("bad manifest record: ") + e.what(), line_start);
    }
  }
  validate_manifest(manifest);
  return manifest;
}

Manifest read_manifest(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  try {
    return decode_manifest(text);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.detail(), e.offset());
  }
}

void write_manifest(const Manifest& manifest, const std::filesystem::path& path) {
  write_file_atomic(path, encode_manifest(manifest));
}

ManifestRecord save_sample(const AmodalSample& sample, const std::filesystem::path& root,
                           std::string provenance) {
  validate_sample(sample);
  if (!is_safe_id(sample.sample_id)) {
    throw Error(ErrorKind::InvalidInput, "sample_id '" + sample.sample_id +
                                             "' must use only [A-Za-z0-9_.-] and not start with '.'");
  }
  ManifestRecord r;
  r.sample_id = sample.sample_id;
  r.depth_obs = "samples/" + sample.sample_id + "_obs.pfm";
  r.depth_gt = "samples/" + sample.sample_id + "_gt.pfm";
  r.mask_amodal = "samples/" + sample.sample_id + "_amodal.pgm";
  r.mask_visible = "samples/" + sample.sample_id + "_visible.pgm";
  r.visible_ratio = sample.visible_ratio;
  r.bucket = sample.bucket;
  r.provenance = std::move(provenance);
  write_depth(sample.observation_depth, root / r.depth_obs);
  write_depth(sample.gt_amodal_depth, root / r.depth_gt);
  write_mask(sample.amodal_mask, root / r.mask_amodal);
  write_mask(sample.visible_mask, root / r.mask_visible);
  return r;
}

AmodalSample load_sample(const ManifestRecord& record, const std::filesystem::path& root) {
  AmodalSample s = make_sample(record.sample_id, read_depth(root / record.depth_obs),
                               read_depth(root / record.depth_gt), read_mask(root / record.mask_amodal),
                               read_mask(root / record.mask_visible));
  if (s.visible_ratio != record.visible_ratio) {
    throw Error(ErrorKind::InvariantViolation,
                "sample '" + record.sample_id + "': stored visible_ratio disagrees with masks");
  }
  return s;
}

}  // namespace amodal
