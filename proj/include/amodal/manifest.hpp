#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "amodal/raster.hpp"
#include "amodal/sample.hpp"

namespace amodal {

/// One JSON Lines record. Paths are relative to the manifest's directory.
struct ManifestRecord {
  std::string sample_id;
  std::string depth_obs;
  std::string depth_gt;
  std::string mask_amodal;
  std::string mask_visible;
  double visible_ratio = 1.0;
  Bucket bucket = Bucket::Easy;
  std::string provenance;
};

using Manifest = std::vector<ManifestRecord>;

/// Unique ids, relative paths without "..", ratio in (0, 1] matching bucket.
void validate_manifest(const Manifest& manifest);

std::string encode_manifest(const Manifest& manifest);
Manifest decode_manifest(std::string_view text);

Manifest read_manifest(const std::filesystem::path& path);
/// Atomic: the manifest only appears once fully written.
void write_manifest(const Manifest& manifest, const std::filesystem::path& path);

/// Writes the four rasters of `sample` under `root`/samples/ and returns the
/// record describing them. The manifest itself is not touched. The id must
/// match [A-Za-z0-9_.-]+ without a leading '.'; otherwise InvalidInput.
ManifestRecord save_sample(const AmodalSample& sample, const std::filesystem::path& root,
                           std::string provenance);

/// Loads and validates the sample a record points to.
AmodalSample load_sample(const ManifestRecord& record, const std::filesystem::path& root);

}  // namespace amodal
