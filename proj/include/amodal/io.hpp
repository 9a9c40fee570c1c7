#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include <Eigen/Core>

#include "amodal/raster.hpp"

namespace amodal {

// Depth rasters are grayscale PFM ("Pf"), rows stored bottom row first.
// Encoding is always little-endian with scale -1.0; decoding accepts either
// byte order. Values pass through float32, so a write/read cycle is exact
// for any float-representable map and write(read(write(d))) is byte-stable.
std::string encode_pfm(const DepthMap& d);
DepthMap decode_pfm(std::string_view bytes);

// Masks are binary PGM ("P5", maxval 255). Bytes >= 128 are inside; inside
// pixels are written as 255, outside as 0.
std::string encode_pgm(const Mask& m);
Mask decode_pgm(std::string_view bytes);

/// ASCII PLY with float x, y, z vertex properties; one point per column.
std::string encode_ply(const Eigen::Matrix3Xd& points);

std::string read_file(const std::filesystem::path& path);

/// Writes to a sibling temp file and renames it over `path`, creating parent
/// directories as needed.
void write_file_atomic(const std::filesystem::path& path, std::string_view bytes);

DepthMap read_depth(const std::filesystem::path& path);
void write_depth(const DepthMap& d, const std::filesystem::path& path);
Mask read_mask(const std::filesystem::path& path);
void write_mask(const Mask& m, const std::filesystem::path& path);
void write_ply(const Eigen::Matrix3Xd& points, const std::filesystem::path& path);

}  // namespace amodal
