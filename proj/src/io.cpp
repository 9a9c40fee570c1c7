#include "amodal/io.hpp"

#include <bit>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <system_error>

namespace amodal {
namespace {

constexpr std::uint64_t kMaxSide = 1u << 20;
constexpr std::uint64_t kMaxPixels = 1u << 28;

std::uint32_t byteswap32(std::uint32_t x) {
  return ((x & 0xffu) << 24) | ((x & 0xff00u) << 8) | ((x >> 8) & 0xff00u) | (x >> 24);
}

// Whitespace-separated header tokens; '#' comments only where allowed.
class HeaderCursor {
 public:
  HeaderCursor(std::string_view bytes, bool allow_comments)
      : bytes_(bytes), allow_comments_(allow_comments) {}

  std::size_t pos() const { return pos_; }
  std::size_t last_start() const { return last_start_; }

  std::string_view token(const char* what) {
    skip_space();
    const std::size_t start = pos_;
    while (pos_ < bytes_.size() && !std::isspace(static_cast<unsigned char>(bytes_[pos_]))) ++pos_;
    if (pos_ == start) throw FormatError(std::string("missing ") + what, start);
    last_start_ = start;
    return bytes_.substr(start, pos_ - start);
  }

  std::uint64_t dimension(const char* what) {
    skip_space();
    const std::size_t start = pos_;
    const std::string_view tok = token(what);
    std::uint64_t value = 0;
    const auto [end, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), value);
    if (ec == std::errc::result_out_of_range) throw FormatError(std::string(what) + " overflows", start);
    if (ec != std::errc() || end != tok.data() + tok.size()) {
      throw FormatError(std::string("malformed ") + what + " '" + std::string(tok) + "'", start);
    }
    if (value == 0) throw FormatError(std::string(what) + " must be positive", start);
    if (value > kMaxSide) throw FormatError(std::string(what) + " exceeds limit", start);
    return value;
  }

  // Exactly one whitespace byte separates the header from the payload.
  void end_header() {
    if (pos_ >= bytes_.size() || !std::isspace(static_cast<unsigned char>(bytes_[pos_]))) {
      throw FormatError("header not terminated by whitespace", pos_);
    }
    ++pos_;
  }

 private:
  void skip_space() {
    while (pos_ < bytes_.size()) {
      const char c = bytes_[pos_];
      if (std::isspace(static_cast<unsigned char>(c))) {
        ++pos_;
      } else if (allow_comments_ && c == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  std::string_view bytes_;
  bool allow_comments_;
  std::size_t pos_ = 0;
  std::size_t last_start_ = 0;
};

void check_pixels(std::uint64_t width, std::uint64_t height, std::size_t offset) {
  if (width * height > kMaxPixels) throw FormatError("raster dimensions overflow pixel limit", offset);
}

void check_payload(std::string_view bytes, std::size_t start, std::uint64_t expected) {
  const std::uint64_t available = bytes.size() - start;
  if (available < expected) {
    throw FormatError("truncated payload: expected " + std::to_string(expected) + " bytes, got " +
                          std::to_string(available),
                      bytes.size());
  }
  if (available > expected) throw FormatError("trailing bytes after payload", start + expected);
}

template <typename Fn>
auto with_path(const std::filesystem::path& path, Fn&& fn) {
  try {
    return fn();
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.detail(), e.offset());
  }
}

}  // namespace

std::string encode_pfm(const DepthMap& d) {
  std::string out = "Pf\n" + std::to_string(d.cols()) + " " + std::to_string(d.rows()) + "\n-1.0\n";
  const std::size_t header = out.size();
  out.resize(header + static_cast<std::size_t>(d.size()) * 4);
  char* dst = out.data() + header;
  for (Eigen::Index v = d.rows() - 1; v >= 0; --v) {
    for (Eigen::Index u = 0; u < d.cols(); ++u) {
      std::uint32_t bits = std::bit_cast<std::uint32_t>(static_cast<float>(d(v, u)));
      if constexpr (std::endian::native == std::endian::big) bits = byteswap32(bits);
      std::memcpy(dst, &bits, 4);
      dst += 4;
    }
  }
  return out;
}

DepthMap decode_pfm(std::string_view bytes) {
  HeaderCursor cur(bytes, false);
  const std::string_view magic = cur.token("magic");
  if (magic == "PF") throw FormatError("3-channel color PFM not supported (grayscale only)", 0);
  if (magic != "Pf") throw FormatError("not a PFM file", 0);
  const std::uint64_t width = cur.dimension("width");
  const std::uint64_t height = cur.dimension("height");
  check_pixels(width, height, cur.pos());

  const std::string scale_tok(cur.token("scale"));
  const std::size_t scale_at = cur.last_start();
  char* end = nullptr;
  const double scale = std::strtod(scale_tok.c_str(), &end);
  if (end != scale_tok.c_str() + scale_tok.size() || !std::isfinite(scale) || scale == 0.0) {
    throw FormatError("malformed scale '" + scale_tok + "'", scale_at);
  }
  cur.end_header();

  const std::endian file_order = scale < 0.0 ? std::endian::little : std::endian::big;
  const std::size_t payload = cur.pos();
  check_payload(bytes, payload, width * height * 4);

  DepthMap d(static_cast<Eigen::Index>(height), static_cast<Eigen::Index>(width));
  const char* src = bytes.data() + payload;
  for (Eigen::Index v = d.rows() - 1; v >= 0; --v) {
    for (Eigen::Index u = 0; u < d.cols(); ++u) {
      std::uint32_t bits;
      std::memcpy(&bits, src, 4);
      if (file_order != std::endian::native) bits = byteswap32(bits);
      const float value = std::bit_cast<float>(bits);
      if (!std::isfinite(value) || value < 0.0f) {
        throw FormatError("depth value must be finite and non-negative",
                          static_cast<std::uint64_t>(src - bytes.data()));
      }
      d(v, u) = value;
      src += 4;
    }
  }
  return d;
}

std::string encode_pgm(const Mask& m) {
  std::string out = "P5\n" + std::to_string(m.cols()) + " " + std::to_string(m.rows()) + "\n255\n";
  const std::size_t header = out.size();
  out.resize(header + static_cast<std::size_t>(m.size()));
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    out[header + static_cast<std::size_t>(i)] = m.data()[i] ? static_cast<char>(255) : 0;
  }
  return out;
}

Mask decode_pgm(std::string_view bytes) {
  HeaderCursor cur(bytes, true);
  const std::string_view magic = cur.token("magic");
  if (magic != "P5") throw FormatError("not a binary PGM (P5) file", 0);
  const std::uint64_t width = cur.dimension("width");
  const std::uint64_t height = cur.dimension("height");
  check_pixels(width, height, cur.pos());
  if (cur.dimension("maxval") != 255) throw FormatError("maxval must be 255", cur.last_start());
  cur.end_header();

  const std::size_t payload = cur.pos();
  check_payload(bytes, payload, width * height);

  Mask m(static_cast<Eigen::Index>(height), static_cast<Eigen::Index>(width));
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    m.data()[i] = static_cast<unsigned char>(bytes[payload + static_cast<std::size_t>(i)]) >= 128;
  }
  return m;
}

std::string encode_ply(const Eigen::Matrix3Xd& points) {
  std::ostringstream os;
  os << "ply\nformat ascii 1.0\nelement vertex " << points.cols()
     << "\nproperty float x\nproperty float y\nproperty float z\nend_header\n";
  os.precision(9);
  for (Eigen::Index i = 0; i < points.cols(); ++i) {
    os << static_cast<float>(points(0, i)) << ' ' << static_cast<float>(points(1, i)) << ' '
       << static_cast<float>(points(2, i)) << '\n';
  }
  return os.str();
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::IoError, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw Error(ErrorKind::IoError, "read failed: " + path.string());
  return std::move(ss).str();
}

void write_file_atomic(const std::filesystem::path& path, std::string_view bytes) {
  std::error_code ec;
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) throw Error(ErrorKind::IoError, "cannot create " + path.parent_path().string() + ": " + ec.message());
  }
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::IoError, "cannot write " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) throw Error(ErrorKind::IoError, "write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error(ErrorKind::IoError, "cannot rename onto " + path.string() + ": " + ec.message());
}

DepthMap read_depth(const std::filesystem::path& path) {
  const std::string bytes = read_file(path);
  return with_path(path, [&] { return decode_pfm(bytes); });
}

void write_depth(const DepthMap& d, const std::filesystem::path& path) {
  write_file_atomic(path, encode_pfm(d));
}

Mask read_mask(const std::filesystem::path& path) {
  const std::string bytes = read_file(path);
  return with_path(path, [&] { return decode_pgm(bytes); });
}

void write_mask(const Mask& m, const std::filesystem::path& path) {
  write_file_atomic(path, encode_pgm(m));
}

void write_ply(const Eigen::Matrix3Xd& points, const std::filesystem::path& path) {
  write_file_atomic(path, encode_ply(points));
}

}  // namespace amodal
