#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "pflow/image.hpp"

namespace pflow::io {

// Netpbm grayscale. Values are normalized to [0,1] on read and
// quantized on write (maxval 255 for 8-bit, 65535 for 16-bit).
void write_pgm(const std::filesystem::path& path, const ImageF& image, int bits = 8);
ImageF read_pgm(const std::filesystem::path& path);

void write_mask_pgm(const std::filesystem::path& path, const Mask& mask);
Mask read_mask_pgm(const std::filesystem::path& path);

// Portable float map, single channel. Always written little-endian with
// scale -1.0, rows bottom-to-top as the format requires. Reading accepts
// either endianness.
void write_pfm(const std::filesystem::path& path, const ImageF& image);
ImageF read_pfm(const std::filesystem::path& path);

// Binary RGB (P6), used for visualizations.
struct Rgb {
  unsigned char r = 0, g = 0, b = 0;
  bool operator==(const Rgb&) const = default;
};
void write_ppm(const std::filesystem::path& path, const Image<Rgb>& image);
Image<Rgb> read_ppm(const std::filesystem::path& path);

/// Ordered key=value text file. Keys may repeat; order is preserved.
/// Blank lines and lines starting with '#' are ignored.
class KeyValueFile {
 public:
  static KeyValueFile read(const std::filesystem::path& path);
  static KeyValueFile parse(const std::string& text, const std::string& origin = "<string>");
  void write(const std::filesystem::path& path) const;
  std::string to_string() const;

  void add(std::string key, std::string value);
  bool has(const std::string& key) const;
  /// First value for key; throws DataError if missing.
  const std::string& get(const std::string& key) const;
  std::string get_or(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key) const;
  double get_double_or(const std::string& key, double fallback) const;
  long long get_int(const std::string& key) const;
  long long get_int_or(const std::string& key, long long fallback) const;
  std::vector<std::string> get_all(const std::string& key) const;

  const std::vector<std::pair<std::string, std::string>>& entries() const { return entries_; }

 private:
  std::string origin_;
  std::vector<std::pair<std::string, std::string>> entries_;
};

/// Shortest decimal string that round-trips the double exactly.
std::string format_double(double value);

double parse_double(const std::string& text, const std::string& what);
long long parse_int(const std::string& text, const std::string& what);

}  // namespace pflow::io
