#include "pflow/io.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "pflow/errors.hpp"

namespace pflow::io {
namespace {

namespace fs = std::filesystem;

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  return out;
}

std::ifstream open_in(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open for reading: " + path.string());
  return in;
}

// Reads the next whitespace-delimited header token, skipping '#' comments.
std::string header_token(std::istream& in, const fs::path& path) {
  std::string token;
  while (in) {
    int c = in.peek();
    if (c == '#') {
      std::string dummy;
      std::getline(in, dummy);
    } else if (std::isspace(c)) {
      in.get();
    } else {
      break;
    }
  }
  in >> token;
  if (token.empty()) throw IoError("truncated header: " + path.string());
  return token;
}

int header_int(std::istream& in, const fs::path& path) {
  const std::string tok = header_token(in, path);
  int value = 0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), value);
  if (ec != std::errc{} || ptr != tok.data() + tok.size() || value < 0) {
    throw IoError("bad header field '" + tok + "' in " + path.string());
  }
  return value;
}

struct NetpbmHeader {
  int width = 0;
  int height = 0;
  int maxval = 0;
};

NetpbmHeader read_netpbm_header(std::istream& in, const fs::path& path, const char* magic) {
  if (header_token(in, path) != magic) {
    throw IoError(path.string() + ": expected " + magic + " file");
  }
  NetpbmHeader h;
  h.width = header_int(in, path);
  h.height = header_int(in, path);
  h.maxval = header_int(in, path);
  in.get();  // single whitespace before raster
  if (h.maxval <= 0 || h.maxval > 65535) throw IoError(path.string() + ": bad maxval");
  return h;
}

std::vector<unsigned char> read_raster(std::istream& in, const fs::path& path, std::size_t bytes) {
  std::vector<unsigned char> buf(bytes);
  in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(bytes));
  if (static_cast<std::size_t>(in.gcount()) != bytes) throw IoError("truncated raster: " + path.string());
  return buf;
}

}  // namespace

void write_pgm(const fs::path& path, const ImageF& image, int bits) {
  if (bits != 8 && bits != 16) throw std::invalid_argument("PGM bits must be 8 or 16");
  const int maxval = bits == 8 ? 255 : 65535;
  auto out = open_out(path);
  out << "P5\n" << image.width() << " " << image.height() << "\n" << maxval << "\n";
  std::vector<unsigned char> buf;
  buf.reserve(image.size() * (bits / 8));
  for (float v : image.values()) {
    const double c = std::clamp(static_cast<double>(v), 0.0, 1.0);
    const auto q = static_cast<unsigned>(std::lround(c * maxval));
    if (bits == 16) buf.push_back(static_cast<unsigned char>(q >> 8));
    buf.push_back(static_cast<unsigned char>(q & 0xff));
  }
  out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

ImageF read_pgm(const fs::path& path) {
  auto in = open_in(path);
  const auto h = read_netpbm_header(in, path, "P5");
  const int bytes_per = h.maxval > 255 ? 2 : 1;
  const auto buf = read_raster(in, path, static_cast<std::size_t>(h.width) * h.height * bytes_per);
  ImageF image(h.width, h.height);
  auto& v = image.values();
  for (std::size_t i = 0; i < v.size(); ++i) {
    unsigned q = bytes_per == 2 ? (unsigned{buf[2 * i]} << 8) | buf[2 * i + 1] : buf[i];
    v[i] = static_cast<float>(static_cast<double>(q) / h.maxval);
  }
  return image;
}

void write_mask_pgm(const fs::path& path, const Mask& mask) {
  auto out = open_out(path);
  out << "P5\n" << mask.width() << " " << mask.height() << "\n255\n";
  std::vector<unsigned char> buf(mask.size());
  std::transform(mask.values().begin(), mask.values().end(), buf.begin(),
                 [](std::uint8_t m) { return m ? 255 : 0; });
  out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

Mask read_mask_pgm(const fs::path& path) {
  const ImageF img = read_pgm(path);
  Mask mask(img.width(), img.height());
  std::transform(img.values().begin(), img.values().end(), mask.values().begin(),
                 [](float v) { return static_cast<std::uint8_t>(v >= 0.5f ? 1 : 0); });
  return mask;
}

void write_pfm(const fs::path& path, const ImageF& image) {
  auto out = open_out(path);
  out << "Pf\n" << image.width() << " " << image.height() << "\n-1.0\n";
  std::vector<unsigned char> buf(image.size() * 4);
  std::size_t k = 0;
  for (int y = image.height() - 1; y >= 0; --y) {
    for (float v : image.row(y)) {
      auto bits = std::bit_cast<std::uint32_t>(v);
      for (int b = 0; b < 4; ++b) buf[k++] = static_cast<unsigned char>((bits >> (8 * b)) & 0xff);
    }
  }
  out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

ImageF read_pfm(const fs::path& path) {
  auto in = open_in(path);
  if (header_token(in, path) != "Pf") throw IoError(path.string() + ": expected single-channel PFM (Pf)");
  const int w = header_int(in, path);
  const int h = header_int(in, path);
  const std::string scale_tok = header_token(in, path);
  const double scale = parse_double(scale_tok, "PFM scale");
  if (scale == 0.0) throw IoError(path.string() + ": PFM scale must be nonzero");
  in.get();
  const bool little = scale < 0;
  const auto buf = read_raster(in, path, static_cast<std::size_t>(w) * h * 4);
  ImageF image(w, h);
  std::size_t k = 0;
  for (int y = h - 1; y >= 0; --y) {
    for (float& v : image.row(y)) {
      std::uint32_t bits = 0;
      for (int b = 0; b < 4; ++b) {
        const int shift = little ? 8 * b : 8 * (3 - b);
        bits |= std::uint32_t{buf[k++]} << shift;
      }
      v = std::bit_cast<float>(bits);
    }
  }
  return image;
}

void write_ppm(const fs::path& path, const Image<Rgb>& image) {
  auto out = open_out(path);
  out << "P6\n" << image.width() << " " << image.height() << "\n255\n";
  for (const Rgb& p : image.values()) {
    const char px[3] = {static_cast<char>(p.r), static_cast<char>(p.g), static_cast<char>(p.b)};
    out.write(px, 3);
  }
  if (!out) throw IoError("write failed: " + path.string());
}

Image<Rgb> read_ppm(const fs::path& path) {
  auto in = open_in(path);
  const auto h = read_netpbm_header(in, path, "P6");
  if (h.maxval != 255) throw IoError(path.string() + ": only 8-bit PPM supported");
  const auto buf = read_raster(in, path, static_cast<std::size_t>(h.width) * h.height * 3);
  Image<Rgb> image(h.width, h.height);
  for (std::size_t i = 0; i < image.size(); ++i) {
    image.values()[i] = Rgb{buf[3 * i], buf[3 * i + 1], buf[3 * i + 2]};
  }
  return image;
}

// ---------------------------------------------------------------------------

namespace {

std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

}  // namespace

KeyValueFile KeyValueFile::parse(const std::string& text, const std::string& origin) {
  KeyValueFile kv;
  kv.origin_ = origin;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw DataError(origin + ":" + std::to_string(lineno) + ": expected key=value");
    }
    kv.add(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return kv;
}

KeyValueFile KeyValueFile::read(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open for reading: " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path.string());
}

std::string KeyValueFile::to_string() const {
  std::string out;
  for (const auto& [k, v] : entries_) out += k + "=" + v + "\n";
  return out;
}

void KeyValueFile::write(const fs::path& path) const {
  auto out = open_out(path);
  out << to_string();
  if (!out) throw IoError("write failed: " + path.string());
}

void KeyValueFile::add(std::string key, std::string value) {
  entries_.emplace_back(std::move(key), std::move(value));
}

bool KeyValueFile::has(const std::string& key) const {
  return std::any_of(entries_.begin(), entries_.end(), [&](const auto& e) { return e.first == key; });
}

const std::string& KeyValueFile::get(const std::string& key) const {
  for (const auto& e : entries_) {
    if (e.first == key) return e.second;
  }
  throw DataError(origin_ + ": missing required key '" + key + "'");
}

std::string KeyValueFile::get_or(const std::string& key, const std::string& fallback) const {
  return has(key) ? get(key) : fallback;
}

double KeyValueFile::get_double(const std::string& key) const { return parse_double(get(key), key); }

double KeyValueFile::get_double_or(const std::string& key, double fallback) const {
  return has(key) ? get_double(key) : fallback;
}

long long KeyValueFile::get_int(const std::string& key) const { return parse_int(get(key), key); }

long long KeyValueFile::get_int_or(const std::string& key, long long fallback) const {
  return has(key) ? get_int(key) : fallback;
}

std::vector<std::string> KeyValueFile::get_all(const std::string& key) const {
  std::vector<std::string> out;
  for (const auto& e : entries_) {
    if (e.first == key) out.push_back(e.second);
  }
  return out;
}

std::string format_double(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return ec == std::errc{} ? std::string(buf, ptr) : std::string("nan");
}

double parse_double(const std::string& text, const std::string& what) {
  double value = 0.0;
  const char* begin = text.data();
  const char* end = begin + text.size();
  if (begin != end && *begin == '+') ++begin;
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc{} || ptr != end) throw DataError("invalid number for " + what + ": '" + text + "'");
  return value;
}

long long parse_int(const std::string& text, const std::string& what) {
  long long value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    throw DataError("invalid integer for " + what + ": '" + text + "'");
  }
  return value;
}

}  // namespace pflow::io
