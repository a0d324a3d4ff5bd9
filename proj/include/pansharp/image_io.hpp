#pragma once

#include <bit>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <string>

#include "pansharp/image.hpp"

namespace pansharp {

struct io_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail {

inline void put_f32_le(std::string& buf, float v) {
  uint32_t u = std::bit_cast<uint32_t>(v);
  buf.push_back(static_cast<char>(u & 0xff));
  buf.push_back(static_cast<char>((u >> 8) & 0xff));
  buf.push_back(static_cast<char>((u >> 16) & 0xff));
  buf.push_back(static_cast<char>((u >> 24) & 0xff));
}

inline float get_f32_le(const unsigned char* p) {
  uint32_t u = static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
               (static_cast<uint32_t>(p[2]) << 16) | (static_cast<uint32_t>(p[3]) << 24);
  return std::bit_cast<float>(u);
}

// Clamp to [0,255] and round half away from zero, the export rule for all
// 8 bit outputs.
inline unsigned char quantize8(double v) {
  v = std::clamp(v, 0.0, 255.0);
  return static_cast<unsigned char>(std::round(v));
}

inline std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot open " + path);
  std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return data;
}

inline void spit(const std::string& path, const std::string& data) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw io_error("cannot open " + path + " for writing");
  out.write(data.data(), static_cast<std::streamsize>(data.size()));
  if (!out) throw io_error("short write to " + path);
}

// Reads the next PNM header token, skipping whitespace and # comments.
inline std::string pnm_token(const std::string& data, std::size_t& pos) {
  while (pos < data.size()) {
    char c = data[pos];
    if (c == '#') {
      while (pos < data.size() && data[pos] != '\n') ++pos;
    } else if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
      ++pos;
    } else {
      break;
    }
  }
  std::size_t start = pos;
  while (pos < data.size() && !std::isspace(static_cast<unsigned char>(data[pos]))) ++pos;
  if (start == pos) throw io_error("truncated header");
  return data.substr(start, pos - start);
}

inline int pnm_int(const std::string& data, std::size_t& pos) {
  std::string tok = pnm_token(data, pos);
  try {
    return std::stoi(tok);
  } catch (const std::exception&) {
    throw io_error("bad header field '" + tok + "'");
  }
}

}  // namespace detail

// MBF: ASCII line "MBF1 <width> <height> <bands>\n" followed by 32 bit
// IEEE 754 little endian floats, band sequential, each band row major.
inline void write_mbf(const Image& img, const std::string& path) {
  std::string buf = "MBF1 " + std::to_string(img.width()) + " " + std::to_string(img.height()) +
                    " " + std::to_string(img.bands()) + "\n";
  buf.reserve(buf.size() + img.samples().size() * 4);
  for (double v : img.samples()) detail::put_f32_le(buf, static_cast<float>(v));
  detail::spit(path, buf);
}

inline Image read_mbf_data(const std::string& data, const std::string& path) {
  std::size_t nl = data.find('\n');
  if (nl == std::string::npos) throw io_error(path + ": missing header line");
  int w = 0, h = 0, c = 0;
  char tail = 0;
  if (std::sscanf(data.c_str(), "MBF1 %d %d %d%c", &w, &h, &c, &tail) != 4 || tail != '\n')
    throw io_error(path + ": malformed MBF header");
  if (w <= 0 || h <= 0 || c <= 0) throw io_error(path + ": bad MBF dimensions");
  std::size_t count = static_cast<std::size_t>(w) * h * c;
  if (data.size() - (nl + 1) != count * 4)
    throw io_error(path + ": payload size does not match header");
  Image img(w, h, c);
  const unsigned char* p = reinterpret_cast<const unsigned char*>(data.data() + nl + 1);
  for (std::size_t i = 0; i < count; ++i) img.samples()[i] = detail::get_f32_le(p + 4 * i);
  return img;
}

inline void write_pgm(const Image& img, const std::string& path) {
  require(img.bands() == 1, "write_pgm: needs a single band image");
  std::string buf =
      "P5\n" + std::to_string(img.width()) + " " + std::to_string(img.height()) + "\n255\n";
  for (double v : img.samples()) buf.push_back(static_cast<char>(detail::quantize8(v)));
  detail::spit(path, buf);
}

inline void write_ppm(const Image& img, const std::string& path) {
  require(img.bands() == 3, "write_ppm: needs a three band image");
  std::string buf =
      "P6\n" + std::to_string(img.width()) + " " + std::to_string(img.height()) + "\n255\n";
  // PNM interleaves channels per pixel while Image stores planes.
  for (int r = 0; r < img.height(); ++r)
    for (int c = 0; c < img.width(); ++c)
      for (int k = 0; k < 3; ++k)
        buf.push_back(static_cast<char>(detail::quantize8(img.at(r, c, k))));
  detail::spit(path, buf);
}

inline Image read_pnm_data(const std::string& data, const std::string& path) {
  std::size_t pos = 0;
  std::string magic = detail::pnm_token(data, pos);
  int bands = magic == "P5" ? 1 : 3;
  int w = detail::pnm_int(data, pos);
  int h = detail::pnm_int(data, pos);
  int maxval = detail::pnm_int(data, pos);
  if (w <= 0 || h <= 0) throw io_error(path + ": bad PNM dimensions");
  if (maxval != 255) throw io_error(path + ": only maxval 255 is supported");
  ++pos;  // single whitespace byte after maxval
  std::size_t count = static_cast<std::size_t>(w) * h * bands;
  if (data.size() - pos < count) throw io_error(path + ": truncated PNM payload");
  Image img(w, h, bands);
  const unsigned char* p = reinterpret_cast<const unsigned char*>(data.data() + pos);
  std::size_t i = 0;
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c)
      for (int k = 0; k < bands; ++k) img.at(r, c, k) = static_cast<double>(p[i++]);
  return img;
}

// Format detection is by content magic, not extension.
inline Image read_image(const std::string& path) {
  std::string data = detail::slurp(path);
  if (data.rfind("MBF1 ", 0) == 0) return read_mbf_data(data, path);
  if (data.rfind("P5", 0) == 0 || data.rfind("P6", 0) == 0) return read_pnm_data(data, path);
  throw io_error(path + ": unknown image format");
}

// Dispatches on the extension: .mbf, .pgm (single band) or .ppm (three bands).
inline void write_image(const Image& img, const std::string& path) {
  std::size_t dot = path.rfind('.');
  std::string ext = dot == std::string::npos ? "" : path.substr(dot);
  if (ext == ".mbf")
    write_mbf(img, path);
  else if (ext == ".pgm")
    write_pgm(img, path);
  else if (ext == ".ppm")
    write_ppm(img, path);
  else
    throw io_error(path + ": unsupported output extension");
}

}  // namespace pansharp
