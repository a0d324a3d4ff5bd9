#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace pansharp {

inline void require(bool cond, const char* msg) {
  if (!cond) throw std::invalid_argument(msg);
}

// Planar raster of double samples. Storage is band sequential, each band
// row major, so sample (row, col) of band k lives at offset
// k*width*height + row*width + col. Panchromatic images are the bands == 1
// case; call sites that need one check it explicitly.
class Image {
 public:
  Image() = default;

  Image(int width, int height, int bands, double fill = 0.0)
      : width_(width), height_(height), bands_(bands) {
    require(width > 0 && height > 0 && bands > 0, "Image: dimensions must be positive");
    samples_.assign(static_cast<std::size_t>(width) * height * bands, fill);
  }

  int width() const { return width_; }
  int height() const { return height_; }
  int bands() const { return bands_; }
  std::size_t pixels() const { return static_cast<std::size_t>(width_) * height_; }

  double& at(int row, int col, int band = 0) {
    return samples_[index(row, col, band)];
  }
  double at(int row, int col, int band = 0) const {
    return samples_[index(row, col, band)];
  }

  double* band(int k) { return samples_.data() + static_cast<std::size_t>(k) * pixels(); }
  const double* band(int k) const {
    return samples_.data() + static_cast<std::size_t>(k) * pixels();
  }

  std::vector<double>& samples() { return samples_; }
  const std::vector<double>& samples() const { return samples_; }

  bool same_shape(const Image& o) const {
    return width_ == o.width_ && height_ == o.height_ && bands_ == o.bands_;
  }

  std::size_t index(int row, int col, int band = 0) const {
    return static_cast<std::size_t>(band) * pixels() + static_cast<std::size_t>(row) * width_ +
           col;
  }

 private:
  int width_ = 0;
  int height_ = 0;
  int bands_ = 0;
  std::vector<double> samples_;
};

using PanImage = Image;

// Whole sample symmetric fold of an arbitrary index into [0, n). The edge
// sample is not duplicated: -1 maps to 1 and n maps to n-2.
inline int mirror_index(int i, int n) {
  if (n == 1) return 0;
  while (i < 0 || i >= n) {
    if (i < 0) i = -i;
    if (i >= n) i = 2 * n - 2 - i;
  }
  return i;
}

inline Image extract_band(const Image& img, int k) {
  require(k >= 0 && k < img.bands(), "extract_band: band out of range");
  Image out(img.width(), img.height(), 1);
  std::copy(img.band(k), img.band(k) + img.pixels(), out.band(0));
  return out;
}

inline void insert_band(Image& dst, const Image& src, int k) {
  require(src.bands() == 1, "insert_band: source must be single band");
  require(src.width() == dst.width() && src.height() == dst.height(),
          "insert_band: shape mismatch");
  require(k >= 0 && k < dst.bands(), "insert_band: band out of range");
  std::copy(src.band(0), src.band(0) + src.pixels(), dst.band(k));
}

// Signed difference mapped to an 8 bit range: zero difference lands on
// mid grey 127.5 and +-20 spans the full range, values beyond saturate.
inline Image difference_visualization(const Image& a, const Image& b) {
  require(a.same_shape(b), "difference_visualization: shape mismatch");
  Image out(a.width(), a.height(), a.bands());
  const std::vector<double>& sa = a.samples();
  const std::vector<double>& sb = b.samples();
  for (std::size_t i = 0; i < sa.size(); ++i) {
    double v = (sa[i] - sb[i] + 20.0) * 255.0 / 40.0;
    out.samples()[i] = std::clamp(v, 0.0, 255.0);
  }
  return out;
}

inline double rms(const std::vector<double>& v) {
  double acc = 0.0;
  for (double x : v) acc += x * x;
  return std::sqrt(acc / static_cast<double>(v.size()));
}

}  // namespace pansharp
