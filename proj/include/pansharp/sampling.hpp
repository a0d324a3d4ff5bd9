#pragma once

#include <cmath>
#include <vector>

#include "pansharp/image.hpp"

namespace pansharp {

// Gaussian point spread function, truncated at radius taps per side.
// radius == 0 asks for the default ceil(3 sigma).
struct BlurSpec {
  double sigma = 1.3;
  int radius = 0;
};

// Decimation geometry: keep one sample out of factor x factor, offset by
// (phase_row, phase_col) inside each cell.
struct SamplingSpec {
  int factor = 4;
  int phase_row = 0;
  int phase_col = 0;
};

inline void validate(const SamplingSpec& s) {
  require(s.factor >= 2, "SamplingSpec: factor must be >= 2");
  require(s.phase_row >= 0 && s.phase_row < s.factor && s.phase_col >= 0 &&
              s.phase_col < s.factor,
          "SamplingSpec: phase must lie in [0, factor)");
}

// Centered separable kernel, taps.size() == 2*radius + 1, normalized to
// unit sum for the blur kernels used here.
struct Kernel1D {
  std::vector<double> taps;
  int radius = 0;

  double abs_sum() const {
    double s = 0.0;
    for (double t : taps) s += std::fabs(t);
    return s;
  }
};

inline Kernel1D gaussian_kernel(const BlurSpec& blur) {
  require(blur.sigma > 0.0, "gaussian_kernel: sigma must be positive");
  int def = static_cast<int>(std::ceil(3.0 * blur.sigma));
  if (def < 1) def = 1;
  int radius = blur.radius == 0 ? def : blur.radius;
  require(radius >= def, "gaussian_kernel: radius below ceil(3 sigma) truncates the tail");
  Kernel1D k;
  k.radius = radius;
  k.taps.resize(2 * radius + 1);
  double sum = 0.0;
  for (int t = -radius; t <= radius; ++t) {
    double v = std::exp(-0.5 * (t * t) / (blur.sigma * blur.sigma));
    k.taps[t + radius] = v;
    sum += v;
  }
  for (double& v : k.taps) v /= sum;
  return k;
}

inline Kernel1D box_kernel(int size) {
  require(size >= 1 && size % 2 == 1, "box_kernel: size must be odd and positive");
  Kernel1D k;
  k.radius = size / 2;
  k.taps.assign(size, 1.0 / size);
  return k;
}

namespace detail {

// Extended index table: ext[i] = mirror fold of i - radius, so the inner
// convolution loops never branch on the border.
inline std::vector<int> mirror_table(int n, int radius) {
  std::vector<int> ext(n + 2 * radius);
  for (int i = 0; i < n + 2 * radius; ++i) ext[i] = mirror_index(i - radius, n);
  return ext;
}

// One separable pass along rows (horizontal) or columns of a single band.
// Taps are applied left to right, a fixed order shared with the adjoint.
inline void conv_pass_rows(const double* src, double* dst, int w, int h, const Kernel1D& k,
                           const std::vector<int>& map) {
  int taps = 2 * k.radius + 1;
  for (int r = 0; r < h; ++r) {
    const double* row = src + static_cast<std::size_t>(r) * w;
    double* out = dst + static_cast<std::size_t>(r) * w;
    for (int c = 0; c < w; ++c) {
      double acc = 0.0;
      for (int t = 0; t < taps; ++t) acc += k.taps[t] * row[map[c + t]];
      out[c] = acc;
    }
  }
}

inline void conv_pass_cols(const double* src, double* dst, int w, int h, const Kernel1D& k,
                           const std::vector<int>& map) {
  int taps = 2 * k.radius + 1;
  for (int r = 0; r < h; ++r) {
    double* out = dst + static_cast<std::size_t>(r) * w;
    for (int c = 0; c < w; ++c) {
      double acc = 0.0;
      for (int t = 0; t < taps; ++t)
        acc += k.taps[t] * src[static_cast<std::size_t>(map[r + t]) * w + c];
      out[c] = acc;
    }
  }
}

// Transposed passes: scatter each source sample onto the positions the
// forward pass read it from. Exact adjoints of the passes above, including
// the fold at the borders.
inline void conv_pass_rows_adjoint(const double* src, double* dst, int w, int h,
                                   const Kernel1D& k, const std::vector<int>& map) {
  int taps = 2 * k.radius + 1;
  for (int r = 0; r < h; ++r) {
    const double* row = src + static_cast<std::size_t>(r) * w;
    double* out = dst + static_cast<std::size_t>(r) * w;
    for (int c = 0; c < w; ++c) out[c] = 0.0;
    for (int c = 0; c < w; ++c)
      for (int t = 0; t < taps; ++t) out[map[c + t]] += k.taps[t] * row[c];
  }
}

inline void conv_pass_cols_adjoint(const double* src, double* dst, int w, int h,
                                   const Kernel1D& k, const std::vector<int>& map) {
  int taps = 2 * k.radius + 1;
  std::size_t n = static_cast<std::size_t>(w) * h;
  for (std::size_t i = 0; i < n; ++i) dst[i] = 0.0;
  for (int r = 0; r < h; ++r) {
    const double* row = src + static_cast<std::size_t>(r) * w;
    for (int c = 0; c < w; ++c)
      for (int t = 0; t < taps; ++t)
        dst[static_cast<std::size_t>(map[r + t]) * w + c] += k.taps[t] * row[c];
  }
}

}  // namespace detail

// Separable correlation with mirror extension, applied to every band. The
// kernels used here are symmetric, so this coincides with convolution.
inline Image convolve(const Image& img, const Kernel1D& k) {
  Image out(img.width(), img.height(), img.bands());
  std::vector<double> tmp(img.pixels());
  std::vector<int> col_map = detail::mirror_table(img.width(), k.radius);
  std::vector<int> row_map = detail::mirror_table(img.height(), k.radius);
  for (int b = 0; b < img.bands(); ++b) {
    detail::conv_pass_rows(img.band(b), tmp.data(), img.width(), img.height(), k, col_map);
    detail::conv_pass_cols(tmp.data(), out.band(b), img.width(), img.height(), k, row_map);
  }
  return out;
}

// Matrix transpose of convolve for the same kernel. Needed by gradient
// computations; the pair satisfies <convolve(x), y> == <x, convolve_adjoint(y)>.
inline Image convolve_adjoint(const Image& img, const Kernel1D& k) {
  Image out(img.width(), img.height(), img.bands());
  std::vector<double> tmp(img.pixels());
  std::vector<int> col_map = detail::mirror_table(img.width(), k.radius);
  std::vector<int> row_map = detail::mirror_table(img.height(), k.radius);
  for (int b = 0; b < img.bands(); ++b) {
    detail::conv_pass_cols_adjoint(img.band(b), tmp.data(), img.width(), img.height(), k,
                                   row_map);
    detail::conv_pass_rows_adjoint(tmp.data(), out.band(b), img.width(), img.height(), k,
                                   col_map);
  }
  return out;
}

inline Image decimate(const Image& img, const SamplingSpec& s) {
  validate(s);
  require(img.width() % s.factor == 0 && img.height() % s.factor == 0,
          "decimate: dimensions must be divisible by the factor");
  Image out(img.width() / s.factor, img.height() / s.factor, img.bands());
  for (int b = 0; b < img.bands(); ++b)
    for (int r = 0; r < out.height(); ++r)
      for (int c = 0; c < out.width(); ++c)
        out.at(r, c, b) = img.at(r * s.factor + s.phase_row, c * s.factor + s.phase_col, b);
  return out;
}

// Nearest neighbour zoom: each low resolution pixel becomes a factor x factor
// block. This is the replication extension used by the data fidelity term.
inline Image replicate_upsample(const Image& img, int factor) {
  require(factor >= 2, "replicate_upsample: factor must be >= 2");
  Image out(img.width() * factor, img.height() * factor, img.bands());
  for (int b = 0; b < img.bands(); ++b)
    for (int r = 0; r < out.height(); ++r)
      for (int c = 0; c < out.width(); ++c) out.at(r, c, b) = img.at(r / factor, c / factor, b);
  return out;
}

// Adjoint of decimate: place samples back on the kept lattice, zeros
// elsewhere.
inline Image zero_fill_upsample(const Image& img, const SamplingSpec& s) {
  validate(s);
  Image out(img.width() * s.factor, img.height() * s.factor, img.bands());
  for (int b = 0; b < img.bands(); ++b)
    for (int r = 0; r < img.height(); ++r)
      for (int c = 0; c < img.width(); ++c)
        out.at(r * s.factor + s.phase_row, c * s.factor + s.phase_col, b) = img.at(r, c, b);
  return out;
}

namespace detail {

// Keys cubic weight, a = -0.5.
inline double cubic_weight(double t) {
  t = std::fabs(t);
  if (t <= 1.0) return ((1.5 * t - 2.5) * t) * t + 1.0;
  if (t < 2.0) return ((-0.5 * t + 2.5) * t - 4.0) * t + 2.0;
  return 0.0;
}

// Sample fetch with a linear extrapolating fold past the borders, which
// keeps cubic interpolation exact for affine images all the way to the
// edges (a plain symmetric fold would bend ramps in the outermost cells).
inline double edge_value(const double* v, int n, int i) {
  if (i >= 0 && i < n) return v[i];
  if (i < 0) return 2.0 * v[0] - v[mirror_index(-i, n)];
  return 2.0 * v[n - 1] - v[mirror_index(2 * (n - 1) - i, n)];
}

// Bicubic sample of one band at real position (y, x), row = y, col = x.
inline double bicubic_sample(const double* band, int w, int h, double y, double x) {
  int iy = static_cast<int>(std::floor(y));
  int ix = static_cast<int>(std::floor(x));
  double fy = y - iy;
  double fx = x - ix;
  double wx[4], wy[4];
  for (int k = 0; k < 4; ++k) {
    wx[k] = cubic_weight(fx - (k - 1));
    wy[k] = cubic_weight(fy - (k - 1));
  }
  auto row_interp = [&](int r) {
    const double* row = band + static_cast<std::size_t>(r) * w;
    double acc = 0.0;
    for (int k = 0; k < 4; ++k) acc += wx[k] * edge_value(row, w, ix - 1 + k);
    return acc;
  };
  auto row_value = [&](int r) {
    if (r >= 0 && r < h) return row_interp(r);
    if (r < 0) return 2.0 * row_interp(0) - row_interp(mirror_index(-r, h));
    return 2.0 * row_interp(h - 1) - row_interp(mirror_index(2 * (h - 1) - r, h));
  };
  double acc = 0.0;
  for (int k = 0; k < 4; ++k) acc += wy[k] * row_value(iy - 1 + k);
  return acc;
}

}  // namespace detail

// Bicubic zoom by an integer factor, aligned so that output(factor*i) is
// exactly input(i). Reproduces constant and affine images exactly.
inline Image bicubic_upsample(const Image& img, int factor) {
  require(factor >= 2, "bicubic_upsample: factor must be >= 2");
  Image out(img.width() * factor, img.height() * factor, img.bands());
  for (int b = 0; b < img.bands(); ++b) {
    const double* src = img.band(b);
    for (int r = 0; r < out.height(); ++r) {
      double y = static_cast<double>(r) / factor;
      for (int c = 0; c < out.width(); ++c) {
        double x = static_cast<double>(c) / factor;
        out.at(r, c, b) = detail::bicubic_sample(src, img.width(), img.height(), y, x);
      }
    }
  }
  return out;
}

// Planar shift in high resolution pixels: +dx moves content right, +dy down.
struct BandShift {
  double dx = 0.0;
  double dy = 0.0;
};

// Subpixel translation: content moves by +dx columns and +dy rows, so the
// output at p reads the input at p - (dy, dx).
inline Image bicubic_translate(const Image& img, double dx, double dy) {
  double bound = std::min(img.width(), img.height()) / 4.0;
  require(std::fabs(dx) < bound && std::fabs(dy) < bound,
          "bicubic_translate: shift too large for the image");
  Image out(img.width(), img.height(), img.bands());
  for (int b = 0; b < img.bands(); ++b) {
    const double* src = img.band(b);
    for (int r = 0; r < img.height(); ++r)
      for (int c = 0; c < img.width(); ++c)
        out.at(r, c, b) =
            detail::bicubic_sample(src, img.width(), img.height(), r - dy, c - dx);
  }
  return out;
}

// The sensor forward model: Gaussian blur then decimation.
inline Image blur_downsample(const Image& img, const BlurSpec& blur, const SamplingSpec& s) {
  return decimate(convolve(img, gaussian_kernel(blur)), s);
}

// Exact adjoint of blur_downsample: zero fill onto the kept lattice, then
// the transposed convolution.
inline Image adjoint_upsample_blur(const Image& img, const BlurSpec& blur,
                                   const SamplingSpec& s) {
  return convolve_adjoint(zero_fill_upsample(img, s), gaussian_kernel(blur));
}

}  // namespace pansharp
