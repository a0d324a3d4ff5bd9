#pragma once

#include <cmath>
#include <vector>

#include "pansharp/image.hpp"

namespace pansharp {

// Similarity graph parameters: weights compare (2*patch_radius+1)^2 patches
// over a (2*search_radius+1)^2 window, with bandwidth h.
// self_weight_after_normalization switches to the variant that normalizes
// first and then overwrites the central weight, whose rows no longer sum
// to one.
struct NonlocalConfig {
  double h = 1.25;
  int search_radius = 3;
  int patch_radius = 1;
  bool self_weight_after_normalization = false;
};

inline void validate(const NonlocalConfig& cfg) {
  require(cfg.h > 0.0, "NonlocalConfig: h must be positive");
  require(cfg.search_radius >= 1, "NonlocalConfig: search_radius must be >= 1");
  require(cfg.patch_radius >= 0, "NonlocalConfig: patch_radius must be >= 0");
}

// Per pixel window of weights, stored dense in offset order: entry
// (o_row + R)*(2R+1) + (o_col + R) of pixel p is the weight towards the
// window position p + (o_row, o_col). Border pixels keep the full window;
// positions outside the image fold back onto it by mirror symmetry.
class WeightField {
 public:
  WeightField() = default;
  WeightField(int width, int height, int search_radius)
      : width_(width), height_(height), radius_(search_radius) {
    w_.assign(static_cast<std::size_t>(width) * height * window_area(), 0.0);
  }

  int width() const { return width_; }
  int height() const { return height_; }
  int search_radius() const { return radius_; }
  int window_size() const { return 2 * radius_ + 1; }
  int window_area() const { return window_size() * window_size(); }

  double* row(std::size_t pixel) { return w_.data() + pixel * window_area(); }
  const double* row(std::size_t pixel) const { return w_.data() + pixel * window_area(); }

 private:
  int width_ = 0;
  int height_ = 0;
  int radius_ = 0;
  std::vector<double> w_;
};

// Patch similarity weights computed on the panchromatic. For each pixel p
// and window offset o != 0,
//   w(p, p+o) = exp(-(1/h^2) sum_t (P(p+t) - P(p+o+t))^2),  |t|_inf <= patch_radius,
// with P mirror extended. The central weight is then set to the maximum of
// the others and the window is normalized to unit sum (default variant).
inline WeightField compute_weights(const PanImage& pan, const NonlocalConfig& cfg) {
  require(pan.bands() == 1, "compute_weights: pan must be single band");
  validate(cfg);
  int w = pan.width(), h = pan.height();
  int R = cfg.search_radius, P = cfg.patch_radius;
  int pad = R + P;
  int ew = w + 2 * pad;
  int eh = h + 2 * pad;

  // Mirror extended copy of the pan so patch loops are branch free.
  std::vector<double> ext(static_cast<std::size_t>(ew) * eh);
  for (int r = 0; r < eh; ++r) {
    int sr = mirror_index(r - pad, h);
    for (int c = 0; c < ew; ++c)
      ext[static_cast<std::size_t>(r) * ew + c] = pan.at(sr, mirror_index(c - pad, w));
  }

  WeightField field(w, h, R);
  int win = field.window_size();
  double inv_h2 = 1.0 / (cfg.h * cfg.h);
  int center = (win * win) / 2;

  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      double* row = field.row(static_cast<std::size_t>(r) * w + c);
      const double* base = ext.data() + static_cast<std::size_t>(r + pad) * ew + (c + pad);
      double max_other = 0.0;
      for (int orow = -R; orow <= R; ++orow) {
        for (int ocol = -R; ocol <= R; ++ocol) {
          int slot = (orow + R) * win + (ocol + R);
          if (orow == 0 && ocol == 0) continue;
          const double* shifted = base + static_cast<std::ptrdiff_t>(orow) * ew + ocol;
          double dist = 0.0;
          for (int tr = -P; tr <= P; ++tr) {
            const double* a = base + static_cast<std::ptrdiff_t>(tr) * ew;
            const double* b = shifted + static_cast<std::ptrdiff_t>(tr) * ew;
            for (int tc = -P; tc <= P; ++tc) {
              double d = a[tc] - b[tc];
              dist += d * d;
            }
          }
          double val = std::exp(-dist * inv_h2);
          row[slot] = val;
          if (val > max_other) max_other = val;
        }
      }
      // On extreme-contrast pans every exponential can underflow to zero;
      // such a window degenerates to a delta at the center instead of a
      // division by zero.
      if (cfg.self_weight_after_normalization) {
        // Variant: normalize with the raw central weight exp(0) = 1 in the
        // sum, then overwrite the center with the largest normalized weight.
        row[center] = 1.0;
        double sum = 0.0;
        for (int i = 0; i < win * win; ++i) sum += row[i];
        for (int i = 0; i < win * win; ++i) row[i] /= sum;
        if (max_other > 0.0) {
          double m = 0.0;
          for (int i = 0; i < win * win; ++i)
            if (i != center && row[i] > m) m = row[i];
          row[center] = m;
        }
      } else {
        row[center] = max_other > 0.0 ? max_other : 1.0;
        double sum = 0.0;
        for (int i = 0; i < win * win; ++i) sum += row[i];
        for (int i = 0; i < win * win; ++i) row[i] /= sum;
      }
    }
  }
  return field;
}

// Applies the gradient of the nonlocal quadratic form, i.e.
//   out(p) = sum_q (u(p) - u(q)) (w(p,q) + w(q,p)).
// Forward and transposed contributions are accumulated in one fixed order
// pass, so the result is the exact gradient of nonlocal_energy.
inline Image apply_nonlocal_operator(const WeightField& field, const Image& band) {
  require(band.bands() == 1, "apply_nonlocal_operator: band must be single band");
  require(band.width() == field.width() && band.height() == field.height(),
          "apply_nonlocal_operator: shape mismatch");
  int w = field.width(), h = field.height(), R = field.search_radius();
  int win = field.window_size();
  Image out(w, h, 1, 0.0);
  const double* u = band.band(0);
  double* g = out.band(0);

  std::vector<int> row_map(h + 2 * R), col_map(w + 2 * R);
  for (int i = 0; i < h + 2 * R; ++i) row_map[i] = mirror_index(i - R, h);
  for (int i = 0; i < w + 2 * R; ++i) col_map[i] = mirror_index(i - R, w);

  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      std::size_t p = static_cast<std::size_t>(r) * w + c;
      const double* row = field.row(p);
      for (int orow = -R; orow <= R; ++orow) {
        std::size_t qrow = static_cast<std::size_t>(row_map[r + orow + R]) * w;
        for (int ocol = -R; ocol <= R; ++ocol) {
          double wt = row[(orow + R) * win + (ocol + R)];
          std::size_t q = qrow + col_map[c + ocol + R];
          double d = wt * (u[p] - u[q]);
          g[p] += d;
          g[q] -= d;
        }
      }
    }
  }
  return out;
}

// (1/2) sum_{p,q} w(p,q) (u(q) - u(p))^2 over the stored windows.
inline double nonlocal_energy(const WeightField& field, const Image& band) {
  require(band.bands() == 1 && band.width() == field.width() &&
              band.height() == field.height(),
          "nonlocal_energy: shape mismatch");
  int w = field.width(), h = field.height(), R = field.search_radius();
  int win = field.window_size();
  const double* u = band.band(0);
  double acc = 0.0;
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      const double* row = field.row(static_cast<std::size_t>(r) * w + c);
      double up = u[static_cast<std::size_t>(r) * w + c];
      for (int orow = -R; orow <= R; ++orow) {
        int qr = mirror_index(r + orow, h);
        for (int ocol = -R; ocol <= R; ++ocol) {
          int qc = mirror_index(c + ocol, w);
          double d = u[static_cast<std::size_t>(qr) * w + qc] - up;
          acc += row[(orow + R) * win + (ocol + R)] * d * d;
        }
      }
    }
  }
  return 0.5 * acc;
}

}  // namespace pansharp
