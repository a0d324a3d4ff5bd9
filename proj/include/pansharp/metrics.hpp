#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "pansharp/image.hpp"

namespace pansharp {

inline constexpr int kMetricBlock = 8;

struct MetricReport {
  std::vector<double> rmse_band;
  double rmse = 0.0;
  double ergas = 0.0;
  double sam_degrees = 0.0;
  std::size_t sam_skipped = 0;
  std::vector<double> ssim_band_scores;
  double ssim = 0.0;
  double q2n = 0.0;
};

inline double rmse_band(const Image& a, const Image& b, int ka, int kb) {
  require(a.width() == b.width() && a.height() == b.height(), "rmse: shape mismatch");
  const double* pa = a.band(ka);
  const double* pb = b.band(kb);
  double acc = 0.0;
  for (std::size_t i = 0; i < a.pixels(); ++i) {
    double d = pa[i] - pb[i];
    acc += d * d;
  }
  return std::sqrt(acc / static_cast<double>(a.pixels()));
}

// Mean of the per band root mean square errors.
inline double rmse(const Image& a, const Image& b) {
  require(a.same_shape(b), "rmse: shape mismatch");
  double acc = 0.0;
  for (int k = 0; k < a.bands(); ++k) acc += rmse_band(a, b, k, k);
  return acc / a.bands();
}

// ERGAS = (100/s) sqrt( (1/C) sum_k (RMSE_k / mean(ref_k))^2 ).
inline double ergas(const Image& fused, const Image& ref, int factor) {
  require(fused.same_shape(ref), "ergas: shape mismatch");
  require(factor >= 1, "ergas: factor must be positive");
  double acc = 0.0;
  for (int k = 0; k < ref.bands(); ++k) {
    const double* pr = ref.band(k);
    double mean = 0.0;
    for (std::size_t i = 0; i < ref.pixels(); ++i) mean += pr[i];
    mean /= static_cast<double>(ref.pixels());
    require(mean != 0.0, "ergas: reference band has zero mean");
    double r = rmse_band(fused, ref, k, k) / mean;
    acc += r * r;
  }
  return (100.0 / factor) * std::sqrt(acc / ref.bands());
}

// Mean spectral angle in degrees. Pixels where either spectral vector has
// zero norm carry no direction and are skipped; their count is reported.
inline double sam_degrees(const Image& fused, const Image& ref, std::size_t* skipped = nullptr) {
  require(fused.same_shape(ref), "sam: shape mismatch");
  require(ref.bands() >= 2, "sam: needs at least two bands");
  std::size_t n = ref.pixels(), skip = 0;
  int C = ref.bands();
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (int k = 0; k < C; ++k) {
      double x = fused.samples()[static_cast<std::size_t>(k) * n + i];
      double y = ref.samples()[static_cast<std::size_t>(k) * n + i];
      dot += x * y;
      na += x * x;
      nb += y * y;
    }
    if (na == 0.0 || nb == 0.0) {
      ++skip;
      continue;
    }
    double cosv = std::clamp(dot / std::sqrt(na * nb), -1.0, 1.0);
    acc += std::acos(cosv);
  }
  if (skipped) *skipped = skip;
  require(skip < n, "sam: every pixel has a zero norm spectral vector");
  return (180.0 / M_PI) * acc / static_cast<double>(n - skip);
}

namespace detail {

struct BlockStats {
  double mx = 0.0, my = 0.0;   // means
  double vx = 0.0, vy = 0.0;   // population variances
  double cov = 0.0;
};

inline BlockStats block_stats(const double* x, const double* y, int w, int r0, int c0, int n) {
  BlockStats s;
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) {
      s.mx += x[static_cast<std::size_t>(r0 + r) * w + (c0 + c)];
      s.my += y[static_cast<std::size_t>(r0 + r) * w + (c0 + c)];
    }
  double inv = 1.0 / (n * n);
  s.mx *= inv;
  s.my *= inv;
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) {
      double dx = x[static_cast<std::size_t>(r0 + r) * w + (c0 + c)] - s.mx;
      double dy = y[static_cast<std::size_t>(r0 + r) * w + (c0 + c)] - s.my;
      s.vx += dx * dx;
      s.vy += dy * dy;
      s.cov += dx * dy;
    }
  s.vx *= inv;
  s.vy *= inv;
  s.cov *= inv;
  return s;
}

}  // namespace detail

// Universal quality index averaged over non overlapping 8x8 blocks, with no
// stabilizing constants:
//   Q = 4 cov mx my / ((vx + vy)(mx^2 + my^2)).
// Blocks with a zero denominator are skipped. Trailing rows and columns that
// do not fill a block are ignored.
inline double ssim_band(const Image& a, int ka, const Image& b, int kb) {
  require(a.width() == b.width() && a.height() == b.height(), "ssim: shape mismatch");
  const int n = kMetricBlock;
  require(a.width() >= n && a.height() >= n, "ssim: image smaller than one block");
  const double* x = a.band(ka);
  const double* y = b.band(kb);
  double acc = 0.0;
  std::size_t used = 0;
  for (int r0 = 0; r0 + n <= a.height(); r0 += n)
    for (int c0 = 0; c0 + n <= a.width(); c0 += n) {
      detail::BlockStats s = detail::block_stats(x, y, a.width(), r0, c0, n);
      double den = (s.vx + s.vy) * (s.mx * s.mx + s.my * s.my);
      if (den == 0.0) continue;
      acc += 4.0 * s.cov * s.mx * s.my / den;
      ++used;
    }
  return used == 0 ? 0.0 : acc / static_cast<double>(used);
}

inline double ssim_band(const Image& a, const Image& b) { return ssim_band(a, 0, b, 0); }

namespace detail {

// Cayley-Dickson product of component vectors of length 2^m, with the
// doubling rule (a,b)(c,d) = (ac - conj(d) b, d a + b conj(c)).
inline void cd_conj(std::vector<double>& a) {
  for (std::size_t i = 1; i < a.size(); ++i) a[i] = -a[i];
}

inline std::vector<double> cd_mult(const std::vector<double>& a, const std::vector<double>& b) {
  std::size_t d = a.size();
  if (d == 1) return {a[0] * b[0]};
  std::size_t h = d / 2;
  std::vector<double> a1(a.begin(), a.begin() + h), a2(a.begin() + h, a.end());
  std::vector<double> b1(b.begin(), b.begin() + h), b2(b.begin() + h, b.end());
  std::vector<double> b2c = b2, b1c = b1;
  cd_conj(b2c);
  cd_conj(b1c);
  std::vector<double> left = cd_mult(a1, b1);
  std::vector<double> l2 = cd_mult(b2c, a2);
  std::vector<double> right = cd_mult(b2, a1);
  std::vector<double> r2 = cd_mult(a2, b1c);
  std::vector<double> out(d);
  for (std::size_t i = 0; i < h; ++i) {
    out[i] = left[i] - l2[i];
    out[h + i] = right[i] + r2[i];
  }
  return out;
}

inline double cd_norm2(const std::vector<double>& a) {
  double s = 0.0;
  for (double v : a) s += v * v;
  return s;
}

}  // namespace detail

// Hypercomplex generalization of the block quality index. Spectral vectors
// are embedded into the Cayley-Dickson algebra of dimension D = next power
// of two >= bands (missing components are zero). Per block,
//   Q = 4 |cov| |mx| |my| / ((vx + vy)(|mx|^2 + |my|^2)),
// where cov = mean(x conj(y)) - mx conj(my) is hypercomplex and |.| is the
// Euclidean modulus. For D == 1 the algebra is the reals and the signed
// covariance is kept, which makes the index coincide with ssim_band.
inline double q2n(const Image& a, const Image& b) {
  require(a.same_shape(b), "q2n: shape mismatch");
  const int n = kMetricBlock;
  require(a.width() >= n && a.height() >= n, "q2n: image smaller than one block");
  int C = a.bands();
  std::size_t D = 1;
  while (D < static_cast<std::size_t>(C)) D *= 2;

  std::size_t np = a.pixels();
  int w = a.width();
  double acc = 0.0;
  std::size_t used = 0;
  std::vector<double> dx(D), dy(D), mx(D, 0.0), my(D, 0.0), cross(D);
  for (int r0 = 0; r0 + n <= a.height(); r0 += n)
    for (int c0 = 0; c0 + n <= a.width(); c0 += n) {
      double inv = 1.0 / (n * n);
      std::fill(mx.begin(), mx.end(), 0.0);
      std::fill(my.begin(), my.end(), 0.0);
      for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c) {
          std::size_t p = static_cast<std::size_t>(r0 + r) * w + (c0 + c);
          for (std::size_t k = 0; k < static_cast<std::size_t>(C); ++k) {
            mx[k] += a.samples()[k * np + p];
            my[k] += b.samples()[k * np + p];
          }
        }
      for (std::size_t k = 0; k < D; ++k) {
        mx[k] *= inv;
        my[k] *= inv;
      }
      // Centered second pass; for D == 1 this matches block_stats exactly.
      std::fill(cross.begin(), cross.end(), 0.0);
      double vx = 0.0, vy = 0.0;
      for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c) {
          std::size_t p = static_cast<std::size_t>(r0 + r) * w + (c0 + c);
          for (std::size_t k = 0; k < D; ++k) {
            double xv = k < static_cast<std::size_t>(C) ? a.samples()[k * np + p] : 0.0;
            double yv = k < static_cast<std::size_t>(C) ? b.samples()[k * np + p] : 0.0;
            dx[k] = xv - mx[k];
            dy[k] = yv - my[k];
          }
          vx += detail::cd_norm2(dx);
          vy += detail::cd_norm2(dy);
          if (D == 1) {
            cross[0] += dx[0] * dy[0];
          } else {
            std::vector<double> dyc = dy;
            detail::cd_conj(dyc);
            std::vector<double> prod = detail::cd_mult(dx, dyc);
            for (std::size_t k = 0; k < D; ++k) cross[k] += prod[k];
          }
        }
      vx *= inv;
      vy *= inv;
      for (std::size_t k = 0; k < D; ++k) cross[k] *= inv;

      double nmx2 = detail::cd_norm2(mx), nmy2 = detail::cd_norm2(my);
      double den = (vx + vy) * (nmx2 + nmy2);
      if (den == 0.0) continue;
      double num;
      if (D == 1)
        num = 4.0 * cross[0] * mx[0] * my[0];
      else
        num = 4.0 * std::sqrt(detail::cd_norm2(cross)) * std::sqrt(nmx2) * std::sqrt(nmy2);
      acc += num / den;
      ++used;
    }
  return used == 0 ? 0.0 : acc / static_cast<double>(used);
}

// Spectral distortion: change of the inter band similarity pattern between
// the upsampled low resolution bands and the fused bands.
inline double d_lambda(const Image& fused, const Image& lowres_up) {
  require(fused.same_shape(lowres_up), "d_lambda: shape mismatch");
  int C = fused.bands();
  require(C >= 2, "d_lambda: needs at least two bands");
  double acc = 0.0;
  for (int k = 0; k < C; ++k)
    for (int l = 0; l < C; ++l) {
      if (k == l) continue;
      acc += std::fabs(ssim_band(fused, k, fused, l) - ssim_band(lowres_up, k, lowres_up, l));
    }
  return acc / (static_cast<double>(C) * (C - 1));
}

// Spatial distortion: per band change of the similarity to the pan, where
// pan_low[k] is the degraded pan at the fused grid for band k.
inline double d_s(const Image& fused, const Image& lowres_up, const PanImage& pan,
                  const std::vector<Image>& pan_low) {
  require(fused.same_shape(lowres_up), "d_s: shape mismatch");
  require(pan.bands() == 1, "d_s: pan must be single band");
  int C = fused.bands();
  require(static_cast<int>(pan_low.size()) == C, "d_s: one degraded pan per band expected");
  double acc = 0.0;
  for (int k = 0; k < C; ++k) {
    require(pan_low[k].bands() == 1 && pan_low[k].width() == fused.width() &&
                pan_low[k].height() == fused.height(),
            "d_s: degraded pan shape mismatch");
    acc += std::fabs(ssim_band(pan, 0, fused, k) - ssim_band(pan_low[k], 0, lowres_up, k));
  }
  return acc / C;
}

inline double qnr(double dl, double ds) { return (1.0 - dl) * (1.0 - ds); }

// Full reference evaluation of a fused product against the reference.
inline MetricReport evaluate(const Image& fused, const Image& ref, int factor) {
  require(fused.same_shape(ref), "evaluate: shape mismatch");
  MetricReport rep;
  for (int k = 0; k < ref.bands(); ++k) {
    rep.rmse_band.push_back(rmse_band(fused, ref, k, k));
    rep.ssim_band_scores.push_back(ssim_band(fused, k, ref, k));
    rep.rmse += rep.rmse_band.back();
    rep.ssim += rep.ssim_band_scores.back();
  }
  rep.rmse /= ref.bands();
  rep.ssim /= ref.bands();
  rep.ergas = ergas(fused, ref, factor);
  rep.sam_degrees = ref.bands() >= 2 ? sam_degrees(fused, ref, &rep.sam_skipped) : 0.0;
  rep.q2n = q2n(fused, ref);
  return rep;
}

}  // namespace pansharp
