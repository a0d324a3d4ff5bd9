#pragma once

#include <cmath>

#include "pansharp/image.hpp"
#include "pansharp/sampling.hpp"

namespace pansharp {

struct BaselineConfig {
  BlurSpec blur;            // pan degradation model for LBF
  SamplingSpec sampling;    // resolution ratio
  int hpf_box = 5;          // box filter size for HPF and SFIM
  int lmvm_window = 9;      // local statistics window for LMVM
  double ratio_epsilon = 1e-6;
};

namespace detail {

inline double pan_mean(const PanImage& pan) {
  double m = 0.0;
  for (double v : pan.samples()) m += v;
  return m / static_cast<double>(pan.samples().size());
}

// Shared shape check: pan at full resolution, lowres at 1/factor.
inline void check_fusion_inputs(const PanImage& pan, const Image& lowres, int factor) {
  require(pan.bands() == 1, "fusion: pan must be single band");
  require(pan.width() == lowres.width() * factor && pan.height() == lowres.height() * factor,
          "fusion: pan and lowres sizes disagree with the factor");
}

}  // namespace detail

inline Image fuse_bicubic(const Image& lowres, int factor) {
  return bicubic_upsample(lowres, factor);
}

// High pass filtering: add the pan detail layer to each upsampled band,
//   u_k = utilde_k + (P - box(P)).
inline Image fuse_hpf(const PanImage& pan, const Image& lowres, const BaselineConfig& cfg) {
  detail::check_fusion_inputs(pan, lowres, cfg.sampling.factor);
  Image up = bicubic_upsample(lowres, cfg.sampling.factor);
  Image smooth = convolve(pan, box_kernel(cfg.hpf_box));
  for (int k = 0; k < up.bands(); ++k) {
    double* u = up.band(k);
    const double* p = pan.band(0);
    const double* s = smooth.band(0);
    for (std::size_t i = 0; i < up.pixels(); ++i) u[i] += p[i] - s[i];
  }
  return up;
}

// Smoothing filter based intensity modulation: multiply each upsampled band
// by the ratio of the pan to its smoothed version,
//   u_k = utilde_k * P / max(box(P), eps mean(P)).
inline Image fuse_sfim(const PanImage& pan, const Image& lowres, const BaselineConfig& cfg) {
  detail::check_fusion_inputs(pan, lowres, cfg.sampling.factor);
  Image up = bicubic_upsample(lowres, cfg.sampling.factor);
  Image smooth = convolve(pan, box_kernel(cfg.hpf_box));
  double floor = cfg.ratio_epsilon * detail::pan_mean(pan);
  if (floor <= 0.0) floor = cfg.ratio_epsilon;
  for (int k = 0; k < up.bands(); ++k) {
    double* u = up.band(k);
    const double* p = pan.band(0);
    const double* s = smooth.band(0);
    for (std::size_t i = 0; i < up.pixels(); ++i) u[i] *= p[i] / std::max(s[i], floor);
  }
  return up;
}

// Low resolution band fusion: same modulation as SFIM but the smoothed pan
// goes through the actual degradation chain,
//   u_k = utilde_k * P / max(Ptilde, eps mean(P)),
//   Ptilde = bicubic_upsample(blur_downsample(P)).
inline Image fuse_lbf(const PanImage& pan, const Image& lowres, const BaselineConfig& cfg) {
  detail::check_fusion_inputs(pan, lowres, cfg.sampling.factor);
  Image up = bicubic_upsample(lowres, cfg.sampling.factor);
  Image pan_low =
      bicubic_upsample(blur_downsample(pan, cfg.blur, cfg.sampling), cfg.sampling.factor);
  double floor = cfg.ratio_epsilon * detail::pan_mean(pan);
  if (floor <= 0.0) floor = cfg.ratio_epsilon;
  for (int k = 0; k < up.bands(); ++k) {
    double* u = up.band(k);
    const double* p = pan.band(0);
    const double* s = pan_low.band(0);
    for (std::size_t i = 0; i < up.pixels(); ++i) u[i] *= p[i] / std::max(s[i], floor);
  }
  return up;
}

// Local mean and variance matching: renormalize the pan to the local first
// and second order statistics of each upsampled band over a sliding window,
//   u_k = (P - m_P) sigma_k / max(sigma_P, eps) + m_k.
inline Image fuse_lmvm(const PanImage& pan, const Image& lowres, const BaselineConfig& cfg) {
  detail::check_fusion_inputs(pan, lowres, cfg.sampling.factor);
  Image up = bicubic_upsample(lowres, cfg.sampling.factor);
  Kernel1D box = box_kernel(cfg.lmvm_window);

  auto local_stats = [&](const Image& img, int k, Image& mean, Image& sd) {
    Image b = extract_band(img, k);
    mean = convolve(b, box);
    Image b2(b.width(), b.height(), 1);
    for (std::size_t i = 0; i < b.pixels(); ++i)
      b2.samples()[i] = b.samples()[i] * b.samples()[i];
    sd = convolve(b2, box);
    // Population variance over the window; tiny negatives are rounding.
    for (std::size_t i = 0; i < sd.pixels(); ++i) {
      double var = sd.samples()[i] - mean.samples()[i] * mean.samples()[i];
      sd.samples()[i] = std::sqrt(std::max(var, 0.0));
    }
  };

  Image mp, sp;
  local_stats(pan, 0, mp, sp);
  Image out(up.width(), up.height(), up.bands());
  for (int k = 0; k < up.bands(); ++k) {
    Image mu, su;
    local_stats(up, k, mu, su);
    double* o = out.band(k);
    const double* p = pan.band(0);
    for (std::size_t i = 0; i < up.pixels(); ++i) {
      double sigma_p = std::max(sp.samples()[i], cfg.ratio_epsilon);
      o[i] = (p[i] - mp.samples()[i]) * su.samples()[i] / sigma_p + mu.samples()[i];
    }
  }
  return out;
}

}  // namespace pansharp
