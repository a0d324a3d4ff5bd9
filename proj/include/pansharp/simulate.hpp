#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "pansharp/image.hpp"
#include "pansharp/sampling.hpp"

namespace pansharp {

// Reduced resolution protocol: a reference image plays the truth, the pan is
// synthesized from it and the low resolution bands are produced by the
// formation model, optionally shifted per band first to emulate
// misregistration.
struct SimulationSpec {
  BlurSpec blur;
  SamplingSpec sampling;
  std::vector<double> alphas;      // pan mixing weights, one per band
  std::vector<BandShift> shifts;   // empty = co-registered
  double noise_sigma = 0.0;
  std::uint64_t seed = 0;
};

// Common mixing presets.
inline std::vector<double> alphas_equal(int bands) {
  return std::vector<double>(bands, 1.0 / bands);
}
inline std::vector<double> alphas_rgbn() { return {0.1, 0.4, 0.25, 0.25}; }
inline std::vector<double> alphas_no_blue() { return {0.0, 0.4, 0.35, 0.25}; }

// Default benchmark misregistration: band k sits (0.6 k, -0.4 k) high
// resolution pixels away from the pan geometry, band 0 aligned.
inline std::vector<BandShift> default_band_shifts(int bands) {
  std::vector<BandShift> s(bands);
  for (int k = 0; k < bands; ++k) s[k] = {0.6 * k, -0.4 * k};
  return s;
}

// P = sum_k alpha_k u_k on the reference grid.
inline PanImage synthesize_pan(const Image& ref, const std::vector<double>& alphas) {
  require(static_cast<int>(alphas.size()) == ref.bands(),
          "synthesize_pan: one weight per band expected");
  for (double a : alphas) require(a >= 0.0, "synthesize_pan: weights must be nonnegative");
  PanImage pan(ref.width(), ref.height(), 1, 0.0);
  for (int k = 0; k < ref.bands(); ++k) {
    const double* src = ref.band(k);
    double* dst = pan.band(0);
    for (std::size_t i = 0; i < pan.pixels(); ++i) dst[i] += alphas[k] * src[i];
  }
  return pan;
}

namespace detail {

// Portable deterministic N(0,1) stream: Box-Muller over mt19937_64 uniforms,
// so identical seeds give identical noise on any platform.
class GaussianStream {
 public:
  explicit GaussianStream(std::uint64_t seed) : rng_(seed) {}

  double next() {
    if (have_) {
      have_ = false;
      return spare_;
    }
    double u1, u2;
    do {
      u1 = uniform();
    } while (u1 <= 0.0);
    u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 2.0 * M_PI * u2;
    spare_ = r * std::sin(a);
    have_ = true;
    return r * std::cos(a);
  }

  double uniform() { return (rng_() >> 11) * 0x1.0p-53; }

 private:
  std::mt19937_64 rng_;
  double spare_ = 0.0;
  bool have_ = false;
};

}  // namespace detail

// Per band: optional subpixel shift, Gaussian blur, decimation, optional
// additive noise. Output bands live in their own (shifted) geometries.
inline Image simulate_lowres(const Image& ref, const SimulationSpec& spec) {
  validate(spec.sampling);
  require(spec.shifts.empty() || static_cast<int>(spec.shifts.size()) == ref.bands(),
          "simulate_lowres: one shift per band expected");
  int s = spec.sampling.factor;
  Image out(ref.width() / s, ref.height() / s, ref.bands());
  for (int k = 0; k < ref.bands(); ++k) {
    Image band = extract_band(ref, k);
    if (!spec.shifts.empty() && (spec.shifts[k].dx != 0.0 || spec.shifts[k].dy != 0.0))
      band = bicubic_translate(band, spec.shifts[k].dx, spec.shifts[k].dy);
    insert_band(out, blur_downsample(band, spec.blur, spec.sampling), k);
  }
  if (spec.noise_sigma > 0.0) {
    detail::GaussianStream noise(spec.seed);
    for (double& v : out.samples()) v += spec.noise_sigma * noise.next();
  }
  return out;
}

// Undo the per band shifts at low resolution (shift / factor), interpolating
// every band back onto the common geometry.
inline Image coregister_lowres(const Image& lowres, const SimulationSpec& spec) {
  require(static_cast<int>(spec.shifts.size()) == lowres.bands(),
          "coregister_lowres: one shift per band expected");
  int s = spec.sampling.factor;
  Image out(lowres.width(), lowres.height(), lowres.bands());
  for (int k = 0; k < lowres.bands(); ++k) {
    Image band = extract_band(lowres, k);
    if (spec.shifts[k].dx != 0.0 || spec.shifts[k].dy != 0.0)
      band = bicubic_translate(band, -spec.shifts[k].dx / s, -spec.shifts[k].dy / s);
    insert_band(out, band, k);
  }
  return out;
}

// Expresses the pan in a band's geometry (the first procedure step for
// misregistered fusion).
inline PanImage warp_pan_to_band(const PanImage& pan, const BandShift& shift) {
  require(pan.bands() == 1, "warp_pan_to_band: pan must be single band");
  return bicubic_translate(pan, shift.dx, shift.dy);
}

// Radial chirp in [0, 255]: frequency grows with the radius, so decimation
// aliases its outer rings. Useful to expose aliasing in sampling chains.
inline Image make_zone_plate(int width, int height) {
  Image img(width, height, 1);
  double cy = 0.5 * (height - 1), cx = 0.5 * (width - 1);
  double rmax = std::sqrt(cy * cy + cx * cx);
  double kmax = M_PI;  // instantaneous frequency at the rim
  for (int r = 0; r < height; ++r)
    for (int c = 0; c < width; ++c) {
      double y = r - cy, x = c - cx;
      double phase = kmax * (y * y + x * x) / (2.0 * rmax);
      img.at(r, c) = 127.5 * (1.0 + std::cos(phase));
    }
  return img;
}

// Procedural reference scene: smooth gradients, hard edged rectangles of
// band correlated colors, a few Gaussian blobs and an oscillatory patch.
// Bright everywhere (values in about [30, 255]) so synthesized pans stay
// well away from zero.
inline Image make_test_scene(int width, int height, int bands, std::uint64_t seed) {
  require(bands >= 1, "make_test_scene: needs at least one band");
  Image img(width, height, bands);
  detail::GaussianStream rng(seed);
  auto uni = [&](double lo, double hi) { return lo + (hi - lo) * rng.uniform(); };

  // Smooth base ramp per band.
  for (int k = 0; k < bands; ++k) {
    double gx = uni(-40.0, 40.0), gy = uni(-40.0, 40.0), base = uni(90.0, 150.0);
    double* p = img.band(k);
    for (int r = 0; r < height; ++r)
      for (int c = 0; c < width; ++c)
        p[static_cast<std::size_t>(r) * width + c] =
            base + gx * (static_cast<double>(c) / width - 0.5) +
            gy * (static_cast<double>(r) / height - 0.5);
  }

  // Rectangles with sharp edges; colors correlate across bands with a per
  // band deviation so no band is a copy of another.
  int rects = 6 + static_cast<int>(uni(0.0, 4.0));
  for (int i = 0; i < rects; ++i) {
    int rw = std::max(2, static_cast<int>(uni(0.1, 0.4) * width));
    int rh = std::max(2, static_cast<int>(uni(0.1, 0.4) * height));
    int r0 = static_cast<int>(uni(0.0, 1.0) * (height - rh));
    int c0 = static_cast<int>(uni(0.0, 1.0) * (width - rw));
    double tone = uni(-70.0, 90.0);
    for (int k = 0; k < bands; ++k) {
      double dev = tone + uni(-25.0, 25.0);
      double* p = img.band(k);
      for (int r = r0; r < r0 + rh; ++r)
        for (int c = c0; c < c0 + rw; ++c) p[static_cast<std::size_t>(r) * width + c] += dev;
    }
  }

  // Gaussian blobs shared across bands.
  int blobs = 3;
  for (int i = 0; i < blobs; ++i) {
    double bc = uni(0.0, 1.0) * width, br = uni(0.0, 1.0) * height;
    double rad = uni(0.05, 0.15) * std::min(width, height);
    double amp = uni(-50.0, 60.0);
    for (int k = 0; k < bands; ++k) {
      double* p = img.band(k);
      for (int r = 0; r < height; ++r)
        for (int c = 0; c < width; ++c) {
          double d2 = (r - br) * (r - br) + (c - bc) * (c - bc);
          p[static_cast<std::size_t>(r) * width + c] += amp * std::exp(-d2 / (2.0 * rad * rad));
        }
    }
  }

  // Oscillatory patch in one corner quarter: content above the low
  // resolution Nyquist rate, the part aliasing acts on.
  int qh = height / 2, qw = width / 2;
  double freq = uni(1.2, 1.9);
  for (int k = 0; k < bands; ++k) {
    double gain = uni(12.0, 22.0);
    double* p = img.band(k);
    for (int r = 0; r < qh; ++r)
      for (int c = 0; c < qw; ++c)
        p[static_cast<std::size_t>(r) * width + c] +=
            gain * std::cos(freq * r) * std::cos(freq * c);
  }

  for (double& v : img.samples()) v = std::clamp(v, 30.0, 255.0);
  return img;
}

}  // namespace pansharp
