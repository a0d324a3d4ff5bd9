#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "pansharp/image.hpp"
#include "pansharp/sampling.hpp"

using namespace pansharp;

namespace {

Image random_image(int w, int h, int c, unsigned seed, double lo = 0.0, double hi = 255.0) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> dist(lo, hi);
  Image img(w, h, c);
  for (double& v : img.samples()) v = dist(rng);
  return img;
}

// Independent symmetric fold used by the oracles below.
int fold(int i, int n) {
  while (i < 0 || i >= n) {
    if (i < 0) i = -i;
    if (i >= n) i = 2 * (n - 1) - i;
  }
  return i;
}

// Full 2D convolution oracle: direct double loop over the separable kernel's
// outer product, mirror extension, no factorization into passes.
Image brute_convolve(const Image& img, const Kernel1D& k) {
  Image out(img.width(), img.height(), img.bands());
  int R = k.radius;
  for (int b = 0; b < img.bands(); ++b)
    for (int r = 0; r < img.height(); ++r)
      for (int c = 0; c < img.width(); ++c) {
        double acc = 0.0;
        for (int tr = -R; tr <= R; ++tr)
          for (int tc = -R; tc <= R; ++tc)
            acc += k.taps[tr + R] * k.taps[tc + R] *
                   img.at(fold(r + tr, img.height()), fold(c + tc, img.width()), b);
        out.at(r, c, b) = acc;
      }
  return out;
}

double dot(const Image& a, const Image& b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.samples().size(); ++i) acc += a.samples()[i] * b.samples()[i];
  return acc;
}

}  // namespace

TEST(MirrorIndex, FoldsWithoutDuplicatingTheEdge) {
  EXPECT_EQ(mirror_index(-1, 5), 1);
  EXPECT_EQ(mirror_index(-2, 5), 2);
  EXPECT_EQ(mirror_index(5, 5), 3);
  EXPECT_EQ(mirror_index(6, 5), 2);
  EXPECT_EQ(mirror_index(2, 5), 2);
  EXPECT_EQ(mirror_index(7, 1), 0);
}

TEST(GaussianKernel, NormalizedSymmetricWithDefaultRadius) {
  Kernel1D k = gaussian_kernel({1.3, 0});
  EXPECT_EQ(k.radius, 4);  // ceil(3 * 1.3)
  ASSERT_EQ(k.taps.size(), 9u);
  double sum = 0.0;
  for (double t : k.taps) {
    EXPECT_GT(t, 0.0);
    sum += t;
  }
  EXPECT_NEAR(sum, 1.0, 1e-15);
  for (int t = 0; t <= k.radius; ++t) EXPECT_DOUBLE_EQ(k.taps[k.radius - t], k.taps[k.radius + t]);
  for (int t = 0; t < k.radius; ++t) EXPECT_GT(k.taps[k.radius + t], k.taps[k.radius + t + 1]);
}

TEST(GaussianKernel, TinySigmaIsNearDelta) {
  Kernel1D k = gaussian_kernel({1e-6, 0});
  EXPECT_EQ(k.radius, 1);
  EXPECT_NEAR(k.taps[1], 1.0, 1e-12);
  EXPECT_NEAR(k.taps[0] + k.taps[2], 0.0, 1e-12);
}

TEST(GaussianKernel, RejectsTruncatingRadius) {
  EXPECT_THROW(gaussian_kernel({1.3, 2}), std::invalid_argument);
  EXPECT_THROW(gaussian_kernel({0.0, 0}), std::invalid_argument);
}

TEST(Convolve, MatchesBruteForceOracle) {
  Image img = random_image(9, 7, 2, 11);
  for (double sigma : {0.8, 1.3}) {
    Kernel1D k = gaussian_kernel({sigma, 0});
    Image fast = convolve(img, k);
    Image slow = brute_convolve(img, k);
    for (std::size_t i = 0; i < fast.samples().size(); ++i)
      EXPECT_NEAR(fast.samples()[i], slow.samples()[i], 1e-12);
  }
  Kernel1D box = box_kernel(5);
  Image fast = convolve(img, box);
  Image slow = brute_convolve(img, box);
  for (std::size_t i = 0; i < fast.samples().size(); ++i)
    EXPECT_NEAR(fast.samples()[i], slow.samples()[i], 1e-12);
}

TEST(Convolve, PreservesConstants) {
  Image img(12, 10, 1, 42.5);
  Image out = convolve(img, gaussian_kernel({1.7, 0}));
  for (double v : out.samples()) EXPECT_NEAR(v, 42.5, 1e-12);
}

TEST(Convolve, IsLinear) {
  Image x = random_image(8, 8, 1, 1);
  Image y = random_image(8, 8, 1, 2);
  Kernel1D k = gaussian_kernel({1.3, 0});
  Image mix(8, 8, 1);
  for (std::size_t i = 0; i < mix.samples().size(); ++i)
    mix.samples()[i] = 2.0 * x.samples()[i] - 0.5 * y.samples()[i];
  Image lhs = convolve(mix, k);
  Image cx = convolve(x, k), cy = convolve(y, k);
  for (std::size_t i = 0; i < lhs.samples().size(); ++i)
    EXPECT_NEAR(lhs.samples()[i], 2.0 * cx.samples()[i] - 0.5 * cy.samples()[i], 1e-10);
}

TEST(Decimate, KeepsThePhaseLattice) {
  Image img = random_image(8, 8, 1, 3);
  Image d0 = decimate(img, {4, 0, 0});
  ASSERT_EQ(d0.width(), 2);
  ASSERT_EQ(d0.height(), 2);
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 2; ++c) EXPECT_EQ(d0.at(r, c), img.at(4 * r, 4 * c));
  Image d1 = decimate(img, {4, 1, 2});
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 2; ++c) EXPECT_EQ(d1.at(r, c), img.at(4 * r + 1, 4 * c + 2));
  EXPECT_THROW(decimate(random_image(9, 8, 1, 4), {4, 0, 0}), std::invalid_argument);
}

TEST(ReplicateUpsample, InvertsDecimateForEveryPhase) {
  Image low = random_image(3, 2, 2, 5);
  Image up = replicate_upsample(low, 4);
  ASSERT_EQ(up.width(), 12);
  ASSERT_EQ(up.height(), 8);
  for (int pr = 0; pr < 4; ++pr)
    for (int pc = 0; pc < 4; ++pc) {
      Image back = decimate(up, {4, pr, pc});
      for (std::size_t i = 0; i < low.samples().size(); ++i)
        EXPECT_EQ(back.samples()[i], low.samples()[i]);
    }
}

TEST(ZeroFillUpsample, IsTheExactAdjointOfDecimate) {
  SamplingSpec spec{4, 1, 3};
  Image x = random_image(8, 8, 1, 6);
  Image y = random_image(2, 2, 1, 7);
  EXPECT_DOUBLE_EQ(dot(decimate(x, spec), y), dot(x, zero_fill_upsample(y, spec)));
}

TEST(BicubicUpsample, InterpolatesTheSourceNodesExactly) {
  Image img = random_image(6, 6, 1, 8);
  Image up = bicubic_upsample(img, 4);
  ASSERT_EQ(up.width(), 24);
  for (int r = 0; r < 6; ++r)
    for (int c = 0; c < 6; ++c) EXPECT_EQ(up.at(4 * r, 4 * c), img.at(r, c));
}

TEST(BicubicUpsample, ReproducesConstants) {
  Image img(5, 4, 1, 77.25);
  Image up = bicubic_upsample(img, 4);
  for (double v : up.samples()) EXPECT_NEAR(v, 77.25, 1e-10);
}

// Degree one polynomials must come out exact everywhere, border strips
// included.
TEST(BicubicUpsample, ReproducesLinearRamps) {
  for (int s : {2, 4}) {
    Image img(7, 6, 1);
    for (int r = 0; r < 6; ++r)
      for (int c = 0; c < 7; ++c) img.at(r, c) = 3.0 + 2.0 * c - 0.5 * r;
    Image up = bicubic_upsample(img, s);
    for (int r = 0; r < up.height(); ++r)
      for (int c = 0; c < up.width(); ++c) {
        double expect = 3.0 + 2.0 * (static_cast<double>(c) / s) - 0.5 * (static_cast<double>(r) / s);
        EXPECT_NEAR(up.at(r, c), expect, 1e-10) << "at " << r << "," << c;
      }
  }
}

TEST(BicubicTranslate, ZeroShiftIsIdentity) {
  Image img = random_image(9, 9, 2, 9);
  Image out = bicubic_translate(img, 0.0, 0.0);
  for (std::size_t i = 0; i < img.samples().size(); ++i)
    EXPECT_EQ(out.samples()[i], img.samples()[i]);
}

TEST(BicubicTranslate, IntegerShiftEqualsIndexShift) {
  Image img = random_image(10, 9, 1, 10);
  Image out = bicubic_translate(img, 1.0, -2.0);
  // content moved right by 1 and up by 2: out(r, c) = in(r + 2, c - 1)
  for (int r = 0; r < 7; ++r)
    for (int c = 1; c < 10; ++c) EXPECT_NEAR(out.at(r, c), img.at(r + 2, c - 1), 1e-12);
}

// Round trip accuracy is a statement about resolvable content, so the probe
// is smooth; white noise is not recoverable by any interpolator.
TEST(BicubicTranslate, HalfPixelRoundTripIsCloseOnTheInterior) {
  Image img(24, 24, 1);
  for (int r = 0; r < 24; ++r)
    for (int c = 0; c < 24; ++c)
      img.at(r, c) = 128.0 + 60.0 * std::sin(2.0 * M_PI * c / 16.0) * std::cos(2.0 * M_PI * r / 12.0) +
                     1.5 * c - 0.8 * r;
  Image forth = bicubic_translate(img, 0.5, 0.0);
  Image back = bicubic_translate(forth, -0.5, 0.0);
  double worst = 0.0;
  for (int r = 4; r < 20; ++r)
    for (int c = 4; c < 20; ++c) worst = std::max(worst, std::fabs(back.at(r, c) - img.at(r, c)));
  EXPECT_LT(worst, 0.02 * 255.0);
}

TEST(BicubicTranslate, RejectsOversizedShifts) {
  Image img = random_image(8, 8, 1, 13);
  EXPECT_THROW(bicubic_translate(img, 2.0, 0.0), std::invalid_argument);
}

TEST(BlurDownsample, IsConvolveThenDecimate) {
  Image img = random_image(12, 8, 2, 14);
  BlurSpec blur{1.3, 0};
  SamplingSpec spec{4, 0, 0};
  Image a = blur_downsample(img, blur, spec);
  Image b = decimate(convolve(img, gaussian_kernel(blur)), spec);
  for (std::size_t i = 0; i < a.samples().size(); ++i)
    EXPECT_EQ(a.samples()[i], b.samples()[i]);
}

TEST(ConvolveAdjoint, InnerProductIdentity) {
  Kernel1D k = gaussian_kernel({1.3, 0});
  for (unsigned seed = 0; seed < 5; ++seed) {
    Image x = random_image(11, 9, 1, 100 + seed, -100.0, 100.0);
    Image y = random_image(11, 9, 1, 200 + seed, -100.0, 100.0);
    double lhs = dot(convolve(x, k), y);
    double rhs = dot(x, convolve_adjoint(y, k));
    EXPECT_NEAR(lhs, rhs, 1e-10 * std::max(1.0, std::fabs(lhs)));
  }
}

// The pair actually used by the solver gradient.
TEST(AdjointUpsampleBlur, MatchesBlurDownsampleInnerProducts) {
  for (unsigned seed = 0; seed < 20; ++seed) {
    BlurSpec blur{seed % 2 ? 1.3 : 1.7, 0};
    SamplingSpec spec{4, static_cast<int>(seed % 4), static_cast<int>((seed / 4) % 4)};
    Image x = random_image(16, 16, 1, 300 + seed, -50.0, 200.0);
    Image y = random_image(4, 4, 1, 400 + seed, -50.0, 200.0);
    double lhs = dot(blur_downsample(x, blur, spec), y);
    double rhs = dot(x, adjoint_upsample_blur(y, blur, spec));
    double rel = std::fabs(lhs - rhs) / std::max(1e-30, std::fabs(lhs));
    EXPECT_LT(rel, 1e-10);
  }
}
