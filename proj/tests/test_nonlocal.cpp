#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "pansharp/image.hpp"
#include "pansharp/nonlocal.hpp"

using namespace pansharp;

namespace {

Image random_image(int w, int h, unsigned seed, double lo = 0.0, double hi = 255.0) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> dist(lo, hi);
  Image img(w, h, 1);
  for (double& v : img.samples()) v = dist(rng);
  return img;
}

// Box-smoothed random pan, so patch distances stay within the range where
// the default bandwidth still produces representable exponentials.
Image smooth_random_pan(int w, int h, unsigned seed) {
  Image img = random_image(w, h, seed, 100.0, 160.0);
  Image out(w, h, 1);
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c) {
      double acc = 0.0;
      for (int dr = -1; dr <= 1; ++dr)
        for (int dc = -1; dc <= 1; ++dc)
          acc += img.at(mirror_index(r + dr, h), mirror_index(c + dc, w));
      out.at(r, c) = acc / 9.0;
    }
  return out;
}

int fold(int i, int n) {
  if (n == 1) return 0;
  while (i < 0 || i >= n) {
    if (i < 0) i = -i;
    if (i >= n) i = 2 * (n - 1) - i;
  }
  return i;
}

// All-pairs oracle: literal translation of the weight definition, one flat
// loop per pixel pair, no padded buffers or incremental tricks. Implements
// both self-weight rules and the all-underflowed fallback.
std::vector<std::vector<double>> brute_weights(const Image& pan, const NonlocalConfig& cfg) {
  int w = pan.width(), h = pan.height();
  int R = cfg.search_radius, P = cfg.patch_radius;
  int win = 2 * R + 1;
  int center = (win * win) / 2;
  auto at = [&](int r, int c) { return pan.at(fold(r, h), fold(c, w)); };
  std::vector<std::vector<double>> rows(pan.pixels());
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c) {
      std::vector<double> row(static_cast<std::size_t>(win) * win, 0.0);
      double max_other = 0.0;
      for (int orow = -R; orow <= R; ++orow)
        for (int ocol = -R; ocol <= R; ++ocol) {
          if (orow == 0 && ocol == 0) continue;
          double dist = 0.0;
          for (int tr = -P; tr <= P; ++tr)
            for (int tc = -P; tc <= P; ++tc) {
              double d = at(r + tr, c + tc) - at(r + orow + tr, c + ocol + tc);
              dist += d * d;
            }
          double val = std::exp(-dist / (cfg.h * cfg.h));
          row[(orow + R) * win + (ocol + R)] = val;
          max_other = std::max(max_other, val);
        }
      if (cfg.self_weight_after_normalization) {
        row[center] = 1.0;
        double sum = 0.0;
        for (double v : row) sum += v;
        for (double& v : row) v /= sum;
        if (max_other > 0.0) {
          double m = 0.0;
          for (std::size_t i = 0; i < row.size(); ++i)
            if (i != static_cast<std::size_t>(center)) m = std::max(m, row[i]);
          row[center] = m;
        }
      } else {
        row[center] = max_other > 0.0 ? max_other : 1.0;
        double sum = 0.0;
        for (double v : row) sum += v;
        for (double& v : row) v /= sum;
      }
      rows[static_cast<std::size_t>(r) * w + c] = row;
    }
  return rows;
}

void expect_matches_oracle(const Image& pan, const NonlocalConfig& cfg, double tol) {
  WeightField field = compute_weights(pan, cfg);
  std::vector<std::vector<double>> oracle = brute_weights(pan, cfg);
  ASSERT_EQ(field.window_area(), static_cast<int>(oracle[0].size()));
  for (std::size_t p = 0; p < pan.pixels(); ++p)
    for (int i = 0; i < field.window_area(); ++i)
      ASSERT_NEAR(field.row(p)[i], oracle[p][i], tol) << "pixel " << p << " slot " << i;
}

}  // namespace

TEST(Weights, MatchBruteForceAtDefaultParameters) {
  expect_matches_oracle(smooth_random_pan(12, 12, 21), NonlocalConfig{}, 1e-12);
}

TEST(Weights, MatchBruteForceAtModerateBandwidth) {
  // h large enough that every exponential is O(1); exercises full windows
  // rather than the near-delta rows of the default bandwidth.
  expect_matches_oracle(random_image(11, 9, 31), {60.0, 3, 1, false}, 1e-12);
}

TEST(Weights, MatchBruteForceWithVariantSelfRule) {
  expect_matches_oracle(random_image(10, 10, 32), {60.0, 2, 1, true}, 1e-12);
}

TEST(Weights, MatchBruteForceWithSinglePixelPatches) {
  expect_matches_oracle(random_image(8, 7, 33), {45.0, 2, 0, false}, 1e-12);
}

TEST(Weights, RowsSumToOne) {
  Image pan = random_image(12, 12, 22);
  WeightField field = compute_weights(pan, {1.25, 3, 1, false});
  for (std::size_t p = 0; p < pan.pixels(); ++p) {
    double sum = 0.0;
    for (int i = 0; i < field.window_area(); ++i) {
      EXPECT_GE(field.row(p)[i], 0.0);
      sum += field.row(p)[i];
    }
    EXPECT_NEAR(sum, 1.0, 1e-10);
  }
}

TEST(Weights, AllUnderflowedWindowDegeneratesToDelta) {
  // Contrast so extreme at the default bandwidth that every off-center
  // exponential underflows: the window must collapse to a central delta,
  // never to NaN. A steep ramp guarantees every pair of distinct window
  // patches differs by at least 1000 in some pixel (a checkerboard would
  // not: its period-2 structure repeats patches exactly).
  Image pan(9, 9, 1, 0.0);
  for (int r = 0; r < 9; ++r)
    for (int c = 0; c < 9; ++c) pan.at(r, c) = 1000.0 * (r * 9 + c);
  WeightField field = compute_weights(pan, {1.25, 3, 1, false});
  int center = field.window_area() / 2;
  for (std::size_t p = 0; p < pan.pixels(); ++p) {
    for (int i = 0; i < field.window_area(); ++i) {
      ASSERT_FALSE(std::isnan(field.row(p)[i]));
      if (i != center) ASSERT_EQ(field.row(p)[i], 0.0);
    }
    ASSERT_EQ(field.row(p)[center], 1.0);
  }
}

// A constant pan gives zero patch distances everywhere, so every window
// entry including those of border pixels is 1/(2R+1)^2.
TEST(Weights, ConstantPanGivesUniformWindows) {
  Image pan(9, 8, 1, 113.0);
  WeightField field = compute_weights(pan, {1.25, 3, 1, false});
  double expect = 1.0 / 49.0;
  for (std::size_t p = 0; p < pan.pixels(); ++p)
    for (int i = 0; i < field.window_area(); ++i) ASSERT_NEAR(field.row(p)[i], expect, 1e-12);
}

TEST(Weights, SelfEntryIsTheWindowMaximum) {
  Image pan = smooth_random_pan(10, 10, 23);
  WeightField field = compute_weights(pan, {1.25, 3, 1, false});
  int center = field.window_area() / 2;
  for (std::size_t p = 0; p < pan.pixels(); ++p)
    for (int i = 0; i < field.window_area(); ++i)
      EXPECT_LE(field.row(p)[i], field.row(p)[center] + 1e-15);
}

TEST(Weights, DiscountNeighborsResemblingABrightOutlier) {
  Image pan(11, 11, 1, 60.0);
  pan.at(5, 5) = 250.0;
  WeightField field = compute_weights(pan, {10.0, 3, 1, false});
  // From (5, 2): the offset landing at (5, 4), whose patch touches the
  // outlier, must carry less weight than the mirror offset landing on
  // plain background at (5, 0).
  const double* row = field.row(5 * 11 + 2);
  int win = 7;
  double towards = row[(0 + 3) * win + (2 + 3)];
  double away = row[(0 + 3) * win + (-2 + 3)];
  EXPECT_LT(towards, away);
}

TEST(Weights, InvariantUnderJointIntensityAndBandwidthScaling) {
  Image pan = smooth_random_pan(9, 9, 25);
  double c = 3.7;
  Image scaled = pan;
  for (double& v : scaled.samples()) v *= c;
  WeightField a = compute_weights(pan, {40.0, 2, 1, false});
  WeightField b = compute_weights(scaled, {40.0 * c, 2, 1, false});
  for (std::size_t p = 0; p < pan.pixels(); ++p)
    for (int i = 0; i < a.window_area(); ++i) ASSERT_NEAR(a.row(p)[i], b.row(p)[i], 1e-12);
}

TEST(NonlocalOperator, MatchesDenseSymmetrizedLaplacian) {
  Image pan = smooth_random_pan(8, 8, 26);
  NonlocalConfig cfg{30.0, 2, 1, false};
  WeightField field = compute_weights(pan, cfg);
  Image u = random_image(8, 8, 27, -50.0, 50.0);
  int w = 8, h = 8, R = cfg.search_radius, win = 2 * R + 1;

  // Dense matrix W[p][q] with window entries folded onto real pixels.
  std::size_t n = pan.pixels();
  std::vector<std::vector<double>> W(n, std::vector<double>(n, 0.0));
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c)
      for (int orow = -R; orow <= R; ++orow)
        for (int ocol = -R; ocol <= R; ++ocol) {
          std::size_t p = static_cast<std::size_t>(r) * w + c;
          std::size_t q = static_cast<std::size_t>(fold(r + orow, h)) * w + fold(c + ocol, w);
          W[p][q] += field.row(p)[(orow + R) * win + (ocol + R)];
        }
  Image expect(8, 8, 1, 0.0);
  for (std::size_t p = 0; p < n; ++p) {
    double acc = 0.0;
    for (std::size_t q = 0; q < n; ++q)
      acc += (u.samples()[p] - u.samples()[q]) * (W[p][q] + W[q][p]);
    expect.samples()[p] = acc;
  }

  Image got = apply_nonlocal_operator(field, u);
  for (std::size_t p = 0; p < n; ++p) EXPECT_NEAR(got.samples()[p], expect.samples()[p], 1e-10);
}

TEST(NonlocalOperator, IsTheGradientOfTheEnergy) {
  Image pan = smooth_random_pan(7, 7, 28);
  WeightField field = compute_weights(pan, {25.0, 2, 1, false});
  Image u = random_image(7, 7, 29, 0.0, 100.0);
  Image g = apply_nonlocal_operator(field, u);
  double eps = 1e-5;
  for (std::size_t i = 0; i < u.pixels(); ++i) {
    Image up = u, dn = u;
    up.samples()[i] += eps;
    dn.samples()[i] -= eps;
    double fd = (nonlocal_energy(field, up) - nonlocal_energy(field, dn)) / (2.0 * eps);
    EXPECT_NEAR(g.samples()[i], fd, 1e-6 * std::max(1.0, std::fabs(fd)));
  }
}

TEST(NonlocalOperator, VanishesOnConstants) {
  Image pan = smooth_random_pan(9, 9, 30);
  WeightField field = compute_weights(pan, {1.25, 3, 1, false});
  Image u(9, 9, 1, 42.0);
  EXPECT_NEAR(nonlocal_energy(field, u), 0.0, 1e-12);
  Image g = apply_nonlocal_operator(field, u);
  for (double v : g.samples()) EXPECT_NEAR(v, 0.0, 1e-12);
}

// 2x1 image, radius 1 window, single pixel patches: small enough to carry
// through by hand. All window positions fold onto the two real pixels; six
// offsets see the other pixel (raw weight e = exp(-(a-b)^2/h^2)) and two
// fold back onto the pixel itself (raw weight 1).
TEST(NonlocalEnergy, MatchesHandComputationOnTwoPixels) {
  Image pan(2, 1, 1);
  double a = 10.0, b = 14.0, hh = 5.0;
  pan.at(0, 0) = a;
  pan.at(0, 1) = b;
  WeightField field = compute_weights(pan, {hh, 1, 0, false});

  double e = std::exp(-(a - b) * (a - b) / (hh * hh));
  // Center self = max(1, e) = 1, so the row sums to 3 + 6e before
  // normalization.
  double sum = 3.0 + 6.0 * e;
  double ua = 3.0, ub = 7.0;
  Image u(2, 1, 1);
  u.at(0, 0) = ua;
  u.at(0, 1) = ub;
  // Each pixel contributes (1/2) * 6 * (e/sum) * (ua-ub)^2.
  double expect = 2.0 * 0.5 * 6.0 * (e / sum) * (ua - ub) * (ua - ub);
  EXPECT_NEAR(nonlocal_energy(field, u), expect, 1e-12);
}
