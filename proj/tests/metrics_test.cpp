// Copyright 2026 the mwdepth authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "test_support.hpp"

#include <gtest/gtest.h>

namespace mwdepth {
namespace {

using mwtest::random_smooth_depth;

TEST(DepthMetrics, PerfectPrediction) {
  DepthMap gt = random_smooth_depth(16, 16, 2.0, 0.2, 2);
  DepthMetrics m = depth_metrics(gt, gt, 10.0, false);
  EXPECT_EQ(m.rms, 0.0);
  EXPECT_EQ(m.absrel, 0.0);
  EXPECT_EQ(m.log10, 0.0);
  EXPECT_EQ(m.delta1, 1.0);
  EXPECT_EQ(m.delta2, 1.0);
  EXPECT_EQ(m.delta3, 1.0);
}

TEST(DepthMetrics, MedianScalingCancelsGlobalScale) {
  DepthMap gt = random_smooth_depth(16, 16, 2.0, 0.2, 3);
  DepthMap pred = gt;
  for (std::size_t i = 0; i < pred.values.size(); ++i) pred.values[i] *= 2.0;
  DepthMetrics m = depth_metrics(pred, gt, 10.0, true);
  EXPECT_EQ(m.rms, 0.0);
  EXPECT_EQ(m.absrel, 0.0);
  EXPECT_EQ(m.delta1, 1.0);
}

TEST(DepthMetrics, ConstantRatioWithoutScaling) {
  DepthMap gt = random_smooth_depth(16, 16, 2.0, 0.1, 4);
  DepthMap pred = gt;
  for (std::size_t i = 0; i < pred.values.size(); ++i) pred.values[i] *= 1.3;
  DepthMetrics m = depth_metrics(pred, gt, 100.0, false);
  EXPECT_EQ(m.delta1, 0.0);  // 1.3 > 1.25
  EXPECT_EQ(m.delta2, 1.0);
  EXPECT_EQ(m.delta3, 1.0);
  EXPECT_NEAR(m.absrel, 0.3, 1e-12);
  EXPECT_NEAR(m.log10, std::log10(1.3), 1e-12);
}

TEST(DepthMetrics, CapAppliesToBothFields) {
  DepthMap gt(2, 1, 0.0, true);
  gt.values(0, 0) = 12.0;
  gt.values(1, 0) = 5.0;
  DepthMap pred(2, 1, 0.0, true);
  pred.values(0, 0) = 15.0;  // both capped to 10
  pred.values(1, 0) = 5.0;
  DepthMetrics m = depth_metrics(pred, gt, 10.0, false);
  EXPECT_EQ(m.rms, 0.0);
}

TEST(DepthMetrics, MatchesScalarLoopOracle) {
  Rng rng(17);
  DepthMap gt(16, 16, 0.0, true);
  DepthMap pred(16, 16, 0.0, true);
  for (std::size_t i = 0; i < gt.values.size(); ++i) {
    gt.values[i] = rng.uniform(0.5, 9.0);
    pred.values[i] = rng.uniform(0.5, 9.0);
  }
  gt.valid(3, 3) = 0;  // holes in the ground truth are excluded
  pred.valid(8, 2) = 0;
  const double cap = 8.0;
  DepthMetrics m = depth_metrics(pred, gt, cap, false);

  double rms = 0, absrel = 0, log10 = 0, d1 = 0, d2 = 0, d3 = 0;
  std::size_t n = 0;
  for (int y = 0; y < 16; ++y)
    for (int x = 0; x < 16; ++x) {
      if (!gt.valid(x, y) || !pred.valid(x, y)) continue;
      double g = std::min(gt.values(x, y), cap);
      double p = std::min(pred.values(x, y), cap);
      rms += (p - g) * (p - g);
      absrel += std::abs(p - g) / g;
      log10 += std::abs(std::log10(p) - std::log10(g));
      double r = std::max(p / g, g / p);
      d1 += r < 1.25;
      d2 += r < 1.5625;
      d3 += r < 1.953125;
      ++n;
    }
  EXPECT_NEAR(m.rms, std::sqrt(rms / n), 1e-9);
  EXPECT_NEAR(m.absrel, absrel / n, 1e-9);
  EXPECT_NEAR(m.log10, log10 / n, 1e-9);
  EXPECT_NEAR(m.delta1, d1 / n, 1e-12);
  EXPECT_NEAR(m.delta2, d2 / n, 1e-12);
  EXPECT_NEAR(m.delta3, d3 / n, 1e-12);
}

TEST(DepthMetrics, PermutationInvariance) {
  Rng rng(19);
  DepthMap gt(8, 8, 0.0, true), pred(8, 8, 0.0, true);
  for (std::size_t i = 0; i < gt.values.size(); ++i) {
    gt.values[i] = rng.uniform(1.0, 5.0);
    pred.values[i] = rng.uniform(1.0, 5.0);
  }
  DepthMetrics a = depth_metrics(pred, gt, 10.0, true);
  // reverse both fields simultaneously
  DepthMap gt2 = gt, pred2 = pred;
  std::reverse(gt2.values.data().begin(), gt2.values.data().end());
  std::reverse(pred2.values.data().begin(), pred2.values.data().end());
  DepthMetrics b = depth_metrics(pred2, gt2, 10.0, true);
  // up to summation order
  EXPECT_NEAR(a.rms, b.rms, 1e-12);
  EXPECT_NEAR(a.absrel, b.absrel, 1e-12);
  EXPECT_EQ(a.delta1, b.delta1);
}

TEST(DepthMetrics, MedianScalingExactInvarianceUnderPowerOfTwo) {
  Rng rng(23);
  DepthMap gt(16, 16, 0.0, true), pred(16, 16, 0.0, true);
  for (std::size_t i = 0; i < gt.values.size(); ++i) {
    gt.values[i] = rng.uniform(0.5, 8.0);
    pred.values[i] = rng.uniform(0.5, 8.0);
  }
  DepthMetrics base = depth_metrics(pred, gt, 10.0, true);
  for (double c : {2.0, 0.5, 4.0}) {
    DepthMap scaled = pred;
    for (std::size_t i = 0; i < scaled.values.size(); ++i) scaled.values[i] *= c;
    DepthMetrics m = depth_metrics(scaled, gt, 10.0, true);
    EXPECT_EQ(m.rms, base.rms) << c;
    EXPECT_EQ(m.absrel, base.absrel) << c;
    EXPECT_EQ(m.log10, base.log10) << c;
    EXPECT_EQ(m.delta1, base.delta1) << c;
  }
}

TEST(DepthMetrics, EmptyMaskIsAnError) {
  DepthMap gt(4, 4, 2.0, false);
  DepthMap pred(4, 4, 2.0, true);
  EXPECT_THROW(depth_metrics(pred, gt, 10.0, false), InputError);
}

// -- normals -------------------------------------------------------------------

NormalMap constant_normals(int w, int h, const Vec3& n) {
  NormalMap nm;
  nm.normals = Grid<Vec3>(w, h, n.normalized());
  nm.valid = Mask(w, h, 1);
  return nm;
}

TEST(NormalMetrics, PerfectPrediction) {
  NormalMap nm = constant_normals(8, 8, Vec3(0, 0, -1));
  NormalMetrics m = normal_metrics(nm, nm);
  EXPECT_EQ(m.mean_deg, 0.0);
  EXPECT_EQ(m.within_11_25, 1.0);
  EXPECT_EQ(m.within_22_5, 1.0);
  EXPECT_EQ(m.within_30, 1.0);
}

TEST(NormalMetrics, ConstantTwentyDegreeError) {
  double a = 20.0 * M_PI / 180.0;
  NormalMap gt = constant_normals(8, 8, Vec3(0, 0, 1));
  NormalMap pred = constant_normals(8, 8, Vec3(std::sin(a), 0, std::cos(a)));
  NormalMetrics m = normal_metrics(pred, gt);
  EXPECT_NEAR(m.mean_deg, 20.0, 1e-9);
  EXPECT_EQ(m.within_11_25, 0.0);
  EXPECT_EQ(m.within_22_5, 1.0);
  EXPECT_EQ(m.within_30, 1.0);
}

TEST(NormalMetrics, MatchesScalarLoopOracle) {
  Rng rng(29);
  NormalMap a, b;
  a.normals = Grid<Vec3>(16, 16, Vec3::Zero());
  b.normals = Grid<Vec3>(16, 16, Vec3::Zero());
  a.valid = Mask(16, 16, 1);
  b.valid = Mask(16, 16, 1);
  for (std::size_t i = 0; i < a.normals.size(); ++i) {
    a.normals[i] = Vec3(rng.normal(), rng.normal(), rng.normal()).normalized();
    b.normals[i] = Vec3(rng.normal(), rng.normal(), rng.normal()).normalized();
  }
  b.valid(5, 5) = 0;
  NormalMetrics m = normal_metrics(a, b);
  double mean = 0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < a.normals.size(); ++i) {
    if (!a.valid[i] || !b.valid[i]) continue;
    mean += std::acos(std::clamp(a.normals[i].dot(b.normals[i]), -1.0, 1.0)) * 180.0 /
            M_PI;
    ++n;
  }
  EXPECT_NEAR(m.mean_deg, mean / n, 1e-9);
  EXPECT_LE(m.within_11_25, m.within_22_5);
  EXPECT_LE(m.within_22_5, m.within_30);
}

TEST(NormalMetrics, Symmetric) {
  Rng rng(31);
  NormalMap a = constant_normals(8, 8, Vec3(1, 1, 1));
  NormalMap b = constant_normals(8, 8, Vec3(0.2, -1, 0.4));
  NormalMetrics ab = normal_metrics(a, b);
  NormalMetrics ba = normal_metrics(b, a);
  EXPECT_EQ(ab.mean_deg, ba.mean_deg);
  (void)rng;
}

}  // namespace
}  // namespace mwdepth
