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

#pragma once

#include "mwdepth/core.hpp"

#include <algorithm>
#include <cmath>

namespace mwdepth {

struct DepthMetrics {
  double rms = 0.0;
  double absrel = 0.0;
  double log10 = 0.0;
  double delta1 = 0.0, delta2 = 0.0, delta3 = 0.0;
};

struct NormalMetrics {
  double mean_deg = 0.0;
  double within_11_25 = 0.0;
  double within_22_5 = 0.0;
  double within_30 = 0.0;
};

namespace detail {

// lower median (element at index (n-1)/2); an element rather than an
// average so that global rescaling commutes with it exactly
inline double lower_median(std::vector<double> v) {
  std::size_t mid = (v.size() - 1) / 2;
  std::nth_element(v.begin(), v.begin() + mid, v.end());
  return v[mid];
}

}  // namespace detail

// Depth error metrics over the shared valid mask. Optional median scaling
// (pred <- pred * median(gt)/median(pred)) removes the global scale; both
// fields are then capped at `cap` meters.
inline DepthMetrics depth_metrics(const DepthMap& pred, const DepthMap& gt,
                                  double cap = 10.0, bool median_scale = false) {
  if (!pred.values.same_shape(gt.values))
    throw InputError("depth_metrics: dimension mismatch");
  if (!(cap > 0.0)) throw InputError("depth_metrics: cap must be positive");

  std::vector<double> ps, gs;
  for (std::size_t i = 0; i < pred.values.size(); ++i) {
    if (!pred.valid[i] || !gt.valid[i]) continue;
    ps.push_back(pred.values[i]);
    gs.push_back(gt.values[i]);
  }
  if (ps.empty()) throw InputError("depth_metrics: empty shared valid mask");

  if (median_scale) {
    double scale = detail::lower_median(gs) / detail::lower_median(ps);
    for (double& p : ps) p *= scale;
  }

  DepthMetrics m;
  std::size_t n = ps.size();
  for (std::size_t i = 0; i < n; ++i) {
    double p = std::min(ps[i], cap);
    double g = std::min(gs[i], cap);
    double diff = p - g;
    m.rms += diff * diff;
    m.absrel += std::abs(diff) / g;
    m.log10 += std::abs(std::log10(p) - std::log10(g));
    double ratio = std::max(p / g, g / p);
    m.delta1 += (ratio < 1.25);
    m.delta2 += (ratio < 1.25 * 1.25);
    m.delta3 += (ratio < 1.25 * 1.25 * 1.25);
  }
  m.rms = std::sqrt(m.rms / n);
  m.absrel /= n;
  m.log10 /= n;
  m.delta1 /= n;
  m.delta2 /= n;
  m.delta3 /= n;
  return m;
}

// Angular normal error over the shared valid mask: mean in degrees and
// fractions within 11.25, 22.5 and 30 degrees.
inline NormalMetrics normal_metrics(const NormalMap& pred, const NormalMap& gt) {
  if (!pred.normals.same_shape(gt.normals))
    throw InputError("normal_metrics: dimension mismatch");
  NormalMetrics m;
  std::size_t n = 0;
  for (std::size_t i = 0; i < pred.normals.size(); ++i) {
    if (!pred.valid[i] || !gt.valid[i]) continue;
    double c = std::clamp(pred.normals[i].dot(gt.normals[i]), -1.0, 1.0);
    double deg = std::acos(c) * 180.0 / M_PI;
    m.mean_deg += deg;
    m.within_11_25 += (deg <= 11.25);
    m.within_22_5 += (deg <= 22.5);
    m.within_30 += (deg <= 30.0);
    ++n;
  }
  if (n == 0) throw InputError("normal_metrics: empty shared valid mask");
  m.mean_deg /= n;
  m.within_11_25 /= n;
  m.within_22_5 /= n;
  m.within_30 /= n;
  return m;
}

}  // namespace mwdepth
