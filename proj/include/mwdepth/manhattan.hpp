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

#include "mwdepth/geometry.hpp"

#include <algorithm>

namespace mwdepth {

// Per-pixel classification of normals against the six signed dominant
// directions. aligned is exactly one of {+-d1, +-d2, +-d3}; smax is the
// winning cosine similarity.
struct AlignmentResult {
  Grid<Vec3> aligned;
  Grid<double> smax;
  Mask valid;

  int width() const { return aligned.width(); }
  int height() const { return aligned.height(); }
};

// Linear growth of the Manhattan-region threshold over training epochs.
struct ThresholdSchedule {
  double alpha = 1.633e-3;
  double beta = 0.9;
  double gamma_max = 0.9999;

  void check() const {
    if (!(beta > 0.0 && beta <= gamma_max && gamma_max < 1.0))
      throw InputError("ThresholdSchedule: need 0 < beta <= gamma_max < 1");
    if (alpha < 0.0) throw InputError("ThresholdSchedule: alpha must be >= 0");
  }
};

inline double adaptive_threshold(int epoch, const ThresholdSchedule& sched = {}) {
  if (epoch < 0) throw InputError("adaptive_threshold: negative epoch");
  return std::min(sched.alpha * epoch + sched.beta, sched.gamma_max);
}

// Pick, per pixel, the signed dominant direction with the best cosine
// similarity. Ties resolve to the lowest candidate index
// (d1, -d1, d2, -d2, d3, -d3).
inline AlignmentResult align_normals(const NormalMap& normals,
                                     const DominantDirections& dirs) {
  AlignmentResult out;
  const int w = normals.width(), h = normals.height();
  out.aligned = Grid<Vec3>(w, h, Vec3::Zero());
  out.smax = Grid<double>(w, h, 0.0);
  out.valid = normals.valid;
  const auto cands = dirs.candidates();
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!normals.valid(x, y)) continue;
      const Vec3& n = normals.normals(x, y);
      double best = n.dot(cands[0]);
      int best_i = 0;
      for (int i = 1; i < 6; ++i) {
        double s = n.dot(cands[i]);
        if (s > best) {
          best = s;
          best_i = i;
        }
      }
      out.aligned(x, y) = cands[best_i];
      out.smax(x, y) = best;
    }
  }
  return out;
}

// Manhattan region mask: valid pixels whose best similarity reaches gamma.
inline Mask manhattan_mask(const AlignmentResult& align, double gamma) {
  if (!(gamma > 0.0 && gamma < 1.0))
    throw InputError("manhattan_mask: gamma must be in (0, 1)");
  Mask mask(align.width(), align.height(), 0);
  for (std::size_t i = 0; i < mask.size(); ++i)
    mask[i] = (align.valid[i] && align.smax[i] >= gamma) ? 1 : 0;
  return mask;
}

// Manhattan normal loss
//   L = 1/N sum_p MM_p MP_p (1 - n_p . a_p),
// N counting pixels with both masks set. The aligned targets a_p are held
// constant; the gradient flows into depth through the point-to-normal
// layer. Recomputes normals from the depth argument so the value stays a
// pure function of depth for a fixed set of targets.
inline LossTerm manhattan_normal_loss(const DepthMap& depth,
                                      const CameraIntrinsics& k,
                                      const Grid<Vec3>& aligned_targets,
                                      const Mask& manhattan,
                                      const Mask& planar, bool want_grad) {
  const int w = depth.width(), h = depth.height();
  if (!manhattan.same_shape(w, h) || !planar.same_shape(w, h) ||
      !aligned_targets.same_shape(w, h))
    throw InputError("manhattan_normal_loss: mask dimension mismatch");

  PointMap pts = backproject(depth, k);
  NormalMap nm = compute_normals(pts);

  std::size_t count = 0;
  for (std::size_t i = 0; i < manhattan.size(); ++i)
    count += (manhattan[i] && planar[i]);

  LossTerm out;
  if (want_grad) out.grad = Grid<double>(w, h, 0.0);
  if (count == 0) return out;

  double sum = 0.0;
  Grid<Vec3> grad_n;
  if (want_grad) grad_n = Grid<Vec3>(w, h, Vec3::Zero());
  const double inv_n = 1.0 / static_cast<double>(count);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!manhattan(x, y) || !planar(x, y) || !nm.valid(x, y)) continue;
      const Vec3& a = aligned_targets(x, y);
      sum += 1.0 - nm.normals(x, y).dot(a);
      if (want_grad) grad_n(x, y) = -inv_n * a;
    }
  }
  out.value = sum * inv_n;
  if (want_grad) out.grad = normal_grad_to_depth(pts, k, nm, grad_n);
  return out;
}

}  // namespace mwdepth
