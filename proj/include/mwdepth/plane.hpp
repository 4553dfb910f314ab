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

#include "mwdepth/segmentation.hpp"

namespace mwdepth {

// Plane in theta-form: X^T theta = 1 for points on the plane, theta = -n/d.
struct PlaneParams {
  Vec3 theta = Vec3::Zero();
  int segment_id = 0;
  int inlier_count = 0;
};

struct CoplanarDepth {
  Grid<double> values;
  Mask mask;
  double d_min = 0.1;
  double d_max = 10.0;
};

// Least-squares plane through the given points: minimize |X^T theta - 1|^2
// via the 3x3 normal equations (X X^T) theta = X 1. Rank deficiency (which
// also covers planes through the origin and collinear sets) raises a
// degenerate-fit error; the caller drops the segment from supervision.
inline PlaneParams fit_plane(const std::vector<Vec3>& points,
                             double cond_threshold = 1e10) {
  if (points.size() < 3) throw DegenerateError("fit_plane: need at least 3 points");
  Mat3 a = Mat3::Zero();
  Vec3 b = Vec3::Zero();
  for (const Vec3& p : points) {
    a += p * p.transpose();
    b += p;
  }
  Eigen::SelfAdjointEigenSolver<Mat3> eig(a);
  double lo = eig.eigenvalues()(0), hi = eig.eigenvalues()(2);
  if (!(lo > 0.0) || hi / lo > cond_threshold)
    throw DegenerateError("fit_plane: rank-deficient point set");
  PlaneParams out;
  out.theta = eig.eigenvectors() *
              (eig.eigenvectors().transpose() * b).cwiseQuotient(eig.eigenvalues());
  out.inlier_count = static_cast<int>(points.size());
  if (!out.theta.allFinite() || !(out.theta.norm() > 0.0))
    throw DegenerateError("fit_plane: non-finite solution");
  return out;
}

// Depth resynthesized from a fitted plane: rho = theta^T K^-1 (u, v, 1),
// D = 1/rho clamped to [d_min, d_max]; rho <= 0 (plane behind the camera
// along this ray) maps to d_max.
inline CoplanarDepth coplanar_depth(const PlaneParams& plane,
                                    const CameraIntrinsics& k,
                                    const std::vector<std::int32_t>& pixels,
                                    int width, int height, double d_min = 0.1,
                                    double d_max = 10.0) {
  if (!plane.theta.allFinite())
    throw InputError("coplanar_depth: non-finite plane parameters");
  CoplanarDepth out;
  out.values = Grid<double>(width, height, 0.0);
  out.mask = Mask(width, height, 0);
  out.d_min = d_min;
  out.d_max = d_max;
  for (std::int32_t idx : pixels) {
    int x = out.values.index_x(idx), y = out.values.index_y(idx);
    double rho = plane.theta.dot(k.ray(x, y));
    double d = (rho > 0.0) ? std::clamp(1.0 / rho, d_min, d_max) : d_max;
    out.values[idx] = d;
    out.mask[idx] = 1;
  }
  return out;
}

// Fit every retained segment and assemble the co-planar depth over the
// union of successfully fitted segments. Degenerate segments are skipped.
struct PlaneSupervision {
  Grid<double> values;
  Mask mask;
  std::vector<PlaneParams> planes;  // one entry per fitted segment
};

inline PlaneSupervision fit_segment_planes(const SegmentationResult& seg,
                                           const PointMap& pts,
                                           const CameraIntrinsics& k,
                                           double d_min = 0.1, double d_max = 10.0) {
  const int w = pts.width(), h = pts.height();
  PlaneSupervision out;
  out.values = Grid<double>(w, h, 0.0);
  out.mask = Mask(w, h, 0);
  for (const auto& segment : seg.segments) {
    std::vector<Vec3> xs;
    xs.reserve(segment.pixels.size());
    for (std::int32_t idx : segment.pixels)
      if (pts.valid[idx]) xs.push_back(pts.points[idx]);
    PlaneParams plane;
    try {
      plane = fit_plane(xs);
    } catch (const DegenerateError&) {
      continue;
    }
    plane.segment_id = segment.id;
    out.planes.push_back(plane);
    CoplanarDepth cd = coplanar_depth(plane, k, segment.pixels, w, h, d_min, d_max);
    for (std::int32_t idx : segment.pixels) {
      out.values[idx] = cd.values[idx];
      out.mask[idx] = 1;
    }
  }
  return out;
}

// Co-planar loss L = 1/N sum_p MP_p |D_p - Dplane_p| with the plane depth
// held constant; gradient is sign(D - Dplane)/N (0 at exact equality).
inline LossTerm coplanar_loss(const DepthMap& depth, const Grid<double>& plane_depth,
                              const Mask& planar, bool want_grad) {
  const int w = depth.width(), h = depth.height();
  if (!plane_depth.same_shape(w, h) || !planar.same_shape(w, h))
    throw InputError("coplanar_loss: dimension mismatch");
  LossTerm out;
  if (want_grad) out.grad = Grid<double>(w, h, 0.0);
  std::size_t count = 0;
  for (std::size_t i = 0; i < planar.size(); ++i)
    count += (planar[i] && depth.valid[i]);
  if (count == 0) return out;
  const double inv_n = 1.0 / static_cast<double>(count);
  double sum = 0.0;
  for (std::size_t i = 0; i < planar.size(); ++i) {
    if (!planar[i] || !depth.valid[i]) continue;
    double r = depth.values[i] - plane_depth[i];
    sum += std::abs(r);
    if (want_grad && r != 0.0) out.grad[i] = (r > 0.0 ? inv_n : -inv_n);
  }
  out.value = sum * inv_n;
  return out;
}

}  // namespace mwdepth
