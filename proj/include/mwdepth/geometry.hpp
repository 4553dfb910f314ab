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

#include "mwdepth/camera.hpp"
#include "mwdepth/core.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>

namespace mwdepth {

// 2D line segment in pixel coordinates.
struct LineSegment {
  Vec2 p0, p1;

  void check() const {
    if ((p1 - p0).norm() <= 0.0)
      throw InputError("LineSegment: endpoints coincide");
  }
};

// Three mutually orthogonal unit directions in the camera frame. Together
// with their negations they are the candidate normals of the major planes.
struct DominantDirections {
  std::array<Vec3, 3> dirs;

  std::array<Vec3, 6> candidates() const {
    return {dirs[0], -dirs[0], dirs[1], -dirs[1], dirs[2], -dirs[2]};
  }

  void check() const {
    for (int i = 0; i < 3; ++i) {
      if (std::abs(dirs[i].norm() - 1.0) > 1e-6)
        throw InputError("DominantDirections: direction not unit length");
      for (int j = i + 1; j < 3; ++j)
        if (std::abs(dirs[i].dot(dirs[j])) >= 1e-3)
          throw InputError("DominantDirections: directions not orthogonal");
    }
  }
};

// Lift each valid pixel to 3D: X = D (u-cx)/fx, D (v-cy)/fy, D.
inline PointMap backproject(const DepthMap& depth, const CameraIntrinsics& k) {
  if (!depth.values.same_shape(k.width, k.height))
    throw InputError("backproject: depth dimensions do not match intrinsics");
  PointMap out;
  out.points = Grid<Vec3>(depth.width(), depth.height(), Vec3::Zero());
  out.valid = depth.valid;
  for (int y = 0; y < depth.height(); ++y)
    for (int x = 0; x < depth.width(); ++x)
      if (depth.valid(x, y))
        out.points(x, y) = depth.values(x, y) * k.ray(x, y);
  return out;
}

namespace detail {

// Deterministic sign convention for an otherwise sign-ambiguous direction:
// prefer z >= 0, then x >= 0, then y >= 0.
inline Vec3 canonical_sign(const Vec3& d) {
  if (d.z() != 0.0) return d.z() > 0.0 ? d : Vec3(-d);
  if (d.x() != 0.0) return d.x() > 0.0 ? d : Vec3(-d);
  return d.y() >= 0.0 ? d : Vec3(-d);
}

}  // namespace detail

// Direction in the camera frame associated with a vanishing point,
// eta ~ K^-1 v for homogeneous v.
inline Vec3 vanishing_point_to_direction(const Vec3& v, const CameraIntrinsics& k) {
  Vec3 d((v.x() - k.cx * v.z()) / k.fx, (v.y() - k.cy * v.z()) / k.fy, v.z());
  double n = d.norm();
  if (!(n > 1e-12))
    throw DegenerateError("vanishing_point_to_direction: K^-1 v is numerically zero");
  return detail::canonical_sign(d / n);
}

namespace detail {

// Interpretation-plane normal of an image segment: the plane through the
// camera center and the 3D line has normal ~ K^T (p0 x p1).
inline Vec3 interpretation_normal(const LineSegment& s, const CameraIntrinsics& k) {
  Vec3 a(s.p0.x(), s.p0.y(), 1.0);
  Vec3 b(s.p1.x(), s.p1.y(), 1.0);
  Vec3 l = a.cross(b);
  Vec3 m = k.matrix().transpose() * l;
  double n = m.norm();
  if (!(n > 1e-12)) throw InputError("interpretation_normal: degenerate segment");
  return m / n;
}

struct FrameScore {
  int inliers = 0;
  std::array<int, 3> per_axis{0, 0, 0};
};

inline FrameScore score_frame(const std::vector<Vec3>& normals,
                              const std::array<Vec3, 3>& dirs, double sin_tol) {
  FrameScore sc;
  for (const Vec3& m : normals) {
    double best = std::abs(m.dot(dirs[0]));
    int best_k = 0;
    for (int kk = 1; kk < 3; ++kk) {
      double v = std::abs(m.dot(dirs[kk]));
      if (v < best) {
        best = v;
        best_k = kk;
      }
    }
    if (best <= sin_tol) {
      ++sc.inliers;
      ++sc.per_axis[best_k];
    }
  }
  return sc;
}

// Smallest-eigenvector direction of sum(m m^T) over the given normals.
inline Vec3 least_aligned_direction(const std::vector<Vec3>& normals,
                                    const std::vector<int>& subset,
                                    const Vec3& fallback) {
  if (subset.size() < 2) return fallback;
  Mat3 acc = Mat3::Zero();
  for (int i : subset) acc += normals[i] * normals[i].transpose();
  Eigen::SelfAdjointEigenSolver<Mat3> eig(acc);
  Vec3 d = eig.eigenvectors().col(0);
  if (d.dot(fallback) < 0.0) d = -d;
  return d;
}

}  // namespace detail

struct DominantDirectionsResult {
  DominantDirections directions;
  int inliers = 0;
};

// Recover the three dominant directions from structural line segments by
// consensus over line-pair hypotheses. Each pair of segments assumed to
// share a vanishing direction fixes one axis (cross product of their
// interpretation-plane normals); a second pair fixes the rest of the frame.
// The frame explaining the most segments wins and is polished by
// least-squares on its inlier set.
inline DominantDirectionsResult estimate_dominant_directions(
    const std::vector<LineSegment>& lines, const CameraIntrinsics& k,
    double angle_tol_deg = 2.0) {
  if (lines.size() < 4)
    throw DegenerateError("estimate_dominant_directions: need at least 4 lines");
  const double sin_tol = std::sin(angle_tol_deg * M_PI / 180.0);

  std::vector<Vec3> normals;
  normals.reserve(lines.size());
  for (const LineSegment& s : lines) {
    s.check();
    normals.push_back(detail::interpretation_normal(s, k));
  }

  // candidate axes from all segment pairs
  const int n = static_cast<int>(normals.size());
  std::vector<Vec3> pair_dirs;
  pair_dirs.reserve(static_cast<std::size_t>(n) * (n - 1) / 2);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      Vec3 d = normals[i].cross(normals[j]);
      double len = d.norm();
      if (len > 1e-9) pair_dirs.push_back(d / len);
    }
  if (pair_dirs.size() < 2)
    throw DegenerateError("estimate_dominant_directions: no valid line pairs");

  // consensus over pairs of candidate axes; deterministic stride when the
  // exhaustive search would be too large
  const std::size_t np = pair_dirs.size();
  const std::size_t total = np * (np - 1) / 2;
  const std::size_t budget = 500000;
  const std::size_t stride = std::max<std::size_t>(1, total / budget);

  detail::FrameScore best_score;
  std::array<Vec3, 3> best_frame;
  bool have_frame = false;
  std::size_t flat = 0;
  for (std::size_t a = 0; a < np; ++a) {
    for (std::size_t b = a + 1; b < np; ++b, ++flat) {
      if (stride > 1 && flat % stride != 0) continue;
      const Vec3& d1 = pair_dirs[a];
      Vec3 d2 = pair_dirs[b] - pair_dirs[b].dot(d1) * d1;
      double len = d2.norm();
      if (len < 0.1) continue;  // near-parallel axes fix no frame
      d2 /= len;
      std::array<Vec3, 3> frame{d1, d2, d1.cross(d2)};
      detail::FrameScore sc = detail::score_frame(normals, frame, sin_tol);
      if (!have_frame || sc.inliers > best_score.inliers) {
        best_score = sc;
        best_frame = frame;
        have_frame = true;
      }
    }
  }
  if (!have_frame || best_score.inliers < 4)
    throw DegenerateError("estimate_dominant_directions: no valid Manhattan frame");

  // polish: re-fit each axis to its assigned inliers, keep the frame orthonormal
  for (int round = 0; round < 3; ++round) {
    std::array<std::vector<int>, 3> assigned;
    for (int i = 0; i < n; ++i) {
      double best = 2.0;
      int best_k = -1;
      for (int kk = 0; kk < 3; ++kk) {
        double v = std::abs(normals[i].dot(best_frame[kk]));
        if (v < best) {
          best = v;
          best_k = kk;
        }
      }
      if (best <= sin_tol) assigned[best_k].push_back(i);
    }
    std::array<Vec3, 3> refined;
    for (int kk = 0; kk < 3; ++kk)
      refined[kk] =
          detail::least_aligned_direction(normals, assigned[kk], best_frame[kk]);
    // orthonormalize, most-supported axis first
    std::array<int, 3> order{0, 1, 2};
    std::sort(order.begin(), order.end(), [&](int lhs, int rhs) {
      return assigned[lhs].size() > assigned[rhs].size();
    });
    std::array<Vec3, 3> ortho;
    ortho[order[0]] = refined[order[0]].normalized();
    Vec3 second =
        refined[order[1]] - refined[order[1]].dot(ortho[order[0]]) * ortho[order[0]];
    if (second.norm() < 1e-9) break;
    ortho[order[1]] = second.normalized();
    Vec3 third = ortho[order[0]].cross(ortho[order[1]]);
    if (third.dot(refined[order[2]]) < 0.0) third = -third;
    ortho[order[2]] = third;
    best_frame = ortho;
  }

  detail::FrameScore final_score = detail::score_frame(normals, best_frame, sin_tol);
  if (final_score.inliers < 4)
    throw DegenerateError("estimate_dominant_directions: consensus below 4 lines");

  // order by per-axis support, canonical signs, right-handed third axis
  std::array<int, 3> order{0, 1, 2};
  std::sort(order.begin(), order.end(), [&](int lhs, int rhs) {
    return final_score.per_axis[lhs] > final_score.per_axis[rhs];
  });
  DominantDirectionsResult out;
  Vec3 d1 = detail::canonical_sign(best_frame[order[0]]);
  Vec3 d2 = detail::canonical_sign(best_frame[order[1]]);
  out.directions.dirs = {d1, d2, d1.cross(d2)};
  out.inliers = final_score.inliers;
  return out;
}

// Differentiable point-to-normal layer. For each interior pixel the
// unnormalized normal accumulates symmetric cross products at radii
// {1, 2, 3} (a 7x7 footprint):
//   m = sum_r (X(x, y+r) - X(x, y-r)) x (X(x+r, y) - X(x-r, y))
// and n = m/|m|, flipped to face the camera (n . X <= 0). A pixel is valid
// only if the whole footprint is valid and in bounds.
inline constexpr std::array<int, 3> kNormalRadii{1, 2, 3};

inline NormalMap compute_normals(const PointMap& pts) {
  const int w = pts.width(), h = pts.height();
  NormalMap out;
  out.normals = Grid<Vec3>(w, h, Vec3::Zero());
  out.valid = Mask(w, h, 0);
  const int r_max = kNormalRadii.back();
  for (int y = r_max; y < h - r_max; ++y) {
    for (int x = r_max; x < w - r_max; ++x) {
      if (!pts.valid(x, y)) continue;
      bool ok = true;
      for (int r : kNormalRadii)
        if (!pts.valid(x, y + r) || !pts.valid(x, y - r) || !pts.valid(x + r, y) ||
            !pts.valid(x - r, y)) {
          ok = false;
          break;
        }
      if (!ok) continue;
      Vec3 m = Vec3::Zero();
      for (int r : kNormalRadii) {
        Vec3 tv = pts.points(x, y + r) - pts.points(x, y - r);
        Vec3 sv = pts.points(x + r, y) - pts.points(x - r, y);
        m += tv.cross(sv);
      }
      double len = m.norm();
      if (!(len > 1e-30)) continue;
      Vec3 nrm = m / len;
      if (nrm.dot(pts.points(x, y)) > 0.0) nrm = -nrm;
      out.normals(x, y) = nrm;
      out.valid(x, y) = 1;
    }
  }
  return out;
}

// Chain rule of compute_normals: scatter a gradient w.r.t. the normals
// back onto the depth field. grad_n may be nonzero only where the normal
// map is valid.
inline Grid<double> normal_grad_to_depth(const PointMap& pts,
                                         const CameraIntrinsics& k,
                                         const NormalMap& normals,
                                         const Grid<Vec3>& grad_n) {
  const int w = pts.width(), h = pts.height();
  Grid<double> grad_d(w, h, 0.0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!normals.valid(x, y)) continue;
      const Vec3& g = grad_n(x, y);
      if (g.isZero(0.0)) continue;
      // recompute the unnormalized normal and the orientation flip
      Vec3 m = Vec3::Zero();
      std::array<Vec3, 3> tvs, svs;
      for (std::size_t ri = 0; ri < kNormalRadii.size(); ++ri) {
        int r = kNormalRadii[ri];
        tvs[ri] = pts.points(x, y + r) - pts.points(x, y - r);
        svs[ri] = pts.points(x + r, y) - pts.points(x - r, y);
        m += tvs[ri].cross(svs[ri]);
      }
      double len = m.norm();
      double sign = (m.dot(pts.points(x, y)) > 0.0) ? -1.0 : 1.0;
      const Vec3& n = normals.normals(x, y);
      Vec3 grad_m = sign * (g - n.dot(g) * n) / len;
      for (std::size_t ri = 0; ri < kNormalRadii.size(); ++ri) {
        int r = kNormalRadii[ri];
        Vec3 grad_t = svs[ri].cross(grad_m);  // d(t x s)/dt pulled back
        Vec3 grad_s = grad_m.cross(tvs[ri]);  // d(t x s)/ds pulled back
        grad_d(x, y + r) += k.ray(x, y + r).dot(grad_t);
        grad_d(x, y - r) -= k.ray(x, y - r).dot(grad_t);
        grad_d(x + r, y) += k.ray(x + r, y).dot(grad_s);
        grad_d(x - r, y) -= k.ray(x - r, y).dot(grad_s);
      }
    }
  }
  return grad_d;
}

}  // namespace mwdepth
