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

#include "mwdepth/mwdepth.hpp"

#include <cmath>
#include <map>
#include <set>
#include <vector>

namespace mwtest {

using namespace mwdepth;

inline CameraIntrinsics square_camera(int size, double focal) {
  CameraIntrinsics k;
  k.fx = k.fy = focal;
  k.cx = k.cy = size / 2.0;
  k.width = k.height = size;
  return k;
}

inline Mat3 rotation_xyz(double rx, double ry, double rz) {
  return (Eigen::AngleAxisd(rz, Vec3::UnitZ()) * Eigen::AngleAxisd(ry, Vec3::UnitY()) *
          Eigen::AngleAxisd(rx, Vec3::UnitX()))
      .toRotationMatrix();
}

inline Pose make_pose(const Mat3& rot_world_to_cam, const Vec3& camera_center) {
  Pose pose;
  pose.rotation = rot_world_to_cam;
  pose.translation = -(rot_world_to_cam * camera_center);
  return pose;
}

// Depth field d0 plus a smooth seeded perturbation, all pixels valid.
inline DepthMap random_smooth_depth(int w, int h, double base, double amplitude,
                                    std::uint64_t seed, double wavelength = 5.0) {
  Grid<double> noise = smooth_noise_field(w, h, wavelength, seed);
  DepthMap d(w, h, base, true);
  for (std::size_t i = 0; i < d.values.size(); ++i)
    d.values[i] = base * (1.0 + amplitude * noise[i]);
  return d;
}

// Relative L2 error between an analytic gradient and its finite-difference
// counterpart, restricted to the probed pixels.
inline double gradient_rel_error(const Grid<double>& analytic, const Grid<double>& fd,
                                 const std::vector<std::pair<int, int>>& pixels) {
  double num = 0.0, den = 0.0;
  for (auto [x, y] : pixels) {
    double d = analytic(x, y) - fd(x, y);
    num += d * d;
    den += fd(x, y) * fd(x, y);
  }
  if (den == 0.0) return num == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  return std::sqrt(num / den);
}

inline std::vector<std::pair<int, int>> all_pixels(int w, int h) {
  std::vector<std::pair<int, int>> out;
  out.reserve(static_cast<std::size_t>(w) * h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) out.emplace_back(x, y);
  return out;
}

// ---------------------------------------------------------------------------
// independent brute-force reference of the graph-merging predicate; plain
// label vectors and linear scans instead of union-find

struct BruteForceSegmenter {
  std::vector<int> labels;  // component id per vertex
  std::map<int, double> internal;
  std::map<int, int> area;

  explicit BruteForceSegmenter(std::size_t n) : labels(n) {
    for (std::size_t i = 0; i < n; ++i) {
      labels[i] = static_cast<int>(i);
      internal[static_cast<int>(i)] = 0.0;
      area[static_cast<int>(i)] = 1;
    }
  }

  void run(std::vector<EdgeGraph::Edge> edges, double k) {
    std::sort(edges.begin(), edges.end(), [](const auto& a, const auto& b) {
      if (a.w != b.w) return a.w < b.w;
      if (a.a != b.a) return a.a < b.a;
      return a.b < b.b;
    });
    for (const auto& e : edges) {
      int ca = labels[e.a], cb = labels[e.b];
      if (ca == cb) continue;
      double ta = internal[ca] + k / area[ca];
      double tb = internal[cb] + k / area[cb];
      if (e.w <= ta && e.w <= tb) {
        for (int& l : labels)
          if (l == cb) l = ca;
        area[ca] += area[cb];
        internal[ca] = e.w;  // edges arrive in nondecreasing order
        area.erase(cb);
        internal.erase(cb);
      }
    }
  }
};

// canonical partition signature: map labels to first-occurrence order
inline std::vector<int> canonical_labels(const std::vector<int>& labels) {
  std::map<int, int> remap;
  std::vector<int> out;
  out.reserve(labels.size());
  int next = 0;
  for (int l : labels) {
    auto [it, inserted] = remap.try_emplace(l, next);
    if (inserted) ++next;
    out.push_back(it->second);
  }
  return out;
}

// ---------------------------------------------------------------------------
// seeded two-view instance for gradient checks: textured room, slightly
// perturbed depth, supervisory signals frozen from that depth

struct GradientCheckInstance {
  SceneSpec spec;
  SceneInputs scene;
  DepthMap depth;
  SupervisorySignals signals;
  PatchSet patches;
  RefineConfig config;

  GradientCheckInstance(int size, std::uint64_t seed) {
    spec.extents = Vec3(4.0, 3.0, 6.0);
    spec.intrinsics = square_camera(size, size * 1.1);
    spec.seed = seed;
    for (auto& tex : spec.face_textures) {
      tex.kind = TextureSpec::Kind::kNoise;
      tex.color1 = Vec3(0.15, 0.25, 0.1);
      tex.color2 = Vec3(0.9, 0.8, 0.95);
      tex.scale = 0.5;
    }
    Rng rng(seed);
    Vec3 center(2.0 + rng.uniform(-0.3, 0.3), 1.5 + rng.uniform(-0.3, 0.3),
                1.0 + rng.uniform(-0.2, 0.2));
    spec.poses.push_back(make_pose(Mat3::Identity(), center));
    spec.poses.push_back(
        make_pose(rotation_xyz(0.0, 0.02, 0.0).transpose(),
                  center + Vec3(0.05, 0.02, 0.03)));
    SceneRender render = generate_room(spec);

    scene.target = render.views[0].image;
    scene.intrinsics = spec.intrinsics;
    scene.sources.push_back(
        {render.views[1].image, relative_pose(spec.poses[0], spec.poses[1])});
    scene.directions = room_axes_in_camera(spec.poses[0]);
    scene.gt_depth = render.views[0].depth;

    depth = render.views[0].depth;
    Grid<double> noise = smooth_noise_field(size, size, 5.0, seed + 101);
    for (std::size_t i = 0; i < depth.values.size(); ++i)
      depth.values[i] *= (1.0 + 0.02 * noise[i]);

    config.threshold.beta = 0.7;  // keep the Manhattan mask well populated
    signals = compute_signals(depth, scene.target, scene.intrinsics,
                              scene.directions, 0, config);
    patches = make_patch_set(size, size, config.patches);
  }

  // pixels safe for central differences: away from bilinear cell borders,
  // |.| kinks of the plane and smoothness terms, and grazing normals
  std::vector<std::pair<int, int>> safe_pixels(double eps) const {
    const int w = depth.width(), h = depth.height();
    Grid<std::uint8_t> skip(w, h, 0);

    WarpedPatches wp = warp_patches(scene.sources[0].image, depth,
                                    scene.sources[0].target_to_source,
                                    scene.intrinsics, patches, false);
    const double margin = 0.02;
    for (std::size_t ai = 0; ai < patches.anchors.size(); ++ai) {
      if (!wp.patch_ok[ai]) continue;
      for (const WarpSample& ws : wp.samples[ai]) {
        double fu = ws.u - std::floor(ws.u);
        double fv = ws.v - std::floor(ws.v);
        if (std::min(fu, 1.0 - fu) < margin || std::min(fv, 1.0 - fv) < margin)
          skip(ws.px, ws.py) = 1;
      }
    }
    for (std::size_t i = 0; i < skip.size(); ++i)
      if (signals.planes.mask[i] &&
          std::abs(depth.values[i] - signals.planes.values[i]) < 10 * eps)
        skip[i] = 1;
    // smoothness kinks: inverse-depth differences that could change sign
    auto rho = [&](std::size_t i) { return 1.0 / depth.values[i]; };
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        std::size_t i = depth.values.index(x, y);
        double probe = 2.0 * eps / (depth.values[i] * depth.values[i]);
        if (x + 1 < w && std::abs(rho(i) - rho(i + 1)) < 5 * probe) {
          skip[i] = 1;
          skip[i + 1] = 1;
        }
        if (y + 1 < h && std::abs(rho(i) - rho(i + w)) < 5 * probe) {
          skip[i] = 1;
          skip[i + w] = 1;
        }
      }
    std::vector<std::pair<int, int>> out;
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        if (!skip(x, y)) out.emplace_back(x, y);
    return out;
  }
};

}  // namespace mwtest
