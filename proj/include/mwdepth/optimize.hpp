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

#include "mwdepth/manhattan.hpp"
#include "mwdepth/metrics.hpp"
#include "mwdepth/photometric.hpp"
#include "mwdepth/plane.hpp"
#include "mwdepth/segmentation.hpp"

#include <functional>
#include <optional>

namespace mwdepth {

struct RefineConfig {
  int epochs = 20;
  int steps_per_epoch = 25;
  double learning_rate = 100.0;
  double lambda1 = 0.001;  // smoothness
  double lambda2 = 0.05;   // Manhattan normal
  double lambda3 = 0.1;    // co-planar
  double omega = 0.85;     // SSIM weight inside the photometric loss
  ThresholdSchedule threshold;
  SegmentationParams segmentation;
  PatchParams patches;
  double plane_d_min = 0.1;
  double plane_d_max = 10.0;
  int warmup_epochs = 2;      // photometric + smoothness only
  int refresh_period = 1;     // epochs between supervisory-signal updates

  void check() const {
    if (epochs < 0 || steps_per_epoch <= 0)
      throw InputError("RefineConfig: bad schedule");
    if (!(learning_rate > 0.0)) throw InputError("RefineConfig: bad learning rate");
    if (lambda1 < 0.0 || lambda2 < 0.0 || lambda3 < 0.0)
      throw InputError("RefineConfig: negative loss weight");
    if (!(omega >= 0.0 && omega <= 1.0)) throw InputError("RefineConfig: bad omega");
    if (warmup_epochs < 0 || refresh_period <= 0)
      throw InputError("RefineConfig: bad warmup/refresh");
    threshold.check();
  }
};

// All four loss terms plus the combined total and its gradient field.
struct LossReport {
  double photo = 0.0;
  double smooth = 0.0;
  double norm = 0.0;
  double plane = 0.0;
  double total = 0.0;
  Grid<double> grad;  // d(total)/d(depth), empty unless requested
};

// Supervisory signals generated on the fly from the current depth and held
// constant (detached) while the depth takes gradient steps.
struct SupervisorySignals {
  AlignmentResult alignment;
  Mask manhattan;
  SegmentationResult segmentation;
  PlaneSupervision planes;
  double gamma = 0.0;
};

// Fixed per-scene inputs of a refinement run.
struct SceneInputs {
  RgbImage target;
  std::vector<SourceView> sources;
  CameraIntrinsics intrinsics;
  DominantDirections directions;
  std::optional<DepthMap> gt_depth;
  std::optional<NormalMap> gt_normals;
};

inline SupervisorySignals compute_signals(const DepthMap& depth,
                                          const RgbImage& image,
                                          const CameraIntrinsics& k,
                                          const DominantDirections& dirs, int epoch,
                                          const RefineConfig& cfg) {
  SupervisorySignals sig;
  PointMap pts = backproject(depth, k);
  NormalMap nm = compute_normals(pts);
  sig.alignment = align_normals(nm, dirs);
  sig.gamma = adaptive_threshold(epoch, cfg.threshold);
  sig.manhattan = manhattan_mask(sig.alignment, sig.gamma);
  Grid<double> dmap = plane_distance_map(pts, sig.alignment);
  EdgeGraph graph = edge_dissimilarity(image, sig.alignment, dmap);
  sig.segmentation = graph_segment(
      graph, cfg.segmentation.k,
      cfg.segmentation.min_area_pixels(image.width(), image.height()));
  sig.planes = fit_segment_planes(sig.segmentation, pts, k, cfg.plane_d_min,
                                  cfg.plane_d_max);
  return sig;
}

// Weighted sum of the four losses,
//   L = L_photo + l1 L_smooth + l2 L_norm + l3 L_plane,
// evaluated against detached supervisory signals. lambda2/lambda3 may be
// overridden (set to zero during warmup).
inline LossReport total_loss(const DepthMap& depth, const SceneInputs& scene,
                             const PatchSet& patches,
                             const SupervisorySignals& signals,
                             const RefineConfig& cfg, bool want_grad,
                             std::optional<double> lambda2_override = std::nullopt,
                             std::optional<double> lambda3_override = std::nullopt) {
  const double l2 = lambda2_override.value_or(cfg.lambda2);
  const double l3 = lambda3_override.value_or(cfg.lambda3);

  LossTerm photo = photometric_loss(scene.target, scene.sources, depth,
                                    scene.intrinsics, patches, cfg.omega, want_grad);
  LossTerm smooth = smoothness_loss(depth, scene.target, want_grad);
  LossTerm norm = manhattan_normal_loss(depth, scene.intrinsics,
                                        signals.alignment.aligned, signals.manhattan,
                                        signals.segmentation.planar_mask, want_grad);
  LossTerm plane =
      coplanar_loss(depth, signals.planes.values, signals.planes.mask, want_grad);

  LossReport report;
  report.photo = photo.value;
  report.smooth = smooth.value;
  report.norm = norm.value;
  report.plane = plane.value;
  report.total = photo.value + cfg.lambda1 * smooth.value + l2 * norm.value +
                 l3 * plane.value;
  if (want_grad) {
    report.grad = Grid<double>(depth.width(), depth.height(), 0.0);
    for (std::size_t i = 0; i < report.grad.size(); ++i)
      report.grad[i] = photo.grad[i] + cfg.lambda1 * smooth.grad[i] +
                       l2 * norm.grad[i] + l3 * plane.grad[i];
  }
  return report;
}

struct EpochRecord {
  int epoch = 0;
  double photo = 0.0, smooth = 0.0, norm = 0.0, plane = 0.0, total = 0.0;
  double absrel = std::numeric_limits<double>::quiet_NaN();
  double rms = std::numeric_limits<double>::quiet_NaN();
  double normal_mean_deg = std::numeric_limits<double>::quiet_NaN();
};

struct RefineResult {
  DepthMap depth;
  std::vector<EpochRecord> history;
};

// Gradient descent on the log-depth field under the total loss. Signals
// are recomputed every refresh period with the adaptive threshold of the
// current epoch; steps in between keep them frozen. Warmup epochs drop the
// structural terms. A halving line search keeps each step non-increasing;
// growth of the total beyond 10x its initial value aborts.
inline RefineResult refine_depth(const DepthMap& init, const SceneInputs& scene,
                                 const RefineConfig& cfg) {
  cfg.check();
  init.check();
  scene.intrinsics.check();
  scene.directions.check();
  if (cfg.epochs == 0) return {init, {}};

  const int w = init.width(), h = init.height();
  PatchSet patches = make_patch_set(w, h, cfg.patches);

  Grid<double> theta(w, h, 0.0);
  for (std::size_t i = 0; i < theta.size(); ++i)
    if (init.valid[i]) theta[i] = std::log(init.values[i]);

  DepthMap depth = init;
  auto sync_depth = [&](const Grid<double>& th, DepthMap& d) {
    for (std::size_t i = 0; i < th.size(); ++i)
      if (d.valid[i]) d.values[i] = std::exp(th[i]);
  };

  RefineResult result;
  SupervisorySignals signals;
  double initial_total = -1.0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    if (epoch % cfg.refresh_period == 0)
      signals = compute_signals(depth, scene.target, scene.intrinsics,
                                scene.directions, epoch, cfg);
    const bool warm = epoch < cfg.warmup_epochs;
    const std::optional<double> l2 = warm ? std::optional<double>(0.0) : std::nullopt;
    const std::optional<double> l3 = warm ? std::optional<double>(0.0) : std::nullopt;

    for (int step = 0; step < cfg.steps_per_epoch; ++step) {
      LossReport report = total_loss(depth, scene, patches, signals, cfg, true, l2, l3);
      // divergence guard on the full-weight objective, which is comparable
      // across warmup and signal refreshes
      double full_total = report.photo + cfg.lambda1 * report.smooth +
                          cfg.lambda2 * report.norm + cfg.lambda3 * report.plane;
      if (initial_total < 0.0) initial_total = full_total;
      if (full_total > 10.0 * std::max(initial_total, 1e-12))
        throw DegenerateError("refine_depth: diverged (total loss " +
                              std::to_string(full_total) + " vs initial " +
                              std::to_string(initial_total) + ")");

      // gradient in log-depth space
      Grid<double> gtheta(w, h, 0.0);
      double gnorm = 0.0;
      for (std::size_t i = 0; i < gtheta.size(); ++i)
        if (init.valid[i]) {
          gtheta[i] = report.grad[i] * depth.values[i];
          gnorm += gtheta[i] * gtheta[i];
        }
      if (gnorm == 0.0) break;  // stationary under the current signals

      double step_size = cfg.learning_rate;
      Grid<double> theta_trial = theta;
      DepthMap depth_trial = depth;
      bool accepted = false;
      for (int halving = 0; halving <= 20; ++halving) {
        for (std::size_t i = 0; i < theta.size(); ++i)
          theta_trial[i] = theta[i] - step_size * gtheta[i];
        sync_depth(theta_trial, depth_trial);
        double trial_total =
            total_loss(depth_trial, scene, patches, signals, cfg, false, l2, l3)
                .total;
        if (trial_total <= report.total) {
          accepted = true;
          break;
        }
        step_size *= 0.5;
      }
      if (!accepted) break;  // no descent at the smallest step; stop the epoch
      theta = theta_trial;
      depth.values = depth_trial.values;
    }

    LossReport eod = total_loss(depth, scene, patches, signals, cfg, false, l2, l3);
    EpochRecord rec;
    rec.epoch = epoch;
    rec.photo = eod.photo;
    rec.smooth = eod.smooth;
    rec.norm = eod.norm;
    rec.plane = eod.plane;
    rec.total = eod.total;
    if (scene.gt_depth) {
      DepthMetrics dm = depth_metrics(depth, *scene.gt_depth, cfg.plane_d_max, false);
      rec.absrel = dm.absrel;
      rec.rms = dm.rms;
    }
    if (scene.gt_normals) {
      NormalMap nm = compute_normals(backproject(depth, scene.intrinsics));
      rec.normal_mean_deg = normal_metrics(nm, *scene.gt_normals).mean_deg;
    }
    result.history.push_back(rec);
  }
  result.depth = std::move(depth);
  return result;
}

// Central-difference gradient of an arbitrary scalar loss of the depth
// field; the independent oracle for every analytic gradient in the
// library. Probes only valid pixels (or the given subset).
inline Grid<double> finite_diff_grad(
    const std::function<double(const DepthMap&)>& loss, const DepthMap& depth,
    double eps, const std::vector<std::pair<int, int>>* pixels = nullptr) {
  if (!(eps > 0.0)) throw InputError("finite_diff_grad: eps must be positive");
  Grid<double> grad(depth.width(), depth.height(), 0.0);
  DepthMap probe = depth;
  auto probe_at = [&](int x, int y) {
    if (!depth.valid(x, y)) return;
    double saved = probe.values(x, y);
    probe.values(x, y) = saved + eps;
    double hi = loss(probe);
    probe.values(x, y) = saved - eps;
    double lo = loss(probe);
    probe.values(x, y) = saved;
    grad(x, y) = (hi - lo) / (2.0 * eps);
  };
  if (pixels) {
    for (auto [x, y] : *pixels) probe_at(x, y);
  } else {
    for (int y = 0; y < depth.height(); ++y)
      for (int x = 0; x < depth.width(); ++x) probe_at(x, y);
  }
  return grad;
}

}  // namespace mwdepth
