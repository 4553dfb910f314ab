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

#include <array>
#include <cmath>
#include <limits>
#include <vector>

namespace mwdepth {

// Anchor pixels plus the window offsets sampled around each anchor.
struct PatchSet {
  std::vector<std::pair<int, int>> anchors;
  std::vector<std::pair<int, int>> offsets;

  std::size_t patch_size() const { return offsets.size(); }
};

struct PatchParams {
  int patch = 3;     // window side length (odd)
  int dilation = 1;  // spacing between window samples
  int stride = 4;    // anchor spacing
};

// Dense anchor grid with enough margin that every target patch stays in
// bounds.
inline PatchSet make_patch_set(int width, int height, const PatchParams& p = {}) {
  if (p.patch < 1 || p.patch % 2 == 0)
    throw InputError("make_patch_set: patch size must be odd and positive");
  if (p.dilation < 1 || p.stride < 1)
    throw InputError("make_patch_set: dilation and stride must be positive");
  PatchSet out;
  const int half = (p.patch - 1) / 2;
  const int margin = half * p.dilation;
  for (int dy = -half; dy <= half; ++dy)
    for (int dx = -half; dx <= half; ++dx)
      out.offsets.emplace_back(dx * p.dilation, dy * p.dilation);
  for (int y = margin; y < height - margin; y += p.stride)
    for (int x = margin; x < width - margin; x += p.stride)
      out.anchors.emplace_back(x, y);
  return out;
}

namespace detail {

// snap nearly-integer sample coordinates so that exact identity warps read
// the lattice exactly
inline double snap_coord(double v) {
  double r = std::round(v);
  return (std::abs(v - r) < 1e-9) ? r : v;
}

struct BilinearSample {
  Vec3 color = Vec3::Zero();
  Vec3 d_du = Vec3::Zero();  // per-channel d(color)/du
  Vec3 d_dv = Vec3::Zero();
  bool ok = false;
};

inline BilinearSample bilinear_sample(const RgbImage& img, double u, double v) {
  BilinearSample s;
  u = snap_coord(u);
  v = snap_coord(v);
  if (u < 0.0 || v < 0.0 || u > img.width() - 1 || v > img.height() - 1) return s;
  int x0 = static_cast<int>(std::floor(u));
  int y0 = static_cast<int>(std::floor(v));
  if (x0 == img.width() - 1) x0 -= 1;   // only possible when u is the exact border
  if (y0 == img.height() - 1) y0 -= 1;
  if (x0 < 0 || y0 < 0) return s;       // 1-wide images are rejected upstream
  double fu = u - x0, fv = v - y0;
  const Vec3& c00 = img(x0, y0);
  const Vec3& c10 = img(x0 + 1, y0);
  const Vec3& c01 = img(x0, y0 + 1);
  const Vec3& c11 = img(x0 + 1, y0 + 1);
  s.color = (1 - fu) * (1 - fv) * c00 + fu * (1 - fv) * c10 + (1 - fu) * fv * c01 +
            fu * fv * c11;
  s.d_du = (1 - fv) * (c10 - c00) + fv * (c11 - c01);
  s.d_dv = (1 - fu) * (c01 - c00) + fu * (c11 - c10);
  s.ok = true;
  return s;
}

}  // namespace detail

// One warped sample with everything needed for the loss and its gradient.
struct WarpSample {
  Vec3 color = Vec3::Zero();
  Vec3 dcolor_dd = Vec3::Zero();  // per-channel d(color)/d(depth at source pixel)
  double u = 0.0, v = 0.0;        // source-image coordinates
  int px = 0, py = 0;             // target pixel the sample was lifted from
};

struct WarpedPatches {
  std::vector<std::vector<WarpSample>> samples;  // [anchor][offset]
  std::vector<std::uint8_t> patch_ok;            // whole-patch in-bounds mask
};

// Project and transform a single target pixel with an explicit depth.
// Returns source coordinates and the transformed depth, or nullopt when
// the point lands behind the source camera.
inline std::optional<Vec3> warp_point(double x, double y, double depth,
                                      const Pose& target_to_source,
                                      const CameraIntrinsics& k) {
  Vec3 p = target_to_source.apply(depth * k.ray(x, y));
  if (!(p.z() > 1e-9)) return std::nullopt;
  Vec2 uv = k.project(p);
  return Vec3(uv.x(), uv.y(), p.z());
}

// Warp every patch into the source view: backproject each patch pixel with
// its own depth, transform by the pose, project, and bilinearly sample.
// Any failed sample (invalid depth, behind camera, out of bounds) masks
// the whole patch.
inline WarpedPatches warp_patches(const RgbImage& source, const DepthMap& depth,
                                  const Pose& target_to_source,
                                  const CameraIntrinsics& k, const PatchSet& patches,
                                  bool want_grad = false) {
  WarpedPatches out;
  out.samples.resize(patches.anchors.size());
  out.patch_ok.assign(patches.anchors.size(), 0);
  const Mat3& rot = target_to_source.rotation;
  for (std::size_t ai = 0; ai < patches.anchors.size(); ++ai) {
    auto [axc, ayc] = patches.anchors[ai];
    auto& dst = out.samples[ai];
    dst.resize(patches.offsets.size());
    bool ok = true;
    for (std::size_t oi = 0; oi < patches.offsets.size(); ++oi) {
      int x = axc + patches.offsets[oi].first;
      int y = ayc + patches.offsets[oi].second;
      if (!depth.values.in_bounds(x, y) || !depth.valid(x, y)) {
        ok = false;
        break;
      }
      double d = depth.values(x, y);
      Vec3 ray = k.ray(x, y);
      Vec3 p = target_to_source.apply(d * ray);
      if (!(p.z() > 1e-9)) {
        ok = false;
        break;
      }
      double u = k.fx * p.x() / p.z() + k.cx;
      double v = k.fy * p.y() / p.z() + k.cy;
      detail::BilinearSample s = detail::bilinear_sample(source, u, v);
      if (!s.ok) {
        ok = false;
        break;
      }
      WarpSample& ws = dst[oi];
      ws.color = s.color;
      ws.u = u;
      ws.v = v;
      ws.px = x;
      ws.py = y;
      if (want_grad) {
        Vec3 dp = rot * ray;  // dP/d(depth)
        double du_dd = k.fx * (dp.x() * p.z() - p.x() * dp.z()) / (p.z() * p.z());
        double dv_dd = k.fy * (dp.y() * p.z() - p.y() * dp.z()) / (p.z() * p.z());
        ws.dcolor_dd = s.d_du * du_dd + s.d_dv * dv_dd;
      }
    }
    out.patch_ok[ai] = ok ? 1 : 0;
  }
  return out;
}

// Standard SSIM between two equal-size patches on [0, 1] intensities with
// C1 = 0.01^2, C2 = 0.03^2; moments are taken over the whole window (the
// default 3x3 patch makes this the usual 3x3 mean filter). Returns the
// per-channel similarity.
inline constexpr double kSsimC1 = 0.01 * 0.01;
inline constexpr double kSsimC2 = 0.03 * 0.03;

inline Vec3 ssim(const std::vector<Vec3>& a, const std::vector<Vec3>& b) {
  if (a.size() != b.size() || a.empty())
    throw InputError("ssim: patches must have equal nonzero size");
  const double inv_n = 1.0 / static_cast<double>(a.size());
  Vec3 mu_a = Vec3::Zero(), mu_b = Vec3::Zero();
  for (std::size_t i = 0; i < a.size(); ++i) {
    mu_a += a[i];
    mu_b += b[i];
  }
  mu_a *= inv_n;
  mu_b *= inv_n;
  Vec3 var_a = Vec3::Zero(), var_b = Vec3::Zero(), cov = Vec3::Zero();
  for (std::size_t i = 0; i < a.size(); ++i) {
    Vec3 da = a[i] - mu_a, db = b[i] - mu_b;
    var_a += da.cwiseProduct(da);
    var_b += db.cwiseProduct(db);
    cov += da.cwiseProduct(db);
  }
  var_a *= inv_n;
  var_b *= inv_n;
  cov *= inv_n;
  Vec3 out;
  for (int c = 0; c < 3; ++c) {
    double a1 = 2.0 * mu_a[c] * mu_b[c] + kSsimC1;
    double a2 = 2.0 * cov[c] + kSsimC2;
    double b1 = mu_a[c] * mu_a[c] + mu_b[c] * mu_b[c] + kSsimC1;
    double b2 = var_a[c] + var_b[c] + kSsimC2;
    out[c] = (a1 * a2) / (b1 * b2);
  }
  return out;
}

// SSIM loss form per channel: (1 - SSIM)/2.
inline double ssim_loss(const std::vector<Vec3>& a, const std::vector<Vec3>& b) {
  Vec3 s = ssim(a, b);
  return ((1.0 - s[0]) + (1.0 - s[1]) + (1.0 - s[2])) / 6.0;
}

namespace detail {

struct PatchLoss {
  double value = 0.0;
  std::vector<Vec3> grad_b;  // d(value)/d(sampled colors), per pixel per channel
};

// Patch loss omega * mean_c (1 - SSIM_c)/2 + (1 - omega) * mean |a - b|
// with the analytic derivative w.r.t. the sampled patch b.
inline PatchLoss patch_photometric_loss(const std::vector<Vec3>& a,
                                        const std::vector<Vec3>& b, double omega,
                                        bool want_grad) {
  const std::size_t n = a.size();
  const double inv_n = 1.0 / static_cast<double>(n);
  PatchLoss out;
  if (want_grad) out.grad_b.assign(n, Vec3::Zero());

  // moments
  Vec3 mu_a = Vec3::Zero(), mu_b = Vec3::Zero();
  for (std::size_t i = 0; i < n; ++i) {
    mu_a += a[i];
    mu_b += b[i];
  }
  mu_a *= inv_n;
  mu_b *= inv_n;
  Vec3 var_a = Vec3::Zero(), var_b = Vec3::Zero(), cov = Vec3::Zero();
  for (std::size_t i = 0; i < n; ++i) {
    Vec3 da = a[i] - mu_a, db = b[i] - mu_b;
    var_a += da.cwiseProduct(da);
    var_b += db.cwiseProduct(db);
    cov += da.cwiseProduct(db);
  }
  var_a *= inv_n;
  var_b *= inv_n;
  cov *= inv_n;

  double l1 = 0.0;
  double ssim_term = 0.0;
  for (int c = 0; c < 3; ++c) {
    double a1 = 2.0 * mu_a[c] * mu_b[c] + kSsimC1;
    double a2 = 2.0 * cov[c] + kSsimC2;
    double b1 = mu_a[c] * mu_a[c] + mu_b[c] * mu_b[c] + kSsimC1;
    double b2 = var_a[c] + var_b[c] + kSsimC2;
    double s = (a1 * a2) / (b1 * b2);
    ssim_term += (1.0 - s) / 2.0;
    if (want_grad) {
      // dS/db_i = [2 mu_a A2 + 2(a_i - mu_a) A1]/(n B1 B2)
      //           - S [2 mu_b/(n B1) + 2(b_i - mu_b)/(n B2)]
      double k1 = 2.0 / (n * b1 * b2);
      double k2 = s * 2.0 / (n * b1);
      double k3 = s * 2.0 / (n * b2);
      for (std::size_t i = 0; i < n; ++i) {
        double ds = k1 * (mu_a[c] * a2 + (a[i][c] - mu_a[c]) * a1) -
                    (k2 * mu_b[c] + k3 * (b[i][c] - mu_b[c]));
        out.grad_b[i][c] += omega * (-ds / 2.0) / 3.0;
      }
    }
  }
  ssim_term /= 3.0;

  const double l1_scale = inv_n / 3.0;
  for (std::size_t i = 0; i < n; ++i)
    for (int c = 0; c < 3; ++c) {
      double r = a[i][c] - b[i][c];
      l1 += std::abs(r) * l1_scale;
      if (want_grad && r != 0.0)
        out.grad_b[i][c] += (1.0 - omega) * (r > 0.0 ? -l1_scale : l1_scale);
    }

  out.value = omega * ssim_term + (1.0 - omega) * l1;
  return out;
}

}  // namespace detail

struct SourceView {
  RgbImage image;
  Pose target_to_source;
};

// Patch photometric loss over all anchors and source frames:
//   L = 1/N sum_anchors min_sources [ omega L_SSIM + (1 - omega) L1 ]
// where the minimum runs over sources whose warped patch stays in bounds
// and N counts anchors with at least one such source. The gradient flows
// into depth through the warp of the winning source.
inline LossTerm photometric_loss(const RgbImage& target,
                                 const std::vector<SourceView>& sources,
                                 const DepthMap& depth, const CameraIntrinsics& k,
                                 const PatchSet& patches, double omega,
                                 bool want_grad) {
  if (sources.empty()) throw InputError("photometric_loss: need at least one source");
  if (!target.same_shape(depth.values))
    throw InputError("photometric_loss: image/depth dimension mismatch");
  if (!(omega >= 0.0 && omega <= 1.0))
    throw InputError("photometric_loss: omega must be in [0, 1]");

  LossTerm out;
  if (want_grad) out.grad = Grid<double>(depth.width(), depth.height(), 0.0);

  std::vector<WarpedPatches> warped;
  warped.reserve(sources.size());
  for (const SourceView& sv : sources)
    warped.push_back(
        warp_patches(sv.image, depth, sv.target_to_source, k, patches, want_grad));

  // target patches
  std::vector<Vec3> tpatch(patches.patch_size());
  std::vector<Vec3> spatch(patches.patch_size());

  double sum = 0.0;
  std::size_t used = 0;
  struct Winner {
    std::size_t anchor, source;
    detail::PatchLoss loss;
  };
  std::vector<Winner> winners;
  for (std::size_t ai = 0; ai < patches.anchors.size(); ++ai) {
    auto [ax, ay] = patches.anchors[ai];
    for (std::size_t oi = 0; oi < patches.offsets.size(); ++oi)
      tpatch[oi] = target(ax + patches.offsets[oi].first,
                          ay + patches.offsets[oi].second);
    double best = std::numeric_limits<double>::infinity();
    std::size_t best_si = 0;
    detail::PatchLoss best_loss;
    for (std::size_t si = 0; si < sources.size(); ++si) {
      if (!warped[si].patch_ok[ai]) continue;
      for (std::size_t oi = 0; oi < patches.offsets.size(); ++oi)
        spatch[oi] = warped[si].samples[ai][oi].color;
      detail::PatchLoss pl =
          detail::patch_photometric_loss(tpatch, spatch, omega, want_grad);
      if (pl.value < best) {
        best = pl.value;
        best_si = si;
        best_loss = std::move(pl);
      }
    }
    if (!std::isfinite(best)) continue;
    sum += best;
    ++used;
    if (want_grad) winners.push_back({ai, best_si, std::move(best_loss)});
  }
  if (used == 0) return out;

  out.value = sum / static_cast<double>(used);
  if (want_grad) {
    const double inv_used = 1.0 / static_cast<double>(used);
    for (const Winner& win : winners) {
      const auto& samples = warped[win.source].samples[win.anchor];
      for (std::size_t oi = 0; oi < samples.size(); ++oi) {
        const WarpSample& ws = samples[oi];
        double g = win.loss.grad_b[oi].dot(ws.dcolor_dd);
        out.grad(ws.px, ws.py) += inv_used * g;
      }
    }
  }
  return out;
}

// Edge-aware smoothness on the mean-normalized inverse depth:
//   L = mean_p |dx rho^|exp(-|dx I|) + |dy rho^|exp(-|dy I|)
// with forward differences, image gradients averaged over channels, and
// the mean taken over valid pixels.
inline LossTerm smoothness_loss(const DepthMap& depth, const RgbImage& image,
                                bool want_grad) {
  const int w = depth.width(), h = depth.height();
  if (!image.same_shape(depth.values))
    throw InputError("smoothness_loss: image/depth dimension mismatch");
  LossTerm out;
  if (want_grad) out.grad = Grid<double>(w, h, 0.0);

  std::size_t nv = count_on(depth.valid);
  if (nv == 0) return out;
  const double inv_nv = 1.0 / static_cast<double>(nv);

  Grid<double> rho(w, h, 0.0);
  double mean = 0.0;
  for (std::size_t i = 0; i < rho.size(); ++i)
    if (depth.valid[i]) {
      rho[i] = 1.0 / depth.values[i];
      mean += rho[i];
    }
  mean *= inv_nv;
  const double inv_mean = 1.0 / mean;

  auto edge_weight = [&](int x0, int y0, int x1, int y1) {
    double g = ((image(x1, y1) - image(x0, y0)).cwiseAbs().sum()) / 3.0;
    return std::exp(-g);
  };

  double sum = 0.0;
  Grid<double> grad_rho_hat;
  if (want_grad) grad_rho_hat = Grid<double>(w, h, 0.0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!depth.valid(x, y)) continue;
      if (x + 1 < w && depth.valid(x + 1, y)) {
        double d = (rho(x + 1, y) - rho(x, y)) * inv_mean;
        double wgt = edge_weight(x, y, x + 1, y);
        sum += std::abs(d) * wgt;
        if (want_grad && d != 0.0) {
          double s = (d > 0.0 ? 1.0 : -1.0) * wgt * inv_nv;
          grad_rho_hat(x + 1, y) += s;
          grad_rho_hat(x, y) -= s;
        }
      }
      if (y + 1 < h && depth.valid(x, y + 1)) {
        double d = (rho(x, y + 1) - rho(x, y)) * inv_mean;
        double wgt = edge_weight(x, y, x, y + 1);
        sum += std::abs(d) * wgt;
        if (want_grad && d != 0.0) {
          double s = (d > 0.0 ? 1.0 : -1.0) * wgt * inv_nv;
          grad_rho_hat(x, y + 1) += s;
          grad_rho_hat(x, y) -= s;
        }
      }
    }
  }
  out.value = sum * inv_nv;

  if (want_grad) {
    // chain through the mean normalization, then rho = 1/D
    double dot = 0.0;
    for (std::size_t i = 0; i < grad_rho_hat.size(); ++i)
      if (depth.valid[i]) dot += grad_rho_hat[i] * rho[i];
    for (std::size_t i = 0; i < grad_rho_hat.size(); ++i) {
      if (!depth.valid[i]) continue;
      double g_rho = grad_rho_hat[i] * inv_mean - dot * inv_mean * inv_mean * inv_nv;
      out.grad[i] = -g_rho / (depth.values[i] * depth.values[i]);
    }
  }
  return out;
}

}  // namespace mwdepth
