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
#include "mwdepth/geometry.hpp"

#include <array>
#include <optional>

namespace mwdepth {

// Texture of one room plane, parameterized in plane-local world
// coordinates so that a surface point renders the same color from every
// view.
struct TextureSpec {
  enum class Kind { kUniform, kChecker, kNoise };
  Kind kind = Kind::kUniform;
  Vec3 color1 = Vec3(1.0, 1.0, 1.0);
  Vec3 color2 = Vec3(0.2, 0.2, 0.2);
  double scale = 0.5;  // tile / lattice spacing in meters
};

// Optional slanted panel cutting through the box, for exercising scenes
// that break the orthogonal-directions assumption.
struct SlantSpec {
  Vec3 point = Vec3::Zero();
  Vec3 normal = Vec3::UnitZ();
  TextureSpec texture;
};

// Axis-aligned box room [0,ex] x [0,ey] x [0,ez] observed from inside.
// Faces are indexed 1..6 as x-,x+,y-,y+,z-,z+; a slant panel, when
// present, is face 7.
struct SceneSpec {
  Vec3 extents = Vec3(4.0, 3.0, 5.0);
  CameraIntrinsics intrinsics;
  std::vector<Pose> poses;  // world-to-camera
  std::array<TextureSpec, 6> face_textures;
  std::optional<SlantSpec> slant;
  std::uint64_t seed = 0;
};

struct SceneView {
  RgbImage image;
  DepthMap depth;
  NormalMap normals;
  Grid<std::uint16_t> plane_ids;
  std::vector<LineSegment> lines;  // projected room edges, clipped
};

struct SceneRender {
  std::vector<SceneView> views;
};

namespace detail {

// deterministic color lattice for the noise texture
inline double noise_lattice(std::uint64_t seed, int face, long ix, long iy, int ch) {
  std::uint64_t hsh = hash_combine(seed, static_cast<std::uint64_t>(face));
  hsh = hash_combine(hsh, static_cast<std::uint64_t>(ix) * 2654435761ULL + 17);
  hsh = hash_combine(hsh, static_cast<std::uint64_t>(iy) * 40503ULL + 3);
  hsh = hash_combine(hsh, static_cast<std::uint64_t>(ch));
  return static_cast<double>(hsh >> 11) * 0x1.0p-53;
}

inline double smoothstep(double t) { return t * t * (3.0 - 2.0 * t); }

inline Vec3 texture_color(const TextureSpec& tex, std::uint64_t seed, int face,
                          double s, double t) {
  switch (tex.kind) {
    case TextureSpec::Kind::kUniform:
      return tex.color1;
    case TextureSpec::Kind::kChecker: {
      long is = static_cast<long>(std::floor(s / tex.scale));
      long it = static_cast<long>(std::floor(t / tex.scale));
      return ((is + it) % 2 + 2) % 2 == 0 ? tex.color1 : tex.color2;
    }
    case TextureSpec::Kind::kNoise: {
      double fs = s / tex.scale, ft = t / tex.scale;
      long is = static_cast<long>(std::floor(fs));
      long it = static_cast<long>(std::floor(ft));
      double ws = smoothstep(fs - is), wt = smoothstep(ft - it);
      Vec3 out;
      for (int c = 0; c < 3; ++c) {
        double v00 = noise_lattice(seed, face, is, it, c);
        double v10 = noise_lattice(seed, face, is + 1, it, c);
        double v01 = noise_lattice(seed, face, is, it + 1, c);
        double v11 = noise_lattice(seed, face, is + 1, it + 1, c);
        double v = (1 - ws) * (1 - wt) * v00 + ws * (1 - wt) * v10 +
                   (1 - ws) * wt * v01 + ws * wt * v11;
        out[c] = tex.color1[c] + v * (tex.color2[c] - tex.color1[c]);
      }
      return out;
    }
  }
  return tex.color1;
}

// plane-local 2D coordinates of a world point on a box face
inline Vec2 face_local_coords(int face, const Vec3& p) {
  switch ((face - 1) / 2) {
    case 0: return {p.y(), p.z()};  // x faces
    case 1: return {p.x(), p.z()};  // y faces
    default: return {p.x(), p.y()};  // z faces
  }
}

// Liang-Barsky clip of a 2D segment to [0, w-1] x [0, h-1].
inline std::optional<std::pair<Vec2, Vec2>> clip_segment_2d(Vec2 a, Vec2 b, int w,
                                                            int h) {
  double t0 = 0.0, t1 = 1.0;
  Vec2 d = b - a;
  auto clip = [&](double p, double q) {
    if (p == 0.0) return q >= 0.0;
    double r = q / p;
    if (p < 0.0) {
      if (r > t1) return false;
      if (r > t0) t0 = r;
    } else {
      if (r < t0) return false;
      if (r < t1) t1 = r;
    }
    return true;
  };
  if (!clip(-d.x(), a.x()) || !clip(d.x(), (w - 1) - a.x()) || !clip(-d.y(), a.y()) ||
      !clip(d.y(), (h - 1) - a.y()))
    return std::nullopt;
  return std::make_pair(a + t0 * d, a + t1 * d);
}

}  // namespace detail

// Ray-cast the box per pixel: analytic depth, camera-facing normals,
// plane ids, textures in plane-local coordinates, and the projected box
// edges. Deterministic given the seed.
inline SceneRender generate_room(const SceneSpec& spec) {
  spec.intrinsics.check();
  if (!(spec.extents.minCoeff() > 0.0))
    throw InputError("generate_room: extents must be positive");
  if (spec.poses.empty()) throw InputError("generate_room: no camera poses");

  const int w = spec.intrinsics.width, h = spec.intrinsics.height;
  SceneRender render;
  for (const Pose& pose : spec.poses) {
    pose.check();
    Pose cam_to_world = pose.inverse();
    Vec3 center = cam_to_world.translation;
    for (int i = 0; i < 3; ++i)
      if (!(center[i] > 0.0 && center[i] < spec.extents[i]))
        throw InputError("generate_room: camera outside the room");

    SceneView view;
    view.image = RgbImage(w, h, Vec3::Zero());
    view.depth = DepthMap(w, h, 0.0, false);
    view.normals.normals = Grid<Vec3>(w, h, Vec3::Zero());
    view.normals.valid = Mask(w, h, 0);
    view.plane_ids = Grid<std::uint16_t>(w, h, 0);

    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        Vec3 dir_cam = spec.intrinsics.ray(x, y);  // z component is 1
        Vec3 dir = cam_to_world.rotation * dir_cam;
        // nearest face hit; the camera is strictly inside so each axis
        // contributes at most one candidate
        double t_hit = std::numeric_limits<double>::infinity();
        int face = 0;
        for (int axis = 0; axis < 3; ++axis) {
          if (dir[axis] == 0.0) continue;
          double bound = dir[axis] > 0.0 ? spec.extents[axis] : 0.0;
          double t = (bound - center[axis]) / dir[axis];
          if (t > 0.0 && t < t_hit) {
            t_hit = t;
            face = 2 * axis + (dir[axis] > 0.0 ? 2 : 1);
          }
        }
        if (spec.slant) {
          double denom = dir.dot(spec.slant->normal);
          if (denom != 0.0) {
            double t = (spec.slant->point - center).dot(spec.slant->normal) / denom;
            if (t > 0.0 && t < t_hit) {
              Vec3 p = center + t * dir;
              bool inside = true;
              for (int i = 0; i < 3; ++i)
                inside = inside && p[i] >= -1e-12 && p[i] <= spec.extents[i] + 1e-12;
              if (inside) {
                t_hit = t;
                face = 7;
              }
            }
          }
        }
        if (!std::isfinite(t_hit) || face == 0) continue;  // cannot happen inside

        Vec3 p_world = center + t_hit * dir;
        view.depth.values(x, y) = t_hit;  // dir_cam.z == 1, so t is the z-depth
        view.depth.valid(x, y) = 1;
        view.plane_ids(x, y) = static_cast<std::uint16_t>(face);

        Vec3 n_world;
        Vec2 local;
        const TextureSpec* tex;
        if (face == 7) {
          n_world = spec.slant->normal.normalized();
          if (n_world.dot(p_world - center) > 0.0) n_world = -n_world;
          // deterministic in-plane basis
          Vec3 axis = std::abs(n_world.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
          Vec3 ts = (axis - axis.dot(n_world) * n_world).normalized();
          Vec3 tt = n_world.cross(ts);
          local = {ts.dot(p_world), tt.dot(p_world)};
          tex = &spec.slant->texture;
        } else {
          int axis = (face - 1) / 2;
          bool max_side = (face % 2) == 0;
          n_world = Vec3::Zero();
          n_world[axis] = max_side ? -1.0 : 1.0;  // inward == camera side
          local = detail::face_local_coords(face, p_world);
          tex = &spec.face_textures[face - 1];
        }
        view.normals.normals(x, y) = pose.rotation * n_world;
        view.normals.valid(x, y) = 1;
        view.image(x, y) = detail::texture_color(*tex, spec.seed, face, local.x(),
                                                 local.y());
      }
    }

    // project the 12 box edges
    const Vec3& e = spec.extents;
    std::array<Vec3, 8> corners;
    for (int i = 0; i < 8; ++i)
      corners[i] = Vec3((i & 1) ? e.x() : 0.0, (i & 2) ? e.y() : 0.0,
                        (i & 4) ? e.z() : 0.0);
    constexpr std::array<std::pair<int, int>, 12> kEdges{
        {{0, 1}, {2, 3}, {4, 5}, {6, 7}, {0, 2}, {1, 3}, {4, 6}, {5, 7},
         {0, 4}, {1, 5}, {2, 6}, {3, 7}}};
    constexpr double kZNear = 1e-6;
    for (auto [ia, ib] : kEdges) {
      Vec3 a = pose.apply(corners[ia]);
      Vec3 b = pose.apply(corners[ib]);
      if (a.z() <= kZNear && b.z() <= kZNear) continue;
      if (a.z() <= kZNear || b.z() <= kZNear) {
        double t = (kZNear - a.z()) / (b.z() - a.z());
        Vec3 cut = a + t * (b - a);
        (a.z() <= kZNear ? a : b) = cut;
      }
      Vec2 pa = spec.intrinsics.project(a);
      Vec2 pb = spec.intrinsics.project(b);
      auto clipped = detail::clip_segment_2d(pa, pb, w, h);
      if (!clipped) continue;
      if ((clipped->second - clipped->first).norm() < 0.5) continue;
      view.lines.push_back({clipped->first, clipped->second});
    }

    render.views.push_back(std::move(view));
  }
  return render;
}

// Camera-frame room axes of a rendered view, i.e. the ground truth the
// dominant-direction search should recover (up to permutation and sign).
inline DominantDirections room_axes_in_camera(const Pose& world_to_camera) {
  DominantDirections dirs;
  for (int i = 0; i < 3; ++i) dirs.dirs[i] = world_to_camera.rotation.col(i);
  return dirs;
}

// Band-limited noise field: Gaussian values on a lattice with the given
// spacing, smoothly interpolated, then normalized to zero mean and unit
// sample standard deviation. Deterministic given the seed.
inline Grid<double> smooth_noise_field(int width, int height, double wavelength_px,
                                       std::uint64_t seed) {
  if (!(wavelength_px > 0.0))
    throw InputError("smooth_noise_field: wavelength must be positive");
  Grid<double> field(width, height, 0.0);
  auto lattice = [&](long ix, long iy) {
    // two uniforms -> one Gaussian (Box-Muller), hashed per cell
    std::uint64_t h1 = detail::hash_combine(seed, detail::hash_combine(
                                                      static_cast<std::uint64_t>(ix),
                                                      static_cast<std::uint64_t>(iy)));
    std::uint64_t h2 = detail::hash_combine(h1, 0x5bd1e995ULL);
    double u1 = std::max(1e-12, static_cast<double>(h1 >> 11) * 0x1.0p-53);
    double u2 = static_cast<double>(h2 >> 11) * 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  };
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) {
      double fx = x / wavelength_px, fy = y / wavelength_px;
      long ix = static_cast<long>(std::floor(fx));
      long iy = static_cast<long>(std::floor(fy));
      double wx = detail::smoothstep(fx - ix), wy = detail::smoothstep(fy - iy);
      field(x, y) = (1 - wx) * (1 - wy) * lattice(ix, iy) +
                    wx * (1 - wy) * lattice(ix + 1, iy) +
                    (1 - wx) * wy * lattice(ix, iy + 1) +
                    wx * wy * lattice(ix + 1, iy + 1);
    }
  double mean = 0.0;
  for (std::size_t i = 0; i < field.size(); ++i) mean += field[i];
  mean /= static_cast<double>(field.size());
  double var = 0.0;
  for (std::size_t i = 0; i < field.size(); ++i) {
    field[i] -= mean;
    var += field[i] * field[i];
  }
  var /= static_cast<double>(field.size());
  if (var > 0.0) {
    double inv_std = 1.0 / std::sqrt(var);
    for (std::size_t i = 0; i < field.size(); ++i) field[i] *= inv_std;
  }
  return field;
}

}  // namespace mwdepth
