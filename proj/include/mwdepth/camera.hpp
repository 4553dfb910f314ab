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

namespace mwdepth {

// Pinhole camera. Pixel coordinates are pixel-center, origin at the
// top-left pixel center, x along columns and y along rows.
struct CameraIntrinsics {
  double fx = 0.0, fy = 0.0;
  double cx = 0.0, cy = 0.0;
  int width = 0, height = 0;

  void check() const {
    if (!(fx > 0.0) || !(fy > 0.0))
      throw InputError("CameraIntrinsics: focal lengths must be positive");
    if (width <= 0 || height <= 0)
      throw InputError("CameraIntrinsics: image size must be positive");
    if (!(cx > 0.0 && cx < width) || !(cy > 0.0 && cy < height))
      throw InputError("CameraIntrinsics: principal point outside image");
  }

  Mat3 matrix() const {
    Mat3 k;
    k << fx, 0, cx, 0, fy, cy, 0, 0, 1;
    return k;
  }

  // K^-1 (u, v, 1)^T; the point at unit depth along the pixel's ray.
  Vec3 ray(double u, double v) const {
    return {(u - cx) / fx, (v - cy) / fy, 1.0};
  }

  // Perspective projection of a camera-frame point with z > 0.
  Vec2 project(const Vec3& p) const {
    return {fx * p.x() / p.z() + cx, fy * p.y() / p.z() + cy};
  }
};

// Rigid transform X_dst = R X_src + t.
struct Pose {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  void check() const {
    if ((rotation.transpose() * rotation - Mat3::Identity()).norm() > 1e-9)
      throw InputError("Pose: rotation is not orthonormal");
    if (std::abs(rotation.determinant() - 1.0) > 1e-9)
      throw InputError("Pose: rotation determinant != +1");
  }

  Vec3 apply(const Vec3& p) const { return rotation * p + translation; }

  Pose inverse() const {
    Pose inv;
    inv.rotation = rotation.transpose();
    inv.translation = -(rotation.transpose() * translation);
    return inv;
  }

  // Composition: (*this) after other, i.e. X -> this(other(X)).
  Pose compose(const Pose& other) const {
    Pose out;
    out.rotation = rotation * other.rotation;
    out.translation = rotation * other.translation + translation;
    return out;
  }
};

// Relative pose mapping frame `from` into frame `to`, both given as
// world-to-camera transforms.
inline Pose relative_pose(const Pose& world_to_from, const Pose& world_to_to) {
  return world_to_to.compose(world_to_from.inverse());
}

}  // namespace mwdepth
