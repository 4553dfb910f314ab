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

using mwtest::make_pose;
using mwtest::rotation_xyz;

SceneSpec basic_spec(int size = 32) {
  SceneSpec spec;
  spec.extents = Vec3(4.0, 3.0, 5.0);
  spec.intrinsics = mwtest::square_camera(size, size * 1.1);
  spec.poses.push_back(make_pose(Mat3::Identity(), Vec3(2.0, 1.5, 1.0)));
  return spec;
}

TEST(GenerateRoom, CenterPixelHitsFarWall) {
  SceneSpec spec = basic_spec();
  SceneRender r = generate_room(spec);
  const SceneView& v = r.views[0];
  int cx = static_cast<int>(spec.intrinsics.cx);
  int cy = static_cast<int>(spec.intrinsics.cy);
  EXPECT_NEAR(v.depth.values(cx, cy), 5.0 - 1.0, 1e-12);
  EXPECT_TRUE(v.normals.normals(cx, cy).isApprox(Vec3(0, 0, -1), 1e-12));
  EXPECT_EQ(v.plane_ids(cx, cy), 6);  // z+ face
}

TEST(GenerateRoom, CameraOutsideIsAnError) {
  SceneSpec spec = basic_spec();
  spec.poses[0] = make_pose(Mat3::Identity(), Vec3(-1.0, 1.5, 1.0));
  EXPECT_THROW(generate_room(spec), InputError);
}

TEST(GenerateRoom, PointsLieOnTheirLabeledPlanes) {
  SceneSpec spec = basic_spec();
  Mat3 rot = rotation_xyz(-0.4, 0.7, 0.1);
  spec.poses[0] = make_pose(rot.transpose(), Vec3(2.5, 1.2, 2.0));
  SceneRender r = generate_room(spec);
  const SceneView& v = r.views[0];
  Pose cam_to_world = spec.poses[0].inverse();
  PointMap pts = backproject(v.depth, spec.intrinsics);
  for (int y = 0; y < 32; ++y)
    for (int x = 0; x < 32; ++x) {
      ASSERT_TRUE(v.depth.valid(x, y));
      Vec3 pw = cam_to_world.apply(pts.points(x, y));
      int face = v.plane_ids(x, y);
      ASSERT_GE(face, 1);
      ASSERT_LE(face, 6);
      int axis = (face - 1) / 2;
      double bound = (face % 2 == 0) ? spec.extents[axis] : 0.0;
      EXPECT_NEAR(pw[axis], bound, 1e-9);
    }
}

TEST(GenerateRoom, DepthNormalsConsistent) {
  SceneSpec spec = basic_spec(48);
  Mat3 rot = rotation_xyz(-0.3, 0.5, 0.0);
  spec.poses[0] = make_pose(rot.transpose(), Vec3(2.0, 1.5, 2.5));
  SceneRender r = generate_room(spec);
  const SceneView& v = r.views[0];
  NormalMap computed = compute_normals(backproject(v.depth, spec.intrinsics));
  // away from face creases the computed normals match the analytic ones
  std::size_t checked = 0;
  for (int y = 4; y < 44; ++y)
    for (int x = 4; x < 44; ++x) {
      if (!computed.valid(x, y)) continue;
      bool interior = true;
      for (int dy = -3; dy <= 3 && interior; ++dy)
        for (int dx = -3; dx <= 3 && interior; ++dx)
          interior = v.plane_ids(x + dx, y + dy) == v.plane_ids(x, y);
      if (!interior) continue;
      double c = computed.normals(x, y).dot(v.normals.normals(x, y));
      EXPECT_GT(c, 0.999999);
      ++checked;
    }
  EXPECT_GT(checked, 500u);
}

TEST(GenerateRoom, EdgeLinesRecoverRoomAxes) {
  SceneSpec spec = basic_spec(64);
  Mat3 rot = rotation_xyz(-0.35, 0.6, 0.05);
  spec.poses[0] = make_pose(rot.transpose(), Vec3(2.6, 1.1, 2.2));
  SceneRender r = generate_room(spec);
  const SceneView& v = r.views[0];
  ASSERT_GE(v.lines.size(), 4u);
  auto result = estimate_dominant_directions(v.lines, spec.intrinsics, 2.0);
  DominantDirections truth = room_axes_in_camera(spec.poses[0]);
  for (int i = 0; i < 3; ++i) {
    double best = 0.0;
    for (int j = 0; j < 3; ++j)
      best = std::max(best, std::abs(truth.dirs[i].dot(result.directions.dirs[j])));
    EXPECT_LT(std::acos(std::min(1.0, best)) * 180.0 / M_PI, 1e-6);
  }
}

TEST(GenerateRoom, TwoViewWarpConsistency) {
  SceneSpec spec = basic_spec(32);
  spec.seed = 11;
  for (auto& tex : spec.face_textures) {
    tex.kind = TextureSpec::Kind::kNoise;
    tex.color1 = Vec3(0.1, 0.15, 0.2);
    tex.color2 = Vec3(0.9, 0.8, 0.85);
    tex.scale = 0.5;
  }
  spec.poses.push_back(make_pose(rotation_xyz(0.0, 0.025, 0.0).transpose(),
                                 Vec3(2.05, 1.47, 1.04)));
  SceneRender r = generate_room(spec);
  Pose rel = relative_pose(spec.poses[0], spec.poses[1]);
  PatchSet patches = make_patch_set(32, 32, {3, 1, 2});
  WarpedPatches wp = warp_patches(r.views[1].image, r.views[0].depth, rel,
                                  spec.intrinsics, patches);
  double err = 0.0;
  std::size_t n = 0;
  for (std::size_t ai = 0; ai < patches.anchors.size(); ++ai) {
    if (!wp.patch_ok[ai]) continue;
    for (std::size_t oi = 0; oi < patches.offsets.size(); ++oi) {
      auto [ax, ay] = patches.anchors[ai];
      Vec3 expect = r.views[0].image(ax + patches.offsets[oi].first,
                                     ay + patches.offsets[oi].second);
      err += (wp.samples[ai][oi].color - expect).cwiseAbs().sum() / 3.0;
      ++n;
    }
  }
  ASSERT_GT(n, 200u);
  EXPECT_LT(err / n, 2.0 / 255.0);
}

TEST(GenerateRoom, DeterministicGivenSeed) {
  SceneSpec spec = basic_spec(24);
  spec.seed = 1234;
  for (auto& tex : spec.face_textures) tex.kind = TextureSpec::Kind::kNoise;
  SceneRender a = generate_room(spec);
  SceneRender b = generate_room(spec);
  EXPECT_EQ(a.views[0].image, b.views[0].image);
  EXPECT_EQ(a.views[0].depth.values, b.views[0].depth.values);
  // a different seed changes the noise texture
  spec.seed = 4321;
  SceneRender c = generate_room(spec);
  EXPECT_NE(a.views[0].image, c.views[0].image);
}

TEST(GenerateRoom, CheckerTextureFollowsPlaneCoordinates) {
  SceneSpec spec = basic_spec(32);
  spec.face_textures[5].kind = TextureSpec::Kind::kChecker;
  spec.face_textures[5].color1 = Vec3(1, 1, 1);
  spec.face_textures[5].color2 = Vec3(0, 0, 0);
  spec.face_textures[5].scale = 1.0;
  SceneRender r = generate_room(spec);
  const SceneView& v = r.views[0];
  Pose cam_to_world = spec.poses[0].inverse();
  PointMap pts = backproject(v.depth, spec.intrinsics);
  for (int y = 0; y < 32; y += 5)
    for (int x = 0; x < 32; x += 5) {
      if (v.plane_ids(x, y) != 6) continue;
      Vec3 pw = cam_to_world.apply(pts.points(x, y));
      long parity = (static_cast<long>(std::floor(pw.x())) +
                     static_cast<long>(std::floor(pw.y()))) &
                    1;
      Vec3 expect = parity == 0 ? Vec3(1, 1, 1) : Vec3(0, 0, 0);
      EXPECT_TRUE(v.image(x, y).isApprox(expect));
    }
}

TEST(GenerateRoom, SlantPanelBreaksManhattanAssumption) {
  SceneSpec spec = basic_spec(32);
  SlantSpec slant;
  slant.point = Vec3(2.0, 1.5, 4.0);
  slant.normal = Vec3(0.3, 0.2, -1.0).normalized();
  spec.slant = slant;
  SceneRender r = generate_room(spec);
  const SceneView& v = r.views[0];
  int hits = 0;
  for (std::size_t i = 0; i < v.plane_ids.size(); ++i)
    if (v.plane_ids[i] == 7) ++hits;
  EXPECT_GT(hits, 50);
  // the slant's rendered normal is none of the room axes
  for (std::size_t i = 0; i < v.plane_ids.size(); ++i)
    if (v.plane_ids[i] == 7) {
      const Vec3& n = v.normals.normals[i];
      DominantDirections axes = room_axes_in_camera(spec.poses[0]);
      for (const Vec3& d : axes.dirs) EXPECT_LT(std::abs(n.dot(d)), 0.999);
      break;
    }
}

TEST(SmoothNoiseField, NormalizedAndDeterministic) {
  Grid<double> a = smooth_noise_field(64, 48, 8.0, 5);
  Grid<double> b = smooth_noise_field(64, 48, 8.0, 5);
  EXPECT_EQ(a, b);
  double mean = 0.0, var = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) mean += a[i];
  mean /= static_cast<double>(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) var += (a[i] - mean) * (a[i] - mean);
  var /= static_cast<double>(a.size());
  EXPECT_NEAR(mean, 0.0, 1e-12);
  EXPECT_NEAR(var, 1.0, 1e-9);
}

}  // namespace
}  // namespace mwdepth
