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

#include <filesystem>

namespace mwdepth {
namespace {

namespace fs = std::filesystem;

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("mwdepth_io_test_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter()++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  static int& counter() {
    static int c = 0;
    return c;
  }
};

TEST(Pfm, GrayRoundTripIsBitExact) {
  // writing float-valued data back out must reproduce the payload byte for
  // byte, and reading it again must reproduce the values bit for bit
  TempDir tmp;
  Rng rng(5);
  Grid<double> map(16, 16, 0.0);
  for (std::size_t i = 0; i < map.size(); ++i) map[i] = rng.uniform(0.1, 9.0);
  fs::path p = tmp.path / "d.pfm";
  write_pfm(p, map);
  Grid<double> once = read_pfm_gray(p);
  fs::path p2 = tmp.path / "d2.pfm";
  write_pfm(p2, once);
  EXPECT_EQ(read_file_bytes(p), read_file_bytes(p2));
  Grid<double> twice = read_pfm_gray(p2);
  EXPECT_EQ(once, twice);
  for (std::size_t i = 0; i < map.size(); ++i)
    EXPECT_NEAR(once[i], map[i], 1e-6 * std::abs(map[i]));
}

TEST(Pfm, RgbRoundTripIsBitExact) {
  TempDir tmp;
  Rng rng(7);
  Grid<Vec3> map(8, 12, Vec3::Zero());
  for (std::size_t i = 0; i < map.size(); ++i)
    map[i] = Vec3(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
  fs::path p = tmp.path / "n.pfm";
  write_pfm(p, map);
  Grid<Vec3> once = read_pfm_rgb(p);
  fs::path p2 = tmp.path / "n2.pfm";
  write_pfm(p2, once);
  EXPECT_EQ(read_file_bytes(p), read_file_bytes(p2));
  EXPECT_EQ(once, read_pfm_rgb(p2));
}

TEST(Pfm, ScaleFieldIsLittleEndian) {
  TempDir tmp;
  Grid<double> map(2, 2, 1.5);
  fs::path p = tmp.path / "d.pfm";
  write_pfm(p, map);
  auto bytes = read_file_bytes(p);
  std::string header(bytes.begin(), bytes.begin() + 12);
  EXPECT_NE(header.find("-1.0"), std::string::npos);
}

TEST(Pfm, TruncatedPayloadNamesByteOffset) {
  TempDir tmp;
  Grid<double> map(4, 4, 1.25);
  fs::path p = tmp.path / "d.pfm";
  write_pfm(p, map);
  auto bytes = read_file_bytes(p);
  bytes.resize(bytes.size() - 7);
  fs::path cut = tmp.path / "cut.pfm";
  write_file_bytes(cut, bytes.data(), bytes.size());
  try {
    read_pfm_gray(cut);
    FAIL() << "expected FormatError";
  } catch (const FormatError& e) {
    std::string msg = e.what();
    EXPECT_NE(msg.find("truncated payload at byte " + std::to_string(bytes.size())),
              std::string::npos)
        << msg;
  }
}

TEST(Pfm, MalformedHeaderIsAFormatError) {
  TempDir tmp;
  fs::path p = tmp.path / "bad.pfm";
  std::string junk = "P6\n4 4\n255\n";
  write_file_bytes(p, junk.data(), junk.size());
  EXPECT_THROW(read_pfm_gray(p), FormatError);
}

TEST(Png, RgbRoundTrip) {
  TempDir tmp;
  Rng rng(11);
  RgbImage img(9, 7, Vec3::Zero());
  for (std::size_t i = 0; i < img.size(); ++i) {
    // quantized colors survive the 8-bit round trip exactly
    img[i] = Vec3(std::round(rng.uniform() * 255) / 255.0,
                  std::round(rng.uniform() * 255) / 255.0,
                  std::round(rng.uniform() * 255) / 255.0);
  }
  fs::path p = tmp.path / "img.png";
  write_png_rgb8(p, img);
  RgbImage back = read_png_rgb8(p);
  ASSERT_TRUE(back.same_shape(img));
  for (std::size_t i = 0; i < img.size(); ++i)
    EXPECT_LT((img[i] - back[i]).cwiseAbs().maxCoeff(), 1e-12);
  // byte-determinism
  fs::path p2 = tmp.path / "img2.png";
  write_png_rgb8(p2, back);
  EXPECT_EQ(read_file_bytes(p), read_file_bytes(p2));
}

TEST(Png, MaskRoundTrip) {
  TempDir tmp;
  Rng rng(13);
  Mask mask(10, 6, 0);
  for (std::size_t i = 0; i < mask.size(); ++i) mask[i] = rng.uniform() < 0.5;
  fs::path p = tmp.path / "mask.png";
  write_png_mask(p, mask);
  EXPECT_EQ(mask, read_png_mask(p));
}

TEST(Png, LabelRoundTripSixteenBit) {
  TempDir tmp;
  Rng rng(15);
  Grid<std::uint16_t> labels(12, 5, 0);
  for (std::size_t i = 0; i < labels.size(); ++i)
    labels[i] = static_cast<std::uint16_t>(rng.next_u64() % 40000);
  fs::path p = tmp.path / "labels.png";
  write_png_labels(p, labels);
  EXPECT_EQ(labels, read_png_labels(p));
}

TEST(Png, WrongFormatRejected) {
  TempDir tmp;
  Mask mask(4, 4, 1);
  fs::path p = tmp.path / "mask.png";
  write_png_mask(p, mask);
  EXPECT_THROW(read_png_rgb8(p), FormatError);
  EXPECT_THROW(read_png_labels(p), FormatError);
}

TEST(Json, IntrinsicsRoundTrip) {
  TempDir tmp;
  CameraIntrinsics k;
  k.fx = 517.3;
  k.fy = 516.5;
  k.cx = 318.6;
  k.cy = 255.3;
  k.width = 640;
  k.height = 480;
  fs::path p = tmp.path / "k.json";
  write_json(p, to_json(k));
  CameraIntrinsics back = intrinsics_from_json(read_json(p));
  EXPECT_EQ(back.fx, k.fx);
  EXPECT_EQ(back.cy, k.cy);
  EXPECT_EQ(back.width, k.width);
}

TEST(Json, LosslessDoubleSerialization) {
  TempDir tmp;
  double v = 0.1 + 1e-17 + M_PI * 1e-3;
  fs::path p = tmp.path / "v.json";
  write_json(p, json{{"v", v}});
  EXPECT_EQ(read_json(p).at("v").get<double>(), v);
}

TEST(Json, PoseRoundTripAndValidation) {
  TempDir tmp;
  Pose pose = mwtest::make_pose(mwtest::rotation_xyz(0.2, -0.4, 0.9), Vec3(1, 2, 3));
  fs::path p = tmp.path / "pose.json";
  write_json(p, to_json(pose));
  Pose back = pose_from_json(read_json(p));
  EXPECT_LT((back.rotation - pose.rotation).norm(), 1e-15);
  EXPECT_LT((back.translation - pose.translation).norm(), 1e-15);
  json bad = to_json(pose);
  bad["R"][0] = 5.0;
  EXPECT_THROW(pose_from_json(bad), InputError);
}

TEST(Json, UnknownKeysRejected) {
  json j = {{"fx", 10.0}, {"fy", 10.0}, {"cx", 5.0}, {"cy", 5.0},
            {"width", 10}, {"height", 10}, {"surprise", 1}};
  EXPECT_THROW(intrinsics_from_json(j), InputError);
}

TEST(Json, LinesRoundTrip) {
  std::vector<LineSegment> lines = {{{0.5, 1.5}, {10.25, 20.75}},
                                    {{3, 4}, {5, 6}}};
  auto back = lines_from_json(to_json(lines));
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0].p1.x(), 10.25);
}

TEST(Json, DirectionsRoundTripAndValidation) {
  DominantDirections dirs;
  Mat3 rot = mwtest::rotation_xyz(0.1, 0.2, 0.3);
  dirs.dirs = {rot.col(0), rot.col(1), rot.col(2)};
  auto back = directions_from_json(to_json(dirs));
  for (int i = 0; i < 3; ++i) EXPECT_LT((back.dirs[i] - dirs.dirs[i]).norm(), 1e-15);
  json bad = to_json(dirs);
  bad[1] = {1.0, 0.0, 0.0};  // no longer orthogonal to entry 0? make it parallel
  bad[0] = {1.0, 0.0, 0.0};
  EXPECT_THROW(directions_from_json(bad), InputError);
}

TEST(SceneBundle, RoundTripThroughDirectory) {
  TempDir tmp;
  SceneSpec spec;
  spec.extents = Vec3(4, 3, 5);
  spec.intrinsics = mwtest::square_camera(24, 30.0);
  spec.poses.push_back(mwtest::make_pose(Mat3::Identity(), Vec3(2, 1.5, 1)));
  spec.poses.push_back(mwtest::make_pose(
      mwtest::rotation_xyz(0, 0.03, 0).transpose(), Vec3(2.05, 1.5, 1.02)));
  spec.seed = 3;
  for (auto& tex : spec.face_textures) tex.kind = TextureSpec::Kind::kNoise;
  SceneRender render = generate_room(spec);
  write_scene_bundle(tmp.path, spec, render);
  SceneBundle bundle = read_scene_bundle(tmp.path);
  ASSERT_EQ(bundle.images.size(), 2u);
  // depth survives the float32 container to within float precision
  for (std::size_t i = 0; i < bundle.depths[0].values.size(); ++i)
    EXPECT_NEAR(bundle.depths[0].values[i], render.views[0].depth.values[i],
                1e-6 * render.views[0].depth.values[i]);
  EXPECT_TRUE(bundle.intrinsics.fx == spec.intrinsics.fx);
  EXPECT_EQ(bundle.lines[0].size(), render.views[0].lines.size());
  // scene spec serialization round-trips
  SceneSpec spec2 = scene_spec_from_json(to_json(spec));
  EXPECT_EQ(spec2.seed, spec.seed);
  EXPECT_EQ(spec2.poses.size(), spec.poses.size());
}

TEST(HistoryCsv, WritesOneRowPerEpoch) {
  TempDir tmp;
  std::vector<EpochRecord> history(3);
  for (int i = 0; i < 3; ++i) {
    history[i].epoch = i;
    history[i].total = 0.5 / (i + 1);
    history[i].absrel = 0.1 * i;
  }
  fs::path p = tmp.path / "history.csv";
  write_history_csv(p, history);
  auto bytes = read_file_bytes(p);
  std::string text(bytes.begin(), bytes.end());
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 4);  // header + 3 rows
  EXPECT_NE(text.find("epoch,photo,smooth,norm,plane,total,absrel,rms"),
            std::string::npos);
}

}  // namespace
}  // namespace mwdepth
