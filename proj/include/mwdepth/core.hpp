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

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace mwdepth {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

// Thrown for malformed inputs (bad dimensions, bad files, bad config).
struct InputError : std::runtime_error {
  explicit InputError(const std::string& msg) : std::runtime_error(msg) {}
};

// Thrown when the geometry does not admit a solution (no valid Manhattan
// frame, rank-deficient plane fit, diverged refinement).
struct DegenerateError : std::runtime_error {
  explicit DegenerateError(const std::string& msg) : std::runtime_error(msg) {}
};

// Thrown by file readers; message names the offending byte offset.
struct FormatError : InputError {
  explicit FormatError(const std::string& msg) : InputError(msg) {}
};

// Dense row-major H x W field. (x, y) = (column, row), origin at the
// top-left pixel center.
template <typename T>
class Grid {
 public:
  Grid() = default;
  Grid(int width, int height, const T& fill = T{})
      : width_(width), height_(height),
        data_(static_cast<std::size_t>(width) * height, fill) {
    if (width <= 0 || height <= 0)
      throw InputError("Grid: dimensions must be positive");
  }

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  bool in_bounds(int x, int y) const {
    return x >= 0 && x < width_ && y >= 0 && y < height_;
  }

  T& operator()(int x, int y) { return data_[index(x, y)]; }
  const T& operator()(int x, int y) const { return data_[index(x, y)]; }

  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * width_ + x;
  }
  int index_x(std::size_t i) const { return static_cast<int>(i % width_); }
  int index_y(std::size_t i) const { return static_cast<int>(i / width_); }

  const std::vector<T>& data() const { return data_; }
  std::vector<T>& data() { return data_; }

  bool same_shape(int w, int h) const { return width_ == w && height_ == h; }
  template <typename U>
  bool same_shape(const Grid<U>& other) const {
    return same_shape(other.width(), other.height());
  }

  void fill(const T& value) { data_.assign(data_.size(), value); }

  bool operator==(const Grid&) const = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<T> data_;
};

using Mask = Grid<std::uint8_t>;

inline std::size_t count_on(const Mask& m) {
  std::size_t n = 0;
  for (std::size_t i = 0; i < m.size(); ++i) n += (m[i] != 0);
  return n;
}

// Strictly positive depth (meters) wherever valid.
struct DepthMap {
  Grid<double> values;
  Mask valid;

  DepthMap() = default;
  DepthMap(int width, int height, double fill = 0.0, bool all_valid = false)
      : values(width, height, fill),
        valid(width, height, all_valid ? 1 : 0) {}

  int width() const { return values.width(); }
  int height() const { return values.height(); }

  void check() const {
    if (!values.same_shape(valid))
      throw InputError("DepthMap: value/valid shape mismatch");
    for (std::size_t i = 0; i < values.size(); ++i)
      if (valid[i] && !(values[i] > 0.0 && std::isfinite(values[i])))
        throw InputError("DepthMap: non-positive or non-finite depth at valid pixel");
  }
};

// Per-pixel 3D points in the camera frame; points(x,y).z() equals the depth.
struct PointMap {
  Grid<Vec3> points;
  Mask valid;

  int width() const { return points.width(); }
  int height() const { return points.height(); }
};

// Per-pixel unit normals, camera-facing (n . X < 0) wherever valid.
struct NormalMap {
  Grid<Vec3> normals;
  Mask valid;

  int width() const { return normals.width(); }
  int height() const { return normals.height(); }
};

// RGB image, channels in [0, 1].
using RgbImage = Grid<Vec3>;

// Single scalar loss term with an optional gradient field w.r.t. depth.
struct LossTerm {
  double value = 0.0;
  Grid<double> grad;  // empty unless requested

  bool has_grad() const { return !grad.empty(); }
};

namespace detail {

// splitmix64: tiny deterministic generator used for seeded noise and
// texture hashing, identical output on every platform.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t hash_combine(std::uint64_t a, std::uint64_t b) {
  std::uint64_t s = a + 0x9e3779b97f4a7c15ULL * (b + 1);
  return splitmix64(s);
}

}  // namespace detail

// Deterministic RNG for seeded scene noise and tests.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() { return detail::splitmix64(state_); }

  // uniform in [0, 1)
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // standard normal via Box-Muller
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = 0.0;
    while (u1 <= 0.0) u1 = uniform();
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 2.0 * M_PI * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  int uniform_int(int lo, int hi) {  // inclusive bounds
    return lo + static_cast<int>(next_u64() % static_cast<std::uint64_t>(hi - lo + 1));
  }

 private:
  std::uint64_t state_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace mwdepth
