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
#include "mwdepth/manhattan.hpp"
#include "mwdepth/metrics.hpp"
#include "mwdepth/optimize.hpp"
#include "mwdepth/photometric.hpp"
#include "mwdepth/plane.hpp"
#include "mwdepth/segmentation.hpp"
#include "mwdepth/synth.hpp"

#include <nlohmann/json.hpp>
#include <png.h>

#include <bit>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace mwdepth {

using json = nlohmann::json;

// ---------------------------------------------------------------------------
// raw file helpers

inline std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file_bytes(const std::filesystem::path& path,
                             const void* data, std::size_t size) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot open " + path.string() + " for writing");
  out.write(static_cast<const char*>(data), static_cast<std::streamsize>(size));
  if (!out) throw InputError("write failed: " + path.string());
}

// ---------------------------------------------------------------------------
// PFM: float maps, scale -1.0 (little-endian), rows stored bottom-to-top

namespace detail {

static_assert(std::endian::native == std::endian::little,
              "PFM writer assumes a little-endian host");

inline void pfm_append_row(std::string& out, const float* row, std::size_t count) {
  out.append(reinterpret_cast<const char*>(row), count * sizeof(float));
}

struct PfmHeader {
  int channels = 0;
  int width = 0, height = 0;
  double scale = 0.0;
  std::size_t data_offset = 0;
};

inline PfmHeader parse_pfm_header(const std::vector<std::uint8_t>& bytes,
                                  const std::string& name) {
  PfmHeader hd;
  std::size_t pos = 0;
  auto fail = [&](const std::string& what) {
    throw FormatError("pfm: " + what + " at byte " + std::to_string(pos) + " in " +
                      name);
  };
  auto skip_ws = [&] {
    while (pos < bytes.size() && std::isspace(bytes[pos])) ++pos;
  };
  auto token = [&]() -> std::string {
    skip_ws();
    std::size_t start = pos;
    while (pos < bytes.size() && !std::isspace(bytes[pos])) ++pos;
    if (pos == start) fail("missing header token");
    return std::string(bytes.begin() + start, bytes.begin() + pos);
  };
  std::string magic = token();
  if (magic == "PF")
    hd.channels = 3;
  else if (magic == "Pf")
    hd.channels = 1;
  else
    fail("bad magic '" + magic + "'");
  try {
    hd.width = std::stoi(token());
    hd.height = std::stoi(token());
    hd.scale = std::stod(token());
  } catch (const std::exception&) {
    fail("malformed dimension or scale");
  }
  if (hd.width <= 0 || hd.height <= 0) fail("non-positive dimensions");
  if (hd.scale == 0.0) fail("zero scale");
  // exactly one whitespace byte separates the header from the payload
  if (pos >= bytes.size() || !std::isspace(bytes[pos])) fail("missing separator");
  ++pos;
  hd.data_offset = pos;
  return hd;
}

inline std::vector<float> read_pfm_payload(const std::vector<std::uint8_t>& bytes,
                                           const PfmHeader& hd,
                                           const std::string& name) {
  std::size_t count = static_cast<std::size_t>(hd.width) * hd.height * hd.channels;
  std::size_t need = count * sizeof(float);
  if (bytes.size() - hd.data_offset < need)
    throw FormatError("pfm: truncated payload at byte " + std::to_string(bytes.size()) +
                      " (expected " + std::to_string(hd.data_offset + need) +
                      " bytes) in " + name);
  std::vector<float> vals(count);
  std::memcpy(vals.data(), bytes.data() + hd.data_offset, need);
  if (hd.scale > 0.0) {  // big-endian payload
    for (float& f : vals) {
      std::uint32_t u;
      std::memcpy(&u, &f, 4);
      u = __builtin_bswap32(u);
      std::memcpy(&f, &u, 4);
    }
  }
  return vals;
}

}  // namespace detail

inline void write_pfm(const std::filesystem::path& path, const Grid<double>& map) {
  std::string out = "Pf\n" + std::to_string(map.width()) + " " +
                    std::to_string(map.height()) + "\n-1.0\n";
  std::vector<float> row(map.width());
  for (int y = map.height() - 1; y >= 0; --y) {
    for (int x = 0; x < map.width(); ++x) row[x] = static_cast<float>(map(x, y));
    detail::pfm_append_row(out, row.data(), row.size());
  }
  write_file_bytes(path, out.data(), out.size());
}

inline void write_pfm(const std::filesystem::path& path, const Grid<Vec3>& map) {
  std::string out = "PF\n" + std::to_string(map.width()) + " " +
                    std::to_string(map.height()) + "\n-1.0\n";
  std::vector<float> row(static_cast<std::size_t>(map.width()) * 3);
  for (int y = map.height() - 1; y >= 0; --y) {
    for (int x = 0; x < map.width(); ++x)
      for (int c = 0; c < 3; ++c)
        row[3 * x + c] = static_cast<float>(map(x, y)[c]);
    detail::pfm_append_row(out, row.data(), row.size());
  }
  write_file_bytes(path, out.data(), out.size());
}

inline Grid<double> read_pfm_gray(const std::filesystem::path& path) {
  auto bytes = read_file_bytes(path);
  auto hd = detail::parse_pfm_header(bytes, path.string());
  if (hd.channels != 1)
    throw FormatError("pfm: expected grayscale map in " + path.string());
  auto vals = detail::read_pfm_payload(bytes, hd, path.string());
  Grid<double> map(hd.width, hd.height, 0.0);
  for (int y = 0; y < hd.height; ++y)
    for (int x = 0; x < hd.width; ++x)
      map(x, y) = vals[static_cast<std::size_t>(hd.height - 1 - y) * hd.width + x];
  return map;
}

inline Grid<Vec3> read_pfm_rgb(const std::filesystem::path& path) {
  auto bytes = read_file_bytes(path);
  auto hd = detail::parse_pfm_header(bytes, path.string());
  if (hd.channels != 3)
    throw FormatError("pfm: expected 3-channel map in " + path.string());
  auto vals = detail::read_pfm_payload(bytes, hd, path.string());
  Grid<Vec3> map(hd.width, hd.height, Vec3::Zero());
  for (int y = 0; y < hd.height; ++y)
    for (int x = 0; x < hd.width; ++x) {
      std::size_t base =
          (static_cast<std::size_t>(hd.height - 1 - y) * hd.width + x) * 3;
      map(x, y) = Vec3(vals[base], vals[base + 1], vals[base + 2]);
    }
  return map;
}

// ---------------------------------------------------------------------------
// PNG via libpng: 8-bit RGB images, 8-bit 0/255 masks, 16-bit label maps

namespace detail {

struct PngWriter {
  png_structp png = nullptr;
  png_infop info = nullptr;
  std::FILE* fp = nullptr;

  PngWriter(const std::filesystem::path& path, int width, int height, int bit_depth,
            int color_type) {
    fp = std::fopen(path.string().c_str(), "wb");
    if (!fp) throw InputError("cannot open " + path.string() + " for writing");
    png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
      cleanup();
      throw InputError("png: allocation failure");
    }
    if (setjmp(png_jmpbuf(png))) {
      cleanup();
      throw FormatError("png: write error for " + path.string());
    }
    png_init_io(png, fp);
    png_set_IHDR(png, info, width, height, bit_depth, color_type,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
  }
  void write_rows(std::vector<png_bytep>& rows) {
    if (setjmp(png_jmpbuf(png))) {
      cleanup();
      throw FormatError("png: write error");
    }
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
  }
  void cleanup() {
    if (png) png_destroy_write_struct(&png, info ? &info : nullptr);
    if (fp) std::fclose(fp);
    png = nullptr;
    info = nullptr;
    fp = nullptr;
  }
  ~PngWriter() { cleanup(); }
};

struct PngReader {
  png_structp png = nullptr;
  png_infop info = nullptr;
  std::FILE* fp = nullptr;
  int width = 0, height = 0, bit_depth = 0, color_type = 0;

  explicit PngReader(const std::filesystem::path& path) {
    fp = std::fopen(path.string().c_str(), "rb");
    if (!fp) throw InputError("cannot open " + path.string());
    png_byte sig[8];
    if (std::fread(sig, 1, 8, fp) != 8 || png_sig_cmp(sig, 0, 8) != 0) {
      std::fclose(fp);
      fp = nullptr;
      throw FormatError("png: bad signature at byte 0 in " + path.string());
    }
    png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
      cleanup();
      throw InputError("png: allocation failure");
    }
    if (setjmp(png_jmpbuf(png))) {
      cleanup();
      throw FormatError("png: corrupt stream in " + path.string());
    }
    png_init_io(png, fp);
    png_set_sig_bytes(png, 8);
    png_read_info(png, info);
    width = static_cast<int>(png_get_image_width(png, info));
    height = static_cast<int>(png_get_image_height(png, info));
    bit_depth = png_get_bit_depth(png, info);
    color_type = png_get_color_type(png, info);
  }
  void read_rows(std::vector<png_bytep>& rows) {
    if (setjmp(png_jmpbuf(png))) {
      cleanup();
      throw FormatError("png: corrupt payload");
    }
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
  }
  void cleanup() {
    if (png) png_destroy_read_struct(&png, info ? &info : nullptr, nullptr);
    if (fp) std::fclose(fp);
    png = nullptr;
    info = nullptr;
    fp = nullptr;
  }
  ~PngReader() { cleanup(); }
};

}  // namespace detail

inline void write_png_rgb8(const std::filesystem::path& path, const RgbImage& img) {
  const int w = img.width(), h = img.height();
  std::vector<png_byte> buf(static_cast<std::size_t>(w) * h * 3);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c) {
        double v = std::clamp(img(x, y)[c], 0.0, 1.0);
        buf[(static_cast<std::size_t>(y) * w + x) * 3 + c] =
            static_cast<png_byte>(std::lround(v * 255.0));
      }
  std::vector<png_bytep> rows(h);
  for (int y = 0; y < h; ++y) rows[y] = buf.data() + static_cast<std::size_t>(y) * w * 3;
  detail::PngWriter writer(path, w, h, 8, PNG_COLOR_TYPE_RGB);
  writer.write_rows(rows);
}

inline RgbImage read_png_rgb8(const std::filesystem::path& path) {
  detail::PngReader reader(path);
  if (reader.bit_depth != 8 || reader.color_type != PNG_COLOR_TYPE_RGB)
    throw FormatError("png: expected 8-bit RGB in " + path.string());
  const int w = reader.width, h = reader.height;
  std::vector<png_byte> buf(static_cast<std::size_t>(w) * h * 3);
  std::vector<png_bytep> rows(h);
  for (int y = 0; y < h; ++y) rows[y] = buf.data() + static_cast<std::size_t>(y) * w * 3;
  reader.read_rows(rows);
  RgbImage img(w, h, Vec3::Zero());
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c)
        img(x, y)[c] = buf[(static_cast<std::size_t>(y) * w + x) * 3 + c] / 255.0;
  return img;
}

inline void write_png_mask(const std::filesystem::path& path, const Mask& mask) {
  const int w = mask.width(), h = mask.height();
  std::vector<png_byte> buf(static_cast<std::size_t>(w) * h);
  for (std::size_t i = 0; i < buf.size(); ++i) buf[i] = mask[i] ? 255 : 0;
  std::vector<png_bytep> rows(h);
  for (int y = 0; y < h; ++y) rows[y] = buf.data() + static_cast<std::size_t>(y) * w;
  detail::PngWriter writer(path, w, h, 8, PNG_COLOR_TYPE_GRAY);
  writer.write_rows(rows);
}

inline Mask read_png_mask(const std::filesystem::path& path) {
  detail::PngReader reader(path);
  if (reader.bit_depth != 8 || reader.color_type != PNG_COLOR_TYPE_GRAY)
    throw FormatError("png: expected 8-bit grayscale in " + path.string());
  const int w = reader.width, h = reader.height;
  std::vector<png_byte> buf(static_cast<std::size_t>(w) * h);
  std::vector<png_bytep> rows(h);
  for (int y = 0; y < h; ++y) rows[y] = buf.data() + static_cast<std::size_t>(y) * w;
  reader.read_rows(rows);
  Mask mask(w, h, 0);
  for (std::size_t i = 0; i < buf.size(); ++i) mask[i] = buf[i] ? 1 : 0;
  return mask;
}

inline void write_png_labels(const std::filesystem::path& path,
                             const Grid<std::uint16_t>& labels) {
  const int w = labels.width(), h = labels.height();
  std::vector<png_byte> buf(static_cast<std::size_t>(w) * h * 2);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    buf[2 * i] = static_cast<png_byte>(labels[i] >> 8);  // network byte order
    buf[2 * i + 1] = static_cast<png_byte>(labels[i] & 0xff);
  }
  std::vector<png_bytep> rows(h);
  for (int y = 0; y < h; ++y)
    rows[y] = buf.data() + static_cast<std::size_t>(y) * w * 2;
  detail::PngWriter writer(path, w, h, 16, PNG_COLOR_TYPE_GRAY);
  writer.write_rows(rows);
}

inline Grid<std::uint16_t> read_png_labels(const std::filesystem::path& path) {
  detail::PngReader reader(path);
  if (reader.bit_depth != 16 || reader.color_type != PNG_COLOR_TYPE_GRAY)
    throw FormatError("png: expected 16-bit grayscale in " + path.string());
  const int w = reader.width, h = reader.height;
  std::vector<png_byte> buf(static_cast<std::size_t>(w) * h * 2);
  std::vector<png_bytep> rows(h);
  for (int y = 0; y < h; ++y)
    rows[y] = buf.data() + static_cast<std::size_t>(y) * w * 2;
  reader.read_rows(rows);
  Grid<std::uint16_t> labels(w, h, 0);
  for (std::size_t i = 0; i < labels.size(); ++i)
    labels[i] = static_cast<std::uint16_t>((buf[2 * i] << 8) | buf[2 * i + 1]);
  return labels;
}

// ---------------------------------------------------------------------------
// JSON (de)serialization with strict unknown-key rejection

inline void require_keys(const json& j, std::initializer_list<const char*> allowed,
                         const std::string& context) {
  if (!j.is_object()) throw InputError(context + ": expected a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* key : allowed)
      if (it.key() == key) {
        ok = true;
        break;
      }
    if (!ok) throw InputError(context + ": unknown key '" + it.key() + "'");
  }
}

inline json read_json(const std::filesystem::path& path) {
  auto bytes = read_file_bytes(path);
  json j = json::parse(bytes.begin(), bytes.end(), nullptr, false);
  if (j.is_discarded()) throw FormatError("json: parse error in " + path.string());
  return j;
}

inline void write_json(const std::filesystem::path& path, const json& j) {
  std::string text = j.dump(2);
  text.push_back('\n');
  write_file_bytes(path, text.data(), text.size());
}

inline json to_json(const CameraIntrinsics& k) {
  return {{"fx", k.fx}, {"fy", k.fy}, {"cx", k.cx}, {"cy", k.cy},
          {"width", k.width}, {"height", k.height}};
}

inline CameraIntrinsics intrinsics_from_json(const json& j) {
  require_keys(j, {"fx", "fy", "cx", "cy", "width", "height"}, "intrinsics");
  CameraIntrinsics k;
  k.fx = j.at("fx").get<double>();
  k.fy = j.at("fy").get<double>();
  k.cx = j.at("cx").get<double>();
  k.cy = j.at("cy").get<double>();
  k.width = j.at("width").get<int>();
  k.height = j.at("height").get<int>();
  k.check();
  return k;
}

inline json to_json(const Pose& pose) {
  json r = json::array();
  for (int i = 0; i < 3; ++i)
    for (int c = 0; c < 3; ++c) r.push_back(pose.rotation(i, c));
  return {{"R", r},
          {"t", {pose.translation.x(), pose.translation.y(), pose.translation.z()}}};
}

inline Pose pose_from_json(const json& j) {
  require_keys(j, {"R", "t"}, "pose");
  const json& r = j.at("R");
  const json& t = j.at("t");
  if (!r.is_array() || r.size() != 9 || !t.is_array() || t.size() != 3)
    throw InputError("pose: R must have 9 entries (row-major) and t 3");
  Pose pose;
  for (int i = 0; i < 3; ++i)
    for (int c = 0; c < 3; ++c) pose.rotation(i, c) = r[3 * i + c].get<double>();
  for (int i = 0; i < 3; ++i) pose.translation[i] = t[i].get<double>();
  pose.check();
  return pose;
}

inline json to_json(const std::vector<LineSegment>& lines) {
  json arr = json::array();
  for (const LineSegment& s : lines)
    arr.push_back({{"x0", s.p0.x()}, {"y0", s.p0.y()}, {"x1", s.p1.x()},
                   {"y1", s.p1.y()}});
  return arr;
}

inline std::vector<LineSegment> lines_from_json(const json& j) {
  if (!j.is_array()) throw InputError("lines: expected a JSON array");
  std::vector<LineSegment> lines;
  for (const json& e : j) {
    require_keys(e, {"x0", "y0", "x1", "y1"}, "line segment");
    LineSegment s{{e.at("x0").get<double>(), e.at("y0").get<double>()},
                  {e.at("x1").get<double>(), e.at("y1").get<double>()}};
    s.check();
    lines.push_back(s);
  }
  return lines;
}

inline json to_json(const DominantDirections& dirs) {
  json arr = json::array();
  for (const Vec3& d : dirs.dirs) arr.push_back({d.x(), d.y(), d.z()});
  return arr;
}

inline DominantDirections directions_from_json(const json& j) {
  if (!j.is_array() || j.size() != 3)
    throw InputError("directions: expected an array of three 3-vectors");
  DominantDirections dirs;
  for (int i = 0; i < 3; ++i) {
    const json& v = j[i];
    if (!v.is_array() || v.size() != 3)
      throw InputError("directions: entry is not a 3-vector");
    dirs.dirs[i] = Vec3(v[0].get<double>(), v[1].get<double>(), v[2].get<double>());
  }
  dirs.check();
  return dirs;
}

inline json to_json(const DepthMetrics& m) {
  return {{"rms", m.rms},       {"absrel", m.absrel}, {"log10", m.log10},
          {"delta1", m.delta1}, {"delta2", m.delta2}, {"delta3", m.delta3}};
}

inline json to_json(const NormalMetrics& m) {
  return {{"mean_deg", m.mean_deg},
          {"within_11_25", m.within_11_25},
          {"within_22_5", m.within_22_5},
          {"within_30", m.within_30}};
}

// Per-segment summary: id, area, mean aligned normal, plane parameters
// (null when the fit was degenerate).
inline json segments_to_json(const SegmentationResult& seg,
                             const AlignmentResult& align,
                             const PlaneSupervision& planes) {
  json arr = json::array();
  for (const auto& segment : seg.segments) {
    Vec3 mean_n = Vec3::Zero();
    int n = 0;
    for (std::int32_t idx : segment.pixels)
      if (align.valid[idx]) {
        mean_n += align.aligned[idx];
        ++n;
      }
    if (n > 0) {
      mean_n /= n;
      double len = mean_n.norm();
      if (len > 1e-12) mean_n /= len;
    }
    json theta = nullptr;
    for (const PlaneParams& p : planes.planes)
      if (p.segment_id == segment.id) {
        theta = {p.theta.x(), p.theta.y(), p.theta.z()};
        break;
      }
    arr.push_back({{"id", segment.id},
                   {"area", segment.area},
                   {"mean_normal", {mean_n.x(), mean_n.y(), mean_n.z()}},
                   {"theta", theta}});
  }
  return arr;
}

inline json to_json(const TextureSpec& t) {
  const char* kind = t.kind == TextureSpec::Kind::kUniform    ? "uniform"
                     : t.kind == TextureSpec::Kind::kChecker ? "checker"
                                                             : "noise";
  return {{"type", kind},
          {"color1", {t.color1.x(), t.color1.y(), t.color1.z()}},
          {"color2", {t.color2.x(), t.color2.y(), t.color2.z()}},
          {"scale", t.scale}};
}

inline TextureSpec texture_from_json(const json& j) {
  require_keys(j, {"type", "color1", "color2", "scale"}, "texture");
  TextureSpec t;
  std::string kind = j.at("type").get<std::string>();
  if (kind == "uniform")
    t.kind = TextureSpec::Kind::kUniform;
  else if (kind == "checker")
    t.kind = TextureSpec::Kind::kChecker;
  else if (kind == "noise")
    t.kind = TextureSpec::Kind::kNoise;
  else
    throw InputError("texture: unknown type '" + kind + "'");
  auto vec3 = [&](const char* key) {
    const json& v = j.at(key);
    if (!v.is_array() || v.size() != 3)
      throw InputError(std::string("texture: ") + key + " is not a 3-vector");
    return Vec3(v[0].get<double>(), v[1].get<double>(), v[2].get<double>());
  };
  if (j.contains("color1")) t.color1 = vec3("color1");
  if (j.contains("color2")) t.color2 = vec3("color2");
  if (j.contains("scale")) t.scale = j.at("scale").get<double>();
  if (!(t.scale > 0.0)) throw InputError("texture: scale must be positive");
  return t;
}

inline json to_json(const SceneSpec& spec) {
  json poses = json::array();
  for (const Pose& p : spec.poses) poses.push_back(to_json(p));
  json faces = json::array();
  for (const TextureSpec& t : spec.face_textures) faces.push_back(to_json(t));
  json j = {{"extents", {spec.extents.x(), spec.extents.y(), spec.extents.z()}},
            {"intrinsics", to_json(spec.intrinsics)},
            {"poses", poses},
            {"face_textures", faces},
            {"seed", spec.seed}};
  if (spec.slant) {
    j["slant"] = {{"point", {spec.slant->point.x(), spec.slant->point.y(),
                             spec.slant->point.z()}},
                  {"normal", {spec.slant->normal.x(), spec.slant->normal.y(),
                              spec.slant->normal.z()}},
                  {"texture", to_json(spec.slant->texture)}};
  }
  return j;
}

inline SceneSpec scene_spec_from_json(const json& j) {
  require_keys(j, {"extents", "intrinsics", "poses", "face_textures", "slant", "seed"},
               "scene spec");
  SceneSpec spec;
  const json& e = j.at("extents");
  if (!e.is_array() || e.size() != 3)
    throw InputError("scene spec: extents is not a 3-vector");
  spec.extents = Vec3(e[0].get<double>(), e[1].get<double>(), e[2].get<double>());
  spec.intrinsics = intrinsics_from_json(j.at("intrinsics"));
  for (const json& p : j.at("poses")) spec.poses.push_back(pose_from_json(p));
  const json& faces = j.at("face_textures");
  if (!faces.is_array() || faces.size() != 6)
    throw InputError("scene spec: face_textures must list 6 textures");
  for (int i = 0; i < 6; ++i) spec.face_textures[i] = texture_from_json(faces[i]);
  if (j.contains("slant") && !j.at("slant").is_null()) {
    const json& s = j.at("slant");
    require_keys(s, {"point", "normal", "texture"}, "slant");
    SlantSpec slant;
    const json& pt = s.at("point");
    const json& nm = s.at("normal");
    if (!pt.is_array() || pt.size() != 3 || !nm.is_array() || nm.size() != 3)
      throw InputError("slant: point/normal are not 3-vectors");
    slant.point = Vec3(pt[0].get<double>(), pt[1].get<double>(), pt[2].get<double>());
    slant.normal = Vec3(nm[0].get<double>(), nm[1].get<double>(), nm[2].get<double>());
    slant.texture = texture_from_json(s.at("texture"));
    spec.slant = slant;
  }
  if (j.contains("seed")) spec.seed = j.at("seed").get<std::uint64_t>();
  return spec;
}

// ---------------------------------------------------------------------------
// refine history CSV

namespace detail {

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace detail

inline void write_history_csv(const std::filesystem::path& path,
                              const std::vector<EpochRecord>& history) {
  std::string out = "epoch,photo,smooth,norm,plane,total,absrel,rms,normal_mean_deg\n";
  for (const EpochRecord& r : history) {
    out += std::to_string(r.epoch);
    for (double v : {r.photo, r.smooth, r.norm, r.plane, r.total, r.absrel, r.rms,
                     r.normal_mean_deg}) {
      out += ',';
      out += detail::format_double(v);
    }
    out += '\n';
  }
  write_file_bytes(path, out.data(), out.size());
}

// ---------------------------------------------------------------------------
// scene bundle directory layout (written by the synth command)

struct SceneBundle {
  CameraIntrinsics intrinsics;
  std::vector<Pose> poses;
  std::vector<RgbImage> images;
  std::vector<DepthMap> depths;
  std::vector<NormalMap> normals;
  std::vector<Grid<std::uint16_t>> plane_ids;
  std::vector<std::vector<LineSegment>> lines;
  std::vector<DominantDirections> axes;  // room axes in each camera frame
};

namespace detail {

inline std::string view_tag(std::size_t i) {
  char buf[8];
  std::snprintf(buf, sizeof(buf), "%03zu", i);
  return buf;
}

}  // namespace detail

inline void write_scene_bundle(const std::filesystem::path& dir,
                               const SceneSpec& spec, const SceneRender& render) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  write_json(dir / "intrinsics.json", to_json(spec.intrinsics));
  json poses = json::array();
  for (const Pose& p : spec.poses) poses.push_back(to_json(p));
  write_json(dir / "poses.json", poses);
  for (std::size_t i = 0; i < render.views.size(); ++i) {
    const SceneView& v = render.views[i];
    std::string tag = detail::view_tag(i);
    write_png_rgb8(dir / ("image_" + tag + ".png"), v.image);
    write_pfm(dir / ("depth_" + tag + ".pfm"), v.depth.values);
    write_png_mask(dir / ("depth_valid_" + tag + ".png"), v.depth.valid);
    write_pfm(dir / ("normals_" + tag + ".pfm"), v.normals.normals);
    write_png_mask(dir / ("normals_valid_" + tag + ".png"), v.normals.valid);
    write_png_labels(dir / ("planes_" + tag + ".png"), v.plane_ids);
    write_json(dir / ("lines_" + tag + ".json"), to_json(v.lines));
    write_json(dir / ("axes_" + tag + ".json"),
               to_json(room_axes_in_camera(spec.poses[i])));
  }
}

inline SceneBundle read_scene_bundle(const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  SceneBundle bundle;
  bundle.intrinsics = intrinsics_from_json(read_json(dir / "intrinsics.json"));
  for (const json& p : read_json(dir / "poses.json"))
    bundle.poses.push_back(pose_from_json(p));
  for (std::size_t i = 0; i < bundle.poses.size(); ++i) {
    std::string tag = detail::view_tag(i);
    bundle.images.push_back(read_png_rgb8(dir / ("image_" + tag + ".png")));
    DepthMap d;
    d.values = read_pfm_gray(dir / ("depth_" + tag + ".pfm"));
    d.valid = read_png_mask(dir / ("depth_valid_" + tag + ".png"));
    d.check();
    bundle.depths.push_back(std::move(d));
    NormalMap n;
    n.normals = read_pfm_rgb(dir / ("normals_" + tag + ".pfm"));
    n.valid = read_png_mask(dir / ("normals_valid_" + tag + ".png"));
    bundle.normals.push_back(std::move(n));
    bundle.plane_ids.push_back(read_png_labels(dir / ("planes_" + tag + ".png")));
    bundle.lines.push_back(lines_from_json(read_json(dir / ("lines_" + tag + ".json"))));
    bundle.axes.push_back(
        directions_from_json(read_json(dir / ("axes_" + tag + ".json"))));
  }
  return bundle;
}

}  // namespace mwdepth
