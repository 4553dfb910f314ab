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

#include "mwdepth/mwdepth.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using mwdepth::json;

namespace {

// ---------------------------------------------------------------------------
// configuration: defaults tree, strict overlay, --set overrides

json default_config() {
  return {
      {"threshold", {{"alpha", 1.633e-3}, {"beta", 0.9}, {"gamma_max", 0.9999}}},
      {"segmentation", {{"k", 0.15}, {"min_area_fraction", 0.01}}},
      {"plane", {{"d_min", 0.1}, {"d_max", 10.0}}},
      {"patches", {{"patch", 3}, {"dilation", 1}, {"stride", 4}}},
      {"loss",
       {{"lambda1", 0.001}, {"lambda2", 0.05}, {"lambda3", 0.1}, {"omega", 0.85}}},
      {"refine",
       {{"epochs", 20},
        {"steps_per_epoch", 25},
        {"learning_rate", 100.0},
        {"warmup_epochs", 2},
        {"refresh_period", 1},
        {"target_view", 0},
        {"source_views", nullptr},
        {"snapshots", false},
        {"init",
         {{"mode", "noisy_gt"},
          {"noise_std", 0.2},
          {"noise_wavelength_px", 16.0},
          {"path", ""}}}}},
      {"dirs", {{"angle_tol_deg", 2.0}, {"source", "lines"}, {"path", ""}}},
      {"manhattan", {{"epoch", 0}, {"gamma", nullptr}}},
      {"eval", {{"cap", 10.0}, {"median_scale", false}}},
  };
}

void apply_overlay(json& base, const json& overlay, const std::string& context) {
  if (!overlay.is_object())
    throw mwdepth::InputError(context + ": expected a JSON object");
  for (auto it = overlay.begin(); it != overlay.end(); ++it) {
    if (!base.contains(it.key()))
      throw mwdepth::InputError(context + ": unknown key '" + it.key() + "'");
    json& slot = base[it.key()];
    if (slot.is_object() && it.value().is_object())
      apply_overlay(slot, it.value(), context + "." + it.key());
    else
      slot = it.value();
  }
}

void apply_set(json& base, const std::string& kv) {
  auto eq = kv.find('=');
  if (eq == std::string::npos)
    throw mwdepth::InputError("--set expects key.path=value, got '" + kv + "'");
  std::string path = kv.substr(0, eq);
  std::string raw = kv.substr(eq + 1);
  json value = json::parse(raw, nullptr, false);
  if (value.is_discarded()) value = raw;  // bare strings are allowed

  json* node = &base;
  std::size_t start = 0;
  while (true) {
    std::size_t dot = path.find('.', start);
    std::string key = path.substr(start, dot - start);
    if (!node->contains(key))
      throw mwdepth::InputError("--set: unknown key '" + path + "'");
    if (dot == std::string::npos) {
      (*node)[key] = value;
      return;
    }
    node = &(*node)[key];
    start = dot + 1;
  }
}

struct CommonArgs {
  std::string config_path;
  std::vector<std::string> sets;
  std::uint64_t seed = 0;
};

json resolve_config(const CommonArgs& args) {
  json cfg = default_config();
  if (!args.config_path.empty())
    apply_overlay(cfg, mwdepth::read_json(args.config_path), "config");
  for (const std::string& kv : args.sets) apply_set(cfg, kv);
  return cfg;
}

mwdepth::ThresholdSchedule threshold_from(const json& cfg) {
  mwdepth::ThresholdSchedule s;
  s.alpha = cfg.at("threshold").at("alpha").get<double>();
  s.beta = cfg.at("threshold").at("beta").get<double>();
  s.gamma_max = cfg.at("threshold").at("gamma_max").get<double>();
  s.check();
  return s;
}

mwdepth::SegmentationParams segmentation_from(const json& cfg) {
  mwdepth::SegmentationParams p;
  p.k = cfg.at("segmentation").at("k").get<double>();
  p.min_area_fraction = cfg.at("segmentation").at("min_area_fraction").get<double>();
  if (!(p.k > 0.0) || p.min_area_fraction < 0.0)
    throw mwdepth::InputError("config: bad segmentation parameters");
  return p;
}

mwdepth::PatchParams patches_from(const json& cfg) {
  mwdepth::PatchParams p;
  p.patch = cfg.at("patches").at("patch").get<int>();
  p.dilation = cfg.at("patches").at("dilation").get<int>();
  p.stride = cfg.at("patches").at("stride").get<int>();
  return p;
}

mwdepth::RefineConfig refine_from(const json& cfg) {
  mwdepth::RefineConfig rc;
  const json& r = cfg.at("refine");
  rc.epochs = r.at("epochs").get<int>();
  rc.steps_per_epoch = r.at("steps_per_epoch").get<int>();
  rc.learning_rate = r.at("learning_rate").get<double>();
  rc.warmup_epochs = r.at("warmup_epochs").get<int>();
  rc.refresh_period = r.at("refresh_period").get<int>();
  const json& l = cfg.at("loss");
  rc.lambda1 = l.at("lambda1").get<double>();
  rc.lambda2 = l.at("lambda2").get<double>();
  rc.lambda3 = l.at("lambda3").get<double>();
  rc.omega = l.at("omega").get<double>();
  rc.threshold = threshold_from(cfg);
  rc.segmentation = segmentation_from(cfg);
  rc.patches = patches_from(cfg);
  rc.plane_d_min = cfg.at("plane").at("d_min").get<double>();
  rc.plane_d_max = cfg.at("plane").at("d_max").get<double>();
  rc.check();
  return rc;
}

// ---------------------------------------------------------------------------
// manifest

std::string fnv1a_hex(const std::string& text) {
  std::uint64_t hash = 1469598103934665603ULL;
  for (unsigned char c : text) {
    hash ^= c;
    hash *= 1099511628211ULL;
  }
  char buf[24];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(hash));
  return buf;
}

void write_manifest(const fs::path& out_dir, const std::string& command,
                    const json& inputs, const json& cfg, std::uint64_t seed,
                    const json& extras = json::object()) {
  json manifest = {{"command", command},
                   {"inputs", inputs},
                   {"config", cfg},
                   {"config_hash", fnv1a_hex(cfg.dump())},
                   {"seed", seed},
                   {"versions",
                    {{"mwdepth", mwdepth::kVersion},
                     {"libpng", PNG_LIBPNG_VER_STRING},
                     {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) +
                                           "." +
                                           std::to_string(NLOHMANN_JSON_VERSION_MINOR)}}}};
  for (auto it = extras.begin(); it != extras.end(); ++it)
    manifest[it.key()] = it.value();
  mwdepth::write_json(out_dir / "manifest.json", manifest);
}

// ---------------------------------------------------------------------------
// shared loading helpers

mwdepth::DepthMap load_depth(const std::string& pfm_path,
                             const std::string& valid_path) {
  mwdepth::DepthMap d;
  d.values = mwdepth::read_pfm_gray(pfm_path);
  if (!valid_path.empty()) {
    d.valid = mwdepth::read_png_mask(valid_path);
    if (!d.valid.same_shape(d.values))
      throw mwdepth::InputError("depth valid mask dimensions do not match depth");
  } else {
    d.valid = mwdepth::Mask(d.values.width(), d.values.height(), 0);
    for (std::size_t i = 0; i < d.values.size(); ++i)
      d.valid[i] = (d.values[i] > 0.0) ? 1 : 0;
  }
  d.check();
  return d;
}

mwdepth::NormalMap load_normals(const std::string& pfm_path,
                                const std::string& valid_path) {
  mwdepth::NormalMap n;
  n.normals = mwdepth::read_pfm_rgb(pfm_path);
  if (!valid_path.empty()) {
    n.valid = mwdepth::read_png_mask(valid_path);
    if (!n.valid.same_shape(n.normals))
      throw mwdepth::InputError("normal valid mask dimensions do not match normals");
  } else {
    n.valid = mwdepth::Mask(n.normals.width(), n.normals.height(), 0);
    for (std::size_t i = 0; i < n.normals.size(); ++i)
      n.valid[i] = (n.normals[i].norm() > 0.5) ? 1 : 0;
  }
  return n;
}

mwdepth::DominantDirections resolve_directions(
    const json& cfg, const mwdepth::SceneBundle& bundle, int target_view) {
  const json& d = cfg.at("dirs");
  std::string source = d.at("source").get<std::string>();
  if (source == "axes") return bundle.axes.at(target_view);
  if (source == "file")
    return mwdepth::directions_from_json(
        mwdepth::read_json(d.at("path").get<std::string>()));
  if (source == "lines") {
    auto result = mwdepth::estimate_dominant_directions(
        bundle.lines.at(target_view), bundle.intrinsics,
        d.at("angle_tol_deg").get<double>());
    return result.directions;
  }
  throw mwdepth::InputError("config: dirs.source must be lines, axes or file");
}

mwdepth::SceneInputs load_scene_inputs(const mwdepth::SceneBundle& bundle,
                                       const json& cfg) {
  const json& r = cfg.at("refine");
  int target = r.at("target_view").get<int>();
  if (target < 0 || target >= static_cast<int>(bundle.images.size()))
    throw mwdepth::InputError("config: target_view out of range");
  std::vector<int> source_ids;
  if (r.at("source_views").is_null()) {
    for (int i = 0; i < static_cast<int>(bundle.images.size()); ++i)
      if (i != target) source_ids.push_back(i);
  } else {
    source_ids = r.at("source_views").get<std::vector<int>>();
  }
  if (source_ids.empty())
    throw mwdepth::InputError("scene: need at least one source view");

  mwdepth::SceneInputs scene;
  scene.target = bundle.images.at(target);
  scene.intrinsics = bundle.intrinsics;
  for (int sid : source_ids) {
    if (sid < 0 || sid >= static_cast<int>(bundle.images.size()) || sid == target)
      throw mwdepth::InputError("config: bad source view index");
    mwdepth::SourceView sv;
    sv.image = bundle.images.at(sid);
    sv.target_to_source =
        mwdepth::relative_pose(bundle.poses.at(target), bundle.poses.at(sid));
    scene.sources.push_back(std::move(sv));
  }
  scene.directions = resolve_directions(cfg, bundle, target);
  scene.gt_depth = bundle.depths.at(target);
  scene.gt_normals = bundle.normals.at(target);
  return scene;
}

mwdepth::Grid<std::uint16_t> labels_to_u16(const mwdepth::Grid<int>& labels) {
  mwdepth::Grid<std::uint16_t> out(labels.width(), labels.height(), 0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] > 65535)
      throw mwdepth::InputError("labels: segment id exceeds 16-bit range");
    out[i] = static_cast<std::uint16_t>(labels[i]);
  }
  return out;
}

// ---------------------------------------------------------------------------
// subcommands

int cmd_synth(const std::string& spec_path, const std::string& out_dir,
              const CommonArgs& args, bool seed_given) {
  json cfg = resolve_config(args);
  mwdepth::SceneSpec spec =
      mwdepth::scene_spec_from_json(mwdepth::read_json(spec_path));
  if (seed_given) spec.seed = args.seed;
  mwdepth::SceneRender render = mwdepth::generate_room(spec);
  fs::create_directories(out_dir);
  mwdepth::write_scene_bundle(out_dir, spec, render);
  mwdepth::write_json(fs::path(out_dir) / "scene_spec.json", mwdepth::to_json(spec));
  write_manifest(out_dir, "synth", {{"spec", spec_path}}, cfg, spec.seed,
                 {{"views", render.views.size()}});
  return 0;
}

int cmd_dirs(const std::string& lines_path, const std::string& k_path,
             const std::string& out_path, const CommonArgs& args) {
  json cfg = resolve_config(args);
  auto lines = mwdepth::lines_from_json(mwdepth::read_json(lines_path));
  auto k = mwdepth::intrinsics_from_json(mwdepth::read_json(k_path));
  auto result = mwdepth::estimate_dominant_directions(
      lines, k, cfg.at("dirs").at("angle_tol_deg").get<double>());
  fs::path out(out_path);
  fs::create_directories(out.parent_path().empty() ? "." : out.parent_path());
  mwdepth::write_json(out, mwdepth::to_json(result.directions));
  write_manifest(out.parent_path().empty() ? "." : out.parent_path(), "dirs",
                 {{"lines", lines_path}, {"k", k_path}}, cfg, args.seed,
                 {{"inliers", result.inliers}, {"total_lines", lines.size()}});
  return 0;
}

int cmd_normals(const std::string& depth_path, const std::string& valid_path,
                const std::string& k_path, const std::string& out_dir,
                const CommonArgs& args) {
  json cfg = resolve_config(args);
  auto k = mwdepth::intrinsics_from_json(mwdepth::read_json(k_path));
  mwdepth::DepthMap depth = load_depth(depth_path, valid_path);
  if (!depth.values.same_shape(k.width, k.height))
    throw mwdepth::InputError("normals: depth dimensions do not match intrinsics");
  mwdepth::NormalMap nm = mwdepth::compute_normals(mwdepth::backproject(depth, k));
  fs::create_directories(out_dir);
  mwdepth::write_pfm(fs::path(out_dir) / "normals.pfm", nm.normals);
  mwdepth::write_png_mask(fs::path(out_dir) / "normals_valid.png", nm.valid);
  write_manifest(out_dir, "normals", {{"depth", depth_path}, {"k", k_path}}, cfg,
                 args.seed);
  return 0;
}

int cmd_manhattan(const std::string& normals_path, const std::string& valid_path,
                  const std::string& dirs_path, const std::string& out_dir,
                  const CommonArgs& args) {
  json cfg = resolve_config(args);
  mwdepth::NormalMap nm = load_normals(normals_path, valid_path);
  auto dirs = mwdepth::directions_from_json(mwdepth::read_json(dirs_path));
  mwdepth::AlignmentResult align = mwdepth::align_normals(nm, dirs);
  double gamma;
  if (!cfg.at("manhattan").at("gamma").is_null())
    gamma = cfg.at("manhattan").at("gamma").get<double>();
  else
    gamma = mwdepth::adaptive_threshold(cfg.at("manhattan").at("epoch").get<int>(),
                                        threshold_from(cfg));
  mwdepth::Mask mask = mwdepth::manhattan_mask(align, gamma);
  fs::create_directories(out_dir);
  mwdepth::write_pfm(fs::path(out_dir) / "aligned.pfm", align.aligned);
  mwdepth::write_pfm(fs::path(out_dir) / "smax.pfm", align.smax);
  mwdepth::write_png_mask(fs::path(out_dir) / "mask.png", mask);
  write_manifest(out_dir, "manhattan",
                 {{"normals", normals_path}, {"dirs", dirs_path}}, cfg, args.seed,
                 {{"gamma", gamma}});
  return 0;
}

int cmd_segment(const std::string& image_path, const std::string& depth_path,
                const std::string& valid_path, const std::string& k_path,
                const std::string& dirs_path, const std::string& out_dir,
                const CommonArgs& args) {
  json cfg = resolve_config(args);
  auto k = mwdepth::intrinsics_from_json(mwdepth::read_json(k_path));
  mwdepth::RgbImage image = mwdepth::read_png_rgb8(image_path);
  mwdepth::DepthMap depth = load_depth(depth_path, valid_path);
  auto dirs = mwdepth::directions_from_json(mwdepth::read_json(dirs_path));
  mwdepth::SegmentationParams params = segmentation_from(cfg);

  mwdepth::PointMap pts = mwdepth::backproject(depth, k);
  mwdepth::NormalMap nm = mwdepth::compute_normals(pts);
  mwdepth::AlignmentResult align = mwdepth::align_normals(nm, dirs);
  mwdepth::Grid<double> dmap = mwdepth::plane_distance_map(pts, align);
  mwdepth::EdgeGraph graph = mwdepth::edge_dissimilarity(image, align, dmap);
  int min_area = params.min_area_pixels(image.width(), image.height());
  mwdepth::SegmentationResult seg = mwdepth::graph_segment(graph, params.k, min_area);
  mwdepth::SegmentationResult baseline =
      mwdepth::detect_color_only_regions(image, align.valid, params);

  mwdepth::PlaneSupervision planes = mwdepth::fit_segment_planes(
      seg, pts, k, cfg.at("plane").at("d_min").get<double>(),
      cfg.at("plane").at("d_max").get<double>());

  fs::create_directories(out_dir);
  mwdepth::write_png_labels(fs::path(out_dir) / "labels.png", labels_to_u16(seg.labels));
  mwdepth::write_png_labels(fs::path(out_dir) / "labels_color_only.png",
                            labels_to_u16(baseline.labels));
  mwdepth::write_json(fs::path(out_dir) / "segments.json",
                      mwdepth::segments_to_json(seg, align, planes));
  write_manifest(out_dir, "segment",
                 {{"image", image_path}, {"depth", depth_path}, {"k", k_path},
                  {"dirs", dirs_path}},
                 cfg, args.seed,
                 {{"segments", seg.segments.size()},
                  {"segments_color_only", baseline.segments.size()}});
  return 0;
}

int cmd_planes(const std::string& depth_path, const std::string& valid_path,
               const std::string& k_path, const std::string& labels_path,
               const std::string& out_dir, const CommonArgs& args) {
  json cfg = resolve_config(args);
  auto k = mwdepth::intrinsics_from_json(mwdepth::read_json(k_path));
  mwdepth::DepthMap depth = load_depth(depth_path, valid_path);
  mwdepth::Grid<std::uint16_t> labels = mwdepth::read_png_labels(labels_path);
  if (!labels.same_shape(depth.values))
    throw mwdepth::InputError("planes: label dimensions do not match depth");

  // rebuild the segment lists from the label map
  mwdepth::SegmentationResult seg;
  seg.labels = mwdepth::Grid<int>(labels.width(), labels.height(), 0);
  seg.planar_mask = mwdepth::Mask(labels.width(), labels.height(), 0);
  std::map<int, std::vector<std::int32_t>> by_id;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    seg.labels[i] = labels[i];
    if (labels[i] > 0) {
      seg.planar_mask[i] = 1;
      by_id[labels[i]].push_back(static_cast<std::int32_t>(i));
    }
  }
  for (auto& [id, pixels] : by_id)
    seg.segments.push_back({id, std::move(pixels),
                            static_cast<int>(by_id.at(id).size())});
  for (auto& s : seg.segments) s.area = static_cast<int>(s.pixels.size());

  mwdepth::PointMap pts = mwdepth::backproject(depth, k);
  double d_min = cfg.at("plane").at("d_min").get<double>();
  double d_max = cfg.at("plane").at("d_max").get<double>();
  mwdepth::PlaneSupervision planes =
      mwdepth::fit_segment_planes(seg, pts, k, d_min, d_max);

  json theta = json::array();
  for (const auto& segment : seg.segments) {
    json entry = {{"id", segment.id}, {"area", segment.area}, {"theta", nullptr}};
    for (const mwdepth::PlaneParams& p : planes.planes)
      if (p.segment_id == segment.id) {
        entry["theta"] = {p.theta.x(), p.theta.y(), p.theta.z()};
        entry["inliers"] = p.inlier_count;
        break;
      }
    theta.push_back(entry);
  }

  fs::create_directories(out_dir);
  mwdepth::write_json(fs::path(out_dir) / "planes.json", theta);
  mwdepth::write_pfm(fs::path(out_dir) / "coplanar_depth.pfm", planes.values);
  mwdepth::write_png_mask(fs::path(out_dir) / "coplanar_mask.png", planes.mask);
  write_manifest(out_dir, "planes",
                 {{"depth", depth_path}, {"k", k_path}, {"labels", labels_path}},
                 cfg, args.seed, {{"fitted", planes.planes.size()}});
  return 0;
}

int cmd_loss(const std::string& scene_dir, const std::string& depth_path,
             const std::string& out_dir, bool want_grad, const CommonArgs& args) {
  json cfg = resolve_config(args);
  mwdepth::SceneBundle bundle = mwdepth::read_scene_bundle(scene_dir);
  mwdepth::SceneInputs scene = load_scene_inputs(bundle, cfg);
  int target = cfg.at("refine").at("target_view").get<int>();

  mwdepth::DepthMap depth =
      depth_path.empty() ? bundle.depths.at(target) : load_depth(depth_path, "");
  if (!depth.values.same_shape(scene.target))
    throw mwdepth::InputError("loss: depth dimensions do not match the scene");

  mwdepth::RefineConfig rc = refine_from(cfg);
  int epoch = cfg.at("manhattan").at("epoch").get<int>();
  mwdepth::SupervisorySignals signals = mwdepth::compute_signals(
      depth, scene.target, scene.intrinsics, scene.directions, epoch, rc);
  mwdepth::PatchSet patches =
      mwdepth::make_patch_set(depth.width(), depth.height(), rc.patches);
  mwdepth::LossReport report =
      mwdepth::total_loss(depth, scene, patches, signals, rc, want_grad);

  fs::create_directories(out_dir);
  json out = {{"photo", report.photo},   {"smooth", report.smooth},
              {"norm", report.norm},     {"plane", report.plane},
              {"total", report.total},   {"gamma", signals.gamma},
              {"n_manhattan", mwdepth::count_on(signals.manhattan)},
              {"n_planar", mwdepth::count_on(signals.segmentation.planar_mask)}};
  mwdepth::write_json(fs::path(out_dir) / "loss.json", out);
  if (want_grad)
    mwdepth::write_pfm(fs::path(out_dir) / "grad.pfm", report.grad);
  write_manifest(out_dir, "loss", {{"scene", scene_dir}, {"depth", depth_path}},
                 cfg, args.seed);
  return 0;
}

mwdepth::DepthMap make_init_depth(const mwdepth::DepthMap& gt, const json& init_cfg,
                                  std::uint64_t seed) {
  std::string mode = init_cfg.at("mode").get<std::string>();
  if (mode == "gt") return gt;
  if (mode == "file")
    return load_depth(init_cfg.at("path").get<std::string>(), "");
  if (mode == "noisy_gt") {
    double std_dev = init_cfg.at("noise_std").get<double>();
    double wavelength = init_cfg.at("noise_wavelength_px").get<double>();
    mwdepth::Grid<double> field = mwdepth::smooth_noise_field(
        gt.width(), gt.height(), wavelength, seed);
    mwdepth::DepthMap out = gt;
    for (std::size_t i = 0; i < out.values.size(); ++i)
      if (out.valid[i]) {
        double f = std::max(-0.8, std_dev * field[i]);
        out.values[i] = gt.values[i] * (1.0 + f);
      }
    return out;
  }
  throw mwdepth::InputError("config: refine.init.mode must be gt, noisy_gt or file");
}

int cmd_refine(const std::string& scene_dir, const std::string& out_dir,
               const CommonArgs& args) {
  json cfg = resolve_config(args);
  mwdepth::SceneBundle bundle = mwdepth::read_scene_bundle(scene_dir);
  mwdepth::SceneInputs scene = load_scene_inputs(bundle, cfg);
  mwdepth::RefineConfig rc = refine_from(cfg);
  int target = cfg.at("refine").at("target_view").get<int>();

  mwdepth::DepthMap init = make_init_depth(
      bundle.depths.at(target), cfg.at("refine").at("init"), args.seed);
  mwdepth::RefineResult result = mwdepth::refine_depth(init, scene, rc);

  fs::create_directories(out_dir);
  mwdepth::write_pfm(fs::path(out_dir) / "init_depth.pfm", init.values);
  mwdepth::write_pfm(fs::path(out_dir) / "refined_depth.pfm", result.depth.values);
  mwdepth::write_png_mask(fs::path(out_dir) / "depth_valid.png", result.depth.valid);
  mwdepth::write_history_csv(fs::path(out_dir) / "history.csv", result.history);

  json extras = json::object();
  if (scene.gt_depth) {
    mwdepth::DepthMetrics init_m = mwdepth::depth_metrics(init, *scene.gt_depth,
                                                          rc.plane_d_max, false);
    mwdepth::DepthMetrics final_m = mwdepth::depth_metrics(
        result.depth, *scene.gt_depth, rc.plane_d_max, false);
    extras["init_metrics"] = mwdepth::to_json(init_m);
    extras["final_metrics"] = mwdepth::to_json(final_m);
  }
  write_manifest(out_dir, "refine", {{"scene", scene_dir}}, cfg, args.seed, extras);
  return 0;
}

int cmd_eval(const std::string& pred_path, const std::string& gt_path,
             const std::string& pred_valid, const std::string& gt_valid,
             const std::string& out_path, std::optional<double> cap_flag,
             std::optional<bool> median_flag, const CommonArgs& args) {
  json cfg = resolve_config(args);
  double cap = cap_flag.value_or(cfg.at("eval").at("cap").get<double>());
  bool median = median_flag.value_or(cfg.at("eval").at("median_scale").get<bool>());
  mwdepth::DepthMap pred = load_depth(pred_path, pred_valid);
  mwdepth::DepthMap gt = load_depth(gt_path, gt_valid);
  mwdepth::DepthMetrics m = mwdepth::depth_metrics(pred, gt, cap, median);
  fs::path out(out_path);
  if (!out.parent_path().empty()) fs::create_directories(out.parent_path());
  mwdepth::write_json(out, mwdepth::to_json(m));
  write_manifest(out.parent_path().empty() ? "." : out.parent_path(), "eval",
                 {{"pred", pred_path}, {"gt", gt_path}}, cfg, args.seed,
                 {{"cap", cap}, {"median_scale", median}});
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"structural-regularity depth supervision toolkit"};
  app.require_subcommand(1);

  CommonArgs common;
  bool seed_given = false;
  app.add_option("--config", common.config_path, "JSON config file")
      ->expected(1);
  app.add_option("--set", common.sets,
                 "config override key.path=value (repeatable)");
  app.add_option("--seed", common.seed, "random seed")
      ->each([&](const std::string&) { seed_given = true; });

  std::string spec_path, out_path, lines_path, k_path, depth_path, valid_path;
  std::string normals_path, dirs_path, image_path, labels_path, scene_dir;
  std::string pred_path, gt_path, pred_valid, gt_valid;
  bool want_grad = false;
  double cap_value = -1.0;
  bool median_flag = false;

  CLI::App* synth = app.add_subcommand("synth", "render a synthetic room scene");
  synth->add_option("--spec", spec_path, "scene spec JSON")->required();
  synth->add_option("--out", out_path, "output directory")->required();

  CLI::App* dirs = app.add_subcommand("dirs", "estimate dominant directions");
  dirs->add_option("--lines", lines_path, "line segments JSON")->required();
  dirs->add_option("--k", k_path, "intrinsics JSON")->required();
  dirs->add_option("--out", out_path, "output directions JSON")->required();

  CLI::App* normals = app.add_subcommand("normals", "surface normals from depth");
  normals->add_option("--depth", depth_path, "depth PFM")->required();
  normals->add_option("--valid", valid_path, "depth valid mask PNG");
  normals->add_option("--k", k_path, "intrinsics JSON")->required();
  normals->add_option("--out", out_path, "output directory")->required();

  CLI::App* manhattan = app.add_subcommand("manhattan", "align normals and mask");
  manhattan->add_option("--normals", normals_path, "normals PFM")->required();
  manhattan->add_option("--valid", valid_path, "normal valid mask PNG");
  manhattan->add_option("--dirs", dirs_path, "directions JSON")->required();
  manhattan->add_option("--out", out_path, "output directory")->required();

  CLI::App* segment = app.add_subcommand("segment", "detect planar regions");
  segment->add_option("--image", image_path, "RGB image PNG")->required();
  segment->add_option("--depth", depth_path, "depth PFM")->required();
  segment->add_option("--valid", valid_path, "depth valid mask PNG");
  segment->add_option("--k", k_path, "intrinsics JSON")->required();
  segment->add_option("--dirs", dirs_path, "directions JSON")->required();
  segment->add_option("--out", out_path, "output directory")->required();

  CLI::App* planes = app.add_subcommand("planes", "fit planes per segment");
  planes->add_option("--depth", depth_path, "depth PFM")->required();
  planes->add_option("--valid", valid_path, "depth valid mask PNG");
  planes->add_option("--k", k_path, "intrinsics JSON")->required();
  planes->add_option("--labels", labels_path, "segment labels PNG")->required();
  planes->add_option("--out", out_path, "output directory")->required();

  CLI::App* loss = app.add_subcommand("loss", "evaluate the training losses");
  loss->add_option("--scene", scene_dir, "scene bundle directory")->required();
  loss->add_option("--depth", depth_path, "predicted depth PFM (default: scene gt)");
  loss->add_option("--out", out_path, "output directory")->required();
  loss->add_flag("--grad", want_grad, "also write the total-loss gradient PFM");

  CLI::App* refine = app.add_subcommand("refine", "refine a depth field");
  refine->add_option("--scene", scene_dir, "scene bundle directory")->required();
  refine->add_option("--out", out_path, "output directory")->required();

  CLI::App* eval = app.add_subcommand("eval", "depth error metrics");
  eval->add_option("--pred", pred_path, "predicted depth PFM")->required();
  eval->add_option("--gt", gt_path, "ground-truth depth PFM")->required();
  eval->add_option("--pred-valid", pred_valid, "pred valid mask PNG");
  eval->add_option("--gt-valid", gt_valid, "gt valid mask PNG");
  eval->add_option("--out", out_path, "output metrics JSON")->required();
  CLI::Option* cap_opt = eval->add_option("--cap", cap_value, "depth cap in meters");
  CLI::Option* med_opt =
      eval->add_flag("--median-scale", median_flag, "median-scale pred before eval");

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth->parsed()) return cmd_synth(spec_path, out_path, common, seed_given);
    if (dirs->parsed()) return cmd_dirs(lines_path, k_path, out_path, common);
    if (normals->parsed())
      return cmd_normals(depth_path, valid_path, k_path, out_path, common);
    if (manhattan->parsed())
      return cmd_manhattan(normals_path, valid_path, dirs_path, out_path, common);
    if (segment->parsed())
      return cmd_segment(image_path, depth_path, valid_path, k_path, dirs_path,
                         out_path, common);
    if (planes->parsed())
      return cmd_planes(depth_path, valid_path, k_path, labels_path, out_path,
                        common);
    if (loss->parsed())
      return cmd_loss(scene_dir, depth_path, out_path, want_grad, common);
    if (refine->parsed()) return cmd_refine(scene_dir, out_path, common);
    if (eval->parsed())
      return cmd_eval(pred_path, gt_path, pred_valid, gt_valid, out_path,
                      cap_opt->count() ? std::optional<double>(cap_value)
                                       : std::nullopt,
                      med_opt->count() ? std::optional<bool>(median_flag)
                                       : std::nullopt,
                      common);
  } catch (const mwdepth::DegenerateError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const mwdepth::InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
