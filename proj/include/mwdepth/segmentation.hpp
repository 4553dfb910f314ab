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

#include <algorithm>
#include <numeric>

namespace mwdepth {

// Undirected 8-connected grid graph with dissimilarity weights in [0, 1].
// Only pixels flagged valid participate; each adjacency appears once with
// a < b in row-major index order.
struct EdgeGraph {
  struct Edge {
    std::int32_t a = 0, b = 0;
    double w = 0.0;
  };
  int width = 0, height = 0;
  Mask valid;
  std::vector<Edge> edges;
};

// Segmentation output. Label 0 marks non-planar or filtered pixels;
// retained segments are numbered from 1 by first-pixel order.
struct SegmentationResult {
  Grid<int> labels;
  struct Segment {
    int id = 0;
    std::vector<std::int32_t> pixels;  // row-major indices, ascending
    int area = 0;
  };
  std::vector<Segment> segments;
  Mask planar_mask;
};

struct SegmentationParams {
  double k = 0.15;
  double min_area_fraction = 0.01;

  int min_area_pixels(int width, int height) const {
    return std::max(1, static_cast<int>(min_area_fraction * width * height));
  }
};

// Plane-to-origin distance under the aligned normal: d_p = -X_p . a_p.
inline Grid<double> plane_distance_map(const PointMap& pts,
                                       const AlignmentResult& align) {
  if (!pts.points.same_shape(align.aligned))
    throw InputError("plane_distance_map: dimension mismatch");
  Grid<double> d(pts.width(), pts.height(), 0.0);
  for (std::size_t i = 0; i < d.size(); ++i)
    if (align.valid[i]) d[i] = -pts.points[i].dot(align.aligned[i]);
  return d;
}

namespace detail {

// min-max normalization over all edges; a degenerate range maps to 0
inline void minmax_normalize(std::vector<double>& v) {
  if (v.empty()) return;
  auto [lo_it, hi_it] = std::minmax_element(v.begin(), v.end());
  double lo = *lo_it, hi = *hi_it;
  if (!(hi > lo)) {
    std::fill(v.begin(), v.end(), 0.0);
    return;
  }
  double inv = 1.0 / (hi - lo);
  for (double& x : v) x = (x - lo) * inv;
}

// 8-connectivity, each undirected adjacency once
inline constexpr std::array<std::pair<int, int>, 4> kNeighborOffsets{
    {{1, 0}, {0, 1}, {1, 1}, {-1, 1}}};

template <typename WeightFn>
EdgeGraph build_edge_graph(int width, int height, const Mask& valid, WeightFn&& fn) {
  EdgeGraph g;
  g.width = width;
  g.height = height;
  g.valid = valid;
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) {
      if (!valid(x, y)) continue;
      for (auto [dx, dy] : kNeighborOffsets) {
        int nx = x + dx, ny = y + dy;
        if (nx < 0 || nx >= width || ny >= height) continue;
        if (!valid(nx, ny)) continue;
        EdgeGraph::Edge e;
        e.a = static_cast<std::int32_t>(valid.index(x, y));
        e.b = static_cast<std::int32_t>(valid.index(nx, ny));
        e.w = fn(x, y, nx, ny);
        g.edges.push_back(e);
      }
    }
  return g;
}

}  // namespace detail

// Fused color + geometry dissimilarity:
//   Dn = |a_p - a_q|, Dd = |d_p - d_q|, Dc = |I_p - I_q|  (RGB euclidean)
//   Dg = [Dn] + [Dd],  w = max([Dc], [Dg])
// with [.] the global min-max normalization over all edges; Dg is itself
// normalized before the max so both operands live in [0, 1].
inline EdgeGraph edge_dissimilarity(const RgbImage& image,
                                    const AlignmentResult& align,
                                    const Grid<double>& dmap) {
  const int w = image.width(), h = image.height();
  if (!align.aligned.same_shape(w, h) || !dmap.same_shape(w, h))
    throw InputError("edge_dissimilarity: dimension mismatch");
  if (static_cast<std::size_t>(w) * h < 2)
    throw InputError("edge_dissimilarity: image too small");

  EdgeGraph g = detail::build_edge_graph(
      w, h, align.valid, [](int, int, int, int) { return 0.0; });

  std::vector<double> dn(g.edges.size()), dd(g.edges.size()), dc(g.edges.size());
  for (std::size_t i = 0; i < g.edges.size(); ++i) {
    const auto& e = g.edges[i];
    dn[i] = (align.aligned[e.a] - align.aligned[e.b]).norm();
    dd[i] = std::abs(dmap[e.a] - dmap[e.b]);
    dc[i] = (image[e.a] - image[e.b]).norm();
  }
  detail::minmax_normalize(dn);
  detail::minmax_normalize(dd);
  detail::minmax_normalize(dc);
  std::vector<double> dg(g.edges.size());
  for (std::size_t i = 0; i < dg.size(); ++i) dg[i] = dn[i] + dd[i];
  detail::minmax_normalize(dg);
  for (std::size_t i = 0; i < g.edges.size(); ++i)
    g.edges[i].w = std::max(dc[i], dg[i]);
  return g;
}

// Color-only baseline: w = [Dc]. Same graph construction and validity as
// the fused dissimilarity, for side-by-side comparison.
inline EdgeGraph edge_dissimilarity_color_only(const RgbImage& image,
                                               const Mask& valid) {
  const int w = image.width(), h = image.height();
  if (!valid.same_shape(w, h))
    throw InputError("edge_dissimilarity_color_only: dimension mismatch");
  if (static_cast<std::size_t>(w) * h < 2)
    throw InputError("edge_dissimilarity_color_only: image too small");
  EdgeGraph g = detail::build_edge_graph(
      w, h, valid, [](int, int, int, int) { return 0.0; });
  std::vector<double> dc(g.edges.size());
  for (std::size_t i = 0; i < g.edges.size(); ++i)
    dc[i] = (image[g.edges[i].a] - image[g.edges[i].b]).norm();
  detail::minmax_normalize(dc);
  for (std::size_t i = 0; i < g.edges.size(); ++i) g.edges[i].w = dc[i];
  return g;
}

namespace detail {

struct UnionFind {
  std::vector<std::int32_t> parent;
  std::vector<std::int32_t> size;

  explicit UnionFind(std::size_t n) : parent(n), size(n, 1) {
    std::iota(parent.begin(), parent.end(), 0);
  }
  std::int32_t find(std::int32_t x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  }
  std::int32_t join(std::int32_t a, std::int32_t b) {
    if (size[a] < size[b]) std::swap(a, b);
    parent[b] = a;
    size[a] += size[b];
    return a;
  }
};

}  // namespace detail

// Graph-based merging: process edges in nondecreasing weight (ties broken
// by (a, b) index so the result is independent of input edge order) and
// merge components C1, C2 on edge w iff
//   w <= min(Int(C1) + k/|C1|, Int(C2) + k/|C2|)
// where Int is the largest weight already merged inside the component.
// Components smaller than min_area end up with label 0.
inline SegmentationResult graph_segment(const EdgeGraph& graph, double k,
                                        int min_area) {
  if (!(k > 0.0)) throw InputError("graph_segment: k must be positive");
  const int w = graph.width, h = graph.height;
  const std::size_t n = static_cast<std::size_t>(w) * h;

  std::vector<std::size_t> order(graph.edges.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
    const auto &ei = graph.edges[i], &ej = graph.edges[j];
    if (ei.w != ej.w) return ei.w < ej.w;
    if (ei.a != ej.a) return ei.a < ej.a;
    return ei.b < ej.b;
  });

  detail::UnionFind uf(n);
  std::vector<double> threshold(n, k);  // Int(C) + k/|C|, singleton Int = 0
  for (std::size_t idx : order) {
    const auto& e = graph.edges[idx];
    std::int32_t ra = uf.find(e.a), rb = uf.find(e.b);
    if (ra == rb) continue;
    if (e.w <= threshold[ra] && e.w <= threshold[rb]) {
      std::int32_t r = uf.join(ra, rb);
      threshold[r] = e.w + k / uf.size[r];
    }
  }

  // collect components of valid pixels; stable ids by first pixel
  SegmentationResult out;
  out.labels = Grid<int>(w, h, 0);
  out.planar_mask = Mask(w, h, 0);
  std::vector<std::int32_t> root_label(n, 0);
  std::vector<std::int32_t> root_area(n, 0);
  for (std::size_t i = 0; i < n; ++i)
    if (graph.valid[i]) ++root_area[uf.find(static_cast<std::int32_t>(i))];
  int next_label = 1;
  for (std::size_t i = 0; i < n; ++i) {
    if (!graph.valid[i]) continue;
    std::int32_t r = uf.find(static_cast<std::int32_t>(i));
    if (root_area[r] < min_area) continue;
    if (root_label[r] == 0) {
      root_label[r] = next_label++;
      out.segments.push_back({root_label[r], {}, root_area[r]});
    }
    out.labels[i] = root_label[r];
    out.planar_mask[i] = 1;
    out.segments[root_label[r] - 1].pixels.push_back(static_cast<std::int32_t>(i));
  }
  return out;
}

// Full planar-region detection from one image + depth: backproject,
// estimate normals, align them to the dominant directions, fuse color and
// geometry dissimilarities and run the graph merge.
inline SegmentationResult detect_planar_regions(const RgbImage& image,
                                                const DepthMap& depth,
                                                const CameraIntrinsics& k,
                                                const DominantDirections& dirs,
                                                const SegmentationParams& params = {}) {
  if (!image.same_shape(depth.values))
    throw InputError("detect_planar_regions: image/depth dimension mismatch");
  PointMap pts = backproject(depth, k);
  NormalMap nm = compute_normals(pts);
  AlignmentResult align = align_normals(nm, dirs);
  Grid<double> dmap = plane_distance_map(pts, align);
  EdgeGraph graph = edge_dissimilarity(image, align, dmap);
  return graph_segment(graph, params.k,
                       params.min_area_pixels(image.width(), image.height()));
}

// Color-only counterpart of detect_planar_regions over the same valid set.
inline SegmentationResult detect_color_only_regions(const RgbImage& image,
                                                    const Mask& valid,
                                                    const SegmentationParams& params = {}) {
  EdgeGraph graph = edge_dissimilarity_color_only(image, valid);
  return graph_segment(graph, params.k,
                       params.min_area_pixels(image.width(), image.height()));
}

}  // namespace mwdepth
