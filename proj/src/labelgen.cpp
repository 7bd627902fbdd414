#include "topokit/labelgen.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <fmt/core.h>

#include "topokit/distance.hpp"
#include "topokit/rng.hpp"

namespace topokit {

namespace {

void check_in_bounds(Vertex v, Size2 size, int id) {
  if (v.row < 0 || v.col < 0 || v.row >= size.height || v.col >= size.width) {
    throw LabelError(fmt::format("instance {}: pixel ({},{}) outside {}x{} raster", id, v.row, v.col, size.height,
                                 size.width));
  }
}

std::vector<const BoundaryInstance*> by_ascending_id(const BoundaryGraph& graph) {
  std::vector<const BoundaryInstance*> order;
  for (const auto& inst : graph.instances) order.push_back(&inst);
  std::stable_sort(order.begin(), order.end(), [](auto* a, auto* b) { return a->id < b->id; });
  return order;
}

}  // namespace

RasterU8 binary_map(const BoundaryGraph& graph, Size2 size) {
  RasterU8 out(size.height, size.width, 1, 0);
  for (const auto& raw : graph.instances) {
    const auto inst = densify(raw);
    for (const Vertex& v : inst.vertices) {
      check_in_bounds(v, size, inst.id);
      out(v.row, v.col) = 1;
    }
  }
  return out;
}

RasterU16 instance_map(const BoundaryGraph& graph, Size2 size) {
  RasterU16 out(size.height, size.width, 1, 0);
  for (const auto* raw : by_ascending_id(graph)) {
    if (raw->id <= 0 || raw->id > std::numeric_limits<std::uint16_t>::max()) {
      throw LabelError(fmt::format("instance id {} does not fit the instance map", raw->id));
    }
    const auto inst = densify(*raw);
    for (const Vertex& v : inst.vertices) {
      check_in_bounds(v, size, inst.id);
      out(v.row, v.col) = static_cast<std::uint16_t>(inst.id);
    }
  }
  return out;
}

RasterU8 endpoint_map(const BoundaryGraph& graph, Size2 size) {
  RasterU8 out(size.height, size.width, 1, 0);
  const int reach = static_cast<int>(std::ceil(kEndpointRadius));
  const auto limit = static_cast<std::int64_t>(kEndpointRadius * kEndpointRadius);
  for (const auto& inst : graph.instances) {
    if (inst.vertices.empty()) continue;
    for (const Vertex end : {inst.vertices.front(), inst.vertices.back()}) {
      for (int r = end.row - reach; r <= end.row + reach; ++r) {
        for (int c = end.col - reach; c <= end.col + reach; ++c) {
          if (out.contains(r, c) && squared_distance({r, c}, end) < limit) out(r, c) = 1;
        }
      }
    }
  }
  return out;
}

float inverse_distance_value(std::int64_t squared_distance) {
  return static_cast<float>(1.0 / (1.0 + std::sqrt(static_cast<double>(squared_distance))));
}

RasterF32 inverse_distance_map(const BoundaryGraph& graph, Size2 size) {
  RasterF32 out(size.height, size.width, 1, 0.0f);
  if (graph.empty()) return out;
  const auto dt = squared_distance_transform(binary_map(graph, size));
  for (std::size_t i = 0; i < dt.size(); ++i) {
    const auto d2 = dt.data()[i];
    out.data()[i] = d2 == kNoSource ? 0.0f : inverse_distance_value(d2);
  }
  return out;
}

RasterF32 direction_map(const RasterF32& id_map) {
  if (id_map.channels() != 1) {
    throw LabelError(fmt::format("direction map needs a single-channel input, got {}", id_map.channels()));
  }
  const int h = id_map.height();
  const int w = id_map.width();
  RasterF32 out(h, w, 2, 0.0f);
  auto px = [&](int r, int c) -> double {
    return id_map(std::clamp(r, 0, h - 1), std::clamp(c, 0, w - 1));
  };
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      const double g_row = (px(r + 1, c - 1) + 2.0 * px(r + 1, c) + px(r + 1, c + 1)) -
                           (px(r - 1, c - 1) + 2.0 * px(r - 1, c) + px(r - 1, c + 1));
      const double g_col = (px(r - 1, c + 1) + 2.0 * px(r, c + 1) + px(r + 1, c + 1)) -
                           (px(r - 1, c - 1) + 2.0 * px(r, c - 1) + px(r + 1, c - 1));
      const double norm = std::hypot(g_row, g_col);
      if (norm > kDirectionEpsilon) {
        out(r, c, 0) = static_cast<float>(g_row / norm);
        out(r, c, 1) = static_cast<float>(g_col / norm);
      }
    }
  }
  return out;
}

double edge_radians(Vertex from, Vertex to) {
  double r = std::atan2(static_cast<double>(to.row - from.row), static_cast<double>(to.col - from.col));
  if (r < 0.0) r += 2.0 * std::numbers::pi;
  if (r >= 2.0 * std::numbers::pi) r = 0.0;
  return r;
}

BoundaryInstance orient_instance(const BoundaryInstance& instance, const OrientationOptions& opts) {
  if (instance.vertices.size() < 2) return instance;
  bool reverse = false;
  if (opts.random_start_seed) {
    Rng rng(*opts.random_start_seed, static_cast<std::uint64_t>(instance.id));
    reverse = rng.below(2) == 1;
  } else {
    reverse = instance.vertices.back() < instance.vertices.front();
  }
  if (!reverse) return instance;
  BoundaryInstance out = instance;
  std::reverse(out.vertices.begin(), out.vertices.end());
  const std::size_t n = out.vertices.size();
  for (auto& k : out.key_indices) k = n - 1 - k;
  std::reverse(out.key_indices.begin(), out.key_indices.end());
  return out;
}

OrientationMap orientation_map(const BoundaryGraph& graph, Size2 size, const OrientationOptions& opts) {
  OrientationMap out{RasterF32(size.height, size.width, 1, 0.0f), RasterU8(size.height, size.width, 1, 0)};
  for (const auto* raw : by_ascending_id(graph)) {
    const auto keys = key_vertices(densify(orient_instance(*raw, opts))).vertices;
    for (std::size_t i = 0; i + 1 < keys.size(); ++i) {
      const auto value = static_cast<float>(edge_radians(keys[i], keys[i + 1]));
      for (const Vertex& v : digital_segment(keys[i], keys[i + 1])) {
        check_in_bounds(v, size, raw->id);
        out.radians(v.row, v.col) = value;
        out.mask(v.row, v.col) = 1;
      }
    }
  }
  return out;
}

}  // namespace topokit
