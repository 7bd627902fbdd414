#include "topokit/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <set>
#include <unordered_set>

#include <fmt/core.h>

namespace topokit {

namespace {

long long floor_div(long long a, long long b) {
  long long q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

// Nearest integer to num/den (den > 0), ties toward the smaller integer.
long long round_half_down(long long num, long long den) {
  // ceil((2 num - den) / (2 den))
  return -floor_div(-(2 * num - den), 2 * den);
}

int sign(int v) { return (v > 0) - (v < 0); }

std::vector<Vertex> drop_consecutive_duplicates(const std::vector<Vertex>& in) {
  std::vector<Vertex> out;
  out.reserve(in.size());
  for (const Vertex& v : in) {
    if (out.empty() || out.back() != v) out.push_back(v);
  }
  return out;
}

bool segment_matches(const std::vector<Vertex>& chain, std::size_t from, std::size_t to) {
  const auto seg = digital_segment(chain[from], chain[to]);
  if (seg.size() != to - from + 1) return false;
  return std::equal(seg.begin(), seg.end(), chain.begin() + static_cast<std::ptrdiff_t>(from));
}

}  // namespace

int chessboard_distance(Vertex a, Vertex b) {
  return std::max(std::abs(a.row - b.row), std::abs(a.col - b.col));
}

std::int64_t squared_distance(Vertex a, Vertex b) {
  const std::int64_t dr = a.row - b.row;
  const std::int64_t dc = a.col - b.col;
  return dr * dr + dc * dc;
}

long long round_half_away(double x) { return static_cast<long long>(std::round(x)); }

void BoundaryInstance::validate() const {
  if (vertices.size() < 2) {
    throw GeometryError(fmt::format("instance {}: needs at least 2 vertices, has {}", id, vertices.size()));
  }
  if (densified) {
    for (std::size_t i = 1; i < vertices.size(); ++i) {
      if (!are_8_neighbors(vertices[i - 1], vertices[i])) {
        throw GeometryError(fmt::format("instance {}: dense chain broken at position {}", id, i));
      }
    }
  }
  // Annotation vertices may not repeat: a repeated vertex would have degree >= 3.
  std::vector<Vertex> keys;
  if (densified && !key_indices.empty()) {
    for (std::size_t k : key_indices) keys.push_back(vertices.at(k));
  } else if (!densified) {
    keys = drop_consecutive_duplicates(vertices);
  }
  if (keys.size() >= 2 && keys.front() == keys.back()) keys.pop_back();  // closed loop
  std::set<Vertex> seen;
  for (const Vertex& v : keys) {
    if (!seen.insert(v).second) {
      throw GeometryError(fmt::format("instance {}: vertex ({},{}) repeats, chains may not branch", id, v.row, v.col));
    }
  }
}

void BoundaryGraph::validate() const {
  std::unordered_set<int> ids;
  for (const auto& inst : instances) {
    if (inst.id <= 0) throw GeometryError(fmt::format("instance id {} is not positive", inst.id));
    if (!ids.insert(inst.id).second) throw GeometryError(fmt::format("duplicate instance id {}", inst.id));
    inst.validate();
  }
}

std::vector<Vertex> digital_segment(Vertex a, Vertex b) {
  const int dr = b.row - a.row;
  const int dc = b.col - a.col;
  const int n = std::max(std::abs(dr), std::abs(dc));
  std::vector<Vertex> out;
  out.reserve(static_cast<std::size_t>(n) + 1);
  if (n == 0) {
    out.push_back(a);
    return out;
  }
  if (std::abs(dc) >= std::abs(dr)) {
    for (int k = 0; k <= n; ++k) {
      out.push_back({a.row + static_cast<int>(round_half_down(static_cast<long long>(k) * dr, n)),
                     a.col + k * sign(dc)});
    }
  } else {
    for (int k = 0; k <= n; ++k) {
      out.push_back({a.row + k * sign(dr),
                     a.col + static_cast<int>(round_half_down(static_cast<long long>(k) * dc, n))});
    }
  }
  return out;
}

BoundaryInstance densify(const BoundaryInstance& instance) {
  if (instance.densified) return instance;
  const auto keys = drop_consecutive_duplicates(instance.vertices);
  if (keys.size() < 2) {
    throw GeometryError(fmt::format("instance {}: cannot densify fewer than 2 distinct vertices", instance.id));
  }
  BoundaryInstance out;
  out.id = instance.id;
  out.densified = true;
  out.vertices.push_back(keys.front());
  out.key_indices.push_back(0);
  for (std::size_t i = 1; i < keys.size(); ++i) {
    const auto seg = digital_segment(keys[i - 1], keys[i]);
    out.vertices.insert(out.vertices.end(), seg.begin() + 1, seg.end());
    out.key_indices.push_back(out.vertices.size() - 1);
  }
  return out;
}

BoundaryGraph densify(const BoundaryGraph& graph) {
  BoundaryGraph out;
  out.instances.reserve(graph.size());
  for (const auto& inst : graph.instances) out.instances.push_back(densify(inst));
  return out;
}

BoundaryInstance key_vertices(const BoundaryInstance& instance) {
  if (!instance.densified) return instance;
  BoundaryInstance out;
  out.id = instance.id;
  const auto& chain = instance.vertices;
  if (!instance.key_indices.empty()) {
    for (std::size_t k : instance.key_indices) out.vertices.push_back(chain.at(k));
    return out;
  }
  if (chain.size() < 2) return BoundaryInstance{instance.id, chain, false, {}};
  std::size_t anchor = 0;
  out.vertices.push_back(chain.front());
  while (anchor + 1 < chain.size()) {
    std::size_t reach = anchor + 1;
    while (reach + 1 < chain.size() && segment_matches(chain, anchor, reach + 1)) ++reach;
    out.vertices.push_back(chain[reach]);
    anchor = reach;
  }
  return out;
}

BoundaryGraph key_vertices(const BoundaryGraph& graph) {
  BoundaryGraph out;
  for (const auto& inst : graph.instances) out.instances.push_back(key_vertices(inst));
  return out;
}

std::vector<Vertex> instance_pixels(const BoundaryInstance& instance) {
  std::vector<Vertex> px = instance.densified ? instance.vertices : densify(instance).vertices;
  std::sort(px.begin(), px.end());
  px.erase(std::unique(px.begin(), px.end()), px.end());
  return px;
}

std::size_t instance_pixel_count(const BoundaryInstance& instance) { return instance_pixels(instance).size(); }

std::vector<Vertex> graph_pixels(const BoundaryGraph& graph) {
  std::vector<Vertex> px;
  for (const auto& inst : graph.instances) {
    const auto& chain = inst.densified ? inst.vertices : densify(inst).vertices;
    px.insert(px.end(), chain.begin(), chain.end());
  }
  std::sort(px.begin(), px.end());
  px.erase(std::unique(px.begin(), px.end()), px.end());
  return px;
}

BoundaryInstance translate(const BoundaryInstance& instance, Vertex offset) {
  BoundaryInstance out = instance;
  for (auto& v : out.vertices) v = v + offset;
  return out;
}

BoundaryGraph translate(const BoundaryGraph& graph, Vertex offset) {
  BoundaryGraph out;
  for (const auto& inst : graph.instances) out.instances.push_back(translate(inst, offset));
  return out;
}

}  // namespace topokit
