#include "topokit/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>

#include <fmt/core.h>

#include "topokit/rng.hpp"

namespace topokit {

Vertex geo_to_image(GeoPoint point, const Tile& tile) {
  if (!(tile.resolution > 0.0)) throw std::invalid_argument("tile resolution must be positive");
  const double row = (tile.geo_origin.y - point.y) / tile.resolution;
  const double col = (point.x - tile.geo_origin.x) / tile.resolution;
  const long long r = round_half_away(row);
  const long long c = round_half_away(col);
  if (r < 0 || c < 0 || r >= tile.height || c >= tile.width) {
    throw OutOfRangeError(fmt::format("geo point ({}, {}) maps to pixel ({}, {}) outside tile '{}' ({}x{})",
                                      point.x, point.y, r, c, tile.id, tile.height, tile.width));
  }
  return {static_cast<int>(r), static_cast<int>(c)};
}

GeoPoint image_to_geo(Vertex v, const Tile& tile) {
  return {tile.geo_origin.x + v.col * tile.resolution, tile.geo_origin.y - v.row * tile.resolution};
}

namespace {

struct Interval {
  double t0 = 0.0;
  double t1 = 1.0;
};

// Liang-Barsky against the closed window.
std::optional<Interval> clip_segment(Vertex a, Vertex b, const Window& w) {
  const double dr = b.row - a.row;
  const double dc = b.col - a.col;
  const double p[4] = {-dr, dr, -dc, dc};
  const double q[4] = {static_cast<double>(a.row - w.r0), static_cast<double>(w.r1 - a.row),
                       static_cast<double>(a.col - w.c0), static_cast<double>(w.c1 - a.col)};
  Interval iv;
  for (int k = 0; k < 4; ++k) {
    if (p[k] == 0.0) {
      if (q[k] < 0.0) return std::nullopt;
      continue;
    }
    const double t = q[k] / p[k];
    if (p[k] < 0.0) {
      iv.t0 = std::max(iv.t0, t);
    } else {
      iv.t1 = std::min(iv.t1, t);
    }
    if (iv.t0 > iv.t1) return std::nullopt;
  }
  return iv;
}

struct Cut {
  Vertex pixel;
  bool replaced = false;
  std::array<double, 2> exact{};
};

Cut cut_at(Vertex a, Vertex b, double t, const Window& w) {
  if (t == 0.0) return {a};
  if (t == 1.0) return {b};
  const double r = a.row + t * (b.row - a.row);
  const double c = a.col + t * (b.col - a.col);
  Vertex px{static_cast<int>(round_half_away(r)), static_cast<int>(round_half_away(c))};
  px.row = std::clamp(px.row, w.r0, w.r1);
  px.col = std::clamp(px.col, w.c0, w.c1);
  return {px, true, {r, c}};
}

void push_cut(ClippedPiece& piece, const Cut& cut) {
  if (!piece.vertices.empty() && piece.vertices.back() == cut.pixel) {
    // A replacement that lands on the previous vertex still marks it as cut.
    if (cut.replaced && (piece.replaced.empty() || piece.replaced.back() != piece.vertices.size() - 1)) {
      piece.replaced.push_back(piece.vertices.size() - 1);
      piece.exact.push_back(cut.exact);
    }
    return;
  }
  piece.vertices.push_back(cut.pixel);
  if (cut.replaced) {
    piece.replaced.push_back(piece.vertices.size() - 1);
    piece.exact.push_back(cut.exact);
  }
}

}  // namespace

std::vector<ClippedPiece> clip_polyline(const std::vector<Vertex>& polyline, const Window& window) {
  std::vector<ClippedPiece> pieces;
  std::optional<ClippedPiece> open;
  auto close = [&]() {
    if (open && open->vertices.size() >= 2) pieces.push_back(std::move(*open));
    open.reset();
  };
  if (polyline.size() == 1 && window.contains(polyline.front())) return pieces;
  for (std::size_t i = 0; i + 1 < polyline.size(); ++i) {
    const Vertex a = polyline[i];
    const Vertex b = polyline[i + 1];
    const auto iv = clip_segment(a, b, window);
    if (!iv) {
      close();
      continue;
    }
    const Cut start = cut_at(a, b, iv->t0, window);
    const Cut end = cut_at(a, b, iv->t1, window);
    if (!(open && iv->t0 == 0.0)) {
      close();
      open.emplace();
      push_cut(*open, start);
    }
    push_cut(*open, end);
    if (iv->t1 < 1.0) close();
  }
  close();
  return pieces;
}

std::vector<ClippedPiece> clip_graph(const BoundaryGraph& graph, const Window& window) {
  std::vector<ClippedPiece> out;
  for (const auto& inst : graph.instances) {
    const auto sparse = key_vertices(inst);
    auto pieces = clip_polyline(sparse.vertices, window);
    for (auto& p : pieces) out.push_back(std::move(p));
  }
  return out;
}

std::vector<Patch> split_tile(const Tile& tile, const SplitConfig& cfg) {
  if (cfg.patch_size <= 0 || cfg.grid <= 0) throw std::invalid_argument("patch size and grid must be positive");
  std::vector<Patch> patches;
  patches.reserve(static_cast<std::size_t>(cfg.grid) * cfg.grid);
  for (int pr = 0; pr < cfg.grid; ++pr) {
    for (int pc = 0; pc < cfg.grid; ++pc) {
      Patch patch;
      patch.tile_id = tile.id;
      patch.index = pr * cfg.grid + pc;
      patch.offset = {pr * cfg.patch_size, pc * cfg.patch_size};
      patch.size = {cfg.patch_size, cfg.patch_size};
      const Window window{patch.offset.row, patch.offset.col, patch.offset.row + cfg.patch_size - 1,
                          patch.offset.col + cfg.patch_size - 1};
      int next_id = 1;
      for (auto& piece : clip_graph(tile.boundaries, window)) {
        BoundaryInstance inst;
        inst.id = next_id++;
        inst.vertices.reserve(piece.vertices.size());
        for (const Vertex& v : piece.vertices) inst.vertices.push_back(v - patch.offset);
        patch.boundaries.instances.push_back(std::move(inst));
      }
      patches.push_back(std::move(patch));
    }
  }
  return patches;
}

std::string to_string(FilterReason reason) {
  switch (reason) {
    case FilterReason::none: return "none";
    case FilterReason::empty: return "empty";
    case FilterReason::has_intersection: return "has_intersection";
    case FilterReason::too_complex: return "too_complex";
  }
  return "none";
}

FilterReason filter_reason_from_string(const std::string& s) {
  if (s == "none") return FilterReason::none;
  if (s == "empty") return FilterReason::empty;
  if (s == "has_intersection") return FilterReason::has_intersection;
  if (s == "too_complex") return FilterReason::too_complex;
  throw std::invalid_argument("unknown filter reason: " + s);
}

std::vector<Vertex> junction_pixels(const BoundaryGraph& graph) {
  std::map<Vertex, int> coverage;
  // Diagonal steps keyed by the top-left pixel of their 2x2 block: bit 0 for
  // the down-right diagonal, bit 1 for the down-left one.
  std::map<Vertex, int> diagonals;
  for (const auto& raw : graph.instances) {
    const auto inst = densify(raw);
    const auto& chain = inst.vertices;
    const bool closed = chain.size() > 2 && chain.front() == chain.back();
    const std::size_t n = closed ? chain.size() - 1 : chain.size();
    for (std::size_t i = 0; i < n; ++i) ++coverage[chain[i]];
    for (std::size_t i = 0; i + 1 < chain.size(); ++i) {
      const Vertex a = chain[i], b = chain[i + 1];
      if (a.row == b.row || a.col == b.col) continue;
      const Vertex top_left{std::min(a.row, b.row), std::min(a.col, b.col)};
      const bool backslash = (b.row - a.row) == (b.col - a.col);
      diagonals[top_left] |= backslash ? 1 : 2;
    }
  }
  std::set<Vertex> out;
  for (const auto& [px, count] : coverage) {
    if (count >= 2) out.insert(px);
  }
  for (const auto& [px, kinds] : diagonals) {
    if (kinds == 3) out.insert(px);
  }
  return {out.begin(), out.end()};
}

FilterReport filter_patch(const Patch& patch, const FilterConfig& cfg) {
  FilterReport report;
  report.tile_id = patch.tile_id;
  report.patch_index = patch.index;
  auto drop = [&report](FilterReason why) {
    report.kept = false;
    report.reason = why;
    return report;
  };
  if (patch.boundaries.empty()) return drop(FilterReason::empty);
  if (!junction_pixels(patch.boundaries).empty()) return drop(FilterReason::has_intersection);
  std::int64_t pixels = 0;
  for (const auto& inst : patch.boundaries.instances) pixels += static_cast<std::int64_t>(instance_pixel_count(inst));
  if (static_cast<int>(patch.boundaries.size()) > cfg.max_instances || pixels > cfg.max_pixels) {
    return drop(FilterReason::too_complex);
  }
  return report;
}

std::string to_string(SplitName s) {
  switch (s) {
    case SplitName::train: return "train";
    case SplitName::valid: return "valid";
    case SplitName::test: return "test";
    case SplitName::pretrain: return "pretrain";
  }
  return "train";
}

SplitRatios default_split_ratios() {
  constexpr double total = 21556.0;
  return {10057.0 / total, 1092.0 / total, 2085.0 / total, 8322.0 / total};
}

std::array<std::size_t, 4> split_sizes(std::size_t n, const SplitRatios& ratios) {
  double sum = 0.0;
  for (double r : ratios) {
    if (r < 0.0) throw std::invalid_argument("split ratios must be non-negative");
    sum += r;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw std::invalid_argument(fmt::format("split ratios sum to {}, not 1", sum));
  std::array<std::size_t, 4> sizes{};
  std::array<double, 4> frac{};
  std::size_t assigned = 0;
  for (std::size_t k = 0; k < 4; ++k) {
    const double quota = static_cast<double>(n) * ratios[k];
    sizes[k] = static_cast<std::size_t>(std::floor(quota));
    frac[k] = quota - std::floor(quota);
    assigned += sizes[k];
  }
  std::array<std::size_t, 4> order{0, 1, 2, 3};
  std::stable_sort(order.begin(), order.end(), [&frac](std::size_t a, std::size_t b) { return frac[a] > frac[b]; });
  for (std::size_t i = 0; assigned < n; ++i, ++assigned) ++sizes[order[i % 4]];
  return sizes;
}

std::vector<SplitName> make_splits(std::size_t patch_count, std::uint64_t seed, const SplitRatios& ratios) {
  if (patch_count == 0) throw std::invalid_argument("cannot split an empty patch list");
  const auto sizes = split_sizes(patch_count, ratios);
  std::vector<std::size_t> perm(patch_count);
  std::iota(perm.begin(), perm.end(), 0);
  Rng rng(seed);
  for (std::size_t i = patch_count - 1; i > 0; --i) {
    const std::size_t j = rng.below(i + 1);
    std::swap(perm[i], perm[j]);
  }
  std::vector<SplitName> out(patch_count);
  std::size_t cursor = 0;
  for (std::size_t k = 0; k < 4; ++k) {
    for (std::size_t m = 0; m < sizes[k]; ++m) out[perm[cursor++]] = static_cast<SplitName>(k);
  }
  return out;
}

}  // namespace topokit
