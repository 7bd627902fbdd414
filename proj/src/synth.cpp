#include "topokit/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <set>

#include <fmt/core.h>

#include "topokit/ingest.hpp"
#include "topokit/rng.hpp"

namespace topokit {

namespace {

// Stream ids per generation stage; instance streams use 0..n-1.
constexpr std::uint64_t kDropStream = 1'000'001;
constexpr std::uint64_t kGapStream = 2'000'000;
constexpr std::uint64_t kJitterStream = 3'000'000;
constexpr std::uint64_t kSpuriousStream = 4'000'000;
constexpr int kPlacementAttempts = 400;

constexpr double kPi = std::numbers::pi;

Vertex polar_step(double row, double col, double heading, double length) {
  return {static_cast<int>(round_half_away(row + length * std::sin(heading))),
          static_cast<int>(round_half_away(col + length * std::cos(heading)))};
}

std::vector<Vertex> make_shape(const SceneSpec& spec, Rng& rng) {
  const double length = rng.uniform(spec.min_length, spec.max_length);
  const Vertex start{rng.between(0, spec.size.height - 1), rng.between(0, spec.size.width - 1)};
  double heading = rng.uniform(0.0, 2.0 * kPi);
  std::vector<Vertex> pts{start};
  switch (spec.shape) {
    case ShapeFamily::straight:
      pts.push_back(polar_step(start.row, start.col, heading, length));
      break;
    case ShapeFamily::polyline: {
      const int edges = rng.between(2, 5);
      double r = start.row, c = start.col;
      for (int e = 0; e < edges; ++e) {
        const double step = length / edges;
        r += step * std::sin(heading);
        c += step * std::cos(heading);
        pts.push_back({static_cast<int>(round_half_away(r)), static_cast<int>(round_half_away(c))});
        heading += rng.uniform(-kPi / 4.0, kPi / 4.0);
      }
      break;
    }
    case ShapeFamily::arc: {
      const double sweep = rng.uniform(kPi / 4.0, kPi / 2.0) * (rng.below(2) == 0 ? 1.0 : -1.0);
      const int edges = std::max(3, static_cast<int>(length / 12.0));
      double r = start.row, c = start.col;
      for (int e = 0; e < edges; ++e) {
        const double step = length / edges;
        r += step * std::sin(heading);
        c += step * std::cos(heading);
        pts.push_back({static_cast<int>(round_half_away(r)), static_cast<int>(round_half_away(c))});
        heading += sweep / edges;
      }
      break;
    }
  }
  return pts;
}

bool in_bounds(const std::vector<Vertex>& pts, Size2 size) {
  return std::all_of(pts.begin(), pts.end(), [size](Vertex v) {
    return v.row >= 0 && v.col >= 0 && v.row < size.height && v.col < size.width;
  });
}

// Pixels within chessboard distance 1 of any occupied pixel are reserved, so
// generated instances never touch.
bool clashes(const std::vector<Vertex>& dense, const std::set<Vertex>& reserved) {
  return std::any_of(dense.begin(), dense.end(), [&reserved](Vertex v) { return reserved.contains(v); });
}

void reserve(const std::vector<Vertex>& dense, std::set<Vertex>& reserved) {
  for (const Vertex& v : dense) {
    for (int dr = -1; dr <= 1; ++dr) {
      for (int dc = -1; dc <= 1; ++dc) reserved.insert({v.row + dr, v.col + dc});
    }
  }
}

BoundaryInstance piece_of(const BoundaryInstance& dense, std::size_t from, std::size_t to_exclusive) {
  BoundaryInstance out;
  out.densified = true;
  out.vertices.assign(dense.vertices.begin() + static_cast<std::ptrdiff_t>(from),
                      dense.vertices.begin() + static_cast<std::ptrdiff_t>(to_exclusive));
  out.key_indices.push_back(0);
  for (std::size_t k : dense.key_indices) {
    if (k > from && k + 1 < to_exclusive) out.key_indices.push_back(k - from);
  }
  out.key_indices.push_back(out.vertices.size() - 1);
  return out;
}

std::vector<BoundaryInstance> cut_gaps(const BoundaryInstance& dense, const Degradation& deg, Rng& rng) {
  if (deg.gap_count <= 0) return {dense};
  const std::size_t n = dense.vertices.size();
  const auto gap = static_cast<std::size_t>(deg.gap_length);
  const std::size_t needed = static_cast<std::size_t>(deg.gap_count) * (gap + 2) + 2;
  if (n < needed) {
    throw SynthError(fmt::format("{} gaps of {} px do not fit an instance of {} px", deg.gap_count, deg.gap_length, n));
  }
  const double zone_lo = std::floor(deg.gap_zone_begin * static_cast<double>(n));
  const double zone_hi = std::ceil(deg.gap_zone_end * static_cast<double>(n));
  const double width = (zone_hi - zone_lo) / deg.gap_count;
  std::vector<std::size_t> starts;
  std::size_t prev_end = 0;
  for (int g = 0; g < deg.gap_count; ++g) {
    const double sub_lo = zone_lo + g * width;
    const double sub_hi = zone_lo + (g + 1) * width;
    const auto lo = std::max({static_cast<long long>(std::ceil(sub_lo)), static_cast<long long>(prev_end) + 2, 2LL});
    const auto hi = std::min(static_cast<long long>(std::floor(sub_hi)) - static_cast<long long>(gap),
                             static_cast<long long>(n) - 2 - static_cast<long long>(gap));
    if (lo > hi) {
      throw SynthError(fmt::format("gap {} of {} px does not fit zone [{}, {}) of a {} px instance", g, gap,
                                   deg.gap_zone_begin, deg.gap_zone_end, n));
    }
    const auto start = static_cast<std::size_t>(lo + static_cast<long long>(rng.below(static_cast<std::uint64_t>(hi - lo + 1))));
    starts.push_back(start);
    prev_end = start + gap;
  }
  std::vector<BoundaryInstance> pieces;
  std::size_t from = 0;
  for (std::size_t s : starts) {
    pieces.push_back(piece_of(dense, from, s));
    from = s + gap;
  }
  pieces.push_back(piece_of(dense, from, n));
  return pieces;
}

BoundaryInstance jitter(const BoundaryInstance& piece, double sigma, Size2 size, Rng& rng) {
  auto keys = key_vertices(piece);
  for (auto& v : keys.vertices) {
    v.row = std::clamp(v.row + static_cast<int>(round_half_away(rng.normal(0.0, sigma))), 0, size.height - 1);
    v.col = std::clamp(v.col + static_cast<int>(round_half_away(rng.normal(0.0, sigma))), 0, size.width - 1);
  }
  keys.vertices.erase(std::unique(keys.vertices.begin(), keys.vertices.end()), keys.vertices.end());
  if (keys.vertices.size() < 2) return piece;
  return densify(keys);
}

}  // namespace

std::string to_string(ShapeFamily shape) {
  switch (shape) {
    case ShapeFamily::straight: return "straight";
    case ShapeFamily::polyline: return "polyline";
    case ShapeFamily::arc: return "arc";
  }
  return "polyline";
}

ShapeFamily shape_family_from_string(const std::string& s) {
  if (s == "straight") return ShapeFamily::straight;
  if (s == "polyline") return ShapeFamily::polyline;
  if (s == "arc" || s == "arc-approximation") return ShapeFamily::arc;
  throw std::invalid_argument("unknown shape family: " + s);
}

void SceneSpec::validate() const {
  if (size.height < 4 || size.width < 4) throw SynthError("scene must be at least 4x4");
  if (n_instances < 0) throw SynthError("n_instances must be >= 0");
  if (min_length < 2 || max_length < min_length) throw SynthError("need 2 <= min_length <= max_length");
  const auto& d = degradation;
  if (d.drop_fraction < 0.0 || d.drop_fraction > 1.0) throw SynthError("drop_fraction must lie in [0, 1]");
  if (d.gap_count < 0 || d.gap_length < 1) throw SynthError("gap_count must be >= 0 and gap_length >= 1");
  if (!(0.0 <= d.gap_zone_begin && d.gap_zone_begin < d.gap_zone_end && d.gap_zone_end <= 1.0)) {
    throw SynthError("gap zone must satisfy 0 <= begin < end <= 1");
  }
  if (d.jitter_sigma < 0.0) throw SynthError("jitter_sigma must be >= 0");
  if (d.spurious_count < 0 || d.spurious_max_length < 2) throw SynthError("bad spurious fragment settings");
}

Scene generate_scene(const SceneSpec& spec) {
  spec.validate();
  Scene scene;
  std::set<Vertex> reserved;
  for (int i = 0; i < spec.n_instances; ++i) {
    Rng rng(spec.seed, static_cast<std::uint64_t>(i));
    bool placed = false;
    for (int attempt = 0; attempt < kPlacementAttempts && !placed; ++attempt) {
      BoundaryInstance inst;
      inst.id = i + 1;
      inst.vertices = make_shape(spec, rng);
      inst.vertices.erase(std::unique(inst.vertices.begin(), inst.vertices.end()), inst.vertices.end());
      if (inst.vertices.size() < 2 || !in_bounds(inst.vertices, spec.size)) continue;
      const auto dense = densify(inst);
      if (clashes(dense.vertices, reserved)) continue;
      if (!junction_pixels(BoundaryGraph{{dense}}).empty()) continue;
      reserve(dense.vertices, reserved);
      scene.gt.instances.push_back(std::move(inst));
      placed = true;
    }
    if (!placed) {
      throw SynthError(fmt::format("could not place instance {} of {} in a {}x{} scene", i + 1, spec.n_instances,
                                   spec.size.height, spec.size.width));
    }
  }

  const auto& deg = spec.degradation;
  // drop
  std::vector<std::size_t> survivors(scene.gt.size());
  std::iota(survivors.begin(), survivors.end(), 0);
  {
    Rng rng(spec.seed, kDropStream);
    const auto n_drop = static_cast<std::size_t>(round_half_away(deg.drop_fraction * static_cast<double>(survivors.size())));
    for (std::size_t k = 0; k < n_drop; ++k) {
      const std::size_t pick = k + rng.below(survivors.size() - k);
      std::swap(survivors[k], survivors[pick]);
    }
    survivors.erase(survivors.begin(), survivors.begin() + static_cast<std::ptrdiff_t>(n_drop));
    std::sort(survivors.begin(), survivors.end());
  }
  // gap
  std::vector<BoundaryInstance> pieces;
  for (std::size_t idx : survivors) {
    Rng rng(spec.seed, kGapStream + idx);
    for (auto& p : cut_gaps(densify(scene.gt.instances[idx]), deg, rng)) pieces.push_back(std::move(p));
  }
  // jitter
  if (deg.jitter_sigma > 0.0) {
    for (std::size_t k = 0; k < pieces.size(); ++k) {
      Rng rng(spec.seed, kJitterStream + k);
      pieces[k] = jitter(pieces[k], deg.jitter_sigma, spec.size, rng);
    }
  }
  // spurious
  for (int s = 0; s < deg.spurious_count; ++s) {
    Rng rng(spec.seed, kSpuriousStream + static_cast<std::uint64_t>(s));
    for (int attempt = 0; attempt < kPlacementAttempts; ++attempt) {
      const Vertex a{rng.between(0, spec.size.height - 1), rng.between(0, spec.size.width - 1)};
      const Vertex b = polar_step(a.row, a.col, rng.uniform(0.0, 2.0 * kPi),
                                  rng.uniform(1.0, static_cast<double>(deg.spurious_max_length - 1)));
      if (a == b || !in_bounds({a, b}, spec.size)) continue;
      pieces.push_back(densify(BoundaryInstance{0, {a, b}, false, {}}));
      break;
    }
  }
  int next_id = 1;
  for (auto& p : pieces) {
    p.id = next_id++;
    scene.pred.instances.push_back(std::move(p));
  }
  return scene;
}

RasterU8 placeholder_image(Size2 size) { return RasterU8(size.height, size.width, 4, 0); }

}  // namespace topokit
