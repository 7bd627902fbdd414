#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "topokit/geometry.hpp"
#include "topokit/raster.hpp"

namespace topokit {

struct GeoPoint {
  double x = 0.0;  // easting, feet
  double y = 0.0;  // northing, feet
};

struct Tile {
  std::string id;
  int width = 5000;
  int height = 5000;
  GeoPoint geo_origin;     // geo position of pixel (0, 0)
  double resolution = 1.0; // feet per pixel
  BoundaryGraph boundaries;
};

struct Patch {
  std::string tile_id;
  int index = 0;
  Vertex offset;           // patch origin in tile pixels
  Size2 size{1000, 1000};
  BoundaryGraph boundaries;
  std::optional<std::string> image_ref;
};

struct SplitConfig {
  int patch_size = 1000;
  int grid = 5;
};

class OutOfRangeError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

/// Affine geo -> image transform; rounds half away from zero. Throws
/// OutOfRangeError when the pixel falls outside the tile.
Vertex geo_to_image(GeoPoint point, const Tile& tile);
/// Pixel center back to geo coordinates.
GeoPoint image_to_geo(Vertex v, const Tile& tile);

/// Closed pixel window [r0, r1] x [c0, c1] in pixel-center coordinates.
struct Window {
  int r0 = 0, c0 = 0, r1 = 0, c1 = 0;
  bool contains(Vertex v) const { return v.row >= r0 && v.row <= r1 && v.col >= c0 && v.col <= c1; }
  bool on_border(Vertex v) const {
    return contains(v) && (v.row == r0 || v.row == r1 || v.col == c0 || v.col == c1);
  }
};

/// A clipped piece of one source instance.
struct ClippedPiece {
  std::vector<Vertex> vertices;  // window coordinates are NOT applied; same frame as input
  // Positions in `vertices` that replace an outside vertex (border intersections).
  std::vector<std::size_t> replaced;
  // Real-valued intersection each replacement was rounded from, same order.
  std::vector<std::array<double, 2>> exact;
};

/// Clips an annotation polyline to a window. An edge leaving the window is cut
/// at its intersection with the window border, rounded to the nearest pixel;
/// a polyline that leaves and re-enters yields several pieces. Pieces that
/// collapse to a single pixel are discarded.
std::vector<ClippedPiece> clip_polyline(const std::vector<Vertex>& polyline, const Window& window);

/// Splits a tile into grid x grid patches (row-major index), clipping every
/// instance to each window and renumbering instance ids 1..n per patch.
std::vector<Patch> split_tile(const Tile& tile, const SplitConfig& cfg = {});

/// Clip report of a single patch: pieces plus bookkeeping, used by split_tile
/// and exposed for verification.
std::vector<ClippedPiece> clip_graph(const BoundaryGraph& graph, const Window& window);

struct FilterConfig {
  int max_instances = 15;
  std::int64_t max_pixels = 12000;
};

enum class FilterReason { none, empty, has_intersection, too_complex };

struct FilterReport {
  std::string tile_id;
  int patch_index = 0;
  bool kept = true;
  FilterReason reason = FilterReason::none;
};

std::string to_string(FilterReason reason);
FilterReason filter_reason_from_string(const std::string& s);

/// Pixels covered by two or more non-consecutive chain positions, across or
/// within instances, after densification. Two diagonal steps crossing inside
/// one 2x2 block share no pixel; such a crossing reports the block's top-left
/// pixel. Sorted.
std::vector<Vertex> junction_pixels(const BoundaryGraph& graph);

FilterReport filter_patch(const Patch& patch, const FilterConfig& cfg = {});

enum class SplitName { train, valid, test, pretrain };
std::string to_string(SplitName s);

using SplitRatios = std::array<double, 4>;  // train, valid, test, pretrain

/// 10057 : 1092 : 2085 : 8322 normalised over 21,556 patches.
SplitRatios default_split_ratios();

/// Deterministic seeded shuffle, then partition with largest-remainder
/// rounding. Returns the split of each input position.
std::vector<SplitName> make_splits(std::size_t patch_count, std::uint64_t seed,
                                   const SplitRatios& ratios = default_split_ratios());

/// Partition sizes for `n` items under largest-remainder rounding.
std::array<std::size_t, 4> split_sizes(std::size_t n, const SplitRatios& ratios);

}  // namespace topokit
