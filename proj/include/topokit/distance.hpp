#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "topokit/geometry.hpp"
#include "topokit/raster.hpp"

namespace topokit {

/// Marker for "no source pixel reachable" in squared-distance output.
inline constexpr std::int64_t kNoSource = std::numeric_limits<std::int64_t>::max();

/// Exact squared Euclidean distance transform (lower envelope of parabolas,
/// one pass per axis). Returns, for every pixel, the squared distance to the
/// nearest pixel with a non-zero mask value, or kNoSource when the mask is empty.
Raster<std::int64_t> squared_distance_transform(const RasterU8& sources);

/// Squared distance from each query to the nearest source pixel. The transform
/// runs on the bounding box of sources and queries, so coordinates may be
/// arbitrary. Empty sources yield kNoSource for every query.
std::vector<std::int64_t> nearest_squared_distances(std::span<const Vertex> sources,
                                                    std::span<const Vertex> queries);

/// Chessboard (L-infinity) distance to the nearest source pixel, same
/// conventions as nearest_squared_distances.
std::vector<std::int64_t> nearest_chessboard_distances(std::span<const Vertex> sources,
                                                       std::span<const Vertex> queries);

}  // namespace topokit
