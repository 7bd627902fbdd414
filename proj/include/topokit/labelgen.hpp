#pragma once

#include <cstdint>
#include <optional>

#include "topokit/geometry.hpp"
#include "topokit/raster.hpp"

namespace topokit {

class LabelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// M_B: 1 on every pixel covered by the dense sequences, 0 elsewhere.
RasterU8 binary_map(const BoundaryGraph& graph, Size2 size);

/// M_I: instance id on covered pixels; on overlap the higher id wins.
RasterU16 instance_map(const BoundaryGraph& graph, Size2 size);

/// Radius of the endpoint disks in M_E (strict inequality).
inline constexpr double kEndpointRadius = 5.0;

/// M_E: 1 where the Euclidean distance to any instance endpoint is < 5 px.
RasterU8 endpoint_map(const BoundaryGraph& graph, Size2 size);

/// M_ID: 1 / (1 + d) with d the exact Euclidean distance to the nearest
/// boundary pixel. All zeros for an empty graph.
RasterF32 inverse_distance_map(const BoundaryGraph& graph, Size2 size);

/// Maps a squared pixel distance to the stored M_ID value.
float inverse_distance_value(std::int64_t squared_distance);

inline constexpr double kDirectionEpsilon = 1e-8;

/// M_D: two channels (row, col) holding the normalised 3x3 Sobel gradient of
/// M_ID, replicate padding; (0, 0) where the gradient norm is <= 1e-8.
RasterF32 direction_map(const RasterF32& inverse_distance);

struct OrientationOptions {
  /// When set, each instance picks its starting endpoint at random from a
  /// stream derived from this seed; otherwise the lexicographically smaller
  /// (row, col) endpoint starts.
  std::optional<std::uint64_t> random_start_seed;
};

struct OrientationMap {
  RasterF32 radians;  // [0, 2*pi) on boundary pixels, 0 on background
  RasterU8 mask;      // 1 on boundary pixels
};

/// Orients an instance so that it starts at its chosen start endpoint.
BoundaryInstance orient_instance(const BoundaryInstance& instance, const OrientationOptions& opts = {});

/// atan2(d_row, d_col) normalised to [0, 2*pi).
double edge_radians(Vertex from, Vertex to);

/// M_O: each annotation edge paints its dense pixels with its radian value,
/// walking from the start endpoint; a joint pixel carries the later edge.
OrientationMap orientation_map(const BoundaryGraph& graph, Size2 size, const OrientationOptions& opts = {});

}  // namespace topokit
