#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace topokit {

/// Pixel position in image coordinates: row grows downward, col grows to the
/// right, origin at the top-left pixel center. Angles everywhere in the
/// toolkit are atan2(d_row, d_col).
struct Vertex {
  int row = 0;
  int col = 0;

  friend auto operator<=>(const Vertex&, const Vertex&) = default;
};

inline Vertex operator+(Vertex a, Vertex b) { return {a.row + b.row, a.col + b.col}; }
inline Vertex operator-(Vertex a, Vertex b) { return {a.row - b.row, a.col - b.col}; }

/// max(|d_row|, |d_col|)
int chessboard_distance(Vertex a, Vertex b);
std::int64_t squared_distance(Vertex a, Vertex b);
inline bool are_8_neighbors(Vertex a, Vertex b) { return chessboard_distance(a, b) == 1; }

/// Round half away from zero. Used for every coordinate quantization.
long long round_half_away(double x);

class GeometryError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// One branchless road-boundary polyline.
///
/// A sparse instance holds annotation vertices only. A densified instance holds
/// an 8-connected chain; `key_indices` then marks the chain positions that were
/// annotation vertices (always including both ends).
struct BoundaryInstance {
  int id = 0;
  std::vector<Vertex> vertices;
  bool densified = false;
  std::vector<std::size_t> key_indices;

  Vertex front() const { return vertices.front(); }
  Vertex back() const { return vertices.back(); }

  /// Throws GeometryError when fewer than 2 vertices, when a vertex is
  /// revisited (degree >= 3, closed loops excepted), or when the dense flag is
  /// set on a chain that is not 8-connected.
  void validate() const;
};

struct BoundaryGraph {
  std::vector<BoundaryInstance> instances;

  bool empty() const { return instances.empty(); }
  std::size_t size() const { return instances.size(); }
  /// Instance ids must be positive and unique.
  void validate() const;
};

/// 8-connected digital segment from `a` to `b`, both ends included.
///
/// The minor coordinate at each major step is the exact rational position
/// rounded to nearest, ties toward the smaller minor coordinate, so the pixel
/// set does not depend on traversal direction.
std::vector<Vertex> digital_segment(Vertex a, Vertex b);

/// Dense sequence S_D: Bresenham-connects consecutive annotation vertices.
/// Consecutive duplicate vertices are dropped first. Already-densified input is
/// returned unchanged.
BoundaryInstance densify(const BoundaryInstance& instance);
BoundaryGraph densify(const BoundaryGraph& graph);

/// Annotation sequence S_A. Uses the retained key markers when present,
/// otherwise greedily recovers the shortest key-vertex list whose
/// densification reproduces the chain.
BoundaryInstance key_vertices(const BoundaryInstance& instance);
BoundaryGraph key_vertices(const BoundaryGraph& graph);

/// Number of distinct pixels covered by the densified chain.
std::size_t instance_pixel_count(const BoundaryInstance& instance);

/// Distinct pixels of a graph, densified, sorted.
std::vector<Vertex> graph_pixels(const BoundaryGraph& graph);
std::vector<Vertex> instance_pixels(const BoundaryInstance& instance);

BoundaryInstance translate(const BoundaryInstance& instance, Vertex offset);
BoundaryGraph translate(const BoundaryGraph& graph, Vertex offset);

}  // namespace topokit
