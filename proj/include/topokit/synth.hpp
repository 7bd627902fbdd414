#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include "topokit/geometry.hpp"
#include "topokit/raster.hpp"

namespace topokit {

class SynthError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class ShapeFamily { straight, polyline, arc };
std::string to_string(ShapeFamily shape);
ShapeFamily shape_family_from_string(const std::string& s);

/// Applied in the fixed order drop -> gap -> jitter -> spurious.
struct Degradation {
  double drop_fraction = 0.0;  // share of gt instances removed (rounded)
  int gap_count = 0;           // gaps cut into every surviving instance
  int gap_length = 3;          // pixels removed per gap
  double gap_zone_begin = 0.0; // gaps are placed within this fraction of the chain
  double gap_zone_end = 1.0;
  double jitter_sigma = 0.0;   // px, applied to key vertices
  int spurious_count = 0;      // short random fragments added
  int spurious_max_length = 12;
};

struct SceneSpec {
  std::uint64_t seed = 0;
  Size2 size{256, 256};
  int n_instances = 3;
  ShapeFamily shape = ShapeFamily::polyline;
  int min_length = 40;   // Euclidean length of each gt instance, px
  int max_length = 160;
  Degradation degradation;

  void validate() const;
};

struct Scene {
  BoundaryGraph gt;    // sparse annotation instances
  BoundaryGraph pred;  // densified chains
};

/// Deterministic under spec.seed. Instance i draws from stream i; every
/// degradation stage has its own stream, so changing one stage never shifts
/// another.
Scene generate_scene(const SceneSpec& spec);

/// Flat 4-channel placeholder image for a patch.
RasterU8 placeholder_image(Size2 size);

}  // namespace topokit
