#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "topokit/geometry.hpp"
#include "topokit/ingest.hpp"
#include "topokit/metrics.hpp"
#include "topokit/raster.hpp"
#include "topokit/rollout.hpp"
#include "topokit/synth.hpp"

namespace topokit {

using json = nlohmann::json;

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---- annotation files ------------------------------------------------------

enum class Units { pixels, feet_geo };
std::string to_string(Units units);

struct TileRecord {
  std::string id;
  int width = 5000;
  int height = 5000;
  GeoPoint geo_origin;
  double resolution = 1.0;
  /// Points are [row, col] in pixel units, [x, y] in feet-geo units.
  std::vector<std::vector<std::array<double, 2>>> polylines;

  friend bool operator==(const TileRecord& a, const TileRecord& b) {
    return a.id == b.id && a.width == b.width && a.height == b.height && a.geo_origin.x == b.geo_origin.x &&
           a.geo_origin.y == b.geo_origin.y && a.resolution == b.resolution && a.polylines == b.polylines;
  }
};

struct AnnotationFile {
  int version = 1;
  Units units = Units::pixels;
  std::vector<TileRecord> tiles;

  friend bool operator==(const AnnotationFile&, const AnnotationFile&) = default;
};

AnnotationFile annotation_from_json(const json& j);
json annotation_to_json(const AnnotationFile& file);
AnnotationFile read_annotation_file(const std::filesystem::path& path);

/// Converts a record to a tile in image coordinates (ids 1..n in file order).
Tile to_tile(const TileRecord& record, Units units);
TileRecord to_record(const Tile& tile);

// ---- graphs and patches ----------------------------------------------------

json graph_to_json(const BoundaryGraph& graph);
BoundaryGraph graph_from_json(const json& j);

json patch_to_json(const Patch& patch);
Patch patch_from_json(const json& j);

/// Reads a patch file; a bare {"instances": [...]} graph file is accepted too
/// (size defaults to 1000x1000).
Patch read_patch_file(const std::filesystem::path& path);
void write_patch_file(const std::filesystem::path& path, const Patch& patch);

json filter_report_to_json(const FilterReport& r);

// ---- rasters ---------------------------------------------------------------

/// "TBND", u32 height, u32 width, u32 channels, then H*W*C little-endian f32.
void write_tbnd(const std::filesystem::path& path, const RasterF32& raster);
RasterF32 read_tbnd(const std::filesystem::path& path);
std::vector<std::uint8_t> encode_tbnd(const RasterF32& raster);
RasterF32 decode_tbnd(const std::vector<std::uint8_t>& bytes);

/// 8-bit PNG with 1, 3 or 4 channels.
void write_png(const std::filesystem::path& path, const RasterU8& raster);
/// Grayscale PNG; 8-bit when every value fits, 16-bit otherwise.
void write_png(const std::filesystem::path& path, const RasterU16& raster);
/// Reads 8- or 16-bit PNGs into a 16-bit raster (channels preserved).
RasterU16 read_png(const std::filesystem::path& path);

// ---- metrics ---------------------------------------------------------------

/// One "key=value" per line: precision@tau, recall@tau, f1@tau, then the
/// connectivity metrics.
std::string report_to_kv(const MetricReport& report);
json report_to_json(const MetricReport& report);

// ---- rollout ---------------------------------------------------------------

json rollout_config_to_json(const RolloutConfig& cfg);

/// One JSON object per line: a "step" record per step, then an "end" record
/// carrying the terminal reason of the episode.
void write_trace_jsonl(std::ostream& out, const std::vector<RolloutTrace>& traces);
std::vector<RolloutTrace> read_trace_jsonl(const std::filesystem::path& path);
/// v_hat values per episode, for replay:<file> policies.
std::map<int, std::vector<Vertex>> read_replay_proposals(const std::filesystem::path& path);

// ---- synthetic scenes -------------------------------------------------------

SceneSpec scene_spec_from_json(const json& j);
json scene_spec_to_json(const SceneSpec& spec);

// ---- misc ------------------------------------------------------------------

json read_json_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);
std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path);
/// FNV-1a 64-bit digest of a file's bytes.
std::uint64_t file_digest(const std::filesystem::path& path);

}  // namespace topokit
