#include "topokit/io.hpp"

#include <bit>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <sstream>

#include <fmt/core.h>
#include <png.h>

namespace topokit {

namespace fs = std::filesystem;

namespace {

json vertex_json(Vertex v) { return json::array({v.row, v.col}); }

Vertex vertex_from(const json& j) {
  if (!j.is_array() || j.size() != 2) throw FormatError("vertex must be a [row, col] pair");
  auto coord = [](const json& x) {
    if (x.is_number_integer()) return x.get<int>();
    if (x.is_number()) return static_cast<int>(round_half_away(x.get<double>()));
    throw FormatError("vertex coordinate must be a number");
  };
  return {coord(j[0]), coord(j[1])};
}

template <typename F>
auto guarded(const std::string& what, F&& f) {
  try {
    return f();
  } catch (const json::exception& e) {
    throw FormatError(fmt::format("{}: {}", what, e.what()));
  }
}

}  // namespace

// ---- annotation files ------------------------------------------------------

std::string to_string(Units units) { return units == Units::pixels ? "pixels" : "feet-geo"; }

AnnotationFile annotation_from_json(const json& j) {
  return guarded("annotation file", [&] {
    AnnotationFile file;
    file.version = j.value("version", 1);
    const std::string units = j.value("units", std::string("pixels"));
    if (units == "pixels") {
      file.units = Units::pixels;
    } else if (units == "feet-geo") {
      file.units = Units::feet_geo;
    } else {
      throw FormatError("units must be 'pixels' or 'feet-geo', got '" + units + "'");
    }
    for (const auto& t : j.at("tiles")) {
      TileRecord rec;
      rec.id = t.at("id").get<std::string>();
      rec.width = t.value("width", 5000);
      rec.height = t.value("height", 5000);
      if (t.contains("geo_origin")) {
        rec.geo_origin = {t["geo_origin"].at(0).get<double>(), t["geo_origin"].at(1).get<double>()};
      }
      rec.resolution = t.value("resolution", 1.0);
      if (!(rec.resolution > 0.0)) throw FormatError(fmt::format("tile '{}': resolution must be positive", rec.id));
      if (rec.width <= 0 || rec.height <= 0) throw FormatError(fmt::format("tile '{}': bad size", rec.id));
      for (const auto& line : t.at("polylines")) {
        if (!line.is_array() || line.size() < 2) {
          throw FormatError(fmt::format("tile '{}': every polyline needs at least 2 points", rec.id));
        }
        auto& pts = rec.polylines.emplace_back();
        for (const auto& p : line) {
          if (!p.is_array() || p.size() != 2) throw FormatError(fmt::format("tile '{}': point must be a pair", rec.id));
          pts.push_back({p[0].get<double>(), p[1].get<double>()});
        }
      }
      file.tiles.push_back(std::move(rec));
    }
    return file;
  });
}

json annotation_to_json(const AnnotationFile& file) {
  json tiles = json::array();
  for (const auto& rec : file.tiles) {
    json lines = json::array();
    for (const auto& line : rec.polylines) {
      json pts = json::array();
      for (const auto& p : line) pts.push_back(json::array({p[0], p[1]}));
      lines.push_back(std::move(pts));
    }
    tiles.push_back({{"id", rec.id},
                     {"width", rec.width},
                     {"height", rec.height},
                     {"geo_origin", json::array({rec.geo_origin.x, rec.geo_origin.y})},
                     {"resolution", rec.resolution},
                     {"polylines", std::move(lines)}});
  }
  return {{"version", file.version}, {"units", to_string(file.units)}, {"tiles", std::move(tiles)}};
}

AnnotationFile read_annotation_file(const fs::path& path) { return annotation_from_json(read_json_file(path)); }

Tile to_tile(const TileRecord& record, Units units) {
  Tile tile;
  tile.id = record.id;
  tile.width = record.width;
  tile.height = record.height;
  tile.geo_origin = record.geo_origin;
  tile.resolution = record.resolution;
  int next_id = 1;
  for (const auto& line : record.polylines) {
    BoundaryInstance inst;
    inst.id = next_id++;
    for (const auto& p : line) {
      if (units == Units::feet_geo) {
        inst.vertices.push_back(geo_to_image({p[0], p[1]}, tile));
      } else {
        const Vertex v{static_cast<int>(round_half_away(p[0])), static_cast<int>(round_half_away(p[1]))};
        if (v.row < 0 || v.col < 0 || v.row >= tile.height || v.col >= tile.width) {
          throw OutOfRangeError(fmt::format("tile '{}': pixel ({},{}) outside the tile", tile.id, v.row, v.col));
        }
        inst.vertices.push_back(v);
      }
    }
    tile.boundaries.instances.push_back(std::move(inst));
  }
  return tile;
}

TileRecord to_record(const Tile& tile) {
  TileRecord rec;
  rec.id = tile.id;
  rec.width = tile.width;
  rec.height = tile.height;
  rec.geo_origin = tile.geo_origin;
  rec.resolution = tile.resolution;
  for (const auto& inst : tile.boundaries.instances) {
    auto& pts = rec.polylines.emplace_back();
    for (const Vertex& v : key_vertices(inst).vertices) {
      pts.push_back({static_cast<double>(v.row), static_cast<double>(v.col)});
    }
  }
  return rec;
}

// ---- graphs and patches ----------------------------------------------------

json graph_to_json(const BoundaryGraph& graph) {
  json instances = json::array();
  for (const auto& inst : graph.instances) {
    json verts = json::array();
    for (const Vertex& v : inst.vertices) verts.push_back(vertex_json(v));
    json item = {{"id", inst.id}, {"vertices", std::move(verts)}};
    if (inst.densified) {
      item["densified"] = true;
      item["key_indices"] = inst.key_indices;
    }
    instances.push_back(std::move(item));
  }
  return {{"instances", std::move(instances)}};
}

BoundaryGraph graph_from_json(const json& j) {
  return guarded("graph", [&] {
    BoundaryGraph graph;
    int next_id = 1;
    for (const auto& item : j.at("instances")) {
      BoundaryInstance inst;
      inst.id = item.value("id", next_id);
      next_id = inst.id + 1;
      for (const auto& v : item.at("vertices")) inst.vertices.push_back(vertex_from(v));
      inst.densified = item.value("densified", false);
      if (item.contains("key_indices")) inst.key_indices = item["key_indices"].get<std::vector<std::size_t>>();
      for (std::size_t k : inst.key_indices) {
        if (k >= inst.vertices.size()) throw FormatError(fmt::format("instance {}: key index out of range", inst.id));
      }
      graph.instances.push_back(std::move(inst));
    }
    try {
      graph.validate();
    } catch (const GeometryError& e) {
      throw FormatError(e.what());
    }
    return graph;
  });
}

json patch_to_json(const Patch& patch) {
  json j = {{"version", 1},
            {"tile_id", patch.tile_id},
            {"index", patch.index},
            {"offset", vertex_json(patch.offset)},
            {"size", json::array({patch.size.height, patch.size.width})},
            {"image", patch.image_ref ? json(*patch.image_ref) : json(nullptr)}};
  j["instances"] = graph_to_json(patch.boundaries)["instances"];
  return j;
}

Patch patch_from_json(const json& j) {
  return guarded("patch", [&] {
    Patch patch;
    patch.tile_id = j.value("tile_id", std::string());
    patch.index = j.value("index", 0);
    if (j.contains("offset")) patch.offset = vertex_from(j["offset"]);
    if (j.contains("size")) patch.size = {j["size"].at(0).get<int>(), j["size"].at(1).get<int>()};
    if (j.contains("image") && j["image"].is_string()) patch.image_ref = j["image"].get<std::string>();
    patch.boundaries = graph_from_json(j);
    for (const auto& inst : patch.boundaries.instances) {
      for (const Vertex& v : inst.vertices) {
        if (v.row < 0 || v.col < 0 || v.row >= patch.size.height || v.col >= patch.size.width) {
          throw FormatError(fmt::format("instance {}: vertex ({},{}) outside the {}x{} patch", inst.id, v.row, v.col,
                                        patch.size.height, patch.size.width));
        }
      }
    }
    return patch;
  });
}

Patch read_patch_file(const fs::path& path) { return patch_from_json(read_json_file(path)); }

void write_patch_file(const fs::path& path, const Patch& patch) {
  write_text_file(path, patch_to_json(patch).dump(1) + "\n");
}

json filter_report_to_json(const FilterReport& r) {
  return {{"tile_id", r.tile_id},
          {"index", r.patch_index},
          {"verdict", r.kept ? "kept" : "dropped"},
          {"reason", to_string(r.reason)}};
}

// ---- rasters ---------------------------------------------------------------

std::vector<std::uint8_t> encode_tbnd(const RasterF32& raster) {
  std::vector<std::uint8_t> out;
  out.reserve(16 + 4 * raster.size());
  out.insert(out.end(), {'T', 'B', 'N', 'D'});
  auto put_u32 = [&out](std::uint32_t v) {
    for (int b = 0; b < 4; ++b) out.push_back(static_cast<std::uint8_t>(v >> (8 * b)));
  };
  put_u32(static_cast<std::uint32_t>(raster.height()));
  put_u32(static_cast<std::uint32_t>(raster.width()));
  put_u32(static_cast<std::uint32_t>(raster.channels()));
  for (float f : raster.data()) put_u32(std::bit_cast<std::uint32_t>(f));
  return out;
}

RasterF32 decode_tbnd(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 16 || std::memcmp(bytes.data(), "TBND", 4) != 0) throw FormatError("not a TBND file");
  auto get_u32 = [&bytes](std::size_t at) {
    std::uint32_t v = 0;
    for (int b = 0; b < 4; ++b) v |= static_cast<std::uint32_t>(bytes[at + b]) << (8 * b);
    return v;
  };
  const auto h = get_u32(4), w = get_u32(8), c = get_u32(12);
  const std::uint64_t expected = 16 + 4ULL * h * w * c;
  if (bytes.size() != expected) {
    throw FormatError(fmt::format("TBND size mismatch: {} bytes, header implies {}", bytes.size(), expected));
  }
  RasterF32 r(static_cast<int>(h), static_cast<int>(w), static_cast<int>(c));
  for (std::size_t i = 0; i < r.size(); ++i) r.data()[i] = std::bit_cast<float>(get_u32(16 + 4 * i));
  return r;
}

void write_tbnd(const fs::path& path, const RasterF32& raster) {
  const auto bytes = encode_tbnd(raster);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot open for writing: " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

RasterF32 read_tbnd(const fs::path& path) { return decode_tbnd(read_bytes(path)); }

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

// Rows are pre-packed big-endian bytes, as PNG expects.
void write_png_rows(const fs::path& path, int height, int width, int bit_depth, int color_type,
                    const std::vector<std::vector<std::uint8_t>>& rows) {
  FilePtr fp(std::fopen(path.string().c_str(), "wb"));
  if (!fp) throw FormatError("cannot open for writing: " + path.string());
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw FormatError("png_create_write_struct failed");
  png_infop info = png_create_info_struct(png);
  if (!info || setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw FormatError("libpng failed writing " + path.string());
  }
  png_init_io(png, fp.get());
  png_set_compression_level(png, 9);
  png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), bit_depth, color_type,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (const auto& row : rows) png_write_row(png, row.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

int color_type_for(int channels) {
  switch (channels) {
    case 1: return PNG_COLOR_TYPE_GRAY;
    case 2: return PNG_COLOR_TYPE_GRAY_ALPHA;
    case 3: return PNG_COLOR_TYPE_RGB;
    case 4: return PNG_COLOR_TYPE_RGBA;
  }
  throw FormatError(fmt::format("PNG cannot store {} channels", channels));
}

}  // namespace

void write_png(const fs::path& path, const RasterU8& raster) {
  const int color = color_type_for(raster.channels());
  std::vector<std::vector<std::uint8_t>> rows(static_cast<std::size_t>(raster.height()));
  const auto stride = static_cast<std::size_t>(raster.width()) * raster.channels();
  for (int r = 0; r < raster.height(); ++r) {
    const auto* begin = raster.data().data() + static_cast<std::size_t>(r) * stride;
    rows[static_cast<std::size_t>(r)].assign(begin, begin + stride);
  }
  write_png_rows(path, raster.height(), raster.width(), 8, color, rows);
}

void write_png(const fs::path& path, const RasterU16& raster) {
  const int color = color_type_for(raster.channels());
  bool fits8 = true;
  for (auto v : raster.data()) fits8 = fits8 && v <= 255;
  const auto stride = static_cast<std::size_t>(raster.width()) * raster.channels();
  std::vector<std::vector<std::uint8_t>> rows(static_cast<std::size_t>(raster.height()));
  for (int r = 0; r < raster.height(); ++r) {
    auto& row = rows[static_cast<std::size_t>(r)];
    const auto* src = raster.data().data() + static_cast<std::size_t>(r) * stride;
    for (std::size_t i = 0; i < stride; ++i) {
      if (fits8) {
        row.push_back(static_cast<std::uint8_t>(src[i]));
      } else {
        row.push_back(static_cast<std::uint8_t>(src[i] >> 8));
        row.push_back(static_cast<std::uint8_t>(src[i] & 0xFF));
      }
    }
  }
  write_png_rows(path, raster.height(), raster.width(), fits8 ? 8 : 16, color, rows);
}

RasterU16 read_png(const fs::path& path) {
  FilePtr fp(std::fopen(path.string().c_str(), "rb"));
  if (!fp) throw FormatError("cannot open: " + path.string());
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw FormatError("png_create_read_struct failed");
  png_infop info = png_create_info_struct(png);
  if (!info || setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw FormatError("libpng failed reading " + path.string());
  }
  png_init_io(png, fp.get());
  png_read_info(png, info);
  const auto width = static_cast<int>(png_get_image_width(png, info));
  const auto height = static_cast<int>(png_get_image_height(png, info));
  const int depth = png_get_bit_depth(png, info);
  const int channels = png_get_channels(png, info);
  if (depth != 8 && depth != 16) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw FormatError(fmt::format("unsupported PNG bit depth {}", depth));
  }
  const std::size_t rowbytes = png_get_rowbytes(png, info);
  std::vector<std::uint8_t> row(rowbytes);
  RasterU16 out(height, width, channels);
  std::size_t cursor = 0;
  for (int r = 0; r < height; ++r) {
    png_read_row(png, row.data(), nullptr);
    const std::size_t n = static_cast<std::size_t>(width) * channels;
    for (std::size_t i = 0; i < n; ++i) {
      out.data()[cursor++] = depth == 8 ? row[i] : static_cast<std::uint16_t>((row[2 * i] << 8) | row[2 * i + 1]);
    }
  }
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return out;
}

// ---- metrics ---------------------------------------------------------------

namespace {

std::string tau_label(double tau) {
  if (tau == std::floor(tau)) return fmt::format("{}", static_cast<long long>(tau));
  return fmt::format("{}", tau);
}

}  // namespace

std::string report_to_kv(const MetricReport& report) {
  std::string out;
  for (std::size_t k = 0; k < report.taus.size(); ++k) {
    const auto t = tau_label(report.taus[k]);
    out += fmt::format("precision@{}={:.6f}\n", t, report.pixel[k].precision);
    out += fmt::format("recall@{}={:.6f}\n", t, report.pixel[k].recall);
    out += fmt::format("f1@{}={:.6f}\n", t, report.pixel[k].f1);
  }
  out += fmt::format("naive_connectivity={:.6f}\n", report.naive_connectivity);
  out += fmt::format("icurb_connectivity={:.6f}\n", report.icurb_connectivity);
  out += fmt::format("ecm={:.6f}\n", report.ecm);
  return out;
}

json report_to_json(const MetricReport& report) {
  json pixel = json::array();
  for (std::size_t k = 0; k < report.taus.size(); ++k) {
    pixel.push_back({{"tau", report.taus[k]},
                     {"precision", report.pixel[k].precision},
                     {"recall", report.pixel[k].recall},
                     {"f1", report.pixel[k].f1}});
  }
  return {{"pixel", std::move(pixel)},
          {"naive_connectivity", report.naive_connectivity},
          {"icurb_connectivity", report.icurb_connectivity},
          {"ecm", report.ecm}};
}

// ---- rollout ---------------------------------------------------------------

json rollout_config_to_json(const RolloutConfig& cfg) {
  return {{"theta", cfg.theta},   {"d_max", cfg.d_max},         {"beta0", cfg.beta0},
          {"beta_min", cfg.beta_min}, {"lambda", cfg.lambda},   {"max_steps", cfg.max_steps},
          {"rounds", cfg.rounds}, {"init_sigma", cfg.init_sigma}, {"seed", cfg.seed}};
}

void write_trace_jsonl(std::ostream& out, const std::vector<RolloutTrace>& traces) {
  for (const auto& tr : traces) {
    for (std::size_t t = 0; t < tr.steps.size(); ++t) {
      const auto& s = tr.steps[t];
      const json line = {{"type", "step"},
                         {"episode", tr.episode},
                         {"round", tr.round},
                         {"instance", tr.instance_id},
                         {"t", t},
                         {"v_hat", vertex_json(s.learner)},
                         {"v_star", vertex_json(s.expert)},
                         {"v", vertex_json(s.applied)},
                         {"beta", s.beta},
                         {"r_prev", s.previous_radians}};
      out << line.dump() << '\n';
    }
    const json end = {{"type", "end"},
                      {"episode", tr.episode},
                      {"round", tr.round},
                      {"instance", tr.instance_id},
                      {"init", vertex_json(tr.init)},
                      {"steps", tr.steps.size()},
                      {"terminal", to_string(tr.terminal)}};
    out << end.dump() << '\n';
  }
}

std::vector<RolloutTrace> read_trace_jsonl(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open: " + path.string());
  std::map<int, RolloutTrace> by_episode;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    guarded(fmt::format("{}:{}", path.string(), lineno), [&] {
      const auto j = json::parse(line);
      const int ep = j.at("episode").get<int>();
      auto& tr = by_episode[ep];
      tr.episode = ep;
      tr.round = j.value("round", 0);
      tr.instance_id = j.value("instance", 0);
      const auto type = j.at("type").get<std::string>();
      if (type == "step") {
        tr.steps.push_back({vertex_from(j.at("v_hat")), vertex_from(j.at("v_star")), vertex_from(j.at("v")),
                            j.at("beta").get<double>(), j.at("r_prev").get<double>()});
      } else if (type == "end") {
        tr.init = vertex_from(j.at("init"));
        const auto term = j.at("terminal").get<std::string>();
        tr.terminal = term == "reached_end" ? TerminalReason::reached_end
                      : term == "off_track" ? TerminalReason::off_track
                                            : TerminalReason::max_steps;
      } else {
        throw FormatError("unknown trace record type: " + type);
      }
      return 0;
    });
  }
  std::vector<RolloutTrace> out;
  for (auto& [ep, tr] : by_episode) out.push_back(std::move(tr));
  return out;
}

std::map<int, std::vector<Vertex>> read_replay_proposals(const fs::path& path) {
  std::map<int, std::vector<Vertex>> out;
  for (const auto& tr : read_trace_jsonl(path)) {
    auto& list = out[tr.episode];
    for (const auto& s : tr.steps) list.push_back(s.learner);
  }
  return out;
}

// ---- synthetic scenes -------------------------------------------------------

SceneSpec scene_spec_from_json(const json& j) {
  return guarded("scene spec", [&] {
    SceneSpec spec;
    spec.seed = j.value("seed", std::uint64_t{0});
    if (j.contains("size")) {
      const auto& s = j["size"];
      spec.size = s.is_array() ? Size2{s.at(0).get<int>(), s.at(1).get<int>()} : Size2{s.get<int>(), s.get<int>()};
    }
    spec.n_instances = j.value("n_instances", spec.n_instances);
    spec.shape = shape_family_from_string(j.value("shape", to_string(spec.shape)));
    spec.min_length = j.value("min_length", spec.min_length);
    spec.max_length = j.value("max_length", spec.max_length);
    if (j.contains("degradation")) {
      const auto& d = j["degradation"];
      auto& deg = spec.degradation;
      deg.drop_fraction = d.value("drop_fraction", deg.drop_fraction);
      deg.gap_count = d.value("gap_count", deg.gap_count);
      deg.gap_length = d.value("gap_length", deg.gap_length);
      if (d.contains("gap_zone")) {
        deg.gap_zone_begin = d["gap_zone"].at(0).get<double>();
        deg.gap_zone_end = d["gap_zone"].at(1).get<double>();
      }
      deg.jitter_sigma = d.value("jitter_sigma", deg.jitter_sigma);
      deg.spurious_count = d.value("spurious_count", deg.spurious_count);
      deg.spurious_max_length = d.value("spurious_max_length", deg.spurious_max_length);
    }
    spec.validate();
    return spec;
  });
}

json scene_spec_to_json(const SceneSpec& spec) {
  const auto& d = spec.degradation;
  return {{"seed", spec.seed},
          {"size", json::array({spec.size.height, spec.size.width})},
          {"n_instances", spec.n_instances},
          {"shape", to_string(spec.shape)},
          {"min_length", spec.min_length},
          {"max_length", spec.max_length},
          {"degradation",
           {{"drop_fraction", d.drop_fraction},
            {"gap_count", d.gap_count},
            {"gap_length", d.gap_length},
            {"gap_zone", json::array({d.gap_zone_begin, d.gap_zone_end})},
            {"jitter_sigma", d.jitter_sigma},
            {"spurious_count", d.spurious_count},
            {"spurious_max_length", d.spurious_max_length}}}};
}

// ---- misc ------------------------------------------------------------------

json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open: " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw FormatError(fmt::format("{}: {}", path.string(), e.what()));
  }
}

void write_text_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot open for writing: " + path.string());
  out << text;
}

std::vector<std::uint8_t> read_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open: " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::uint64_t file_digest(const fs::path& path) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::uint8_t b : read_bytes(path)) {
    h ^= b;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace topokit
