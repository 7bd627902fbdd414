#include "doctest.h"
#include "oracles.hpp"

#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "topokit/io.hpp"

using namespace topokit;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "topokit_io_tests";
  fs::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST_SUITE("io") {

TEST_CASE("annotation round-trip is the identity") {
  const auto j = json::parse(R"({
    "version": 1, "units": "feet-geo",
    "tiles": [{"id": "A", "width": 5000, "height": 5000, "geo_origin": [1000.5, 9000.25], "resolution": 0.5,
               "polylines": [[[1001.0, 8999.0], [1100.0, 8900.0]], [[1200.0, 8800.0], [1201.5, 8800.0], [1300.0, 8750.0]]]}]
  })");
  const auto a = annotation_from_json(j);
  const auto b = annotation_from_json(json::parse(annotation_to_json(a).dump()));
  CHECK(a == b);
  CHECK(annotation_to_json(b) == annotation_to_json(a));
  const auto tile = to_tile(a.tiles[0], a.units);
  REQUIRE(tile.boundaries.size() == 2);
  CHECK(tile.boundaries.instances[0].vertices.front() == Vertex{3, 1});
}

TEST_CASE("malformed annotations are rejected") {
  CHECK_THROWS_AS(annotation_from_json(json::parse(R"({"units":"miles","tiles":[]})")), FormatError);
  CHECK_THROWS_AS(annotation_from_json(json::parse(R"({"tiles":[{"id":"x","polylines":[[[0,0]]]}]})")), FormatError);
  CHECK_THROWS_AS(annotation_from_json(json::parse(R"({"tiles":[{"polylines":[]}]})")), FormatError);
  const auto out = annotation_from_json(json::parse(R"({"tiles":[{"id":"x","polylines":[[[0,0],[9999,0]]]}]})"));
  CHECK_THROWS_AS(to_tile(out.tiles[0], out.units), OutOfRangeError);
}

TEST_CASE("patch JSON round-trip") {
  Patch p;
  p.tile_id = "T";
  p.index = 7;
  p.offset = {1000, 2000};
  p.size = {100, 120};
  p.image_ref = "img.png";
  p.boundaries.instances.push_back({1, {{0, 0}, {50, 60}}, false, {}});
  p.boundaries.instances.push_back(densify(BoundaryInstance{2, {{10, 10}, {10, 20}, {30, 30}}, false, {}}));
  const auto q = patch_from_json(json::parse(patch_to_json(p).dump()));
  CHECK(q.tile_id == "T");
  CHECK(q.index == 7);
  CHECK(q.offset == p.offset);
  CHECK(q.size.width == 120);
  CHECK(q.image_ref == p.image_ref);
  REQUIRE(q.boundaries.size() == 2);
  CHECK(q.boundaries.instances[1].densified);
  CHECK(q.boundaries.instances[1].key_indices == p.boundaries.instances[1].key_indices);
  CHECK(q.boundaries.instances[1].vertices == p.boundaries.instances[1].vertices);
}

TEST_CASE("patch vertices must lie inside") {
  const auto j = json::parse(R"({"size":[10,10],"instances":[{"id":1,"vertices":[[0,0],[10,3]]}]})");
  CHECK_THROWS_AS(patch_from_json(j), FormatError);
  const auto bare = patch_from_json(json::parse(R"({"instances":[{"vertices":[[0,0],[3,3]]}]})"));
  CHECK(bare.size.height == 1000);
  CHECK(bare.boundaries.instances[0].id == 1);
}

TEST_CASE("TBND layout and bit-exact round trip") {
  RasterF32 r(2, 3, 2);
  for (std::size_t i = 0; i < r.size(); ++i) r.data()[i] = static_cast<float>(i) * 0.1f - 0.3f;
  r.data()[5] = -0.0f;
  const auto bytes = encode_tbnd(r);
  CHECK(bytes.size() == 16 + 4 * 12);
  CHECK(std::memcmp(bytes.data(), "TBND", 4) == 0);
  CHECK(bytes[4] == 2);
  CHECK(bytes[8] == 3);
  CHECK(bytes[12] == 2);
  // 1.0f little-endian is 00 00 80 3f.
  RasterF32 one(1, 1, 1, 1.0f);
  const auto ob = encode_tbnd(one);
  CHECK(std::vector<std::uint8_t>(ob.begin() + 16, ob.end()) == std::vector<std::uint8_t>{0x00, 0x00, 0x80, 0x3f});

  const auto path = scratch("r.tbnd");
  write_tbnd(path, r);
  const auto back = read_tbnd(path);
  CHECK(back.channels() == 2);
  CHECK(std::memcmp(back.data().data(), r.data().data(), 4 * r.size()) == 0);
  auto truncated = bytes;
  truncated.pop_back();
  CHECK_THROWS_AS(decode_tbnd(truncated), FormatError);
}

TEST_CASE("PNG round trip, 8 and 16 bit") {
  RasterU8 a(4, 5, 1, 0);
  a(1, 2) = 1;
  a(3, 4) = 255;
  const auto pa = scratch("a.png");
  write_png(pa, a);
  const auto ra = read_png(pa);
  CHECK(ra(1, 2) == 1);
  CHECK(ra(3, 4) == 255);
  CHECK(ra(0, 0) == 0);

  RasterU16 b(3, 3, 1, 0);
  b(2, 2) = 1000;
  const auto pb = scratch("b.png");
  write_png(pb, b);
  CHECK(read_png(pb)(2, 2) == 1000);

  RasterU8 rgb(2, 2, 3, 7);
  write_png(scratch("c.png"), rgb);
  CHECK(read_png(scratch("c.png")).channels() == 3);
  write_png(scratch("d.png"), rgb);
  CHECK(file_digest(scratch("c.png")) == file_digest(scratch("d.png")));
}

TEST_CASE("report serialisation") {
  MetricReport r;
  r.taus = {1, 2.5};
  r.pixel = {{1.0, 0.5, 2.0 / 3.0}, {1.0, 1.0, 1.0}};
  r.ecm = 0.9;
  const auto kv = report_to_kv(r);
  CHECK(kv.find("precision@1=1.000000\n") != std::string::npos);
  CHECK(kv.find("f1@2.5=1.000000\n") != std::string::npos);
  CHECK(kv.find("ecm=0.900000\n") != std::string::npos);
  const auto j = report_to_json(r);
  CHECK(j["pixel"][0]["recall"] == 0.5);
}

TEST_CASE("trace JSONL round trip") {
  RolloutTrace t;
  t.episode = 3;
  t.round = 1;
  t.instance_id = 2;
  t.init = {4, 5};
  t.steps.push_back({{1, 2}, {3, 4}, {2, 3}, 0.5, 1.25});
  t.terminal = TerminalReason::reached_end;
  const auto path = scratch("t.jsonl");
  {
    std::ofstream out(path);
    write_trace_jsonl(out, {t});
  }
  const auto back = read_trace_jsonl(path);
  REQUIRE(back.size() == 1);
  CHECK(back[0].episode == 3);
  CHECK(back[0].init == Vertex{4, 5});
  CHECK(back[0].terminal == TerminalReason::reached_end);
  REQUIRE(back[0].steps.size() == 1);
  CHECK(back[0].steps[0].applied == Vertex{2, 3});
  CHECK(back[0].steps[0].previous_radians == 1.25);
  CHECK(read_replay_proposals(path).at(3) == std::vector<Vertex>{{1, 2}});
}

TEST_CASE("scene spec round trip") {
  SceneSpec s;
  s.seed = 77;
  s.size = {300, 200};
  s.degradation.gap_zone_begin = 0.25;
  s.degradation.jitter_sigma = 1.5;
  const auto t = scene_spec_from_json(scene_spec_to_json(s));
  CHECK(scene_spec_to_json(t) == scene_spec_to_json(s));
  CHECK_THROWS_AS(scene_spec_from_json(json::parse(R"({"shape":"spiral"})")), std::invalid_argument);
}

}
