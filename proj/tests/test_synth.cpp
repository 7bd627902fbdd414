#include "doctest.h"
#include "oracles.hpp"

#include "topokit/ingest.hpp"
#include "topokit/metrics.hpp"
#include "topokit/synth.hpp"

using namespace topokit;

TEST_SUITE("synth") {

TEST_CASE("zero degradation reproduces the gt") {
  SceneSpec spec;
  spec.seed = 4;
  const auto s = generate_scene(spec);
  REQUIRE(s.gt.size() == 3);
  REQUIRE(s.pred.size() == 3);
  CHECK(graph_pixels(s.gt) == graph_pixels(s.pred));
  const auto r = evaluate(s.pred, s.gt);
  CHECK(r.ecm == doctest::Approx(1.0));
  CHECK(r.pixel[0].f1 == 1.0);
}

TEST_CASE("generated instances never touch or self-intersect") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    SceneSpec spec;
    spec.seed = seed;
    spec.n_instances = 5;
    spec.shape = static_cast<ShapeFamily>(seed % 3);
    const auto s = generate_scene(spec);
    CHECK(junction_pixels(s.gt).empty());
    for (std::size_t i = 0; i < s.gt.size(); ++i) {
      for (std::size_t j = i + 1; j < s.gt.size(); ++j) {
        for (const Vertex& a : instance_pixels(s.gt.instances[i])) {
          for (const Vertex& b : instance_pixels(s.gt.instances[j])) REQUIRE(chessboard_distance(a, b) > 1);
        }
      }
    }
  }
}

TEST_CASE("seed determinism and stage isolation") {
  SceneSpec spec;
  spec.seed = 8;
  spec.degradation.gap_count = 1;
  const auto a = generate_scene(spec);
  const auto b = generate_scene(spec);
  CHECK(graph_pixels(a.pred) == graph_pixels(b.pred));
  // Adding spurious fragments leaves the earlier stages untouched.
  auto more = spec;
  more.degradation.spurious_count = 2;
  const auto c = generate_scene(more);
  REQUIRE(c.pred.size() == a.pred.size() + 2);
  for (std::size_t i = 0; i < a.pred.size(); ++i) CHECK(c.pred.instances[i].vertices == a.pred.instances[i].vertices);
}

TEST_CASE("gaps remove exactly gap_length pixels each") {
  SceneSpec spec;
  spec.seed = 1;
  spec.n_instances = 1;
  spec.shape = ShapeFamily::straight;
  spec.degradation.gap_count = 2;
  spec.degradation.gap_length = 4;
  const auto s = generate_scene(spec);
  REQUIRE(s.pred.size() == 3);
  std::size_t total = 0;
  for (const auto& p : s.pred.instances) {
    CHECK(p.vertices.size() >= 2);
    total += p.vertices.size();
  }
  CHECK(total + 8 == densify(s.gt.instances[0]).vertices.size());
}

TEST_CASE("drop fraction removes instances") {
  SceneSpec spec;
  spec.seed = 2;
  spec.n_instances = 4;
  spec.degradation.drop_fraction = 0.5;
  CHECK(generate_scene(spec).pred.size() == 2);
}

TEST_CASE("infeasible specs are rejected") {
  SceneSpec spec;
  spec.shape = ShapeFamily::straight;
  spec.min_length = spec.max_length = 20;
  spec.degradation.gap_count = 10;
  CHECK_THROWS_AS(generate_scene(spec), SynthError);
  SceneSpec crowded;
  crowded.size = {8, 8};
  crowded.n_instances = 40;
  crowded.min_length = 5;
  crowded.max_length = 6;
  CHECK_THROWS_AS(generate_scene(crowded), SynthError);
  SceneSpec bad;
  bad.degradation.gap_zone_begin = 0.8;
  bad.degradation.gap_zone_end = 0.2;
  CHECK_THROWS_AS(bad.validate(), SynthError);
}

TEST_CASE("placeholder image is 4-channel") {
  const auto img = placeholder_image({3, 5});
  CHECK(img.channels() == 4);
  CHECK(img.height() == 3);
  CHECK(img.width() == 5);
}

}
