#include "doctest.h"
#include "oracles.hpp"

#include "topokit/distance.hpp"

using namespace topokit;

TEST_SUITE("distance") {

TEST_CASE("squared EDT equals the brute-force oracle") {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    Rng rng(seed, 7);
    const int h = rng.between(1, 40), w = rng.between(1, 40);
    RasterU8 src(h, w, 1, 0);
    std::set<Vertex> sources;
    const int n = rng.between(1, 12);
    for (int k = 0; k < n; ++k) {
      const Vertex v{rng.between(0, h - 1), rng.between(0, w - 1)};
      src(v.row, v.col) = 1;
      sources.insert(v);
    }
    const auto edt = squared_distance_transform(src);
    const auto ref = oracle::brute_edt(sources, h, w);
    for (int r = 0; r < h; ++r) {
      for (int c = 0; c < w; ++c) REQUIRE(edt(r, c) == ref[static_cast<std::size_t>(r) * w + c]);
    }
  }
}

TEST_CASE("EDT without sources reports kNoSource") {
  RasterU8 src(3, 4, 1, 0);
  const auto edt = squared_distance_transform(src);
  for (auto v : edt.data()) CHECK(v == kNoSource);
}

TEST_CASE("nearest distance queries outside the source box") {
  const std::vector<Vertex> sources{{0, 0}, {10, 10}};
  const std::vector<Vertex> queries{{-3, 0}, {5, 6}, {10, 14}};
  CHECK(nearest_squared_distances(sources, queries) == std::vector<std::int64_t>{9, 41, 16});
  CHECK(nearest_chessboard_distances(sources, queries) == std::vector<std::int64_t>{3, 5, 4});
}

TEST_CASE("chessboard queries match brute force") {
  Rng rng(99, 1);
  for (int t = 0; t < 50; ++t) {
    std::vector<Vertex> s, q;
    for (int k = 0; k < 8; ++k) s.push_back({rng.between(0, 30), rng.between(0, 30)});
    for (int k = 0; k < 20; ++k) q.push_back({rng.between(-5, 35), rng.between(-5, 35)});
    const auto got = nearest_chessboard_distances(s, q);
    for (std::size_t i = 0; i < q.size(); ++i) {
      std::int64_t best = 1 << 30;
      for (const Vertex& v : s) best = std::min<std::int64_t>(best, chessboard_distance(v, q[i]));
      REQUIRE(got[i] == best);
    }
  }
}

}
