#include "doctest.h"
#include "oracles.hpp"

#include <cmath>

#include "topokit/metrics.hpp"

using namespace topokit;

namespace {

BoundaryInstance line(int id, Vertex a, Vertex b) { return {id, {a, b}, false, {}}; }

BoundaryGraph fragments_of(int row, int c0, int length, int m) {
  BoundaryGraph g;
  const int per = length / m;
  for (int k = 0; k < m; ++k) g.instances.push_back(line(k + 1, {row, c0 + k * per}, {row, c0 + (k + 1) * per - 1}));
  return g;
}

}  // namespace

TEST_SUITE("metrics") {

TEST_CASE("identity scores one everywhere") {
  BoundaryGraph g{{line(1, {5, 5}, {5, 50}), line(2, {20, 5}, {40, 30})}};
  const auto r = evaluate(g, g);
  for (const auto& p : r.pixel) {
    CHECK(p.precision == 1.0);
    CHECK(p.recall == 1.0);
    CHECK(p.f1 == 1.0);
  }
  CHECK(r.naive_connectivity == 1.0);
  CHECK(r.icurb_connectivity == doctest::Approx(1.0));
  CHECK(r.ecm == doctest::Approx(1.0));
}

TEST_CASE("threshold semantics") {
  BoundaryGraph gt{{line(1, {0, 0}, {0, 20})}};
  BoundaryGraph pred{{line(1, {3, 0}, {3, 20})}};
  CHECK(relaxed_pixel_metrics(pred, gt, 2).precision == 0.0);
  CHECK(relaxed_pixel_metrics(pred, gt, 5).precision == 1.0);
  CHECK(relaxed_pixel_metrics(pred, gt, 3).recall == 1.0);
  CHECK_THROWS_AS(relaxed_pixel_metrics(pred, gt, 0.5), MetricError);
}

TEST_CASE("empty graph conventions") {
  BoundaryGraph empty;
  BoundaryGraph gt{{line(1, {0, 0}, {0, 20})}};
  const auto s = relaxed_pixel_metrics(empty, gt, 2);
  CHECK(s.precision == 0.0);
  CHECK(s.recall == 0.0);
  CHECK(s.f1 == 0.0);
  const auto both = relaxed_pixel_metrics(empty, empty, 2);
  CHECK(both.f1 == 1.0);
  CHECK_THROWS_AS(evaluate(gt, empty), MetricError);
  CHECK(ecm(empty, gt) == 0.0);
  CHECK(match_voting(empty, gt).gt_assigned[0].empty());
}

TEST_CASE("relaxed metrics equal the dilation oracle") {
  for (std::uint64_t seed = 0; seed < 15; ++seed) {
    Rng rng(seed, 21);
    BoundaryGraph pred, gt;
    for (int i = 0; i < 3; ++i) pred.instances.push_back(oracle::random_instance(rng, 40, 40, i + 1, 4));
    for (int i = 0; i < 3; ++i) gt.instances.push_back(oracle::random_instance(rng, 40, 40, i + 1, 4));
    const auto pp = oracle::pixels(pred), gp = oracle::pixels(gt);
    for (int tau : {1, 2, 5, 10}) {
      const auto s = relaxed_pixel_metrics(pred, gt, tau);
      CHECK(s.precision == static_cast<double>(oracle::dilate_and_count(gp, pp, tau)) / pp.size());
      CHECK(s.recall == static_cast<double>(oracle::dilate_and_count(pp, gp, tau)) / gp.size());
    }
  }
}

TEST_CASE("hausdorff distance matches brute force") {
  Rng rng(5, 5);
  for (int k = 0; k < 40; ++k) {
    const auto a = oracle::random_instance(rng, 30, 30, 1, 4);
    const auto b = oracle::random_instance(rng, 30, 30, 2, 4);
    const auto pa = instance_pixels(a), pb = instance_pixels(b);
    CHECK(hausdorff_distance(pa, pb) == oracle::hausdorff({pa.begin(), pa.end()}, {pb.begin(), pb.end()}));
  }
}

TEST_CASE("hausdorff matching") {
  BoundaryGraph gt{{line(1, {0, 0}, {0, 30}), line(2, {10, 0}, {10, 30}), line(3, {20, 0}, {20, 30})}};
  BoundaryGraph pred{{line(1, {10, 0}, {10, 30}), line(2, {0, 2}, {0, 8})}};
  const auto m = match_hausdorff(pred, gt);
  CHECK(m.pred_to_gt[0] == 1u);
  CHECK(m.pred_to_gt[1] == 0u);
  // Equidistant fragment goes to the lowest id.
  BoundaryGraph mid{{line(1, {5, 0}, {5, 30})}};
  CHECK(match_hausdorff(mid, gt).pred_to_gt[0] == 0u);
}

TEST_CASE("voting matching equals the brute-force voter") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed, 33);
    BoundaryGraph pred, gt;
    for (int i = 0; i < 3; ++i) gt.instances.push_back(oracle::random_instance(rng, 32, 32, i + 1, 3));
    for (int i = 0; i < 4; ++i) pred.instances.push_back(oracle::random_instance(rng, 32, 32, i + 1, 3));
    const auto m = match_voting(pred, gt);
    for (std::size_t j = 0; j < pred.size(); ++j) {
      REQUIRE(m.pred_to_gt[j].has_value());
      CHECK(gt.instances[*m.pred_to_gt[j]].id == oracle::vote(oracle::pixels(pred.instances[j]), gt));
    }
  }
}

TEST_CASE("voting majority 60/40") {
  BoundaryGraph gt{{line(1, {0, 0}, {0, 59}), line(2, {10, 60}, {10, 99})}};
  // 60 pixels on row 1 near gt 1, 40 on row 9 near gt 2, joined by a connector.
  BoundaryGraph pred{{BoundaryInstance{1, {{1, 0}, {1, 59}, {9, 60}, {9, 99}}, false, {}}}};
  CHECK(match_voting(pred, gt).pred_to_gt[0] == 0u);
}

TEST_CASE("ECM equal split closed form") {
  for (int m = 1; m <= 6; ++m) {
    BoundaryGraph gt{{line(1, {10, 0}, {10, 599})}};
    const auto pred = fragments_of(10, 0, 600, m);
    const auto match = match_voting(pred, gt);
    const std::vector<double> sizes(m, 600.0 / m);
    CHECK(ecm_term(match, 0) == doctest::Approx(oracle::entropy_term(sizes)).epsilon(1e-12));
    CHECK(std::abs(ecm_term(match, 0) - 1.0 / m) < 1e-9);
  }
}

TEST_CASE("ECM unequal split and weights") {
  BoundaryGraph gt{{line(1, {0, 0}, {0, 99}), line(2, {20, 0}, {20, 299})}};
  BoundaryGraph pred{{line(1, {0, 0}, {0, 79}), line(2, {0, 81}, {0, 99}), line(3, {20, 0}, {20, 299})}};
  const auto m = match_voting(pred, gt);
  const double t1 = oracle::entropy_term({80, 19});
  CHECK(ecm_term(m, 0) == doctest::Approx(t1));
  CHECK(ecm(m) == doctest::Approx(100.0 / 400.0 * t1 + 300.0 / 400.0));
  CHECK(icurb_connectivity(m) == doctest::Approx(100.0 / 400.0 * 0.5 + 300.0 / 400.0));
  CHECK(naive_connectivity(pred, gt) == doctest::Approx((0.5 + 1.0) / 2.0));
}

TEST_CASE("unmatched gt instance scores zero") {
  BoundaryGraph gt{{line(1, {0, 0}, {0, 99}), line(2, {50, 0}, {50, 99})}};
  BoundaryGraph pred{{line(1, {0, 0}, {0, 99})}};
  CHECK(ecm(pred, gt) == doctest::Approx(0.5));
  CHECK(naive_connectivity(pred, gt) == doctest::Approx(0.5));
}

TEST_CASE("mean report averages fields") {
  BoundaryGraph gt{{line(1, {0, 0}, {0, 99})}};
  const auto a = evaluate(gt, gt);
  const auto b = evaluate(fragments_of(0, 0, 100, 2), gt);
  const auto mean = mean_report({a, b});
  CHECK(mean.ecm == doctest::Approx((a.ecm + b.ecm) / 2));
  CHECK(mean.naive_connectivity == doctest::Approx(0.75));
  CHECK_THROWS_AS(mean_report({}), MetricError);
}

}
