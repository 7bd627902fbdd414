#include "topokit/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/core.h>

#include "topokit/distance.hpp"

namespace topokit {

namespace {

std::size_t count_within(const std::vector<Vertex>& from, const std::vector<Vertex>& to, double tau) {
  if (from.empty() || to.empty()) return 0;
  const auto d = nearest_chessboard_distances(to, from);
  return static_cast<std::size_t>(
      std::count_if(d.begin(), d.end(), [tau](std::int64_t v) { return static_cast<double>(v) <= tau; }));
}

std::vector<std::size_t> ids_ascending(const BoundaryGraph& graph) {
  std::vector<std::size_t> order(graph.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&graph](std::size_t a, std::size_t b) { return graph.instances[a].id < graph.instances[b].id; });
  return order;
}

struct PixelSets {
  std::vector<std::vector<Vertex>> pred;
  std::vector<std::vector<Vertex>> gt;
  std::vector<Vertex> all_pred;
  std::vector<Vertex> all_gt;
};

PixelSets pixel_sets(const BoundaryGraph& pred, const BoundaryGraph& gt) {
  PixelSets s;
  for (const auto& inst : pred.instances) {
    s.pred.push_back(instance_pixels(inst));
    s.all_pred.insert(s.all_pred.end(), s.pred.back().begin(), s.pred.back().end());
  }
  for (const auto& inst : gt.instances) {
    s.gt.push_back(instance_pixels(inst));
    s.all_gt.insert(s.all_gt.end(), s.gt.back().begin(), s.gt.back().end());
  }
  return s;
}

MatchAssignment empty_assignment(const PixelSets& s) {
  MatchAssignment m;
  m.pred_to_gt.assign(s.pred.size(), std::nullopt);
  m.gt_assigned.assign(s.gt.size(), {});
  for (const auto& p : s.pred) m.pred_pixels.push_back(p.size());
  for (const auto& g : s.gt) m.gt_pixels.push_back(g.size());
  return m;
}

void require_gt(const BoundaryGraph& gt) {
  if (gt.empty()) throw MetricError("connectivity metrics are undefined for an empty ground truth");
}

void require_gt(const MatchAssignment& m) {
  if (m.gt_assigned.empty()) throw MetricError("connectivity metrics are undefined for an empty ground truth");
}

// Squared distances from every pixel in `queries` to `sources`, split back per
// query-instance.
std::vector<std::int64_t> sq_to(const std::vector<Vertex>& sources, const std::vector<Vertex>& queries) {
  return nearest_squared_distances(sources, queries);
}

}  // namespace

double f1_score(double precision, double recall) {
  return precision + recall > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
}

PixelScores relaxed_pixel_metrics(const BoundaryGraph& pred, const BoundaryGraph& gt, double tau) {
  if (!(tau >= 1.0)) throw MetricError(fmt::format("tau must be >= 1, got {}", tau));
  const auto pred_px = graph_pixels(pred);
  const auto gt_px = graph_pixels(gt);
  if (pred_px.empty() && gt_px.empty()) return {1.0, 1.0, 1.0};
  PixelScores s;
  if (!pred_px.empty()) s.precision = static_cast<double>(count_within(pred_px, gt_px, tau)) / pred_px.size();
  if (!gt_px.empty()) s.recall = static_cast<double>(count_within(gt_px, pred_px, tau)) / gt_px.size();
  s.f1 = f1_score(s.precision, s.recall);
  return s;
}

double hausdorff_distance(const std::vector<Vertex>& a, const std::vector<Vertex>& b) {
  if (a.empty() || b.empty()) throw MetricError("Hausdorff distance of an empty pixel set");
  const auto ab = sq_to(b, a);
  const auto ba = sq_to(a, b);
  const auto worst = std::max(*std::max_element(ab.begin(), ab.end()), *std::max_element(ba.begin(), ba.end()));
  return std::sqrt(static_cast<double>(worst));
}

MatchAssignment match_hausdorff(const BoundaryGraph& pred, const BoundaryGraph& gt) {
  const auto s = pixel_sets(pred, gt);
  auto m = empty_assignment(s);
  if (pred.empty()) return m;
  require_gt(gt);

  const std::size_t np = s.pred.size();
  const std::size_t ng = s.gt.size();
  // directed[j][i] = max over pred_j of d^2 to gt_i, and the reverse.
  std::vector<std::vector<std::int64_t>> pred_to_gt(np, std::vector<std::int64_t>(ng, 0));
  std::vector<std::vector<std::int64_t>> gt_to_pred(np, std::vector<std::int64_t>(ng, 0));
  for (std::size_t i = 0; i < ng; ++i) {
    const auto d = sq_to(s.gt[i], s.all_pred);
    std::size_t cursor = 0;
    for (std::size_t j = 0; j < np; ++j) {
      for (std::size_t k = 0; k < s.pred[j].size(); ++k) pred_to_gt[j][i] = std::max(pred_to_gt[j][i], d[cursor++]);
    }
  }
  for (std::size_t j = 0; j < np; ++j) {
    const auto d = sq_to(s.pred[j], s.all_gt);
    std::size_t cursor = 0;
    for (std::size_t i = 0; i < ng; ++i) {
      for (std::size_t k = 0; k < s.gt[i].size(); ++k) gt_to_pred[j][i] = std::max(gt_to_pred[j][i], d[cursor++]);
    }
  }
  const auto order = ids_ascending(gt);
  for (std::size_t j = 0; j < np; ++j) {
    if (s.pred[j].empty()) continue;
    std::optional<std::size_t> best;
    std::int64_t best_h = 0;
    for (std::size_t i : order) {
      const auto h = std::max(pred_to_gt[j][i], gt_to_pred[j][i]);
      if (!best || h < best_h) {
        best = i;
        best_h = h;
      }
    }
    m.pred_to_gt[j] = best;
    m.gt_assigned[*best].push_back(j);
  }
  return m;
}

MatchAssignment match_voting(const BoundaryGraph& pred, const BoundaryGraph& gt) {
  const auto s = pixel_sets(pred, gt);
  auto m = empty_assignment(s);
  if (pred.empty()) return m;
  require_gt(gt);

  const auto order = ids_ascending(gt);
  const std::size_t total = s.all_pred.size();
  std::vector<std::int64_t> best_d(total, kNoSource);
  std::vector<std::size_t> best_gt(total, order.front());
  for (std::size_t i : order) {
    const auto d = sq_to(s.gt[i], s.all_pred);
    for (std::size_t p = 0; p < total; ++p) {
      if (d[p] < best_d[p]) {
        best_d[p] = d[p];
        best_gt[p] = i;
      }
    }
  }
  std::vector<std::size_t> rank(gt.size());
  for (std::size_t r = 0; r < order.size(); ++r) rank[order[r]] = r;

  std::size_t cursor = 0;
  for (std::size_t j = 0; j < s.pred.size(); ++j) {
    std::vector<std::size_t> votes(gt.size(), 0);
    for (std::size_t k = 0; k < s.pred[j].size(); ++k) ++votes[best_gt[cursor++]];
    if (s.pred[j].empty()) continue;
    std::size_t winner = order.front();
    for (std::size_t i : order) {
      if (votes[i] > votes[winner] || (votes[i] == votes[winner] && rank[i] < rank[winner])) winner = i;
    }
    m.pred_to_gt[j] = winner;
    m.gt_assigned[winner].push_back(j);
  }
  return m;
}

double naive_connectivity(const MatchAssignment& match) {
  require_gt(match);
  double sum = 0.0;
  for (const auto& assigned : match.gt_assigned) {
    if (!assigned.empty()) sum += 1.0 / static_cast<double>(assigned.size());
  }
  return sum / static_cast<double>(match.gt_assigned.size());
}

double naive_connectivity(const BoundaryGraph& pred, const BoundaryGraph& gt) {
  require_gt(gt);
  return naive_connectivity(match_hausdorff(pred, gt));
}

namespace {

std::vector<double> alphas(const MatchAssignment& match) {
  const double total = static_cast<double>(std::accumulate(match.gt_pixels.begin(), match.gt_pixels.end(), std::size_t{0}));
  std::vector<double> a;
  for (std::size_t n : match.gt_pixels) a.push_back(total > 0.0 ? static_cast<double>(n) / total : 0.0);
  return a;
}

}  // namespace

double icurb_connectivity(const MatchAssignment& match) {
  require_gt(match);
  const auto alpha = alphas(match);
  double sum = 0.0;
  for (std::size_t i = 0; i < match.gt_assigned.size(); ++i) {
    if (!match.gt_assigned[i].empty()) sum += alpha[i] / static_cast<double>(match.gt_assigned[i].size());
  }
  return sum;
}

double icurb_connectivity(const BoundaryGraph& pred, const BoundaryGraph& gt) {
  require_gt(gt);
  return icurb_connectivity(match_voting(pred, gt));
}

double ecm_term(const MatchAssignment& match, std::size_t gt_index) {
  const auto& assigned = match.gt_assigned.at(gt_index);
  if (assigned.empty()) return 0.0;
  double total = 0.0;
  for (std::size_t j : assigned) total += static_cast<double>(match.pred_pixels[j]);
  double entropy = 0.0;
  for (std::size_t j : assigned) {
    const double p = static_cast<double>(match.pred_pixels[j]) / total;
    if (p > 0.0) entropy -= p * std::log(p);
  }
  return std::exp(-entropy);
}

double ecm(const MatchAssignment& match) {
  require_gt(match);
  const auto alpha = alphas(match);
  double sum = 0.0;
  for (std::size_t i = 0; i < match.gt_assigned.size(); ++i) sum += alpha[i] * ecm_term(match, i);
  return sum;
}

double ecm(const BoundaryGraph& pred, const BoundaryGraph& gt) {
  require_gt(gt);
  return ecm(match_voting(pred, gt));
}

std::vector<double> default_taus() { return {1.0, 2.0, 5.0, 10.0}; }

MetricReport evaluate(const BoundaryGraph& pred, const BoundaryGraph& gt, const std::vector<double>& taus) {
  require_gt(gt);
  MetricReport r;
  r.taus = taus;
  for (double tau : taus) r.pixel.push_back(relaxed_pixel_metrics(pred, gt, tau));
  r.naive_connectivity = naive_connectivity(match_hausdorff(pred, gt));
  const auto voting = match_voting(pred, gt);
  r.icurb_connectivity = icurb_connectivity(voting);
  r.ecm = ecm(voting);
  return r;
}

MetricReport mean_report(const std::vector<MetricReport>& reports) {
  if (reports.empty()) throw MetricError("cannot average zero reports");
  MetricReport out;
  out.taus = reports.front().taus;
  out.pixel.assign(out.taus.size(), {});
  for (const auto& r : reports) {
    if (r.taus != out.taus) throw MetricError("reports use different tau sets");
    for (std::size_t k = 0; k < out.taus.size(); ++k) {
      out.pixel[k].precision += r.pixel[k].precision;
      out.pixel[k].recall += r.pixel[k].recall;
      out.pixel[k].f1 += r.pixel[k].f1;
    }
    out.naive_connectivity += r.naive_connectivity;
    out.icurb_connectivity += r.icurb_connectivity;
    out.ecm += r.ecm;
  }
  const double n = static_cast<double>(reports.size());
  for (auto& p : out.pixel) {
    p.precision /= n;
    p.recall /= n;
    p.f1 /= n;
  }
  out.naive_connectivity /= n;
  out.icurb_connectivity /= n;
  out.ecm /= n;
  return out;
}

}  // namespace topokit
