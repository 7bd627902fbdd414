#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <vector>

#include "topokit/geometry.hpp"

namespace topokit {

class MetricError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct PixelScores {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

/// Relaxed precision/recall/F1. A pixel counts as correct when its chessboard
/// distance to the other graph's pixels is <= tau, i.e. the other graph dilated
/// by a (2 tau + 1)^2 square; tau = 1 is the 8-neighbour hard metric.
/// Empty pred gives P = 0; both graphs empty gives (1, 1, 1). Throws for tau < 1.
PixelScores relaxed_pixel_metrics(const BoundaryGraph& pred, const BoundaryGraph& gt, double tau);

double f1_score(double precision, double recall);

/// Predicted-to-ground-truth instance assignment. Indices refer to positions
/// in the input graphs.
struct MatchAssignment {
  std::vector<std::optional<std::size_t>> pred_to_gt;
  std::vector<std::vector<std::size_t>> gt_assigned;  // A_i, M_i = size
  std::vector<std::size_t> pred_pixels;
  std::vector<std::size_t> gt_pixels;

  std::size_t matched_count(std::size_t gt_index) const { return gt_assigned[gt_index].size(); }
};

/// Symmetric Hausdorff distance between two pixel sets (Euclidean).
double hausdorff_distance(const std::vector<Vertex>& a, const std::vector<Vertex>& b);

/// Each predicted instance goes to the gt instance with the smallest symmetric
/// Hausdorff distance; ties go to the lowest gt id.
MatchAssignment match_hausdorff(const BoundaryGraph& pred, const BoundaryGraph& gt);

/// Each predicted pixel votes for its Euclidean-closest gt instance; the
/// instance goes to the vote winner. Pixel and vote ties go to the lowest gt id.
MatchAssignment match_voting(const BoundaryGraph& pred, const BoundaryGraph& gt);

/// Mean over gt of 1(M_i > 0) / M_i with Hausdorff matching.
double naive_connectivity(const BoundaryGraph& pred, const BoundaryGraph& gt);
double naive_connectivity(const MatchAssignment& match);

/// sum_i alpha_i 1(M_i > 0) / M_i with voting matching; alpha_i = pixel share.
double icurb_connectivity(const BoundaryGraph& pred, const BoundaryGraph& gt);
double icurb_connectivity(const MatchAssignment& match);

/// exp(-C_i) with C_i the natural-log entropy of the pixel shares of the
/// predicted instances assigned to gt instance i; 0 when nothing is assigned.
double ecm_term(const MatchAssignment& match, std::size_t gt_index);

/// Entropy-based connectivity: sum_i alpha_i exp(-C_i).
double ecm(const BoundaryGraph& pred, const BoundaryGraph& gt);
double ecm(const MatchAssignment& match);

struct MetricReport {
  std::vector<double> taus;
  std::vector<PixelScores> pixel;  // parallel to taus
  double naive_connectivity = 0.0;
  double icurb_connectivity = 0.0;
  double ecm = 0.0;
};

std::vector<double> default_taus();

MetricReport evaluate(const BoundaryGraph& pred, const BoundaryGraph& gt, const std::vector<double>& taus = default_taus());

/// Field-wise arithmetic mean; all reports must share the same taus.
MetricReport mean_report(const std::vector<MetricReport>& reports);

}  // namespace topokit
