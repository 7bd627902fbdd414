#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "topokit/geometry.hpp"
#include "topokit/labelgen.hpp"
#include "topokit/raster.hpp"
#include "topokit/rng.hpp"

namespace topokit {

struct RolloutConfig {
  double theta = 15.0 * std::numbers::pi / 180.0;  // orientation-change threshold, radians
  int d_max = 30;                                   // longest expert step, chain pixels
  double beta0 = 1.0;
  double beta_min = 0.0;
  double lambda = 0.0;   // beta decay per patch index
  int max_steps = 1000;
  int rounds = 3;        // exploration rounds per patch
  double init_sigma = 3.0;  // Gaussian noise on the initial vertex, px
  std::uint64_t seed = 0;

  /// Throws std::invalid_argument unless 0 <= beta_min <= beta0 <= 1,
  /// theta > 0, d_max >= 1, max_steps >= 1 and rounds >= 1.
  void validate() const;
};

enum class ExpertKind { closest_pixel, orientation };
std::string to_string(ExpertKind kind);
ExpertKind expert_kind_from_string(const std::string& s);

enum class TerminalReason { reached_end, max_steps, off_track };
std::string to_string(TerminalReason reason);

class OffTrackError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Dense, oriented ground-truth chain plus its orientation map: everything an
/// expert needs to label a step.
class GroundTruthTrack {
 public:
  GroundTruthTrack(const BoundaryInstance& instance, const RasterF32& orientation);

  const std::vector<Vertex>& chain() const { return chain_; }
  int id() const { return id_; }
  const RasterF32& orientation() const { return *orientation_; }

  /// Chain position nearest to `v` (earliest on ties) and its squared distance.
  std::pair<std::size_t, std::int64_t> attribute(Vertex v) const;
  /// Orientation radian stored for chain position `index`.
  double radians_at(std::size_t index) const;

 private:
  int id_ = 0;
  std::vector<Vertex> chain_;
  const RasterF32* orientation_ = nullptr;
};

struct ExpertLabel {
  Vertex vertex;
  std::size_t chain_index = 0;
  bool terminal = false;  // label is the instance end
};

/// Original iCurb label: gt pixel closest to `learner_vertex`, earliest chain
/// position on ties.
ExpertLabel expert_closest_pixel(Vertex learner_vertex, const GroundTruthTrack& track);
ExpertLabel expert_closest_pixel(Vertex learner_vertex, const BoundaryInstance& gt);

/// Circular distance between two radians: min(|a - b|, 2 pi - |a - b|).
double circular_distance(double a, double b);

/// Orientation-change label: walks forward from the chain position attributed
/// to `previous`, returning the first pixel whose orientation differs from
/// `previous_radians` by more than theta; falls back to the pixel d_max chain
/// steps ahead, or the instance end. Throws OffTrackError when `previous` is
/// farther than d_max from the chain.
ExpertLabel expert_orientation(Vertex previous, double previous_radians, const GroundTruthTrack& track,
                               const RolloutConfig& cfg);

/// beta_i = max(beta_min, beta0 * exp(-lambda * i)).
double beta_schedule(int patch_index, const RolloutConfig& cfg);

/// round(beta * expert + (1 - beta) * learner) per component, clamped to bounds.
Vertex interpolate_step(Vertex learner, Vertex expert, double beta, Size2 bounds);

/// What a learner sees before proposing v_hat.
struct PolicyState {
  Vertex current;
  double current_radians = 0.0;
  int step = 0;
  int episode = 0;
  Size2 bounds;
  const GroundTruthTrack* track = nullptr;
  const RolloutConfig* cfg = nullptr;
};

/// Learner policy pi_hat. Implementations must be safe to call from concurrent
/// episodes, or report episode_exclusive().
class LearnerPolicy {
 public:
  virtual ~LearnerPolicy() = default;
  /// Returns an in-bounds proposal. `rng` is the episode's private stream.
  virtual Vertex next(const PolicyState& state, Rng& rng) const = 0;
  virtual bool episode_exclusive() const { return false; }
  virtual std::string name() const = 0;
};

/// Stands in for a perfectly trained learner: proposes the orientation
/// expert's label (or holds position when off track).
class ExpertPolicy : public LearnerPolicy {
 public:
  Vertex next(const PolicyState& state, Rng& rng) const override;
  std::string name() const override { return "expert"; }
};

/// Expert proposal plus a rounded N(0, sigma^2) offset per component.
class NoisyExpertPolicy : public LearnerPolicy {
 public:
  explicit NoisyExpertPolicy(double sigma) : sigma_(sigma) {}
  Vertex next(const PolicyState& state, Rng& rng) const override;
  std::string name() const override;
  double sigma() const { return sigma_; }

 private:
  double sigma_;
};

/// Expert proposal shifted by a fixed offset.
class FrozenOffsetPolicy : public LearnerPolicy {
 public:
  explicit FrozenOffsetPolicy(Vertex offset) : offset_(offset) {}
  Vertex next(const PolicyState& state, Rng& rng) const override;
  std::string name() const override;

 private:
  Vertex offset_;
};

/// Replays recorded proposals per episode; holds the last one once exhausted.
class ReplayPolicy : public LearnerPolicy {
 public:
  explicit ReplayPolicy(std::map<int, std::vector<Vertex>> proposals) : proposals_(std::move(proposals)) {}
  Vertex next(const PolicyState& state, Rng& rng) const override;
  std::string name() const override { return "replay"; }

 private:
  std::map<int, std::vector<Vertex>> proposals_;
};

/// Parses "expert", "noisy:sigma=2" (also "noisy:σ=2", "noisy:2"),
/// "frozen:dr=1,dc=-2" and "replay:<trace.jsonl>".
std::unique_ptr<LearnerPolicy> make_policy(const std::string& spec);

struct TraceStep {
  Vertex learner;      // v_hat_t
  Vertex expert;       // v*_t
  Vertex applied;      // v_t
  double beta = 1.0;
  double previous_radians = 0.0;  // r_{t-1}
};

struct RolloutTrace {
  int episode = 0;
  int round = 0;
  int instance_id = 0;
  Vertex init;
  std::vector<TraceStep> steps;
  TerminalReason terminal = TerminalReason::max_steps;
};

struct EpisodeResult {
  BoundaryInstance generated;  // sparse key vertices, starts at the initial vertex
  RolloutTrace trace;
};

/// One graph-growing episode along one gt track with a fixed beta.
EpisodeResult run_episode(const GroundTruthTrack& track, Vertex init, const LearnerPolicy& policy,
                          ExpertKind expert, double beta, Size2 bounds, const RolloutConfig& cfg, int episode = 0,
                          int round = 0);

struct RolloutResult {
  BoundaryGraph generated;
  std::vector<RolloutTrace> traces;
};

/// Every round x every gt instance of a patch. The initial vertex of each
/// episode is the instance start plus rounded Gaussian noise (init_sigma),
/// drawn from a stream keyed by (seed, round, instance). Beta comes from
/// beta_schedule(patch_index).
RolloutResult run_rollout(const BoundaryGraph& gt, Size2 size, const LearnerPolicy& policy, ExpertKind expert,
                          int patch_index, const RolloutConfig& cfg, int jobs = 1);

}  // namespace topokit
