#include "topokit/rollout.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <thread>

#include <fmt/core.h>

#include "topokit/io.hpp"

namespace topokit {

void RolloutConfig::validate() const {
  if (!(0.0 <= beta_min && beta_min <= beta0 && beta0 <= 1.0)) {
    throw std::invalid_argument(fmt::format("need 0 <= beta_min ({}) <= beta0 ({}) <= 1", beta_min, beta0));
  }
  if (!(theta > 0.0)) throw std::invalid_argument("theta must be positive");
  if (d_max < 1) throw std::invalid_argument("d_max must be >= 1");
  if (max_steps < 1) throw std::invalid_argument("max_steps must be >= 1");
  if (rounds < 1) throw std::invalid_argument("rounds must be >= 1");
  if (lambda < 0.0) throw std::invalid_argument("lambda must be >= 0");
  if (init_sigma < 0.0) throw std::invalid_argument("init_sigma must be >= 0");
}

std::string to_string(ExpertKind kind) {
  return kind == ExpertKind::orientation ? "orientation" : "closest";
}

ExpertKind expert_kind_from_string(const std::string& s) {
  if (s == "orientation") return ExpertKind::orientation;
  if (s == "closest" || s == "closest-pixel" || s == "closest_pixel") return ExpertKind::closest_pixel;
  throw std::invalid_argument("unknown expert kind: " + s);
}

std::string to_string(TerminalReason reason) {
  switch (reason) {
    case TerminalReason::reached_end: return "reached_end";
    case TerminalReason::max_steps: return "max_steps";
    case TerminalReason::off_track: return "off_track";
  }
  return "max_steps";
}

GroundTruthTrack::GroundTruthTrack(const BoundaryInstance& instance, const RasterF32& orientation)
    : id_(instance.id), chain_(densify(orient_instance(instance)).vertices), orientation_(&orientation) {
  if (chain_.empty()) throw std::invalid_argument("ground-truth track needs at least one pixel");
}

std::pair<std::size_t, std::int64_t> GroundTruthTrack::attribute(Vertex v) const {
  std::size_t best = 0;
  std::int64_t best_d = std::numeric_limits<std::int64_t>::max();
  for (std::size_t i = 0; i < chain_.size(); ++i) {
    const auto d = squared_distance(v, chain_[i]);
    if (d < best_d) {
      best_d = d;
      best = i;
    }
  }
  return {best, best_d};
}

double GroundTruthTrack::radians_at(std::size_t index) const {
  const Vertex v = chain_.at(index);
  return orientation_->at(v.row, v.col);
}

ExpertLabel expert_closest_pixel(Vertex learner_vertex, const GroundTruthTrack& track) {
  const auto [index, d2] = track.attribute(learner_vertex);
  return {track.chain()[index], index, index + 1 == track.chain().size()};
}

ExpertLabel expert_closest_pixel(Vertex learner_vertex, const BoundaryInstance& gt) {
  const auto chain = densify(gt).vertices;
  if (chain.empty()) throw std::invalid_argument("empty ground-truth instance");
  std::size_t best = 0;
  for (std::size_t i = 1; i < chain.size(); ++i) {
    if (squared_distance(learner_vertex, chain[i]) < squared_distance(learner_vertex, chain[best])) best = i;
  }
  return {chain[best], best, best + 1 == chain.size()};
}

double circular_distance(double a, double b) {
  const double d = std::fmod(std::abs(a - b), 2.0 * std::numbers::pi);
  return std::min(d, 2.0 * std::numbers::pi - d);
}

ExpertLabel expert_orientation(Vertex previous, double previous_radians, const GroundTruthTrack& track,
                               const RolloutConfig& cfg) {
  const auto [pos, d2] = track.attribute(previous);
  const auto reach = static_cast<std::int64_t>(cfg.d_max);
  if (d2 > reach * reach) {
    throw OffTrackError(fmt::format("vertex ({},{}) is {:.2f} px from instance {}, beyond d_max {}", previous.row,
                                    previous.col, std::sqrt(static_cast<double>(d2)), track.id(), cfg.d_max));
  }
  const std::size_t last = track.chain().size() - 1;
  const std::size_t limit = std::min(pos + static_cast<std::size_t>(cfg.d_max), last);
  for (std::size_t k = pos + 1; k <= limit; ++k) {
    if (circular_distance(track.radians_at(k), previous_radians) > cfg.theta) {
      return {track.chain()[k], k, k == last};
    }
  }
  return {track.chain()[limit], limit, limit == last};
}

double beta_schedule(int patch_index, const RolloutConfig& cfg) {
  if (patch_index < 0) throw std::invalid_argument("patch index must be >= 0");
  return std::max(cfg.beta_min, cfg.beta0 * std::exp(-cfg.lambda * patch_index));
}

Vertex interpolate_step(Vertex learner, Vertex expert, double beta, Size2 bounds) {
  auto mix = [beta](int e, int l) {
    return static_cast<int>(round_half_away(beta * e + (1.0 - beta) * l));
  };
  return {std::clamp(mix(expert.row, learner.row), 0, bounds.height - 1),
          std::clamp(mix(expert.col, learner.col), 0, bounds.width - 1)};
}

namespace {

Vertex clamp_to(Vertex v, Size2 bounds) {
  return {std::clamp(v.row, 0, bounds.height - 1), std::clamp(v.col, 0, bounds.width - 1)};
}

Vertex expert_proposal(const PolicyState& state) {
  return expert_orientation(state.current, state.current_radians, *state.track, *state.cfg).vertex;
}

}  // namespace

Vertex ExpertPolicy::next(const PolicyState& state, Rng&) const {
  try {
    return expert_proposal(state);
  } catch (const OffTrackError&) {
    return state.current;
  }
}

Vertex NoisyExpertPolicy::next(const PolicyState& state, Rng& rng) const {
  const Vertex base = ExpertPolicy{}.next(state, rng);
  const int dr = static_cast<int>(round_half_away(rng.normal(0.0, sigma_)));
  const int dc = static_cast<int>(round_half_away(rng.normal(0.0, sigma_)));
  return clamp_to(base + Vertex{dr, dc}, state.bounds);
}

std::string NoisyExpertPolicy::name() const { return fmt::format("noisy:sigma={}", sigma_); }

Vertex FrozenOffsetPolicy::next(const PolicyState& state, Rng& rng) const {
  return clamp_to(ExpertPolicy{}.next(state, rng) + offset_, state.bounds);
}

std::string FrozenOffsetPolicy::name() const { return fmt::format("frozen:dr={},dc={}", offset_.row, offset_.col); }

Vertex ReplayPolicy::next(const PolicyState& state, Rng&) const {
  const auto it = proposals_.find(state.episode);
  if (it == proposals_.end() || it->second.empty()) return state.current;
  const auto& list = it->second;
  const auto idx = std::min(static_cast<std::size_t>(state.step), list.size() - 1);
  return clamp_to(list[idx], state.bounds);
}

namespace {

std::map<std::string, std::string> parse_params(const std::string& body) {
  std::map<std::string, std::string> out;
  std::size_t start = 0;
  while (start <= body.size()) {
    const auto comma = body.find(',', start);
    const auto item = body.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
    if (!item.empty()) {
      const auto eq = item.find('=');
      if (eq == std::string::npos) {
        out[""] = item;
      } else {
        out[item.substr(0, eq)] = item.substr(eq + 1);
      }
    }
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

}  // namespace

std::unique_ptr<LearnerPolicy> make_policy(const std::string& spec) {
  const auto colon = spec.find(':');
  const std::string kind = spec.substr(0, colon);
  const std::string body = colon == std::string::npos ? "" : spec.substr(colon + 1);
  if (kind == "expert") return std::make_unique<ExpertPolicy>();
  if (kind == "replay") {
    if (body.empty()) throw std::invalid_argument("replay policy needs a trace file: replay:<path>");
    return std::make_unique<ReplayPolicy>(read_replay_proposals(body));
  }
  const auto params = parse_params(body);
  auto number = [&params, &spec](std::initializer_list<const char*> keys, double fallback) {
    for (const char* k : keys) {
      if (auto it = params.find(k); it != params.end()) {
        try {
          return std::stod(it->second);
        } catch (const std::exception&) {
          throw std::invalid_argument("bad number in policy spec: " + spec);
        }
      }
    }
    return fallback;
  };
  if (kind == "noisy") {
    const double sigma = number({"sigma", "σ", "s", ""}, 2.0);
    if (sigma < 0.0) throw std::invalid_argument("noisy policy sigma must be >= 0");
    return std::make_unique<NoisyExpertPolicy>(sigma);
  }
  if (kind == "frozen") {
    return std::make_unique<FrozenOffsetPolicy>(
        Vertex{static_cast<int>(number({"dr", "row"}, 0.0)), static_cast<int>(number({"dc", "col"}, 0.0))});
  }
  throw std::invalid_argument("unknown policy: " + spec);
}

EpisodeResult run_episode(const GroundTruthTrack& track, Vertex init, const LearnerPolicy& policy,
                          ExpertKind expert, double beta, Size2 bounds, const RolloutConfig& cfg, int episode,
                          int round) {
  cfg.validate();
  EpisodeResult result;
  auto& trace = result.trace;
  trace.episode = episode;
  trace.round = round;
  trace.instance_id = track.id();
  init = clamp_to(init, bounds);
  trace.init = init;

  result.generated.id = track.id();
  auto& generated = result.generated.vertices;
  generated.push_back(init);

  Rng rng(cfg.seed, splitmix64(0x9011C7ULL + static_cast<std::uint64_t>(episode)));
  Vertex current = init;
  double radians = track.radians_at(track.attribute(current).first);
  trace.terminal = TerminalReason::max_steps;

  for (int t = 0; t < cfg.max_steps; ++t) {
    const PolicyState state{current, radians, t, episode, bounds, &track, &cfg};
    ExpertLabel label;
    Vertex proposal;
    try {
      if (expert == ExpertKind::orientation) label = expert_orientation(current, radians, track, cfg);
      proposal = policy.next(state, rng);
      if (expert == ExpertKind::closest_pixel) label = expert_closest_pixel(proposal, track);
    } catch (const OffTrackError&) {
      trace.terminal = TerminalReason::off_track;
      break;
    }
    const Vertex applied = interpolate_step(proposal, label.vertex, beta, bounds);
    trace.steps.push_back({proposal, label.vertex, applied, beta, radians});
    if (std::find(generated.begin(), generated.end(), applied) == generated.end()) generated.push_back(applied);
    current = applied;
    radians = track.radians_at(track.attribute(current).first);
    if (label.terminal) {
      trace.terminal = TerminalReason::reached_end;
      break;
    }
  }
  return result;
}

RolloutResult run_rollout(const BoundaryGraph& gt, Size2 size, const LearnerPolicy& policy, ExpertKind expert,
                          int patch_index, const RolloutConfig& cfg, int jobs) {
  cfg.validate();
  const auto orientation = orientation_map(gt, size);
  std::vector<GroundTruthTrack> tracks;
  for (const auto& inst : gt.instances) tracks.emplace_back(inst, orientation.radians);

  const double beta = beta_schedule(patch_index, cfg);
  const int n_tracks = static_cast<int>(tracks.size());
  const int n_episodes = cfg.rounds * n_tracks;
  std::vector<EpisodeResult> results(static_cast<std::size_t>(n_episodes));

  auto run_one = [&](int episode) {
    const int round = episode / n_tracks;
    const auto& track = tracks[static_cast<std::size_t>(episode % n_tracks)];
    Rng init_rng(cfg.seed, splitmix64(0x1417ULL + static_cast<std::uint64_t>(episode)));
    const Vertex start = track.chain().front();
    const Vertex init{start.row + static_cast<int>(round_half_away(init_rng.normal(0.0, cfg.init_sigma))),
                      start.col + static_cast<int>(round_half_away(init_rng.normal(0.0, cfg.init_sigma)))};
    results[static_cast<std::size_t>(episode)] =
        run_episode(track, init, policy, expert, beta, size, cfg, episode, round);
  };

  const int workers = policy.episode_exclusive() ? 1 : std::max(1, std::min(jobs, n_episodes));
  if (workers <= 1) {
    for (int e = 0; e < n_episodes; ++e) run_one(e);
  } else {
    std::atomic<int> next{0};
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (int e = next++; e < n_episodes; e = next++) run_one(e);
        } catch (...) {
          errors[static_cast<std::size_t>(w)] = std::current_exception();
        }
      });
    }
    for (auto& th : pool) th.join();
    for (const auto& err : errors) {
      if (err) std::rethrow_exception(err);
    }
  }

  RolloutResult out;
  int next_id = 1;
  for (auto& r : results) {
    if (r.generated.vertices.size() >= 2) {
      r.generated.id = next_id++;
      out.generated.instances.push_back(std::move(r.generated));
    }
    out.traces.push_back(std::move(r.trace));
  }
  return out;
}

}  // namespace topokit
