// topokit: split / labelgen / eval / rollout / synth.

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <numbers>
#include <set>
#include <sstream>
#include <thread>

#include <fmt/core.h>

#include "CLI11.hpp"

#include "topokit/geometry.hpp"
#include "topokit/ingest.hpp"
#include "topokit/io.hpp"
#include "topokit/labelgen.hpp"
#include "topokit/metrics.hpp"
#include "topokit/rollout.hpp"
#include "topokit/synth.hpp"

namespace fs = std::filesystem;
using namespace topokit;

namespace {

// Runs fn(i) for i in [0, n) on up to `jobs` threads; the first exception
// (by index) is rethrown after all workers finish.
template <typename F>
void parallel_for(std::size_t n, int jobs, F&& fn) {
  const auto workers = static_cast<std::size_t>(std::clamp<long long>(jobs, 1, static_cast<long long>(std::max<std::size_t>(n, 1))));
  std::vector<std::exception_ptr> errors(n);
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < n; i = next++) {
          try {
            fn(i);
          } catch (...) {
            errors[i] = std::current_exception();
          }
        }
      });
    }
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

std::vector<double> parse_taus(const std::string& text) {
  std::vector<double> taus;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    std::size_t used = 0;
    const double t = std::stod(item, &used);
    if (used != item.size() || !(t >= 0.0)) throw std::invalid_argument("bad tau value: " + item);
    taus.push_back(t);
  }
  if (taus.empty()) throw std::invalid_argument("--tau needs at least one value");
  return taus;
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::string patch_stem(const Patch& p) { return fmt::format("{}_{:02d}", p.tile_id, p.index); }

// ---- split -----------------------------------------------------------------

struct SplitArgs {
  std::string in, out;
  int patch_size = 1000;
  int grid = 5;
  int max_instances = 15;
  std::int64_t max_pixels = 12000;
  bool keep_dropped = false;
  bool splits = false;
  std::vector<double> ratios;
};

int run_split(const SplitArgs& a, std::uint64_t seed, int jobs) {
  const auto file = read_annotation_file(a.in);
  fs::create_directories(a.out);
  const SplitConfig cfg{a.patch_size, a.grid};
  const FilterConfig filter{a.max_instances, a.max_pixels};

  std::vector<Patch> patches;
  for (const auto& rec : file.tiles) {
    if (rec.width != a.patch_size * a.grid || rec.height != a.patch_size * a.grid) {
      throw std::invalid_argument(fmt::format("tile '{}' is {}x{}, expected {}x{} for --patch-size {} --grid {}",
                                              rec.id, rec.height, rec.width, a.patch_size * a.grid,
                                              a.patch_size * a.grid, a.patch_size, a.grid));
    }
    for (auto& p : split_tile(to_tile(rec, file.units), cfg)) patches.push_back(std::move(p));
  }

  std::vector<FilterReport> reports(patches.size());
  parallel_for(patches.size(), jobs, [&](std::size_t i) {
    reports[i] = filter_patch(patches[i], filter);
    if (reports[i].kept || a.keep_dropped) write_patch_file(fs::path(a.out) / (patch_stem(patches[i]) + ".json"), patches[i]);
  });

  json report = json::array();
  std::size_t kept = 0;
  for (const auto& r : reports) {
    report.push_back(filter_report_to_json(r));
    if (r.kept) {
      ++kept;
    } else {
      std::cerr << fmt::format("dropped {}_{:02d}: {}\n", r.tile_id, r.patch_index, to_string(r.reason));
    }
  }
  write_text_file(fs::path(a.out) / "filter_report.json", report.dump(1) + "\n");

  if (a.splits) {
    SplitRatios ratios = default_split_ratios();
    if (!a.ratios.empty()) {
      if (a.ratios.size() != 4) throw std::invalid_argument("--ratios needs 4 values: train,valid,test,pretrain");
      std::copy(a.ratios.begin(), a.ratios.end(), ratios.begin());
    }
    std::vector<std::string> names;
    for (std::size_t i = 0; i < patches.size(); ++i) {
      if (reports[i].kept) names.push_back(patch_stem(patches[i]));
    }
    const auto assignment = make_splits(names.size(), seed, ratios);
    json splits = {{"train", json::array()}, {"valid", json::array()}, {"test", json::array()}, {"pretrain", json::array()}};
    for (std::size_t i = 0; i < names.size(); ++i) splits[to_string(assignment[i])].push_back(names[i]);
    write_text_file(fs::path(a.out) / "splits.json", splits.dump(1) + "\n");
  }
  std::cout << fmt::format("patches={} kept={} dropped={}\n", patches.size(), kept, patches.size() - kept);
  return 0;
}

// ---- labelgen --------------------------------------------------------------

const std::vector<std::string> kLabelNames{"annotation", "dense",    "binary",    "instance",
                                           "endpoint",   "inverse-distance", "direction", "orientation"};

std::set<std::string> resolve_labels(const std::string& text) {
  static const std::map<std::string, std::vector<std::string>> aliases{
      {"all", kLabelNames},
      {"S_A", {"annotation"}},
      {"S_D", {"dense"}},
      {"M_B", {"binary"}},
      {"M_I", {"instance"}},
      {"M_E", {"endpoint"}},
      {"M_ID", {"inverse-distance"}},
      {"M_D", {"direction"}},
      {"M_O", {"orientation"}},
      {"ecm-inputs", {"dense", "instance"}},
  };
  std::set<std::string> out;
  for (const auto& item : split_list(text)) {
    if (auto it = aliases.find(item); it != aliases.end()) {
      out.insert(it->second.begin(), it->second.end());
    } else if (std::find(kLabelNames.begin(), kLabelNames.end(), item) != kLabelNames.end()) {
      out.insert(item);
    } else {
      throw std::invalid_argument("unknown label: " + item);
    }
  }
  if (out.empty()) throw std::invalid_argument("--labels selected nothing");
  return out;
}

struct LabelArgs {
  std::vector<std::string> patches;
  std::string out;
  std::string labels = "all";
  bool random_start = false;
};

void write_labels(const Patch& patch, const fs::path& dir, const std::set<std::string>& want,
                  const OrientationOptions& orient) {
  fs::create_directories(dir);
  const auto& g = patch.boundaries;
  const Size2 size = patch.size;
  if (want.contains("annotation")) {
    Patch sparse = patch;
    sparse.boundaries = key_vertices(g);
    for (auto& inst : sparse.boundaries.instances) {
      inst.densified = false;
      inst.key_indices.clear();
    }
    write_patch_file(dir / "S_A.json", sparse);
  }
  if (want.contains("dense")) {
    Patch dense = patch;
    dense.boundaries = densify(g);
    write_patch_file(dir / "S_D.json", dense);
  }
  if (want.contains("binary")) write_png(dir / "M_B.png", binary_map(g, size));
  if (want.contains("instance")) write_png(dir / "M_I.png", instance_map(g, size));
  if (want.contains("endpoint")) write_png(dir / "M_E.png", endpoint_map(g, size));
  if (want.contains("inverse-distance") || want.contains("direction")) {
    const auto id = inverse_distance_map(g, size);
    if (want.contains("inverse-distance")) write_tbnd(dir / "M_ID.tbnd", id);
    if (want.contains("direction")) write_tbnd(dir / "M_D.tbnd", direction_map(id));
  }
  if (want.contains("orientation")) write_tbnd(dir / "M_O.tbnd", orientation_map(g, size, orient).radians);
}

int run_labelgen(const LabelArgs& a, std::uint64_t seed, int jobs) {
  const auto want = resolve_labels(a.labels);
  OrientationOptions orient;
  if (a.random_start) orient.random_start_seed = seed;
  // One patch writes straight into --out; several get a sub-directory each.
  parallel_for(a.patches.size(), jobs, [&](std::size_t i) {
    const fs::path src(a.patches[i]);
    if (!fs::exists(src)) throw std::invalid_argument("missing patch file: " + src.string());
    const auto patch = read_patch_file(src);
    const fs::path dir = a.patches.size() == 1 ? fs::path(a.out) : fs::path(a.out) / src.stem();
    write_labels(patch, dir, want, orient);
  });
  return 0;
}

// ---- eval ------------------------------------------------------------------

struct EvalArgs {
  std::string pred, gt, pred_dir, gt_dir;
  std::string tau = "1,2,5,10";
  std::string format = "kv";
  std::string json_out;
  std::string render;
};

RasterU8 render_overlay(const BoundaryGraph& pred, const BoundaryGraph& gt, Size2 size) {
  RasterU8 img(size.height, size.width, 3, 0);
  auto paint = [&img](const BoundaryGraph& g, int channel) {
    for (const Vertex& v : graph_pixels(g)) {
      if (v.row >= 0 && v.col >= 0 && v.row < img.height() && v.col < img.width()) img(v.row, v.col, channel) = 255;
    }
  };
  paint(gt, 1);    // green
  paint(pred, 0);  // red; overlap shows yellow
  return img;
}

int run_eval(const EvalArgs& a, int jobs) {
  const auto taus = parse_taus(a.tau);
  const bool batch = !a.pred_dir.empty() || !a.gt_dir.empty();
  json out_json;
  std::string out_kv;
  if (batch) {
    if (a.pred_dir.empty() || a.gt_dir.empty()) throw std::invalid_argument("batch mode needs both --pred-dir and --gt-dir");
    std::vector<std::string> names;
    for (const auto& entry : fs::directory_iterator(a.gt_dir)) {
      const auto name = entry.path().filename().string();
      if (entry.path().extension() == ".json" && fs::exists(fs::path(a.pred_dir) / name)) names.push_back(name);
    }
    std::sort(names.begin(), names.end());
    if (names.empty()) throw std::invalid_argument("no matching .json files in --pred-dir and --gt-dir");
    std::vector<MetricReport> reports(names.size());
    parallel_for(names.size(), jobs, [&](std::size_t i) {
      reports[i] = evaluate(read_patch_file(fs::path(a.pred_dir) / names[i]).boundaries,
                            read_patch_file(fs::path(a.gt_dir) / names[i]).boundaries, taus);
    });
    const auto mean = mean_report(reports);
    json files = json::array();
    for (std::size_t i = 0; i < names.size(); ++i) files.push_back({{"file", names[i]}, {"report", report_to_json(reports[i])}});
    out_json = {{"count", names.size()}, {"mean", report_to_json(mean)}, {"files", std::move(files)}};
    out_kv = fmt::format("count={}\n", names.size()) + report_to_kv(mean);
  } else {
    if (a.pred.empty() || a.gt.empty()) throw std::invalid_argument("need --pred and --gt (or --pred-dir and --gt-dir)");
    const auto pred = read_patch_file(a.pred);
    const auto gt = read_patch_file(a.gt);
    const auto report = evaluate(pred.boundaries, gt.boundaries, taus);
    out_json = report_to_json(report);
    out_kv = report_to_kv(report);
    if (!a.render.empty()) write_png(a.render, render_overlay(pred.boundaries, gt.boundaries, gt.size));
  }
  if (a.format == "json") {
    std::cout << out_json.dump(1) << '\n';
  } else if (a.format == "kv") {
    std::cout << out_kv;
  } else {
    throw std::invalid_argument("--format must be kv or json");
  }
  if (!a.json_out.empty()) write_text_file(a.json_out, out_json.dump(1) + "\n");
  return 0;
}

// ---- rollout ---------------------------------------------------------------

struct RolloutArgs {
  std::string patch, out;
  std::string policy = "expert";
  std::string expert = "orientation";
  int patch_index = 0;
  double theta_deg = 15.0;
  RolloutConfig cfg;
};

int run_rollout_cmd(RolloutArgs a, std::uint64_t seed, int jobs) {
  a.cfg.theta = a.theta_deg * std::numbers::pi / 180.0;
  a.cfg.seed = seed;
  a.cfg.validate();
  const auto patch = read_patch_file(a.patch);
  const auto policy = make_policy(a.policy);
  const auto expert = expert_kind_from_string(a.expert);
  const auto result = run_rollout(patch.boundaries, patch.size, *policy, expert, a.patch_index, a.cfg, jobs);

  fs::create_directories(a.out);
  {
    std::ofstream trace(fs::path(a.out) / "trace.jsonl", std::ios::binary);
    if (!trace) throw FormatError("cannot write trace.jsonl");
    write_trace_jsonl(trace, result.traces);
  }
  Patch generated = patch;
  generated.boundaries = result.generated;
  write_patch_file(fs::path(a.out) / "generated.json", generated);
  json cfg = rollout_config_to_json(a.cfg);
  cfg["policy"] = policy->name();
  cfg["expert"] = to_string(expert);
  cfg["patch_index"] = a.patch_index;
  cfg["beta"] = beta_schedule(a.patch_index, a.cfg);
  write_text_file(fs::path(a.out) / "config.json", cfg.dump(1) + "\n");

  std::map<std::string, int> terminals;
  for (const auto& t : result.traces) ++terminals[to_string(t.terminal)];
  std::cout << fmt::format("episodes={} generated={}", result.traces.size(), result.generated.size());
  for (const auto& [k, v] : terminals) std::cout << fmt::format(" {}={}", k, v);
  std::cout << '\n';
  return 0;
}

// ---- synth -----------------------------------------------------------------

struct SynthArgs {
  std::string spec, out;
  bool seed_given = false;
};

int run_synth(const SynthArgs& a, std::uint64_t seed) {
  auto spec = scene_spec_from_json(read_json_file(a.spec));
  if (a.seed_given) spec.seed = seed;
  const auto scene = generate_scene(spec);
  fs::create_directories(a.out);
  Patch gt;
  gt.tile_id = "synth";
  gt.size = spec.size;
  gt.image_ref = "image.png";
  gt.boundaries = scene.gt;
  Patch pred = gt;
  pred.boundaries = scene.pred;
  write_patch_file(fs::path(a.out) / "gt.json", gt);
  write_patch_file(fs::path(a.out) / "pred.json", pred);

  AnnotationFile ann;
  Tile tile;
  tile.id = "synth";
  tile.height = spec.size.height;
  tile.width = spec.size.width;
  tile.boundaries = scene.gt;
  ann.tiles.push_back(to_record(tile));
  write_text_file(fs::path(a.out) / "annotation.json", annotation_to_json(ann).dump(1) + "\n");
  write_png(fs::path(a.out) / "image.png", placeholder_image(spec.size));
  std::cout << fmt::format("gt_instances={} pred_instances={}\n", scene.gt.size(), scene.pred.size());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Road-boundary graph toolkit: tile splitting, label generation, metrics, rollouts."};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_config("--config", "", "TOML/INI config file; command-line flags take precedence");

  std::uint64_t seed = 0;
  int jobs = 1;
  auto* seed_opt = app.add_option("--seed", seed, "Random seed")->capture_default_str();
  app.add_option("--jobs,-j", jobs, "Worker threads")->envname("TOPOKIT_JOBS")->check(CLI::PositiveNumber)->capture_default_str();

  SplitArgs split;
  auto* split_cmd = app.add_subcommand("split", "Split annotated tiles into filtered patches");
  split_cmd->add_option("--in", split.in, "Annotation file")->required()->check(CLI::ExistingFile);
  split_cmd->add_option("--out", split.out, "Output directory")->required();
  split_cmd->add_option("--patch-size", split.patch_size)->check(CLI::PositiveNumber)->capture_default_str();
  split_cmd->add_option("--grid", split.grid)->check(CLI::PositiveNumber)->capture_default_str();
  split_cmd->add_option("--max-instances", split.max_instances)->capture_default_str();
  split_cmd->add_option("--max-pixels", split.max_pixels)->capture_default_str();
  split_cmd->add_flag("--keep-dropped", split.keep_dropped, "Also write patches that fail the filter");
  split_cmd->add_flag("--splits", split.splits, "Write splits.json (train/valid/test/pretrain)");
  split_cmd->add_option("--ratios", split.ratios, "Four split ratios")->delimiter(',')->expected(4);

  LabelArgs labels;
  auto* label_cmd = app.add_subcommand("labelgen", "Generate label artifacts for patches");
  label_cmd->add_option("--patch", labels.patches, "Patch file(s)")->required()->delimiter(',');
  label_cmd->add_option("--out", labels.out, "Output directory")->required();
  label_cmd->add_option("--labels", labels.labels, "all, or a comma list of label names")->capture_default_str();
  label_cmd->add_flag("--random-start", labels.random_start, "Seeded random start vertex for the orientation map");

  EvalArgs ev;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate predicted against ground-truth graphs");
  eval_cmd->add_option("--pred", ev.pred, "Predicted graph or patch file");
  eval_cmd->add_option("--gt", ev.gt, "Ground-truth graph or patch file");
  eval_cmd->add_option("--pred-dir", ev.pred_dir, "Batch mode: directory of predictions");
  eval_cmd->add_option("--gt-dir", ev.gt_dir, "Batch mode: directory of ground truth (matched by file name)");
  eval_cmd->add_option("--tau", ev.tau, "Comma-separated relaxation radii")->capture_default_str();
  eval_cmd->add_option("--format", ev.format, "kv or json")->check(CLI::IsMember({"kv", "json"}))->capture_default_str();
  eval_cmd->add_option("--json", ev.json_out, "Also write the report as JSON to this file");
  eval_cmd->add_option("--render", ev.render, "Write a pred/gt overlay PNG");

  RolloutArgs ro;
  auto* ro_cmd = app.add_subcommand("rollout", "Roll out a policy against ground-truth instances");
  ro_cmd->add_option("--patch", ro.patch, "Patch file")->required()->check(CLI::ExistingFile);
  ro_cmd->add_option("--out", ro.out, "Output directory")->required();
  ro_cmd->add_option("--policy", ro.policy, "expert | noisy:sigma=S | frozen:dr=R,dc=C | replay:trace.jsonl")->capture_default_str();
  ro_cmd->add_option("--expert", ro.expert, "orientation or closest")->capture_default_str();
  ro_cmd->add_option("--beta0", ro.cfg.beta0)->capture_default_str();
  ro_cmd->add_option("--beta-min", ro.cfg.beta_min)->capture_default_str();
  ro_cmd->add_option("--lambda", ro.cfg.lambda)->capture_default_str();
  ro_cmd->add_option("--patch-index", ro.patch_index, "Index i in the beta schedule")->capture_default_str();
  ro_cmd->add_option("--theta-deg", ro.theta_deg)->capture_default_str();
  ro_cmd->add_option("--d-max", ro.cfg.d_max)->capture_default_str();
  ro_cmd->add_option("--max-steps", ro.cfg.max_steps)->capture_default_str();
  ro_cmd->add_option("--rounds", ro.cfg.rounds)->capture_default_str();
  ro_cmd->add_option("--init-sigma", ro.cfg.init_sigma)->capture_default_str();

  SynthArgs sy;
  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic gt/pred scene");
  synth_cmd->add_option("--spec", sy.spec, "Scene spec JSON")->required()->check(CLI::ExistingFile);
  synth_cmd->add_option("--out", sy.out, "Output directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*split_cmd) return run_split(split, seed, jobs);
    if (*label_cmd) return run_labelgen(labels, seed, jobs);
    if (*eval_cmd) return run_eval(ev, jobs);
    if (*ro_cmd) return run_rollout_cmd(ro, seed, jobs);
    if (*synth_cmd) {
      sy.seed_given = seed_opt->count() > 0;
      return run_synth(sy, seed);
    }
  } catch (const std::exception& e) {
    std::cerr << "topokit: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
