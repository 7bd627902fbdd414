#include "doctest.h"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>

#include <sys/wait.h>

#include "topokit/io.hpp"

using namespace topokit;
namespace fs = std::filesystem;

namespace {

fs::path fresh(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "topokit_cli_tests" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

int cli(const std::string& args, const fs::path& stdout_file = "/dev/null") {
  const std::string cmd = std::string(TOPOKIT_CLI) + " " + args + " > " + stdout_file.string() + " 2>/dev/null";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_sample_annotation(const fs::path& path) {
  // One straight boundary across the top row of patches, one crossing pair in patch 24.
  const auto j = json::parse(R"({"version":1,"units":"pixels","tiles":[{"id":"S","width":5000,"height":5000,
     "polylines":[[[500,10],[500,4990]],
                  [[4100,4100],[4900,4900]],[[4100,4900],[4900,4100]]]}]})");
  write_text_file(path, j.dump());
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("split writes 25 patches and a filter report") {
  const auto dir = fresh("split");
  write_sample_annotation(dir / "ann.json");
  REQUIRE(cli("split --in " + (dir / "ann.json").string() + " --out " + (dir / "out").string() + " --splits") == 0);
  const auto report = read_json_file(dir / "out" / "filter_report.json");
  REQUIRE(report.size() == 25);
  int kept = 0;
  for (const auto& r : report) kept += r["verdict"] == "kept";
  CHECK(kept == 5);
  CHECK(report[24]["reason"] == "has_intersection");
  CHECK(report[12]["reason"] == "empty");
  CHECK(fs::exists(dir / "out" / "S_00.json"));
  CHECK_FALSE(fs::exists(dir / "out" / "S_24.json"));
  const auto splits = read_json_file(dir / "out" / "splits.json");
  CHECK(splits["train"].size() + splits["valid"].size() + splits["test"].size() + splits["pretrain"].size() == 5);
}

TEST_CASE("split rejects malformed input") {
  const auto dir = fresh("split_bad");
  write_text_file(dir / "bad.json", "{ not json");
  CHECK(cli("split --in " + (dir / "bad.json").string() + " --out " + (dir / "o").string()) != 0);
  CHECK(cli("split --in " + (dir / "missing.json").string() + " --out " + (dir / "o").string()) != 0);
}

TEST_CASE("labelgen all and subset") {
  const auto dir = fresh("labels");
  write_text_file(dir / "p.json",
                  R"({"size":[64,64],"instances":[{"id":1,"vertices":[[5,5],[5,60],[40,60]]},{"id":2,"vertices":[[50,2],[60,40]]}]})");
  REQUIRE(cli("labelgen --patch " + (dir / "p.json").string() + " --out " + (dir / "all").string()) == 0);
  for (const char* f : {"S_A.json", "S_D.json", "M_B.png", "M_I.png", "M_E.png", "M_ID.tbnd", "M_D.tbnd", "M_O.tbnd"}) {
    CHECK(fs::exists(dir / "all" / f));
  }
  CHECK(read_tbnd(dir / "all" / "M_D.tbnd").channels() == 2);
  REQUIRE(cli("labelgen --patch " + (dir / "p.json").string() + " --out " + (dir / "sub").string() +
              " --labels binary,ecm-inputs") == 0);
  std::set<std::string> names;
  for (const auto& e : fs::directory_iterator(dir / "sub")) names.insert(e.path().filename().string());
  CHECK(names == std::set<std::string>{"M_B.png", "M_I.png", "S_D.json"});
  CHECK(cli("labelgen --patch " + (dir / "nope.json").string() + " --out " + (dir / "x").string()) != 0);
  CHECK(cli("labelgen --patch " + (dir / "p.json").string() + " --out " + (dir / "x").string() + " --labels bogus") != 0);
}

TEST_CASE("eval identity, json output and batch mode") {
  const auto dir = fresh("eval");
  const std::string g = R"({"size":[64,64],"instances":[{"id":1,"vertices":[[5,5],[5,60]]}]})";
  const std::string p = R"({"size":[64,64],"instances":[{"id":1,"vertices":[[5,5],[5,30]]},{"id":2,"vertices":[[5,32],[5,60]]}]})";
  write_text_file(dir / "g.json", g);
  REQUIRE(cli("eval --pred " + (dir / "g.json").string() + " --gt " + (dir / "g.json").string(), dir / "kv.txt") == 0);
  const auto kv = slurp(dir / "kv.txt");
  CHECK(kv.find("f1@10=1.000000") != std::string::npos);
  CHECK(kv.find("ecm=1.000000") != std::string::npos);

  fs::create_directories(dir / "pred");
  fs::create_directories(dir / "gt");
  write_text_file(dir / "pred" / "a.json", g);
  write_text_file(dir / "gt" / "a.json", g);
  write_text_file(dir / "pred" / "b.json", p);
  write_text_file(dir / "gt" / "b.json", g);
  REQUIRE(cli("eval --pred-dir " + (dir / "pred").string() + " --gt-dir " + (dir / "gt").string() +
              " --format json --tau 1,3", dir / "batch.json") == 0);
  const auto j = json::parse(slurp(dir / "batch.json"));
  CHECK(j["count"] == 2);
  CHECK(j["mean"]["naive_connectivity"].get<double>() == doctest::Approx(0.75));
  CHECK(j["mean"]["pixel"].size() == 2);

  CHECK(cli("eval --pred " + (dir / "g.json").string() + " --gt " + (dir / "g.json").string() + " --tau 0.5") != 0);
  CHECK(cli("eval --pred " + (dir / "g.json").string()) != 0);
  REQUIRE(cli("eval --pred " + (dir / "pred" / "b.json").string() + " --gt " + (dir / "g.json").string() + " --render " +
              (dir / "o.png").string()) == 0);
  CHECK(read_png(dir / "o.png").channels() == 3);
}

TEST_CASE("rollout writes a trace satisfying the interpolation identity") {
  const auto dir = fresh("rollout");
  write_text_file(dir / "p.json", R"({"size":[200,300],"instances":[{"id":1,"vertices":[[100,10],[100,250]]}]})");
  REQUIRE(cli("rollout --patch " + (dir / "p.json").string() + " --out " + (dir / "r").string() +
              " --policy noisy:sigma=2 --beta0 1 --lambda 0.1 --patch-index 4 --seed 2") == 0);
  std::ifstream in(dir / "r" / "trace.jsonl");
  std::string line;
  int steps = 0, ends = 0;
  while (std::getline(in, line)) {
    const auto j = json::parse(line);
    if (j["type"] == "end") {
      ++ends;
      continue;
    }
    ++steps;
    const double b = j["beta"];
    for (int k = 0; k < 2; ++k) {
      const double mix = b * j["v_star"][k].get<int>() + (1 - b) * j["v_hat"][k].get<int>();
      CHECK(j["v"][k].get<int>() == static_cast<int>(std::llround(mix)));
    }
  }
  CHECK(ends == 3);
  CHECK(steps > 0);
  CHECK(read_patch_file(dir / "r" / "generated.json").boundaries.size() >= 1);
}

TEST_CASE("rollout replays a recorded trace") {
  const auto dir = fresh("replay");
  write_text_file(dir / "p.json", R"({"size":[200,300],"instances":[{"id":1,"vertices":[[100,10],[100,250]]}]})");
  REQUIRE(cli("rollout --patch " + (dir / "p.json").string() + " --out " + (dir / "a").string() +
              " --policy noisy:sigma=2 --beta0 0.5") == 0);
  REQUIRE(cli("rollout --patch " + (dir / "p.json").string() + " --out " + (dir / "b").string() + " --policy replay:" +
              (dir / "a" / "trace.jsonl").string() + " --beta0 0.5") == 0);
  CHECK(slurp(dir / "a" / "trace.jsonl") == slurp(dir / "b" / "trace.jsonl"));
}

TEST_CASE("synth zero degradation evaluates to one") {
  const auto dir = fresh("synth");
  write_text_file(dir / "spec.json", R"({"seed":3,"size":[128,128],"n_instances":2,"min_length":30,"max_length":60})");
  REQUIRE(cli("synth --spec " + (dir / "spec.json").string() + " --out " + (dir / "s").string()) == 0);
  for (const char* f : {"gt.json", "pred.json", "annotation.json", "image.png"}) CHECK(fs::exists(dir / "s" / f));
  REQUIRE(cli("eval --pred " + (dir / "s" / "pred.json").string() + " --gt " + (dir / "s" / "gt.json").string(),
              dir / "kv.txt") == 0);
  const auto kv = slurp(dir / "kv.txt");
  CHECK(kv.find("f1@1=1.000000") != std::string::npos);
  CHECK(kv.find("ecm=1.000000") != std::string::npos);
}

TEST_CASE("config file supplies defaults, flags override") {
  const auto dir = fresh("config");
  write_text_file(dir / "p.json", R"({"size":[200,300],"instances":[{"id":1,"vertices":[[100,10],[100,250]]}]})");
  write_text_file(dir / "cfg.toml", "seed = 5\n[rollout]\nd-max = 10\nrounds = 1\n");
  REQUIRE(cli("--config " + (dir / "cfg.toml").string() + " rollout --patch " + (dir / "p.json").string() + " --out " +
              (dir / "a").string()) == 0);
  auto cfg = read_json_file(dir / "a" / "config.json");
  CHECK(cfg["d_max"] == 10);
  CHECK(cfg["rounds"] == 1);
  CHECK(cfg["seed"] == 5);
  REQUIRE(cli("--config " + (dir / "cfg.toml").string() + " rollout --patch " + (dir / "p.json").string() + " --out " +
              (dir / "b").string() + " --d-max 20") == 0);
  CHECK(read_json_file(dir / "b" / "config.json")["d_max"] == 20);
}

}
