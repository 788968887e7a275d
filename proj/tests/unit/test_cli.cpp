#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "vrd/cli/cli.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Shared with the metric recomputation test, which reads the eval dumps left here.
const fs::path kWork = fs::current_path() / "cli_work";

struct Result {
  int code;
  std::string out, err;
};

Result vrd_run(std::vector<std::string> args) {
  args.insert(args.begin(), "vrd");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = vrd::cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in);
  return {std::istreambuf_iterator<char>(in), {}};
}

json tiny_config(std::size_t epochs) {
  return {{"model",
           {{"latent_dim", 4},
            {"max_agents", 6},
            {"encoder_hidden", 6},
            {"rssm_hidden", 8},
            {"predictor_hidden", 8},
            {"kinematics_hidden", 6},
            {"planner_hidden", 6},
            {"generator_hidden", 6},
            {"num_anchors", 8},
            {"num_targets", 2},
            {"plan_steps", 10}}},
          {"epochs", epochs},
          {"warmup_epochs", 1},
          {"batch_size", 2},
          {"H", 5},
          {"dt", 0.1},
          {"T", 0.5},
          {"seed", 3}};
}

fs::path write_json(const fs::path& p, const json& j) {
  std::ofstream(p) << j.dump(2);
  return p;
}

std::string s(const fs::path& p) { return p.string(); }

/// Runs once per process: corpus plus a two-epoch model reused by several cases.
struct Setup {
  fs::path corpus, run;
  Setup() {
    fs::remove_all(kWork);
    fs::create_directories(kWork);
    REQUIRE(vrd_run({"gen-data", "--seed", "4", "--count", "4", "--out", s(kWork / "data")}).code == 0);
    corpus = kWork / "data" / "corpus.jsonl";
    write_json(kWork / "train2.json", tiny_config(2));
    auto r = vrd_run({"train", "--config", s(kWork / "train2.json"), "--data", s(corpus), "--out", s(kWork / "run")});
    INFO(r.err);
    REQUIRE(r.code == 0);
    run = kWork / "run";
  }
};

const Setup& setup() {
  static Setup s;
  return s;
}

}  // namespace

TEST_CASE("usage errors exit 2 with one line") {
  const auto& st = setup();
  auto r = vrd_run({"dream", "--checkpoint", s(st.run / "model.ckpt"), "--data", s(st.corpus), "--scenario", "x", "--H",
                    "0", "--out", s(kWork / "never")});
  CHECK(r.code == 2);
  CHECK(r.err.find("error: usage:") == 0);
  CHECK(std::count(r.err.begin(), r.err.end(), '\n') == 1);
  CHECK_FALSE(fs::exists(kWork / "never"));

  CHECK(vrd_run({"eval", "--checkpoint", s(st.run / "model.ckpt"), "--data", s(st.corpus), "--K", "3", "--out",
                 s(kWork / "never")})
            .code == 2);
  CHECK(vrd_run({"eval", "--data", s(st.corpus), "--out", s(kWork / "never")}).code == 2);
  CHECK(vrd_run({"train", "--config", s(kWork / "missing.json"), "--data", s(st.corpus), "--out", s(kWork / "never")})
            .code == 2);
  CHECK(vrd_run({"frobnicate"}).code == 2);
  CHECK(vrd_run({}).code == 2);
  CHECK(vrd_run({"--help"}).code == 0);
}

TEST_CASE("runtime errors exit 1 with one line") {
  const auto& st = setup();
  std::ofstream(kWork / "bad.json") << "{\"epochs\": ";
  auto r = vrd_run({"train", "--config", s(kWork / "bad.json"), "--data", s(st.corpus), "--out", s(kWork / "bad")});
  CHECK(r.code == 1);
  CHECK(r.err.rfind("error: ", 0) == 0);
  CHECK(std::count(r.err.begin(), r.err.end(), '\n') == 1);

  r = vrd_run({"dream", "--checkpoint", s(st.run / "model.ckpt"), "--data", s(st.corpus), "--scenario", "nope", "--H",
               "3", "--out", s(kWork / "dream-missing")});
  CHECK(r.code == 1);
  CHECK(r.err.find("nope") != std::string::npos);
}

TEST_CASE("a run directory is written once") {
  const auto& st = setup();
  const auto before = slurp(st.corpus);
  auto r = vrd_run({"gen-data", "--seed", "4", "--count", "4", "--out", s(kWork / "data")});
  CHECK(r.code == 1);
  CHECK(slurp(st.corpus) == before);
}

TEST_CASE("manifest") {
  const auto& st = setup();
  const json m = json::parse(slurp(st.run / "manifest.json"));
  CHECK(m.at("command") == "train");
  CHECK(m.at("seed") == 3);
  CHECK(m.at("config").at("train").at("epochs") == 2);
  CHECK_FALSE(m.at("git_describe").get<std::string>().empty());
  CHECK_FALSE(m.at("started_at").get<std::string>().empty());
  CHECK(m.at("out_dir") == s(st.run));
  for (const char* f : {"model.ckpt", "train_state.json", "train_log.csv", "config.json"}) CHECK(fs::exists(st.run / f));
  const auto log = slurp(st.run / "train_log.csv");
  CHECK(std::count(log.begin(), log.end(), '\n') == 3);
}

TEST_CASE("resume continues exactly where the run stopped") {
  const auto& st = setup();
  write_json(kWork / "train1.json", tiny_config(1));
  REQUIRE(vrd_run({"train", "--config", s(kWork / "train1.json"), "--data", s(st.corpus), "--out", s(kWork / "r1")}).code ==
          0);
  auto r = vrd_run({"train", "--config", s(kWork / "train2.json"), "--data", s(st.corpus), "--out", s(kWork / "r2"),
                    "--resume", s(kWork / "r1")});
  INFO(r.err);
  REQUIRE(r.code == 0);
  CHECK(json::parse(slurp(kWork / "r2" / "model.ckpt")).at("params") ==
        json::parse(slurp(st.run / "model.ckpt")).at("params"));
  const auto log = slurp(kWork / "r2" / "train_log.csv");
  CHECK(std::count(log.begin(), log.end(), '\n') == 3);
}

TEST_CASE("oracle evaluation scores zero") {
  const auto& st = setup();
  auto r = vrd_run({"eval", "--oracle", "--data", s(st.corpus), "--out", s(kWork / "oracle")});
  INFO(r.err);
  REQUIRE(r.code == 0);
  const json m = json::parse(slurp(kWork / "oracle" / "metrics.json"));
  CHECK(m.at("minADE") == 0.0);
  CHECK(m.at("minFDE") == 0.0);
  CHECK(m.at("actorMR") == 0.0);
  CHECK(m.at("agents").get<int>() > 4);
}

TEST_CASE("identical runs give byte-identical metrics") {
  const auto& st = setup();
  for (const char* dir : {"eval-a", "eval-b"}) {
    auto r = vrd_run({"eval", "--checkpoint", s(st.run / "model.ckpt"), "--data", s(st.corpus), "--out", s(kWork / dir)});
    INFO(r.err);
    REQUIRE(r.code == 0);
  }
  CHECK(slurp(kWork / "eval-a" / "metrics.csv") == slurp(kWork / "eval-b" / "metrics.csv"));
  CHECK(slurp(kWork / "eval-a" / "metrics_per_scenario.csv") == slurp(kWork / "eval-b" / "metrics_per_scenario.csv"));

  // A second training run from the same manifest reproduces the metrics too.
  REQUIRE(vrd_run({"train", "--config", s(kWork / "train2.json"), "--data", s(st.corpus), "--out", s(kWork / "run-b")})
              .code == 0);
  REQUIRE(vrd_run({"eval", "--checkpoint", s(kWork / "run-b" / "model.ckpt"), "--data", s(st.corpus), "--out",
                   s(kWork / "eval-c")})
              .code == 0);
  CHECK(slurp(kWork / "eval-a" / "metrics.csv") == slurp(kWork / "eval-c" / "metrics.csv"));
}

TEST_CASE("dream writes a rollout and an overlay") {
  const auto& st = setup();
  const json first = json::parse(slurp(st.corpus).substr(0, slurp(st.corpus).find('\n')));
  const std::string id = first.at("id");
  auto r = vrd_run({"dream", "--checkpoint", s(st.run / "model.ckpt"), "--data", s(st.corpus), "--scenario", id, "--H",
                    "6", "--dt", "0.5", "--out", s(kWork / "dream")});
  INFO(r.err);
  REQUIRE(r.code == 0);
  const json j = json::parse(slurp(kWork / "dream" / "rollout.json"));
  CHECK(j.at("H") == 6);
  CHECK(j.at("stride") == 5);
  if (!j.at("aborted").get<bool>()) CHECK(j.at("agents")[0].at("dreamed").size() == 30);
  const auto svg = slurp(kWork / "dream" / "rollout.svg");
  CHECK(svg.rfind("<svg", 0) == 0);
  CHECK(svg.find("class=\"dreamed\"") != std::string::npos);
  CHECK(svg.find("class=\"truth\"") != std::string::npos);
}

TEST_CASE("ablation rows match per-cell evaluation") {
  setup();
  json cfg = tiny_config(1);
  cfg["ablation"] = json::array({{{"T", 0.4}, {"dt", 0.1}}, {{"T", 0.4}, {"dt", 0.2}}});
  write_json(kWork / "grid.json", {{"config", cfg}, {"train_data", "data/corpus.jsonl"}, {"eval_data", {{"seed", 9}, {"count", 2}}}});
  auto r = vrd_run({"ablate", "--config", s(kWork / "grid.json"), "--out", s(kWork / "ablate")});
  INFO(r.err);
  REQUIRE(r.code == 0);
  std::istringstream csv(slurp(kWork / "ablate" / "ablation.csv"));
  std::string line;
  std::vector<std::string> rows;
  std::getline(csv, line);
  CHECK(line == "T,dt,H,seed,minADE,minFDE,actorMR,status");
  while (std::getline(csv, line)) rows.push_back(line);
  REQUIRE(rows.size() == 2);
  for (std::size_t i = 0; i < 2; ++i) {
    const auto cell = kWork / "ablate" / "cells" / std::to_string(i);
    const auto out = kWork / ("ablate-eval-" + std::to_string(i));
    REQUIRE(vrd_run({"eval", "--checkpoint", s(cell / "model.ckpt"), "--data", s(kWork / "ablate" / "eval_corpus.jsonl"),
                     "--out", s(out)})
                .code == 0);
    std::istringstream m(slurp(out / "metrics.csv"));
    std::getline(m, line);
    std::getline(m, line);
    // K,minADE,minFDE,actorMR,... against T,dt,H,seed,minADE,minFDE,actorMR,status
    const auto metrics_part = line.substr(line.find(',') + 1);
    std::string expect;
    {
      std::istringstream f(metrics_part);
      std::string a, b, c;
      std::getline(f, a, ',');
      std::getline(f, b, ',');
      std::getline(f, c, ',');
      expect = a + "," + b + "," + c + ",ok";
    }
    CHECK(rows[i].ends_with(expect));
  }
}
