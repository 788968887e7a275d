#include <CLI11.hpp>

#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "vrd/autodiff/parameters.hpp"
#include "vrd/autodiff/tape.hpp"
#include "vrd/cli/cli.hpp"
#include "vrd/data/io.hpp"
#include "vrd/data/synthetic.hpp"
#include "vrd/metrics/evaluate.hpp"
#include "vrd/training/ablation.hpp"
#include "vrd/training/trainer.hpp"

namespace vrd::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

/// Semantic flag errors found after parsing; reported like parse errors.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string one_line(std::string s) {
  for (char& c : s)
    if (c == '\n' || c == '\r') c = ' ';
  return s;
}

void write_text(const fs::path& path, const std::string& text) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
    if (!out) throw std::runtime_error("cannot write " + path.string());
  }
  fs::rename(tmp, path);
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw std::runtime_error(path.string() + ": " + e.what());
  }
}

/// A run directory holds exactly one manifest; existing runs are never overwritten.
void claim_out_dir(const fs::path& dir) {
  if (fs::exists(dir / "manifest.json")) throw std::runtime_error(dir.string() + " already holds a run");
  fs::create_directories(dir);
}

struct Run {
  RunManifest manifest;

  Run(std::string command, const fs::path& out, std::uint64_t seed, json config) {
    claim_out_dir(out);
    manifest.command = std::move(command);
    manifest.out_dir = out;
    manifest.seed = seed;
    manifest.config = std::move(config);
    manifest.git_describe = git_describe();
    manifest.started_at = utc_now();
  }

  void finish() {
    manifest.finished_at = utc_now();
    write_text(manifest.out_dir / "manifest.json", manifest.to_json().dump(2) + "\n");
  }
};

std::vector<scene::Scenario> load_corpus(const fs::path& path, std::ostream& err) {
  auto res = data::load(path);
  for (const auto& w : res.warnings) err << "warning: " << one_line(w) << "\n";
  if (res.scenarios.empty()) throw std::runtime_error(path.string() + ": no scenarios");
  return std::move(res.scenarios);
}

/// A corpus is a JSONL path (relative to `base`) or {"seed", "count", "mix"} for the generator.
std::vector<scene::Scenario> corpus_from_spec(const json& spec, const fs::path& base, std::ostream& err) {
  if (spec.is_string()) {
    fs::path p = spec.get<std::string>();
    return load_corpus(p.is_absolute() ? p : base / p, err);
  }
  if (!spec.is_object()) throw std::runtime_error("corpus must be a path or a generator object");
  for (const auto& [k, v] : spec.items())
    if (k != "seed" && k != "count" && k != "mix") throw std::runtime_error("corpus: unknown key '" + k + "'");
  const auto mix = data::ArchetypeMix::parse(spec.value("mix", data::ArchetypeMix{}.to_string()));
  return data::generate_synthetic(spec.value("seed", std::uint64_t{0}), spec.at("count").get<std::size_t>(), mix);
}

training::TrainConfig checkpoint_config(const json& meta) {
  if (meta.contains("train")) return training::train_config_from_json(meta.at("train"));
  return training::train_config_from_json({{"model", meta.at("model")}});
}

json epoch_json(const training::EpochLog& e) {
  return {{"epoch", e.epoch},         {"closed_loop", e.closed_loop}, {"rssm", e.open.rssm},
          {"target", e.open.target},  {"traj", e.open.traj},          {"score", e.open.score},
          {"total", e.open.total},    {"dream", e.dream},             {"aborts", e.aborts},
          {"seconds", e.seconds}};
}

training::EpochLog epoch_from_json(const json& j) {
  training::EpochLog e;
  e.epoch = j.at("epoch");
  e.closed_loop = j.at("closed_loop");
  e.open = {j.at("rssm"), j.at("target"), j.at("traj"), j.at("score"), j.at("total")};
  e.dream = j.at("dream");
  e.aborts = j.at("aborts");
  e.seconds = j.at("seconds");
  return e;
}

// ---------------------------------------------------------------------------

struct GenDataArgs {
  std::uint64_t seed = 0;
  std::size_t count = 0;
  std::string mix = data::ArchetypeMix{}.to_string();
  std::size_t observation = 40;
  std::size_t horizon = 60;
  fs::path out;
};

int gen_data(const GenDataArgs& a, std::ostream& out) {
  data::SyntheticOptions opt;
  opt.observation_len = a.observation;
  opt.horizon_len = a.horizon;
  const auto mix = data::ArchetypeMix::parse(a.mix);
  Run run("gen-data", a.out, a.seed,
          {{"count", a.count}, {"mix", mix.to_string()}, {"observation", a.observation}, {"horizon", a.horizon}});
  const auto corpus = data::generate_synthetic(a.seed, a.count, mix, opt);
  data::save(a.out / "corpus.jsonl", corpus);
  run.finish();
  out << fmt::format("wrote {} scenarios to {}\n", corpus.size(), (a.out / "corpus.jsonl").string());
  return 0;
}

struct TrainArgs {
  fs::path config, data, out, resume;
  std::optional<std::uint64_t> seed;
};

int train_cmd(const TrainArgs& a, std::ostream& out, std::ostream& err) {
  training::TrainConfig cfg = training::load_train_config(a.config);
  if (a.seed) cfg.seed = *a.seed;
  training::validate(cfg);

  std::vector<training::EpochLog> log;
  training::TrainState state{0, ad::Adam({.lr = cfg.lr})};
  std::unique_ptr<training::Model> model;
  if (!a.resume.empty()) {
    json meta;
    model = training::load_model(a.resume / "model.ckpt", &meta);
    if (training::to_json(checkpoint_config(meta)).at("model") != training::to_json(cfg).at("model"))
      throw std::runtime_error("resume: model config differs from " + a.config.string());
    const json st = read_json(a.resume / "train_state.json");
    state.epochs_done = st.at("epochs_done");
    state.optimizer.load_state(st.at("optimizer"));
    for (const auto& e : st.at("log")) log.push_back(epoch_from_json(e));
  } else {
    model = std::make_unique<training::Model>(cfg.model, cfg.seed);
  }

  json snapshot = training::to_json(cfg);
  Run run("train", a.out, cfg.seed,
          {{"train", snapshot}, {"data", a.data.string()}, {"resume", a.resume.empty() ? json() : json(a.resume.string())}});
  write_text(a.out / "config.json", snapshot.dump(2) + "\n");
  const auto samples = training::prepare_samples(load_corpus(a.data, err), cfg);

  auto save = [&](const training::TrainState& st) {
    json logj = json::array();
    for (const auto& e : log) logj.push_back(epoch_json(e));
    training::save_model(a.out / "model.ckpt", *model, {{"train", snapshot}, {"epochs_done", st.epochs_done}});
    write_text(a.out / "train_state.json",
               json{{"epochs_done", st.epochs_done}, {"optimizer", st.optimizer.state()}, {"log", logj}}.dump() + "\n");
    training::write_log_csv(a.out / "train_log.csv", log);
  };
  training::TrainHooks hooks;
  hooks.on_epoch = [&](const training::EpochLog& e) {
    log.push_back(e);
    out << fmt::format("epoch {:>3} {:<6} open {:.4f} dream {:.4f} aborts {} ({:.1f}s)\n", e.epoch,
                       e.closed_loop ? "closed" : "open", e.open.total, e.dream, e.aborts, e.seconds)
        << std::flush;
  };
  hooks.on_state = save;
  training::train(*model, samples, cfg, hooks, &state);
  save(state);
  run.finish();
  return 0;
}

struct EvalArgs {
  fs::path checkpoint, data, out;
  bool oracle = false;
  std::size_t K = 1;
  std::optional<double> dt, horizon;
};

int eval_cmd(const EvalArgs& a, std::ostream& out, std::ostream& err) {
  if (a.K != 1) throw UsageError("--K: the dream forecaster emits one trajectory per agent; only K=1 is defined");
  if (a.oracle == !a.checkpoint.empty()) throw UsageError("exactly one of --checkpoint and --oracle is required");
  training::TrainConfig cfg;
  std::unique_ptr<training::Model> model;
  if (!a.oracle) {
    json meta;
    model = training::load_model(a.checkpoint, &meta);
    cfg = checkpoint_config(meta);
  }
  if (a.dt) cfg.dt = *a.dt;
  if (a.horizon) cfg.eval_seconds = *a.horizon;
  const auto opt = metrics::EvalOptions::from(cfg);
  Run run("eval", a.out, cfg.seed,
          {{"checkpoint", a.oracle ? json("oracle") : json(a.checkpoint.string())},
           {"data", a.data.string()},
           {"K", a.K},
           {"dt", opt.dt},
           {"horizon_seconds", opt.horizon_seconds},
           {"ego_pose", training::to_string(opt.ego_pose)}});
  const auto samples = training::prepare_samples(load_corpus(a.data, err), cfg);
  const auto report = a.oracle ? metrics::evaluate_oracle(samples, opt) : metrics::evaluate(*model, samples, opt);
  metrics::write_report(a.out, report);
  run.finish();
  out << report.summary_csv();
  return 0;
}

struct DreamArgs {
  fs::path checkpoint, data, out;
  std::string scenario;
  std::size_t H = 0;
  double dt = 0.1;
};

int dream_cmd(const DreamArgs& a, std::ostream& out, std::ostream& err) {
  json meta;
  auto model = training::load_model(a.checkpoint, &meta);
  training::TrainConfig cfg = checkpoint_config(meta);
  cfg.H = a.H;
  cfg.dt = a.dt;
  cfg.eval_seconds = 0;
  Run run("dream", a.out, cfg.seed,
          {{"checkpoint", a.checkpoint.string()}, {"data", a.data.string()}, {"scenario", a.scenario}, {"H", a.H},
           {"dt", a.dt}, {"ego_pose", training::to_string(cfg.ego_pose)}});
  const auto corpus = load_corpus(a.data, err);
  auto it = std::find_if(corpus.begin(), corpus.end(), [&](const auto& s) { return s.id == a.scenario; });
  if (it == corpus.end()) throw std::runtime_error("scenario '" + a.scenario + "' not in " + a.data.string());
  const auto sample = training::prepare_sample(*it, cfg);
  training::DreamRollout r;
  {
    ad::NoGradGuard ng;
    r = training::dream_rollout(*model, sample, {.H = a.H, .dt = a.dt, .ego_pose = cfg.ego_pose});
  }
  write_text(a.out / "rollout.json", rollout_json(r, sample).dump(2) + "\n");
  write_text(a.out / "rollout.svg", render_svg(r, sample, *it));
  run.finish();
  if (r.aborted) {
    out << fmt::format("aborted at step {}: {}\n", r.abort_step, one_line(r.abort_reason));
  } else {
    out << fmt::format("dreamed {} steps of {} s for {} agents\n", r.length(), a.dt, r.agent_ids.size());
  }
  return 0;
}

struct AblateArgs {
  fs::path config, out;
  std::optional<std::uint64_t> seed;
};

int ablate_cmd(const AblateArgs& a, std::ostream& out, std::ostream& err) {
  const json grid = read_json(a.config);
  for (const auto& [k, v] : grid.items())
    if (k != "config" && k != "train_data" && k != "eval_data")
      throw std::runtime_error(a.config.string() + ": unknown key '" + k + "'");
  training::TrainConfig base = training::train_config_from_json(grid.at("config"));
  if (a.seed) base.seed = *a.seed;
  if (base.ablation.empty()) throw std::runtime_error(a.config.string() + ": empty ablation grid");
  const fs::path dir = a.config.parent_path();
  Run run("ablate", a.out, base.seed,
          {{"config", training::to_json(base)},
           {"train_data", grid.at("train_data")},
           {"eval_data", grid.value("eval_data", grid.at("train_data"))}});
  const auto train_set = corpus_from_spec(grid.at("train_data"), dir, err);
  const auto eval_set = grid.contains("eval_data") ? corpus_from_spec(grid.at("eval_data"), dir, err) : train_set;
  data::save(a.out / "train_corpus.jsonl", train_set);
  data::save(a.out / "eval_corpus.jsonl", eval_set);

  std::size_t index = 0;
  training::AblationHooks hooks;
  hooks.on_trained = [&](const training::AblationRow& row, const training::Model& m, const training::TrainConfig& cfg) {
    const fs::path cell = a.out / "cells" / std::to_string(index);
    fs::create_directories(cell);
    training::save_model(cell / "model.ckpt", m, {{"train", training::to_json(cfg)}});
    metrics::write_report(cell, row.report);
  };
  hooks.on_cell = [&](const training::AblationRow& row) {
    out << fmt::format("cell {} T={:g} dt={:g} H={} seed={}: {}\n", index, row.cell.T, row.cell.dt, row.H, row.seed,
                       row.ok ? fmt::format("minADE {:.4f}", row.report.min_ade) : "failed: " + one_line(row.error))
        << std::flush;
    ++index;
  };
  const auto table = training::run_ablation(base, train_set, eval_set, hooks);
  write_text(a.out / "ablation.csv", table.csv());
  run.finish();
  out << table.csv();
  return 0;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"World-model motion forecaster: generate data, train, evaluate, dream and ablate."};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all");

  GenDataArgs gd;
  auto* c_gen = app.add_subcommand("gen-data", "Write a synthetic scenario corpus");
  c_gen->add_option("--seed", gd.seed, "Generator seed");
  c_gen->add_option("--count", gd.count, "Number of scenarios")->required()->check(CLI::PositiveNumber);
  c_gen->add_option("--mix", gd.mix, "Archetype weights, e.g. straight:2,yield:1");
  c_gen->add_option("--observation", gd.observation, "Observed steps")->check(CLI::PositiveNumber);
  c_gen->add_option("--horizon", gd.horizon, "Future steps")->check(CLI::PositiveNumber);
  c_gen->add_option("--out", gd.out, "Run directory")->required();

  TrainArgs tr;
  auto* c_train = app.add_subcommand("train", "Train a model");
  c_train->add_option("--config", tr.config, "Training config (JSON)")->required()->check(CLI::ExistingFile);
  c_train->add_option("--data", tr.data, "Scenario corpus (JSONL)")->required()->check(CLI::ExistingFile);
  c_train->add_option("--out", tr.out, "Run directory")->required();
  c_train->add_option("--resume", tr.resume, "Earlier train run directory to continue")->check(CLI::ExistingDirectory);
  c_train->add_option("--seed", tr.seed, "Overrides the config seed");

  EvalArgs ev;
  auto* c_eval = app.add_subcommand("eval", "Score dreamed forecasts");
  c_eval->add_option("--checkpoint", ev.checkpoint, "Model checkpoint")->check(CLI::ExistingFile);
  c_eval->add_flag("--oracle", ev.oracle, "Score the ground truth itself");
  c_eval->add_option("--data", ev.data, "Scenario corpus (JSONL)")->required()->check(CLI::ExistingFile);
  c_eval->add_option("--K", ev.K, "Modes per agent")->check(CLI::PositiveNumber);
  c_eval->add_option("--dt", ev.dt, "Dream step (s); defaults to the training value")->check(CLI::IsMember({0.1, 0.2, 0.5}));
  c_eval->add_option("--horizon", ev.horizon, "Scored seconds")->check(CLI::PositiveNumber);
  c_eval->add_option("--out", ev.out, "Run directory")->required();

  DreamArgs dr;
  auto* c_dream = app.add_subcommand("dream", "Dream one scenario and plot it");
  c_dream->add_option("--checkpoint", dr.checkpoint, "Model checkpoint")->required()->check(CLI::ExistingFile);
  c_dream->add_option("--data", dr.data, "Scenario corpus (JSONL)")->required()->check(CLI::ExistingFile);
  c_dream->add_option("--scenario", dr.scenario, "Scenario id")->required();
  c_dream->add_option("--H", dr.H, "Dream steps")->required()->check(CLI::PositiveNumber);
  c_dream->add_option("--dt", dr.dt, "Dream step (s)")->check(CLI::IsMember({0.1, 0.2, 0.5}));
  c_dream->add_option("--out", dr.out, "Run directory")->required();

  AblateArgs ab;
  auto* c_ablate = app.add_subcommand("ablate", "Train and evaluate every (T, dt) cell of a grid");
  c_ablate->add_option("--config", ab.config, "Grid file (JSON)")->required()->check(CLI::ExistingFile);
  c_ablate->add_option("--out", ab.out, "Run directory")->required();
  c_ablate->add_option("--seed", ab.seed, "Overrides the config seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << "error: usage: " << one_line(e.what()) << "\n";
    return kExitUsage;
  }

  try {
    if (c_gen->parsed()) return gen_data(gd, out);
    if (c_train->parsed()) return train_cmd(tr, out, err);
    if (c_eval->parsed()) return eval_cmd(ev, out, err);
    if (c_dream->parsed()) return dream_cmd(dr, out, err);
    return ablate_cmd(ab, out, err);
  } catch (const UsageError& e) {
    err << "error: usage: " << one_line(e.what()) << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << one_line(e.what()) << "\n";
    return kExitRuntime;
  }
}

}  // namespace vrd::cli
