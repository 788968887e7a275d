#include "vrd/training/ablation.hpp"

#include <fmt/format.h>

namespace vrd::training {

std::string AblationTable::csv() const {
  std::string out = "T,dt,H,seed,minADE,minFDE,actorMR,status\n";
  for (const auto& r : rows) {
    if (r.ok) {
      out += fmt::format("{:g},{:g},{},{},{:.9f},{:.9f},{:.9f},ok\n", r.cell.T, r.cell.dt, r.H, r.seed, r.report.min_ade,
                         r.report.min_fde, r.report.actor_mr);
    } else {
      std::string msg = r.error;
      for (char& c : msg)
        if (c == ',' || c == '\n') c = ';';
      out += fmt::format("{:g},{:g},{},{},nan,nan,nan,failed: {}\n", r.cell.T, r.cell.dt, r.H, r.seed, msg);
    }
  }
  return out;
}

AblationTable run_ablation(const TrainConfig& base, const std::vector<scene::Scenario>& train_set,
                           const std::vector<scene::Scenario>& eval_set, const AblationHooks& hooks) {
  if (base.ablation.empty()) throw ConfigError("run_ablation: empty grid");
  AblationTable table;
  for (const auto& cell : base.ablation) {
    AblationRow row;
    row.cell = cell;
    const TrainConfig cfg = base.for_cell(cell);
    row.H = cfg.H;
    row.seed = cfg.seed;
    try {
      validate(cfg);
      const auto train_samples = prepare_samples(train_set, cfg);
      const auto eval_samples = prepare_samples(eval_set, cfg);
      Model m(cfg.model, cfg.seed);
      train(m, train_samples, cfg, hooks.train);
      row.report = metrics::evaluate(m, eval_samples, metrics::EvalOptions::from(cfg));
      row.ok = true;
      if (hooks.on_trained) hooks.on_trained(row, m, cfg);
    } catch (const std::exception& e) {
      row.error = e.what();
    }
    if (hooks.on_cell) hooks.on_cell(row);
    table.rows.push_back(std::move(row));
  }
  return table;
}

}  // namespace vrd::training
