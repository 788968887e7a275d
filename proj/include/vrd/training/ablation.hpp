#pragma once

#include <functional>
#include <string>
#include <vector>

#include "vrd/metrics/evaluate.hpp"
#include "vrd/training/trainer.hpp"

namespace vrd::training {

struct AblationRow {
  AblationCell cell;
  std::size_t H = 0;
  std::uint64_t seed = 0;
  bool ok = false;
  /// Failure message when !ok.
  std::string error;
  metrics::MetricsReport report;
};

struct AblationTable {
  std::vector<AblationRow> rows;

  /// T, dt, H, seed, minADE, minFDE, actorMR, status. Failed cells print "nan".
  std::string csv() const;
};

struct AblationHooks {
  std::function<void(const AblationRow&)> on_cell;
  /// Called before on_cell for cells that trained and evaluated successfully.
  std::function<void(const AblationRow&, const Model&, const TrainConfig&)> on_trained;
  TrainHooks train;
};

/// Trains a fresh model per grid cell on `train_set` and evaluates it on
/// `eval_set` at the cell's dt. A failing cell is recorded and the grid continues.
/// Throws ConfigError on an empty grid.
AblationTable run_ablation(const TrainConfig& base, const std::vector<scene::Scenario>& train_set,
                           const std::vector<scene::Scenario>& eval_set, const AblationHooks& hooks = {});

}  // namespace vrd::training
