#pragma once

#include <filesystem>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "vrd/autodiff/optim.hpp"
#include "vrd/training/dream.hpp"

namespace vrd::training {

/// Unweighted components and the weighted total.
struct OpenLoopLosses {
  double rssm = 0, target = 0, traj = 0, score = 0, total = 0;
};

/// Builds the open-loop loss of one sample on the active tape. The rssm
/// component is summed over the teacher-forced steps.
ad::Tensor open_loop_loss(const Model& m, const Sample& s, const TrainConfig& cfg, OpenLoopLosses& parts);

/// One optimizer step on the batch mean. All-zero weights skip the step.
OpenLoopLosses open_loop_step(Model& m, ad::Adam& opt, std::span<const Sample* const> batch, const TrainConfig& cfg);

struct AbortRecord {
  std::string scenario_id;
  std::size_t step = 0;
  std::string reason;
};

struct ClosedLoopResult {
  double dream_loss = 0;  // mean over completed rollouts
  std::size_t completed = 0;
  std::vector<AbortRecord> aborts;
};

/// Dreams every sample with gradients through all H steps, applies
/// weights.dream * dream_loss, clips and steps. Aborted rollouts are skipped.
ClosedLoopResult closed_loop_step(Model& m, ad::Adam& opt, std::span<const Sample* const> batch, const TrainConfig& cfg);

struct EpochLog {
  std::size_t epoch = 0;  // 1-based
  bool closed_loop = false;
  OpenLoopLosses open;
  double dream = 0;
  std::size_t aborts = 0;
  double seconds = 0;
};

class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Progress carried across train() calls so a resumed run matches an uninterrupted one.
struct TrainState {
  std::size_t epochs_done = 0;
  ad::Adam optimizer;
};

struct TrainHooks {
  std::function<void(const EpochLog&)> on_epoch;
  /// Called after on_epoch with the state that would resume from this point.
  std::function<void(const TrainState&)> on_state;
};

/// Warm-up epochs run the open-loop step only; later epochs follow each
/// open-loop step with a closed-loop step on the same batch. Dream loss is
/// measured every epoch (without gradients during warm-up). Throws
/// TrainingError when an epoch aborts more than max_abort_fraction of its rollouts.
/// With `state`, training continues after state->epochs_done with its optimizer
/// and the state is advanced after every epoch.
std::vector<EpochLog> train(Model& m, const std::vector<Sample>& samples, const TrainConfig& cfg,
                            const TrainHooks& hooks = {}, TrainState* state = nullptr);

void write_log_csv(const std::filesystem::path& path, const std::vector<EpochLog>& log);

}  // namespace vrd::training
