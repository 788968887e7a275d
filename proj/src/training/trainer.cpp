#include "vrd/training/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>
#include <fstream>
#include <numeric>

#include <fmt/format.h>

#include "vrd/autodiff/tape.hpp"
#include "vrd/common/rng.hpp"

namespace vrd::training {

using namespace ad;

namespace {

/// z re-laid onto the slots of `like` by agent id; agents missing from z get zero rows.
scene::LatentScene realign(const scene::LatentScene& z, const scene::LatentScene& like) {
  if (z.agent_ids == like.agent_ids) return like.with_embeddings(z.embeddings);
  std::vector<std::size_t> src, dst;
  for (std::size_t i = 0; i < like.slots(); ++i) {
    if (!like.mask[i]) continue;
    auto it = std::find(z.agent_ids.begin(), z.agent_ids.end(), like.agent_ids[i]);
    if (it == z.agent_ids.end() || it->empty()) continue;
    src.push_back(static_cast<std::size_t>(it - z.agent_ids.begin()));
    dst.push_back(i);
  }
  if (src.empty()) return like.with_embeddings(Tensor::zeros({like.slots(), like.dim()}));
  return like.with_embeddings(scatter_rows(gather_rows(z.embeddings, src), dst, like.slots()));
}

bool open_loop_weights_zero(const LossWeights& w) {
  return w.rssm == 0 && w.target == 0 && w.traj == 0 && w.score == 0;
}

template <class F>
auto with_context(const std::string& id, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const NonFiniteError& e) {
    throw NonFiniteError(id + ": " + e.what());
  } catch (const ShapeError& e) {
    throw ShapeError(id + ": " + e.what());
  } catch (const TrainingError&) {
    throw;
  } catch (const std::exception& e) {
    throw TrainingError(id + ": " + e.what());
  }
}

void accumulate(OpenLoopLosses& acc, const OpenLoopLosses& x, double w) {
  acc.rssm += w * x.rssm;
  acc.target += w * x.target;
  acc.traj += w * x.traj;
  acc.score += w * x.score;
  acc.total += w * x.total;
}

}  // namespace

Tensor open_loop_loss(const Model& m, const Sample& s, const TrainConfig& cfg, OpenLoopLosses& parts) {
  const bool prediction_side = cfg.stop_gradient == rssm::StopGradient::Prediction;
  const scene::LatentScene z0 = m.encoder.encode(s.frame0());

  const auto d = m.planner.score_targets(z0, s.candidates);
  Tensor target = planner::target_loss(d, s.candidates, s.ego_endpoint);
  Tensor traj = planner::trajectory_loss(
      m.planner.generate_trajectories(z0, Tensor::row({s.ego_endpoint.x, s.ego_endpoint.y})), s.ego_plan);
  // The scorer ranks the generated set; it does not pull the generator.
  const Tensor trajs =
      m.planner.generate_trajectories(z0, m.planner.target_points(d, s.candidates, m.planner.top_targets(d, s.candidates)))
          .detach();
  Tensor score = planner::score_loss(m.planner.trajectory_logits(z0, trajs), trajs, s.ego_plan, cfg.score_alpha);

  Tensor rssm_total = Tensor::scalar(0.0);
  Tensor h = m.rssm.initial_state();
  scene::LatentScene input = prediction_side ? z0 : z0.with_embeddings(z0.embeddings.detach());
  const auto& bounds = m.rssm.config().bounds;
  for (std::size_t k = 0; k < s.teacher_actions.size(); ++k) {
    scene::LatentScene next;
    if (prediction_side) {
      next = realign(m.encoder.encode(s.frames[k + 1]), z0);
    } else {
      NoGradGuard ng;
      next = realign(m.encoder.encode(s.frames[k + 1]), z0);
    }
    h = m.rssm.recurrent_step(h, input, rssm::action_tensor(s.teacher_actions[k], bounds));
    rssm_total = add(rssm_total, rssm::rssm_loss(next, m.rssm.predict_transition(h, z0), cfg.stop_gradient));
    input = next;
  }

  const auto& w = cfg.weights;
  Tensor total = add(add(scale(rssm_total, w.rssm), scale(target, w.target)), add(scale(traj, w.traj), scale(score, w.score)));
  parts = {rssm_total.item(), target.item(), traj.item(), score.item(), total.item()};
  return total;
}

OpenLoopLosses open_loop_step(Model& m, Adam& opt, std::span<const Sample* const> batch, const TrainConfig& cfg) {
  if (batch.empty()) throw std::invalid_argument("open_loop_step: empty batch");
  const double inv = 1.0 / static_cast<double>(batch.size());
  OpenLoopLosses mean;
  if (open_loop_weights_zero(cfg.weights)) {
    NoGradGuard ng;
    for (const Sample* s : batch) {
      OpenLoopLosses parts;
      with_context(s->scenario_id, [&] { return open_loop_loss(m, *s, cfg, parts); });
      accumulate(mean, parts, inv);
    }
    return mean;
  }
  m.params.zero_grad();
  for (const Sample* s : batch) {
    OpenLoopLosses parts;
    with_context(s->scenario_id, [&] {
      Tape tape;
      Tape::Scope scope(tape);
      Tensor loss = open_loop_loss(m, *s, cfg, parts);
      tape.backward(scale(loss, inv));
      return 0;
    });
    accumulate(mean, parts, inv);
  }
  m.params.clip_grad_norm(cfg.clip_norm);
  opt.step(m.params);
  return mean;
}

ClosedLoopResult closed_loop_step(Model& m, Adam& opt, std::span<const Sample* const> batch, const TrainConfig& cfg) {
  if (batch.empty()) throw std::invalid_argument("closed_loop_step: empty batch");
  ClosedLoopResult out;
  if (cfg.weights.dream == 0) return out;
  const double inv = 1.0 / static_cast<double>(batch.size());
  const DreamOptions opts{.H = cfg.H, .dt = cfg.dt, .ego_pose = cfg.ego_pose};
  m.params.zero_grad();
  double sum = 0;
  for (const Sample* s : batch) {
    Tape tape;
    Tape::Scope scope(tape);
    const DreamRollout r = with_context(s->scenario_id, [&] { return dream_rollout(m, *s, opts); });
    if (r.aborted) {
      out.aborts.push_back({s->scenario_id, r.abort_step, r.abort_reason});
      continue;
    }
    try {
      Tensor loss = dream_loss(r, s->agents);
      tape.backward(scale(loss, cfg.weights.dream * inv));
      sum += loss.item();
      ++out.completed;
    } catch (const NonFiniteError& e) {
      out.aborts.push_back({s->scenario_id, r.length(), e.what()});
    }
  }
  if (out.completed > 0) {
    out.dream_loss = sum / static_cast<double>(out.completed);
    m.params.clip_grad_norm(cfg.clip_norm);
    opt.step(m.params);
  }
  return out;
}

std::vector<EpochLog> train(Model& m, const std::vector<Sample>& samples, const TrainConfig& cfg, const TrainHooks& hooks,
                            TrainState* state) {
  if (samples.empty()) throw TrainingError("train: no samples");
  validate(cfg);
  TrainState local{0, Adam({.lr = cfg.lr})};
  TrainState& st = state ? *state : local;
  Adam& opt = st.optimizer;
  opt.set_lr(cfg.lr);
  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), 0);
  const Rng root = Rng(cfg.seed).split("shuffle");
  const DreamOptions dream_opts{.H = cfg.H, .dt = cfg.dt, .ego_pose = cfg.ego_pose};
  std::vector<EpochLog> log;
  for (std::size_t epoch = st.epochs_done + 1; epoch <= cfg.epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    if (cfg.lr_final > 0 && cfg.epochs > 1) {
      const double progress = static_cast<double>(epoch - 1) / static_cast<double>(cfg.epochs - 1);
      opt.set_lr(cfg.lr_final + 0.5 * (cfg.lr - cfg.lr_final) * (1.0 + std::cos(std::numbers::pi * progress)));
    }
    // Each epoch's order depends only on (seed, epoch), so a resumed run sees the same batches.
    std::iota(order.begin(), order.end(), 0);
    Rng rng = root.split(epoch);
    std::shuffle(order.begin(), order.end(), rng.engine());
    EpochLog e;
    e.epoch = epoch;
    e.closed_loop = epoch > cfg.warmup_epochs;
    for (std::size_t b = 0; b < order.size(); b += cfg.batch_size) {
      std::vector<const Sample*> batch;
      for (std::size_t i = b; i < std::min(order.size(), b + cfg.batch_size); ++i) batch.push_back(&samples[order[i]]);
      accumulate(e.open, open_loop_step(m, opt, batch, cfg), static_cast<double>(batch.size()) / samples.size());
      if (e.closed_loop) e.aborts += closed_loop_step(m, opt, batch, cfg).aborts.size();
    }
    if (static_cast<double>(e.aborts) > cfg.max_abort_fraction * static_cast<double>(samples.size())) {
      throw TrainingError(fmt::format("epoch {}: {} of {} rollouts aborted", epoch, e.aborts, samples.size()));
    }
    {
      NoGradGuard ng;
      double sum = 0;
      std::size_t done = 0;
      for (const auto& s : samples) {
        auto r = dream_rollout(m, s, dream_opts);
        if (r.aborted) continue;
        sum += dream_loss(r, s.agents).item();
        ++done;
      }
      e.dream = done ? sum / static_cast<double>(done) : 0.0;
    }
    e.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    log.push_back(e);
    st.epochs_done = epoch;
    if (hooks.on_epoch) hooks.on_epoch(e);
    if (hooks.on_state) hooks.on_state(st);
  }
  return log;
}

void write_log_csv(const std::filesystem::path& path, const std::vector<EpochLog>& log) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "epoch,phase,rssm,target,traj,score,open_total,dream,aborts,seconds\n";
  for (const auto& e : log) {
    out << fmt::format("{},{},{:.9g},{:.9g},{:.9g},{:.9g},{:.9g},{:.9g},{},{:.3f}\n", e.epoch,
                       e.closed_loop ? "closed" : "open", e.open.rssm, e.open.target, e.open.traj, e.open.score,
                       e.open.total, e.dream, e.aborts, e.seconds);
  }
}

}  // namespace vrd::training
