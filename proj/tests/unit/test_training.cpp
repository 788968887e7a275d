#include <doctest.h>

#include <cmath>
#include <numeric>

#include "support/fixtures.hpp"
#include "support/gradcheck.hpp"
#include "vrd/autodiff/tape.hpp"
#include "vrd/data/synthetic.hpp"
#include "vrd/metrics/evaluate.hpp"
#include "vrd/training/ablation.hpp"
#include "vrd/training/trainer.hpp"

using namespace vrd;
using namespace vrd::training;

namespace {

TrainConfig tiny_config() {
  TrainConfig c;
  auto& m = c.model;
  m.latent_dim = 4;
  m.max_agents = 6;
  m.encoder_hidden = 6;
  m.rssm_hidden = 8;
  m.predictor_hidden = 8;
  m.kinematics_hidden = 6;
  m.planner_hidden = 6;
  m.generator_hidden = 6;
  m.num_anchors = 8;
  m.num_targets = 2;
  m.plan_steps = 10;
  c.H = 2;
  c.dt = 0.1;
  c.T = 0.2;
  c.batch_size = 2;
  c.epochs = 2;
  c.warmup_epochs = 1;
  return c;
}

TrainConfig fixture_config() {
  TrainConfig c;
  auto& m = c.model;
  m.latent_dim = 16;
  m.max_agents = 8;
  m.encoder_hidden = 16;
  m.rssm_hidden = 32;
  m.predictor_hidden = 32;
  m.kinematics_hidden = 16;
  m.planner_hidden = 16;
  m.generator_hidden = 16;
  m.num_anchors = 16;
  m.num_targets = 3;
  m.plan_steps = 10;
  c.H = 10;
  c.dt = 0.1;
  c.T = 1.0;
  return c;
}

std::vector<double> snapshot(const ad::ParameterSet& p) {
  std::vector<double> out;
  for (const auto& [n, t] : p) out.insert(out.end(), t.values().begin(), t.values().end());
  return out;
}

void randomize(ad::ParameterSet& params, std::uint64_t seed, double lo, double hi) {
  Rng rng(seed);
  for (auto& [n, p] : params) {
    auto r = testing::random_param(rng, p.shape(), lo, hi);
    std::ranges::copy(r.values(), p.mutable_values().begin());
  }
}

/// Hand-built single-agent rollout of one step with the given final state and command.
std::pair<DreamRollout, std::vector<AgentTruth>> one_step(double x, double accel) {
  DreamRollout r;
  r.agent_ids = {"a"};
  r.mask = {true};
  DreamStep s;
  s.substates = {kin::AgentStates::from({{x, 0, 0, 0}})};
  s.commands = ad::Tensor::row({accel, 0.0});
  r.steps.push_back(s);
  AgentTruth t;
  t.agent_id = "a";
  t.states = {{0, 0, 0, 0}, {0, 0, 0, 0}};
  t.valid = {true, true};
  t.commands = {{0, 0}, {0, 0}};
  t.command_valid = {true, true};
  return {r, {t}};
}

}  // namespace

TEST_CASE("config") {
  TrainConfig c = fixture_config();
  c.ablation = {{2.0, 0.1, std::nullopt}, {2.0, 0.5, 9}};
  auto back = train_config_from_json(to_json(c));
  CHECK(to_json(back) == to_json(c));
  CHECK(back.ablation[1].seed == 9u);
  CHECK_NOTHROW(validate(c, 60));

  auto bad = c;
  bad.dt = 0.3;
  CHECK_THROWS_AS(validate(bad), ConfigError);
  bad = c;
  bad.H = 0;
  CHECK_THROWS_AS(validate(bad), ConfigError);
  bad = c;
  bad.H = 70;
  CHECK_THROWS_AS(validate(bad, 60), ConfigError);
  bad = c;
  bad.T = 0.25;
  CHECK_THROWS_AS(validate(bad), ConfigError);
  CHECK_THROWS_AS(train_config_from_json({{"epoch", 3}}), ConfigError);
  CHECK_THROWS_AS(train_config_from_json({{"ego_pose", "sideways"}}), ConfigError);

  auto cell = c.for_cell({4.0, 0.5, 3});
  CHECK(cell.H == 8);
  CHECK(cell.stride() == 5);
  CHECK(cell.teacher_steps() == 8);
  CHECK(cell.seed == 3);
}

TEST_CASE("finite-difference commands") {
  // Euler states from known commands: central differences average neighbours.
  scene::AgentTrack tr;
  tr.agent_id = "a";
  std::vector<kin::KinematicCommand> cmds;
  kin::KinematicState s{0, 0, 3.0, 5.0};
  for (int t = 0; t < 30; ++t) {
    tr.states.push_back(s);
    tr.valid.push_back(true);
    cmds.push_back({std::sin(0.2 * t), 0.4 + 0.1 * std::cos(0.3 * t)});
    s = kin::integrate(s, cmds.back(), 0.1);
  }
  auto fd = finite_difference_commands(tr, 0.1);
  for (int t = 1; t + 1 < 30; ++t) {
    CHECK(fd.valid[t]);
    CHECK(fd.commands[t].accel == doctest::Approx(0.5 * (cmds[t - 1].accel + cmds[t].accel)).epsilon(1e-9));
    CHECK(fd.commands[t].turn_rate == doctest::Approx(0.5 * (cmds[t - 1].turn_rate + cmds[t].turn_rate)).epsilon(1e-9));
  }
  CHECK(fd.commands[0].accel == doctest::Approx(cmds[0].accel).epsilon(1e-9));
  tr.valid[10] = false;
  tr.valid[12] = false;
  fd = finite_difference_commands(tr, 0.1);
  CHECK_FALSE(fd.valid[11]);
  CHECK_FALSE(fd.valid[10]);
  CHECK(fd.valid[13]);
}

TEST_CASE("sample preparation") {
  auto cfg = fixture_config();
  auto s = testing::straight_scene(3);
  auto sample = prepare_sample(s, cfg);
  CHECK(sample.frames.size() == cfg.teacher_steps() + 1);
  CHECK(sample.agents.size() == 3);
  CHECK(sample.agents[0].agent_id == "ego");
  // Constant-speed ego along x: the action is the next position, zero commands.
  CHECK(sample.teacher_actions[0].x == doctest::Approx(0.8));
  CHECK(sample.teacher_actions[0].y == doctest::Approx(0.0));
  CHECK(sample.teacher_actions[0].accel == doctest::Approx(0.0));
  CHECK(sample.ego_endpoint.x == doctest::Approx(8.0));
  CHECK(sample.ego_plan.shape() == ad::Shape{1, cfg.model.plan_steps * 4});
  auto short_scene = testing::straight_scene(3, 45);
  CHECK_THROWS_AS(prepare_sample(short_scene, cfg), scene::ScenarioError);
}

TEST_CASE("dream rollout structure") {
  auto cfg = tiny_config();
  Model m(cfg.model, 3);
  auto sample = prepare_sample(testing::straight_scene(3), cfg);

  SUBCASE("H = 1 gives exactly one transition") {
    auto r = dream_rollout(m, sample, {.H = 1, .dt = 0.1});
    CHECK(r.length() == 1);
    CHECK_FALSE(r.aborted);
  }
  SUBCASE("length, masks and the encoded first latent") {
    for (std::size_t h : {2u, 5u}) {
      for (double dt : {0.1, 0.2, 0.5}) {
        auto r = dream_rollout(m, sample, {.H = h, .dt = dt});
        REQUIRE(r.length() == h);
        for (const auto& st : r.steps) {
          CHECK(st.latent.mask == r.mask);
          CHECK(st.substates.size() == r.stride);
          CHECK(st.states().size() == 3);
        }
        CHECK(r.final_latent.mask == r.mask);
        CHECK(r.fine_trajectory(0).size() == h * r.stride);
      }
    }
    auto r = dream_rollout(m, sample, {.H = 3, .dt = 0.1});
    auto z = m.encoder.encode(sample.frame0());
    CHECK(std::ranges::equal(r.steps[0].latent.embeddings.values(), z.embeddings.values()));
  }
  SUBCASE("deterministic") {
    auto a = dream_rollout(m, sample, {.H = 4, .dt = 0.1});
    auto b = dream_rollout(m, sample, {.H = 4, .dt = 0.1});
    for (std::size_t k = 0; k < 4; ++k) {
      CHECK(a.steps[k].states().values() == b.steps[k].states().values());
      CHECK(std::ranges::equal(a.steps[k].hidden.values(), b.steps[k].hidden.values()));
    }
  }
  SUBCASE("plan pose source runs the same loop") {
    auto r = dream_rollout(m, sample, {.H = 3, .dt = 0.2, .ego_pose = EgoPoseSource::Plan});
    CHECK(r.length() == 3);
  }
  SUBCASE("non-finite values abort with the step index") {
    for (auto& [n, p] : m.params)
      if (n.rfind("rssm.predictor", 0) == 0 || n.rfind("rssm.pred", 0) == 0)
        for (double& v : p.mutable_values()) v = 1e300;
    auto r = dream_rollout(m, sample, {.H = 4, .dt = 0.1});
    CHECK(r.aborted);
    CHECK(r.abort_step == 0);
    CHECK_FALSE(r.abort_reason.empty());
  }
}

TEST_CASE("dream loss examples") {
  {
    auto [r, t] = one_step(0.0, 0.0);
    CHECK(dream_loss(r, t).item() == 0.0);
  }
  {
    auto [r, t] = one_step(0.5, 0.0);
    CHECK(dream_loss(r, t).item() == 0.125);
  }
  {
    auto [r, t] = one_step(1.0, 0.0);
    CHECK(dream_loss(r, t).item() == 0.5);
  }
  {
    auto [r, t] = one_step(std::nextafter(1.0, 0.0), 0.0);
    auto [r2, t2] = one_step(std::nextafter(1.0, 2.0), 0.0);
    CHECK(std::abs(dream_loss(r, t).item() - dream_loss(r2, t2).item()) < 1e-12);
  }
  {
    auto [r, t] = one_step(0.0, 3.0);
    CHECK(dream_loss(r, t).item() == 2.5);
  }
  {
    auto [r, t] = one_step(0.5, 0.0);
    t[0].agent_id = "b";
    CHECK_THROWS_AS(dream_loss(r, t), std::invalid_argument);
  }
  {
    auto [r, t] = one_step(0.5, 0.0);
    t[0].valid[1] = false;
    CHECK(dream_loss(r, t).item() == 0.0);
  }
}

TEST_CASE("perfect rollouts score zero") {
  auto cfg = tiny_config();
  auto sample = prepare_sample(testing::straight_scene(3), cfg);
  // A rollout that reproduces the truth exactly.
  DreamRollout r;
  r.agent_ids = sample.frame0().agent_ids;
  r.stride = 1;
  for (std::size_t k = 0; k < 10; ++k) {
    std::vector<kin::KinematicState> states;
    for (const auto& a : sample.agents) states.push_back(a.states[k + 1]);
    DreamStep s;
    s.substates = {kin::AgentStates::from(states)};
    s.commands = ad::Tensor::zeros({3, 2});
    r.steps.push_back(s);
  }
  auto sm = metrics::score_rollout(r, sample, 10);
  CHECK(sm.agents == 3);
  CHECK(sm.min_ade == 0.0);
  CHECK(sm.min_fde == 0.0);
  CHECK(sm.actor_mr == 0.0);
  CHECK(dream_loss(r, sample.agents).item() == 0.0);
}

TEST_CASE("dream loss gradient matches finite differences on an H=2 micro-model") {
  auto cfg = tiny_config();
  auto s = data::generate_scenario(5, 0, data::Archetype::ProtectedLeft);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Model m(cfg.model, seed);
    randomize(m.params, seed + 100, 0.05, 0.4);
    auto sample = prepare_sample(s, cfg);
    auto f = [&] {
      auto r = dream_rollout(m, sample, {.H = 2, .dt = 0.1});
      REQUIRE_FALSE(r.aborted);
      return dream_loss(r, sample.agents);
    };
    std::vector<ad::Tensor> inputs;
    for (auto& [n, p] : m.params)
      if (n.rfind("kinematics", 0) == 0 || n.rfind("rssm", 0) == 0 || n.rfind("planner.generator", 0) == 0 ||
          n.rfind("planner.v", 0) == 0)
        inputs.push_back(p);
    auto r = testing::grad_check(f, inputs, 1e-6, 6);
    INFO("seed " << seed << " worst " << r.worst);
    CHECK(r.max_rel_error < 1e-3);
  }
}

TEST_CASE("gradient reaches every parameter on the rollout path") {
  auto cfg = tiny_config();
  Model m(cfg.model, 4);
  randomize(m.params, 4, 0.05, 0.4);
  auto sample = prepare_sample(data::generate_scenario(2, 0, data::Archetype::UnprotectedLeft), cfg);
  m.params.zero_grad();
  {
    ad::Tape tape;
    ad::Tape::Scope scope(tape);
    auto r = dream_rollout(m, sample, {.H = 2, .dt = 0.1});
    tape.backward(dream_loss(r, sample.agents));
  }
  for (const auto& [n, p] : m.params) {
    // Anchor logits and trajectory scores only feed argmax selections.
    if (n.rfind("planner.u", 0) == 0 || n.rfind("planner.score", 0) == 0) continue;
    double norm = 0;
    for (double g : p.grad()) norm += g * g;
    INFO(n);
    CHECK(norm > 0.0);
  }
}

TEST_CASE("open-loop loss decomposes into weighted parts") {
  auto cfg = tiny_config();
  Model m(cfg.model, 1);
  auto sample = prepare_sample(testing::straight_scene(3), cfg);
  Rng rng(3);
  for (int i = 0; i < 10; ++i) {
    cfg.weights = {rng.uniform(0, 2), rng.uniform(0, 2), rng.uniform(0, 2), rng.uniform(0, 2), 1.0};
    OpenLoopLosses p;
    ad::NoGradGuard ng;
    const double total = open_loop_loss(m, sample, cfg, p).item();
    const auto& w = cfg.weights;
    CHECK(std::abs(total - (w.rssm * p.rssm + w.target * p.target + w.traj * p.traj + w.score * p.score)) < 1e-12);
  }
}

TEST_CASE("zero weights leave the parameters untouched") {
  auto cfg = tiny_config();
  cfg.weights = {0, 0, 0, 0, 0};
  Model m(cfg.model, 1);
  auto samples = prepare_samples({testing::straight_scene(3), testing::straight_scene(4)}, cfg);
  std::vector<const Sample*> batch{&samples[0], &samples[1]};
  ad::Adam opt;
  // Give Adam momentum first so a zero-gradient step would still move.
  auto live = cfg;
  live.weights = {};
  open_loop_step(m, opt, batch, live);
  const auto before = snapshot(m.params);
  auto losses = open_loop_step(m, opt, batch, cfg);
  CHECK(losses.total == 0.0);
  closed_loop_step(m, opt, batch, cfg);
  CHECK(snapshot(m.params) == before);
}

TEST_CASE("teacher-forced loss on a constant scene approaches 1 - |z|") {
  auto cfg = tiny_config();
  cfg.T = 0.5;
  cfg.weights = {1, 0, 0, 0, 0};
  Model m(cfg.model, 2);
  auto still = testing::straight_scene(3, 100, 0.0);
  auto samples = prepare_samples({still}, cfg);
  std::vector<const Sample*> batch{&samples[0]};
  ad::Adam opt({.lr = 1e-2});
  for (int i = 0; i < 300; ++i) open_loop_step(m, opt, batch, cfg);
  OpenLoopLosses p;
  {
    ad::NoGradGuard ng;
    open_loop_loss(m, samples[0], cfg, p);
  }
  // The bound is 1 - |z_{k+1}| per step for the encoded next frame.
  double floor = 0;
  for (std::size_t k = 0; k < cfg.teacher_steps(); ++k) {
    const auto z = m.encoder.encode(samples[0].frames[k + 1]);
    double norm = 0;
    for (double v : z.embeddings.values()) norm += v * v;
    floor += (1.0 - std::sqrt(norm)) / static_cast<double>(cfg.teacher_steps());
  }
  const double per_step = p.rssm / static_cast<double>(cfg.teacher_steps());
  CHECK(per_step >= floor - 1e-9);
  CHECK(per_step - floor < 0.02 * std::max(1.0, std::abs(floor)));
}

TEST_CASE("open-loop training on an 8-scenario fixture decreases the loss") {
  auto cfg = fixture_config();
  cfg.batch_size = 8;
  Model m(cfg.model, 5);
  auto samples = prepare_samples(data::generate_synthetic(11, 8), cfg);
  std::vector<const Sample*> batch;
  for (const auto& s : samples) batch.push_back(&s);
  ad::Adam opt({.lr = 3e-4});
  std::vector<double> losses;
  for (int i = 0; i < 31; ++i) losses.push_back(open_loop_step(m, opt, batch, cfg).total);
  int decreases = 0;
  for (int i = 1; i < 31; ++i) decreases += losses[i] < losses[i - 1] ? 1 : 0;
  INFO(losses.front() << " -> " << losses.back());
  CHECK(decreases >= 25);
}

TEST_CASE("training is deterministic and logs every epoch") {
  auto cfg = tiny_config();
  cfg.epochs = 3;
  auto corpus = data::generate_synthetic(3, 4);
  auto run = [&] {
    Model m(cfg.model, cfg.seed);
    auto log = train(m, prepare_samples(corpus, cfg), cfg);
    return std::make_pair(log, snapshot(m.params));
  };
  auto [a, pa] = run();
  auto [b, pb] = run();
  REQUIRE(a.size() == 3);
  CHECK_FALSE(a[0].closed_loop);
  CHECK(a[1].closed_loop);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].open.total == b[i].open.total);
    CHECK(a[i].dream == b[i].dream);
  }
  CHECK(pa == pb);
}

TEST_CASE("ablation") {
  auto cfg = tiny_config();
  cfg.epochs = 1;
  cfg.warmup_epochs = 0;
  auto train_set = data::generate_synthetic(1, 2);
  auto eval_set = data::generate_synthetic(2, 2);
  SUBCASE("one cell gives one row") {
    cfg.ablation = {{0.2, 0.1, std::nullopt}};
    auto t = run_ablation(cfg, train_set, eval_set);
    REQUIRE(t.rows.size() == 1);
    CHECK(t.rows[0].ok);
    CHECK(t.rows[0].H == 2);
  }
  SUBCASE("seed changes the metrics") {
    cfg.ablation = {{0.2, 0.1, 1}, {0.2, 0.1, 2}};
    auto t = run_ablation(cfg, train_set, eval_set);
    REQUIRE(t.rows.size() == 2);
    CHECK(t.rows[0].report.min_ade != t.rows[1].report.min_ade);
  }
  SUBCASE("a failing cell is marked and the grid continues") {
    cfg.ablation = {{0.2, 0.3, std::nullopt}, {0.2, 0.1, std::nullopt}};
    auto t = run_ablation(cfg, train_set, eval_set);
    REQUIRE(t.rows.size() == 2);
    CHECK_FALSE(t.rows[0].ok);
    CHECK(t.rows[1].ok);
    CHECK(t.csv().find("nan,nan,nan,failed") != std::string::npos);
  }
  SUBCASE("empty grid") { CHECK_THROWS_AS(run_ablation(cfg, train_set, eval_set), ConfigError); }
}
