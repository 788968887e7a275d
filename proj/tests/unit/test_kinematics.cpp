#include <doctest.h>

#include <cmath>
#include <numbers>

#include "support/gradcheck.hpp"
#include "support/oracles.hpp"
#include "vrd/autodiff/ops.hpp"
#include "vrd/autodiff/optim.hpp"
#include "vrd/kinematics/head.hpp"

using namespace vrd;
using kin::KinematicCommand;
using kin::KinematicState;

TEST_CASE("integrate examples") {
  SUBCASE("straight line") {
    auto s = kin::integrate({2.0, 3.0, 0.0, 10.0}, {0.0, 0.0}, 0.1);
    CHECK(s.x == doctest::Approx(3.0).epsilon(1e-15));
    CHECK(s.y == 3.0);
    CHECK(s.heading == 0.0);
    CHECK(s.speed == 10.0);
  }
  SUBCASE("rotation in place") {
    auto s = kin::integrate({1.0, -1.0, 0.2, 0.0}, {0.0, 0.5}, 0.1);
    CHECK(s.x == 1.0);
    CHECK(s.y == -1.0);
    CHECK(s.heading == doctest::Approx(0.25).epsilon(1e-15));
  }
  SUBCASE("speed clamps at zero unless reversing is allowed") {
    CHECK(kin::integrate({0, 0, 0, 0.5}, {-10.0, 0.0}, 0.1).speed == 0.0);
    CHECK(kin::integrate({0, 0, 0, 0.5}, {-10.0, 0.0}, 0.1, true).speed == doctest::Approx(-0.5));
  }
  SUBCASE("bad step") {
    CHECK_THROWS_AS(kin::integrate(KinematicState{}, KinematicCommand{}, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(kin::integrate(KinematicState{}, KinematicCommand{}, -0.1), std::invalid_argument);
  }
}

TEST_CASE("ten steps agree with an independent integrator to 1e-12") {
  KinematicState s{0, 0, 0, 5.0};
  testing::OracleState o{{0.0, 0.0}, 0.0, 5.0};
  for (int k = 0; k < 10; ++k) {
    s = kin::integrate(s, {1.0, 0.1}, 0.1);
    o = testing::oracle_step(o, 1.0, 0.1, 0.1);
  }
  CHECK(std::abs(s.x - o.p.real()) < 1e-12);
  CHECK(std::abs(s.y - o.p.imag()) < 1e-12);
  CHECK(std::abs(s.heading - o.psi) < 1e-12);
  CHECK(std::abs(s.speed - o.v) < 1e-12);
}

TEST_CASE("fixed point and heading wrap over 10^4 random states") {
  Rng rng(7);
  for (int i = 0; i < 10000; ++i) {
    KinematicState s{rng.uniform(-500, 500), rng.uniform(-500, 500), kin::wrap_angle(rng.uniform(-4, 4)),
                     rng.uniform(0, 30)};
    KinematicState still = s;
    still.speed = 0.0;
    REQUIRE(kin::integrate(still, {0.0, 0.0}, rng.uniform(0.01, 0.5)) == still);

    const double dt = rng.uniform(0.01, 0.5);
    const KinematicCommand c{rng.uniform(-10, 10), rng.uniform(-1.5, 1.5)};
    const auto n = kin::integrate(s, c, dt);
    REQUIRE(n.heading > -std::numbers::pi);
    REQUIRE(n.heading <= std::numbers::pi);
    REQUIRE(n.speed >= 0.0);
  }
  CHECK(kin::wrap_angle(-std::numbers::pi) == std::numbers::pi);
  CHECK(kin::wrap_angle(3 * std::numbers::pi) == doctest::Approx(std::numbers::pi));
}

TEST_CASE("tensor integrate matches the scalar path and carries correct gradients") {
  Rng rng(11);
  for (int seed = 0; seed < 10; ++seed) {
    std::vector<KinematicState> states;
    for (int i = 0; i < 3; ++i)
      states.push_back({rng.uniform(-5, 5), rng.uniform(-5, 5), rng.uniform(-3, 3), rng.uniform(2, 10)});
    ad::Tensor cmd = testing::random_param(rng, {3, 2}, 0.1, 1.0);
    auto start = kin::AgentStates::from(states);

    auto batched = kin::integrate(start, cmd, 0.1);
    for (int i = 0; i < 3; ++i) {
      auto ref = kin::integrate(states[i], {cmd.at(i, 0), cmd.at(i, 1)}, 0.1);
      CHECK(batched.at(i) == ref);
    }

    auto loss = [&] {
      auto s = start;
      for (int k = 0; k < 5; ++k) s = kin::integrate(s, cmd, 0.1);
      return ad::add(ad::sum(ad::mul(s.x, s.x)), ad::sum(ad::mul(s.y, s.x)));
    };
    auto r = testing::grad_check(loss, {cmd});
    INFO(r.worst);
    CHECK(r.max_rel_error < 1e-4);
  }
}

TEST_CASE("k integrates equal k separate calls") {
  KinematicState s{1, 2, 0.3, 4};
  KinematicState t = s;
  for (int k = 0; k < 7; ++k) s = kin::integrate(s, {0.5, -0.2}, 0.2);
  auto batched = kin::AgentStates::from({t});
  for (int k = 0; k < 7; ++k) batched = kin::integrate(batched, ad::Tensor::row({0.5, -0.2}), 0.2);
  CHECK(batched.at(0) == s);
}

namespace {

scene::LatentScene latent(std::size_t slots, std::size_t dim, std::vector<bool> mask, Rng& rng) {
  std::vector<double> v(slots * dim, 0.0);
  for (std::size_t i = 0; i < slots; ++i)
    if (mask[i])
      for (std::size_t j = 0; j < dim; ++j) v[i * dim + j] = rng.normal(0.0, 1.0);
  scene::LatentScene z;
  z.embeddings = ad::Tensor::from({slots, dim}, v);
  z.mask = mask;
  z.agent_ids.resize(slots);
  for (std::size_t i = 0; i < slots; ++i)
    if (mask[i]) z.agent_ids[i] = "a" + std::to_string(i);
  return z;
}

}  // namespace

TEST_CASE("kinematic head") {
  Rng rng(3);
  ad::ParameterSet params;
  kin::KinematicsConfig cfg;
  cfg.latent_dim = 8;
  cfg.hidden = 16;
  kin::KinematicHead head(params, cfg, 5);
  auto z = latent(6, 8, {true, false, true, true, false, false}, rng);

  SUBCASE("one command per valid slot, within bounds") {
    auto cmds = head.decode_commands(z);
    REQUIRE(cmds.size() == 3);
    for (auto c : cmds) {
      CHECK(std::abs(c.accel) <= 10.0);
      CHECK(std::abs(c.turn_rate) <= 1.5);
    }
  }
  SUBCASE("zero weights give zero commands") {
    for (auto& [name, p] : params) std::fill(p.mutable_values().begin(), p.mutable_values().end(), 0.0);
    for (auto c : head.decode_commands(z)) CHECK(c == KinematicCommand{0.0, 0.0});

    SUBCASE("and a still scene stays put") {
      std::vector<KinematicState> st{{1, 2, 0.5, 0}, {3, 4, -1, 0}, {0, 0, 3, 0}};
      auto out = kin::reconstruct_scene(kin::AgentStates::from(st), z, head, 0.1, 3);
      REQUIRE(out.size() == 3);
      CHECK(out.back().values() == st);
    }
  }
  SUBCASE("reconstruct equals integrate on the decoded command") {
    std::vector<KinematicState> st{{1, 2, 0.5, 3}, {3, 4, -1, 2}, {0, 0, 3, 1}};
    auto cmds = head.decode_commands(z);
    auto out = kin::reconstruct_scene(kin::AgentStates::from(st), z, head, 0.1);
    for (int i = 0; i < 3; ++i) CHECK(out[0].at(i) == kin::integrate(st[i], cmds[i], 0.1));
  }
  SUBCASE("state count must match valid slots") {
    std::vector<KinematicState> st{{}, {}};
    CHECK_THROWS_AS(kin::reconstruct_scene(kin::AgentStates::from(st), z, head, 0.1), std::invalid_argument);
  }
}

TEST_CASE("head overfits known command labels on one scene") {
  Rng rng(9);
  ad::ParameterSet params;
  kin::KinematicsConfig cfg;
  cfg.latent_dim = 8;
  cfg.hidden = 32;
  kin::KinematicHead head(params, cfg, 2);
  auto z = latent(4, 8, {true, true, true, false}, rng);
  ad::Tensor labels = ad::Tensor::from({3, 2}, {2.0, 0.3, -4.0, -0.8, 0.5, 1.0});
  ad::Adam adam({.lr = 3e-3});
  for (int it = 0; it < 1500; ++it) {
    params.zero_grad();
    ad::Tape tape;
    ad::Tape::Scope scope(tape);
    auto d = ad::sub(head.decode(z), labels);
    tape.backward(ad::sum(ad::mul(d, d)));
    adam.step(params);
  }
  auto cmds = head.decode_commands(z);
  for (int i = 0; i < 3; ++i) {
    CHECK(std::abs(cmds[i].accel - labels.at(i, 0)) < 0.05);
    CHECK(std::abs(cmds[i].turn_rate - labels.at(i, 1)) < 0.05);
  }
  CHECK(cmds[0] != cmds[1]);
}
