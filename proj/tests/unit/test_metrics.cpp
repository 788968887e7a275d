#include <doctest.h>

#include <cmath>

#include "support/oracles.hpp"
#include "vrd/common/rng.hpp"
#include "vrd/metrics/evaluate.hpp"

using namespace vrd;
using namespace vrd::metrics;

namespace {

AgentForecast random_forecast(Rng& rng, std::size_t k, std::size_t len) {
  AgentForecast f;
  scene::Point2 p{rng.uniform(-20, 20), rng.uniform(-20, 20)};
  for (std::size_t t = 0; t < len; ++t) {
    p.x += rng.uniform(0, 2);
    p.y += rng.uniform(-1, 1);
    f.truth.push_back(p);
  }
  for (std::size_t m = 0; m < k; ++m) {
    Trajectory tr;
    for (auto q : f.truth) tr.push_back({q.x + rng.normal(0, 2), q.y + rng.normal(0, 2)});
    f.modes.push_back(tr);
  }
  return f;
}

std::vector<testing::OraclePoint> to_oracle(const Trajectory& t) {
  std::vector<testing::OraclePoint> out;
  for (auto p : t) out.push_back({p.x, p.y});
  return out;
}

std::pair<double, double> oracle(const AgentForecast& f) {
  std::vector<std::vector<testing::OraclePoint>> preds;
  for (const auto& m : f.modes) preds.push_back(to_oracle(m));
  return testing::oracle_min_errors(preds, to_oracle(f.truth));
}

AgentForecast transformed(const AgentForecast& f, const scene::Pose2& pose) {
  AgentForecast out;
  for (auto p : f.truth) out.truth.push_back(pose.to_parent(p));
  for (const auto& m : f.modes) {
    Trajectory t;
    for (auto p : m) t.push_back(pose.to_parent(p));
    out.modes.push_back(t);
  }
  return out;
}

}  // namespace

TEST_CASE("metric examples") {
  AgentForecast same{{{{0, 0}, {1, 1}}}, {{0, 0}, {1, 1}}};
  std::vector<AgentForecast> one{same};
  CHECK(min_ade(one) == 0.0);
  CHECK(min_fde(one) == 0.0);
  CHECK(actor_mr(one) == 0.0);

  AgentForecast half{{{{0, 0}, {1, 0}}}, {{0, 0}, {0, 0}}};
  CHECK(agent_min_ade(half) == doctest::Approx(0.5).epsilon(1e-15));

  AgentForecast five{{{{3, 4}}}, {{0, 0}}};
  CHECK(agent_min_fde(five) == 5.0);

  AgentForecast three{{{{3, 0}}}, {{0, 0}}};
  std::vector<AgentForecast> pair{three, AgentForecast{{{{0, 0}}}, {{0, 0}}}};
  CHECK(actor_mr(pair) == 0.5);

  AgentForecast boundary{{{{2, 0}}}, {{0, 0}}};
  std::vector<AgentForecast> edge{boundary};
  CHECK(agent_min_fde(boundary) == 2.0);
  CHECK(actor_mr(edge) == 0.0);
}

TEST_CASE("metric errors") {
  std::vector<AgentForecast> none;
  CHECK_THROWS_AS(min_ade(none), std::invalid_argument);
  AgentForecast mismatch{{{{0, 0}}}, {{0, 0}, {1, 1}}};
  CHECK_THROWS_AS(agent_min_ade(mismatch), std::invalid_argument);
  AgentForecast no_modes{{}, {{0, 0}}};
  CHECK_THROWS_AS(agent_min_fde(no_modes), std::invalid_argument);
}

TEST_CASE("metrics agree with the brute-force oracle") {
  Rng rng(42);
  for (int fixture = 0; fixture < 100; ++fixture) {
    const std::size_t k = static_cast<std::size_t>(rng.integer(1, 6));
    const std::size_t agents = static_cast<std::size_t>(rng.integer(1, 6));
    const std::size_t len = static_cast<std::size_t>(rng.integer(1, 40));
    std::vector<AgentForecast> fs;
    double ade = 0, fde = 0, mr = 0;
    for (std::size_t a = 0; a < agents; ++a) {
      fs.push_back(random_forecast(rng, k, len));
      auto [o_ade, o_fde] = oracle(fs.back());
      ade += o_ade;
      fde += o_fde;
      mr += o_fde > 2.0 ? 1.0 : 0.0;
    }
    const double n = static_cast<double>(agents);
    CHECK(std::abs(min_ade(fs) - ade / n) < 1e-9);
    CHECK(std::abs(min_fde(fs) - fde / n) < 1e-9);
    CHECK(std::abs(actor_mr(fs) - mr / n) < 1e-9);

    const scene::Pose2 pose{rng.uniform(-1e3, 1e3), rng.uniform(-1e3, 1e3), rng.uniform(-M_PI, M_PI)};
    std::vector<AgentForecast> moved;
    for (const auto& f : fs) moved.push_back(transformed(f, pose));
    CHECK(std::abs(min_ade(moved) - min_ade(fs)) < 1e-9);
    CHECK(std::abs(min_fde(moved) - min_fde(fs)) < 1e-9);
    CHECK(actor_mr(moved) == actor_mr(fs));
  }
}

TEST_CASE("more modes never hurt") {
  Rng rng(7);
  for (int i = 0; i < 50; ++i) {
    auto six = random_forecast(rng, 6, 20);
    AgentForecast one{{six.modes[0]}, six.truth};
    CHECK(agent_min_ade(six) <= agent_min_ade(one));
    CHECK(agent_min_fde(six) <= agent_min_fde(one));
    std::vector<AgentForecast> a{six}, b{one};
    CHECK(actor_mr(a) <= actor_mr(b));
  }
}

TEST_CASE("report formatting is stable") {
  MetricsReport r;
  r.min_ade = 0.25;
  r.min_fde = 1.0 / 3.0;
  r.agents = 3;
  r.scenarios = 1;
  CHECK(r.summary_csv() == "K,minADE,minFDE,actorMR,agents,scenarios,aborted\n1,0.250000000,0.333333333,0.000000000,3,1,0\n");
  CHECK(r.to_json()["minADE"] == 0.25);
}
