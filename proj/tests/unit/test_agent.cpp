#include <doctest.h>

#include <cmath>

#include "aifp/agent.hpp"

using namespace aifp;

namespace {

AgentConfig fast_config(int plans = 100) {
  AgentConfig cfg;
  cfg.planner.plans = plans;
  return cfg;
}

// Zero noise and no uncertainty anywhere: the agent's beliefs are exact.
AgentConfig exact_config() {
  AgentConfig cfg = fast_config(50);
  cfg.noise = NoiseSpec{0.0, 0.0};
  cfg.priors.state_stds.setZero();
  cfg.priors.param_stds.setZero();
  cfg.priors.revealed_std = 0.0;
  return cfg;
}

TaskSpec task_at(double target_px, double width_px) {
  TaskSpec t;
  t.target_px = target_px;
  t.width_px = width_px;
  return t;
}

}  // namespace

TEST_CASE("ActionBuffer: starts with zero actions and keeps the last tau") {
  ActionBuffer buf(3);
  REQUIRE(buf.actions().size() == 3);
  for (const Action& a : buf.actions()) CHECK(a.isZero(0.0));
  CHECK(buf.push(Action(1, 0)).isZero(0.0));
  CHECK(buf.push(Action(2, 0)).isZero(0.0));
  CHECK(buf.push(Action(3, 0)).isZero(0.0));
  CHECK(buf.push(Action(4, 0)) == Action(1, 0));
  CHECK(buf.actions().size() == 3);
  CHECK(buf.actions().back() == Action(4, 0));

  ActionBuffer none(0);
  CHECK(none.push(Action(5, 1)) == Action(5, 1));
  CHECK(none.actions().empty());
  CHECK_THROWS_AS(ActionBuffer(-1), std::invalid_argument);
}

TEST_CASE("compensate_delay: zero delay is the identity") {
  const AgentConfig cfg;
  const StateBelief b = cfg.state_prior();
  const StateBelief out = compensate_delay(b, ActionBuffer(0), cfg.param_prior(), 0.02);
  CHECK(out.mean == b.mean);
  CHECK(out.cov == b.cov);
}

TEST_CASE("compensate_delay: prediction widens the position belief") {
  const AgentConfig cfg;
  ActionBuffer buf(5);
  for (int i = 0; i < 5; ++i) buf.push(Action(20.0, 0.1));
  const ParamBelief params = reveal_target(cfg.param_prior(), 0.85, 0.06);
  const StateBelief b = StateBelief::from_stds(Eigen::Vector4d(0, 0.5, 0, 0), cfg.priors.state_stds);
  const StateBelief out = compensate_delay(b, buf, params, 0.02);
  CHECK(out.cov(0, 0) >= b.cov(0, 0));
  CHECK(out.mean(0) > b.mean(0));
}

TEST_CASE("priors and reveal") {
  const AgentConfig cfg;
  const ParamBelief prior = cfg.param_prior();
  const ParamVector prior_mean = (ParamVector() << 24, 10, 0.0, 0.03, 0.05).finished();
  const ParamVector prior_stds = (ParamVector() << 0.2, 0.2, 0.9, 0.02, 1e-6).finished();
  CHECK((prior.mean - prior_mean).cwiseAbs().maxCoeff() < 1e-15);
  CHECK((prior.cov.diagonal().cwiseSqrt() - prior_stds).cwiseAbs().maxCoeff() < 1e-15);

  const StateBelief sp = cfg.state_prior();
  CHECK(sp.mean.isZero(0.0));
  CHECK((sp.cov.diagonal().cwiseSqrt() - Eigen::Vector4d(0.001, 1e-4, 5e-5, 5e-5)).cwiseAbs().maxCoeff() < 1e-18);

  const ParamBelief revealed = reveal_target(prior, 0.85, 0.06);
  const ParamVector revealed_stds = (ParamVector() << 0.2, 0.2, 1e-6, 1e-6, 1e-6).finished();
  CHECK((revealed.cov.diagonal().cwiseSqrt() - revealed_stds).cwiseAbs().maxCoeff() < 1e-15);
  CHECK(revealed.mean(param_index::target) == 0.85);
  CHECK(revealed.mean(param_index::width) == 0.06);
  CHECK(revealed.mean(param_index::damping) == 24.0);

  // Revealing the prior means only narrows the variances.
  const ParamBelief same = reveal_target(prior, 0.0, 0.03);
  CHECK(same.mean == prior.mean);
  CHECK(same.cov(param_index::damping, param_index::damping) == prior.cov(0, 0));
  CHECK(same.cov(param_index::target, param_index::target) < prior.cov(2, 2));
}

TEST_CASE("Agent: target revealed once, after the delay") {
  const AgentConfig cfg = fast_config(20);
  const TaskGeometry g = scale_task(task_at(1750, 60));
  Agent agent(cfg, g);
  SystemParams plant = cfg.system;
  plant.target = g.target;
  plant.width = g.width;
  World world(plant, cfg.noise, cfg.planner.bounds, cfg.delay, cfg.dt, 1);
  Rng rng(2);
  for (int t = 1; t <= cfg.delay; ++t) {
    agent.step(world, rng);
    CHECK_FALSE(agent.revealed());
  }
  agent.step(world, rng);
  CHECK(agent.revealed());
  CHECK(agent.param_belief().mean(param_index::target) == g.target);
  CHECK_THROWS_AS(agent.reveal_target(), std::logic_error);
}

TEST_CASE("Agent: no observation update before the delay has passed") {
  const AgentConfig cfg = fast_config(20);
  const TaskGeometry g = scale_task(task_at(1750, 60));
  Agent agent(cfg, g);
  SystemParams plant = cfg.system;
  plant.target = g.target;
  plant.width = g.width;
  World world(plant, cfg.noise, cfg.planner.bounds, cfg.delay, cfg.dt, 3);
  Rng rng(4);
  const ParamBelief prior_params = cfg.param_prior();
  StateBelief expected = cfg.state_prior();
  for (int t = 1; t <= cfg.delay + 3; ++t) {
    const StepRecord row = agent.step(world, rng);
    CHECK(row.step == t);
    if (t <= cfg.delay) {
      CHECK_FALSE(row.observation.has_value());
      // Pure UKF prediction with the zero actions from the buffer.
      expected = ukf_predict(expected, prior_params, Action::Zero(), cfg.dt);
      CHECK((row.belief.mean - expected.mean).cwiseAbs().maxCoeff() < 1e-15);
    } else {
      CHECK(row.observation.has_value());
    }
  }
}

TEST_CASE("Agent: exact beliefs lag the world by the delay and compensation recovers it") {
  const AgentConfig cfg = exact_config();
  const TaskGeometry g = scale_task(task_at(1750, 60));
  Agent agent(cfg, g);
  SystemParams plant = cfg.system;
  plant.target = g.target;
  plant.width = g.width;
  World world(plant, cfg.noise, cfg.planner.bounds, cfg.delay, cfg.dt, 5);
  Rng rng(6);
  std::vector<State> states{world.state()};
  for (int t = 1; t <= 30; ++t) {
    const StepRecord row = agent.step(world, rng);
    // Compensated belief = state before this step's action.
    CHECK((row.predicted.mean - states.back()).cwiseAbs().maxCoeff() < 1e-10);
    states.push_back(row.state);
    const int lagged = std::max(0, t - cfg.delay);
    CHECK((row.belief.mean - states[lagged]).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("run_trial: same seed gives an identical record") {
  const AgentConfig cfg = fast_config(50);
  const TrialRecord a = run_trial(task_at(1125, 100), cfg, 77);
  const TrialRecord b = run_trial(task_at(1125, 100), cfg, 77);
  CHECK(a == b);
  CHECK(a.steps.size() <= 100);
}

TEST_CASE("run_trial: unreachable preference times out at exactly 100 steps") {
  AgentConfig cfg = fast_config(50);
  // Ten canvas widths to the right, target on the left.
  cfg.preference.position_offset = 10 * 1.8;
  const TrialRecord r = run_trial(task_at(50, 60), cfg, 1);
  CHECK(r.outcome == Outcome::timeout);
  CHECK(r.steps.size() == 100);
  CHECK_FALSE(r.hit_click().has_value());
  CHECK(cfg.max_steps() == 100);
}

TEST_CASE("run_trial: default agent hits the 1750/60 target and the record is consistent") {
  AgentConfig cfg = fast_config(500);
  const TaskSpec task = task_at(1750, 60);
  const TrialRecord r = run_trial(task, cfg, 3);
  CHECK(r.outcome == Outcome::hit);
  REQUIRE_FALSE(r.steps.empty());
  CHECK(r.steps.back().event == ClickEvent::hit);

  int hits = 0;
  bool pressed = false;
  const double alpha = cfg.system.click_threshold;
  const TaskGeometry g = scale_task(task);
  for (const StepRecord& row : r.steps) {
    const State& s = row.state;
    // A click needs the button released in between.
    if (row.event != ClickEvent::none) {
      CHECK_FALSE(pressed);
      CHECK(s(2) < alpha);
      CHECK(s(3) > alpha);
    }
    if (s(3) > alpha) pressed = true;
    if (s(3) < alpha) pressed = false;
    if (row.event == ClickEvent::hit) {
      ++hits;
      CHECK(std::abs(s(0) - g.target) <= g.width / 2);
    }
    CHECK(cfg.planner.bounds.contains(row.action));
  }
  CHECK(hits == 1);
  CHECK(r.misclicks == static_cast<int>(r.clicks.size()) - 1);
}

TEST_CASE("World: observations arrive after the delay") {
  const SystemParams p;
  World world(p, NoiseSpec{0.0, 0.0}, ActionBounds{}, 2, 0.02, 1);
  CHECK_FALSE(world.apply(Action(10, 0)).delayed.has_value());
  CHECK_FALSE(world.apply(Action(10, 0)).delayed.has_value());
  const auto third = world.apply(Action(10, 0));
  REQUIRE(third.delayed.has_value());
  const State first = step(p, State::Zero(), Action(10, 0), 0.02);
  CHECK((*third.delayed)(0) == first(0));
  // Out-of-range actions are clamped.
  World clamped(p, NoiseSpec{0.0, 0.0}, ActionBounds{}, 0, 0.02, 1);
  CHECK(clamped.apply(Action(1000, 0)).state == step(p, State::Zero(), Action(50, 0), 0.02));
}
