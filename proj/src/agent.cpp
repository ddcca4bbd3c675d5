#include "aifp/agent.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>

namespace aifp {

namespace {

bool same_belief(const StateBelief& a, const StateBelief& b) {
  return a.mean == b.mean && a.cov == b.cov;
}

}  // namespace

void AgentConfig::validate() const {
  if (delay < 0) throw std::invalid_argument("delay must be >= 0");
  if (!(dt > 0.0)) throw std::invalid_argument("dt must be > 0");
  if (!(timeout > 0.0)) throw std::invalid_argument("timeout must be > 0");
  system.validate();
  noise.validate();
  preference.validate();
  effective_planner().validate();
  if (!(priors.state_stds.array() >= 0.0).all() || !(priors.param_stds.array() >= 0.0).all())
    throw std::invalid_argument("prior stds must be >= 0");
  if (!(priors.revealed_std >= 0.0)) throw std::invalid_argument("revealed std must be >= 0");
}

int AgentConfig::max_steps() const { return static_cast<int>(std::lround(timeout / dt)); }

StateBelief AgentConfig::state_prior() const {
  return StateBelief::from_stds(priors.state_mean, priors.state_stds);
}

ParamBelief AgentConfig::param_prior() const {
  ParamVector mean;
  mean << system.damping, system.stiffness, priors.target_mean, priors.width_mean,
      system.click_threshold;
  return ParamBelief::from_stds(mean, priors.param_stds);
}

LogNormalBelief AgentConfig::noise_belief() const {
  return LogNormalBelief::from_noise(noise, priors.noise_log_variance);
}

PlannerConfig AgentConfig::effective_planner() const {
  PlannerConfig p = planner;
  p.dt = dt;
  p.ukf = ukf;
  p.vi = vi;
  return p;
}

ActionBuffer::ActionBuffer(int delay) : delay_(delay) {
  if (delay < 0) throw std::invalid_argument("delay must be >= 0");
  actions_.assign(static_cast<std::size_t>(delay), Action::Zero());
}

Action ActionBuffer::push(const Action& a) {
  actions_.push_back(a);
  const Action oldest = actions_.front();
  actions_.pop_front();
  return oldest;
}

StateBelief compensate_delay(const StateBelief& delayed, const ActionBuffer& buffer,
                             const ParamBelief& params, double dt, const UnscentedConfig& ukf) {
  if (buffer.actions().empty()) return delayed;
  const UnscentedPredictor predictor(params, dt, ukf);
  StateBelief b = delayed;
  for (const Action& a : buffer.actions()) b = predictor.predict(b, a);
  return b;
}

ParamBelief reveal_target(const ParamBelief& params, double target, double width,
                          double revealed_std) {
  ParamBelief out = params;
  for (const int i : {param_index::target, param_index::width}) {
    out.cov.row(i).setZero();
    out.cov.col(i).setZero();
    out.cov(i, i) = revealed_std * revealed_std;
  }
  out.mean(param_index::target) = target;
  out.mean(param_index::width) = width;
  return out;
}

World::World(const SystemParams& params, const NoiseSpec& noise, const ActionBounds& bounds,
             int delay, double dt, std::uint64_t noise_seed, const State& initial)
    : params_(params),
      noise_(noise),
      bounds_(bounds),
      delay_(delay),
      dt_(dt),
      rng_(noise_seed),
      state_(initial) {
  params.validate();
  noise.validate();
  bounds.validate();
  if (delay < 0) throw std::invalid_argument("delay must be >= 0");
}

World::Output World::apply(const Action& a) {
  state_ = step(params_, state_, bounds_.clamp(a), dt_);
  Output out;
  out.state = state_;
  out.undelayed = observe(params_, state_);
  pending_.push_back(sample_observation(params_, state_, noise_, rng_));
  if (pending_.size() > static_cast<std::size_t>(delay_)) {
    out.delayed = pending_.front();
    pending_.pop_front();
  }
  return out;
}

std::string to_string(ClickEvent e) {
  switch (e) {
    case ClickEvent::none: return "none";
    case ClickEvent::click: return "click";
    case ClickEvent::hit: return "hit";
    case ClickEvent::misclick: return "misclick";
  }
  return "none";
}

std::string to_string(Outcome o) { return o == Outcome::hit ? "hit" : "timeout"; }

ClickEvent parse_click_event(const std::string& s) {
  if (s == "none") return ClickEvent::none;
  if (s == "click") return ClickEvent::click;
  if (s == "hit") return ClickEvent::hit;
  if (s == "misclick") return ClickEvent::misclick;
  throw std::invalid_argument("unknown click event '" + s + "'");
}

Outcome parse_outcome(const std::string& s) {
  if (s == "hit") return Outcome::hit;
  if (s == "timeout") return Outcome::timeout;
  throw std::invalid_argument("unknown outcome '" + s + "'");
}

bool StepRecord::operator==(const StepRecord& o) const {
  return step == o.step && time == o.time && state == o.state && action == o.action &&
         observation == o.observation && same_belief(belief, o.belief) &&
         same_belief(predicted, o.predicted) && event == o.event && vi_diverged == o.vi_diverged;
}

bool TrialRecord::operator==(const TrialRecord& o) const {
  return trial_id == o.trial_id && target_id == o.target_id && task.canvas_px == o.task.canvas_px &&
         task.start_px == o.task.start_px && task.target_px == o.task.target_px &&
         task.width_px == o.task.width_px && task.scale == o.task.scale && seed == o.seed &&
         delay == o.delay && dt == o.dt && initial_state == o.initial_state && steps == o.steps &&
         clicks == o.clicks && outcome == o.outcome && misclicks == o.misclicks &&
         vi_failures == o.vi_failures;
}

std::optional<ClickRecord> TrialRecord::hit_click() const {
  for (const auto& c : clicks)
    if (c.hit) return c;
  return std::nullopt;
}

Agent::Agent(const AgentConfig& cfg, const TaskGeometry& task)
    : cfg_(cfg),
      planner_(cfg.effective_planner()),
      task_(task),
      belief_(cfg.state_prior()),
      params_(cfg.param_prior()),
      noise_(cfg.noise_belief()),
      buffer_(cfg.delay) {
  cfg_.validate();
}

void Agent::reveal_target() {
  if (revealed_) throw std::logic_error("target already revealed");
  params_ = aifp::reveal_target(params_, task_.target, task_.width, cfg_.priors.revealed_std);
  revealed_ = true;
}

StepRecord Agent::step(World& world, Rng& rng) {
  // Target knowledge arrives once the initial delay has elapsed.
  if (!revealed_ && t_ > cfg_.delay) reveal_target();

  StepRecord row;
  row.step = t_;
  row.time = t_ * cfg_.dt;

  // 1. Planning from the delay-compensated belief.
  row.predicted = compensate_delay(belief_, buffer_, params_, cfg_.dt, cfg_.ukf);
  const Selection sel = select_action(row.predicted, params_, noise_, cfg_.preference, planner_, rng);
  row.action = sel.action;

  // 2. Step the system.
  const World::Output out = world.apply(row.action);
  row.state = out.state;
  if (out.undelayed(obs_index::click) > 0.5)
    row.event = out.undelayed(obs_index::hit) > 0.5 ? ClickEvent::hit : ClickEvent::misclick;

  // 3. Advance the delayed belief with a(t - delay), then fold in o(t - delay + 1).
  const Action oldest = buffer_.push(row.action);
  belief_ = ukf_predict(belief_, params_, oldest, cfg_.dt, cfg_.ukf);
  if (t_ > cfg_.delay && out.delayed) {
    row.observation = out.delayed;
    try {
      const VIResult vi = vi_update(belief_, *out.delayed, noise_, params_, cfg_.vi, rng);
      row.vi_diverged = vi.diverged;
      if (vi.diverged) ++vi_failures_;
      belief_ = vi.belief;
    } catch (const NumericalError&) {
      row.vi_diverged = true;
      ++vi_failures_;
    }
  }
  row.belief = belief_;
  ++t_;
  return row;
}

TrialRecord run_trial(const TaskSpec& task, const AgentConfig& cfg, std::uint64_t seed,
                      int trial_id, int target_id) {
  const auto started = std::chrono::steady_clock::now();
  cfg.validate();
  const TaskGeometry geometry = scale_task(task);
  SystemParams plant = cfg.system;
  plant.target = geometry.target;
  plant.width = geometry.width;

  TrialRecord rec;
  rec.trial_id = trial_id;
  rec.target_id = target_id;
  rec.task = task;
  rec.seed = seed;
  rec.delay = cfg.delay;
  rec.dt = cfg.dt;

  // Separate streams keep the world noise independent of planner settings.
  World world(plant, cfg.noise, cfg.planner.bounds, cfg.delay, cfg.dt, derive_seed(seed, 0));
  Rng agent_rng(derive_seed(seed, 1));
  rec.initial_state = world.state();
  Agent agent(cfg, geometry);

  const int max_steps = cfg.max_steps();
  for (int n = 0; n < max_steps; ++n) {
    StepRecord row = agent.step(world, agent_rng);
    if (row.event != ClickEvent::none) {
      const bool hit = row.event == ClickEvent::hit;
      rec.clicks.push_back(ClickRecord{row.step, row.state(state_index::position), hit});
      if (!hit) ++rec.misclicks;
    }
    const bool done = row.event == ClickEvent::hit;
    rec.steps.push_back(std::move(row));
    if (done) {
      rec.outcome = Outcome::hit;
      break;
    }
  }
  rec.vi_failures = agent.vi_failures();
  rec.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return rec;
}

}  // namespace aifp
