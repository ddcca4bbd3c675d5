#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <string>
#include <vector>

#include "aifp/belief.hpp"
#include "aifp/dynamics.hpp"
#include "aifp/planner.hpp"
#include "aifp/rng.hpp"

namespace aifp {

// Initial beliefs of a well-trained agent before the target is known.
struct BeliefPriors {
  Eigen::Vector4d state_mean = Eigen::Vector4d::Zero();
  Eigen::Vector4d state_stds{0.001, 0.0001, 0.00005, 0.00005};
  // Stds for [damping, stiffness, target, width, click threshold].
  ParamVector param_stds = (ParamVector() << 0.2, 0.2, 0.9, 0.02, 1e-6).finished();
  double target_mean = 0.0;
  double width_mean = 0.03;
  double revealed_std = 1e-6;
  double noise_log_variance = 1e-8;
};

struct AgentConfig {
  int delay = 5;
  double dt = 0.02;
  double timeout = 2.0;
  SystemParams system;  // true plant; target and width come from the task
  NoiseSpec noise;
  BeliefPriors priors;
  PlannerConfig planner;
  PreferenceDistribution preference;
  VIHyper vi;
  UnscentedConfig ukf;

  void validate() const;
  int max_steps() const;
  StateBelief state_prior() const;
  ParamBelief param_prior() const;
  LogNormalBelief noise_belief() const;
  PlannerConfig effective_planner() const;  // planner with dt/ukf/vi synced
};

// The last `delay` executed actions, oldest first. Starts as zeros.
class ActionBuffer {
 public:
  explicit ActionBuffer(int delay);

  // Appends the newest action and returns the oldest one it displaces. With a
  // zero delay the pushed action is returned.
  Action push(const Action& a);

  const std::deque<Action>& actions() const { return actions_; }
  int delay() const { return delay_; }

 private:
  int delay_;
  std::deque<Action> actions_;
};

// Rolls Q^s(t - delay) forward through the buffered actions to Q~^s(t).
StateBelief compensate_delay(const StateBelief& delayed, const ActionBuffer& buffer,
                             const ParamBelief& params, double dt, const UnscentedConfig& ukf = {});

// Sets target centre and width with std `revealed_std`, dropping their
// correlations; damping, stiffness and threshold are untouched.
ParamBelief reveal_target(const ParamBelief& params, double target, double width,
                          double revealed_std = 1e-6);

// Generative process with an observation delay line.
class World {
 public:
  struct Output {
    State state;
    Observation undelayed;
    std::optional<Observation> delayed;
  };

  World(const SystemParams& params, const NoiseSpec& noise, const ActionBounds& bounds, int delay,
        double dt, std::uint64_t noise_seed, const State& initial = State::Zero());

  // Clamps the action to the bounds, steps the plant and queues a noisy observation.
  Output apply(const Action& a);

  const State& state() const { return state_; }
  const SystemParams& params() const { return params_; }

 private:
  SystemParams params_;
  NoiseSpec noise_;
  ActionBounds bounds_;
  int delay_;
  double dt_;
  Rng rng_;
  State state_;
  std::deque<Observation> pending_;
};

enum class ClickEvent { none, click, hit, misclick };
enum class Outcome { hit, timeout };

std::string to_string(ClickEvent e);
std::string to_string(Outcome o);
ClickEvent parse_click_event(const std::string& s);
Outcome parse_outcome(const std::string& s);

struct StepRecord {
  int step = 0;        // 1-based loop index t
  double time = 0.0;   // t * dt, end of the step
  State state = State::Zero();  // true state after the action
  Action action = Action::Zero();
  std::optional<Observation> observation;  // delayed observation consumed this step
  StateBelief belief;     // stored belief after the update, lags `state` by delay steps
  StateBelief predicted;  // compensated belief the action was planned from
  ClickEvent event = ClickEvent::none;
  bool vi_diverged = false;

  bool operator==(const StepRecord&) const;
};

struct ClickRecord {
  int step = 0;
  double position = 0.0;  // model units
  bool hit = false;

  bool operator==(const ClickRecord&) const = default;
};

struct TrialRecord {
  int trial_id = 0;
  int target_id = 0;
  TaskSpec task;
  std::uint64_t seed = 0;
  int delay = 0;
  double dt = 0.02;
  State initial_state = State::Zero();
  std::vector<StepRecord> steps;
  std::vector<ClickRecord> clicks;
  Outcome outcome = Outcome::timeout;
  int misclicks = 0;
  int vi_failures = 0;
  double wall_time_s = 0.0;  // diagnostic only, excluded from equality and logs

  bool operator==(const TrialRecord& other) const;
  std::optional<ClickRecord> hit_click() const;
};

// Interaction loop state for one trial.
class Agent {
 public:
  Agent(const AgentConfig& cfg, const TaskGeometry& task);

  // One iteration: plan from the compensated belief, step the world, update
  // the delayed belief. Returns the log row for this step.
  StepRecord step(World& world, Rng& rng);

  void reveal_target();
  bool revealed() const { return revealed_; }
  int time_index() const { return t_; }
  const StateBelief& belief() const { return belief_; }
  const ParamBelief& param_belief() const { return params_; }
  const ActionBuffer& buffer() const { return buffer_; }
  int vi_failures() const { return vi_failures_; }

 private:
  AgentConfig cfg_;
  PlannerConfig planner_;
  TaskGeometry task_;
  StateBelief belief_;
  ParamBelief params_;
  LogNormalBelief noise_;
  ActionBuffer buffer_;
  int t_ = 1;
  bool revealed_ = false;
  int vi_failures_ = 0;
};

TrialRecord run_trial(const TaskSpec& task, const AgentConfig& cfg, std::uint64_t seed,
                      int trial_id = 0, int target_id = 0);

}  // namespace aifp
