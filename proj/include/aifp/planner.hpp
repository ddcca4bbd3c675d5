#pragma once

#include <vector>

#include <Eigen/Core>

#include "aifp/belief.hpp"
#include "aifp/dynamics.hpp"
#include "aifp/rng.hpp"

namespace aifp {

struct Plan {
  std::vector<Action> actions;
};

// Gaussian preference over (cursor position, hit flag, misclick flag). The
// position mean is expressed relative to the believed target centre, so the
// default preference sits on the target once it has been revealed.
struct PreferenceDistribution {
  double position_offset = 0.0;
  double hit_mean = 1.0;
  double misclick_mean = 0.0;
  Eigen::Vector3d stds{0.01, 0.01, 0.001};

  void validate() const;
  Eigen::Vector3d mean(double target) const;
  double log_density(const Eigen::Vector3d& o, double target) const;
};

struct PlannerConfig {
  int horizon = 12;
  int plans = 3000;
  ActionBounds bounds;
  double dt = 0.02;
  int pv_state_samples = 50;
  int pv_obs_samples = 3;
  bool info_gain = false;
  int ig_state_samples = 8;
  int ig_obs_samples = 4;
  VIHyper vi;
  UnscentedConfig ukf;
  bool verbose = false;  // keep the full per-plan EFE table

  void validate() const;
};

std::vector<Plan> sample_plans(const PlannerConfig& cfg, Rng& rng);

// Beliefs after each action of the plan; no observation updates.
std::vector<StateBelief> rollout(const StateBelief& start, const Plan& plan,
                                 const ParamBelief& params, double dt,
                                 const UnscentedConfig& ukf = {});

// Standard-normal draws shared by every plan at one horizon step.
struct PragmaticDraws {
  Eigen::Matrix<double, 4, Eigen::Dynamic> state;
  Eigen::Matrix<double, 5, Eigen::Dynamic> param;
  Eigen::Matrix<double, 2, Eigen::Dynamic> noise;
  Eigen::MatrixXd obs;  // n_obs x n_states

  static PragmaticDraws draw(int n_states, int n_obs, Rng& rng);
};

// Monte-Carlo estimate of E[ln P^c(o~)] under the belief, parameter and noise beliefs.
double pragmatic_value(const StateBelief& belief, const ParamBelief& params,
                       const LogNormalBelief& noise, const PreferenceDistribution& pref,
                       const PragmaticDraws& draws);
double pragmatic_value(const StateBelief& belief, const ParamBelief& params,
                       const LogNormalBelief& noise, const PreferenceDistribution& pref,
                       const PlannerConfig& cfg, Rng& rng);

// Mean KL(posterior || belief) over hypothetical observations, each posterior
// obtained with vi_update.
double information_gain(const StateBelief& belief, const ParamBelief& params,
                        const LogNormalBelief& noise, const PlannerConfig& cfg, Rng& rng);

struct Selection {
  Action action = Action::Zero();
  int plan_index = 0;
  double efe = 0.0;
  Plan plan;
  std::vector<StateBelief> rollout;
  std::vector<double> plan_efe;  // only filled when cfg.verbose
};

// Expected free energy of each plan, averaged over the horizon, using shared
// draws per horizon step. ig_seed feeds the per-plan information-gain streams.
std::vector<double> evaluate_plans(const std::vector<Plan>& plans, const StateBelief& start,
                                   const ParamBelief& params, const LogNormalBelief& noise,
                                   const PreferenceDistribution& pref, const PlannerConfig& cfg,
                                   const std::vector<PragmaticDraws>& draws,
                                   std::uint64_t ig_seed = 0);

// Index of the smallest value; ties go to the lowest index.
int argmin_plan(const std::vector<double>& efe);

Selection select_action(const StateBelief& belief, const ParamBelief& params,
                        const LogNormalBelief& noise, const PreferenceDistribution& pref,
                        const PlannerConfig& cfg, Rng& rng);

}  // namespace aifp
