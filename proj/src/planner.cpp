#include "aifp/planner.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace aifp {

namespace {

constexpr double kHalfLogTwoPi = 0.91893853320467274178;

struct PragmaticContext {
  const ParamBelief& params;
  Eigen::Matrix<double, 5, 5> param_root;
  const LogNormalBelief& noise;
  Eigen::Matrix2d noise_root;
  const PreferenceDistribution& pref;
  double log_norm;

  PragmaticContext(const ParamBelief& p, const LogNormalBelief& n, const PreferenceDistribution& pr)
      : params(p),
        param_root(covariance_sqrt<5>(p.cov)),
        noise(n),
        noise_root(covariance_sqrt<2>(n.log_cov)),
        pref(pr),
        log_norm(-pr.stds.array().log().sum() - 3.0 * kHalfLogTwoPi) {}

  double value(const StateBelief& belief, const Eigen::Matrix4d& root,
               const PragmaticDraws& draws) const {
    const auto n_states = draws.state.cols();
    const auto n_obs = draws.obs.rows();
    const Eigen::Vector3d inv_std = pref.stds.cwiseInverse();
    double total = 0.0;
    for (Eigen::Index j = 0; j < n_states; ++j) {
      const Eigen::Vector4d s = belief.mean + root * draws.state.col(j);
      const ParamVector theta = params.mean + param_root * draws.param.col(j);
      const double sigma1 = std::exp(noise.log_mean(0) + noise_root.row(0).dot(draws.noise.col(j)));
      const double target = theta(param_index::target);
      const bool click = click_flag(s(state_index::prev_displacement), s(state_index::displacement),
                                    theta(param_index::click_threshold));
      const double hit =
          (click && inside_target(s(state_index::position), target, theta(param_index::width))) ? 1.0 : 0.0;
      const double misclick = hit - (click ? 1.0 : 0.0);
      const double z_hit = (hit - pref.hit_mean) * inv_std(1);
      const double z_mis = (misclick - pref.misclick_mean) * inv_std(2);
      const double discrete = -0.5 * (z_hit * z_hit + z_mis * z_mis);
      const double centre = target + pref.position_offset;
      for (Eigen::Index k = 0; k < n_obs; ++k) {
        const double z_pos = (s(state_index::position) + sigma1 * draws.obs(k, j) - centre) * inv_std(0);
        total += discrete - 0.5 * z_pos * z_pos;
      }
    }
    return total / static_cast<double>(n_states * n_obs) + log_norm;
  }
};

}  // namespace

void PreferenceDistribution::validate() const {
  if (!(stds.array() > 0.0).all() || !stds.allFinite())
    throw std::invalid_argument("preference stds must be > 0");
  if (!std::isfinite(position_offset) || !std::isfinite(hit_mean) || !std::isfinite(misclick_mean))
    throw std::invalid_argument("preference mean must be finite");
}

Eigen::Vector3d PreferenceDistribution::mean(double target) const {
  return Eigen::Vector3d{target + position_offset, hit_mean, misclick_mean};
}

double PreferenceDistribution::log_density(const Eigen::Vector3d& o, double target) const {
  const Eigen::Vector3d z = (o - mean(target)).cwiseQuotient(stds);
  return -0.5 * z.squaredNorm() - stds.array().log().sum() - 3.0 * kHalfLogTwoPi;
}

void PlannerConfig::validate() const {
  if (horizon < 1 || plans < 1) throw std::invalid_argument("horizon and plan count must be >= 1");
  if (pv_state_samples < 1 || pv_obs_samples < 1 || ig_state_samples < 1 || ig_obs_samples < 1)
    throw std::invalid_argument("sample counts must be >= 1");
  if (!(dt > 0.0)) throw std::invalid_argument("dt must be > 0");
  bounds.validate();
  vi.validate();
  ukf.validate();
}

std::vector<Plan> sample_plans(const PlannerConfig& cfg, Rng& rng) {
  cfg.bounds.validate();
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const Action span = cfg.bounds.upper - cfg.bounds.lower;
  std::vector<Plan> plans(static_cast<std::size_t>(cfg.plans));
  for (auto& plan : plans) {
    plan.actions.resize(static_cast<std::size_t>(cfg.horizon));
    for (auto& a : plan.actions) {
      const double u1 = unit(rng);
      const double u2 = unit(rng);
      a << cfg.bounds.lower(0) + u1 * span(0), cfg.bounds.lower(1) + u2 * span(1);
    }
  }
  return plans;
}

std::vector<StateBelief> rollout(const StateBelief& start, const Plan& plan,
                                 const ParamBelief& params, double dt, const UnscentedConfig& ukf) {
  const UnscentedPredictor predictor(params, dt, ukf);
  std::vector<StateBelief> out;
  out.reserve(plan.actions.size());
  StateBelief b = start;
  for (const Action& a : plan.actions) {
    b = predictor.predict(b, a);
    out.push_back(b);
  }
  return out;
}

PragmaticDraws PragmaticDraws::draw(int n_states, int n_obs, Rng& rng) {
  PragmaticDraws d;
  d.state.resize(4, n_states);
  d.param.resize(5, n_states);
  d.noise.resize(2, n_states);
  d.obs.resize(n_obs, n_states);
  fill_standard_normal(d.state, rng);
  fill_standard_normal(d.param, rng);
  fill_standard_normal(d.noise, rng);
  fill_standard_normal(d.obs, rng);
  return d;
}

double pragmatic_value(const StateBelief& belief, const ParamBelief& params,
                       const LogNormalBelief& noise, const PreferenceDistribution& pref,
                       const PragmaticDraws& draws) {
  pref.validate();
  const PragmaticContext ctx(params, noise, pref);
  return ctx.value(belief, covariance_sqrt<4>(belief.cov), draws);
}

double pragmatic_value(const StateBelief& belief, const ParamBelief& params,
                       const LogNormalBelief& noise, const PreferenceDistribution& pref,
                       const PlannerConfig& cfg, Rng& rng) {
  const auto draws = PragmaticDraws::draw(cfg.pv_state_samples, cfg.pv_obs_samples, rng);
  return pragmatic_value(belief, params, noise, pref, draws);
}

double information_gain(const StateBelief& belief, const ParamBelief& params,
                        const LogNormalBelief& noise, const PlannerConfig& cfg, Rng& rng) {
  if (belief.cov.isZero(0.0)) return 0.0;
  // Rollout beliefs are singular (the previous displacement copies the
  // current one); the reference gets the jitter vi_update would add.
  StateBelief reference = belief;
  if (Eigen::LLT<Eigen::Matrix4d>(reference.cov).info() != Eigen::Success)
    reference.cov.diagonal().array() += kJitter;
  const Eigen::Matrix4d root = covariance_sqrt<4>(belief.cov);
  const Eigen::Matrix<double, 5, 5> param_root = covariance_sqrt<5>(params.cov);
  const Eigen::Matrix2d noise_root = covariance_sqrt<2>(noise.log_cov);
  std::normal_distribution<double> normal(0.0, 1.0);
  double total = 0.0;
  int count = 0;
  for (int j = 0; j < cfg.ig_state_samples; ++j) {
    Eigen::Vector4d e;
    Eigen::Matrix<double, 5, 1> z;
    Eigen::Vector2d nu;
    fill_standard_normal(e, rng);
    fill_standard_normal(z, rng);
    fill_standard_normal(nu, rng);
    const State s = belief.mean + root * e;
    const SystemParams theta = SystemParams::from_vector(params.mean + param_root * z);
    const Eigen::Vector2d sigma = (noise.log_mean + noise_root * nu).array().exp();
    const Observation clean = observe(theta, s);
    for (int k = 0; k < cfg.ig_obs_samples; ++k) {
      Observation o = clean;
      o(obs_index::position) += sigma(0) * normal(rng);
      o(obs_index::displacement) += sigma(1) * normal(rng);
      const VIResult post = vi_update(reference, o, noise, params, cfg.vi, rng);
      double kl = 0.0;
      if (!post.skipped && !post.diverged) kl = kl_gaussian(post.belief, reference);
      total += kl;
      ++count;
    }
  }
  return total / count;
}

std::vector<double> evaluate_plans(const std::vector<Plan>& plans, const StateBelief& start,
                                   const ParamBelief& params, const LogNormalBelief& noise,
                                   const PreferenceDistribution& pref, const PlannerConfig& cfg,
                                   const std::vector<PragmaticDraws>& draws,
                                   std::uint64_t ig_seed) {
  pref.validate();
  if (draws.size() < static_cast<std::size_t>(cfg.horizon))
    throw std::invalid_argument("evaluate_plans: one draw set per horizon step required");
  const UnscentedPredictor predictor(params, cfg.dt, cfg.ukf);
  const PragmaticContext ctx(params, noise, pref);
  const Eigen::Matrix4d start_root = covariance_sqrt<4>(start.cov);

  std::vector<double> efe(plans.size(), std::numeric_limits<double>::infinity());
  for (std::size_t j = 0; j < plans.size(); ++j) {
    const Plan& plan = plans[j];
    if (plan.actions.size() != static_cast<std::size_t>(cfg.horizon))
      throw std::invalid_argument("evaluate_plans: plan length differs from horizon");
    Rng ig_rng(derive_seed(ig_seed, j));
    StateBelief b = start;
    Eigen::Matrix4d root = start_root;
    double total = 0.0;
    for (int i = 0; i < cfg.horizon; ++i) {
      b = predictor.predict_with_root(b, root, plan.actions[static_cast<std::size_t>(i)]);
      root = covariance_sqrt<4>(b.cov);
      double g = -ctx.value(b, root, draws[static_cast<std::size_t>(i)]);
      if (cfg.info_gain) g -= information_gain(b, params, noise, cfg, ig_rng);
      total += g;
    }
    const double value = total / cfg.horizon;
    if (std::isfinite(value)) efe[j] = value;
  }
  return efe;
}

int argmin_plan(const std::vector<double>& efe) {
  if (efe.empty()) throw std::invalid_argument("argmin_plan: no plans");
  int best = 0;
  for (std::size_t j = 1; j < efe.size(); ++j)
    if (efe[j] < efe[static_cast<std::size_t>(best)]) best = static_cast<int>(j);
  return best;
}

Selection select_action(const StateBelief& belief, const ParamBelief& params,
                        const LogNormalBelief& noise, const PreferenceDistribution& pref,
                        const PlannerConfig& cfg, Rng& rng) {
  cfg.validate();
  std::vector<Plan> plans = sample_plans(cfg, rng);
  std::vector<PragmaticDraws> draws;
  draws.reserve(static_cast<std::size_t>(cfg.horizon));
  for (int i = 0; i < cfg.horizon; ++i)
    draws.push_back(PragmaticDraws::draw(cfg.pv_state_samples, cfg.pv_obs_samples, rng));
  const std::uint64_t ig_seed = cfg.info_gain ? rng() : 0;

  std::vector<double> efe = evaluate_plans(plans, belief, params, noise, pref, cfg, draws, ig_seed);
  Selection sel;
  sel.plan_index = argmin_plan(efe);
  sel.efe = efe[static_cast<std::size_t>(sel.plan_index)];
  sel.plan = std::move(plans[static_cast<std::size_t>(sel.plan_index)]);
  sel.action = cfg.bounds.clamp(sel.plan.actions.front());
  sel.rollout = rollout(belief, sel.plan, params, cfg.dt, cfg.ukf);
  if (cfg.verbose) sel.plan_efe = std::move(efe);
  return sel;
}

}  // namespace aifp
