#include "aifp/belief.hpp"

#include <limits>

namespace aifp {

namespace {

constexpr double kHalfLogTwoPi = 0.91893853320467274178;  // 0.5 * ln(2 pi)

// Adaptive step without momentum (Adam with beta1 = 0). The draws are fixed
// within an update, so gradients are deterministic and momentum only
// overshoots.
struct AdaptiveStep {
  static constexpr double beta2 = 0.999;
  static constexpr double epsilon = 1e-8;

  Eigen::Matrix<double, 14, 1> v = Eigen::Matrix<double, 14, 1>::Zero();
  int t = 0;

  Eigen::Matrix<double, 14, 1> step(const Eigen::Matrix<double, 14, 1>& grad, double lr) {
    ++t;
    v = beta2 * v + (1.0 - beta2) * grad.cwiseProduct(grad);
    const double c2 = 1.0 - std::pow(beta2, t);
    return -lr * (grad.array() / ((v / c2).array().sqrt() + epsilon)).matrix();
  }
};

// Packs (mean, lower triangle of L) into one parameter vector.
Eigen::Matrix<double, 14, 1> pack(const Eigen::Vector4d& mean, const Eigen::Matrix4d& lower) {
  Eigen::Matrix<double, 14, 1> p;
  p.head<4>() = mean;
  int k = 4;
  for (int j = 0; j < 4; ++j)
    for (int i = j; i < 4; ++i) p(k++) = lower(i, j);
  return p;
}

void unpack(const Eigen::Matrix<double, 14, 1>& p, Eigen::Vector4d& mean, Eigen::Matrix4d& lower) {
  mean = p.head<4>();
  lower.setZero();
  int k = 4;
  for (int j = 0; j < 4; ++j)
    for (int i = j; i < 4; ++i) lower(i, j) = p(k++);
}

// Shifts and whitens the draws to zero sample mean and identity sample
// covariance. The Gaussian channels are quadratic in the state, so their
// expected log-likelihood is then exact for any (m, L).
void moment_match(Eigen::Matrix<double, 4, Eigen::Dynamic>& eps) {
  const auto n = eps.cols();
  if (n <= eps.rows()) return;
  eps.colwise() -= eps.rowwise().mean();
  const Eigen::Matrix4d cov = eps * eps.transpose() / static_cast<double>(n);
  const Eigen::LLT<Eigen::Matrix4d> llt(cov);
  if (llt.info() != Eigen::Success) return;
  eps = llt.matrixL().solve(eps);
}

}  // namespace

LogNormalBelief LogNormalBelief::from_noise(const NoiseSpec& noise, double log_variance) {
  noise.validate();
  LogNormalBelief b;
  b.log_mean << std::log(noise.position_std), std::log(noise.displacement_std);
  b.log_cov = Eigen::Matrix2d::Identity() * log_variance;
  return b;
}

NoiseSpec LogNormalBelief::median() const {
  return NoiseSpec{std::exp(log_mean(0)), std::exp(log_mean(1))};
}

void VIHyper::validate() const {
  if (steps < 1 || samples < 1 || !(learning_rate > 0.0) || !(reference_std > 0.0))
    throw std::invalid_argument("VI hyperparameters must be positive");
}

void UnscentedConfig::validate() const {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw std::invalid_argument("unscented alpha must be in (0, 1]");
  if (!std::isfinite(beta) || !std::isfinite(kappa))
    throw std::invalid_argument("unscented beta/kappa must be finite");
}

UnscentedWeights UnscentedWeights::make(int n, const UnscentedConfig& cfg) {
  const double lambda = cfg.alpha * cfg.alpha * (n + cfg.kappa) - n;
  const double scale = n + lambda;
  if (!(scale > 0.0)) throw std::invalid_argument("unscented spread n + lambda must be > 0");
  UnscentedWeights w;
  w.spread = std::sqrt(scale);
  w.mean_center = lambda / scale;
  w.cov_center = w.mean_center + (1.0 - cfg.alpha * cfg.alpha + cfg.beta);
  w.outer = 1.0 / (2.0 * scale);
  return w;
}

UnscentedPredictor::UnscentedPredictor(const ParamBelief& params, double dt,
                                       const UnscentedConfig& cfg)
    : params_(params),
      param_root_(covariance_sqrt<5>(params.cov)),
      weights_(UnscentedWeights::make(9, cfg)),
      dt_(dt) {
  cfg.validate();
  if (!(dt > 0.0)) throw std::invalid_argument("dt must be > 0");
}

StateBelief UnscentedPredictor::predict(const StateBelief& belief, const Action& a) const {
  return predict_with_root(belief, covariance_sqrt<4>(belief.cov), a);
}

StateBelief UnscentedPredictor::predict_with_root(const StateBelief& belief,
                                                  const Eigen::Matrix4d& state_root,
                                                  const Action& a) const {
  const double c = weights_.spread;
  const double d = params_.mean(param_index::damping);
  const double k = params_.mean(param_index::stiffness);
  const State center = transition(d, k, belief.mean, a, dt_);

  // Deviations of the 18 outer sigma points from the transformed centre.
  Eigen::Matrix<double, 4, 18> dev;
  for (int i = 0; i < 4; ++i) {
    dev.col(i) = transition(d, k, belief.mean + c * state_root.col(i), a, dt_) - center;
    dev.col(9 + i) = transition(d, k, belief.mean - c * state_root.col(i), a, dt_) - center;
  }
  for (int i = 0; i < 5; ++i) {
    const ParamVector plus = params_.mean + c * param_root_.col(i);
    const ParamVector minus = params_.mean - c * param_root_.col(i);
    dev.col(4 + i) = transition(plus(0), plus(1), belief.mean, a, dt_) - center;
    dev.col(13 + i) = transition(minus(0), minus(1), belief.mean, a, dt_) - center;
  }

  const Eigen::Vector4d shift = weights_.outer * dev.rowwise().sum();
  StateBelief out;
  out.mean = center + shift;
  dev.colwise() -= shift;
  out.cov = weights_.outer * dev * dev.transpose() + weights_.cov_center * shift * shift.transpose();
  out.cov = 0.5 * (out.cov + out.cov.transpose()).eval();
  return out;
}

StateBelief ukf_predict(const StateBelief& state, const ParamBelief& params, const Action& a,
                        double dt, const UnscentedConfig& cfg) {
  return UnscentedPredictor(params, dt, cfg).predict(state, a);
}

double log_likelihood(const Observation& o, const State& s, const NoiseSpec& sigma,
                      const SystemParams& params) {
  if (!(sigma.position_std > 0.0 && sigma.displacement_std > 0.0))
    throw std::invalid_argument("log_likelihood requires positive noise stds");
  const Observation g = observe(params, s);
  const double r1 = (o(obs_index::position) - g(obs_index::position)) / sigma.position_std;
  const double r2 = (o(obs_index::displacement) - g(obs_index::displacement)) / sigma.displacement_std;
  double ll = -0.5 * r1 * r1 - std::log(sigma.position_std) - kHalfLogTwoPi;
  ll += -0.5 * r2 * r2 - std::log(sigma.displacement_std) - kHalfLogTwoPi;
  for (int c = obs_index::click; c <= obs_index::misclick; ++c) {
    const double r = (o(c) - g(c)) / kDiscreteChannelStd;
    ll -= 0.5 * r * r;
  }
  return ll;
}

int VIResult::increases() const {
  int n = 0;
  for (std::size_t i = 1; i < free_energy.size(); ++i)
    if (free_energy[i] - free_energy[i - 1] > kTraceTolerance * (1.0 + std::abs(free_energy[i - 1]))) ++n;
  return n;
}

VIResult vi_update(const StateBelief& prior, const Observation& o, const LogNormalBelief& noise,
                   const ParamBelief& params, const VIHyper& hyper, Rng& rng) {
  hyper.validate();
  if (!prior.mean.allFinite() || !prior.cov.allFinite())
    throw NumericalError("vi_update: non-finite prior");
  if (!o.allFinite()) throw std::invalid_argument("vi_update: non-finite observation");

  VIResult result;
  result.belief = prior;
  // A point-mass prior is its own posterior.
  if (prior.cov.isZero(0.0)) {
    result.skipped = true;
    return result;
  }

  Eigen::LLT<Eigen::Matrix4d> prior_llt(prior.cov);
  Eigen::Matrix4d prior_cov = prior.cov;
  if (prior_llt.info() != Eigen::Success) {
    prior_cov.diagonal().array() += kJitter;
    prior_llt.compute(prior_cov);
    if (prior_llt.info() != Eigen::Success)
      throw NumericalError("vi_update: prior covariance is not positive definite");
  }
  const Eigen::Matrix4d prior_root = prior_llt.matrixL();
  const double prior_logdet = 2.0 * prior_root.diagonal().array().log().sum();

  const int n_samples = hyper.samples;
  Eigen::Matrix<double, 4, Eigen::Dynamic> eps(4, n_samples);
  Eigen::Matrix<double, 2, Eigen::Dynamic> noise_eps(2, n_samples);
  Eigen::Matrix<double, 5, Eigen::Dynamic> param_eps(5, n_samples);
  fill_standard_normal(eps, rng);
  fill_standard_normal(noise_eps, rng);
  fill_standard_normal(param_eps, rng);
  moment_match(eps);

  const Eigen::Matrix2d noise_root = covariance_sqrt<2>(noise.log_cov);
  const Eigen::Matrix<double, 5, 5> param_root = covariance_sqrt<5>(params.cov);
  Eigen::ArrayXd inv_var1(n_samples), inv_var2(n_samples);
  double log_norm = 0.0;  // mean over samples of the continuous normalizers
  std::vector<SystemParams> sample_params(n_samples);
  for (int j = 0; j < n_samples; ++j) {
    const Eigen::Vector2d log_sigma = noise.log_mean + noise_root * noise_eps.col(j);
    inv_var1(j) = std::exp(-2.0 * log_sigma(0));
    inv_var2(j) = std::exp(-2.0 * log_sigma(1));
    log_norm += -log_sigma(0) - log_sigma(1) - 2.0 * kHalfLogTwoPi;
    sample_params[j] = SystemParams::from_vector(params.mean + param_root * param_eps.col(j));
  }
  log_norm /= n_samples;

  // Steps are taken in coordinates rescaled by each dimension's prior std
  // over the reference std: mean = prior + S m, L = S M. Dimensions with zero
  // prior variance stay fixed.
  const Eigen::Vector4d scale = prior_cov.diagonal().cwiseSqrt() / hyper.reference_std;
  const Eigen::Vector4d inv_scale =
      scale.unaryExpr([](double v) { return v > 0.0 ? 1.0 / v : 0.0; });

  Eigen::Vector4d mean = prior.mean;
  Eigen::Matrix4d lower = prior_root;
  Eigen::Matrix<double, 14, 1> theta =
      pack(Eigen::Vector4d::Zero(), inv_scale.asDiagonal() * prior_root);
  AdaptiveStep optimizer;
  bool failed = false;
  double best_free_energy = std::numeric_limits<double>::infinity();
  Eigen::Vector4d best_mean = mean;
  Eigen::Matrix4d best_lower = lower;

  for (int it = 0; it <= hyper.steps; ++it) {
    Eigen::Vector4d offset;
    Eigen::Matrix4d scaled_lower;
    unpack(theta, offset, scaled_lower);
    mean = prior.mean + scale.cwiseProduct(offset);
    lower = scale.asDiagonal() * scaled_lower;
    const Eigen::Vector4d diag = lower.diagonal();
    if (!(diag.array().abs() > 0.0).all() || !theta.allFinite()) {
      failed = true;
      break;
    }
    const Eigen::Matrix4d lower_inv =
        lower.triangularView<Eigen::Lower>().solve(Eigen::Matrix4d::Identity());
    const Eigen::Matrix4d post_prec = lower_inv.transpose() * lower_inv;
    const Eigen::Vector4d delta = mean - prior.mean;
    const double logdet = 2.0 * diag.array().abs().log().sum();
    const double kl = 0.5 * ((post_prec * prior_cov).trace() + delta.dot(post_prec * delta) - 4.0 +
                             logdet - prior_logdet);

    // Expected negative log-likelihood and its reparameterized gradient.
    double nll = -log_norm;
    Eigen::Vector4d grad_mean = Eigen::Vector4d::Zero();
    Eigen::Matrix4d grad_lower = Eigen::Matrix4d::Zero();
    for (int j = 0; j < n_samples; ++j) {
      const State s = mean + lower * eps.col(j);
      const double r1 = o(obs_index::position) - s(state_index::position);
      const double r2 = o(obs_index::displacement) - s(state_index::displacement);
      nll += 0.5 * (r1 * r1 * inv_var1(j) + r2 * r2 * inv_var2(j)) / n_samples;
      const SystemParams& p = sample_params[j];
      const bool click = click_flag(s(state_index::prev_displacement), s(state_index::displacement),
                                    p.click_threshold);
      const double hit = (click && inside_target(s(state_index::position), p.target, p.width)) ? 1.0 : 0.0;
      const double c = click ? 1.0 : 0.0;
      const double d3 = (o(obs_index::click) - c) / kDiscreteChannelStd;
      const double d4 = (o(obs_index::hit) - hit) / kDiscreteChannelStd;
      const double d5 = (o(obs_index::misclick) - (hit - c)) / kDiscreteChannelStd;
      nll += 0.5 * (d3 * d3 + d4 * d4 + d5 * d5) / n_samples;

      Eigen::Vector4d g = Eigen::Vector4d::Zero();  // d(-ln P)/ds
      g(state_index::position) = -r1 * inv_var1(j);
      g(state_index::displacement) = -r2 * inv_var2(j);
      grad_mean += g;
      grad_lower.noalias() += g * eps.col(j).transpose();
    }
    grad_mean /= n_samples;
    grad_lower /= n_samples;

    const double free_energy = kl + nll;
    if (!std::isfinite(free_energy)) {
      failed = true;
      break;
    }
    result.free_energy.push_back(free_energy);
    if (free_energy < best_free_energy) {
      best_free_energy = free_energy;
      best_mean = mean;
      best_lower = lower;
    }
    if (it == hyper.steps) break;

    grad_mean += post_prec * delta;
    grad_lower += lower_inv.transpose() -
                  post_prec * (prior_cov + delta * delta.transpose()) * lower_inv.transpose();
    const Eigen::Matrix4d grad_scaled = scale.asDiagonal() * grad_lower;
    const Eigen::Matrix4d grad_scaled_tri = grad_scaled.triangularView<Eigen::Lower>();
    theta += optimizer.step(pack(scale.cwiseProduct(grad_mean), grad_scaled_tri), hyper.learning_rate / std::sqrt(it + 1.0));
  }

  if (failed || result.increases() * 2 > hyper.steps) {
    result.diverged = true;
    result.belief = prior;
    return result;
  }
  // The draws are fixed, so the trace is exact for this objective and the
  // lowest iterate is returned.
  result.belief.mean = best_mean;
  result.belief.cov = best_lower * best_lower.transpose();
  return result;
}

}  // namespace aifp
