#include <doctest.h>

#include <cmath>

#include "aifp/belief.hpp"
#include "oracles.hpp"

using namespace aifp;

namespace {

ParamBelief known_params(double d = 24.0, double k = 10.0) {
  ParamVector mean;
  mean << d, k, 0.0, 0.06, 0.05;
  return ParamBelief{mean, ParamVector::Zero().asDiagonal()};
}

ParamBelief revealed_params() {
  ParamVector mean, stds;
  mean << 24.0, 10.0, 0.0, 0.06, 0.05;
  stds << 0.2, 0.2, 1e-6, 1e-6, 1e-6;
  return ParamBelief::from_stds(mean, stds);
}

// Position-only observation problem used by the conjugate checks.
struct OneDimCase {
  double prior_std = 0.02;
  double sigma = 0.05;
  double o1 = 0.02;

  StateBelief prior() const {
    return StateBelief::from_stds(Eigen::Vector4d::Zero(), Eigen::Vector4d(prior_std, 1e-4, 5e-5, 5e-5));
  }
  Observation observation() const {
    Observation o = Observation::Zero();
    o(0) = o1;
    return o;
  }
};

}  // namespace

TEST_CASE("sigma_points: 1D unit spread") {
  UnscentedConfig cfg;
  cfg.alpha = 1.0;
  cfg.kappa = 0.0;
  Gaussian<1> g{Eigen::Matrix<double, 1, 1>(0.0), Eigen::Matrix<double, 1, 1>(1.0)};
  const auto sp = sigma_points(g, cfg);
  CHECK(sp.points(0, 0) == doctest::Approx(0.0));
  CHECK(sp.points(0, 1) == doctest::Approx(1.0));
  CHECK(sp.points(0, 2) == doctest::Approx(-1.0));
  CHECK(sp.mean_weights.sum() == doctest::Approx(1.0));
}

TEST_CASE("sigma_points: zero covariance collapses to the mean") {
  const StateBelief b{Eigen::Vector4d(0.1, -0.2, 0.3, 0.4), Eigen::Matrix4d::Zero()};
  const auto sp = sigma_points(b, UnscentedConfig{});
  for (int j = 0; j < sp.points.cols(); ++j) CHECK(sp.points.col(j) == b.mean);
}

TEST_CASE("sigma_points: weighted moments reproduce a random 9D belief") {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::Matrix<double, 9, 1> mean;
    Eigen::Matrix<double, 9, 9> A;
    for (int i = 0; i < 9; ++i) {
      mean(i) = n(rng);
      for (int j = 0; j < 9; ++j) A(i, j) = 0.1 * n(rng);
    }
    Gaussian<9> g{mean, A * A.transpose() + 1e-4 * Eigen::Matrix<double, 9, 9>::Identity()};
    const auto sp = sigma_points(g, UnscentedConfig{});
    const Eigen::Matrix<double, 9, 1> m = sp.points * sp.mean_weights;
    Eigen::Matrix<double, 9, 9> c = Eigen::Matrix<double, 9, 9>::Zero();
    for (int j = 0; j < sp.points.cols(); ++j) {
      const Eigen::Matrix<double, 9, 1> d = sp.points.col(j) - m;
      c += sp.cov_weights(j) * d * d.transpose();
    }
    CHECK((m - mean).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((c - g.cov).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("covariance_sqrt: semidefinite input and indefinite rejection") {
  Eigen::Matrix4d cov = Eigen::Matrix4d::Zero();
  cov(0, 0) = 4.0;
  const Eigen::Matrix4d root = covariance_sqrt<4>(cov);
  CHECK((root * root.transpose() - cov).cwiseAbs().maxCoeff() < 1e-12);

  Eigen::Matrix4d bad = Eigen::Matrix4d::Identity();
  bad(3, 3) = -1.0;
  CHECK_THROWS_AS(covariance_sqrt<4>(bad), NumericalError);
}

TEST_CASE("ukf_predict: deterministic limit equals step") {
  const ParamBelief params = known_params();
  const StateBelief b{Eigen::Vector4d(0.1, 0.5, 0.02, 0.03), Eigen::Matrix4d::Zero()};
  const Action a(12.0, -0.4);
  const StateBelief next = ukf_predict(b, params, a, 0.02);
  const State expected = step(SystemParams::from_vector(params.mean), b.mean, a, 0.02);
  CHECK((next.mean - expected).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(next.cov.cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("ukf_predict: matches the Kalman prediction for known parameters") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    const Eigen::Vector4d mean(n(rng), n(rng), 0.1 * n(rng), 0.1 * n(rng));
    const Eigen::Matrix4d cov = oracle::random_spd(rng, 0.05);
    const Action a(20 * n(rng), n(rng));
    const StateBelief next = ukf_predict(StateBelief{mean, cov}, known_params(), a, 0.02);
    const auto expected = oracle::kalman_predict(mean, cov, 24.0, 10.0, a, 0.02);
    CHECK((next.mean - expected.mean).cwiseAbs().maxCoeff() < 1e-8);
    CHECK((next.cov - expected.cov).cwiseAbs().maxCoeff() < 1e-8);
    CHECK(is_symmetric_psd<4>(next.cov));
  }
}

TEST_CASE("ukf_predict: parameter uncertainty adds variance") {
  const StateBelief b = StateBelief::from_stds(Eigen::Vector4d(0.0, 1.0, 0.0, 0.2),
                                               Eigen::Vector4d(0.001, 1e-4, 5e-5, 5e-5));
  const Action a(10.0, 0.5);
  const StateBelief known = ukf_predict(b, known_params(), a, 0.02);
  const StateBelief uncertain = ukf_predict(b, revealed_params(), a, 0.02);
  CHECK(uncertain.cov(1, 1) > known.cov(1, 1));
  CHECK(uncertain.cov(3, 3) > known.cov(3, 3));
  CHECK((uncertain.cov.diagonal().array() >= known.cov.diagonal().array() - 1e-18).all());
  CHECK(is_symmetric_psd<4>(uncertain.cov));
}

TEST_CASE("kl_gaussian: closed-form values") {
  using G1 = Gaussian<1>;
  using V = Eigen::Matrix<double, 1, 1>;
  const G1 a{V(0.0), V(1.0)};
  CHECK(kl_gaussian(a, a) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(kl_gaussian(a, G1{V(1.0), V(1.0)}) == doctest::Approx(0.5).epsilon(1e-12));
  const double expected = (4.0 - 1.0 - std::log(4.0)) / 2.0;
  CHECK(kl_gaussian(G1{V(0.0), V(4.0)}, a) == doctest::Approx(expected).epsilon(1e-12));
  CHECK(expected == doctest::Approx(0.8069).epsilon(1e-4));
}

TEST_CASE("kl_gaussian: zero only for equal beliefs, singular second argument rejected") {
  std::mt19937_64 rng(9);
  const StateBelief a{Eigen::Vector4d(0.1, 0.2, 0.3, 0.4), oracle::random_spd(rng, 0.1)};
  CHECK(kl_gaussian(a, a) < 1e-12);
  StateBelief b = a;
  b.mean(2) += 1e-3;
  CHECK(kl_gaussian(b, a) > 0.0);
  const StateBelief singular{Eigen::Vector4d::Zero(), Eigen::Matrix4d::Zero()};
  CHECK_THROWS_AS(kl_gaussian(a, singular), NumericalError);
}

TEST_CASE("log_likelihood: Gaussian channels at the mode") {
  SystemParams p;
  const State s(0.2, 0.0, 0.0, 0.01);
  const Observation o = observe(p, s);
  CHECK(log_likelihood(o, s, NoiseSpec{1.0, 1.0}, p) ==
        doctest::Approx(-std::log(2.0 * M_PI)).epsilon(1e-12));
}

TEST_CASE("log_likelihood: decreases with position error, finite on discrete mismatch") {
  SystemParams p;
  const State s(0.2, 0.0, 0.0, 0.01);
  const NoiseSpec noise{0.01, 0.01};
  double last = log_likelihood(observe(p, s), s, noise, p);
  for (double e : {0.001, 0.01, 0.05, 0.2}) {
    Observation o = observe(p, s);
    o(0) += e;
    const double ll = log_likelihood(o, s, noise, p);
    CHECK(ll < last);
    last = ll;
  }
  Observation clicked = observe(p, s);
  clicked(obs_index::click) = 1.0;
  clicked(obs_index::misclick) = -1.0;
  const double ll = log_likelihood(clicked, s, noise, p);
  CHECK(std::isfinite(ll));
  CHECK(ll < log_likelihood(observe(p, s), s, noise, p) - 100.0);
}

TEST_CASE("vi_update: self-consistent observation leaves the mean in place") {
  const ParamBelief params = revealed_params();
  const StateBelief prior = StateBelief::from_stds(Eigen::Vector4d(0.3, 0.5, 0.0, 0.01),
                                                   Eigen::Vector4d(0.001, 1e-4, 5e-5, 5e-5));
  const Observation o = observe(SystemParams::from_vector(params.mean), prior.mean);
  const LogNormalBelief noise = LogNormalBelief::from_noise(NoiseSpec{0.01, 0.01});
  for (int seed = 0; seed < 5; ++seed) {
    Rng rng(seed);
    const VIResult r = vi_update(prior, o, noise, params, VIHyper{}, rng);
    CHECK_FALSE(r.diverged);
    for (int i = 0; i < 4; ++i)
      CHECK(std::abs(r.belief.mean(i) - prior.mean(i)) < 0.5 * std::sqrt(prior.cov(i, i)));
  }
}

TEST_CASE("vi_update: conjugate Gaussian posterior") {
  const OneDimCase c;
  const auto post = oracle::conjugate_posterior(0.0, c.prior_std * c.prior_std, c.o1, c.sigma * c.sigma);
  const LogNormalBelief noise = LogNormalBelief::from_noise(NoiseSpec{c.sigma, c.sigma});
  for (int seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    const VIResult r = vi_update(c.prior(), c.observation(), noise, known_params(), VIHyper{}, rng);
    CHECK_FALSE(r.diverged);
    CHECK(std::abs(r.belief.mean(0) - post.mean) < 3e-3);
    CHECK(std::abs(r.belief.cov(0, 0) / post.var - 1.0) < 0.10);
  }
}

TEST_CASE("vi_update: matches the optimum of its objective away from the prediction") {
  // The KL(prior || q) term lets the variance grow past the prior once the
  // observation is more than about one noise std from the prediction.
  OneDimCase c;
  c.prior_std = 0.001;
  c.sigma = 0.01;
  const LogNormalBelief noise = LogNormalBelief::from_noise(NoiseSpec{c.sigma, c.sigma});
  const double v0 = c.prior_std * c.prior_std;
  for (double offset : {0.0, 0.5, 1.0, 2.0, 3.0}) {
    c.o1 = offset * c.sigma;
    const auto q = oracle::kl_prior_optimum(0.0, v0, c.o1, c.sigma * c.sigma);
    for (int seed = 0; seed < 5; ++seed) {
      Rng rng(seed);
      const VIResult r = vi_update(c.prior(), c.observation(), noise, known_params(), VIHyper{}, rng);
      CAPTURE(offset);
      CHECK_FALSE(r.diverged);
      CHECK(std::abs(r.belief.mean(0) - q.mean) < 0.1 * c.prior_std);
      CHECK(std::abs(r.belief.cov(0, 0) / q.var - 1.0) < 0.10);
    }
  }
}

TEST_CASE("vi_update: position variance shrinks near the prediction, covariance stays PSD, trace mostly descends") {
  const LogNormalBelief noise = LogNormalBelief::from_noise(NoiseSpec{0.01, 0.01});
  const ParamBelief params = revealed_params();
  int non_increasing = 0, total = 0, near = 0;
  for (int seed = 0; seed < 20; ++seed) {
    Rng rng(100 + seed);
    std::normal_distribution<double> n(0.0, 1.0);
    const StateBelief prior = StateBelief::from_stds(
        Eigen::Vector4d(0.1 * n(rng), 0.3 * n(rng), 0.0, 0.0), Eigen::Vector4d(0.001, 1e-4, 5e-5, 5e-5));
    const Observation predicted = observe(SystemParams::from_vector(params.mean), prior.mean);
    Observation o = predicted;
    o(0) += 0.01 * n(rng);
    o(1) += 0.01 * n(rng);
    const VIResult r = vi_update(prior, o, noise, params, VIHyper{}, rng);
    CHECK(r.free_energy.size() == 31);
    if (std::abs(o(0) - predicted(0)) <= 0.5 * 0.01) {
      ++near;
      CHECK(r.belief.cov(0, 0) <= prior.cov(0, 0));
    }
    CHECK(is_symmetric_psd<4>(r.belief.cov));
    total += static_cast<int>(r.free_energy.size()) - 1;
    non_increasing += static_cast<int>(r.free_energy.size()) - 1 - r.increases();
  }
  CHECK(near >= 5);
  CHECK(non_increasing >= 0.8 * total);
}

TEST_CASE("vi_update: degenerate prior is returned unchanged") {
  const StateBelief prior{Eigen::Vector4d(0.1, 0.0, 0.0, 0.0), Eigen::Matrix4d::Zero()};
  Observation o = Observation::Zero();
  o(0) = 0.2;
  Rng rng(0);
  const VIResult r = vi_update(prior, o, LogNormalBelief::from_noise(NoiseSpec{}), known_params(),
                               VIHyper{}, rng);
  CHECK(r.skipped);
  CHECK(r.belief.mean == prior.mean);
}

TEST_CASE("LogNormalBelief: median recovers the configured noise") {
  const NoiseSpec n = LogNormalBelief::from_noise(NoiseSpec{0.01, 0.03}).median();
  CHECK(n.position_std == doctest::Approx(0.01).epsilon(1e-12));
  CHECK(n.displacement_std == doctest::Approx(0.03).epsilon(1e-12));
}
