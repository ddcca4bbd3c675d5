#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <Eigen/Eigenvalues>

#include "aifp/dynamics.hpp"
#include "aifp/rng.hpp"

namespace aifp {

class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr double kPsdTolerance = 1e-10;
inline constexpr double kJitter = 1e-9;

template <int Dim>
struct Gaussian {
  using Vector = Eigen::Matrix<double, Dim, 1>;
  using Matrix = Eigen::Matrix<double, Dim, Dim>;

  Vector mean;
  Matrix cov;

  Eigen::Index dim() const { return mean.size(); }

  static Gaussian from_stds(const Vector& mean, const Vector& stds) {
    return Gaussian{mean, stds.array().square().matrix().asDiagonal()};
  }
};

using GaussianBelief = Gaussian<Eigen::Dynamic>;
using StateBelief = Gaussian<4>;
using ParamBelief = Gaussian<5>;

// Noise-std belief: log(sigma) ~ N(log_mean, log_cov).
struct LogNormalBelief {
  Eigen::Vector2d log_mean = Eigen::Vector2d::Constant(std::log(0.01));
  Eigen::Matrix2d log_cov = Eigen::Matrix2d::Identity() * 1e-8;

  static LogNormalBelief from_noise(const NoiseSpec& noise, double log_variance = 1e-8);
  NoiseSpec median() const;
};

struct VIHyper {
  int steps = 30;
  int samples = 300;
  double learning_rate = 3.0e-4;
  // Prior std at which one unit of step equals one model unit.
  double reference_std = 3.0e-3;

  void validate() const;
};

struct UnscentedConfig {
  double alpha = 1e-1;
  double beta = 2.0;
  double kappa = 0.0;

  void validate() const;
};

template <int Dim>
bool is_symmetric_psd(const Eigen::Matrix<double, Dim, Dim>& cov, double tol = kPsdTolerance) {
  if (!cov.allFinite()) return false;
  if ((cov - cov.transpose()).cwiseAbs().maxCoeff() > tol) return false;
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix<double, Dim, Dim>> eig(cov, Eigen::EigenvaluesOnly);
  return eig.eigenvalues().minCoeff() >= -tol;
}

// Square root S with S * S^T = cov. Lower-triangular Cholesky factor when the
// matrix is positive definite; symmetric eigen root for semidefinite input.
// Indefinite input gets one diagonal jitter before NumericalError is raised.
template <int Dim>
Eigen::Matrix<double, Dim, Dim> covariance_sqrt(const Eigen::Matrix<double, Dim, Dim>& cov) {
  using Matrix = Eigen::Matrix<double, Dim, Dim>;
  if (!cov.allFinite()) throw NumericalError("covariance has non-finite entries");
  Eigen::LLT<Matrix> llt(cov);
  if (llt.info() == Eigen::Success) return llt.matrixL();

  Matrix sym = 0.5 * (cov + cov.transpose());
  for (int attempt = 0; attempt < 2; ++attempt) {
    Eigen::SelfAdjointEigenSolver<Matrix> eig(sym);
    if (eig.info() == Eigen::Success && eig.eigenvalues().minCoeff() >= -kPsdTolerance) {
      return eig.eigenvectors() *
             eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() *
             eig.eigenvectors().transpose();
    }
    sym.diagonal().array() += kJitter;
  }
  throw NumericalError("covariance is not positive semidefinite");
}

struct UnscentedWeights {
  double spread = 0.0;  // sqrt(n + lambda)
  double mean_center = 0.0;
  double cov_center = 0.0;
  double outer = 0.0;

  static UnscentedWeights make(int n, const UnscentedConfig& cfg);
};

constexpr int sigma_count(int dim) { return dim == Eigen::Dynamic ? Eigen::Dynamic : 2 * dim + 1; }

template <int Dim>
struct SigmaPoints {
  Eigen::Matrix<double, Dim, sigma_count(Dim)> points;
  Eigen::VectorXd mean_weights;
  Eigen::VectorXd cov_weights;
};

// Column 0 is the mean, columns 1..n the positive and n+1..2n the negative offsets.
template <int Dim>
SigmaPoints<Dim> sigma_points(const Gaussian<Dim>& belief, const UnscentedConfig& cfg) {
  cfg.validate();
  const auto n = static_cast<int>(belief.dim());
  const UnscentedWeights w = UnscentedWeights::make(n, cfg);
  const Eigen::Matrix<double, Dim, Dim> root = covariance_sqrt<Dim>(belief.cov);

  SigmaPoints<Dim> out;
  out.points.resize(n, 2 * n + 1);
  out.points.col(0) = belief.mean;
  for (int i = 0; i < n; ++i) {
    out.points.col(1 + i) = belief.mean + w.spread * root.col(i);
    out.points.col(1 + n + i) = belief.mean - w.spread * root.col(i);
  }
  out.mean_weights = Eigen::VectorXd::Constant(2 * n + 1, w.outer);
  out.cov_weights = out.mean_weights;
  out.mean_weights(0) = w.mean_center;
  out.cov_weights(0) = w.cov_center;
  return out;
}

// Unscented prediction of the state belief through the cursor dynamics with
// joint sigma points over the product of state and parameter beliefs. The
// parameter square root is computed once per predictor.
class UnscentedPredictor {
 public:
  UnscentedPredictor(const ParamBelief& params, double dt, const UnscentedConfig& cfg = {});

  StateBelief predict(const StateBelief& belief, const Action& a) const;
  StateBelief predict_with_root(const StateBelief& belief, const Eigen::Matrix4d& state_root,
                                const Action& a) const;

  const ParamBelief& params() const { return params_; }
  double dt() const { return dt_; }

 private:
  ParamBelief params_;
  Eigen::Matrix<double, 5, 5> param_root_;
  UnscentedWeights weights_;
  double dt_;
};

StateBelief ukf_predict(const StateBelief& state, const ParamBelief& params, const Action& a,
                        double dt, const UnscentedConfig& cfg = {});

template <int Dim>
double kl_gaussian(const Gaussian<Dim>& a, const Gaussian<Dim>& b) {
  using Matrix = Eigen::Matrix<double, Dim, Dim>;
  if (a.dim() != b.dim()) throw std::invalid_argument("kl_gaussian: dimension mismatch");
  Eigen::LLT<Matrix> llt_b(b.cov);
  if (llt_b.info() != Eigen::Success) throw NumericalError("kl_gaussian: singular covariance");
  const auto n = static_cast<double>(a.dim());
  const Matrix b_inv_a = llt_b.solve(a.cov);
  const auto diff = (b.mean - a.mean).eval();
  const double mahalanobis = diff.dot(llt_b.solve(diff));
  const double logdet_b = 2.0 * llt_b.matrixLLT().diagonal().array().log().sum();
  Eigen::LLT<Matrix> llt_a(a.cov);
  double logdet_a = 0.0;
  if (llt_a.info() == Eigen::Success) {
    logdet_a = 2.0 * llt_a.matrixLLT().diagonal().array().log().sum();
  } else {
    throw NumericalError("kl_gaussian: singular first argument");
  }
  const double kl = 0.5 * (b_inv_a.trace() + mahalanobis - n + logdet_b - logdet_a);
  return std::max(kl, 0.0);
}

// Fixed std of the narrow Gaussian used for the click/hit/misclick channels.
inline constexpr double kDiscreteChannelStd = 0.05;

// ln P_o(o | s; sigma). Continuous channels are normalized Gaussian log
// densities; each discrete channel adds -0.5 * (mismatch / 0.05)^2.
double log_likelihood(const Observation& o, const State& s, const NoiseSpec& sigma,
                      const SystemParams& params);

// Changes below this relative size count as flat in the free-energy trace.
inline constexpr double kTraceTolerance = 1e-6;

struct VIResult {
  StateBelief belief;
  std::vector<double> free_energy;  // k + 1 entries, one per iterate
  bool diverged = false;
  bool skipped = false;  // degenerate prior, returned unchanged

  // Steps where the free energy rose by more than kTraceTolerance relative.
  int increases() const;
};

// Observation update minimizing KL(prior || q) - E_q[ln P_o(o | s; sigma)]
// over q = N(m, L L^T) by adaptive gradient steps on (m, L) with step size
// lr / sqrt(t), each coordinate rescaled by its prior std over
// hyper.reference_std. Reparameterization draws are fixed
// across the iterations of one update; the lowest-free-energy iterate is
// returned. More than steps/2 increases reverts to the prior.
VIResult vi_update(const StateBelief& prior, const Observation& o, const LogNormalBelief& noise,
                   const ParamBelief& params, const VIHyper& hyper, Rng& rng);

}  // namespace aifp
