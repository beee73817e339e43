#pragma once

// Algebra of circularly-symmetric complex Gaussians.
//
// Scalar messages are kept in precision form. Precision 0 is the improper
// flat density, precision +inf is a point mass (used for Dirac channel
// beliefs). The flat density always carries mean 0.

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace msgpass {

using cplx = std::complex<double>;

class ScalarGaussian {
 public:
  ScalarGaussian() = default;  // flat

  static ScalarGaussian flat() { return {}; }
  static ScalarGaussian point(cplx mean);
  /// variance 0 gives a point mass, +inf gives the flat density.
  static ScalarGaussian from_moments(cplx mean, double variance);
  static ScalarGaussian from_precision(cplx mean, double precision);

  cplx mean() const { return mean_; }
  double precision() const { return precision_; }
  double variance() const;

  bool is_flat() const { return precision_ == 0.0; }
  bool is_point() const;

  /// Natural (first-order) parameter precision * mean; 0 for the flat density.
  cplx precision_mean() const { return is_flat() ? cplx{} : precision_ * mean_; }

 private:
  ScalarGaussian(cplx mean, double precision) : mean_(mean), precision_(precision) {}

  cplx mean_{};
  double precision_ = 0.0;
};

ScalarGaussian product(const ScalarGaussian& a, const ScalarGaussian& b);

/// Density ratio num / den. Throws NonpositivePrecision when
/// num.precision < den.precision; equal precisions give the flat density.
ScalarGaussian divide(const ScalarGaussian& num, const ScalarGaussian& den);

/// Complex density value CN(z; mean, variance) for a proper Gaussian.
double density(const ScalarGaussian& g, cplx z);

class GaussianMixture {
 public:
  GaussianMixture(std::vector<double> weights, std::vector<ScalarGaussian> components);

  const std::vector<double>& weights() const { return weights_; }
  const std::vector<ScalarGaussian>& components() const { return components_; }
  std::size_t size() const { return weights_.size(); }

 private:
  std::vector<double> weights_;
  std::vector<ScalarGaussian> components_;
};

struct Moments {
  cplx mean;
  double variance;
};

/// Exact mean and central second moment of the mixture density.
Moments mixture_moments(const GaussianMixture& m);

/// Multivariate complex Gaussian with a cached covariance factor U
/// (covariance = U U^H, U is n x r). The factor is exact when supplied by
/// the caller, otherwise it comes from an eigendecomposition with
/// eigenvalues below 1e-14 of the largest dropped.
class JointGaussian {
 public:
  JointGaussian(Eigen::VectorXcd mean, Eigen::MatrixXcd covariance);
  static JointGaussian from_factor(Eigen::VectorXcd mean, Eigen::MatrixXcd factor);

  std::size_t size() const { return static_cast<std::size_t>(mean_.size()); }
  std::size_t rank() const { return static_cast<std::size_t>(factor_.cols()); }
  const Eigen::VectorXcd& mean() const { return mean_; }
  const Eigen::MatrixXcd& covariance() const { return covariance_; }
  const Eigen::MatrixXcd& factor() const { return factor_; }

  ScalarGaussian marginal(std::size_t i) const;

 private:
  JointGaussian(Eigen::VectorXcd mean, Eigen::MatrixXcd covariance, Eigen::MatrixXcd factor)
      : mean_(std::move(mean)), covariance_(std::move(covariance)), factor_(std::move(factor)) {}

  Eigen::VectorXcd mean_;
  Eigen::MatrixXcd covariance_;
  Eigen::MatrixXcd factor_;
};

/// Reciprocal-condition threshold below which a factorized matrix is
/// reported as SingularMatrix.
inline constexpr double kSingularRcond = 1e-12;

/// Message from the prior factor to variable i: the prior conditioned on
/// every observation except index i. Observation j is CN(obs_means[j];
/// h_j, obs_variances[j]); an infinite variance marks an uninformative
/// observation. Direct Schur-complement evaluation, O(n^3) per index.
ScalarGaussian extrinsic_conditional(const JointGaussian& prior, const Eigen::VectorXcd& obs_means,
                                     const Eigen::VectorXd& obs_variances, std::size_t i);

/// extrinsic_conditional for every index in one pass, O(n r^2) through the
/// covariance factor.
std::vector<ScalarGaussian> joint_extrinsics(const JointGaussian& prior,
                                             const Eigen::VectorXcd& obs_means,
                                             const Eigen::VectorXd& obs_variances);

/// Posterior of the prior times independent Gaussian site messages, one per
/// index, kept in the r-dimensional factor coordinates so that replacing a
/// single site is a rank-1 update. Flat sites contribute nothing; point-mass
/// sites are rejected.
class GaussianPosterior {
 public:
  GaussianPosterior(const JointGaussian& prior, std::span<const ScalarGaussian> sites);

  std::size_t size() const { return sites_.size(); }
  const ScalarGaussian& site(std::size_t i) const { return sites_[i]; }
  const std::vector<ScalarGaussian>& sites() const { return sites_; }

  ScalarGaussian marginal(std::size_t i) const;
  /// Marginal with site i divided out.
  ScalarGaussian cavity(std::size_t i) const;
  std::vector<ScalarGaussian> extrinsics() const;

  void set_site(std::size_t i, const ScalarGaussian& site);

 private:
  void refresh_mean();

  const JointGaussian* prior_;
  std::vector<ScalarGaussian> sites_;
  Eigen::MatrixXcd cov_z_;   // r x r posterior covariance of the factor coordinates
  Eigen::VectorXcd info_z_;  // U^H sum of centered site natural parameters
  Eigen::VectorXcd mean_z_;
};

}  // namespace msgpass
