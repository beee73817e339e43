#include "msgpass/gaussian_algebra.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <string>

#include "msgpass/errors.hpp"

namespace msgpass {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require_finite(cplx z, const char* what) {
  if (!std::isfinite(z.real()) || !std::isfinite(z.imag()))
    throw Error(ErrorCode::InvalidArgument, std::string(what) + " must be finite");
}

}  // namespace

ScalarGaussian ScalarGaussian::point(cplx mean) {
  require_finite(mean, "point mass location");
  return {mean, kInf};
}

ScalarGaussian ScalarGaussian::from_moments(cplx mean, double variance) {
  if (std::isnan(variance) || variance < 0.0)
    throw Error(ErrorCode::InvalidArgument, "variance must be nonnegative");
  if (variance == kInf) return flat();
  require_finite(mean, "mean");
  if (variance == 0.0) return point(mean);
  return {mean, 1.0 / variance};
}

ScalarGaussian ScalarGaussian::from_precision(cplx mean, double precision) {
  if (std::isnan(precision) || precision < 0.0)
    throw Error(ErrorCode::InvalidArgument, "precision must be nonnegative");
  if (precision == 0.0) return flat();
  require_finite(mean, "mean");
  return {mean, precision};
}

double ScalarGaussian::variance() const {
  if (precision_ == 0.0) return kInf;
  if (precision_ == kInf) return 0.0;
  return 1.0 / precision_;
}

bool ScalarGaussian::is_point() const { return precision_ == kInf; }

ScalarGaussian product(const ScalarGaussian& a, const ScalarGaussian& b) {
  if (a.is_point() && b.is_point())
    throw Error(ErrorCode::InvalidArgument, "product of two point masses");
  if (a.is_point()) return a;
  if (b.is_point()) return b;
  const double precision = a.precision() + b.precision();
  if (precision == 0.0) return ScalarGaussian::flat();
  const cplx mean = (a.precision_mean() + b.precision_mean()) / precision;
  return ScalarGaussian::from_precision(mean, precision);
}

ScalarGaussian divide(const ScalarGaussian& num, const ScalarGaussian& den) {
  if (den.is_point()) throw Error(ErrorCode::InvalidArgument, "division by a point mass");
  if (num.is_point()) return num;
  const double precision = num.precision() - den.precision();
  if (precision < 0.0)
    throw Error(ErrorCode::NonpositivePrecision,
                "numerator precision " + std::to_string(num.precision()) +
                    " below denominator precision " + std::to_string(den.precision()));
  if (precision == 0.0) return ScalarGaussian::flat();
  const cplx mean = (num.precision_mean() - den.precision_mean()) / precision;
  return ScalarGaussian::from_precision(mean, precision);
}

double density(const ScalarGaussian& g, cplx z) {
  if (g.is_flat() || g.is_point())
    throw Error(ErrorCode::InvalidArgument, "density of an improper or degenerate Gaussian");
  return g.precision() / std::numbers::pi * std::exp(-g.precision() * std::norm(z - g.mean()));
}

GaussianMixture::GaussianMixture(std::vector<double> weights, std::vector<ScalarGaussian> components)
    : weights_(std::move(weights)), components_(std::move(components)) {
  if (weights_.empty() || weights_.size() != components_.size())
    throw Error(ErrorCode::InvalidArgument, "mixture needs matching nonempty weights and components");
  for (double w : weights_)
    if (!(w >= 0.0) || !std::isfinite(w))
      throw Error(ErrorCode::InvalidArgument, "mixture weights must be finite and nonnegative");
  const double total = std::accumulate(weights_.begin(), weights_.end(), 0.0);
  if (std::abs(total - 1.0) > 1e-12)
    throw Error(ErrorCode::InvalidArgument, "mixture weights must sum to 1");
  for (const auto& c : components_)
    if (c.is_flat()) throw Error(ErrorCode::InvalidArgument, "mixture component is improper");
}

Moments mixture_moments(const GaussianMixture& m) {
  cplx mean{};
  for (std::size_t k = 0; k < m.size(); ++k) mean += m.weights()[k] * m.components()[k].mean();
  // Within-component plus between-component spread.
  double variance = 0.0;
  for (std::size_t k = 0; k < m.size(); ++k) {
    const auto& c = m.components()[k];
    variance += m.weights()[k] * (c.variance() + std::norm(c.mean() - mean));
  }
  return {mean, variance};
}

JointGaussian::JointGaussian(Eigen::VectorXcd mean, Eigen::MatrixXcd covariance)
    : mean_(std::move(mean)), covariance_(std::move(covariance)) {
  const Eigen::Index n = mean_.size();
  if (covariance_.rows() != n || covariance_.cols() != n)
    throw Error(ErrorCode::LengthMismatch, "covariance must be square and match the mean");
  if (!mean_.allFinite() || !covariance_.allFinite())
    throw Error(ErrorCode::InvalidArgument, "joint Gaussian parameters must be finite");

  const double scale = std::max(1.0, covariance_.cwiseAbs().maxCoeff());
  if ((covariance_ - covariance_.adjoint()).cwiseAbs().maxCoeff() > 1e-12 * scale)
    throw Error(ErrorCode::NotPositiveSemidefinite, "covariance is not Hermitian");

  factor_.resize(n, 0);
  if (n == 0) return;
  const Eigen::MatrixXcd sym = 0.5 * (covariance_ + covariance_.adjoint());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(sym);
  const Eigen::VectorXd& values = eig.eigenvalues();
  const double largest = values.maxCoeff();
  if (values.minCoeff() < -1e-10 * std::max(largest, 0.0))
    throw Error(ErrorCode::NotPositiveSemidefinite,
                "covariance has eigenvalue " + std::to_string(values.minCoeff()));
  if (largest <= 0.0) return;

  std::vector<Eigen::Index> kept;
  for (Eigen::Index k = 0; k < n; ++k)
    if (values[k] > 1e-14 * largest) kept.push_back(k);
  factor_.resize(n, static_cast<Eigen::Index>(kept.size()));
  for (std::size_t c = 0; c < kept.size(); ++c)
    factor_.col(static_cast<Eigen::Index>(c)) =
        eig.eigenvectors().col(kept[c]) * std::sqrt(values[kept[c]]);
}

JointGaussian JointGaussian::from_factor(Eigen::VectorXcd mean, Eigen::MatrixXcd factor) {
  if (factor.rows() != mean.size())
    throw Error(ErrorCode::LengthMismatch, "factor rows must match the mean");
  if (!mean.allFinite() || !factor.allFinite())
    throw Error(ErrorCode::InvalidArgument, "joint Gaussian parameters must be finite");
  Eigen::MatrixXcd covariance = factor * factor.adjoint();
  return JointGaussian(std::move(mean), std::move(covariance), std::move(factor));
}

ScalarGaussian JointGaussian::marginal(std::size_t i) const {
  const auto k = static_cast<Eigen::Index>(i);
  return ScalarGaussian::from_moments(mean_[k], std::max(0.0, covariance_(k, k).real()));
}

namespace {

void check_observations(const JointGaussian& prior, const Eigen::VectorXcd& obs_means,
                        const Eigen::VectorXd& obs_variances) {
  const auto n = static_cast<Eigen::Index>(prior.size());
  if (obs_means.size() != n || obs_variances.size() != n)
    throw Error(ErrorCode::LengthMismatch, "observation vectors must match the prior dimension");
  for (Eigen::Index j = 0; j < n; ++j) {
    if (!(obs_variances[j] > 0.0))
      throw Error(ErrorCode::InvalidArgument, "observation variances must be positive");
    if (std::isfinite(obs_variances[j])) require_finite(obs_means[j], "observation mean");
  }
}

}  // namespace

ScalarGaussian extrinsic_conditional(const JointGaussian& prior, const Eigen::VectorXcd& obs_means,
                                     const Eigen::VectorXd& obs_variances, std::size_t i) {
  check_observations(prior, obs_means, obs_variances);
  if (i >= prior.size()) throw Error(ErrorCode::InvalidArgument, "index out of range");
  const auto n = static_cast<Eigen::Index>(prior.size());
  const auto ii = static_cast<Eigen::Index>(i);

  std::vector<Eigen::Index> others;
  for (Eigen::Index j = 0; j < n; ++j)
    if (j != ii && std::isfinite(obs_variances[j])) others.push_back(j);
  if (others.empty()) return prior.marginal(i);

  const auto f = static_cast<Eigen::Index>(others.size());
  const Eigen::MatrixXcd& cov = prior.covariance();
  Eigen::MatrixXcd s(f, f);
  Eigen::RowVectorXcd cross(f);
  Eigen::VectorXcd residual(f);
  for (Eigen::Index a = 0; a < f; ++a) {
    for (Eigen::Index b = 0; b < f; ++b) s(a, b) = cov(others[a], others[b]);
    s(a, a) += obs_variances[others[a]];
    cross[a] = cov(ii, others[a]);
    residual[a] = obs_means[others[a]] - prior.mean()[others[a]];
  }

  Eigen::LLT<Eigen::MatrixXcd> llt(s);
  if (llt.info() != Eigen::Success || llt.rcond() < kSingularRcond)
    throw Error(ErrorCode::SingularMatrix, "observation-plus-prior covariance is singular");

  const cplx mean = prior.mean()[ii] + (cross * llt.solve(residual))(0);
  const double variance =
      cov(ii, ii).real() - (cross * llt.solve(Eigen::VectorXcd(cross.adjoint())))(0).real();
  return ScalarGaussian::from_moments(mean, std::max(0.0, variance));
}

std::vector<ScalarGaussian> joint_extrinsics(const JointGaussian& prior,
                                             const Eigen::VectorXcd& obs_means,
                                             const Eigen::VectorXd& obs_variances) {
  check_observations(prior, obs_means, obs_variances);
  std::vector<ScalarGaussian> sites(prior.size());
  for (std::size_t j = 0; j < sites.size(); ++j) {
    const auto k = static_cast<Eigen::Index>(j);
    sites[j] = ScalarGaussian::from_moments(obs_means[k], obs_variances[k]);
  }
  return GaussianPosterior(prior, sites).extrinsics();
}

GaussianPosterior::GaussianPosterior(const JointGaussian& prior, std::span<const ScalarGaussian> sites)
    : prior_(&prior), sites_(sites.begin(), sites.end()) {
  if (sites_.size() != prior.size())
    throw Error(ErrorCode::LengthMismatch, "one site per prior dimension required");
  const Eigen::MatrixXcd& u = prior.factor();
  const Eigen::Index n = u.rows();
  const Eigen::Index r = u.cols();

  Eigen::VectorXd precision(n);
  Eigen::VectorXcd centered(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const auto& s = sites_[static_cast<std::size_t>(j)];
    if (s.is_point()) throw Error(ErrorCode::InvalidArgument, "point-mass site message");
    precision[j] = s.precision();
    centered[j] = s.is_flat() ? cplx{} : s.precision() * (s.mean() - prior.mean()[j]);
  }

  Eigen::MatrixXcd p = Eigen::MatrixXcd::Identity(r, r);
  p.noalias() += u.adjoint() * precision.asDiagonal() * u;
  if (r > 0) {
    Eigen::LLT<Eigen::MatrixXcd> llt(p);
    if (llt.info() != Eigen::Success || llt.rcond() < kSingularRcond)
      throw Error(ErrorCode::SingularMatrix, "posterior precision in factor coordinates is singular");
    cov_z_ = llt.solve(Eigen::MatrixXcd::Identity(r, r));
  } else {
    cov_z_.resize(0, 0);
  }
  info_z_ = u.adjoint() * centered;
  refresh_mean();
}

void GaussianPosterior::refresh_mean() { mean_z_.noalias() = cov_z_ * info_z_; }

ScalarGaussian GaussianPosterior::marginal(std::size_t i) const {
  const auto k = static_cast<Eigen::Index>(i);
  const auto u = prior_->factor().row(k);
  const double variance = std::max(0.0, (u * cov_z_ * u.adjoint())(0, 0).real());
  const cplx mean = prior_->mean()[k] + (u * mean_z_)(0);
  return ScalarGaussian::from_moments(mean, variance);
}

ScalarGaussian GaussianPosterior::cavity(std::size_t i) const {
  const ScalarGaussian post = marginal(i);
  const ScalarGaussian& s = sites_[i];
  if (s.is_flat() || post.is_point()) return post;
  // Division in moment form; avoids forming 1/v - lambda directly.
  const double v = post.variance();
  const double remaining = 1.0 - s.precision() * v;
  if (remaining <= 0.0) return ScalarGaussian::flat();
  const cplx mean = (post.mean() - s.precision() * v * s.mean()) / remaining;
  return ScalarGaussian::from_precision(mean, remaining / v);
}

std::vector<ScalarGaussian> GaussianPosterior::extrinsics() const {
  std::vector<ScalarGaussian> out(sites_.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = cavity(i);
  return out;
}

void GaussianPosterior::set_site(std::size_t i, const ScalarGaussian& site) {
  if (site.is_point()) throw Error(ErrorCode::InvalidArgument, "point-mass site message");
  const auto k = static_cast<Eigen::Index>(i);
  const ScalarGaussian& old = sites_[i];
  const cplx prior_mean = prior_->mean()[k];
  auto centered = [&](const ScalarGaussian& s) {
    return s.is_flat() ? cplx{} : s.precision() * (s.mean() - prior_mean);
  };
  const double d_precision = site.precision() - old.precision();
  const cplx d_info = centered(site) - centered(old);

  if (cov_z_.rows() > 0) {
    const auto u = prior_->factor().row(k);
    const Eigen::VectorXcd g = cov_z_ * u.adjoint();
    const double q = (u * g)(0).real();
    const double denom = 1.0 + d_precision * q;
    if (denom <= 0.0)
      throw Error(ErrorCode::NonpositivePrecision, "site replacement makes the posterior improper");
    cov_z_.noalias() -= (d_precision / denom) * g * g.adjoint();
    info_z_ += u.adjoint() * d_info;
    refresh_mean();
  }
  sites_[i] = site;
}

}  // namespace msgpass
