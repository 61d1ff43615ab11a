#include "corrsmooth/simulate.hpp"

#include "corrsmooth/errors.hpp"
#include "corrsmooth/parallel.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <numbers>

namespace corrsmooth {

MeanFunction parse_mean_function(const std::string& name)
{
  if (name == "Mu2D" || name == "mu2d") {
    return MeanFunction::Mu2D;
  }
  if (name == "Mu3D" || name == "mu3d") {
    return MeanFunction::Mu3D;
  }
  throw InvalidArgument("unknown mean function '" + name + "'");
}

std::string to_string(MeanFunction mu)
{
  return mu == MeanFunction::Mu2D ? "Mu2D" : "Mu3D";
}

int mean_dim(MeanFunction mu)
{
  return mu == MeanFunction::Mu2D ? 2 : 3;
}

double mu_value(MeanFunction mu, std::span<const double> x)
{
  using std::numbers::pi;
  if (static_cast<int>(x.size()) != mean_dim(mu)) {
    throw InvalidArgument("point dimension does not match " + to_string(mu));
  }
  if (mu == MeanFunction::Mu2D) {
    return 2.0 * x[0] * x[0] + 2.0 * std::cos(pi * x[1]);
  }
  return x[0] + std::sin(pi * x[1]) + 2.0 * x[2] * x[2];
}

RegressionTruth regression_truth(MeanFunction mu)
{
  return {[mu](std::span<const double> x) { return mu_value(mu, x); }, mean_dim(mu)};
}

void SimScenario::validate() const
{
  model.validate();
  if (model.dim != mean_dim(mu)) {
    throw InvalidArgument(to_string(mu) + " requires D=" + std::to_string(mean_dim(mu)));
  }
  if (n < static_cast<std::size_t>(model.dim) + 2) {
    throw InvalidArgument("sample size too small for the dimension");
  }
  if (n_trials < 1) {
    throw InvalidArgument("n_trials must be at least 1");
  }
}

// ---------------------------------------------------------------------------

Eigen::MatrixXd covariance_matrix(const PointMatrix& points, const CorrelationModel& model,
                                  double n_scale)
{
  const auto n = points.rows();
  Eigen::MatrixXd sigma(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    sigma(i, i) = model.sigma2;
    for (Eigen::Index j = i + 1; j < n; ++j) {
      double d = (points.row(i) - points.row(j)).norm();
      double v = model.sigma2 * correlation_value(model, d, n_scale);
      sigma(i, j) = v;
      sigma(j, i) = v;
    }
  }
  return sigma;
}

ErrorSampler::ErrorSampler(const Eigen::MatrixXd& sigma, double sigma2)
{
  const auto n = sigma.rows();
  for (double scale : {1e-10, 1e-8}) {
    jitter_ = scale * sigma2;
    Eigen::MatrixXd m = sigma;
    m.diagonal().array() += jitter_;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m);
    if (eig.info() != Eigen::Success) {
      continue;
    }
    const auto& lambda = eig.eigenvalues();
    double top = lambda.maxCoeff();
    // strongly negative spectrum means the model is not a valid covariance
    if (n > 0 && lambda.minCoeff() < -1e-6 * std::max(top, 1e-300)) {
      continue;
    }
    Eigen::VectorXd root = lambda.cwiseMax(0.0).cwiseSqrt();
    const auto& v = eig.eigenvectors();
    factor_ = v * root.asDiagonal() * v.transpose();
    return;
  }
  throw NumericalError("covariance factorization failed after jitter retry");
}

Eigen::VectorXd ErrorSampler::sample(Rng& rng) const
{
  Eigen::VectorXd z(factor_.rows());
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    z[i] = rng.normal();
  }
  return factor_ * z;
}

SimulatedData generate(const SimScenario& scn, std::uint64_t seed)
{
  scn.validate();
  const int dim = scn.model.dim;
  const auto n = static_cast<Eigen::Index>(scn.n);
  Rng rng(seed);
  PointMatrix x(n, dim);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (int d = 0; d < dim; ++d) {
      x(i, d) = rng.uniform();
    }
  }
  Eigen::VectorXd truth(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    truth[i] = mu_value(scn.mu, {x.data() + i * dim, static_cast<std::size_t>(dim)});
  }
  Eigen::VectorXd eps = Eigen::VectorXd::Zero(n);
  if (scn.model.sigma2 > 0.0) {
    ErrorSampler sampler(covariance_matrix(x, scn.model, static_cast<double>(n)),
                         scn.model.sigma2);
    eps = sampler.sample(rng);
  }
  Eigen::VectorXd y = truth + eps;
  return {Dataset(std::move(x), std::move(y)), std::move(eps), std::move(truth)};
}

// ---------------------------------------------------------------------------

double mse_prac(std::span<const double> fitted, std::span<const double> truth)
{
  if (fitted.size() != truth.size() || fitted.empty()) {
    throw InvalidArgument("mse_prac needs equal, non-empty vectors");
  }
  double s = 0.0;
  for (std::size_t i = 0; i < fitted.size(); ++i) {
    double d = fitted[i] - truth[i];
    s += d * d;
  }
  return s / static_cast<double>(fitted.size());
}

double mse_sigma2(std::span<const double> estimates, double sigma2)
{
  if (estimates.empty()) {
    throw InvalidArgument("mse_sigma2 needs at least one trial");
  }
  double s = 0.0;
  for (double e : estimates) {
    s += (e - sigma2) * (e - sigma2);
  }
  return s / static_cast<double>(estimates.size());
}

double sse_cor(const std::function<double(double)>& rho_hat, const CorrelationModel& model,
               const PairSet& pairs, double zeta)
{
  if (!(zeta > 0.0 && zeta < 1.0)) {
    throw InvalidArgument("zeta must lie in (0, 1)");
  }
  const double n = static_cast<double>(pairs.points());
  double s = 0.0;
  // distances are sorted and rho_n is non-increasing
  for (double d : pairs.distances()) {
    double rho = correlation_value(model, d, n);
    if (rho < zeta) {
      break;
    }
    double e = rho_hat(d) - rho;
    s += e * e;
  }
  return s;
}

double sse_cor(const CorrelationEstimate& rho_hat, const CorrelationModel& model,
               const PairSet& pairs, double zeta)
{
  return sse_cor([&](double t) { return rho_hat.value(t); }, model, pairs, zeta);
}

double correlation_penalty(const Dataset& data, const CorrelationModel& model, double h,
                           const RegressionKernel& k)
{
  const std::size_t n = data.size();
  const double nn = static_cast<double>(n);
  std::vector<double> rows(n, 0.0);
  parallel_for(n, [&](std::size_t i) {
    Eigen::VectorXd c = hat_coefficients(data, i, h, k);
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i && c[static_cast<Eigen::Index>(j)] != 0.0) {
        s += c[static_cast<Eigen::Index>(j)] *
             correlation_value(model, data.distance(i, j), nn);
      }
    }
    rows[i] = s;
  });
  double total = 0.0;
  for (double r : rows) {
    total += r;
  }
  return 2.0 * model.sigma2 / nn * total;
}

} // namespace corrsmooth
