#pragma once

#include "corrsmooth/bandwidth.hpp"
#include "corrsmooth/correlation.hpp"
#include "corrsmooth/covariance.hpp"
#include "corrsmooth/kernels.hpp"
#include "corrsmooth/locfit.hpp"
#include "corrsmooth/rng.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <functional>
#include <span>
#include <string>

namespace corrsmooth {

enum class MeanFunction
{
  Mu2D, //!< 2 x1^2 + 2 cos(pi x2)
  Mu3D, //!< x1 + sin(pi x2) + 2 x3^2
};

MeanFunction parse_mean_function(const std::string& name);
std::string to_string(MeanFunction mu);
int mean_dim(MeanFunction mu);
double mu_value(MeanFunction mu, std::span<const double> x);
RegressionTruth regression_truth(MeanFunction mu);

struct SimScenario
{
  MeanFunction mu = MeanFunction::Mu2D;
  std::size_t n = 500;
  CorrelationModel model;
  std::uint64_t seed = 1;
  int n_trials = 30;

  //! Throws InvalidArgument when model.dim does not match the mean function.
  void validate() const;
};

//! Sigma_ij = sigma2 * rho_n(|x_i - x_j|), exactly symmetric.
Eigen::MatrixXd covariance_matrix(const PointMatrix& points, const CorrelationModel& model,
                                  double n_scale);

//! Symmetric square root of a covariance matrix: eigendecomposition of
//! Sigma + jitter * I with negative eigenvalues clipped at 0. Jitter starts at
//! 1e-10 * sigma2 and is retried once at 1e-8 * sigma2.
class ErrorSampler
{
public:
  ErrorSampler(const Eigen::MatrixXd& sigma, double sigma2);

  //! L z for z ~ N(0, I), L L^T = Sigma + jitter.
  Eigen::VectorXd sample(Rng& rng) const;
  double jitter() const { return jitter_; }
  const Eigen::MatrixXd& factor() const { return factor_; }

private:
  Eigen::MatrixXd factor_;
  double jitter_ = 0.0;
};

struct SimulatedData
{
  Dataset data;
  Eigen::VectorXd errors;
  Eigen::VectorXd truth; //!< mu(X_i)
};

//! Uniform design, correlated Gaussian errors, Y = mu(X) + eps. The stream
//! draws all design coordinates row by row, then n standard normals.
SimulatedData generate(const SimScenario& scn, std::uint64_t seed);
inline SimulatedData generate(const SimScenario& scn) { return generate(scn, scn.seed); }

double mse_prac(std::span<const double> fitted, std::span<const double> truth);
double mse_sigma2(std::span<const double> estimates, double sigma2);

inline constexpr double kDefaultZeta = 0.02;

//! Sum over unordered pairs with rho_n(d_ij) >= zeta of
//! (rho_hat(d_ij) - rho_n(d_ij))^2.
double sse_cor(const std::function<double(double)>& rho_hat, const CorrelationModel& model,
               const PairSet& pairs, double zeta = kDefaultZeta);
double sse_cor(const CorrelationEstimate& rho_hat, const CorrelationModel& model,
               const PairSet& pairs, double zeta = kDefaultZeta);

//! (2 sigma2 / n) sum_i sum_{s != i} c_is rho_n(|X_i - X_s|). Throws
//! SingularFitError when a local fit is singular.
double correlation_penalty(const Dataset& data, const CorrelationModel& model, double h,
                           const RegressionKernel& k);

} // namespace corrsmooth
