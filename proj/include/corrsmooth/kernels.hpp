#pragma once

#include <array>
#include <functional>
#include <span>
#include <string>
#include <variant>

namespace corrsmooth {

//! Second moment mu2(K) = int u_1^2 K(u) du and roughness muK2 = int K(u)^2 du.
struct KernelMoments
{
  double mu2 = 0.0;
  double muK2 = 0.0;
};

//! Criterion used to pick the annulus polynomial coefficients.
enum class KernelObjective
{
  MinVariance, //!< minimize mu(K^2)
  MinAMISE,    //!< minimize mu(K^2)^2 * mu2(K)^D
  MinProduct,  //!< minimize mu(K^2) * mu2(K)
};

KernelObjective parse_objective(const std::string& name);
std::string to_string(KernelObjective objective);

//! Radial kernel that vanishes inside radius c1 and outside radius c2:
//!   K(u) = (A r^3 + B r^2 + C r + D) for c1 <= r = |u| <= c2, 0 otherwise.
//! The coefficients are normalized for the ambient dimension `dim`.
class AnnulusKernel
{
public:
  AnnulusKernel(double c1, double c2, std::array<double, 4> coeffs, int dim);

  double c1() const { return c1_; }
  double c2() const { return c2_; }
  int dim() const { return dim_; }
  //! (A, B, C, D), highest power first.
  const std::array<double, 4>& coeffs() const { return coeffs_; }

  //! Radial profile; exactly zero outside [c1, c2].
  double profile(double r) const;
  double operator()(std::span<const double> u) const;

  //! Exact minimum of the cubic over [c1, c2].
  double min_on_support() const;

  //! Plain-text record `annulus c1 c2 A B C D dim`.
  std::string to_record() const;

private:
  double c1_;
  double c2_;
  std::array<double, 4> coeffs_;
  int dim_;
};

//! Product Epanechnikov kernel prod_d (3/4)(1 - u_d^2) 1{|u_d| <= 1}.
class ProductEpanechnikov
{
public:
  explicit ProductEpanechnikov(int dim);

  int dim() const { return dim_; }
  static double factor(double u);
  double operator()(std::span<const double> u) const;
  std::string to_record() const;

private:
  int dim_;
};

//! Epanechnikov kernel on (-1, 1), used to smooth products of residuals
//! over lags.
struct CovarianceKernel1D
{
  double operator()(double u) const;
};

//! Asymmetric kernel on [-1, q] with unit mass and zero first moment.
//! At q = 1 it is the Epanechnikov kernel.
class BoundaryKernel
{
public:
  //! q is clamped into [epsilon, 1].
  explicit BoundaryKernel(double q);

  double q() const { return q_; }
  double operator()(double t) const;

private:
  double q_;
  double scale_;
  double slope_;
  double offset_;
};

//! Kernels usable for local linear regression.
using RegressionKernel = std::variant<AnnulusKernel, ProductEpanechnikov>;

//! Builds the annulus kernel on [c1, c2] for dimension `dim`.
//!
//! The normalization constraint eliminates one coefficient; the remaining
//! three are found by a Nelder-Mead search started at the closed-form
//! minimum-variance solution, with positivity enforced by a penalty on a
//! 512-point grid and a final exact feasibility repair. c1 = 0 gives a disk
//! kernel.
AnnulusKernel build_annulus_kernel(double c1, double c2, int dim,
                                   KernelObjective objective);

//! Objective value of `k` under `objective`.
double annulus_objective(const AnnulusKernel& k, KernelObjective objective);

//! Surface area of the unit sphere in R^dim (2 for dim = 1).
double unit_sphere_area(int dim);

KernelMoments kernel_moments(const AnnulusKernel& k, int dim);
KernelMoments kernel_moments(const ProductEpanechnikov& k, int dim);
KernelMoments kernel_moments(const RegressionKernel& k, int dim);
//! One-dimensional moments int u^2 K and int K^2.
KernelMoments kernel_moments(const CovarianceKernel1D& k);
KernelMoments kernel_moments(const BoundaryKernel& k);

//! Moments of a radial kernel given by its profile on [0, support_radius].
//! Throws InvalidArgument for a non-finite support.
KernelMoments radial_kernel_moments(const std::function<double(double)>& profile,
                                    double support_radius, int dim);

double kernel_value(const RegressionKernel& k, std::span<const double> u);
std::string kernel_id(const RegressionKernel& k);
int kernel_dim(const RegressionKernel& k);
bool is_radial(const RegressionKernel& k);

//! Inverse of to_record(); accepts `annulus ...` and `epanechnikov D`.
RegressionKernel parse_kernel_record(const std::string& record);

} // namespace corrsmooth
