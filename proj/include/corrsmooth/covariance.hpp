#pragma once

#include "corrsmooth/kernels.hpp"
#include "corrsmooth/locfit.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace corrsmooth {

//! Unordered pairs (i < j) sorted by distance. Built once per design and
//! shared read-only by every covariance evaluation.
class PairSet
{
public:
  explicit PairSet(const Dataset& data);
  //! From condensed distances as produced by pairwise_distances().
  PairSet(std::span<const double> condensed, std::size_t n);

  std::size_t points() const { return n_; }
  std::size_t size() const { return dist_.size(); }
  const std::vector<double>& distances() const { return dist_; }
  std::uint32_t first(std::size_t k) const { return first_[k]; }
  std::uint32_t second(std::size_t k) const { return second_[k]; }

  double min_positive_distance() const;
  double median_distance() const;
  double max_distance() const { return dist_.empty() ? 0.0 : dist_.back(); }

private:
  void sort_pairs(std::vector<double> condensed);

  std::size_t n_ = 0;
  std::vector<double> dist_;
  std::vector<std::uint32_t> first_;
  std::vector<std::uint32_t> second_;
};

//! Kernel-smoothed covariance of `values` at lag t with bandwidth b, summed
//! over all ordered pairs including i = j. Lags t < b use the boundary
//! kernel with q = t/b (q clamped to machine epsilon at t = 0).
//! Throws NumericalError when the window holds no pairs or the total kernel
//! weight is not positive.
double estimate_covariance(std::span<const double> values, const PairSet& pairs, double t,
                           double b);
double estimate_covariance(std::span<const double> values, std::span<const double> condensed,
                           double t, double b);

//! Bandwidth for the RSS variance estimate:
//! h_T = h_o * n^(-1/(D+8)) / n^(-1/(D+4)).
double variance_bandwidth(double h_o, std::size_t n, int dim);

//! (1/n) sum (Y_i - mu_hat(X_i))^2 with the fit at bandwidth h_T.
double sigma2_rss(const Dataset& data, double h_t, const RegressionKernel& ko);

struct CalibrationTrace
{
  std::vector<double> b_candidates;
  std::vector<double> sigma2_tilde; //!< C_hat(0) per candidate, NaN if empty window
  std::vector<double> discrepancy;  //!< |sigma2_hat - sigma2_tilde|, +inf if empty
  std::vector<bool> refined;        //!< added by bracket refinement
  double sigma2_hat = 0.0;
  double delta_n = 2e-4;
  double chosen_b = 0.0;
  std::size_t chosen_index = 0;
  //! No candidate met delta_n; chosen_b is the argmin of the discrepancy.
  bool fallback = false;
};

inline constexpr double kDefaultDeltaN = 2e-4;

//! Largest index with discrepancy <= delta_n, else the argmin (fallback).
std::size_t choose_calibrated(std::span<const double> discrepancy, double delta_n,
                              bool& fallback);

//! 25 log-spaced values from the smallest positive pair distance to half the
//! median pair distance.
std::vector<double> default_b_candidates(const PairSet& pairs, int count = 25);

//! Evaluates sigma2_tilde(b) = C_hat(0; b) on the candidates. With `refine`,
//! the topmost bracket where sigma2_tilde - sigma2_hat changes sign is
//! bisected (in log b) until a point within delta_n is found; the curve is
//! continuous in b, so a sign change always contains such a point for
//! delta_n > 0. Refined points join the trace in sorted order.
CalibrationTrace calibrate_b(std::span<const double> residuals, const PairSet& pairs,
                             double sigma2_hat, std::span<const double> b_candidates,
                             double delta_n = kDefaultDeltaN, bool refine = true);

struct CovarianceEstimate
{
  std::vector<double> t_grid; //!< t_0 = 0 then n_star points on (0, truncation_t]
  std::vector<double> c_hat;
  std::vector<bool> valid;    //!< false where the window held no pairs
  double b = 0.0;
  double sigma2_hat = 0.0;    //!< RSS variance estimate (0 when not supplied)
  double sigma2_tilde = 0.0;  //!< C_hat(0)
  double truncation_t = 0.0;
  std::size_t dropped = 0;
  //! Some |c_hat| exceeds 1.5 * sigma2_tilde.
  bool out_of_range = false;

  //! Linear interpolation over valid grid points; exactly 0 for
  //! t >= truncation_t (t > 0) and sigma2_tilde at t = 0.
  double value(double t) const;
};

//! Smallest t where the pilot curve (n_star points over (0, max/2]) changes
//! sign or drops below `fraction` * C_hat(0).
double default_truncation(std::span<const double> residuals, const PairSet& pairs, double b,
                          int n_star = 200, double fraction = 0.02);

CovarianceEstimate covariance_curve(std::span<const double> residuals, const PairSet& pairs,
                                    double b, int n_star, double truncation_t);

enum class CorrelationMode
{
  ByChat0,
  BySigma2Hat,
};

CorrelationMode parse_correlation_mode(const std::string& name);

struct CorrelationEstimate
{
  std::vector<double> t_grid;
  std::vector<double> rho;
  std::vector<bool> valid;
  std::vector<bool> clamped;
  bool any_clamped = false;
  double denominator = 1.0;
  double truncation_t = 0.0;

  //! Interpolated correlation at lag t, clamped to [-1, 1].
  double value(double t) const;
};

//! Divides the curve by C_hat(0) or by sigma2_hat; values are clamped to
//! [-1, 1]. Throws NumericalError for a non-positive denominator.
CorrelationEstimate estimate_correlation(const CovarianceEstimate& cov, CorrelationMode mode);

struct CovarianceOptions
{
  double delta_n = kDefaultDeltaN;
  int n_star = 200;
  int b_count = 25;
  bool refine = true;
  //! Negative: pick by default_truncation().
  double truncation_t = -1.0;
  double truncation_fraction = 0.02;
  CorrelationMode mode = CorrelationMode::ByChat0;
};

struct CovarianceReport
{
  CalibrationTrace calibration;
  CovarianceEstimate covariance;
  CorrelationEstimate correlation;
};

//! Calibrated b, truncation, curve and correlation for the given residuals
//! and reference variance.
CovarianceReport estimate_error_covariance(std::span<const double> residuals,
                                           const PairSet& pairs, double sigma2_reference,
                                           const CovarianceOptions& options = {});

} // namespace corrsmooth
