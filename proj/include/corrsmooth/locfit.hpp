#pragma once

#include "corrsmooth/errors.hpp"
#include "corrsmooth/kernels.hpp"

#include <Eigen/Core>

#include <span>
#include <string>
#include <vector>

namespace corrsmooth {

enum class Metric
{
  Euclidean,
  //! Great-circle distance in km; columns are (latitude, longitude) in degrees.
  Haversine,
};

Metric parse_metric(const std::string& name);
std::string to_string(Metric metric);

inline constexpr double kEarthRadiusKm = 6371.0088;

//! Great-circle distance in km between (lat, lon) pairs given in degrees.
double haversine_km(double lat1, double lon1, double lat2, double lon2);

using PointMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

//! Design points (one row per observation) with responses and a metric.
//! Immutable after construction.
class Dataset
{
public:
  Dataset(PointMatrix points, Eigen::VectorXd responses, Metric metric = Metric::Euclidean);

  std::size_t size() const { return static_cast<std::size_t>(points_.rows()); }
  int dim() const { return static_cast<int>(points_.cols()); }
  const PointMatrix& points() const { return points_; }
  const Eigen::VectorXd& responses() const { return responses_; }
  Metric metric() const { return metric_; }

  std::span<const double> point(std::size_t i) const
  {
    return {points_.data() + i * points_.cols(), static_cast<std::size_t>(points_.cols())};
  }

  double distance(std::span<const double> a, std::span<const double> b) const;
  double distance(std::size_t i, std::size_t j) const { return distance(point(i), point(j)); }

  //! Same design and metric, different responses.
  Dataset with_responses(Eigen::VectorXd responses) const;

private:
  PointMatrix points_;
  Eigen::VectorXd responses_;
  Metric metric_;
};

//! Thrown when the local weighted least-squares system is singular.
class SingularFitError : public NumericalError
{
public:
  explicit SingularFitError(std::vector<double> x);
  const std::vector<double>& location() const { return x_; }

private:
  std::vector<double> x_;
};

struct FitResult
{
  Eigen::VectorXd fitted;    //!< NaN where the local system was singular
  Eigen::VectorXd residuals; //!< responses - fitted
  Eigen::VectorXd leverage;  //!< diagonal hat coefficients c_ii
  double h = 0.0;
  std::string kernel;
  std::size_t singular_count = 0;
  std::vector<std::size_t> singular_points;
};

//! Local linear estimate at x: intercept of the kernel-weighted least-squares
//! fit of an affine function. Throws SingularFitError.
double fit_at(const Dataset& data, std::span<const double> x, double h,
              const RegressionKernel& k);

//! Fit at every design point; singular points are recorded, not thrown.
FitResult fit_all(const Dataset& data, double h, const RegressionKernel& k);

//! Row i of the smoother matrix: fitted(i) = sum_s c_is Y_s.
Eigen::VectorXd hat_coefficients(const Dataset& data, std::size_t i, double h,
                                 const RegressionKernel& k);

//! (1/n) sum residual^2. Throws NumericalError when any fit was singular.
double rss(const FitResult& fit);

//! Distances from point i to every other point as seen by kernel k at h = 1:
//! the metric distance for radial kernels, the largest coordinate offset for
//! product kernels. Point i itself is excluded.
std::vector<double> kernel_reach(const Dataset& data, std::size_t i, const RegressionKernel& k);

//! Condensed upper-triangle distances, pair (i, j) with i < j stored at
//! pair_index(n, i, j).
std::vector<double> pairwise_distances(const Dataset& data);

inline std::size_t pair_index(std::size_t n, std::size_t i, std::size_t j)
{
  return i * n - i * (i + 1) / 2 + (j - i - 1);
}

} // namespace corrsmooth
