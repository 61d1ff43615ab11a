#pragma once

#include "corrsmooth/locfit.hpp"
#include "corrsmooth/rng.hpp"
#include "corrsmooth/simulate.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

namespace fixtures {

using namespace corrsmooth;

//! Synthetic stand-in for a county-level health outcome table: 1064 sites on
//! a lat/lon patch, smooth trend plus exponentially correlated noise in km.
struct GeoFixture
{
  std::size_t n = 1064;
  double lat_lo = 30.0, lat_hi = 36.0;
  double lon_lo = -100.0, lon_hi = -92.0;
  double range_km = 40.0;
  double sigma2 = 0.1;
  std::uint64_t seed = 1064;
};

inline Dataset make_geo_dataset(const GeoFixture& f = {})
{
  using std::numbers::pi;
  Rng rng(f.seed);
  const auto n = static_cast<Eigen::Index>(f.n);
  PointMatrix x(n, 2);
  for (Eigen::Index i = 0; i < n; ++i) {
    x(i, 0) = f.lat_lo + (f.lat_hi - f.lat_lo) * rng.uniform();
    x(i, 1) = f.lon_lo + (f.lon_hi - f.lon_lo) * rng.uniform();
  }
  Eigen::MatrixXd sigma(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    sigma(i, i) = f.sigma2;
    for (Eigen::Index j = i + 1; j < n; ++j) {
      double d = haversine_km(x(i, 0), x(i, 1), x(j, 0), x(j, 1));
      sigma(i, j) = sigma(j, i) = f.sigma2 * std::exp(-d / f.range_km);
    }
  }
  Eigen::VectorXd eps = ErrorSampler(sigma, f.sigma2).sample(rng);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double u = (x(i, 0) - f.lat_lo) / (f.lat_hi - f.lat_lo);
    double v = (x(i, 1) - f.lon_lo) / (f.lon_hi - f.lon_lo);
    y[i] = 3.0 + u * u + std::sin(pi * v) + eps[i];
  }
  return Dataset(std::move(x), std::move(y), Metric::Haversine);
}

inline void write_dataset_csv(const std::filesystem::path& path, const Dataset& data)
{
  std::ofstream out(path);
  for (int d = 0; d < data.dim(); ++d) {
    out << "x" << d + 1 << ",";
  }
  out << "y\n";
  out.precision(17);
  for (std::size_t i = 0; i < data.size(); ++i) {
    for (double v : data.point(i)) {
      out << v << ",";
    }
    out << data.responses()[static_cast<Eigen::Index>(i)] << "\n";
  }
}

} // namespace fixtures
