#include "corrsmooth/bandwidth.hpp"
#include "corrsmooth/covariance.hpp"
#include "corrsmooth/simulate.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

using namespace corrsmooth;

namespace {

Dataset random_design(std::size_t n, std::uint64_t seed)
{
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  PointMatrix x(static_cast<Eigen::Index>(n), 2);
  Eigen::VectorXd y(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    x(i, 0) = unif(gen);
    x(i, 1) = unif(gen);
    y(i) = unif(gen) - 0.5;
  }
  return Dataset(x, y);
}

std::span<const double> as_span(const Eigen::VectorXd& v)
{
  return {v.data(), static_cast<std::size_t>(v.size())};
}

// Ordered double sum over every (i, j), written from the definition.
double brute_covariance(const Dataset& data, const Eigen::VectorXd& v, double t, double b)
{
  const double q = t < b ? std::max(t / b, std::numeric_limits<double>::epsilon()) : 1.0;
  auto kern = [&](double u) {
    if (u < -1.0 || u > q) {
      return 0.0;
    }
    if (q >= 1.0) {
      return 0.75 * (1.0 - u * u);
    }
    return 12.0 * (u + 1.0) / std::pow(1.0 + q, 4) *
           (u * (1.0 - 2.0 * q) + (3.0 * q * q - 2.0 * q + 1.0) / 2.0);
  };
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    for (std::size_t j = 0; j < data.size(); ++j) {
      double w = kern((t - data.distance(i, j)) / b);
      num += w * v(static_cast<Eigen::Index>(i)) * v(static_cast<Eigen::Index>(j));
      den += w;
    }
  }
  return num / den;
}

SimScenario sp3(std::uint64_t seed)
{
  SimScenario s;
  s.model.family = CorrelationFamily::Spherical;
  s.model.c = 3.0;
  s.seed = seed;
  return s;
}

} // namespace

TEST_CASE("constant residuals give s^2 in every window")
{
  Dataset data = random_design(80, 1);
  PairSet pairs(data);
  std::vector<double> v(80, 0.3);
  for (double t : {0.0, 0.05, 0.1, 0.3}) {
    for (double b : {0.02, 0.08, 0.2}) {
      CHECK(estimate_covariance(v, pairs, t, b) == doctest::Approx(0.09).epsilon(1e-13));
    }
  }
}

TEST_CASE("estimate matches the ordered double sum")
{
  Dataset data = random_design(70, 2);
  PairSet pairs(data);
  const Eigen::VectorXd& v = data.responses();
  for (double t : {0.0, 0.01, 0.05, 0.12, 0.4}) {
    for (double b : {0.03, 0.1, 0.25}) {
      CAPTURE(t);
      CAPTURE(b);
      CHECK(estimate_covariance(as_span(v), pairs, t, b) ==
            doctest::Approx(brute_covariance(data, v, t, b)).epsilon(1e-11));
    }
  }
  auto condensed = pairwise_distances(data);
  CHECK(estimate_covariance(as_span(v), condensed, 0.05, 0.1) ==
        estimate_covariance(as_span(v), pairs, 0.05, 0.1));
}

TEST_CASE("empty windows name the lag and bandwidth")
{
  PointMatrix x(4, 2);
  x << 0.0, 0.0, 0.0, 1.0, 1.0, 0.0, 1.0, 1.0;
  Dataset data(x, Eigen::VectorXd::Ones(4));
  PairSet pairs(data);
  std::vector<double> v(4, 1.0);
  CHECK_THROWS_WITH_AS(estimate_covariance(v, pairs, 0.5, 0.1),
                       doctest::Contains("no pairs in the covariance window"), NumericalError);
  CHECK_THROWS_AS(estimate_covariance(v, pairs, 0.5, 0.0), InvalidArgument);
  CHECK_THROWS_AS(estimate_covariance(v, pairs, -0.1, 0.1), InvalidArgument);
}

TEST_CASE("largest qualifying candidate wins")
{
  bool fallback = true;
  std::vector<double> d{3e-4, 1e-4, 1e-4, 5e-4};
  CHECK(choose_calibrated(d, 2e-4, fallback) == 2);
  CHECK_FALSE(fallback);
  std::vector<double> all{1e-5, 2e-5, 0.0};
  CHECK(choose_calibrated(all, 2e-4, fallback) == 2);
  std::vector<double> none{3e-4, 2.5e-4, 9e-4};
  CHECK(choose_calibrated(none, 2e-4, fallback) == 1);
  CHECK(fallback);
}

TEST_CASE("variance bandwidth exponent arithmetic")
{
  CHECK(variance_bandwidth(0.2, 500, 2) ==
        doctest::Approx(0.2 * std::pow(500.0, 1.0 / 15.0)).epsilon(1e-14));
  CHECK(variance_bandwidth(0.2, 1, 2) == doctest::Approx(0.2).epsilon(1e-15));
}

TEST_CASE("zero-noise affine data gives a vanishing variance estimate")
{
  Dataset design = random_design(200, 3);
  Eigen::VectorXd y(200);
  for (Eigen::Index i = 0; i < 200; ++i) {
    y(i) = 2.0 - design.points()(i, 0) + 3.0 * design.points()(i, 1);
  }
  Dataset data = design.with_responses(y);
  CHECK(sigma2_rss(data, 0.3, ProductEpanechnikov(2)) < 1e-16);
}

TEST_CASE("default b candidates span the pair distances")
{
  Dataset data = random_design(60, 4);
  PairSet pairs(data);
  auto b = default_b_candidates(pairs);
  REQUIRE(b.size() == 25);
  CHECK(b.front() == doctest::Approx(pairs.min_positive_distance()));
  CHECK(b.back() == 0.5 * pairs.median_distance());
  for (std::size_t k = 1; k < b.size(); ++k) {
    CHECK(b[k] > b[k - 1]);
  }
}

TEST_CASE("correlation modes")
{
  CovarianceEstimate cov;
  cov.t_grid = {0.0, 0.1, 0.2};
  cov.c_hat = {0.1, 0.05, 0.0};
  cov.valid = {true, true, true};
  cov.sigma2_tilde = 0.1;
  cov.sigma2_hat = 0.1;
  cov.truncation_t = 0.2;
  auto by_hat = estimate_correlation(cov, CorrelationMode::BySigma2Hat);
  CHECK(by_hat.rho[0] == 1.0);
  CHECK(by_hat.rho[1] == 0.5);
  CHECK(by_hat.rho[2] == 0.0);

  cov.sigma2_tilde = 0.08;
  cov.c_hat[0] = 0.08;
  auto by_c0 = estimate_correlation(cov, CorrelationMode::ByChat0);
  CHECK(by_c0.rho[0] == 1.0);
  CHECK(by_c0.rho[1] == doctest::Approx(0.625));

  // 0.1 / 0.08 is clamped
  cov.c_hat[1] = 0.1;
  auto clamped = estimate_correlation(cov, CorrelationMode::ByChat0);
  CHECK(clamped.rho[1] == 1.0);
  CHECK(clamped.any_clamped);

  cov.sigma2_hat = 0.0;
  CHECK_THROWS_AS(estimate_correlation(cov, CorrelationMode::BySigma2Hat), NumericalError);
  CHECK(parse_correlation_mode("sigma2hat") == CorrelationMode::BySigma2Hat);
  CHECK_THROWS_AS(parse_correlation_mode("median"), InvalidArgument);
}

TEST_CASE("degenerate truncation and interpolation")
{
  auto sim = generate(sp3(5));
  PairSet pairs(sim.data);
  auto eps = as_span(sim.errors);
  auto zero = covariance_curve(eps, pairs, 0.02, 50, 0.0);
  CHECK(zero.value(0.0) == zero.sigma2_tilde);
  CHECK(zero.value(1e-6) == 0.0);
  CHECK(zero.value(0.3) == 0.0);

  auto cov = covariance_curve(eps, pairs, 0.02, 50, 0.2);
  REQUIRE(cov.t_grid.size() == 51);
  CHECK(cov.t_grid.front() == 0.0);
  CHECK(cov.t_grid.back() == doctest::Approx(0.2));
  for (std::size_t k = 1; k + 1 < cov.t_grid.size(); ++k) {
    REQUIRE(cov.valid[k]);
    CHECK(cov.value(cov.t_grid[k]) == cov.c_hat[k]);
    double mid = 0.5 * (cov.t_grid[k] + cov.t_grid[k + 1]);
    if (cov.valid[k + 1]) {
      CHECK(std::abs(cov.value(mid) - 0.5 * (cov.c_hat[k] + cov.c_hat[k + 1])) < 1e-15);
    }
  }
  CHECK(cov.value(0.25) == 0.0);
}

TEST_CASE("true errors reproduce the model covariance")
{
  for (std::uint64_t seed : {41u, 42u, 43u}) {
    CAPTURE(seed);
    SimScenario s = sp3(seed);
    auto sim = generate(s);
    PairSet pairs(sim.data);
    double ref = sim.errors.squaredNorm() / 500.0;
    auto report = estimate_error_covariance(as_span(sim.errors), pairs, ref);
    const double n = 500.0;
    const double range = s.model.c / std::sqrt(n);
    const double t_half = 0.5 * range;
    double truth_half = s.model.sigma2 * correlation_value(s.model, t_half, n);
    CHECK(std::abs(report.covariance.value(t_half) - truth_half) < 0.03);
    double worst = 0.0;
    for (double t : report.covariance.t_grid) {
      if (t > 0.8 * range) {
        break;
      }
      worst = std::max(worst, std::abs(report.covariance.value(t) -
                                        s.model.sigma2 * correlation_value(s.model, t, n)));
    }
    CHECK(worst < 0.05);
  }
}

TEST_CASE("pipeline calibration on SP(c=3) meets delta_n")
{
  auto sim = generate(sp3(7));
  auto fs = select_factor_bandwidth(sim.data, 2.0, 2.5, KernelObjective::MinProduct);
  ProductEpanechnikov ko(2);
  double h_o = fs.selection.h_o;
  auto fit = fit_all(sim.data, h_o, ko);
  double s2 = sigma2_rss(sim.data, variance_bandwidth(h_o, 500, 2), ko);
  CHECK((s2 - 0.1) * (s2 - 0.1) < 1e-3);
  PairSet pairs(sim.data);
  auto report = estimate_error_covariance(as_span(fit.residuals), pairs, s2);
  CHECK_FALSE(report.calibration.fallback);
  CHECK(std::abs(report.covariance.sigma2_tilde - s2) <= 2e-4);
  CHECK(report.correlation.rho[0] == 1.0);
  for (double r : report.correlation.rho) {
    CHECK(std::abs(r) <= 1.0);
  }

  // delta_n = 0 cannot be met by a continuous curve
  CovarianceOptions strict;
  strict.delta_n = 0.0;
  auto fb = estimate_error_covariance(as_span(fit.residuals), pairs, s2, strict);
  CHECK(fb.calibration.fallback);
}

TEST_CASE("scale equivariance")
{
  auto sim = generate(sp3(9));
  PairSet pairs(sim.data);
  Eigen::VectorXd e = sim.errors, e2 = 2.0 * sim.errors, e3 = 3.0 * sim.errors;
  for (double t : {0.0, 0.03, 0.1}) {
    double c = estimate_covariance(as_span(e), pairs, t, 0.04);
    CHECK(estimate_covariance(as_span(e2), pairs, t, 0.04) == 4.0 * c);
    CHECK(estimate_covariance(as_span(e3), pairs, t, 0.04) == doctest::Approx(9.0 * c).epsilon(1e-13));
  }
  auto c1 = covariance_curve(as_span(e), pairs, 0.04, 40, 0.2);
  auto c2 = covariance_curve(as_span(e2), pairs, 0.04, 40, 0.2);
  auto r1 = estimate_correlation(c1, CorrelationMode::ByChat0);
  auto r2 = estimate_correlation(c2, CorrelationMode::ByChat0);
  for (std::size_t k = 0; k < r1.rho.size(); ++k) {
    CHECK(r1.rho[k] == r2.rho[k]);
  }
}

TEST_CASE("relabeling the sample leaves the estimate unchanged")
{
  Dataset data = random_design(90, 10);
  std::vector<Eigen::Index> perm(90);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), std::mt19937_64(11));
  PointMatrix x(90, 2);
  Eigen::VectorXd v(90);
  for (Eigen::Index i = 0; i < 90; ++i) {
    x.row(i) = data.points().row(perm[static_cast<std::size_t>(i)]);
    v(i) = data.responses()(perm[static_cast<std::size_t>(i)]);
  }
  Dataset shuffled(x, v);
  PairSet a(data), b(shuffled);
  for (double t : {0.0, 0.05, 0.2}) {
    CHECK(estimate_covariance(as_span(data.responses()), a, t, 0.1) ==
          doctest::Approx(estimate_covariance(as_span(v), b, t, 0.1)).epsilon(1e-12));
  }
}

TEST_CASE("no jump where the boundary kernel hands over at t = b")
{
  auto sim = generate(sp3(12));
  PairSet pairs(sim.data);
  auto eps = as_span(sim.errors);
  const double b = 0.05;
  double below = estimate_covariance(eps, pairs, b * (1.0 - 1e-10), b);
  double above = estimate_covariance(eps, pairs, b, b);
  CHECK(std::abs(below - above) < 1e-6);

  auto cov = covariance_curve(eps, pairs, b, 40, 0.4);
  std::size_t k = 1;
  while (cov.t_grid[k] < b) {
    ++k;
  }
  REQUIRE(k >= 2);
  REQUIRE(k + 1 < cov.t_grid.size());
  double jump = std::abs(cov.c_hat[k] - cov.c_hat[k - 1]);
  double left = std::abs(cov.c_hat[k - 1] - cov.c_hat[k - 2]);
  double right = std::abs(cov.c_hat[k + 1] - cov.c_hat[k]);
  CHECK(jump <= 3.0 * std::max(left, right));
}

TEST_CASE("refined calibration points sit inside the sign-change bracket")
{
  auto sim = generate(sp3(13));
  PairSet pairs(sim.data);
  auto eps = as_span(sim.errors);
  double ref = 0.1;
  auto cands = default_b_candidates(pairs);
  auto plain = calibrate_b(eps, pairs, ref, cands, 2e-4, false);
  auto refined = calibrate_b(eps, pairs, ref, cands, 2e-4, true);
  CHECK(plain.b_candidates.size() == 25);
  CHECK(std::is_sorted(refined.b_candidates.begin(), refined.b_candidates.end()));
  CHECK(refined.b_candidates.size() >= plain.b_candidates.size());
  if (!refined.fallback) {
    CHECK(refined.discrepancy[refined.chosen_index] <= 2e-4);
  }
  CHECK(refined.chosen_b >= (plain.fallback ? 0.0 : plain.chosen_b));
}
