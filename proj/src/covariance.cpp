#include "corrsmooth/covariance.hpp"

#include "corrsmooth/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace corrsmooth {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string window_text(double t, double b)
{
  std::ostringstream os;
  os << "(t=" << t << ", b=" << b << ")";
  return os.str();
}

// Linear interpolation through the valid grid points.
double interpolate(const std::vector<double>& grid, const std::vector<double>& values,
                   const std::vector<bool>& valid, double t)
{
  auto upper = std::lower_bound(grid.begin(), grid.end(), t);
  auto hi = static_cast<std::size_t>(upper - grid.begin());
  if (hi < grid.size() && grid[hi] == t && valid[hi]) {
    return values[hi];
  }
  while (hi < grid.size() && !valid[hi]) {
    ++hi;
  }
  std::size_t lo = static_cast<std::size_t>(upper - grid.begin());
  do {
    --lo;
  } while (lo > 0 && !valid[lo]);
  if (hi >= grid.size()) {
    return values[lo];
  }
  double w = (t - grid[lo]) / (grid[hi] - grid[lo]);
  return values[lo] + w * (values[hi] - values[lo]);
}

} // namespace

// ---------------------------------------------------------------------------

PairSet::PairSet(const Dataset& data) : n_(data.size())
{
  sort_pairs(pairwise_distances(data));
}

PairSet::PairSet(std::span<const double> condensed, std::size_t n) : n_(n)
{
  if (condensed.size() != n * (n - 1) / 2) {
    throw InvalidArgument("condensed distance vector has the wrong length");
  }
  sort_pairs({condensed.begin(), condensed.end()});
}

void PairSet::sort_pairs(std::vector<double> condensed)
{
  if (n_ > std::numeric_limits<std::uint32_t>::max()) {
    throw InvalidArgument("too many points for a pair table");
  }
  std::vector<std::size_t> order(condensed.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return condensed[a] < condensed[b]; });
  // recover (i, j) for each condensed index
  std::vector<std::uint32_t> fi(condensed.size()), se(condensed.size());
  std::size_t k = 0;
  for (std::size_t i = 0; i < n_; ++i) {
    for (std::size_t j = i + 1; j < n_; ++j, ++k) {
      fi[k] = static_cast<std::uint32_t>(i);
      se[k] = static_cast<std::uint32_t>(j);
    }
  }
  dist_.resize(order.size());
  first_.resize(order.size());
  second_.resize(order.size());
  for (std::size_t m = 0; m < order.size(); ++m) {
    dist_[m] = condensed[order[m]];
    first_[m] = fi[order[m]];
    second_[m] = se[order[m]];
  }
}

double PairSet::min_positive_distance() const
{
  auto it = std::upper_bound(dist_.begin(), dist_.end(), 0.0);
  return it == dist_.end() ? 0.0 : *it;
}

double PairSet::median_distance() const
{
  if (dist_.empty()) {
    return 0.0;
  }
  std::size_t m = dist_.size();
  return m % 2 ? dist_[m / 2] : 0.5 * (dist_[m / 2 - 1] + dist_[m / 2]);
}

// ---------------------------------------------------------------------------

double estimate_covariance(std::span<const double> values, const PairSet& pairs, double t, double b)
{
  if (!(b > 0.0) || !std::isfinite(b)) {
    throw InvalidArgument("covariance bandwidth b must be positive");
  }
  if (!(t >= 0.0)) {
    throw InvalidArgument("lag t must be non-negative");
  }
  if (values.size() != pairs.points()) {
    throw InvalidArgument("value vector does not match the pair table");
  }

  const bool boundary = t < b;
  const BoundaryKernel edge(t / b);
  const CovarianceKernel1D interior;
  auto kernel = [&](double u) { return boundary ? edge(u) : interior(u); };

  double num = 0.0, den = 0.0;
  bool any = false;

  // i = j terms sit at distance 0, i.e. u = t / b
  double diag = kernel(t / b);
  if (diag != 0.0) {
    double sq = 0.0;
    for (double v : values) {
      sq += v * v;
    }
    num += diag * sq;
    den += diag * static_cast<double>(values.size());
    any = true;
  }

  const auto& d = pairs.distances();
  double d_lo = boundary ? 0.0 : t - b;
  double d_hi = t + b;
  auto it = std::lower_bound(d.begin(), d.end(), d_lo);
  for (auto k = static_cast<std::size_t>(it - d.begin()); k < d.size() && d[k] <= d_hi; ++k) {
    double w = kernel((t - d[k]) / b);
    if (w == 0.0) {
      continue;
    }
    any = true;
    num += 2.0 * w * values[pairs.first(k)] * values[pairs.second(k)];
    den += 2.0 * w;
  }
  if (!any || !(den > 0.0)) {
    throw NumericalError("no pairs in the covariance window " + window_text(t, b));
  }
  return num / den;
}

double estimate_covariance(std::span<const double> values, std::span<const double> condensed,
                           double t, double b)
{
  return estimate_covariance(values, PairSet(condensed, values.size()), t, b);
}

double variance_bandwidth(double h_o, std::size_t n, int dim)
{
  double nn = static_cast<double>(n);
  return h_o * std::pow(nn, -1.0 / (dim + 8)) / std::pow(nn, -1.0 / (dim + 4));
}

double sigma2_rss(const Dataset& data, double h_t, const RegressionKernel& ko)
{
  if (!(h_t > 0.0)) {
    throw InvalidArgument("variance bandwidth must be positive");
  }
  return rss(fit_all(data, h_t, ko));
}

// ---------------------------------------------------------------------------

std::size_t choose_calibrated(std::span<const double> discrepancy, double delta_n, bool& fallback)
{
  if (discrepancy.empty()) {
    throw InvalidArgument("empty b candidate set");
  }
  for (std::size_t i = discrepancy.size(); i-- > 0;) {
    if (discrepancy[i] <= delta_n) {
      fallback = false;
      return i;
    }
  }
  auto best = std::min_element(discrepancy.begin(), discrepancy.end());
  if (!std::isfinite(*best)) {
    throw NumericalError("no b candidate produced a variance estimate");
  }
  fallback = true;
  return static_cast<std::size_t>(best - discrepancy.begin());
}

std::vector<double> default_b_candidates(const PairSet& pairs, int count)
{
  double lo = pairs.min_positive_distance();
  double hi = 0.5 * pairs.median_distance();
  if (!(lo > 0.0) || !(hi > lo) || count < 1) {
    throw NumericalError("cannot build b candidates from the pair distances");
  }
  std::vector<double> out(static_cast<std::size_t>(count));
  double step = count > 1 ? std::log(hi / lo) / (count - 1) : 0.0;
  for (int i = 0; i < count; ++i) {
    out[static_cast<std::size_t>(i)] = lo * std::exp(step * i);
  }
  if (count > 1) {
    out.back() = hi;
  }
  return out;
}

CalibrationTrace calibrate_b(std::span<const double> residuals, const PairSet& pairs,
                             double sigma2_hat, std::span<const double> b_candidates,
                             double delta_n, bool refine)
{
  if (b_candidates.empty()) {
    throw InvalidArgument("empty b candidate set");
  }
  if (!(delta_n >= 0.0)) {
    throw InvalidArgument("delta_n must be non-negative");
  }
  for (std::size_t i = 1; i < b_candidates.size(); ++i) {
    if (!(b_candidates[i] > b_candidates[i - 1])) {
      throw InvalidArgument("b candidates must be strictly increasing");
    }
  }
  auto tilde = [&](double b) {
    try {
      return estimate_covariance(residuals, pairs, 0.0, b);
    } catch (const NumericalError&) {
      return kNaN;
    }
  };

  struct Point
  {
    double b, tilde;
    bool refined;
  };
  std::vector<Point> points;
  for (double b : b_candidates) {
    points.push_back({b, tilde(b), false});
  }

  if (refine && delta_n > 0.0) {
    auto within = [&](double t) { return std::abs(t - sigma2_hat) <= delta_n; };
    std::size_t last_ok = points.size();
    for (std::size_t i = points.size(); i-- > 0;) {
      if (within(points[i].tilde)) {
        last_ok = i;
        break;
      }
    }
    // only brackets above the largest qualifying candidate can change the choice
    for (std::size_t i = points.size() - 1; i > 0 && (last_ok == points.size() || i > last_ok);
         --i) {
      double g_lo = points[i - 1].tilde - sigma2_hat;
      double g_hi = points[i].tilde - sigma2_hat;
      if (!std::isfinite(g_lo) || !std::isfinite(g_hi) || (g_lo > 0.0) == (g_hi > 0.0)) {
        continue;
      }
      double lo = std::log(points[i - 1].b), hi = std::log(points[i].b);
      std::vector<Point> added;
      bool found = false;
      for (int it = 0; it < 60 && !found; ++it) {
        double mid = 0.5 * (lo + hi);
        double t = tilde(std::exp(mid));
        if (!std::isfinite(t)) {
          break;
        }
        added.push_back({std::exp(mid), t, true});
        found = within(t);
        if ((t - sigma2_hat > 0.0) == (g_lo > 0.0)) {
          lo = mid;
        } else {
          hi = mid;
        }
      }
      points.insert(points.end(), added.begin(), added.end());
      if (found) {
        break;
      }
    }
    std::sort(points.begin(), points.end(),
              [](const Point& a, const Point& b) { return a.b < b.b; });
  }

  CalibrationTrace trace;
  trace.sigma2_hat = sigma2_hat;
  trace.delta_n = delta_n;
  for (const auto& p : points) {
    trace.b_candidates.push_back(p.b);
    trace.sigma2_tilde.push_back(p.tilde);
    trace.discrepancy.push_back(std::isfinite(p.tilde) ? std::abs(sigma2_hat - p.tilde) : kInf);
    trace.refined.push_back(p.refined);
  }
  trace.chosen_index = choose_calibrated(trace.discrepancy, delta_n, trace.fallback);
  trace.chosen_b = trace.b_candidates[trace.chosen_index];
  return trace;
}

// ---------------------------------------------------------------------------

double CovarianceEstimate::value(double t) const
{
  if (t <= 0.0) {
    return sigma2_tilde;
  }
  if (t >= truncation_t) {
    return 0.0;
  }
  return interpolate(t_grid, c_hat, valid, t);
}

double default_truncation(std::span<const double> residuals, const PairSet& pairs, double b,
                          int n_star, double fraction)
{
  double c0 = estimate_covariance(residuals, pairs, 0.0, b);
  double span = 0.5 * pairs.max_distance();
  for (int k = 1; k <= n_star; ++k) {
    double t = span * k / n_star;
    double c;
    try {
      c = estimate_covariance(residuals, pairs, t, b);
    } catch (const NumericalError&) {
      continue;
    }
    if (c <= 0.0 || c < fraction * c0) {
      return t;
    }
  }
  return span;
}

CovarianceEstimate covariance_curve(std::span<const double> residuals, const PairSet& pairs,
                                    double b, int n_star, double truncation_t)
{
  if (n_star < 2) {
    throw InvalidArgument("n_star must be at least 2");
  }
  if (!(truncation_t >= 0.0)) {
    throw InvalidArgument("truncation lag must be non-negative");
  }
  CovarianceEstimate out;
  out.b = b;
  out.truncation_t = truncation_t;
  out.sigma2_tilde = estimate_covariance(residuals, pairs, 0.0, b);
  out.t_grid.push_back(0.0);
  out.c_hat.push_back(out.sigma2_tilde);
  out.valid.push_back(true);
  if (truncation_t > 0.0) {
    for (int k = 1; k <= n_star; ++k) {
      double t = truncation_t * k / n_star;
      out.t_grid.push_back(t);
      if (k == n_star) {
        out.c_hat.push_back(0.0);
        out.valid.push_back(true);
        continue;
      }
      try {
        out.c_hat.push_back(estimate_covariance(residuals, pairs, t, b));
        out.valid.push_back(true);
      } catch (const NumericalError&) {
        out.c_hat.push_back(kNaN);
        out.valid.push_back(false);
        ++out.dropped;
      }
    }
  }
  for (std::size_t k = 0; k < out.c_hat.size(); ++k) {
    if (out.valid[k] && std::abs(out.c_hat[k]) > 1.5 * std::abs(out.sigma2_tilde)) {
      out.out_of_range = true;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

CorrelationMode parse_correlation_mode(const std::string& name)
{
  if (name == "ByChat0" || name == "chat0") {
    return CorrelationMode::ByChat0;
  }
  if (name == "BySigma2Hat" || name == "sigma2hat") {
    return CorrelationMode::BySigma2Hat;
  }
  throw InvalidArgument("unknown correlation mode '" + name + "'");
}

double CorrelationEstimate::value(double t) const
{
  double v;
  if (t <= 0.0) {
    v = rho.front();
  } else if (t >= truncation_t) {
    v = 0.0;
  } else {
    v = interpolate(t_grid, rho, valid, t);
  }
  return std::clamp(v, -1.0, 1.0);
}

CorrelationEstimate estimate_correlation(const CovarianceEstimate& cov, CorrelationMode mode)
{
  double den = mode == CorrelationMode::ByChat0 ? cov.c_hat.front() : cov.sigma2_hat;
  if (!(den > 0.0)) {
    throw NumericalError("correlation denominator is not positive");
  }
  CorrelationEstimate out;
  out.t_grid = cov.t_grid;
  out.valid = cov.valid;
  out.truncation_t = cov.truncation_t;
  out.denominator = den;
  out.rho.resize(cov.c_hat.size());
  out.clamped.assign(cov.c_hat.size(), false);
  for (std::size_t k = 0; k < cov.c_hat.size(); ++k) {
    double r = cov.c_hat[k] / den;
    if (cov.valid[k] && (r > 1.0 || r < -1.0)) {
      r = std::clamp(r, -1.0, 1.0);
      out.clamped[k] = true;
      out.any_clamped = true;
    }
    out.rho[k] = r;
  }
  return out;
}

CovarianceReport estimate_error_covariance(std::span<const double> residuals,
                                           const PairSet& pairs, double sigma2_reference,
                                           const CovarianceOptions& options)
{
  CovarianceReport out;
  auto candidates = default_b_candidates(pairs, options.b_count);
  out.calibration = calibrate_b(residuals, pairs, sigma2_reference, candidates, options.delta_n,
                                options.refine);
  double b = out.calibration.chosen_b;
  double trunc = options.truncation_t >= 0.0
                   ? options.truncation_t
                   : default_truncation(residuals, pairs, b, options.n_star,
                                        options.truncation_fraction);
  out.covariance = covariance_curve(residuals, pairs, b, options.n_star, trunc);
  out.covariance.sigma2_hat = sigma2_reference;
  out.correlation = estimate_correlation(out.covariance, options.mode);
  return out;
}

} // namespace corrsmooth
