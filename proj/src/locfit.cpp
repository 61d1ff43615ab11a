#include "corrsmooth/locfit.hpp"

#include "corrsmooth/parallel.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace corrsmooth {

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;
constexpr double kPivotRatio = 1e-12;

double wrap_degrees(double d)
{
  while (d > 180.0) {
    d -= 360.0;
  }
  while (d < -180.0) {
    d += 360.0;
  }
  return d;
}

// Scaled offsets z = (X_s - x) / h and scaled radial distance r for every
// design point, evaluated lazily per point.
class LocalFrame
{
public:
  LocalFrame(const Dataset& data, std::span<const double> x, double h)
    : data_(data), x_(x), inv_h_(1.0 / h)
  {
    if (data.metric() == Metric::Haversine) {
      lon_scale_ = kEarthRadiusKm * kDegToRad * std::cos(x[0] * kDegToRad);
    }
  }

  // Fills z (length D) and returns r.
  double offsets(std::size_t s, double* z) const
  {
    auto p = data_.point(s);
    const int dim = data_.dim();
    if (data_.metric() == Metric::Haversine) {
      z[0] = (p[0] - x_[0]) * kEarthRadiusKm * kDegToRad * inv_h_;
      z[1] = wrap_degrees(p[1] - x_[1]) * lon_scale_ * inv_h_;
      return haversine_km(x_[0], x_[1], p[0], p[1]) * inv_h_;
    }
    double r2 = 0.0;
    for (int d = 0; d < dim; ++d) {
      z[d] = (p[d] - x_[d]) * inv_h_;
      r2 += z[d] * z[d];
    }
    return std::sqrt(r2);
  }

private:
  const Dataset& data_;
  std::span<const double> x_;
  double inv_h_;
  double lon_scale_ = 0.0;
};

struct LocalSolution
{
  bool ok = false;
  Eigen::VectorXd v; // M^{-1} e1
  double fitted = std::numeric_limits<double>::quiet_NaN();
  double self_weight = 0.0;
};

// Solves M v = e1 by Gaussian elimination with partial pivoting; fails when
// the smallest pivot is below kPivotRatio times the largest.
bool solve_first_unit(Eigen::MatrixXd m, Eigen::VectorXd& v)
{
  const int p = static_cast<int>(m.rows());
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(p);
  rhs[0] = 1.0;
  double max_pivot = 0.0;
  double min_pivot = std::numeric_limits<double>::infinity();
  for (int c = 0; c < p; ++c) {
    int piv = c;
    for (int r = c + 1; r < p; ++r) {
      if (std::abs(m(r, c)) > std::abs(m(piv, c))) {
        piv = r;
      }
    }
    if (piv != c) {
      m.row(c).swap(m.row(piv));
      std::swap(rhs[c], rhs[piv]);
    }
    double pivot = std::abs(m(c, c));
    max_pivot = std::max(max_pivot, pivot);
    min_pivot = std::min(min_pivot, pivot);
    if (pivot == 0.0) {
      return false;
    }
    for (int r = c + 1; r < p; ++r) {
      double f = m(r, c) / m(c, c);
      m.row(r).tail(p - c) -= f * m.row(c).tail(p - c);
      rhs[r] -= f * rhs[c];
    }
  }
  if (!(max_pivot > 0.0) || min_pivot < kPivotRatio * max_pivot) {
    return false;
  }
  v.resize(p);
  for (int r = p - 1; r >= 0; --r) {
    double acc = rhs[r];
    for (int c = r + 1; c < p; ++c) {
      acc -= m(r, c) * v[c];
    }
    v[r] = acc / m(r, r);
  }
  return true;
}

double weight_at(const RegressionKernel& k, const double* z, int dim, double r)
{
  if (const auto* annulus = std::get_if<AnnulusKernel>(&k)) {
    return annulus->profile(r);
  }
  double w = 1.0;
  for (int d = 0; d < dim && w > 0.0; ++d) {
    w *= ProductEpanechnikov::factor(z[d]);
  }
  return w;
}

LocalSolution local_solve(const Dataset& data, std::span<const double> x, double h,
                          const RegressionKernel& k, std::size_t self)
{
  const int dim = data.dim();
  const int p = dim + 1;
  LocalFrame frame(data, x, h);
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(p, p);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(p);
  std::vector<double> z(static_cast<std::size_t>(dim));
  Eigen::VectorXd row(p);
  LocalSolution out;
  const auto& y = data.responses();

  for (std::size_t s = 0; s < data.size(); ++s) {
    double r = frame.offsets(s, z.data());
    double w = weight_at(k, z.data(), dim, r);
    if (w == 0.0) {
      continue;
    }
    if (s == self) {
      out.self_weight = w;
    }
    row[0] = 1.0;
    for (int d = 0; d < dim; ++d) {
      row[d + 1] = z[d];
    }
    m.selfadjointView<Eigen::Lower>().rankUpdate(row, w);
    b += (w * y[static_cast<Eigen::Index>(s)]) * row;
  }
  m.triangularView<Eigen::StrictlyUpper>() = m.transpose();

  out.ok = solve_first_unit(m, out.v);
  if (out.ok) {
    out.fitted = out.v.dot(b);
  }
  return out;
}

void check_inputs(const Dataset& data, double h, const RegressionKernel& k)
{
  if (!(h > 0.0) || !std::isfinite(h)) {
    throw InvalidArgument("bandwidth must be positive and finite");
  }
  if (kernel_dim(k) != data.dim()) {
    throw InvalidArgument("kernel dimension does not match the data dimension");
  }
}

} // namespace

Metric parse_metric(const std::string& name)
{
  if (name == "euclidean" || name == "Euclidean") {
    return Metric::Euclidean;
  }
  if (name == "haversine" || name == "Haversine") {
    return Metric::Haversine;
  }
  throw InvalidArgument("unknown metric '" + name + "'");
}

std::string to_string(Metric metric)
{
  return metric == Metric::Haversine ? "haversine" : "euclidean";
}

double haversine_km(double lat1, double lon1, double lat2, double lon2)
{
  double p1 = lat1 * kDegToRad, p2 = lat2 * kDegToRad;
  double dp = p2 - p1;
  double dl = (lon2 - lon1) * kDegToRad;
  double a = std::sin(dp / 2) * std::sin(dp / 2) +
             std::cos(p1) * std::cos(p2) * std::sin(dl / 2) * std::sin(dl / 2);
  return 2.0 * kEarthRadiusKm * std::asin(std::min(1.0, std::sqrt(a)));
}

Dataset::Dataset(PointMatrix points, Eigen::VectorXd responses, Metric metric)
  : points_(std::move(points)), responses_(std::move(responses)), metric_(metric)
{
  if (points_.rows() != responses_.size()) {
    throw InvalidArgument("number of points and responses differ");
  }
  if (points_.cols() < 1) {
    throw InvalidArgument("design points need at least one coordinate");
  }
  if (points_.rows() < points_.cols() + 2) {
    throw InvalidArgument("need at least D + 2 observations");
  }
  if (!points_.allFinite() || !responses_.allFinite()) {
    throw InvalidArgument("data contain non-finite values");
  }
  if (metric_ == Metric::Haversine) {
    if (points_.cols() != 2) {
      throw InvalidArgument("haversine metric requires D = 2 (latitude, longitude)");
    }
    if ((points_.col(0).array().abs() > 90.0).any()) {
      throw InvalidArgument("latitude outside [-90, 90]");
    }
  }
}

double Dataset::distance(std::span<const double> a, std::span<const double> b) const
{
  if (metric_ == Metric::Haversine) {
    return haversine_km(a[0], a[1], b[0], b[1]);
  }
  double r2 = 0.0;
  for (std::size_t d = 0; d < a.size(); ++d) {
    double diff = a[d] - b[d];
    r2 += diff * diff;
  }
  return std::sqrt(r2);
}

Dataset Dataset::with_responses(Eigen::VectorXd responses) const
{
  return Dataset(points_, std::move(responses), metric_);
}

SingularFitError::SingularFitError(std::vector<double> x)
  : NumericalError([&] {
      std::ostringstream os;
      os << "singular local fit at x = (";
      for (std::size_t i = 0; i < x.size(); ++i) {
        os << (i ? ", " : "") << x[i];
      }
      os << ")";
      return os.str();
    }()),
    x_(std::move(x))
{
}

double fit_at(const Dataset& data, std::span<const double> x, double h, const RegressionKernel& k)
{
  check_inputs(data, h, k);
  if (x.size() != static_cast<std::size_t>(data.dim())) {
    throw InvalidArgument("evaluation point has the wrong dimension");
  }
  auto sol = local_solve(data, x, h, k, std::numeric_limits<std::size_t>::max());
  if (!sol.ok) {
    throw SingularFitError({x.begin(), x.end()});
  }
  return sol.fitted;
}

FitResult fit_all(const Dataset& data, double h, const RegressionKernel& k)
{
  check_inputs(data, h, k);
  const std::size_t n = data.size();
  FitResult out;
  out.h = h;
  out.kernel = kernel_id(k);
  out.fitted = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(n),
                                         std::numeric_limits<double>::quiet_NaN());
  out.leverage = out.fitted;
  std::vector<char> singular(n, 0);

  parallel_for(n, [&](std::size_t i) {
    auto sol = local_solve(data, data.point(i), h, k, i);
    auto idx = static_cast<Eigen::Index>(i);
    if (sol.ok) {
      out.fitted[idx] = sol.fitted;
      out.leverage[idx] = sol.self_weight * sol.v[0];
    } else {
      singular[i] = 1;
    }
  });

  for (std::size_t i = 0; i < n; ++i) {
    if (singular[i]) {
      out.singular_points.push_back(i);
    }
  }
  out.singular_count = out.singular_points.size();
  out.residuals = data.responses() - out.fitted;
  return out;
}

Eigen::VectorXd hat_coefficients(const Dataset& data, std::size_t i, double h,
                                 const RegressionKernel& k)
{
  check_inputs(data, h, k);
  if (i >= data.size()) {
    throw InvalidArgument("point index out of range");
  }
  auto x = data.point(i);
  auto sol = local_solve(data, x, h, k, i);
  if (!sol.ok) {
    throw SingularFitError({x.begin(), x.end()});
  }
  const int dim = data.dim();
  LocalFrame frame(data, x, h);
  std::vector<double> z(static_cast<std::size_t>(dim));
  Eigen::VectorXd c = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(data.size()));
  for (std::size_t s = 0; s < data.size(); ++s) {
    double r = frame.offsets(s, z.data());
    double w = weight_at(k, z.data(), dim, r);
    if (w == 0.0) {
      continue;
    }
    double dot = sol.v[0];
    for (int d = 0; d < dim; ++d) {
      dot += sol.v[d + 1] * z[d];
    }
    c[static_cast<Eigen::Index>(s)] = w * dot;
  }
  return c;
}

double rss(const FitResult& fit)
{
  if (fit.singular_count > 0) {
    throw NumericalError("RSS undefined: " + std::to_string(fit.singular_count) +
                         " singular local fits");
  }
  return fit.residuals.squaredNorm() / static_cast<double>(fit.residuals.size());
}

std::vector<double> kernel_reach(const Dataset& data, std::size_t i, const RegressionKernel& k)
{
  const bool radial = is_radial(k);
  LocalFrame frame(data, data.point(i), 1.0);
  std::vector<double> z(static_cast<std::size_t>(data.dim()));
  std::vector<double> out;
  out.reserve(data.size() - 1);
  for (std::size_t s = 0; s < data.size(); ++s) {
    if (s == i) {
      continue;
    }
    double r = frame.offsets(s, z.data());
    if (!radial) {
      r = 0.0;
      for (double v : z) {
        r = std::max(r, std::abs(v));
      }
    }
    out.push_back(r);
  }
  return out;
}

std::vector<double> pairwise_distances(const Dataset& data)
{
  const std::size_t n = data.size();
  std::vector<double> out(n * (n - 1) / 2);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      out[pair_index(n, i, j)] = data.distance(i, j);
    }
  }
  return out;
}

} // namespace corrsmooth
