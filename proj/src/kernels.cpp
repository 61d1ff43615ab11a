#include "corrsmooth/kernels.hpp"

#include "corrsmooth/errors.hpp"
#include "corrsmooth/nelder_mead.hpp"

#include <Eigen/Dense>
#include <boost/math/quadrature/gauss.hpp>

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numbers>
#include <sstream>

namespace corrsmooth {

namespace {

using Gauss20 = boost::math::quadrature::gauss<double, 20>;

constexpr int kPositivityGrid = 512;
constexpr double kPositivityThreshold = 1e-12;

template <class F>
double integrate(F&& f, double a, double b)
{
  return Gauss20::integrate(f, a, b);
}

// Integral of a smooth function over [a, b] split into equal panels.
template <class F>
double integrate_panels(F&& f, double a, double b, int panels)
{
  double total = 0.0;
  double w = (b - a) / panels;
  for (int i = 0; i < panels; ++i) {
    total += integrate(f, a + i * w, a + (i + 1) * w);
  }
  return total;
}

double ipow(double x, int k)
{
  double r = 1.0;
  for (int i = 0; i < k; ++i) {
    r *= x;
  }
  return r;
}

// Coefficients of the annulus cubic in the local variable s = (r - c1) / w,
// with the normalization constraint used to eliminate a0.
struct AnnulusProblem
{
  double c1;
  double w;
  int dim;
  double surface;
  std::array<double, 4> norm_int{};    // int s^k r^(D-1) dr
  std::array<double, 4> second_int{};  // int s^k r^(D+1) dr
  Eigen::Matrix4d gram;                // int s^(k+l) r^(D-1) dr

  AnnulusProblem(double c1_, double c2_, int dim_)
    : c1(c1_), w(c2_ - c1_), dim(dim_), surface(unit_sphere_area(dim_))
  {
    std::array<double, 7> lower{}, upper{};
    for (int k = 0; k < 7; ++k) {
      lower[k] = integrate(
        [&](double s) { return w * ipow(s, k) * ipow(c1 + w * s, dim - 1); }, 0.0, 1.0);
      if (k < 4) {
        upper[k] = integrate(
          [&](double s) { return w * ipow(s, k) * ipow(c1 + w * s, dim + 1); }, 0.0, 1.0);
      }
    }
    for (int k = 0; k < 4; ++k) {
      norm_int[k] = lower[k];
      second_int[k] = upper[k];
      for (int l = 0; l < 4; ++l) {
        gram(k, l) = lower[k + l];
      }
    }
  }

  double constant_height() const { return 1.0 / (surface * norm_int[0]); }

  std::array<double, 4> complete(double a1, double a2, double a3) const
  {
    double a0 = (1.0 / surface - a1 * norm_int[1] - a2 * norm_int[2] -
                 a3 * norm_int[3]) / norm_int[0];
    return {a0, a1, a2, a3};
  }

  KernelMoments moments(const std::array<double, 4>& a) const
  {
    Eigen::Vector4d v(a[0], a[1], a[2], a[3]);
    double mu2 = 0.0;
    for (int k = 0; k < 4; ++k) {
      mu2 += a[k] * second_int[k];
    }
    return {surface / dim * mu2, surface * v.dot(gram * v)};
  }

  double grid_violation(const std::array<double, 4>& a, double scale) const
  {
    double total = 0.0;
    for (int i = 0; i < kPositivityGrid; ++i) {
      double s = static_cast<double>(i) / (kPositivityGrid - 1);
      double p = a[0] + s * (a[1] + s * (a[2] + s * a[3]));
      if (p < 0.0) {
        total += (p / scale) * (p / scale);
      }
    }
    return total;
  }

  // Exact minimum of the cubic over s in [0, 1].
  static double exact_min(const std::array<double, 4>& a)
  {
    auto p = [&](double s) { return a[0] + s * (a[1] + s * (a[2] + s * a[3])); };
    double m = std::min(p(0.0), p(1.0));
    // p'(s) = 3 a3 s^2 + 2 a2 s + a1
    double qa = 3.0 * a[3], qb = 2.0 * a[2], qc = a[1];
    auto consider = [&](double s) {
      if (s > 0.0 && s < 1.0) {
        m = std::min(m, p(s));
      }
    };
    if (std::abs(qa) < 1e-300) {
      if (std::abs(qb) > 1e-300) {
        consider(-qc / qb);
      }
    } else {
      double disc = qb * qb - 4.0 * qa * qc;
      if (disc >= 0.0) {
        double sq = std::sqrt(disc);
        consider((-qb + sq) / (2.0 * qa));
        consider((-qb - sq) / (2.0 * qa));
      }
    }
    return m;
  }
};

double objective_value(const KernelMoments& m, int dim, KernelObjective objective)
{
  switch (objective) {
  case KernelObjective::MinVariance:
    return m.muK2;
  case KernelObjective::MinAMISE:
    return m.muK2 * m.muK2 * std::pow(m.mu2, dim);
  case KernelObjective::MinProduct:
    return m.muK2 * m.mu2;
  }
  return m.muK2;
}

std::string format_pair(double c1, double c2)
{
  std::ostringstream os;
  os << "(c1=" << c1 << ", c2=" << c2 << ")";
  return os.str();
}

} // namespace

KernelObjective parse_objective(const std::string& name)
{
  if (name == "MinVariance" || name == "min-variance" || name == "variance") {
    return KernelObjective::MinVariance;
  }
  if (name == "MinAMISE" || name == "min-amise" || name == "amise") {
    return KernelObjective::MinAMISE;
  }
  if (name == "MinProduct" || name == "min-product" || name == "product") {
    return KernelObjective::MinProduct;
  }
  throw InvalidArgument("unknown kernel objective '" + name + "'");
}

std::string to_string(KernelObjective objective)
{
  switch (objective) {
  case KernelObjective::MinVariance:
    return "MinVariance";
  case KernelObjective::MinAMISE:
    return "MinAMISE";
  case KernelObjective::MinProduct:
    return "MinProduct";
  }
  return "MinVariance";
}

double unit_sphere_area(int dim)
{
  if (dim < 1) {
    throw InvalidArgument("dimension must be >= 1");
  }
  double half = 0.5 * dim;
  return 2.0 * std::pow(std::numbers::pi, half) / std::tgamma(half);
}

// ---------------------------------------------------------------------------

AnnulusKernel::AnnulusKernel(double c1, double c2, std::array<double, 4> coeffs, int dim)
  : c1_(c1), c2_(c2), coeffs_(coeffs), dim_(dim)
{
  if (!(c1 >= 0.0) || !std::isfinite(c2)) {
    throw InvalidArgument("annulus radii must be finite with c1 >= 0");
  }
  if (!(c2 > c1)) {
    throw InvalidArgument("c2 must exceed c1 " + format_pair(c1, c2));
  }
  if (dim < 1) {
    throw InvalidArgument("dimension must be >= 1");
  }
}

double AnnulusKernel::profile(double r) const
{
  if (r < c1_ || r > c2_) {
    return 0.0;
  }
  const auto& [a, b, c, d] = coeffs_;
  return ((a * r + b) * r + c) * r + d;
}

double AnnulusKernel::operator()(std::span<const double> u) const
{
  double r2 = 0.0;
  for (double v : u) {
    r2 += v * v;
  }
  return profile(std::sqrt(r2));
}

double AnnulusKernel::min_on_support() const
{
  // rewrite in s = (r - c1) / w to reuse the exact minimizer
  double w = c2_ - c1_;
  const auto& [a, b, c, d] = coeffs_;
  std::array<double, 4> s_coeffs{
    ((a * c1_ + b) * c1_ + c) * c1_ + d,
    (3.0 * a * c1_ * c1_ + 2.0 * b * c1_ + c) * w,
    (3.0 * a * c1_ + b) * w * w,
    a * w * w * w,
  };
  return AnnulusProblem::exact_min(s_coeffs);
}

std::string AnnulusKernel::to_record() const
{
  std::ostringstream os;
  os << std::setprecision(17) << "annulus " << c1_ << ' ' << c2_;
  for (double v : coeffs_) {
    os << ' ' << v;
  }
  os << ' ' << dim_;
  return os.str();
}

ProductEpanechnikov::ProductEpanechnikov(int dim) : dim_(dim)
{
  if (dim < 1) {
    throw InvalidArgument("dimension must be >= 1");
  }
}

double ProductEpanechnikov::factor(double u)
{
  return std::abs(u) <= 1.0 ? 0.75 * (1.0 - u * u) : 0.0;
}

double ProductEpanechnikov::operator()(std::span<const double> u) const
{
  double v = 1.0;
  for (double x : u) {
    v *= factor(x);
  }
  return v;
}

std::string ProductEpanechnikov::to_record() const
{
  return "epanechnikov " + std::to_string(dim_);
}

double CovarianceKernel1D::operator()(double u) const
{
  return std::abs(u) < 1.0 ? 0.75 * (1.0 - u * u) : 0.0;
}

BoundaryKernel::BoundaryKernel(double q)
  : q_(std::clamp(q, std::numeric_limits<double>::epsilon(), 1.0))
{
  scale_ = 12.0 / std::pow(1.0 + q_, 4);
  slope_ = 1.0 - 2.0 * q_;
  offset_ = 0.5 * (3.0 * q_ * q_ - 2.0 * q_ + 1.0);
}

double BoundaryKernel::operator()(double t) const
{
  if (t < -1.0 || t > q_) {
    return 0.0;
  }
  return scale_ * (t + 1.0) * (t * slope_ + offset_);
}

// ---------------------------------------------------------------------------

AnnulusKernel build_annulus_kernel(double c1, double c2, int dim, KernelObjective objective)
{
  if (!std::isfinite(c1) || !std::isfinite(c2) || c1 < 0.0) {
    throw InvalidArgument("annulus radii must be finite with c1 >= 0 " + format_pair(c1, c2));
  }
  if (!(c2 > c1)) {
    throw InvalidArgument("c2 must exceed c1 " + format_pair(c1, c2));
  }
  if (dim < 1) {
    throw InvalidArgument("dimension must be >= 1");
  }

  AnnulusProblem problem(c1, c2, dim);
  const double height = problem.constant_height();
  if (!std::isfinite(height) || !(height > 0.0)) {
    throw NumericalError("no positive normalized cubic on the annulus " + format_pair(c1, c2));
  }

  // Closed-form minimizer of mu(K^2) under the normalization alone.
  Eigen::Vector4d rhs(problem.norm_int[0], problem.norm_int[1], problem.norm_int[2],
                      problem.norm_int[3]);
  Eigen::Vector4d sol = problem.gram.ldlt().solve(rhs);
  sol /= problem.surface * rhs.dot(sol);
  const std::array<double, 4> lagrange = problem.complete(sol[1], sol[2], sol[3]);
  const std::array<double, 4> uniform{height, 0.0, 0.0, 0.0};

  auto penalized = [&](const std::vector<double>& x) {
    auto a = problem.complete(height * x[0], height * x[1], height * x[2]);
    double value = objective_value(problem.moments(a), dim, objective);
    if (!(value > 0.0) || !std::isfinite(value)) {
      return 1e300;
    }
    return std::log(value) + 1e4 * problem.grid_violation(a, height);
  };

  std::vector<double> start{lagrange[1] / height, lagrange[2] / height, lagrange[3] / height};
  NelderMeadOptions options;
  options.initial_step = 0.5;
  NelderMeadResult best = nelder_mead(penalized, start, options);
  for (int restart = 0; restart < 8; ++restart) {
    options.initial_step = 0.05;
    NelderMeadResult next = nelder_mead(penalized, best.x, options);
    bool stalled = best.value - next.value < 1e-13;
    if (next.value < best.value) {
      best = next;
    }
    if (stalled && best.converged) {
      break;
    }
  }
  if (!best.converged) {
    std::ostringstream os;
    os << "annulus coefficient search did not converge " << format_pair(c1, c2)
       << ": f spread " << best.f_spread << ", x spread " << best.x_spread;
    throw NumericalError(os.str());
  }

  std::array<double, 4> a =
    problem.complete(height * best.x[0], height * best.x[1], height * best.x[2]);

  // Blend toward the uniform kernel until the cubic is strictly positive on
  // the closed annulus. Both endpoints of the blend are normalized.
  const double margin = 1e-6 * height;
  auto blend = [&](double lambda) {
    std::array<double, 4> out{};
    for (int k = 0; k < 4; ++k) {
      out[k] = (1.0 - lambda) * a[k] + lambda * uniform[k];
    }
    return out;
  };
  if (AnnulusProblem::exact_min(a) < margin) {
    double lo = 0.0, hi = 1.0;
    for (int it = 0; it < 80; ++it) {
      double mid = 0.5 * (lo + hi);
      (AnnulusProblem::exact_min(blend(mid)) >= margin ? hi : lo) = mid;
    }
    a = blend(hi);
  }

  // Expand sum_k a_k ((r - c1) / w)^k into powers of r.
  std::array<double, 4> mono{}; // mono[m] multiplies r^m
  const double w = c2 - c1;
  const int binom[4][4] = {{1, 0, 0, 0}, {1, 1, 0, 0}, {1, 2, 1, 0}, {1, 3, 3, 1}};
  for (int k = 0; k < 4; ++k) {
    double ak = a[k] / ipow(w, k);
    for (int m = 0; m <= k; ++m) {
      mono[m] += ak * binom[k][m] * ipow(-c1, k - m);
    }
  }
  AnnulusKernel kernel(c1, c2, {mono[3], mono[2], mono[1], mono[0]}, dim);

  // remove rounding from the basis change
  double mass = unit_sphere_area(dim) *
                integrate([&](double r) { return kernel.profile(r) * ipow(r, dim - 1); }, c1, c2);
  for (double& v : mono) {
    v /= mass;
  }
  AnnulusKernel normalized(c1, c2, {mono[3], mono[2], mono[1], mono[0]}, dim);

  if (!(normalized.min_on_support() > 0.0)) {
    throw NumericalError("no positive normalized cubic on the annulus " + format_pair(c1, c2));
  }
  for (int i = 0; i < kPositivityGrid; ++i) {
    double r = c1 + w * (i + 0.5) / kPositivityGrid;
    if (!(normalized.profile(r) > kPositivityThreshold)) {
      throw NumericalError("annulus kernel not positive on " + format_pair(c1, c2));
    }
  }
  return normalized;
}

double annulus_objective(const AnnulusKernel& k, KernelObjective objective)
{
  return objective_value(kernel_moments(k, k.dim()), k.dim(), objective);
}

KernelMoments kernel_moments(const AnnulusKernel& k, int dim)
{
  double s = unit_sphere_area(dim);
  auto& kk = k;
  double mu2 = integrate([&](double r) { return kk.profile(r) * ipow(r, dim + 1); }, k.c1(), k.c2());
  double muk2 = integrate(
    [&](double r) {
      double p = kk.profile(r);
      return p * p * ipow(r, dim - 1);
    },
    k.c1(), k.c2());
  return {s / dim * mu2, s * muk2};
}

KernelMoments kernel_moments(const ProductEpanechnikov& k, int dim)
{
  (void)k;
  double mu2 = integrate([](double u) { return u * u * ProductEpanechnikov::factor(u); }, -1.0, 1.0);
  double sq = integrate(
    [](double u) {
      double v = ProductEpanechnikov::factor(u);
      return v * v;
    },
    -1.0, 1.0);
  return {mu2, std::pow(sq, dim)};
}

KernelMoments kernel_moments(const RegressionKernel& k, int dim)
{
  return std::visit([dim](const auto& kernel) { return kernel_moments(kernel, dim); }, k);
}

KernelMoments kernel_moments(const CovarianceKernel1D& k)
{
  double mu2 = integrate([&](double u) { return u * u * k(u); }, -1.0, 1.0);
  double sq = integrate([&](double u) { return k(u) * k(u); }, -1.0, 1.0);
  return {mu2, sq};
}

KernelMoments kernel_moments(const BoundaryKernel& k)
{
  double mu2 = integrate([&](double u) { return u * u * k(u); }, -1.0, k.q());
  double sq = integrate([&](double u) { return k(u) * k(u); }, -1.0, k.q());
  return {mu2, sq};
}

KernelMoments radial_kernel_moments(const std::function<double(double)>& profile,
                                    double support_radius, int dim)
{
  if (!std::isfinite(support_radius) || !(support_radius > 0.0)) {
    throw InvalidArgument("kernel moments need a bounded support");
  }
  double s = unit_sphere_area(dim);
  constexpr int panels = 256;
  double mu2 = integrate_panels([&](double r) { return profile(r) * ipow(r, dim + 1); }, 0.0,
                                support_radius, panels);
  double muk2 = integrate_panels(
    [&](double r) {
      double p = profile(r);
      return p * p * ipow(r, dim - 1);
    },
    0.0, support_radius, panels);
  return {s / dim * mu2, s * muk2};
}

double kernel_value(const RegressionKernel& k, std::span<const double> u)
{
  return std::visit([u](const auto& kernel) { return kernel(u); }, k);
}

std::string kernel_id(const RegressionKernel& k)
{
  return std::visit([](const auto& kernel) { return kernel.to_record(); }, k);
}

int kernel_dim(const RegressionKernel& k)
{
  return std::visit([](const auto& kernel) { return kernel.dim(); }, k);
}

bool is_radial(const RegressionKernel& k)
{
  return std::holds_alternative<AnnulusKernel>(k);
}

RegressionKernel parse_kernel_record(const std::string& record)
{
  std::istringstream is(record);
  std::string kind;
  is >> kind;
  if (kind == "annulus") {
    double c1, c2;
    std::array<double, 4> coeffs{};
    int dim;
    is >> c1 >> c2 >> coeffs[0] >> coeffs[1] >> coeffs[2] >> coeffs[3] >> dim;
    if (!is) {
      throw IoError("malformed annulus kernel record: " + record);
    }
    return AnnulusKernel(c1, c2, coeffs, dim);
  }
  if (kind == "epanechnikov") {
    int dim;
    is >> dim;
    if (!is) {
      throw IoError("malformed epanechnikov kernel record: " + record);
    }
    return ProductEpanechnikov(dim);
  }
  throw IoError("unknown kernel kind in record: " + record);
}

} // namespace corrsmooth
