#include "corrsmooth/correlation.hpp"

#include "corrsmooth/errors.hpp"
#include "corrsmooth/kernels.hpp"

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <limits>
#include <numbers>

namespace corrsmooth {

CorrelationFamily parse_family(const std::string& name)
{
  if (name == "SP" || name == "spherical" || name == "Spherical") {
    return CorrelationFamily::Spherical;
  }
  if (name == "EXP" || name == "exponential" || name == "Exponential") {
    return CorrelationFamily::Exponential;
  }
  if (name == "INVQ" || name == "inverse-quadratic" || name == "InverseQuadratic") {
    return CorrelationFamily::InverseQuadratic;
  }
  throw InvalidArgument("unknown correlation family '" + name + "'");
}

std::string to_string(CorrelationFamily family)
{
  switch (family) {
  case CorrelationFamily::Spherical:
    return "SP";
  case CorrelationFamily::Exponential:
    return "EXP";
  case CorrelationFamily::InverseQuadratic:
    return "INVQ";
  }
  return "SP";
}

void CorrelationModel::validate() const
{
  if (!(c > 0.0) || !std::isfinite(c)) {
    throw InvalidArgument("correlation parameter c must be positive");
  }
  if (!(alpha > 0.0 && alpha <= 1.0)) {
    throw InvalidArgument("alpha must lie in (0, 1]");
  }
  if (dim < 1) {
    throw InvalidArgument("dimension must be >= 1");
  }
  if (!(sigma2 >= 0.0) || !std::isfinite(sigma2)) {
    throw InvalidArgument("sigma2 must be non-negative");
  }
}

double base_correlation(const CorrelationModel& model, double s)
{
  s = std::abs(s);
  switch (model.family) {
  case CorrelationFamily::Spherical: {
    if (s >= model.c) {
      return 0.0;
    }
    double x = s / model.c;
    return 1.0 - 1.5 * x + 0.5 * x * x * x;
  }
  case CorrelationFamily::Exponential:
    return std::exp(-model.c * s);
  case CorrelationFamily::InverseQuadratic:
    return 1.0 / (1.0 + model.c * s * s);
  }
  return 0.0;
}

double correlation_value(const CorrelationModel& model, double t, double n)
{
  return base_correlation(model, std::pow(n, model.alpha / model.dim) * t);
}

double integrated_correlation(const CorrelationModel& model)
{
  model.validate();
  const int dim = model.dim;
  auto integrand = [&](double r) {
    return base_correlation(model, r) * std::pow(r, dim - 1);
  };
  double radial = 0.0;
  switch (model.family) {
  case CorrelationFamily::Spherical:
    radial = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(integrand, 0.0,
                                                                           model.c, 10, 1e-13);
    break;
  case CorrelationFamily::Exponential: {
    boost::math::quadrature::exp_sinh<double> integrator;
    radial = integrator.integrate(integrand, 0.0, std::numeric_limits<double>::infinity());
    break;
  }
  case CorrelationFamily::InverseQuadratic:
    // tail ~ r^(D-3): finite only for D = 1
    if (dim >= 2) {
      throw NumericalError("inverse-quadratic correlation is not integrable for D >= 2");
    }
    radial = std::numbers::pi / (2.0 * std::sqrt(model.c));
    break;
  }
  return unit_sphere_area(dim) * radial;
}

} // namespace corrsmooth
