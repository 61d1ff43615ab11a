#pragma once

#include <string>

namespace corrsmooth {

enum class CorrelationFamily
{
  Spherical,
  Exponential,
  InverseQuadratic,
};

CorrelationFamily parse_family(const std::string& name);
//! Short table label: SP, EXP, INVQ.
std::string to_string(CorrelationFamily family);

//! Isotropic error correlation rho_n(t) = rho(n^(alpha/D) t) scaled by sigma2.
struct CorrelationModel
{
  CorrelationFamily family = CorrelationFamily::Spherical;
  double c = 1.0;
  double alpha = 1.0;
  int dim = 2;
  double sigma2 = 0.1;

  //! Throws InvalidArgument for c <= 0, alpha outside (0, 1], dim < 1 or
  //! negative sigma2.
  void validate() const;
};

//! Unscaled family value rho(s).
double base_correlation(const CorrelationModel& model, double s);

//! rho_n(t) for sample size n.
double correlation_value(const CorrelationModel& model, double t, double n);

//! n^alpha * int_{R^D} rho_n(|u|) du, which equals int rho(|v|) dv under the
//! n^(alpha/D) scaling. Throws NumericalError when the integral diverges.
double integrated_correlation(const CorrelationModel& model);

} // namespace corrsmooth
