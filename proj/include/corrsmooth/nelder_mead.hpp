#pragma once

#include <functional>
#include <vector>

namespace corrsmooth {

struct NelderMeadOptions
{
  int max_evaluations = 20000;
  double initial_step = 0.1;
  //! Converged when both the spread of function values and the simplex
  //! diameter fall below these.
  double f_tolerance = 1e-15;
  double x_tolerance = 1e-11;
};

struct NelderMeadResult
{
  std::vector<double> x;
  double value = 0.0;
  int evaluations = 0;
  bool converged = false;
  double f_spread = 0.0;
  double x_spread = 0.0;
};

//! Derivative-free simplex minimization (standard reflection, expansion,
//! contraction and shrink coefficients 1, 2, 1/2, 1/2).
NelderMeadResult nelder_mead(const std::function<double(const std::vector<double>&)>& f,
                             std::vector<double> start,
                             const NelderMeadOptions& options = {});

} // namespace corrsmooth
