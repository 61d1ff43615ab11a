#pragma once

#include "corrsmooth/correlation.hpp"
#include "corrsmooth/kernels.hpp"
#include "corrsmooth/locfit.hpp"

#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <vector>

namespace corrsmooth {

struct GridOptions
{
  int points = 30;
  //! Share of design points that must see enough neighbours at h_min.
  double coverage = 0.99;
  //! Neighbours required per point, as a multiple of D + 1.
  int neighbour_factor = 2;
};

//! Log-spaced candidate bandwidths between a data-driven h_min (smallest h
//! at which `coverage` of the points have neighbour_factor * (D + 1)
//! positive-weight neighbours) and h_max (half the point-cloud diameter
//! divided by the kernel's inner reach: c1 for annulus kernels, c2 when
//! c1 = 0, 1 for product kernels).
std::vector<double> default_grid(const Dataset& data, const RegressionKernel& k,
                                 const GridOptions& options = {});

struct BandwidthSelection
{
  double h_z = 0.0;
  double h_o = 0.0;
  double factor_ratio = 1.0;
  std::vector<double> grid;
  //! RSS per grid point; +infinity where some local fit was singular.
  std::vector<double> rss_trace;
  std::size_t index = 0;
  //! Chosen h sits on the first or last grid point.
  bool endpoint_hit = false;
};

//! Minimizes RSS(h, kz) over the grid. Ties (differences below 1e-12 of the
//! response variance) go to the smaller h.
BandwidthSelection select_h_z(const Dataset& data, const RegressionKernel& kz,
                              std::span<const double> grid);

//! (mu(Ko^2) mu2(Kz)^2 / (mu2(Ko)^2 mu(Kz^2)))^(1/(D+4)).
double factor_ratio(const KernelMoments& kz, const KernelMoments& ko, int dim);
double factor_ratio(const RegressionKernel& kz, const RegressionKernel& ko, int dim);

//! Converts sel.h_z to the bandwidth for ko; fills sel.h_o and
//! sel.factor_ratio and returns h_o.
double factor_convert(BandwidthSelection& sel, const RegressionKernel& kz,
                      const RegressionKernel& ko, int dim);

//! Annulus kernel, RSS selection and factor conversion in one call.
struct FactorSelection
{
  AnnulusKernel kz;
  ProductEpanechnikov ko;
  BandwidthSelection selection;
};

FactorSelection select_factor_bandwidth(const Dataset& data, double c1, double c2,
                                        KernelObjective objective,
                                        const GridOptions& grid = {});

// --- elbow diagnostic for the inner radius ---------------------------------

struct ElbowOptions
{
  double c2_offset = 0.5;
  KernelObjective objective = KernelObjective::MinAMISE;
  //! Relative change of C-bar counted as stable.
  double threshold = 0.10;
  //! Number of consecutive stable steps required.
  int stable_steps = 2;
  GridOptions grid;
};

struct ElbowDiagnostic
{
  std::vector<double> c1_list;
  std::vector<double> cbar;   //!< NaN for gaps
  std::vector<double> h_z;    //!< NaN for gaps
  std::vector<bool> feasible;
  std::vector<std::string> kernels; //!< kernel records, empty for gaps
  std::vector<std::string> failures;
  double chosen_c1 = 0.0;
  std::size_t chosen_index = 0;
};

//! Index of the first element after which C-bar changes by less than
//! `threshold` (relative) for `stable_steps` consecutive feasible steps.
//! Throws NumericalError("no elbow found") when no such run exists.
std::size_t pick_elbow(std::span<const double> cbar, const std::vector<bool>& feasible,
                       double threshold, int stable_steps);

ElbowDiagnostic elbow_scan(const Dataset& data, std::span<const double> c1_list,
                           const ElbowOptions& options = {});

// --- GCV baseline -----------------------------------------------------------

//! RSS / (1 - tr(H)/n)^2 with tr(H) from the diagonal hat coefficients.
double gcv_score(const FitResult& fit);

struct GcvSelection
{
  double h = 0.0;
  std::size_t index = 0;
  std::vector<double> grid;
  std::vector<double> gcv_trace; //!< +infinity where infeasible
};

GcvSelection gcv_select(const Dataset& data, const RegressionKernel& ko,
                        std::span<const double> grid);

// --- oracle bandwidth ---------------------------------------------------------

//! Known regression function on the unit cube with a uniform design density.
struct RegressionTruth
{
  std::function<double(std::span<const double>)> mu;
  int dim = 2;
};

//! int f(x) sum_d d^2 mu / dx_d^2 dx for the uniform density on [0,1]^D, by
//! central second differences and tensor Gauss-Legendre quadrature.
double laplacian_integral(const RegressionTruth& truth);

//! Bandwidth minimizing the leading MISE term for kernel ko:
//!   (4 sigma2 (C_rho + m) / Delta_f^2 * mu(K^2) / mu2(K)^2)^(1/(D+4)) n^(-1/(D+4))
//! for alpha = 1 (m = volume of the unit cube = 1), and with C_rho alone and
//! n^(-alpha/(D+4)) for alpha < 1.
double oracle_bandwidth(const CorrelationModel& model, double n, const RegressionTruth& truth,
                        const RegressionKernel& ko);

} // namespace corrsmooth
