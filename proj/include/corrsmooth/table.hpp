#pragma once

#include "corrsmooth/bandwidth.hpp"
#include "corrsmooth/covariance.hpp"
#include "corrsmooth/simulate.hpp"

#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace corrsmooth {

enum class MethodKind
{
  ZeroAnnulus, //!< K_z(c1, c2) RSS selection, factor conversion to K_o
  Gcv,         //!< GCV with product Epanechnikov
  MinEpan,     //!< best MSE_prac over the K_o grid (needs the truth)
  Raw,         //!< covariance from the true errors
};

struct MethodSpec
{
  MethodKind kind = MethodKind::ZeroAnnulus;
  double c1 = 1.0;
  double c2 = 1.5;

  //! Table label: ZA(1,1.5), GCV, minEpan, Raw.
  std::string label() const;
};

//! Accepts the labels produced by MethodSpec::label().
MethodSpec parse_method(const std::string& text);

struct TableScenario
{
  SimScenario sim;
  std::vector<MethodSpec> methods;
};

struct TableOptions
{
  GridOptions grid;
  CovarianceOptions covariance;
  double zeta = kDefaultZeta;
  KernelObjective objective = KernelObjective::MinProduct;
};

inline constexpr double kNotApplicable = std::numeric_limits<double>::quiet_NaN();

//! One method on one trial. Metrics a method does not produce are NaN.
struct TrialRecord
{
  std::size_t trial = 0;
  std::string method;
  bool ok = true;
  std::string error;
  double h = kNotApplicable;   //!< regression bandwidth used with K_o
  double h_z = kNotApplicable; //!< ZA only
  double b = kNotApplicable;
  bool fallback = false;
  double mse_prac = kNotApplicable;
  double sigma2_hat = kNotApplicable;
  double sigma2_sq_error = kNotApplicable; //!< (sigma2_hat - sigma2)^2
  double sse_cor = kNotApplicable;
};

struct MetricSummary
{
  double mean = kNotApplicable;
  double sd = kNotApplicable; //!< sample sd; 0 for a single trial
  std::size_t count = 0;
};

MetricSummary summarize(const std::vector<double>& values);

struct MethodSummary
{
  std::string method;
  MetricSummary mse_prac;
  MetricSummary mse_sigma2; //!< mean is MSE_sigma2 over trials
  MetricSummary sse_cor;
  std::size_t failures = 0;
  std::size_t fallbacks = 0;
};

struct ScenarioResult
{
  TableScenario scenario;
  std::vector<TrialRecord> trials; //!< ordered by (trial, method)
  std::vector<MethodSummary> summary;
};

//! Runs every scenario for sim.n_trials trials. Trial t draws its data from
//! child_seed(sim.seed, t); trials run in parallel and results are collected
//! in order, so output is independent of the thread count.
std::vector<ScenarioResult> run_table(const std::vector<TableScenario>& scenarios,
                                      const TableOptions& options = {});

//! All methods of one trial on one generated dataset.
std::vector<TrialRecord> run_trial(const TableScenario& scenario, std::size_t trial,
                                   const std::vector<std::optional<AnnulusKernel>>& annulus,
                                   const TableOptions& options);

} // namespace corrsmooth
