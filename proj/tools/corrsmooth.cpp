// corrsmooth: command-line front end for kernel selection, bandwidth
// selection, error covariance estimation and the simulation harness.

#include "corrsmooth/bandwidth.hpp"
#include "corrsmooth/covariance.hpp"
#include "corrsmooth/errors.hpp"
#include "corrsmooth/io.hpp"
#include "corrsmooth/kernels.hpp"
#include "corrsmooth/locfit.hpp"
#include "corrsmooth/parallel.hpp"
#include "corrsmooth/simulate.hpp"
#include "corrsmooth/table.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

namespace fs = std::filesystem;
using namespace corrsmooth;

namespace {

enum ExitCode
{
  kOk = 0,
  kUsage = 1,
  kNumerical = 2,
  kIo = 3,
};

struct FitParams
{
  std::string input;
  std::string metric = "euclidean";
  double c1 = 1.0;
  double c2_offset = 0.5;
  std::string objective = "MinAMISE";
  std::string kernel_file;
  int grid_points = 30;
  double grid_coverage = 0.99;
  double h_min = 0.0;
  double h_max = 0.0;
  int surface_points = 0;
};

struct ElbowParams
{
  std::vector<double> c1_list;
  double threshold = 0.10;
  int stable_steps = 2;
};

struct CovParams
{
  double delta_n = kDefaultDeltaN;
  int n_star = 200;
  int b_count = 25;
  std::vector<double> b_list;
  bool no_refine = false;
  double truncation = -1.0;
  double truncation_fraction = 0.02;
  std::string mode = "ByChat0";
};

struct SimParams
{
  std::string scenarios;
  int trials = 0;
  double zeta = kDefaultZeta;
  std::string objective = "MinProduct";
};

struct BenchParams
{
  int n = 500;
  std::uint64_t seed = 1;
  double c = 2.0;
  int repeats = 3;
};

struct Options
{
  std::string output = "corrsmooth_out";
  FitParams fit;
  ElbowParams elbow;
  CovParams cov;
  SimParams sim;
  BenchParams bench;
};

class Report
{
public:
  template <typename T>
  void add(const std::string& key, const T& value)
  {
    os_ << key << ": " << value << '\n';
  }
  void add(const std::string& key, double value) { os_ << key << ": " << format_double(value) << '\n'; }
  void note(const std::string& text) { os_ << "warning: " << text << '\n'; }
  std::string str() const { return os_.str(); }

private:
  std::ostringstream os_;
};

GridOptions grid_options(const FitParams& p)
{
  GridOptions g;
  g.points = p.grid_points;
  g.coverage = p.grid_coverage;
  return g;
}

std::vector<double> bandwidth_grid(const Dataset& data, const RegressionKernel& k,
                                   const FitParams& p)
{
  if (p.h_min > 0.0 && p.h_max > p.h_min) {
    std::vector<double> g(static_cast<std::size_t>(p.grid_points));
    for (int i = 0; i < p.grid_points; ++i) {
      double w = p.grid_points > 1 ? static_cast<double>(i) / (p.grid_points - 1) : 0.0;
      g[static_cast<std::size_t>(i)] = p.h_min * std::pow(p.h_max / p.h_min, w);
    }
    return g;
  }
  auto g = default_grid(data, k, grid_options(p));
  if (p.h_min > 0.0 || p.h_max > 0.0) {
    double lo = p.h_min > 0.0 ? p.h_min : g.front();
    double hi = p.h_max > 0.0 ? p.h_max : g.back();
    if (!(hi > lo)) {
      throw InvalidArgument("grid override needs h_min < h_max");
    }
    FitParams q = p;
    q.h_min = lo;
    q.h_max = hi;
    return bandwidth_grid(data, k, q);
  }
  return g;
}

AnnulusKernel obtain_kernel(const FitParams& p, int dim)
{
  if (!p.kernel_file.empty()) {
    std::ifstream in(p.kernel_file);
    std::string record;
    if (!in || !std::getline(in, record)) {
      throw IoError("cannot read kernel file " + p.kernel_file);
    }
    auto k = parse_kernel_record(record);
    if (!std::holds_alternative<AnnulusKernel>(k) || kernel_dim(k) != dim) {
      throw InvalidArgument("kernel file must hold an annulus kernel of dimension " +
                            std::to_string(dim));
    }
    return std::get<AnnulusKernel>(k);
  }
  return build_annulus_kernel(p.c1, p.c1 + p.c2_offset, dim, parse_objective(p.objective));
}

Dataset load(const FitParams& p)
{
  if (p.input.empty()) {
    throw InvalidArgument("--input is required");
  }
  return read_dataset_csv(p.input, parse_metric(p.metric));
}

struct Pipeline
{
  AnnulusKernel kz;
  ProductEpanechnikov ko;
  BandwidthSelection selection;
  FitResult fit;
};

Pipeline run_pipeline(const Dataset& data, const FitParams& p)
{
  AnnulusKernel kz = obtain_kernel(p, data.dim());
  ProductEpanechnikov ko(data.dim());
  auto grid = bandwidth_grid(data, kz, p);
  BandwidthSelection sel = select_h_z(data, kz, grid);
  double h_o = factor_convert(sel, kz, ko, data.dim());
  FitResult fit = fit_all(data, h_o, ko);
  return {std::move(kz), ko, std::move(sel), std::move(fit)};
}

void report_selection(Report& r, const Dataset& data, const Pipeline& pl)
{
  r.add("n", data.size());
  r.add("dim", data.dim());
  r.add("metric", to_string(data.metric()));
  r.add("kernel_z", pl.kz.to_record());
  r.add("kernel_o", pl.ko.to_record());
  r.add("h_z", pl.selection.h_z);
  r.add("h_o", pl.selection.h_o);
  r.add("factor_ratio", pl.selection.factor_ratio);
  r.add("grid_min", pl.selection.grid.front());
  r.add("grid_max", pl.selection.grid.back());
  r.add("endpoint_hit", pl.selection.endpoint_hit ? "yes" : "no");
  r.add("singular_count", pl.fit.singular_count);
  if (pl.selection.endpoint_hit) {
    r.note("selected h_z sits on a grid endpoint; consider widening the grid");
  }
}

void write_trace(const fs::path& path, const BandwidthSelection& sel)
{
  CsvWriter csv(path, {"h", "rss", "chosen"});
  for (std::size_t i = 0; i < sel.grid.size(); ++i) {
    csv.row({format_double(sel.grid[i]), format_double(sel.rss_trace[i]),
             i == sel.index ? "1" : "0"});
  }
}

void write_fitted(const fs::path& path, const Dataset& data, const FitResult& fit)
{
  std::vector<std::string> header;
  for (int d = 0; d < data.dim(); ++d) {
    header.push_back("x" + std::to_string(d + 1));
  }
  for (const char* h : {"y", "fitted", "residual", "leverage"}) {
    header.emplace_back(h);
  }
  CsvWriter csv(path, header);
  for (std::size_t i = 0; i < data.size(); ++i) {
    std::vector<double> row(data.point(i).begin(), data.point(i).end());
    auto k = static_cast<Eigen::Index>(i);
    row.insert(row.end(), {data.responses()[k], fit.fitted[k], fit.residuals[k],
                           fit.leverage[k]});
    csv.row(row);
  }
}

//! Regular grid over the bounding box of the design.
void write_surface(const fs::path& path, const Dataset& data, double h, const RegressionKernel& ko,
                   int per_axis, std::size_t& singular)
{
  const int dim = data.dim();
  if (per_axis <= 0) {
    per_axis = dim == 1 ? 201 : dim == 2 ? 41 : 11;
  }
  Eigen::RowVectorXd lo = data.points().colwise().minCoeff();
  Eigen::RowVectorXd hi = data.points().colwise().maxCoeff();
  std::size_t total = 1;
  for (int d = 0; d < dim; ++d) {
    total *= static_cast<std::size_t>(per_axis);
  }
  std::vector<double> values(total);
  std::vector<std::vector<double>> points(total, std::vector<double>(dim));
  for (std::size_t k = 0; k < total; ++k) {
    std::size_t rest = k;
    for (int d = dim - 1; d >= 0; --d) {
      auto idx = rest % static_cast<std::size_t>(per_axis);
      rest /= static_cast<std::size_t>(per_axis);
      double w = per_axis > 1 ? static_cast<double>(idx) / (per_axis - 1) : 0.5;
      points[k][static_cast<std::size_t>(d)] = lo[d] + w * (hi[d] - lo[d]);
    }
  }
  parallel_for(total, [&](std::size_t k) {
    try {
      values[k] = fit_at(data, points[k], h, ko);
    } catch (const SingularFitError&) {
      values[k] = std::numeric_limits<double>::quiet_NaN();
    }
  });
  std::vector<std::string> header;
  for (int d = 0; d < dim; ++d) {
    header.push_back("x" + std::to_string(d + 1));
  }
  header.emplace_back("mu_hat");
  CsvWriter csv(path, header);
  singular = 0;
  for (std::size_t k = 0; k < total; ++k) {
    std::vector<double> row = points[k];
    row.push_back(values[k]);
    singular += std::isnan(values[k]) ? 1 : 0;
    csv.row(row);
  }
}

//! Effective settings as INI, limited to top-level options and the subcommand
//! that ran. Subcommands share parameter structs, so echoing an idle
//! subcommand's defaults would clobber the active values on replay.
std::string echo_config(const CLI::App& app)
{
  std::string active;
  for (const auto* sub : app.get_subcommands()) {
    active = sub->get_name() + ".";
  }
  std::istringstream all(app.config_to_str(true, false));
  std::ostringstream kept;
  std::string line;
  while (std::getline(all, line)) {
    auto eq = line.find('=');
    auto dot = line.find('.');
    bool top_level = eq != std::string::npos && (dot == std::string::npos || dot > eq);
    if (top_level || (!active.empty() && line.starts_with(active))) {
      kept << line << '\n';
    }
  }
  return kept.str();
}

// --- commands -----------------------------------------------------------------

int cmd_fit(const Options& o, const fs::path& out)
{
  Dataset data = load(o.fit);
  Pipeline pl = run_pipeline(data, o.fit);
  Report r;
  r.add("command", "fit");
  report_selection(r, data, pl);
  std::size_t surface_singular = 0;
  write_surface(out / "surface.csv", data, pl.selection.h_o, pl.ko, o.fit.surface_points,
                surface_singular);
  r.add("surface_singular", surface_singular);
  if (pl.fit.singular_count == 0) {
    r.add("sigma2_rss_h_o", rss(pl.fit));
  }
  write_fitted(out / "fitted.csv", data, pl.fit);
  write_trace(out / "bandwidth_trace.csv", pl.selection);
  write_text(out / "kernel.txt", pl.kz.to_record() + "\n");
  write_text(out / "report.txt", r.str());
  return kOk;
}

int cmd_elbow(const Options& o, const fs::path& out)
{
  Dataset data = load(o.fit);
  std::vector<double> c1_list = o.elbow.c1_list;
  if (c1_list.empty()) {
    for (int k = 0; k <= 24; ++k) {
      c1_list.push_back(0.25 * k);
    }
  }
  ElbowOptions eo;
  eo.c2_offset = o.fit.c2_offset;
  eo.objective = parse_objective(o.fit.objective);
  eo.threshold = o.elbow.threshold;
  eo.stable_steps = o.elbow.stable_steps;
  eo.grid = grid_options(o.fit);
  ElbowDiagnostic diag = elbow_scan(data, c1_list, eo);

  CsvWriter csv(out / "elbow.csv", {"c1", "c2", "cbar", "h_z", "feasible", "chosen", "kernel"});
  for (std::size_t i = 0; i < diag.c1_list.size(); ++i) {
    csv.row({format_double(diag.c1_list[i]), format_double(diag.c1_list[i] + eo.c2_offset),
             format_double(diag.cbar[i]), format_double(diag.h_z[i]),
             diag.feasible[i] ? "1" : "0", i == diag.chosen_index ? "1" : "0",
             diag.kernels[i]});
  }
  Report r;
  r.add("command", "elbow");
  r.add("n", data.size());
  r.add("objective", to_string(eo.objective));
  r.add("candidates", diag.c1_list.size());
  r.add("chosen_c1", diag.chosen_c1);
  for (const auto& f : diag.failures) {
    r.note(f);
  }
  write_text(out / "report.txt", r.str());
  std::cout << "chosen c1 = " << format_double(diag.chosen_c1) << '\n';
  return kOk;
}

int cmd_covariance(const Options& o, const fs::path& out)
{
  Dataset data = load(o.fit);
  Pipeline pl = run_pipeline(data, o.fit);
  if (pl.fit.singular_count > 0) {
    throw NumericalError("regression fit at h_o has " + std::to_string(pl.fit.singular_count) +
                         " singular points");
  }
  double h_t = variance_bandwidth(pl.selection.h_o, data.size(), data.dim());
  double sigma2_hat = sigma2_rss(data, h_t, pl.ko);

  PairSet pairs(data);
  std::span<const double> resid(pl.fit.residuals.data(), data.size());
  std::vector<double> candidates =
    o.cov.b_list.empty() ? default_b_candidates(pairs, o.cov.b_count) : o.cov.b_list;
  CalibrationTrace cal =
    calibrate_b(resid, pairs, sigma2_hat, candidates, o.cov.delta_n, !o.cov.no_refine);
  double trunc = o.cov.truncation >= 0.0
                   ? o.cov.truncation
                   : default_truncation(resid, pairs, cal.chosen_b, o.cov.n_star,
                                        o.cov.truncation_fraction);
  CovarianceEstimate cov = covariance_curve(resid, pairs, cal.chosen_b, o.cov.n_star, trunc);
  cov.sigma2_hat = sigma2_hat;
  CorrelationEstimate rho = estimate_correlation(cov, parse_correlation_mode(o.cov.mode));

  CsvWriter cc(out / "covariance.csv", {"t", "c_hat", "rho_hat", "valid", "clamped"});
  for (std::size_t k = 0; k < cov.t_grid.size(); ++k) {
    cc.row({format_double(cov.t_grid[k]), format_double(cov.c_hat[k]), format_double(rho.rho[k]),
            cov.valid[k] ? "1" : "0", rho.clamped[k] ? "1" : "0"});
  }
  CsvWriter ct(out / "calibration.csv", {"b", "sigma2_tilde", "discrepancy", "refined", "chosen"});
  for (std::size_t k = 0; k < cal.b_candidates.size(); ++k) {
    ct.row({format_double(cal.b_candidates[k]), format_double(cal.sigma2_tilde[k]),
            format_double(cal.discrepancy[k]), cal.refined[k] ? "1" : "0",
            k == cal.chosen_index ? "1" : "0"});
  }

  Report r;
  r.add("command", "covariance");
  report_selection(r, data, pl);
  r.add("h_t", h_t);
  r.add("sigma2_hat", sigma2_hat);
  r.add("sigma2_tilde", cov.sigma2_tilde);
  r.add("delta_n", cal.delta_n);
  r.add("b", cal.chosen_b);
  r.add("calibration_discrepancy", cal.discrepancy[cal.chosen_index]);
  r.add("calibration_fallback", cal.fallback ? "yes" : "no");
  r.add("truncation_t", trunc);
  r.add("dropped_grid_points", cov.dropped);
  r.add("correlation_mode", o.cov.mode);
  if (cal.fallback) {
    r.note("no b candidate met delta_n; using the argmin of the discrepancy");
  }
  if (cov.out_of_range) {
    r.note("some |c_hat| exceed 1.5 * sigma2_tilde");
  }
  if (rho.any_clamped) {
    r.note("correlation estimates clamped to [-1, 1]");
  }
  if (cov.dropped > 0) {
    r.note(std::to_string(cov.dropped) + " grid points had empty windows");
  }
  write_text(out / "kernel.txt", pl.kz.to_record() + "\n");
  write_text(out / "report.txt", r.str());
  if (cal.fallback) {
    std::cerr << "warning: calibration fell back to the argmin discrepancy\n";
  }
  return kOk;
}

int cmd_simulate(const Options& o, const fs::path& out)
{
  if (o.sim.scenarios.empty()) {
    throw InvalidArgument("--scenarios is required");
  }
  auto scenarios = read_scenarios(o.sim.scenarios);
  if (o.sim.trials > 0) {
    for (auto& s : scenarios) {
      s.sim.n_trials = o.sim.trials;
    }
  }
  TableOptions to;
  to.zeta = o.sim.zeta;
  to.objective = parse_objective(o.sim.objective);
  to.covariance.delta_n = o.cov.delta_n;
  to.covariance.n_star = o.cov.n_star;
  to.covariance.b_count = o.cov.b_count;
  to.covariance.refine = !o.cov.no_refine;
  to.covariance.truncation_t = o.cov.truncation;
  to.covariance.truncation_fraction = o.cov.truncation_fraction;
  to.covariance.mode = parse_correlation_mode(o.cov.mode);
  to.grid = grid_options(o.fit);

  auto t0 = std::chrono::steady_clock::now();
  auto results = run_table(scenarios, to);
  double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  write_table_csv(out / "table1_mse_prac.csv", results, TableMetric::MsePrac);
  write_table_csv(out / "table2_mse_sigma2.csv", results, TableMetric::MseSigma2);
  write_table_csv(out / "table3_sse_cor.csv", results, TableMetric::SseCor);
  write_trials_csv(out / "trials.csv", results);

  Report r;
  r.add("command", "simulate");
  r.add("scenarios", results.size());
  std::size_t failures = 0, fallbacks = 0;
  for (const auto& res : results) {
    r.add("scenario", scenario_line(res.scenario));
    for (const auto& s : res.summary) {
      failures += s.failures;
      fallbacks += s.fallbacks;
      if (s.failures > 0) {
        r.note(s.method + ": " + std::to_string(s.failures) + " failed trials excluded");
      }
    }
  }
  r.add("failed_trials", failures);
  r.add("calibration_fallbacks", fallbacks);
  // wall time stays out of the report so reruns are byte-identical
  write_text(out / "report.txt", r.str());
  std::cerr << "simulate: " << results.size() << " scenarios in " << seconds << " s\n";
  return kOk;
}

int cmd_bench(const Options& o, const fs::path& out)
{
  using clock = std::chrono::steady_clock;
  SimScenario scn;
  scn.n = static_cast<std::size_t>(o.bench.n);
  scn.model.c = o.bench.c;
  scn.seed = o.bench.seed;
  CsvWriter csv(out / "bench.csv", {"stage", "repeat", "seconds"});
  for (int rep = 0; rep < o.bench.repeats; ++rep) {
    auto t0 = clock::now();
    auto sim = generate(scn, child_seed(scn.seed, static_cast<std::uint64_t>(rep)));
    auto t1 = clock::now();
    auto kz = build_annulus_kernel(1.0, 1.5, 2, KernelObjective::MinProduct);
    auto t2 = clock::now();
    ProductEpanechnikov ko(2);
    auto sel = select_h_z(sim.data, kz, default_grid(sim.data, kz));
    double h_o = factor_convert(sel, kz, ko, 2);
    auto t3 = clock::now();
    auto fit = fit_all(sim.data, h_o, ko);
    PairSet pairs(sim.data);
    auto report = estimate_error_covariance({fit.residuals.data(), sim.data.size()}, pairs,
                                            rss(fit));
    auto t4 = clock::now();
    auto secs = [](auto a, auto b) { return std::chrono::duration<double>(b - a).count(); };
    std::string r = std::to_string(rep);
    csv.row({"generate", r, format_double(secs(t0, t1))});
    csv.row({"kernel", r, format_double(secs(t1, t2))});
    csv.row({"select_h_z", r, format_double(secs(t2, t3))});
    csv.row({"covariance", r, format_double(secs(t3, t4))});
  }
  std::cout << "threads: " << thread_count() << '\n';
  return kOk;
}

void add_fit_options(CLI::App* sub, FitParams& p, bool with_surface)
{
  sub->add_option("-i,--input", p.input, "CSV with columns x1..xD and y");
  sub->add_option("--metric", p.metric, "euclidean or haversine (x1 = lat, x2 = lon, km)")
    ->capture_default_str();
  sub->add_option("--c1", p.c1, "inner radius of the zero-annulus kernel")->capture_default_str();
  sub->add_option("--c2-offset", p.c2_offset, "c2 = c1 + offset")->capture_default_str();
  sub->add_option("--objective", p.objective, "MinVariance, MinAMISE or MinProduct")
    ->capture_default_str();
  sub->add_option("--kernel-file", p.kernel_file, "reuse a kernel.txt record");
  sub->add_option("--grid-points", p.grid_points, "bandwidth grid size")->capture_default_str();
  sub->add_option("--grid-coverage", p.grid_coverage, "share of points needing neighbours at h_min")
    ->capture_default_str();
  sub->add_option("--h-min", p.h_min, "grid lower bound (0 = data driven)")->capture_default_str();
  sub->add_option("--h-max", p.h_max, "grid upper bound (0 = data driven)")->capture_default_str();
  if (with_surface) {
    sub->add_option("--surface-points", p.surface_points, "evaluation points per axis (0 = auto)")
      ->capture_default_str();
  }
}

void add_cov_options(CLI::App* sub, CovParams& p)
{
  sub->add_option("--delta-n", p.delta_n, "calibration tolerance")->capture_default_str();
  sub->add_option("--n-star", p.n_star, "lag grid size")->capture_default_str();
  sub->add_option("--b-count", p.b_count, "number of default b candidates")->capture_default_str();
  sub->add_option("--b-list", p.b_list, "explicit increasing b candidates")->delimiter(',');
  sub->add_flag("--no-refine", p.no_refine, "disable bracket refinement of b");
  sub->add_option("--truncation", p.truncation, "lag beyond which C_hat = 0 (-1 = auto)")
    ->capture_default_str();
  sub->add_option("--truncation-fraction", p.truncation_fraction,
                  "auto truncation threshold relative to C_hat(0)")
    ->capture_default_str();
  sub->add_option("--mode", p.mode, "correlation denominator: ByChat0 or BySigma2Hat")
    ->capture_default_str();
}

} // namespace

int main(int argc, char** argv)
{
  CLI::App app{"Kernel regression with correlated errors"};
  app.set_config("--config", "", "INI/TOML configuration; command-line flags take precedence");
  app.require_subcommand(1);
  app.fallthrough();
  Options o;
  app.add_option("-o,--output", o.output, "output directory")->capture_default_str();

  auto* fit = app.add_subcommand("fit", "select bandwidths and fit the regression surface");
  add_fit_options(fit, o.fit, true);

  auto* elbow = app.add_subcommand("elbow", "scan inner radii c1 and pick the elbow");
  add_fit_options(elbow, o.fit, false);
  elbow->add_option("--c1-list", o.elbow.c1_list, "candidate c1 values (default 0,0.25,...,6)")
    ->delimiter(',');
  elbow->add_option("--threshold", o.elbow.threshold, "relative change counted as stable")
    ->capture_default_str();
  elbow->add_option("--stable-steps", o.elbow.stable_steps, "consecutive stable steps")
    ->capture_default_str();

  auto* cov = app.add_subcommand("covariance", "estimate the error covariance and correlation");
  add_fit_options(cov, o.fit, false);
  add_cov_options(cov, o.cov);

  auto* sim = app.add_subcommand("simulate", "run the simulation tables");
  sim->add_option("--scenarios", o.sim.scenarios, "scenario file, one scenario per line");
  sim->add_option("--trials", o.sim.trials, "override trials per scenario (0 = from file)")
    ->capture_default_str();
  sim->add_option("--zeta", o.sim.zeta, "SSE_cor correlation threshold")->capture_default_str();
  sim->add_option("--objective", o.sim.objective, "K_z coefficient objective")
    ->capture_default_str();
  sim->add_option("--grid-points", o.fit.grid_points, "bandwidth grid size")
    ->capture_default_str();
  add_cov_options(sim, o.cov);

  auto* bench = app.add_subcommand("bench", "time the main pipeline stages");
  bench->add_option("--n", o.bench.n, "sample size")->capture_default_str();
  bench->add_option("--seed", o.bench.seed, "master seed")->capture_default_str();
  bench->add_option("--c", o.bench.c, "spherical range parameter")->capture_default_str();
  bench->add_option("--repeats", o.bench.repeats, "repetitions")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    fs::path out = o.output;
    fs::create_directories(out);
    write_text(out / "config.ini", echo_config(app));
    if (*fit) {
      return cmd_fit(o, out);
    }
    if (*elbow) {
      return cmd_elbow(o, out);
    }
    if (*cov) {
      return cmd_covariance(o, out);
    }
    if (*sim) {
      return cmd_simulate(o, out);
    }
    if (*bench) {
      return cmd_bench(o, out);
    }
  } catch (const InvalidArgument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const IoError& e) {
    std::cerr << "I/O error: " << e.what() << '\n';
    return kIo;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "I/O error: " << e.what() << '\n';
    return kIo;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return kNumerical;
  }
  return kUsage;
}
