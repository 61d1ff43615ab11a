#include "corrsmooth/table.hpp"

#include "corrsmooth/errors.hpp"
#include "corrsmooth/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace corrsmooth {

std::string MethodSpec::label() const
{
  switch (kind) {
  case MethodKind::ZeroAnnulus: {
    std::ostringstream os;
    os << "ZA(" << c1 << "," << c2 << ")";
    return os.str();
  }
  case MethodKind::Gcv:
    return "GCV";
  case MethodKind::MinEpan:
    return "minEpan";
  case MethodKind::Raw:
    return "Raw";
  }
  return "?";
}

MethodSpec parse_method(const std::string& text)
{
  if (text == "GCV") {
    return {MethodKind::Gcv, 0.0, 0.0};
  }
  if (text == "minEpan") {
    return {MethodKind::MinEpan, 0.0, 0.0};
  }
  if (text == "Raw") {
    return {MethodKind::Raw, 0.0, 0.0};
  }
  if (text.size() > 4 && text.starts_with("ZA(") && text.back() == ')') {
    std::string body = text.substr(3, text.size() - 4);
    auto comma = body.find(',');
    if (comma != std::string::npos) {
      try {
        std::size_t used1 = 0, used2 = 0;
        std::string a = body.substr(0, comma), b = body.substr(comma + 1);
        double c1 = std::stod(a, &used1);
        double c2 = std::stod(b, &used2);
        if (used1 == a.size() && used2 == b.size()) {
          return {MethodKind::ZeroAnnulus, c1, c2};
        }
      } catch (const std::logic_error&) {
      }
    }
  }
  throw InvalidArgument("unknown method '" + text + "'");
}

MetricSummary summarize(const std::vector<double>& values)
{
  MetricSummary out;
  out.count = values.size();
  if (values.empty()) {
    return out;
  }
  double mean = 0.0;
  for (double v : values) {
    mean += v;
  }
  mean /= static_cast<double>(values.size());
  out.mean = mean;
  if (values.size() == 1) {
    out.sd = 0.0;
    return out;
  }
  double ss = 0.0;
  for (double v : values) {
    ss += (v - mean) * (v - mean);
  }
  out.sd = std::sqrt(ss / static_cast<double>(values.size() - 1));
  return out;
}

namespace {

struct TrialContext
{
  const SimulatedData& sim;
  const PairSet& pairs;
  const ProductEpanechnikov& ko;
  const CorrelationModel& model;
  const TableOptions& options;
};

double checked_mse(const FitResult& fit, const Eigen::VectorXd& truth)
{
  if (fit.singular_count > 0) {
    throw NumericalError(std::to_string(fit.singular_count) + " singular local fits at h=" +
                         std::to_string(fit.h));
  }
  return mse_prac({fit.fitted.data(), static_cast<std::size_t>(fit.fitted.size())},
                  {truth.data(), static_cast<std::size_t>(truth.size())});
}

void add_covariance(const TrialContext& ctx, const Eigen::VectorXd& residuals, double reference,
                    TrialRecord& rec)
{
  auto report = estimate_error_covariance(
    {residuals.data(), static_cast<std::size_t>(residuals.size())}, ctx.pairs, reference,
    ctx.options.covariance);
  rec.b = report.calibration.chosen_b;
  rec.fallback = report.calibration.fallback;
  rec.sse_cor = sse_cor(report.correlation, ctx.model, ctx.pairs, ctx.options.zeta);
}

//! Regression, variance and correlation metrics for K_o at bandwidth h.
void evaluate_bandwidth(const TrialContext& ctx, double h, TrialRecord& rec)
{
  const Dataset& data = ctx.sim.data;
  rec.h = h;
  FitResult fit = fit_all(data, h, ctx.ko);
  rec.mse_prac = checked_mse(fit, ctx.sim.truth);
  double h_t = variance_bandwidth(h, data.size(), data.dim());
  rec.sigma2_hat = sigma2_rss(data, h_t, ctx.ko);
  rec.sigma2_sq_error = (rec.sigma2_hat - ctx.model.sigma2) * (rec.sigma2_hat - ctx.model.sigma2);
  add_covariance(ctx, fit.residuals, rec.sigma2_hat, rec);
}

void run_raw(const TrialContext& ctx, TrialRecord& rec)
{
  const Eigen::VectorXd& eps = ctx.sim.errors;
  rec.sigma2_hat = eps.squaredNorm() / static_cast<double>(eps.size());
  rec.sigma2_sq_error = (rec.sigma2_hat - ctx.model.sigma2) * (rec.sigma2_hat - ctx.model.sigma2);
  add_covariance(ctx, eps, rec.sigma2_hat, rec);
}

void run_min_epan(const TrialContext& ctx, std::span<const double> ko_grid,
                  const std::vector<TrialRecord>& others, TrialRecord& rec)
{
  std::vector<double> candidates(ko_grid.begin(), ko_grid.end());
  for (const auto& o : others) {
    if (o.ok && std::isfinite(o.h)) {
      candidates.push_back(o.h);
    }
  }
  double best = std::numeric_limits<double>::infinity();
  for (double h : candidates) {
    FitResult fit = fit_all(ctx.sim.data, h, ctx.ko);
    if (fit.singular_count > 0) {
      continue;
    }
    double m = checked_mse(fit, ctx.sim.truth);
    if (m < best) {
      best = m;
      rec.h = h;
    }
  }
  if (!std::isfinite(best)) {
    throw NumericalError("every K_o grid bandwidth was infeasible");
  }
  rec.mse_prac = best;
}

} // namespace

std::vector<TrialRecord> run_trial(const TableScenario& scenario, std::size_t trial,
                                   const std::vector<std::optional<AnnulusKernel>>& annulus,
                                   const TableOptions& options)
{
  const auto& methods = scenario.methods;
  std::vector<TrialRecord> records(methods.size());
  for (std::size_t m = 0; m < methods.size(); ++m) {
    records[m].trial = trial;
    records[m].method = methods[m].label();
  }
  auto fail_all = [&](const std::string& what) {
    for (auto& r : records) {
      r.ok = false;
      r.error = what;
    }
    return records;
  };

  std::optional<SimulatedData> sim;
  try {
    sim = generate(scenario.sim, child_seed(scenario.sim.seed, trial));
  } catch (const NumericalError& e) {
    return fail_all(e.what());
  }
  const PairSet pairs(sim->data);
  const ProductEpanechnikov ko(sim->data.dim());
  const TrialContext ctx{*sim, pairs, ko, scenario.sim.model, options};

  std::vector<double> ko_grid;
  bool ko_grid_ready = false;
  auto grid_for_ko = [&]() -> std::span<const double> {
    if (!ko_grid_ready) {
      ko_grid = default_grid(sim->data, ko, options.grid);
      ko_grid_ready = true;
    }
    return ko_grid;
  };

  // minEpan last so it can include every other method's bandwidth
  std::vector<std::size_t> order;
  for (std::size_t m = 0; m < methods.size(); ++m) {
    if (methods[m].kind != MethodKind::MinEpan) {
      order.push_back(m);
    }
  }
  for (std::size_t m = 0; m < methods.size(); ++m) {
    if (methods[m].kind == MethodKind::MinEpan) {
      order.push_back(m);
    }
  }

  for (std::size_t m : order) {
    TrialRecord& rec = records[m];
    try {
      switch (methods[m].kind) {
      case MethodKind::ZeroAnnulus: {
        const AnnulusKernel& kz = annulus.at(m).value();
        auto grid = default_grid(sim->data, kz, options.grid);
        BandwidthSelection sel = select_h_z(sim->data, kz, grid);
        double h_o = factor_convert(sel, kz, ko, sim->data.dim());
        rec.h_z = sel.h_z;
        evaluate_bandwidth(ctx, h_o, rec);
        break;
      }
      case MethodKind::Gcv: {
        GcvSelection g = gcv_select(sim->data, ko, grid_for_ko());
        evaluate_bandwidth(ctx, g.h, rec);
        break;
      }
      case MethodKind::Raw:
        run_raw(ctx, rec);
        break;
      case MethodKind::MinEpan:
        run_min_epan(ctx, grid_for_ko(), records, rec);
        break;
      }
    } catch (const NumericalError& e) {
      rec = TrialRecord{};
      rec.trial = trial;
      rec.method = methods[m].label();
      rec.ok = false;
      rec.error = e.what();
    }
  }
  return records;
}

std::vector<ScenarioResult> run_table(const std::vector<TableScenario>& scenarios,
                                      const TableOptions& options)
{
  std::vector<ScenarioResult> out;
  out.reserve(scenarios.size());
  for (const auto& scenario : scenarios) {
    scenario.sim.validate();
    if (scenario.methods.empty()) {
      throw InvalidArgument("scenario lists no methods");
    }
    std::vector<std::optional<AnnulusKernel>> annulus(scenario.methods.size());
    for (std::size_t m = 0; m < scenario.methods.size(); ++m) {
      const auto& method = scenario.methods[m];
      if (method.kind == MethodKind::ZeroAnnulus) {
        annulus[m] = build_annulus_kernel(method.c1, method.c2, scenario.sim.model.dim,
                                          options.objective);
      }
    }

    const auto trials = static_cast<std::size_t>(scenario.sim.n_trials);
    std::vector<std::vector<TrialRecord>> per_trial(trials);
    parallel_for(trials, [&](std::size_t t) {
      per_trial[t] = run_trial(scenario, t, annulus, options);
    });

    ScenarioResult result;
    result.scenario = scenario;
    for (auto& recs : per_trial) {
      for (auto& r : recs) {
        result.trials.push_back(std::move(r));
      }
    }
    for (const auto& method : scenario.methods) {
      MethodSummary s;
      s.method = method.label();
      std::vector<double> prac, sig, sse;
      for (const auto& r : result.trials) {
        if (r.method != s.method) {
          continue;
        }
        if (!r.ok) {
          ++s.failures;
          continue;
        }
        s.fallbacks += r.fallback ? 1 : 0;
        if (std::isfinite(r.mse_prac)) {
          prac.push_back(r.mse_prac);
        }
        if (std::isfinite(r.sigma2_sq_error)) {
          sig.push_back(r.sigma2_sq_error);
        }
        if (std::isfinite(r.sse_cor)) {
          sse.push_back(r.sse_cor);
        }
      }
      s.mse_prac = summarize(prac);
      s.mse_sigma2 = summarize(sig);
      s.sse_cor = summarize(sse);
      result.summary.push_back(std::move(s));
    }
    out.push_back(std::move(result));
  }
  return out;
}

} // namespace corrsmooth
