// Acceptance run: one PASS/FAIL line per criterion, each at its pinned
// tolerance. Exit status is 0 only when every criterion passes, unless the
// failing ones are listed with --expect-fail (see README).

#include "corrsmooth/bandwidth.hpp"
#include "corrsmooth/covariance.hpp"
#include "corrsmooth/simulate.hpp"
#include "corrsmooth/table.hpp"

#include <CLI11.hpp>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>

using namespace corrsmooth;
using boost::math::quadrature::gauss_kronrod;

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome
{
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point t0)
{
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double v)
{
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

double gk(const std::function<double(double)>& f, double a, double b)
{
  return gauss_kronrod<double, 31>::integrate(f, a, b, 15, 1e-13);
}

PointMatrix uniform_points(std::size_t n, int dim, std::uint64_t seed)
{
  Rng rng(seed);
  PointMatrix x(static_cast<Eigen::Index>(n), dim);
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (int d = 0; d < dim; ++d) {
      x(i, d) = rng.uniform();
    }
  }
  return x;
}

TableScenario sp_scenario(double c, std::uint64_t seed, std::vector<std::string> methods)
{
  TableScenario s;
  s.sim.model.family = CorrelationFamily::Spherical;
  s.sim.model.c = c;
  s.sim.seed = seed;
  s.sim.n_trials = 30;
  for (const auto& m : methods) {
    s.methods.push_back(parse_method(m));
  }
  return s;
}

const MethodSummary& summary_of(const ScenarioResult& r, const std::string& label)
{
  for (const auto& s : r.summary) {
    if (s.method == label) {
      return s;
    }
  }
  throw InvalidArgument("no summary for " + label);
}

bool in_band(double v, double lo, double hi) { return v >= lo && v <= hi; }

// --- criteria -------------------------------------------------------------------

Outcome affine_reproduction()
{
  auto t0 = Clock::now();
  double worst = 0.0;
  for (int dim : {1, 2, 3}) {
    PointMatrix x = uniform_points(200, dim, 100 + dim);
    Eigen::VectorXd y(200);
    for (Eigen::Index i = 0; i < 200; ++i) {
      y(i) = 0.7;
      for (int d = 0; d < dim; ++d) {
        y(i) += (d + 1.5) * x(i, d);
      }
    }
    Dataset data(x, y);
    std::vector<RegressionKernel> kernels{
      ProductEpanechnikov(dim), build_annulus_kernel(1.0, 1.5, dim, KernelObjective::MinAMISE)};
    for (const auto& k : kernels) {
      auto grid = default_grid(data, k);
      FitResult fit = fit_all(data, grid[grid.size() / 2], k);
      if (fit.singular_count > 0) {
        return {false, "singular fit in D=" + std::to_string(dim)};
      }
      worst = std::max(worst, fit.residuals.cwiseAbs().maxCoeff());
    }
  }
  double secs = seconds_since(t0);
  return {worst < 1e-10 && secs < 5.0, "max abs error " + fmt(worst) + ", " + fmt(secs) + " s"};
}

Outcome kernel_constraints()
{
  auto t0 = Clock::now();
  int built = 0;
  double worst_mass = 0.0;
  bool positive = true, zero_outside = true;
  for (auto obj : {KernelObjective::MinVariance, KernelObjective::MinAMISE,
                   KernelObjective::MinProduct}) {
    for (double c1 : {0.5, 1.0, 2.0, 3.0}) {
      for (int dim : {1, 2, 3}) {
        const double c2 = c1 + 0.5;
        auto k = build_annulus_kernel(c1, c2, dim, obj);
        ++built;
        const double area =
          2.0 * std::pow(std::numbers::pi, dim / 2.0) / std::tgamma(dim / 2.0);
        double mass = area * gk([&](double r) { return k.profile(r) * std::pow(r, dim - 1); },
                                c1, c2);
        worst_mass = std::max(worst_mass, std::abs(mass - 1.0));
        for (int i = 0; i < 512; ++i) {
          double r = c1 + (c2 - c1) * (i + 0.5) / 512.0;
          positive = positive && k.profile(r) > 0.0;
        }
        for (double r : {0.0, 0.5 * c1, c1 * (1.0 - 1e-9), c2 * (1.0 + 1e-9), 2.0 * c2}) {
          zero_outside = zero_outside && k.profile(r) == 0.0;
        }
      }
    }
  }
  double worst_moment = 0.0;
  for (double q : {0.1, 0.25, 0.5, 0.75, 1.0}) {
    BoundaryKernel b(q);
    worst_moment = std::max(worst_moment, std::abs(gk([&](double t) { return b(t); }, -1.0, q) - 1.0));
    worst_moment = std::max(worst_moment, std::abs(gk([&](double t) { return t * b(t); }, -1.0, q)));
  }
  double secs = seconds_since(t0);
  bool ok = worst_mass <= 1e-8 && positive && zero_outside && worst_moment <= 1e-10 && secs < 30.0;
  return {ok, std::to_string(built) + " kernels, max |mass-1| " + fmt(worst_mass) +
                ", positive " + (positive ? "yes" : "no") + ", zero outside " +
                (zero_outside ? "yes" : "no") + ", boundary moment error " + fmt(worst_moment) +
                ", " + fmt(secs) + " s"};
}

struct Runs
{
  ScenarioResult c2;
  ScenarioResult c3;
  double c2_seconds = 0.0;
  double c3_seconds = 0.0;
};

Outcome mse_prac_band(const Runs& runs)
{
  const auto& za = summary_of(runs.c2, "ZA(1,1.5)");
  const auto& gcv = summary_of(runs.c2, "GCV");
  bool ok = in_band(za.mse_prac.mean, 0.9e-2, 1.8e-2) && za.mse_prac.count == 30 &&
            za.mse_prac.mean < gcv.mse_prac.mean && runs.c2_seconds < 1200.0;
  return {ok, "ZA(1,1.5) " + fmt(za.mse_prac.mean) + " (sd " + fmt(za.mse_prac.sd) +
                ", band [0.009, 0.018]), GCV " + fmt(gcv.mse_prac.mean) + ", " +
                std::to_string(za.mse_prac.count) + " trials, " + fmt(runs.c2_seconds) + " s"};
}

Outcome min_epan_band(const Runs& runs)
{
  const auto& me = summary_of(runs.c2, "minEpan");
  bool ok = in_band(me.mse_prac.mean, 0.8e-2, 1.6e-2) && me.mse_prac.count == 30;
  return {ok, "minEpan " + fmt(me.mse_prac.mean) + " (band [0.008, 0.016])"};
}

Outcome sigma2_mse_band(const Runs& runs)
{
  const auto& za = summary_of(runs.c3, "ZA(2,2.5)");
  double lo = 0.3 * 18.70e-5, hi = 3.0 * 18.70e-5;
  bool ok = in_band(za.mse_sigma2.mean, lo, hi) && za.mse_sigma2.count == 30 &&
            runs.c3_seconds < 1200.0;
  return {ok, "ZA(2,2.5) MSE_sigma2 " + fmt(za.mse_sigma2.mean) + " (band [" + fmt(lo) + ", " +
                fmt(hi) + "]), " + fmt(runs.c3_seconds) + " s"};
}

Outcome sse_cor_band(const Runs& runs)
{
  const auto& raw = summary_of(runs.c3, "Raw");
  const auto& za = summary_of(runs.c3, "ZA(2,2.5)");
  bool raw_ok = in_band(raw.sse_cor.mean, 0.5 * 38.98, 2.0 * 38.98) && raw.sse_cor.count == 30;
  bool za_ok = in_band(za.sse_cor.mean, 0.5 * 258.42, 2.0 * 258.42) && za.sse_cor.count == 30;
  return {raw_ok && za_ok, "Raw " + fmt(raw.sse_cor.mean) + " (band [19.49, 77.96]) " +
                             (raw_ok ? "in" : "OUT") + ", ZA(2,2.5) " + fmt(za.sse_cor.mean) +
                             " (band [129.2, 516.8]) " + (za_ok ? "in" : "OUT")};
}

Outcome calibration_contract(const Runs& runs)
{
  std::size_t checked = 0, violations = 0, fallbacks_c3 = 0;
  for (const auto* run : {&runs.c2, &runs.c3}) {
    for (const auto& t : run->trials) {
      if (!t.ok || std::isnan(t.b)) {
        continue;
      }
      ++checked;
      if (t.fallback && run == &runs.c3) {
        ++fallbacks_c3;
      }
    }
  }
  // fallback=false records the bound |C_hat(0) - sigma2_hat| <= delta_n; it is
  // re-verified independently below for the SP c=3 ZA(2,2.5) pipeline
  std::size_t recheck = 0;
  for (std::size_t trial = 0; trial < 30; ++trial) {
    auto sim = generate(runs.c3.scenario.sim, child_seed(runs.c3.scenario.sim.seed, trial));
    const TrialRecord* rec = nullptr;
    for (const auto& t : runs.c3.trials) {
      if (t.trial == trial && t.method == "ZA(2,2.5)") {
        rec = &t;
      }
    }
    if (rec == nullptr || !rec->ok) {
      ++violations;
      continue;
    }
    ProductEpanechnikov ko(2);
    FitResult fit = fit_all(sim.data, rec->h, ko);
    PairSet pairs(sim.data);
    double c0 = estimate_covariance(
      {fit.residuals.data(), static_cast<std::size_t>(fit.residuals.size())}, pairs, 0.0, rec->b);
    ++recheck;
    if (!rec->fallback && std::abs(c0 - rec->sigma2_hat) > kDefaultDeltaN) {
      ++violations;
    }
  }
  bool ok = violations == 0 && fallbacks_c3 == 0;
  return {ok, std::to_string(checked) + " calibrations, " + std::to_string(recheck) +
                " rechecked, " + std::to_string(violations) + " violations, SP c=3 fallbacks " +
                std::to_string(fallbacks_c3) + "/" +
                std::to_string(runs.c3.trials.size())};
}

Outcome oracle_sanity(const Runs& runs)
{
  const auto& model = runs.c2.scenario.sim.model;
  double analytic = std::numbers::pi * model.c * model.c / 5.0;
  double quad = 2.0 * std::numbers::pi *
                gk([&](double r) { return r * base_correlation(model, r); }, 0.0, model.c);
  double lib = integrated_correlation(model);
  bool c_rho_ok = std::abs(quad - analytic) < 1e-3 && std::abs(lib - analytic) < 1e-3;

  double h_opt = oracle_bandwidth(model, static_cast<double>(runs.c2.scenario.sim.n),
                                  regression_truth(runs.c2.scenario.sim.mu), ProductEpanechnikov(2));
  std::vector<double> ratios;
  for (const auto& t : runs.c2.trials) {
    if (t.ok && t.method == "ZA(1,1.5)") {
      ratios.push_back(t.h / h_opt);
    }
  }
  if (ratios.size() != 30) {
    return {false, "only " + std::to_string(ratios.size()) + " usable trials"};
  }
  std::sort(ratios.begin(), ratios.end());
  double median = 0.5 * (ratios[14] + ratios[15]);
  bool ok = c_rho_ok && in_band(median, 0.5, 2.0);
  return {ok, "median h_o/h_opt " + fmt(median) + " (h_opt " + fmt(h_opt) + "), C_rho " +
                fmt(lib) + " vs pi c^2/5 " + fmt(analytic) + " (quadrature " + fmt(quad) + ")"};
}

Outcome penalty_mechanism(const Runs& runs)
{
  const auto& scn = runs.c2.scenario.sim;
  auto kz = build_annulus_kernel(1.0, 1.5, 2, KernelObjective::MinProduct);
  ProductEpanechnikov ko(2);
  int wins = 0, usable = 0;
  for (const auto& t : runs.c2.trials) {
    if (!t.ok || t.method != "ZA(1,1.5)") {
      continue;
    }
    auto sim = generate(scn, child_seed(scn.seed, t.trial));
    double pz = correlation_penalty(sim.data, scn.model, t.h_z, kz);
    double po = correlation_penalty(sim.data, scn.model, t.h_z, ko);
    ++usable;
    wins += std::abs(pz) < std::abs(po) ? 1 : 0;
  }
  return {usable == 30 && wins >= 27,
          "K_z smaller in " + std::to_string(wins) + "/" + std::to_string(usable) + " trials at h_z"};
}

Outcome property_suite()
{
  auto t0 = Clock::now();
  std::vector<std::string> failed;
  auto expect = [&](bool cond, const std::string& name) {
    if (!cond) {
      failed.push_back(name);
    }
  };

  PointMatrix x = uniform_points(150, 2, 7);
  std::mt19937_64 gen(8);
  std::normal_distribution<double> z(0.0, 1.0);
  Eigen::VectorXd y1(150), y2(150);
  for (Eigen::Index i = 0; i < 150; ++i) {
    y1(i) = z(gen);
    y2(i) = z(gen);
  }
  auto kz = build_annulus_kernel(1.0, 1.5, 2, KernelObjective::MinAMISE);
  ProductEpanechnikov ko(2);

  // smoother linearity
  for (const RegressionKernel& k : {RegressionKernel(ko), RegressionKernel(kz)}) {
    auto f1 = fit_all(Dataset(x, y1), 0.3, k).fitted;
    auto f2 = fit_all(Dataset(x, y2), 0.3, k).fitted;
    auto f12 = fit_all(Dataset(x, 1.5 * y1 - 0.5 * y2), 0.3, k).fitted;
    expect((f12 - (1.5 * f1 - 0.5 * f2)).cwiseAbs().maxCoeff() < 1e-10, "linearity");
  }

  // affine-weight identities
  Dataset data(x, y1);
  for (const RegressionKernel& k : {RegressionKernel(ko), RegressionKernel(kz)}) {
    for (std::size_t i : {0u, 75u, 149u}) {
      Eigen::VectorXd c = hat_coefficients(data, i, 0.3, k);
      expect(std::abs(c.sum() - 1.0) < 1e-10, "weights sum to one");
      for (int d = 0; d < 2; ++d) {
        double m = 0.0;
        for (Eigen::Index s = 0; s < c.size(); ++s) {
          m += c(s) * (x(s, d) - x(static_cast<Eigen::Index>(i), d));
        }
        expect(std::abs(m) < 1e-10, "first moment vanishes");
      }
    }
  }

  // scale equivariance of C_hat and invariance of rho_hat (ByChat0)
  PairSet pairs(data);
  std::span<const double> v{y1.data(), 150};
  Eigen::VectorXd y4 = 4.0 * y1;
  std::span<const double> v4{y4.data(), 150};
  for (double t : {0.0, 0.05, 0.2}) {
    expect(estimate_covariance(v4, pairs, t, 0.1) == 16.0 * estimate_covariance(v, pairs, t, 0.1),
           "scale equivariance");
  }
  auto r1 = estimate_correlation(covariance_curve(v, pairs, 0.1, 30, 0.4), CorrelationMode::ByChat0);
  auto r4 =
    estimate_correlation(covariance_curve(v4, pairs, 0.1, 30, 0.4), CorrelationMode::ByChat0);
  expect(r1.rho == r4.rho, "correlation scale invariance");

  // permutation invariance
  std::vector<Eigen::Index> perm(150);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), std::mt19937_64(9));
  PointMatrix xp(150, 2);
  Eigen::VectorXd yp(150);
  for (Eigen::Index i = 0; i < 150; ++i) {
    xp.row(i) = x.row(perm[static_cast<std::size_t>(i)]);
    yp(i) = y1(perm[static_cast<std::size_t>(i)]);
  }
  PairSet pp(Dataset(xp, yp));
  for (double t : {0.0, 0.05, 0.2}) {
    double a = estimate_covariance(v, pairs, t, 0.1);
    double b = estimate_covariance({yp.data(), 150}, pp, t, 0.1);
    expect(std::abs(a - b) <= 1e-12 * std::max(1.0, std::abs(a)), "permutation invariance");
  }

  // determinism
  SimScenario s;
  s.model.c = 2.0;
  s.seed = 77;
  auto g1 = generate(s), g2 = generate(s);
  expect(g1.data.responses() == g2.data.responses(), "generation determinism");
  TableScenario ts;
  ts.sim = s;
  ts.sim.n_trials = 1;
  ts.methods = {parse_method("ZA(1,1.5)"), parse_method("Raw")};
  auto t1 = run_table({ts}, {}), t2 = run_table({ts}, {});
  expect(t1[0].trials[0].mse_prac == t2[0].trials[0].mse_prac &&
           t1[0].trials[1].sse_cor == t2[0].trials[1].sse_cor,
         "table determinism");

  double secs = seconds_since(t0);
  std::string detail = failed.empty() ? "all properties hold" : "failed: " + failed.front();
  return {failed.empty(), detail + ", " + fmt(secs) + " s"};
}

} // namespace

int main(int argc, char** argv)
{
  CLI::App app{"acceptance criteria"};
  std::vector<int> expect_fail;
  app.add_option("--expect-fail", expect_fail,
                 "criteria whose failure is documented and should not fail the run")
    ->delimiter(',');
  CLI11_PARSE(app, argc, argv);
  const std::set<int> expected(expect_fail.begin(), expect_fail.end());

  int failures = 0, unexpected = 0;
  auto report = [&](int id, const std::string& name, const Outcome& o) {
    std::printf("%s %2d %s: %s\n", o.pass ? "PASS" : "FAIL", id, name.c_str(), o.detail.c_str());
    std::fflush(stdout);
    if (!o.pass) {
      ++failures;
      if (!expected.contains(id)) {
        ++unexpected;
      }
    } else if (expected.contains(id)) {
      std::printf("note: criterion %d was expected to fail and passed\n", id);
    }
  };
  auto guarded = [](const std::function<Outcome()>& f) -> Outcome {
    try {
      return f();
    } catch (const std::exception& e) {
      return {false, std::string("exception: ") + e.what()};
    }
  };

  report(1, "affine reproduction", guarded(affine_reproduction));
  report(2, "kernel constraints", guarded(kernel_constraints));

  Runs runs;
  TableOptions options;
  auto t0 = Clock::now();
  runs.c2 = run_table({sp_scenario(2.0, 102, {"ZA(1,1.5)", "GCV", "minEpan"})}, options).front();
  runs.c2_seconds = seconds_since(t0);
  t0 = Clock::now();
  runs.c3 = run_table({sp_scenario(3.0, 103, {"ZA(2,2.5)", "Raw"})}, options).front();
  runs.c3_seconds = seconds_since(t0);

  report(3, "MSE_prac band", guarded([&] { return mse_prac_band(runs); }));
  report(4, "minEpan band", guarded([&] { return min_epan_band(runs); }));
  report(5, "sigma2 MSE band", guarded([&] { return sigma2_mse_band(runs); }));
  report(6, "SSE_cor band", guarded([&] { return sse_cor_band(runs); }));
  report(7, "calibration contract", guarded([&] { return calibration_contract(runs); }));
  report(8, "oracle bandwidth", guarded([&] { return oracle_sanity(runs); }));
  report(9, "penalty mechanism", guarded([&] { return penalty_mechanism(runs); }));
  report(10, "property suite", guarded(property_suite));

  std::printf("%d of 10 criteria failed", failures);
  if (failures > 0) {
    std::printf(" (%d not listed in --expect-fail)", unexpected);
  }
  std::printf("\n");
  return unexpected == 0 ? 0 : 1;
}
