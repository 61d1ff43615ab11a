#include "corrsmooth/bandwidth.hpp"

#include "corrsmooth/errors.hpp"
#include "corrsmooth/parallel.hpp"

#include <boost/math/quadrature/gauss.hpp>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace corrsmooth {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_grid(std::span<const double> grid)
{
  if (grid.empty()) {
    throw InvalidArgument("bandwidth grid is empty");
  }
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!(grid[i] > 0.0) || !std::isfinite(grid[i])) {
      throw InvalidArgument("bandwidth grid must be positive and finite");
    }
    if (i > 0 && !(grid[i] > grid[i - 1])) {
      throw InvalidArgument("bandwidth grid must be strictly increasing");
    }
  }
}

std::vector<double> log_space(double lo, double hi, int points)
{
  std::vector<double> out(static_cast<std::size_t>(points));
  if (points == 1) {
    out[0] = lo;
    return out;
  }
  double step = std::log(hi / lo) / (points - 1);
  for (int i = 0; i < points; ++i) {
    out[static_cast<std::size_t>(i)] = lo * std::exp(step * i);
  }
  out.back() = hi;
  return out;
}

// Smallest index whose value is within `tol` of the minimum finite value.
std::optional<std::size_t> argmin_smallest(const std::vector<double>& values, double tol)
{
  double best = kInf;
  for (double v : values) {
    best = std::min(best, v);
  }
  if (!std::isfinite(best)) {
    return std::nullopt;
  }
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (values[i] <= best + tol) {
      return i;
    }
  }
  return std::nullopt;
}

double response_scale(const Dataset& data)
{
  const auto& y = data.responses();
  double mean = y.mean();
  double var = (y.array() - mean).square().mean();
  return std::max({var, y.squaredNorm() / static_cast<double>(y.size()), 1e-300});
}

} // namespace

std::vector<double> default_grid(const Dataset& data, const RegressionKernel& k,
                                 const GridOptions& options)
{
  if (options.points < 1) {
    throw InvalidArgument("grid needs at least one point");
  }
  const std::size_t n = data.size();
  double diameter = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      diameter = std::max(diameter, data.distance(i, j));
    }
  }

  double inner = 0.0, outer = 1.0, reach = 1.0;
  if (const auto* annulus = std::get_if<AnnulusKernel>(&k)) {
    inner = annulus->c1();
    outer = annulus->c2();
    reach = inner > 0.0 ? inner : outer;
  }
  const double h_max = diameter / (2.0 * reach);

  const auto required = static_cast<std::size_t>(options.neighbour_factor * (data.dim() + 1));
  if (n - 1 < required) {
    throw NumericalError("too few observations for a bandwidth grid");
  }
  std::vector<std::vector<double>> reaches(n);
  double h_lo = kInf;
  parallel_for(n, [&](std::size_t i) {
    reaches[i] = kernel_reach(data, i, k);
    std::sort(reaches[i].begin(), reaches[i].end());
  });
  for (const auto& r : reaches) {
    h_lo = std::min(h_lo, r[required - 1] / outer);
  }

  const bool radial = is_radial(k);
  auto covered = [&](double h) {
    std::size_t ok = 0;
    for (const auto& r : reaches) {
      std::size_t count;
      if (radial) {
        auto lo = std::lower_bound(r.begin(), r.end(), inner * h);
        auto hi = std::upper_bound(r.begin(), r.end(), outer * h);
        count = static_cast<std::size_t>(hi - lo);
      } else {
        count = static_cast<std::size_t>(std::lower_bound(r.begin(), r.end(), h) - r.begin());
      }
      ok += count >= required ? 1 : 0;
    }
    return static_cast<double>(ok) >= options.coverage * static_cast<double>(n);
  };

  double h_min = kInf;
  if (h_lo > 0.0 && h_lo < h_max) {
    for (double h : log_space(h_lo, h_max, 400)) {
      if (covered(h)) {
        h_min = h;
        break;
      }
    }
  }
  if (!std::isfinite(h_min) || !(h_min < h_max)) {
    throw NumericalError("no bandwidth below the domain reach gives enough neighbours; "
                         "the kernel support is too wide for this design");
  }
  return log_space(h_min, h_max, options.points);
}

BandwidthSelection select_h_z(const Dataset& data, const RegressionKernel& kz,
                              std::span<const double> grid)
{
  check_grid(grid);
  BandwidthSelection sel;
  sel.grid.assign(grid.begin(), grid.end());
  sel.rss_trace.assign(grid.size(), kInf);
  for (std::size_t g = 0; g < grid.size(); ++g) {
    FitResult fit = fit_all(data, grid[g], kz);
    if (fit.singular_count == 0) {
      sel.rss_trace[g] = rss(fit);
    }
  }
  auto best = argmin_smallest(sel.rss_trace, 1e-12 * response_scale(data));
  if (!best) {
    std::ostringstream os;
    os << "all " << grid.size() << " candidate bandwidths give singular local fits; "
       << "use a larger upper grid bound (largest tried: " << grid.back() << ")";
    throw NumericalError(os.str());
  }
  sel.index = *best;
  sel.h_z = grid[sel.index];
  sel.h_o = sel.h_z;
  sel.endpoint_hit = grid.size() > 1 && (sel.index == 0 || sel.index + 1 == grid.size());
  return sel;
}

double factor_ratio(const KernelMoments& kz, const KernelMoments& ko, int dim)
{
  double num = ko.muK2 * kz.mu2 * kz.mu2;
  double den = ko.mu2 * ko.mu2 * kz.muK2;
  return std::pow(num / den, 1.0 / (dim + 4));
}

double factor_ratio(const RegressionKernel& kz, const RegressionKernel& ko, int dim)
{
  return factor_ratio(kernel_moments(kz, dim), kernel_moments(ko, dim), dim);
}

double factor_convert(BandwidthSelection& sel, const RegressionKernel& kz,
                      const RegressionKernel& ko, int dim)
{
  sel.factor_ratio = factor_ratio(kz, ko, dim);
  sel.h_o = sel.h_z * sel.factor_ratio;
  return sel.h_o;
}

FactorSelection select_factor_bandwidth(const Dataset& data, double c1, double c2,
                                        KernelObjective objective, const GridOptions& grid)
{
  FactorSelection out{build_annulus_kernel(c1, c2, data.dim(), objective),
                      ProductEpanechnikov(data.dim()), {}};
  auto candidates = default_grid(data, out.kz, grid);
  out.selection = select_h_z(data, out.kz, candidates);
  factor_convert(out.selection, out.kz, out.ko, data.dim());
  return out;
}

// ---------------------------------------------------------------------------

std::size_t pick_elbow(std::span<const double> cbar, const std::vector<bool>& feasible,
                       double threshold, int stable_steps)
{
  std::vector<std::size_t> usable;
  for (std::size_t i = 0; i < cbar.size(); ++i) {
    if (feasible[i] && std::isfinite(cbar[i])) {
      usable.push_back(i);
    }
  }
  const auto steps = static_cast<std::size_t>(std::max(1, stable_steps));
  for (std::size_t j = 0; j + steps < usable.size(); ++j) {
    bool stable = true;
    for (std::size_t s = 0; s < steps && stable; ++s) {
      double a = cbar[usable[j + s]];
      double b = cbar[usable[j + s + 1]];
      stable = std::abs(b - a) / std::abs(a) < threshold;
    }
    if (stable) {
      return usable[j + 1];
    }
  }
  throw NumericalError("no elbow found: C-bar never stabilizes within the candidate list");
}

ElbowDiagnostic elbow_scan(const Dataset& data, std::span<const double> c1_list,
                           const ElbowOptions& options)
{
  if (c1_list.size() < 3) {
    throw InvalidArgument("need >= 3 candidates for stability detection");
  }
  for (std::size_t i = 0; i < c1_list.size(); ++i) {
    if (!(c1_list[i] >= 0.0) || (i > 0 && !(c1_list[i] > c1_list[i - 1]))) {
      throw InvalidArgument("c1 candidates must be non-negative and strictly increasing");
    }
  }
  const std::size_t m = c1_list.size();
  const int dim = data.dim();
  ElbowDiagnostic out;
  out.c1_list.assign(c1_list.begin(), c1_list.end());
  out.cbar.assign(m, std::numeric_limits<double>::quiet_NaN());
  out.h_z = out.cbar;
  out.feasible.assign(m, false);
  out.kernels.assign(m, "");
  out.failures.assign(m, "");

  for (std::size_t i = 0; i < m; ++i) {
    try {
      auto kz = build_annulus_kernel(c1_list[i], c1_list[i] + options.c2_offset, dim,
                                     options.objective);
      auto grid = default_grid(data, kz, options.grid);
      auto sel = select_h_z(data, kz, grid);
      auto mom = kernel_moments(kz, dim);
      out.h_z[i] = sel.h_z;
      out.cbar[i] = std::pow(mom.muK2 / (mom.mu2 * mom.mu2), 1.0 / (dim + 4)) / sel.h_z;
      out.kernels[i] = kz.to_record();
      out.feasible[i] = true;
    } catch (const std::exception& e) {
      out.failures[i] = e.what();
    }
  }
  if (std::none_of(out.feasible.begin(), out.feasible.end(), [](bool f) { return f; })) {
    throw NumericalError("elbow scan failed for every c1 candidate");
  }
  out.chosen_index = pick_elbow(out.cbar, out.feasible, options.threshold, options.stable_steps);
  out.chosen_c1 = out.c1_list[out.chosen_index];
  return out;
}

// ---------------------------------------------------------------------------

double gcv_score(const FitResult& fit)
{
  double r = rss(fit);
  double n = static_cast<double>(fit.fitted.size());
  double denom = 1.0 - fit.leverage.sum() / n;
  if (!(denom > 0.0)) {
    return kInf;
  }
  return r / (denom * denom);
}

GcvSelection gcv_select(const Dataset& data, const RegressionKernel& ko,
                        std::span<const double> grid)
{
  check_grid(grid);
  GcvSelection out;
  out.grid.assign(grid.begin(), grid.end());
  out.gcv_trace.assign(grid.size(), kInf);
  for (std::size_t g = 0; g < grid.size(); ++g) {
    FitResult fit = fit_all(data, grid[g], ko);
    if (fit.singular_count == 0) {
      out.gcv_trace[g] = gcv_score(fit);
    }
  }
  auto best = argmin_smallest(out.gcv_trace, 1e-12 * response_scale(data));
  if (!best) {
    throw NumericalError("all candidate bandwidths give singular local fits; "
                         "use a larger upper grid bound");
  }
  out.index = *best;
  out.h = grid[out.index];
  return out;
}

// ---------------------------------------------------------------------------

double laplacian_integral(const RegressionTruth& truth)
{
  using Gauss = boost::math::quadrature::gauss<double, 16>;
  const int dim = truth.dim;
  if (dim < 1) {
    throw InvalidArgument("dimension must be >= 1");
  }
  constexpr double step = 1e-4;
  std::vector<double> x(static_cast<std::size_t>(dim));

  auto laplacian = [&]() {
    double total = 0.0;
    double centre = truth.mu(x);
    for (int d = 0; d < dim; ++d) {
      double keep = x[d];
      x[d] = keep + step;
      double up = truth.mu(x);
      x[d] = keep - step;
      double down = truth.mu(x);
      x[d] = keep;
      total += (up - 2.0 * centre + down) / (step * step);
    }
    return total;
  };

  std::function<double(int)> nested = [&](int d) -> double {
    if (d == dim) {
      return laplacian();
    }
    return Gauss::integrate(
      [&](double v) {
        x[static_cast<std::size_t>(d)] = v;
        return nested(d + 1);
      },
      0.0, 1.0);
  };
  return nested(0);
}

double oracle_bandwidth(const CorrelationModel& model, double n, const RegressionTruth& truth,
                        const RegressionKernel& ko)
{
  model.validate();
  if (model.sigma2 == 0.0) {
    throw NumericalError("degenerate noise: sigma2 = 0 gives a zero optimal bandwidth");
  }
  if (!(n > 0.0)) {
    throw InvalidArgument("sample size must be positive");
  }
  const int dim = model.dim;
  double c_rho = integrated_correlation(model);
  double delta = laplacian_integral(truth);
  if (delta == 0.0) {
    throw NumericalError("integrated Laplacian of the regression function is zero");
  }
  auto mom = kernel_moments(ko, dim);
  double variance = model.alpha == 1.0 ? c_rho + 1.0 : c_rho;
  double base = 4.0 * model.sigma2 * variance / (delta * delta) * mom.muK2 / (mom.mu2 * mom.mu2);
  return std::pow(base, 1.0 / (dim + 4)) * std::pow(n, -model.alpha / (dim + 4));
}

} // namespace corrsmooth
