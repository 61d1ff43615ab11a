#include "corrsmooth/nelder_mead.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace corrsmooth {

NelderMeadResult
nelder_mead(const std::function<double(const std::vector<double>&)>& f,
            std::vector<double> start,
            const NelderMeadOptions& options)
{
  const std::size_t n = start.size();
  std::vector<std::vector<double>> simplex(n + 1, start);
  for (std::size_t i = 0; i < n; ++i) {
    double step = options.initial_step * std::max(1.0, std::abs(start[i]));
    simplex[i + 1][i] += step;
  }

  NelderMeadResult result;
  std::vector<double> values(n + 1);
  for (std::size_t i = 0; i <= n; ++i) {
    values[i] = f(simplex[i]);
  }
  result.evaluations = static_cast<int>(n + 1);

  std::vector<std::size_t> order(n + 1);
  std::vector<double> centroid(n), trial(n), trial2(n);

  auto spreads = [&] {
    double fs = values[order[n]] - values[order[0]];
    double xs = 0.0;
    for (std::size_t i = 1; i <= n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        xs = std::max(xs, std::abs(simplex[order[i]][j] - simplex[order[0]][j]));
      }
    }
    result.f_spread = fs;
    result.x_spread = xs;
    double fscale = std::max(1.0, std::abs(values[order[0]]));
    return fs <= options.f_tolerance * fscale && xs <= options.x_tolerance;
  };

  while (true) {
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    if (spreads()) {
      result.converged = true;
      break;
    }
    if (result.evaluations >= options.max_evaluations) {
      break;
    }

    const std::size_t worst = order[n];
    std::fill(centroid.begin(), centroid.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        centroid[j] += simplex[order[i]][j] / static_cast<double>(n);
      }
    }
    auto along = [&](double coef, std::vector<double>& out) {
      for (std::size_t j = 0; j < n; ++j) {
        out[j] = centroid[j] + coef * (simplex[worst][j] - centroid[j]);
      }
    };

    along(-1.0, trial);
    double fr = f(trial);
    ++result.evaluations;

    if (fr < values[order[0]]) {
      along(-2.0, trial2);
      double fe = f(trial2);
      ++result.evaluations;
      if (fe < fr) {
        simplex[worst] = trial2;
        values[worst] = fe;
      } else {
        simplex[worst] = trial;
        values[worst] = fr;
      }
      continue;
    }
    if (fr < values[order[n - 1]]) {
      simplex[worst] = trial;
      values[worst] = fr;
      continue;
    }

    // contraction, outside if the reflected point improved on the worst
    bool outside = fr < values[worst];
    along(outside ? -0.5 : 0.5, trial2);
    double fc = f(trial2);
    ++result.evaluations;
    if (fc < (outside ? fr : values[worst])) {
      simplex[worst] = trial2;
      values[worst] = fc;
      continue;
    }

    // shrink toward the best vertex
    const auto& best = simplex[order[0]];
    for (std::size_t i = 1; i <= n; ++i) {
      auto& v = simplex[order[i]];
      for (std::size_t j = 0; j < n; ++j) {
        v[j] = best[j] + 0.5 * (v[j] - best[j]);
      }
      values[order[i]] = f(v);
      ++result.evaluations;
    }
  }

  result.x = simplex[order[0]];
  result.value = values[order[0]];
  return result;
}

} // namespace corrsmooth
