#ifndef UQKIT_OPTIM_NELDER_MEAD_HPP_
#define UQKIT_OPTIM_NELDER_MEAD_HPP_

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <vector>

#include "uqkit/core/dataset.hpp"
#include "uqkit/core/error.hpp"

namespace uqkit {

struct NelderMeadOptions {
  int max_evaluations = 1000;
  double initial_step = 0.5;  // fraction of box width, capped at 1 unit
  double f_tolerance = 1e-10;
  double x_tolerance = 1e-8;
};

struct NelderMeadResult {
  Vector x;
  double value = std::numeric_limits<double>::infinity();
  int evaluations = 0;
  bool converged = false;
};

/*
 * Box-constrained Nelder-Mead minimization. Trial points are projected onto
 * [lower, upper]; non-finite objective values count as +inf. Projection can
 * flatten the simplex against a face, so on convergence it is rebuilt around
 * the best point until a rebuild stops improving. The returned point is never
 * worse than the start.
 */
inline NelderMeadResult nelder_mead(const std::function<double(const Vector &)> &f,
                                    const Vector &start, const Vector &lower,
                                    const Vector &upper,
                                    const NelderMeadOptions &options = {}) {
  const auto d = start.size();
  if (lower.size() != d || upper.size() != d) {
    throw DataError("bound dimension does not match start point");
  }
  if (((upper - lower).array() < 0.0).any()) {
    throw DomainError("lower bound exceeds upper bound");
  }
  NelderMeadResult out;
  auto project = [&](Vector x) {
    return x.cwiseMax(lower).cwiseMin(upper).eval();
  };
  auto eval = [&](const Vector &x) {
    ++out.evaluations;
    const double v = f(x);
    return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
  };

  auto run_simplex = [&](std::vector<Vector> &simplex, std::vector<double> &values) {
    std::vector<std::size_t> order(simplex.size());
    while (out.evaluations < options.max_evaluations) {
      std::iota(order.begin(), order.end(), std::size_t{0});
      std::stable_sort(order.begin(), order.end(),
                       [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
      const std::size_t best = order.front();
      const std::size_t worst = order.back();
      const std::size_t second = order[order.size() - 2];

      double spread = 0.0;
      for (const Vector &x : simplex) {
        spread = std::max(spread, (x - simplex[best]).cwiseAbs().maxCoeff());
      }
      const double fspread = values[worst] - values[best];
      if (spread < options.x_tolerance ||
          (std::isfinite(fspread) &&
           fspread <= options.f_tolerance * (1.0 + std::abs(values[best])))) {
        out.converged = true;
        break;
      }

      Vector centroid = Vector::Zero(d);
      for (std::size_t i = 0; i < simplex.size(); ++i) {
        if (i != worst) centroid += simplex[i];
      }
      centroid /= static_cast<double>(d);

      const Vector xr = project(centroid + (centroid - simplex[worst]));
      const double fr = eval(xr);
      if (fr < values[best]) {
        const Vector xe = project(centroid + 2.0 * (centroid - simplex[worst]));
        const double fe = eval(xe);
        if (fe < fr) {
          simplex[worst] = xe;
          values[worst] = fe;
        } else {
          simplex[worst] = xr;
          values[worst] = fr;
        }
        continue;
      }
      if (fr < values[second]) {
        simplex[worst] = xr;
        values[worst] = fr;
        continue;
      }
      const bool outside = fr < values[worst];
      const Vector xc = outside ? project(centroid + 0.5 * (xr - centroid))
                                : project(centroid + 0.5 * (simplex[worst] - centroid));
      const double fc = eval(xc);
      if (fc < (outside ? fr : values[worst])) {
        simplex[worst] = xc;
        values[worst] = fc;
        continue;
      }
      for (std::size_t i = 0; i < simplex.size(); ++i) {
        if (i == best) continue;
        simplex[i] = project(simplex[best] + 0.5 * (simplex[i] - simplex[best]));
        values[i] = eval(simplex[i]);
      }
    }
  };

  std::vector<Vector> simplex{project(start)};
  std::vector<double> values{eval(simplex[0])};
  for (int rebuild = 0; rebuild < 20; ++rebuild) {
    const auto first = std::min_element(values.begin(), values.end());
    const Vector x0 = simplex[static_cast<std::size_t>(first - values.begin())];
    const double f0 = *first;
    simplex.assign(1, x0);
    values.assign(1, f0);
    for (Eigen::Index j = 0; j < d; ++j) {
      Vector x = x0;
      const double width = upper(j) - lower(j);
      const double step = std::min(1.0, options.initial_step * width);
      x(j) += (x(j) + step <= upper(j)) ? step : -step;
      simplex.push_back(project(x));
      values.push_back(eval(simplex.back()));
    }
    out.converged = false;
    run_simplex(simplex, values);
    const double f1 = *std::min_element(values.begin(), values.end());
    if (!out.converged || out.evaluations >= options.max_evaluations ||
        !(f1 < f0 - options.f_tolerance * (1.0 + std::abs(f0)))) {
      break;
    }
  }
  const auto it = std::min_element(values.begin(), values.end());
  out.x = simplex[static_cast<std::size_t>(it - values.begin())];
  out.value = *it;
  return out;
}

}  // namespace uqkit

#endif  // UQKIT_OPTIM_NELDER_MEAD_HPP_
