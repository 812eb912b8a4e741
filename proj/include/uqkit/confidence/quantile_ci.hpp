#ifndef UQKIT_CONFIDENCE_QUANTILE_CI_HPP_
#define UQKIT_CONFIDENCE_QUANTILE_CI_HPP_

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "uqkit/core/dataset.hpp"
#include "uqkit/core/error.hpp"
#include "uqkit/density/kde.hpp"

namespace uqkit {

inline constexpr double kInfiniteSize = std::numeric_limits<double>::infinity();

struct EpsGamma {
  double eps = 0.0;
  double gamma = 0.0;
  double objective = 0.0;  // eps + gamma
};

/*
 * eps + sqrt(-log(bound - (1 - eps)^n) / (2 N)) for an experimental sample
 * of size n and N surrogate evaluations. N = infinity drops the gamma term.
 * Throws InfeasibleError unless (1 - eps)^n < bound.
 */
inline EpsGamma eps_gamma_objective(int n, double big_n, double bound, double eps) {
  const double tail = std::exp(static_cast<double>(n) * std::log1p(-eps));
  const double slack = bound - tail;
  if (!(eps > 0.0 && eps < 1.0) || !(slack > 0.0)) {
    throw InfeasibleError("(1 - eps)^n < " + std::to_string(bound) +
                          " does not hold at eps = " + std::to_string(eps));
  }
  EpsGamma out;
  out.eps = eps;
  out.gamma = std::isinf(big_n) ? 0.0 : std::sqrt(-std::log(slack) / (2.0 * big_n));
  out.objective = out.eps + out.gamma;
  return out;
}

// Smallest admissible eps is strictly above 1 - bound^(1/n).
inline double eps_lower_boundary(int n, double bound) {
  return -std::expm1(std::log(bound) / static_cast<double>(n));
}

inline void check_eps_gamma_inputs(int n, double big_n, double bound) {
  if (n < 1) throw DomainError("experimental sample size must be >= 1");
  if (!(big_n > 0.0)) throw DomainError("surrogate sample size must be positive");
  if (!(bound > 0.0)) {
    throw InfeasibleError("no eps satisfies (1 - eps)^n < " + std::to_string(bound));
  }
  if (!(bound < 1.0)) {
    throw DomainError("the bound in (1 - eps)^n < bound must lie in (0, 1)");
  }
}

/*
 * Minimizes eps_gamma_objective over eps. A log-spaced scan of the distance
 * to the boundary locates the best cell, golden-section search refines it.
 * For N = infinity the infimum is the boundary itself; the returned eps sits
 * just above it.
 */
inline EpsGamma minimize_eps_gamma(int n, double big_n, double bound) {
  check_eps_gamma_inputs(n, big_n, bound);
  const double e0 = eps_lower_boundary(n, bound);
  const double span = 1.0 - e0;
  auto at = [&](double t) { return eps_gamma_objective(n, big_n, bound, e0 + t); };
  auto feasible_t = [&](double t) {
    while (t < span) {
      const double eps = e0 + t;
      if (eps < 1.0 && std::exp(n * std::log1p(-eps)) < bound) return t;
      t *= 2.0;
    }
    return span * 0.5;
  };

  if (std::isinf(big_n)) {
    return at(feasible_t(std::max(1e-15, 1e-12 * e0)));
  }

  constexpr int kScan = 4000;
  const double t_min = feasible_t(std::max(1e-300, 1e-15 * span));
  const double t_max = span * (1.0 - 1e-12);
  std::vector<double> ts(kScan);
  const double ratio = std::log(t_max / t_min) / (kScan - 1);
  for (int i = 0; i < kScan; ++i) ts[i] = t_min * std::exp(ratio * i);
  ts.back() = t_max;
  int best = 0;
  double best_value = std::numeric_limits<double>::infinity();
  for (int i = 0; i < kScan; ++i) {
    const double v = at(ts[i]).objective;
    if (v < best_value) {
      best_value = v;
      best = i;
    }
  }
  double a = ts[std::max(0, best - 1)];
  double b = ts[std::min(kScan - 1, best + 1)];
  constexpr double kInvPhi = 0.6180339887498949;
  double c = b - kInvPhi * (b - a);
  double d = a + kInvPhi * (b - a);
  double fc = at(c).objective;
  double fd = at(d).objective;
  for (int it = 0; it < 200 && (b - a) > 1e-15 * (e0 + b); ++it) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - kInvPhi * (b - a);
      fc = at(c).objective;
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + kInvPhi * (b - a);
      fd = at(d).objective;
    }
  }
  EpsGamma out = at(ts[best]);
  for (double t : {c, d}) {
    const EpsGamma cand = at(t);
    if (cand.objective < out.objective) out = cand;
  }
  return out;
}

// sqrt(-log(delta_delta / 2) / (2 N)), the offset of N1(n)/N and N2(n)/N.
inline double level_offset(double big_n, double delta_delta) {
  if (std::isinf(big_n)) return 0.0;
  return std::sqrt(-std::log(0.5 * delta_delta) / (2.0 * big_n));
}

inline std::vector<double> default_delta_fractions() {
  std::vector<double> f;
  for (int k = 1; k <= 9; ++k) f.push_back(k / 10.0);
  return f;
}

struct FeasibilityReport {
  bool feasible = false;
  double delta_delta = std::numeric_limits<double>::quiet_NaN();
  EpsGamma eps_gamma;
  double lower_level = std::numeric_limits<double>::quiet_NaN();
  double upper_level = std::numeric_limits<double>::quiet_NaN();
};

/*
 * Checks whether the quantile levels alpha - offset - eps - gamma and
 * alpha + offset + eps + gamma lie in (0, 1) for some delta_delta on the
 * grid. With N = infinity eps approaches its boundary, so the test there is
 * on the infimum. Among feasible grid points the one with the smallest
 * eps + gamma is reported; without one, the overall smallest.
 */
inline FeasibilityReport ci_feasibility(int n, double alpha, double delta,
                                        std::vector<double> delta_delta_grid = {},
                                        double big_n = kInfiniteSize) {
  check_alpha(alpha);
  if (!(delta > 0.0 && delta < 1.0)) throw DomainError("delta must lie in (0, 1)");
  if (n < 1) throw DomainError("experimental sample size must be >= 1");
  if (delta_delta_grid.empty()) {
    for (double f : default_delta_fractions()) delta_delta_grid.push_back(f * delta);
  }
  FeasibilityReport best;
  double best_objective = std::numeric_limits<double>::infinity();
  bool best_feasible = false;
  for (double dd : delta_delta_grid) {
    if (!(dd > 0.0 && dd < delta)) {
      throw DomainError("delta_delta must lie in (0, delta)");
    }
    const double bound = delta - dd;
    EpsGamma eg;
    if (std::isinf(big_n)) {
      const double e0 = eps_lower_boundary(n, bound);
      eg = EpsGamma{e0, 0.0, e0};
    } else {
      eg = minimize_eps_gamma(n, big_n, bound);
    }
    const double offset = level_offset(big_n, dd);
    const double lo = alpha - offset - eg.objective;
    const double hi = alpha + offset + eg.objective;
    const bool ok = lo > 0.0 && hi < 1.0;
    if ((ok && !best_feasible) || (ok == best_feasible && eg.objective < best_objective)) {
      best_feasible = ok;
      best_objective = eg.objective;
      best = FeasibilityReport{ok, dd, eg, lo, hi};
    }
  }
  return best;
}

// Smallest n (searched upward to max_n) for which ci_feasibility succeeds.
inline int minimal_feasible_n(double alpha, double delta,
                              const std::vector<double> &delta_fractions = {},
                              double big_n = kInfiniteSize, int max_n = 100000) {
  std::vector<double> grid;
  for (double f : delta_fractions.empty() ? default_delta_fractions() : delta_fractions) {
    grid.push_back(f * delta);
  }
  for (int n = 1; n <= max_n; ++n) {
    if (ci_feasibility(n, alpha, delta, grid, big_n).feasible) return n;
  }
  return -1;
}

/*
 * Smallest delta (to 1e-10, by bisection) for which some delta_delta =
 * fraction * delta is feasible; -1 if even delta -> 1 fails.
 */
inline double minimal_feasible_delta(int n, double alpha,
                                     const std::vector<double> &delta_fractions = {},
                                     double big_n = kInfiniteSize) {
  const std::vector<double> fractions =
      delta_fractions.empty() ? default_delta_fractions() : delta_fractions;
  auto feasible = [&](double delta) {
    std::vector<double> grid;
    for (double f : fractions) grid.push_back(f * delta);
    try {
      return ci_feasibility(n, alpha, delta, grid, big_n).feasible;
    } catch (const InfeasibleError &) {
      return false;
    }
  };
  double hi = 1.0 - 1e-12;
  if (!feasible(hi)) return -1.0;
  double lo = 1e-12;
  if (feasible(lo)) return lo;
  while (hi - lo > 1e-10) {
    const double mid = 0.5 * (lo + hi);
    (feasible(mid) ? hi : lo) = mid;
  }
  return hi;
}

struct QuantileCi {
  double lo = 0.0;
  double hi = 0.0;
  double alpha = 0.0;
  double delta = 0.0;
  double delta_delta = 0.0;
  int n = 0;
  double big_n = 0.0;
  double beta = 0.0;     // max_i |Y_i - m(X_i)|
  double eps = 0.0;
  double gamma = 0.0;
  double n1 = 0.0;       // N1(n)
  double n2 = 0.0;       // N2(n)
  double lower_level = 0.0;
  double upper_level = 0.0;

  double width() const { return hi - lo; }
};

/*
 * Interval [q(N1/N - eps - gamma) - beta, q(N2/N + eps + gamma) + beta] from
 * the error bound beta, the experimental size n and surrogate outputs on N
 * fresh inputs. Infeasible levels raise InfeasibleError carrying the
 * minimal delta that would work with the same delta_delta / delta ratio.
 */
inline QuantileCi quantile_ci_from_bound(double beta, int n,
                                         const std::vector<double> &surrogate_outputs,
                                         double alpha, double delta,
                                         double delta_delta) {
  check_alpha(alpha);
  if (!(delta > 0.0 && delta < 1.0)) throw DomainError("delta must lie in (0, 1)");
  if (!(delta_delta > 0.0 && delta_delta < delta)) {
    throw DomainError("delta_delta must lie in (0, delta)");
  }
  if (!(beta >= 0.0)) throw DomainError("error bound must be >= 0");
  if (surrogate_outputs.empty()) {
    throw InsufficientDataError("quantile CI needs surrogate outputs");
  }
  const double big_n = static_cast<double>(surrogate_outputs.size());
  QuantileCi ci;
  ci.alpha = alpha;
  ci.delta = delta;
  ci.delta_delta = delta_delta;
  ci.n = n;
  ci.big_n = big_n;
  ci.beta = beta;
  const double offset = level_offset(big_n, delta_delta);
  ci.n1 = big_n * (alpha - offset);
  ci.n2 = big_n * (alpha + offset);
  EpsGamma eg;
  try {
    eg = minimize_eps_gamma(n, big_n, delta - delta_delta);
  } catch (const InfeasibleError &) {
    eg.objective = std::numeric_limits<double>::infinity();
  }
  ci.eps = eg.eps;
  ci.gamma = eg.gamma;
  ci.lower_level = alpha - offset - eg.objective;
  ci.upper_level = alpha + offset + eg.objective;
  if (!(ci.lower_level > 0.0 && ci.upper_level < 1.0)) {
    const double need =
        minimal_feasible_delta(n, alpha, {delta_delta / delta}, big_n);
    throw InfeasibleError(
        "quantile levels leave (0, 1) for n = " + std::to_string(n) +
            ", alpha = " + std::to_string(alpha) + ", delta = " +
            std::to_string(delta) +
            (need > 0.0 ? "; minimal feasible delta is " + std::to_string(need)
                        : std::string("; no delta < 1 is feasible")),
        need);
  }
  ci.lo = mc_quantile(surrogate_outputs, ci.lower_level).value - beta;
  ci.hi = mc_quantile(surrogate_outputs, ci.upper_level).value + beta;
  return ci;
}

// beta = max_i |Y_i - m(X_i)|.
template <typename Surrogate>
double max_abs_error(const Surrogate &surrogate, const PairedDataset &experimental) {
  return (experimental.outputs() - surrogate.evaluate(experimental.inputs()))
      .cwiseAbs()
      .maxCoeff();
}

/*
 * Confidence interval for the alpha-quantile of Y. `Surrogate` is normally
 * the plain base surrogate; any model with evaluate(Matrix) works.
 */
template <typename Surrogate>
QuantileCi quantile_ci(const PairedDataset &experimental, const Surrogate &surrogate,
                       const std::vector<double> &surrogate_outputs, double alpha,
                       double delta, std::optional<double> delta_delta = std::nullopt) {
  return quantile_ci_from_bound(max_abs_error(surrogate, experimental),
                                static_cast<int>(experimental.size()),
                                surrogate_outputs, alpha, delta,
                                delta_delta ? *delta_delta : 0.5 * delta);
}

/*
 * Tries delta_delta = f * delta for every fraction and keeps the narrowest
 * feasible interval (first one on ties).
 */
template <typename Surrogate>
QuantileCi quantile_ci_sweep(const PairedDataset &experimental, const Surrogate &surrogate,
                             const std::vector<double> &surrogate_outputs, double alpha,
                             double delta, std::vector<double> fractions = {}) {
  if (fractions.empty()) fractions = default_delta_fractions();
  const double beta = max_abs_error(surrogate, experimental);
  const int n = static_cast<int>(experimental.size());
  std::optional<QuantileCi> best;
  for (double f : fractions) {
    try {
      QuantileCi ci = quantile_ci_from_bound(beta, n, surrogate_outputs, alpha, delta, f * delta);
      if (!best || ci.width() < best->width()) best = ci;
    } catch (const InfeasibleError &) {
    }
  }
  if (best) return *best;
  const double need = minimal_feasible_delta(
      n, alpha, fractions, static_cast<double>(surrogate_outputs.size()));
  throw InfeasibleError(
      "no split of delta gives levels inside (0, 1) for n = " + std::to_string(n) +
          ", alpha = " + std::to_string(alpha) + ", delta = " + std::to_string(delta) +
          (need > 0.0 ? "; minimal feasible delta is " + std::to_string(need)
                      : std::string("; no delta < 1 is feasible")),
      need);
}

}  // namespace uqkit

#endif  // UQKIT_CONFIDENCE_QUANTILE_CI_HPP_
