#ifndef UQKIT_CONFIDENCE_DENSITY_BAND_HPP_
#define UQKIT_CONFIDENCE_DENSITY_BAND_HPP_

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "uqkit/confidence/quantile_ci.hpp"
#include "uqkit/core/dataset.hpp"
#include "uqkit/core/error.hpp"
#include "uqkit/core/parallel.hpp"
#include "uqkit/density/kde.hpp"

namespace uqkit {

enum class BandSide { kUpper, kLower };

namespace detail {

/*
 * For every ascending query y, max of values[i] over positions in
 * [y, y + width]; -inf where the window is empty. Positions ascending.
 */
inline std::vector<double> sliding_window_max(const std::vector<double> &positions,
                                              const std::vector<double> &values,
                                              const std::vector<double> &queries,
                                              double width) {
  std::vector<double> out(queries.size(), -std::numeric_limits<double>::infinity());
  std::deque<std::size_t> window;  // indices with decreasing values
  std::size_t next = 0;
  for (std::size_t q = 0; q < queries.size(); ++q) {
    const double lo = queries[q];
    const double hi = queries[q] + width;
    while (next < positions.size() && positions[next] <= hi) {
      while (!window.empty() && values[window.back()] <= values[next]) {
        window.pop_back();
      }
      window.push_back(next++);
    }
    while (!window.empty() && positions[window.front()] < lo) window.pop_front();
    if (!window.empty()) out[q] = values[window.front()];
  }
  return out;
}

struct Candidates {
  std::vector<double> x;
  std::vector<double> value;
};

template <typename Fn>
Candidates tabulate(std::vector<double> x, Fn &&fn) {
  std::sort(x.begin(), x.end());
  x.erase(std::unique(x.begin(), x.end()), x.end());
  Candidates c;
  c.value.resize(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) c.value[i] = fn(x[i]);
  c.x = std::move(x);
  return c;
}

// max of values[i] over positions >= t (positions ascending); -inf if none.
inline double suffix_lookup(const std::vector<double> &positions,
                            const std::vector<double> &suffix_max, double t) {
  const auto i = static_cast<std::size_t>(
      std::lower_bound(positions.begin(), positions.end(), t) - positions.begin());
  return i < positions.size() ? suffix_max[i] : -std::numeric_limits<double>::infinity();
}

// max of values[i] over positions <= t; -inf if none.
inline double prefix_lookup(const std::vector<double> &positions,
                            const std::vector<double> &prefix_max, double t) {
  const auto i = static_cast<std::size_t>(
      std::upper_bound(positions.begin(), positions.end(), t) - positions.begin());
  return i > 0 ? prefix_max[i - 1] : -std::numeric_limits<double>::infinity();
}

}  // namespace detail

/*
 * Suprema over intervals J = [l, r] with l <= y <= r and r - l >= kappa of
 *
 *   upper:  mu(J^beta) - int_J f,   J^beta = [l - beta, r + beta]
 *   lower:  int_J f - mu(J_beta),   J_beta = (l + beta, r - beta)
 *
 * where mu is the empirical measure of `outputs` and f the KDE. Intervals
 * may be unbounded (limits count). Both problems split into a function of
 * r plus a function of l; the optimum sits either at r >= y + L with the
 * best l <= y, or on r in [y, y + L] with the best l <= r - L. The second
 * part does not depend on y, so it is tabulated once at every breakpoint of
 * the step and kink structure (exact for the naive kernel) and queried by a
 * sliding window maximum. For the lower side intervals shorter than 2 beta
 * have an empty J_beta and are handled separately.
 */
class IntervalMismatch {
 public:
  IntervalMismatch(const KdeModel &kde, std::vector<double> outputs, double beta,
                   double kappa)
      : kde_(kde), v_(std::move(outputs)), beta_(beta), kappa_(kappa) {
    if (v_.empty()) throw InsufficientDataError("mismatch needs outputs");
    if (!(beta_ >= 0.0)) throw DomainError("beta must be >= 0");
    if (!(kappa_ > 0.0)) throw DomainError("kappa must be > 0");
    std::sort(v_.begin(), v_.end());
    n_ = static_cast<double>(v_.size());
    tol_ = 1e-12 * std::max({std::abs(v_.front()), std::abs(v_.back()), beta_, kappa_});
    build_upper();
    build_lower();
  }

  // Empirical mass of [a, b] and of (a, b).
  double mass_closed(double a, double b) const {
    if (b < a) return 0.0;
    return static_cast<double>(std::upper_bound(v_.begin(), v_.end(), b) -
                               std::lower_bound(v_.begin(), v_.end(), a)) / n_;
  }
  double mass_open(double a, double b) const {
    if (!(b > a)) return 0.0;
    return static_cast<double>(std::lower_bound(v_.begin(), v_.end(), b) -
                               std::upper_bound(v_.begin(), v_.end(), a)) / n_;
  }

  double upper(double y) const { return upper_on_grid({y}).front(); }
  double lower(double y) const { return lower_on_grid({y}).front(); }

  std::vector<double> upper_on_grid(const std::vector<double> &grid) const {
    check_grid(grid);
    const std::vector<double> window =
        detail::sliding_window_max(up_h_.x, up_h_.value, grid, kappa_);
    std::vector<double> out(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const double y = grid[i];
      // r >= y + kappa, l <= y independently
      const double ar = std::max({upper_a(y + kappa_),
                                  detail::suffix_lookup(up_a_x_, up_a_suffix_, y + kappa_),
                                  0.0});
      const double case1 = ar + upper_p(y);
      const double case2 = std::max({window[i], upper_h(y), upper_h(y + kappa_)});
      out[i] = std::max(case1, case2);
    }
    return out;
  }

  std::vector<double> lower_on_grid(const std::vector<double> &grid) const {
    check_grid(grid);
    const double span = std::max(kappa_, 2.0 * beta_);
    const std::vector<double> window =
        detail::sliding_window_max(low_h_.x, low_h_.value, grid, span);
    std::vector<double> short_window;
    if (2.0 * beta_ > kappa_) {
      std::vector<double> shifted(grid.size());
      for (std::size_t i = 0; i < grid.size(); ++i) shifted[i] = grid[i] - 2.0 * beta_;
      short_window =
          detail::sliding_window_max(low_k_.x, low_k_.value, shifted, 2.0 * beta_);
    }
    std::vector<double> out(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const double y = grid[i];
      const double ar = std::max(
          detail::suffix_lookup(low_a_x_, low_a_suffix_, y + span), 0.0);
      const double case1 = ar + lower_q(y);
      const double case2 = std::max({window[i], lower_h(y), lower_h(y + span)});
      double best = std::max(case1, case2);
      if (2.0 * beta_ > kappa_) {
        const double k = std::max({short_window[i], lower_k(y - 2.0 * beta_),
                                   lower_k(y)});
        best = std::max(best, k);
      }
      out[i] = best;
    }
    return out;
  }

 private:
  static void check_grid(const std::vector<double> &grid) {
    for (std::size_t i = 1; i < grid.size(); ++i) {
      if (!(grid[i] > grid[i - 1])) throw DomainError("grid must be strictly ascending");
    }
  }

  /*
   * E(t) = #{v <= t}/N and E-(t) = #{v < t}/N. Breakpoints come back as
   * (v - beta) + beta, so both are widened by a rounding tolerance toward the
   * closure.
   */
  double ecdf(double t) const {
    return static_cast<double>(std::upper_bound(v_.begin(), v_.end(), t + tol_) - v_.begin()) /
           n_;
  }
  double ecdf_left(double t) const {
    return static_cast<double>(std::lower_bound(v_.begin(), v_.end(), t - tol_) - v_.begin()) /
           n_;
  }
  double kde_cdf(double t) const { return kde_.cdf(t); }

  // Upper side: A(r) = E(r + beta) - F(r), B(l) = F(l) - E-(l - beta).
  double upper_a(double r) const { return ecdf(r + beta_) - kde_cdf(r); }
  double upper_b(double l) const { return kde_cdf(l) - ecdf_left(l - beta_); }
  // P(t) = sup_{l <= t} B(l), including l -> -inf.
  double upper_p(double t) const {
    return std::max({0.0, upper_b(t), detail::prefix_lookup(up_b_x_, up_b_prefix_, t)});
  }
  double upper_h(double r) const { return upper_a(r) + upper_p(r - kappa_); }

  // Lower side: a(r) = F(r) - E-(r - beta), b(l) = E(l + beta) - F(l).
  double lower_a(double r) const { return kde_cdf(r) - ecdf_left(r - beta_); }
  double lower_b(double l) const { return ecdf(l + beta_) - kde_cdf(l); }
  double lower_q(double t) const {
    return std::max({0.0, detail::prefix_lookup(low_b_x_, low_b_prefix_, t)});
  }
  double lower_h(double r) const {
    return lower_a(r) + lower_q(r - std::max(kappa_, 2.0 * beta_));
  }
  // Intervals of length 2 beta with empty J_beta.
  double lower_k(double l) const { return kde_cdf(l + 2.0 * beta_) - kde_cdf(l); }

  void build_upper() {
    const double h = kde_.bandwidth();
    // B peaks just before each drop at l = v + beta.
    up_b_x_.reserve(v_.size());
    for (double v : v_) up_b_x_.push_back(v + beta_);
    up_b_prefix_.resize(up_b_x_.size());
    for (std::size_t i = 0; i < up_b_x_.size(); ++i) {
      const double b = upper_b(up_b_x_[i]);
      up_b_prefix_[i] = i == 0 ? b : std::max(up_b_prefix_[i - 1], b);
    }
    // A peaks at each jump r = v - beta.
    for (double v : v_) up_a_x_.push_back(v - beta_);
    up_a_suffix_.resize(up_a_x_.size());
    for (std::size_t i = up_a_x_.size(); i-- > 0;) {
      const double a = upper_a(up_a_x_[i]);
      up_a_suffix_[i] =
          i + 1 == up_a_x_.size() ? a : std::max(up_a_suffix_[i + 1], a);
    }
    std::vector<double> x;
    x.reserve(6 * v_.size());
    for (double v : v_) {
      x.push_back(v - beta_);
      x.push_back(v - h);
      x.push_back(v + h);
      x.push_back(v + beta_ + kappa_);
      x.push_back(v - h + kappa_);
      x.push_back(v + h + kappa_);
    }
    up_h_ = detail::tabulate(std::move(x), [&](double r) { return upper_h(r); });
  }

  void build_lower() {
    const double h = kde_.bandwidth();
    const double span = std::max(kappa_, 2.0 * beta_);
    // b jumps up at l = v - beta and decreases afterwards.
    for (double v : v_) low_b_x_.push_back(v - beta_);
    low_b_prefix_.resize(low_b_x_.size());
    for (std::size_t i = 0; i < low_b_x_.size(); ++i) {
      const double b = lower_b(low_b_x_[i]);
      low_b_prefix_[i] = i == 0 ? b : std::max(low_b_prefix_[i - 1], b);
    }
    // a peaks just before each drop at r = v + beta.
    for (double v : v_) low_a_x_.push_back(v + beta_);
    low_a_suffix_.resize(low_a_x_.size());
    for (std::size_t i = low_a_x_.size(); i-- > 0;) {
      const double a = lower_a(low_a_x_[i]);
      low_a_suffix_[i] =
          i + 1 == low_a_x_.size() ? a : std::max(low_a_suffix_[i + 1], a);
    }
    std::vector<double> x;
    x.reserve(6 * v_.size());
    for (double v : v_) {
      x.push_back(v + beta_);
      x.push_back(v - h);
      x.push_back(v + h);
      x.push_back(v - beta_ + span);
      x.push_back(v - h + span);
      x.push_back(v + h + span);
    }
    low_h_ = detail::tabulate(std::move(x), [&](double r) { return lower_h(r); });
    if (2.0 * beta_ > kappa_) {
      std::vector<double> k;
      k.reserve(4 * v_.size());
      for (double v : v_) {
        k.push_back(v - h);
        k.push_back(v + h);
        k.push_back(v - h - 2.0 * beta_);
        k.push_back(v + h - 2.0 * beta_);
      }
      low_k_ = detail::tabulate(std::move(k), [&](double l) { return lower_k(l); });
    }
  }

  const KdeModel &kde_;
  std::vector<double> v_;
  double beta_;
  double kappa_;
  double n_ = 0.0;
  double tol_ = 0.0;
  std::vector<double> up_b_x_, up_b_prefix_, up_a_x_, up_a_suffix_;
  std::vector<double> low_b_x_, low_b_prefix_, low_a_x_, low_a_suffix_;
  detail::Candidates up_h_, low_h_, low_k_;
};

inline double sup_interval_mismatch(BandSide side, double y, double kappa, double beta,
                                    const KdeModel &kde,
                                    const std::vector<double> &outputs) {
  const IntervalMismatch m(kde, outputs, beta, kappa);
  return side == BandSide::kUpper ? m.upper(y) : m.lower(y);
}

struct BandSettings {
  double kappa = 0.0;
  double delta = 0.05;
  std::vector<double> bandwidths;
  double lo = 0.0;  // evaluation interval
  double hi = 1.0;
  int grid_steps = 200;
};

struct DensityBand {
  std::vector<double> grid;
  std::vector<double> lower;
  std::vector<double> upper;
  double kappa = 0.0;
  double delta = 0.0;
  std::vector<double> bandwidths;
  double beta = 0.0;
  double eps = 0.0;
  double gamma = 0.0;
  double correction = 0.0;  // (eps + gamma + 2 sqrt(log N) / sqrt(N)) / kappa
  int n = 0;
  double big_n = 0.0;
  std::vector<std::vector<double>> lower_by_bandwidth;
  std::vector<std::vector<double>> upper_by_bandwidth;
};

inline std::vector<double> band_grid(double lo, double hi, int steps) {
  std::vector<double> g(static_cast<std::size_t>(steps) + 1);
  for (int k = 0; k <= steps; ++k) g[static_cast<std::size_t>(k)] = lo + (hi - lo) * k / steps;
  g.back() = hi;
  return g;
}

/*
 * Lower and upper density bounds on a grid of grid_steps + 1 points in
 * [lo, hi], one pair per naive-kernel bandwidth, combined by the pointwise
 * minimum of the uppers and maximum of the lowers.
 */
inline DensityBand density_band_from_bound(const std::vector<double> &surrogate_outputs,
                                           double beta, int n,
                                           const BandSettings &settings) {
  if (surrogate_outputs.empty()) throw InsufficientDataError("band needs surrogate outputs");
  if (!(settings.kappa > 0.0)) throw DomainError("kappa must be > 0");
  if (!(settings.delta > 0.0 && settings.delta < 1.0)) {
    throw DomainError("delta must lie in (0, 1)");
  }
  if (!(settings.hi > settings.lo)) throw DomainError("evaluation interval must have lo < hi");
  if (settings.kappa > settings.hi - settings.lo) {
    throw DomainError("kappa exceeds the length of the evaluation interval");
  }
  if (settings.grid_steps < 1) throw DomainError("grid_steps must be >= 1");
  if (settings.bandwidths.empty()) throw DomainError("band needs at least one bandwidth");
  if (!(beta >= 0.0)) throw DomainError("error bound must be >= 0");

  const double big_n = static_cast<double>(surrogate_outputs.size());
  DensityBand band;
  band.kappa = settings.kappa;
  band.delta = settings.delta;
  band.bandwidths = settings.bandwidths;
  band.beta = beta;
  band.n = n;
  band.big_n = big_n;
  const double bound = settings.delta - 2.0 / (big_n * big_n);
  const EpsGamma eg = minimize_eps_gamma(n, big_n, bound);
  band.eps = eg.eps;
  band.gamma = eg.gamma;
  band.correction =
      (eg.objective + 2.0 * std::sqrt(std::log(big_n)) / std::sqrt(big_n)) / settings.kappa;
  band.grid = band_grid(settings.lo, settings.hi, settings.grid_steps);

  const std::size_t nb = settings.bandwidths.size();
  band.lower_by_bandwidth.resize(nb);
  band.upper_by_bandwidth.resize(nb);
  parallel_for(nb, [&](std::size_t k) {
    const KdeModel kde(surrogate_outputs, settings.bandwidths[k], KernelKind::kNaive);
    const IntervalMismatch mismatch(kde, surrogate_outputs, beta, settings.kappa);
    const std::vector<double> up = mismatch.upper_on_grid(band.grid);
    const std::vector<double> low = mismatch.lower_on_grid(band.grid);
    std::vector<double> &u = band.upper_by_bandwidth[k];
    std::vector<double> &l = band.lower_by_bandwidth[k];
    u.resize(band.grid.size());
    l.resize(band.grid.size());
    for (std::size_t i = 0; i < band.grid.size(); ++i) {
      const double f = kde(band.grid[i]);
      u[i] = f + band.correction + up[i] / settings.kappa;
      l[i] = std::max(f - band.correction - low[i] / settings.kappa, 0.0);
    }
  });
  band.upper = band.upper_by_bandwidth.front();
  band.lower = band.lower_by_bandwidth.front();
  for (std::size_t k = 1; k < nb; ++k) {
    for (std::size_t i = 0; i < band.grid.size(); ++i) {
      band.upper[i] = std::min(band.upper[i], band.upper_by_bandwidth[k][i]);
      band.lower[i] = std::max(band.lower[i], band.lower_by_bandwidth[k][i]);
    }
  }
  return band;
}

template <typename Surrogate>
DensityBand density_band(const std::vector<double> &surrogate_outputs,
                         const PairedDataset &experimental, const Surrogate &surrogate,
                         const BandSettings &settings) {
  return density_band_from_bound(surrogate_outputs, max_abs_error(surrogate, experimental),
                                 static_cast<int>(experimental.size()), settings);
}

}  // namespace uqkit

#endif  // UQKIT_CONFIDENCE_DENSITY_BAND_HPP_
