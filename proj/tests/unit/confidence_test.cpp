#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "uqkit/confidence/density_band.hpp"
#include "uqkit/confidence/quantile_ci.hpp"
#include "uqkit/density/kde.hpp"
#include "uqkit/randgen/mvn.hpp"
#include "uqkit/randgen/random.hpp"

namespace uqkit {
namespace {

std::vector<double> normal_draws(std::size_t n, std::uint64_t seed) {
  return to_std_vector(standard_normal_matrix(static_cast<Eigen::Index>(n), 1, seed).col(0));
}

struct Affine {
  double a, b;
  Vector evaluate(const Matrix &x) const { return (a * x.col(0).array() + b).matrix(); }
};

PairedDataset line_experiment(int n, double offset) {
  Matrix x(n, 1);
  Vector y(n);
  for (int i = 0; i < n; ++i) {
    x(i, 0) = i;
    y(i) = 2.0 * i + (i % 2 == 0 ? offset : -offset);
  }
  return PairedDataset(x, y, DataKind::kExperimental);
}

// Minimum of eps + gamma on a uniform eps grid strictly above the boundary.
double grid_minimum(int n, double big_n, double bound, int points) {
  const double e0 = 1.0 - std::pow(bound, 1.0 / n);
  double best = std::numeric_limits<double>::infinity();
  for (int k = 1; k < points; ++k) {
    const double eps = e0 + (1.0 - e0) * k / points;
    const double slack = bound - std::pow(1.0 - eps, n);
    if (!(slack > 0.0)) continue;
    best = std::min(best, eps + std::sqrt(-std::log(slack) / (2.0 * big_n)));
  }
  return best;
}

TEST(EpsGamma, ObjectiveMatchesFormula) {
  const EpsGamma eg = eps_gamma_objective(10, 1e4, 0.025, 0.4);
  const double gamma = std::sqrt(-std::log(0.025 - std::pow(0.6, 10)) / 2e4);
  EXPECT_NEAR(eg.gamma, gamma, 1e-14);
  EXPECT_NEAR(eg.objective, 0.4 + gamma, 1e-14);
}

TEST(EpsGamma, BelowBoundaryThrows) {
  const double e0 = eps_lower_boundary(10, 0.025);
  EXPECT_NEAR(std::pow(1.0 - e0, 10), 0.025, 1e-14);
  EXPECT_THROW(eps_gamma_objective(10, 1e4, 0.025, e0 - 1e-9), InfeasibleError);
  EXPECT_NO_THROW(eps_gamma_objective(10, 1e4, 0.025, e0 + 1e-9));
}

TEST(EpsGamma, MinimumMatchesGridSearch) {
  for (int n : {1, 10, 60, 400}) {
    for (double big_n : {1e3, 1e5, 1e7}) {
      for (double bound : {0.025, 0.3}) {
        const double got = minimize_eps_gamma(n, big_n, bound).objective;
        const double oracle = grid_minimum(n, big_n, bound, 100000);
        EXPECT_LE(got, oracle + 1e-9) << n << " " << big_n << " " << bound;
        EXPECT_NEAR(got, oracle, 1e-6) << n << " " << big_n << " " << bound;
      }
    }
  }
}

TEST(EpsGamma, InfiniteSurrogateSampleApproachesBoundary) {
  const EpsGamma eg = minimize_eps_gamma(10, kInfiniteSize, 0.025);
  EXPECT_EQ(eg.gamma, 0.0);
  EXPECT_NEAR(eg.eps, eps_lower_boundary(10, 0.025), 1e-10);
  double previous = std::numeric_limits<double>::infinity();
  for (double big_n : {1e3, 1e5, 1e7, 1e9}) {
    const double v = minimize_eps_gamma(10, big_n, 0.025).objective;
    EXPECT_LT(v, previous);
    previous = v;
  }
  EXPECT_NEAR(previous, eg.objective, 1e-3);
}

TEST(EpsGamma, BadInputs) {
  EXPECT_THROW(minimize_eps_gamma(0, 1e3, 0.1), DomainError);
  EXPECT_THROW(minimize_eps_gamma(5, 0.0, 0.1), DomainError);
  EXPECT_THROW(minimize_eps_gamma(5, 1e3, -0.1), InfeasibleError);
}

TEST(CiFeasibility, TenMeasurementsAreNotEnough) {
  const FeasibilityReport r = ci_feasibility(10, 0.95, 0.05);
  EXPECT_FALSE(r.feasible);
  EXPECT_GE(r.upper_level, 1.0);
}

TEST(CiFeasibility, MinimalSampleSize) {
  const int n = minimal_feasible_n(0.95, 0.05);
  EXPECT_GE(n, 55);
  EXPECT_LE(n, 70);
  EXPECT_TRUE(ci_feasibility(n, 0.95, 0.05).feasible);
  EXPECT_FALSE(ci_feasibility(n - 1, 0.95, 0.05).feasible);
}

TEST(CiFeasibility, MedianWithLargeDelta) {
  EXPECT_TRUE(ci_feasibility(100, 0.5, 0.5).feasible);
}

TEST(CiFeasibility, MinimalDeltaForTenMeasurements) {
  const double d = minimal_feasible_delta(10, 0.95);
  EXPECT_GE(d, 0.58);
  EXPECT_LE(d, 0.68);
  EXPECT_TRUE(ci_feasibility(10, 0.95, d + 1e-6).feasible);
  EXPECT_FALSE(ci_feasibility(10, 0.95, d - 1e-6).feasible);
}

TEST(CiFeasibility, FiniteSurrogateSampleIsStricter) {
  const int inf = minimal_feasible_n(0.95, 0.05);
  const int fin = minimal_feasible_n(0.95, 0.05, {}, 1e4);
  EXPECT_GE(fin, inf);
}

TEST(QuantileCi, ZeroBiasUsesInnerOrderStatistics) {
  const auto out = normal_draws(100000, 3);
  const QuantileCi ci = quantile_ci_from_bound(0.0, 400, out, 0.5, 0.1, 0.05);
  EXPECT_EQ(ci.lo, mc_quantile(out, ci.lower_level).value);
  EXPECT_EQ(ci.hi, mc_quantile(out, ci.upper_level).value);
  EXPECT_LT(ci.lo, ci.hi);
  EXPECT_LT(ci.lower_level, 0.5);
  EXPECT_GT(ci.upper_level, 0.5);
  EXPECT_NEAR(ci.n1 / ci.big_n, 0.5 - level_offset(1e5, 0.05), 1e-12);
}

TEST(QuantileCi, WidensByTwiceTheBound) {
  const auto out = normal_draws(20000, 4);
  const QuantileCi a = quantile_ci_from_bound(0.0, 200, out, 0.9, 0.2, 0.1);
  double previous = a.width();
  for (double beta : {0.01, 0.1, 1.0}) {
    const QuantileCi b = quantile_ci_from_bound(beta, 200, out, 0.9, 0.2, 0.1);
    EXPECT_NEAR(b.lo, a.lo - beta, 1e-12);
    EXPECT_NEAR(b.hi, a.hi + beta, 1e-12);
    EXPECT_GT(b.width(), previous);
    previous = b.width();
  }
}

TEST(QuantileCi, BoundFromExperimentalData) {
  const PairedDataset exp = line_experiment(300, 0.25);
  const auto out = normal_draws(10000, 5);
  const QuantileCi ci = quantile_ci(exp, Affine{2.0, 0.0}, out, 0.5, 0.2);
  EXPECT_NEAR(ci.beta, 0.25, 1e-12);
  EXPECT_DOUBLE_EQ(ci.delta_delta, 0.1);
  const QuantileCi best = quantile_ci_sweep(exp, Affine{2.0, 0.0}, out, 0.5, 0.2);
  EXPECT_LE(best.width(), ci.width());
}

TEST(QuantileCi, InfeasibleReportsMinimalDelta) {
  const PairedDataset exp = line_experiment(10, 0.0);
  const auto out = normal_draws(100000, 6);
  try {
    quantile_ci(exp, Affine{2.0, 0.0}, out, 0.9, 0.05);
    FAIL() << "expected InfeasibleError";
  } catch (const InfeasibleError &e) {
    EXPECT_GT(e.minimal_delta(), 0.05);
    EXPECT_LT(e.minimal_delta(), 1.0);
    EXPECT_NO_THROW(quantile_ci(exp, Affine{2.0, 0.0}, out, 0.9,
                                std::min(0.999, e.minimal_delta() + 1e-4)));
  }
}

/*
 * Brute force over endpoint pairs. Between breakpoints both objectives are
 * linear in l and r, so the maximum over the constrained polygon sits at a
 * vertex: breakpoints shifted by 0, +-kappa or +-2 beta. Closed J^beta and
 * open J_beta make the values at the vertices the suprema, up to rounding in
 * the shifted endpoints.
 */
double brute_force_sup(BandSide side, double y, double kappa, double beta,
                       const KdeModel &kde, const std::vector<double> &v) {
  const double h = kde.bandwidth();
  std::vector<double> base{y, -1e6, 1e6};
  for (double e : v) {
    for (double s : {0.0, beta, -beta}) {
      for (double t : {0.0, h, -h}) base.push_back(e + s + t);
    }
  }
  std::vector<double> pts;
  for (double b : base) {
    for (double s : {0.0, kappa, -kappa, 2.0 * beta, -2.0 * beta}) pts.push_back(b + s);
  }
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  const double n = static_cast<double>(v.size());
  const double tol = 1e-12 * std::max({std::abs(*std::min_element(v.begin(), v.end())),
                                       std::abs(*std::max_element(v.begin(), v.end())),
                                       beta, kappa});
  auto mass = [&](double a, double b, bool closed) {
    double c = 0.0;
    for (double e : v) {
      c += closed ? (e >= a - tol && e <= b + tol) : (e > a + tol && e < b - tol);
    }
    return c / n;
  };
  double best = -std::numeric_limits<double>::infinity();
  for (double l : pts) {
    if (l > y) break;
    for (double r : pts) {
      if (r < y || r - l < kappa) continue;
      const double f = kde.cdf(r) - kde.cdf(l);
      const double value = side == BandSide::kUpper
                               ? mass(l - beta, r + beta, true) - f
                               : f - mass(l + beta, r - beta, false);
      best = std::max(best, value);
    }
  }
  return best;
}

TEST(IntervalMismatch, MatchesBruteForce) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> unit;
  for (int trial = 0; trial < 12; ++trial) {
    std::vector<double> v(5);
    for (double &e : v) e = unit(rng);
    const double h = 0.02 + 0.2 * unit(rng);
    const double beta = trial % 3 == 0 ? 0.0 : 0.15 * unit(rng);
    const double kappa = 0.01 + 0.3 * unit(rng);
    const KdeModel kde(v, h);
    const IntervalMismatch m(kde, v, beta, kappa);
    std::vector<double> grid = band_grid(-0.3, 1.3, 40);
    const auto up = m.upper_on_grid(grid);
    const auto low = m.lower_on_grid(grid);
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const double y = grid[i];
      EXPECT_NEAR(up[i], brute_force_sup(BandSide::kUpper, y, kappa, beta, kde, v), 1e-10)
          << "trial " << trial << " y " << y;
      EXPECT_NEAR(low[i], brute_force_sup(BandSide::kLower, y, kappa, beta, kde, v), 1e-10)
          << "trial " << trial << " y " << y;
    }
  }
}

TEST(IntervalMismatch, ShortIntervalsWithEmptyInnerSet) {
  const std::vector<double> v{0.1, 0.12, 0.5, 0.52, 0.9};
  const KdeModel kde(v, 0.05);
  for (double y : {0.1, 0.3, 0.5, 0.7}) {
    EXPECT_NEAR(sup_interval_mismatch(BandSide::kLower, y, 0.05, 0.2, kde, v),
                brute_force_sup(BandSide::kLower, y, 0.05, 0.2, kde, v), 1e-10);
  }
}

TEST(IntervalMismatch, NeverNegative) {
  const auto v = normal_draws(2000, 8);
  const KdeModel kde(v, 0.2);
  const IntervalMismatch m(kde, v, 0.0, 0.1);
  const auto grid = band_grid(-3.0, 3.0, 120);
  for (double s : m.upper_on_grid(grid)) EXPECT_GE(s, -1e-12);
  for (double s : m.lower_on_grid(grid)) EXPECT_GE(s, -1e-12);
}

TEST(IntervalMismatch, SinglePointInsideEnlargedInterval) {
  const KdeModel kde({0.4}, 0.1);
  const IntervalMismatch m(kde, {0.4}, 0.05, 0.1);
  EXPECT_EQ(m.mass_closed(0.4 - 0.1 - 0.05, 0.4 + 0.1 + 0.05), 1.0);
  EXPECT_EQ(m.mass_closed(0.4, 0.4), 1.0);
  EXPECT_EQ(m.mass_open(0.4, 0.5), 0.0);
}

TEST(IntervalMismatch, Validation) {
  const KdeModel kde({0.0, 1.0}, 0.1);
  EXPECT_THROW(IntervalMismatch(kde, {}, 0.0, 0.1), InsufficientDataError);
  EXPECT_THROW(IntervalMismatch(kde, {0.0}, -1.0, 0.1), DomainError);
  EXPECT_THROW(IntervalMismatch(kde, {0.0}, 0.0, 0.0), DomainError);
  const IntervalMismatch m(kde, {0.0, 1.0}, 0.0, 0.1);
  EXPECT_THROW(m.upper_on_grid({0.5, 0.2}), DomainError);
}

BandSettings unit_settings(double kappa, std::vector<double> h) {
  BandSettings s;
  s.kappa = kappa;
  s.delta = 0.05;
  s.bandwidths = std::move(h);
  s.lo = -3.0;
  s.hi = 3.0;
  s.grid_steps = 60;
  return s;
}

TEST(DensityBand, LowerIsNonnegativeAndBelowUpper) {
  const auto v = normal_draws(20000, 9);
  const DensityBand b = density_band_from_bound(v, 0.05, 100, unit_settings(0.5, {0.2}));
  ASSERT_EQ(b.grid.size(), 61u);
  for (std::size_t i = 0; i < b.grid.size(); ++i) {
    EXPECT_GE(b.lower[i], 0.0);
    EXPECT_LE(b.lower[i], b.upper[i]);
  }
  EXPECT_GT(b.correction, 0.0);
}

TEST(DensityBand, HalfWidthAtLeastCorrection) {
  const auto v = normal_draws(20000, 10);
  const DensityBand b = density_band_from_bound(v, 0.0, 1000, unit_settings(0.5, {0.2}));
  const KdeModel kde(v, 0.2);
  for (std::size_t i = 0; i < b.grid.size(); ++i) {
    EXPECT_GE(b.upper[i] - kde(b.grid[i]), b.correction - 1e-12);
  }
}

TEST(DensityBand, CombiningBandwidthsNeverWidens) {
  const auto v = normal_draws(20000, 11);
  const DensityBand b =
      density_band_from_bound(v, 0.02, 200, unit_settings(0.4, {0.1, 0.2, 0.4}));
  ASSERT_EQ(b.upper_by_bandwidth.size(), 3u);
  for (std::size_t k = 0; k < 3; ++k) {
    for (std::size_t i = 0; i < b.grid.size(); ++i) {
      EXPECT_LE(b.upper[i], b.upper_by_bandwidth[k][i]);
      EXPECT_GE(b.lower[i], b.lower_by_bandwidth[k][i]);
    }
  }
}

TEST(DensityBand, NarrowsWithMoreSurrogateOutputs) {
  const auto all = normal_draws(100000, 12);
  double previous = std::numeric_limits<double>::infinity();
  for (std::size_t big_n : {1000u, 10000u, 100000u}) {
    const std::vector<double> v(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(big_n));
    const DensityBand b = density_band_from_bound(v, 0.01, 200, unit_settings(0.5, {0.2}));
    double width = 0.0;
    for (std::size_t i = 0; i < b.grid.size(); ++i) width += b.upper[i] - b.lower[i];
    width /= static_cast<double>(b.grid.size());
    EXPECT_LT(width, previous) << big_n;
    previous = width;
  }
}

TEST(DensityBand, Validation) {
  const auto v = normal_draws(100, 13);
  BandSettings s = unit_settings(7.0, {0.2});
  EXPECT_THROW(density_band_from_bound(v, 0.0, 50, s), DomainError);
  s = unit_settings(0.5, {});
  EXPECT_THROW(density_band_from_bound(v, 0.0, 50, s), DomainError);
  s = unit_settings(0.5, {0.2});
  EXPECT_THROW(density_band_from_bound({}, 0.0, 50, s), InsufficientDataError);
  EXPECT_THROW(density_band_from_bound(v, -1.0, 50, s), DomainError);
}

TEST(DensityBand, UsesExperimentalErrorBound) {
  const PairedDataset exp = line_experiment(200, 0.1);
  const auto v = normal_draws(5000, 14);
  const DensityBand b = density_band(v, exp, Affine{2.0, 0.0}, unit_settings(0.5, {0.3}));
  EXPECT_NEAR(b.beta, 0.1, 1e-12);
  EXPECT_EQ(b.n, 200);
}

}  // namespace
}  // namespace uqkit
