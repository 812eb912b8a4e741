// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <functional>
#include <limits>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include <boost/math/distributions/normal.hpp>

#include "uqkit/uqkit.hpp"

namespace {

using namespace uqkit;

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  int id;
  std::string name;
  double budget_seconds;
  std::function<Outcome()> run;
};

std::string fmt(const char *format, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char *format, ...) {
  char buf[512];
  va_list args;
  va_start(args, format);
  std::vsnprintf(buf, sizeof(buf), format, args);
  va_end(args);
  return buf;
}

Outcome feasibility_claims() {
  const FeasibilityReport ten = ci_feasibility(10, 0.95, 0.05);
  const int n_min = minimal_feasible_n(0.95, 0.05);
  const double d_min = minimal_feasible_delta(10, 0.95);
  const bool pass = !ten.feasible && n_min >= 55 && n_min <= 70 && d_min >= 0.58 &&
                    d_min <= 0.68;
  return {pass, fmt("n=10 feasible=%d, minimal n=%d, minimal delta=%.4f", ten.feasible,
                    n_min, d_min)};
}

Outcome piezo_input_means() {
  const PairedDataset d =
      parse_dataset(std::string(UQKIT_TEST_DATA_DIR) + "/piezo_inputs.csv",
                    ColumnSchema{{"k_rot_y", "k_rot_z", "k_lat_y", "k_lat_z", "h_x"}, "y"});
  const MvnParams p = estimate_mvn(InputSample(d.inputs()));
  // column sums by hand
  const double expected[5] = {1249.0 / 10, 1258.0 / 10, 33.03e7 / 10, 32.79e7 / 10,
                              67.8e-4 / 10};
  double worst = 0.0;
  for (int j = 0; j < 5; ++j) {
    worst = std::max(worst, std::abs(p.mean(j) - expected[j]) / std::abs(expected[j]));
  }
  return {worst <= 1e-12, fmt("k_rot_y mean %.10g, max relative deviation %.2e", p.mean(0),
                              worst)};
}

// Piecewise-constant integral of the naive KDE between sorted breakpoints.
double naive_kde_integral(const std::vector<double> &v, double h) {
  std::vector<double> cuts;
  for (double e : v) {
    cuts.push_back(e - h);
    cuts.push_back(e + h);
  }
  std::sort(cuts.begin(), cuts.end());
  double total = 0.0;
  for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
    const double a = cuts[k], b = cuts[k + 1];
    if (!(b > a)) continue;
    const double mid = 0.5 * (a + b);
    int covered = 0;
    for (double e : v) covered += std::abs(mid - e) < h;
    total += covered / (2.0 * h * static_cast<double>(v.size())) * (b - a);
  }
  return total;
}

Outcome kde_normalization() {
  Engine rng = make_stream(301);
  std::normal_distribution<double> normal;
  std::vector<double> v(1000);
  for (double &e : v) e = normal(rng);
  double worst = 0.0;
  for (double h : {0.01, 0.1, 0.3, 1.0}) {
    const KdeModel m(v, h);
    worst = std::max({worst, std::abs(kde_box_mass(m) - 1.0),
                      std::abs(naive_kde_integral(v, h) - 1.0),
                      std::abs(m.integral(-1e3, 1e3) - 1.0)});
  }
  return {worst <= 1e-9, fmt("max |integral - 1| = %.2e over 4 bandwidths", worst)};
}

Outcome avm_wasserstein() {
  Engine rng = make_stream(401);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unit(0.2, 3.0);
  double worst_exact = 0.0, worst_riemann = 0.0;
  for (int rep = 0; rep < 200; ++rep) {
    std::vector<double> a(100), b(100);
    const double shift = normal(rng), scale = unit(rng);
    for (double &e : a) e = normal(rng);
    for (double &e : b) e = shift + scale * normal(rng);
    std::vector<double> sa = a, sb = b;
    std::sort(sa.begin(), sa.end());
    std::sort(sb.begin(), sb.end());
    double w1 = 0.0;
    for (std::size_t i = 0; i < 100; ++i) w1 += std::abs(sa[i] - sb[i]);
    w1 /= 100.0;
    const AvmResult r = avm(a, b, 100000);
    worst_exact = std::max(worst_exact, std::abs(r.exact - w1));
    worst_riemann = std::max(worst_riemann, std::abs(r.riemann - w1));
  }
  return {worst_exact <= 1e-10 && worst_riemann <= 1e-3,
          fmt("max exact deviation %.2e, max Riemann deviation %.2e", worst_exact,
              worst_riemann)};
}

double dense_gp_loglik(const GpDiscrepancyParams &p, const GpData &data) {
  const Eigen::Index n = data.size();
  Matrix theta(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    for (Eigen::Index l = 0; l < n; ++l) {
      double s = 0.0;
      for (Eigen::Index j = 0; j < data.dim(); ++j) {
        s += p.omega(j) * std::pow(data.x(k, j) - data.x(l, j), 2);
      }
      theta(k, l) = p.sigma2 * std::exp(-s) + (k == l ? p.lambda : 0.0);
    }
  }
  const Eigen::FullPivLU<Matrix> lu(theta);
  const Vector u = (data.y - data.m).array() - p.beta;
  return -0.5 * (u.dot(lu.solve(u)) + std::log(lu.determinant()) +
                 static_cast<double>(n) * std::log(2.0 * std::numbers::pi));
}

Outcome gp_likelihood_oracle() {
  Engine rng = make_stream(501);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> pos(0.05, 2.0);
  std::uniform_int_distribution<int> size(1, 5), dim(1, 3);
  double worst = 0.0;
  int beta_wins = 0;
  for (int rep = 0; rep < 100; ++rep) {
    const Eigen::Index n = size(rng), d = dim(rng);
    GpData data{Matrix(n, d), Vector(n), Vector(n)};
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < d; ++j) data.x(i, j) = normal(rng);
      data.y(i) = normal(rng);
      data.m(i) = 0.3 * normal(rng);
    }
    GpDiscrepancyParams p;
    p.lambda = pos(rng);
    p.beta = normal(rng);
    p.sigma2 = pos(rng);
    p.omega.resize(d);
    for (Eigen::Index j = 0; j < d; ++j) p.omega(j) = pos(rng);
    worst = std::max(worst, std::abs(gp_loglikelihood(p, data) - dense_gp_loglik(p, data)));

    GpDiscrepancyParams q = p;
    q.beta = gp_beta_closed_form(data, p);
    const double at = dense_gp_loglik(q, data);
    q.beta += 0.01;
    const double up = dense_gp_loglik(q, data);
    q.beta -= 0.02;
    const double down = dense_gp_loglik(q, data);
    beta_wins += at > up && at > down;
  }
  return {worst <= 1e-8 && beta_wins == 100,
          fmt("max deviation %.2e, closed-form beta best in %d/100", worst, beta_wins)};
}

Outcome gp_error_sanity() {
  GpDiscrepancyParams p{1.0, 0.0, 0.0, Vector::Ones(1)};
  Matrix x(200, 1);
  x.col(0) = Vector::LinSpaced(200, 0.0, 1.0);
  const GpErrorQuantileReport r = gp_error_quantile(p, x, 0.95, 10000, 601);
  // |N(0,1)| has its 0.95 quantile at the normal 0.975 quantile
  const double folded = boost::math::quantile(boost::math::normal_distribution<double>(), 0.975);
  return {std::abs(r.median - folded) <= 0.05,
          fmt("median %.4f, folded-normal %.4f", r.median, folded)};
}

double l2_error_to_truth(const SyntheticSystem &s, const Matrix &x, const Vector &pred) {
  return std::sqrt((pred - s.truth_on(x)).squaredNorm() / static_cast<double>(x.rows()));
}

Outcome improved_benefit() {
  const SyntheticSystem s = make_mafds_like(BiasKind::kSmooth, 0.0005);
  FunctionFamily base;
  base.interior_knots = 8;
  FunctionFamily residual;
  residual.kind = FamilyKind::kPolyRidge;
  residual.degree = 1;
  int wins = 0;
  for (int rep = 0; rep < 50; ++rep) {
    const std::uint64_t seed = 7000 + static_cast<std::uint64_t>(rep);
    const PairedDataset sim = draw_simulation(s, 500, seed);
    const PairedDataset exp = draw_experiment(s, 10, derive_seed(seed, StreamPurpose::kBootstrap));
    ImprovedFitSettings settings;
    settings.seed = seed;
    const ImprovedSurrogate improved =
        fit_improved_surrogate(base, residual, sim, exp, std::nullopt, settings);
    const Matrix x = draw_inputs(s, 10000, seed + 100000).points();
    const double plain_err = l2_error_to_truth(s, x, improved.base().evaluate(x));
    const double improved_err = l2_error_to_truth(s, x, improved.evaluate(x));
    wins += improved_err < plain_err;
  }
  return {wins >= 45, fmt("improved better in %d/50 replications", wins)};
}

Outcome quantile_ci_coverage() {
  const SyntheticSystem s = make_mafds_like(BiasKind::kSmooth, 0.0);
  const double truth = mafds_oracle::truth_quantile(0.95);
  FunctionFamily family;
  family.interior_knots = 8;
  int covered = 0;
  double width = 0.0;
  for (int rep = 0; rep < 200; ++rep) {
    const std::uint64_t seed = 8000 + static_cast<std::uint64_t>(rep);
    const SurrogateModel m = fit_penalized_ls_gcv(family, draw_simulation(s, 500, seed));
    const PairedDataset exp = draw_experiment(s, 100, seed + 1000000);
    const Vector out = m.evaluate(draw_inputs(s, 1000000, seed + 2000000).points());
    const QuantileCi ci = quantile_ci_sweep(exp, m, to_std_vector(out), 0.95, 0.05);
    covered += ci.lo <= truth && truth <= ci.hi;
    width += ci.width();
  }
  const double coverage = covered / 200.0;
  return {coverage >= 0.95, fmt("coverage %.3f, mean width %.5f, truth %.5f", coverage,
                                width / 200.0, truth)};
}

// Trapezoid integral of values on grid[i..j].
double trapezoid(const std::vector<double> &prefix, std::size_t i, std::size_t j) {
  return prefix[j] - prefix[i];
}

std::vector<double> trapezoid_prefix(const std::vector<double> &grid,
                                     const std::vector<double> &values) {
  std::vector<double> prefix(grid.size(), 0.0);
  for (std::size_t k = 1; k < grid.size(); ++k) {
    prefix[k] = prefix[k - 1] + 0.5 * (values[k] + values[k - 1]) * (grid[k] - grid[k - 1]);
  }
  return prefix;
}

Outcome density_band_coverage() {
  const SyntheticSystem s = make_mafds_like(BiasKind::kSmooth, 0.0);
  FunctionFamily family;
  family.interior_knots = 8;
  BandSettings settings;
  settings.kappa = 0.005;
  settings.delta = 0.05;
  settings.bandwidths = {0.0005, 0.001, 0.002};
  settings.lo = mafds_oracle::truth_quantile(0.001);
  settings.hi = mafds_oracle::truth_quantile(0.999);
  settings.grid_steps = 300;
  int covered = 0;
  for (int rep = 0; rep < 100; ++rep) {
    const std::uint64_t seed = 9000 + static_cast<std::uint64_t>(rep);
    const SurrogateModel m = fit_penalized_ls_gcv(family, draw_simulation(s, 500, seed));
    const PairedDataset exp = draw_experiment(s, 100, seed + 1000000);
    const Vector out = m.evaluate(draw_inputs(s, 100000, seed + 2000000).points());
    const DensityBand band = density_band(to_std_vector(out), exp, m, settings);
    const auto lo = trapezoid_prefix(band.grid, band.lower);
    const auto hi = trapezoid_prefix(band.grid, band.upper);
    bool ok = true;
    for (std::size_t i = 0; ok && i < band.grid.size(); ++i) {
      for (std::size_t j = i + 1; j < band.grid.size(); ++j) {
        if (band.grid[j] - band.grid[i] < settings.kappa) continue;
        const double g = mafds_oracle::truth_cdf(band.grid[j]) -
                         mafds_oracle::truth_cdf(band.grid[i]);
        if (trapezoid(lo, i, j) > g || g > trapezoid(hi, i, j)) {
          ok = false;
          break;
        }
      }
    }
    covered += ok;
  }
  return {covered >= 95, fmt("all intervals covered in %d/100 replications", covered)};
}

std::string serialize(const BootstrapErrorReport &r) {
  std::string out;
  for (double q : r.quantiles) out += format_double(q) + ",";
  return out + format_double(r.median);
}

Outcome bootstrap_quantile() {
  const SyntheticSystem s = make_mafds_like(BiasKind::kLinear, 0.0);
  const double truth = mafds_oracle::abs_bias_quantile(BiasKind::kLinear, kDefaultBias, 0.95);
  const PairedDataset exp = draw_experiment(s, 100, 1001);
  FunctionFamily spline;
  spline.interior_knots = 8;
  const SurrogateModel base = fit_penalized_ls_gcv(spline, draw_simulation(s, 500, 1002));
  FunctionFamily line;
  line.kind = FamilyKind::kPolyRidge;
  BootstrapSettings settings;
  settings.replicates = 500;
  settings.learning_size = 10;
  settings.alpha = 0.95;
  settings.seed = 1003;
  const BootstrapErrorReport a = bootstrap_error_quantile(exp, base, line, settings);
  const BootstrapErrorReport b = bootstrap_error_quantile(exp, base, line, settings);
  const bool within = a.median >= truth / 2.0 && a.median <= truth * 2.0;
  const bool same = serialize(a) == serialize(b);
  return {within && same, fmt("median %.5f, truth %.5f, identical reruns %s", a.median, truth,
                              same ? "yes" : "no")};
}

// Minimum of eps + gamma over a log-spaced grid of eps - boundary.
double eps_gamma_grid_oracle(int n, double big_n, double bound, int points) {
  const double e0 = 1.0 - std::pow(bound, 1.0 / n);
  const double lo = std::log(1e-14), hi = std::log(1.0 - e0);
  double best = std::numeric_limits<double>::infinity();
  for (int k = 0; k < points; ++k) {
    const double eps = e0 + std::exp(lo + (hi - lo) * k / (points - 1));
    const double slack = bound - std::pow(1.0 - eps, n);
    if (!(slack > 0.0) || !(eps < 1.0)) continue;
    best = std::min(best, eps + std::sqrt(-std::log(slack) / (2.0 * big_n)));
  }
  return best;
}

Outcome eps_gamma_optimality() {
  Engine rng = make_stream(1101);
  std::uniform_int_distribution<int> size(1, 500);
  std::uniform_real_distribution<double> log_n(2.0, 7.0), delta(0.01, 0.9), frac(0.05, 0.95);
  double worst = 0.0;
  for (int rep = 0; rep < 50; ++rep) {
    const int n = size(rng);
    const double big_n = std::pow(10.0, log_n(rng));
    const double d = delta(rng);
    const double bound = d - frac(rng) * d;
    const double got = minimize_eps_gamma(n, big_n, bound).objective;
    const double oracle = eps_gamma_grid_oracle(n, big_n, bound, 100000);
    worst = std::max(worst, got - oracle);
  }
  return {worst <= 1e-6, fmt("max excess over grid minimum %.2e", worst)};
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {1, "feasibility of the quantile confidence interval", 5, feasibility_claims},
      {2, "input statistics of the piezo measurements", 1, piezo_input_means},
      {3, "naive KDE normalization", 10, kde_normalization},
      {4, "AVM equals Wasserstein-1", 30, avm_wasserstein},
      {5, "GP likelihood against dense evaluation", 10, gp_likelihood_oracle},
      {6, "GP error quantile, folded normal", 60, gp_error_sanity},
      {7, "improved surrogate beats plain surrogate", 120, improved_benefit},
      {8, "quantile CI coverage", 600, quantile_ci_coverage},
      {9, "density band coverage", 600, density_band_coverage},
      {10, "bootstrap error quantile", 300, bootstrap_quantile},
      {11, "eps-gamma minimization against grid", 10, eps_gamma_optimality},
  };
  int failures = 0;
  for (const Criterion &c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception &e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_budget = secs < c.budget_seconds;
    const bool pass = o.pass && in_budget;
    failures += !pass;
    std::printf("%s %2d %s: %s (%.2f s of %.0f s)\n", pass ? "PASS" : "FAIL", c.id,
                c.name.c_str(), o.detail.c_str(), secs, c.budget_seconds);
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures,
              criteria.size());
  return failures == 0 ? 0 : 1;
}
