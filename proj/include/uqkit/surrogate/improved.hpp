#ifndef UQKIT_SURROGATE_IMPROVED_HPP_
#define UQKIT_SURROGATE_IMPROVED_HPP_

#include <algorithm>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <vector>

#include "uqkit/core/dataset.hpp"
#include "uqkit/core/error.hpp"
#include "uqkit/core/parallel.hpp"
#include "uqkit/randgen/random.hpp"
#include "uqkit/surrogate/fit.hpp"

namespace uqkit {

inline std::vector<double> default_weight_grid() {
  std::vector<double> grid;
  for (int k = 0; k <= 10; ++k) grid.push_back(k / 10.0);
  return grid;
}

struct WeightPenaltyChoice {
  double weight = 1.0;
  double penalty = 0.0;
  double cv_score = std::numeric_limits<double>::infinity();
};

/*
 * k-fold cross-validation over (weight, penalty) pairs for the residual
 * model. The held-out error is measured on experimental residuals only;
 * extra inputs always stay in the training part. Folds come from a seeded
 * permutation (point perm[i] goes to fold i mod folds). Pairs whose fit is
 * singular score +inf. Ties go to the smaller weight, then the smaller
 * penalty. Without extra inputs only weight 1 is considered.
 */
inline WeightPenaltyChoice select_weight_and_penalty(
    const FunctionFamily &family, const Matrix &x, const Vector &residuals,
    const std::optional<Matrix> &extra_inputs, std::vector<double> weight_grid,
    std::vector<double> penalty_grid, int folds, std::uint64_t seed) {
  const auto n = x.rows();
  if (folds < 2) throw DomainError("cross-validation needs folds >= 2");
  if (n < folds) {
    throw InsufficientDataError("cross-validation with " +
                                std::to_string(folds) + " folds needs n >= " +
                                std::to_string(folds) + ", got " +
                                std::to_string(n));
  }
  if (residuals.size() != n) throw DataError("residual count mismatch");
  if (!extra_inputs) weight_grid = {1.0};
  if (weight_grid.empty()) weight_grid = default_weight_grid();
  if (penalty_grid.empty()) penalty_grid = default_penalty_grid();
  for (double w : weight_grid) {
    if (!(w >= 0.0 && w <= 1.0)) {
      throw DomainError("weight grid entries must lie in [0, 1]");
    }
  }
  std::sort(weight_grid.begin(), weight_grid.end());
  std::sort(penalty_grid.begin(), penalty_grid.end());

  std::vector<Eigen::Index> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), Eigen::Index{0});
  Engine rng = make_stream(derive_seed(seed, StreamPurpose::kFolds));
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<int> fold_of(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    fold_of[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])] =
        static_cast<int>(i % folds);
  }

  struct Split {
    Matrix train_x, test_x;
    Vector train_r, test_r;
  };
  std::vector<Split> splits(static_cast<std::size_t>(folds));
  for (int f = 0; f < folds; ++f) {
    std::vector<Eigen::Index> train, test;
    for (Eigen::Index i = 0; i < n; ++i) {
      (fold_of[static_cast<std::size_t>(i)] == f ? test : train).push_back(i);
    }
    Split &s = splits[static_cast<std::size_t>(f)];
    s.train_x = x(train, Eigen::all);
    s.test_x = x(test, Eigen::all);
    s.train_r = residuals(train);
    s.test_r = residuals(test);
  }

  const std::size_t pairs = weight_grid.size() * penalty_grid.size();
  std::vector<double> scores(pairs, std::numeric_limits<double>::infinity());
  parallel_for(pairs, [&](std::size_t k) {
    const double w = weight_grid[k / penalty_grid.size()];
    const FunctionFamily fam =
        family.with_penalty(penalty_grid[k % penalty_grid.size()]);
    double total = 0.0;
    for (const Split &s : splits) {
      try {
        const SurrogateModel m =
            extra_inputs ? fit_residual_model_weighted(fam, s.train_x, s.train_r,
                                                       *extra_inputs, w)
                         : fit_residual_model(fam, s.train_x, s.train_r);
        total += (m.evaluate(s.test_x) - s.test_r).squaredNorm() /
                 static_cast<double>(s.test_r.size());
      } catch (const RankDeficiencyError &) {
        return;
      }
    }
    scores[k] = total / folds;
  });

  WeightPenaltyChoice best;
  for (std::size_t k = 0; k < pairs; ++k) {
    if (scores[k] < best.cv_score) {
      best.cv_score = scores[k];
      best.weight = weight_grid[k / penalty_grid.size()];
      best.penalty = penalty_grid[k % penalty_grid.size()];
    }
  }
  if (!std::isfinite(best.cv_score)) {
    throw RankDeficiencyError(
        "every (weight, penalty) candidate gave a singular residual fit");
  }
  return best;
}

// m_n(x) = m_L(x) + m_eps(x).
class ImprovedSurrogate {
 public:
  ImprovedSurrogate(SurrogateModel base, SurrogateModel residual, double weight)
      : base_(std::move(base)), residual_(std::move(residual)), weight_(weight) {
    if (base_.input_dim() != residual_.input_dim()) {
      throw DataError("base and residual models have different input dimension");
    }
    if (!(weight_ >= 0.0 && weight_ <= 1.0)) {
      throw DomainError("residual weight must lie in [0, 1]");
    }
  }

  const SurrogateModel &base() const { return base_; }
  const SurrogateModel &residual() const { return residual_; }
  double weight() const { return weight_; }
  Eigen::Index input_dim() const { return base_.input_dim(); }

  template <typename Row>
  double operator()(const Row &x) const {
    return base_(x) + residual_(x);
  }

  Vector evaluate(const Matrix &x) const {
    return base_.evaluate(x) + residual_.evaluate(x);
  }

 private:
  SurrogateModel base_;
  SurrogateModel residual_;
  double weight_;
};

inline ImprovedSurrogate improved_surrogate(SurrogateModel base,
                                            SurrogateModel residual,
                                            double weight = 1.0) {
  return ImprovedSurrogate(std::move(base), std::move(residual), weight);
}

struct ImprovedFitSettings {
  std::vector<double> base_penalty_grid;      // GCV grid, default if empty
  std::vector<double> residual_penalty_grid;  // CV grid, default if empty
  std::vector<double> weight_grid;            // default {0, 0.1, ..., 1}
  int folds = 5;
  std::uint64_t seed = 0;
};

/*
 * Whole improved-surrogate workflow: GCV base fit on simulated pairs,
 * residuals on the experimental data, CV choice of (w, penalty), final
 * residual fit. With n < folds the residual penalty falls back to the
 * family's own value and w = 1.
 */
inline ImprovedSurrogate fit_improved_surrogate(
    const FunctionFamily &base_family, const FunctionFamily &residual_family,
    const PairedDataset &simulated, const PairedDataset &experimental,
    const std::optional<Matrix> &extra_inputs,
    const ImprovedFitSettings &settings = {}) {
  if (simulated.dim() != experimental.dim()) {
    throw DataError("simulated and experimental inputs differ in dimension");
  }
  SurrogateModel base =
      fit_penalized_ls_gcv(base_family, simulated, settings.base_penalty_grid);
  const Vector eps = compute_residuals(base, experimental);
  WeightPenaltyChoice choice{1.0, residual_family.penalty,
                             std::numeric_limits<double>::quiet_NaN()};
  if (experimental.size() >= settings.folds) {
    choice = select_weight_and_penalty(
        residual_family, experimental.inputs(), eps, extra_inputs,
        settings.weight_grid, settings.residual_penalty_grid, settings.folds,
        settings.seed);
  }
  const FunctionFamily fam = residual_family.with_penalty(choice.penalty);
  SurrogateModel residual =
      extra_inputs ? fit_residual_model_weighted(fam, experimental.inputs(), eps,
                                                 *extra_inputs, choice.weight)
                   : fit_residual_model(fam, experimental.inputs(), eps);
  residual.info().cv_score = choice.cv_score;
  return ImprovedSurrogate(std::move(base), std::move(residual), choice.weight);
}

}  // namespace uqkit

#endif  // UQKIT_SURROGATE_IMPROVED_HPP_
