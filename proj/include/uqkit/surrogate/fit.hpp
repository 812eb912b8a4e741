#ifndef UQKIT_SURROGATE_FIT_HPP_
#define UQKIT_SURROGATE_FIT_HPP_

#include <Eigen/QR>

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <utility>

#include "uqkit/core/dataset.hpp"
#include "uqkit/core/error.hpp"
#include "uqkit/core/parallel.hpp"
#include "uqkit/surrogate/basis.hpp"

namespace uqkit {

struct FitInfo {
  Eigen::Index training_size = 0;
  double cv_score = std::numeric_limits<double>::quiet_NaN();
  double gcv_score = std::numeric_limits<double>::quiet_NaN();
};

// A fitted member of a FunctionFamily.
class SurrogateModel {
 public:
  SurrogateModel(FunctionFamily family, Basis basis, Vector coefficients,
                 FitInfo info = {})
      : family_(std::move(family)),
        basis_(std::move(basis)),
        coefficients_(std::move(coefficients)),
        info_(info) {
    if (coefficients_.size() != basis_size(basis_)) {
      throw DataError("coefficient count " +
                      std::to_string(coefficients_.size()) +
                      " does not match basis size " +
                      std::to_string(basis_size(basis_)));
    }
  }

  const FunctionFamily &family() const { return family_; }
  const Basis &basis() const { return basis_; }
  const Vector &coefficients() const { return coefficients_; }
  const FitInfo &info() const { return info_; }
  FitInfo &info() { return info_; }
  Eigen::Index input_dim() const { return basis_input_dim(basis_); }

  template <typename Row>
  double operator()(const Row &x) const {
    double sum = 0.0;
    visit_basis(basis_, x, [&](int col, double v) {
      sum += coefficients_(col) * v;
    });
    return sum;
  }

  Vector evaluate(const Matrix &x) const {
    check_dim(x.cols());
    Vector out(x.rows());
    constexpr Eigen::Index kBlock = 8192;
    const auto blocks = static_cast<std::size_t>((x.rows() + kBlock - 1) / kBlock);
    parallel_for(blocks, [&](std::size_t b) {
      const Eigen::Index begin = static_cast<Eigen::Index>(b) * kBlock;
      const Eigen::Index end = std::min(x.rows(), begin + kBlock);
      for (Eigen::Index i = begin; i < end; ++i) out(i) = (*this)(x.row(i));
    });
    return out;
  }

  void check_dim(Eigen::Index d) const {
    if (d != input_dim()) {
      throw DataError("model expects " + std::to_string(input_dim()) +
                      " inputs, got " + std::to_string(d));
    }
  }

 private:
  FunctionFamily family_;
  Basis basis_;
  Vector coefficients_;
  FitInfo info_;
};

// Model that returns the constant c, represented within the family's basis.
inline SurrogateModel constant_model(const FunctionFamily &family,
                                     const Matrix &x, double c) {
  Basis basis = make_basis(family, x);
  Vector coef = basis_constant(basis, c);
  return SurrogateModel(family, std::move(basis), std::move(coef));
}

/*
 * Weighted penalized least squares on a fixed basis:
 *
 *   minimize  sum_i w_i (f(x_i) - t_i)^2 + penalty * c^T P c
 *
 * solved as the augmented least-squares problem
 *   [diag(sqrt w) B; sqrt(penalty) S] c ~ [diag(sqrt w) t; 0],  S^T S = P
 * with column-pivoting QR. Rank deficiency raises RankDeficiencyError.
 */
inline Vector solve_penalized(const Matrix &design, const Vector &targets,
                              const Vector &weights, const Matrix &penalty,
                              double penalty_weight) {
  const Eigen::Index n = design.rows();
  const Eigen::Index p = design.cols();
  Matrix root;  // S with S^T S = penalty_weight * P
  if (penalty_weight > 0.0) {
    Eigen::SelfAdjointEigenSolver<Matrix> eig(penalty);
    const Vector d = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    root = std::sqrt(penalty_weight) * d.asDiagonal() *
           eig.eigenvectors().transpose();
  } else {
    root.resize(0, p);
  }
  Matrix a(n + root.rows(), p);
  Vector b = Vector::Zero(n + root.rows());
  const Vector sw = weights.cwiseSqrt();
  a.topRows(n) = sw.asDiagonal() * design;
  b.head(n) = sw.cwiseProduct(targets);
  a.bottomRows(root.rows()) = root;

  Eigen::ColPivHouseholderQR<Matrix> qr(a);
  qr.setThreshold(1e-11);
  if (qr.rank() < p) {
    throw RankDeficiencyError(
        "penalized least-squares system is rank deficient (rank " +
        std::to_string(qr.rank()) + " < " + std::to_string(p) +
        "); use a penalty > 0 or a smaller basis");
  }
  return qr.solve(b);
}

// Relative residual of (B^T W B + pen P) c = B^T W t.
inline double normal_equation_residual(const Matrix &design,
                                       const Vector &targets,
                                       const Vector &weights,
                                       const Matrix &penalty,
                                       double penalty_weight,
                                       const Vector &coefficients) {
  const Matrix btw = design.transpose() * weights.asDiagonal();
  const Matrix lhs = btw * design + penalty_weight * penalty;
  const Vector rhs = btw * targets;
  const double scale =
      std::max(rhs.norm(), (lhs * coefficients).norm());
  if (scale == 0.0) return 0.0;
  return (lhs * coefficients - rhs).norm() / scale;
}

inline SurrogateModel fit_weighted(const FunctionFamily &family,
                                   const Matrix &x, const Vector &targets,
                                   const Vector &weights) {
  if (x.rows() != targets.size() || x.rows() != weights.size()) {
    throw DataError("inputs, targets and weights must have equal length");
  }
  if ((weights.array() < 0.0).any()) {
    throw DomainError("least-squares weights must be nonnegative");
  }
  Basis basis = make_basis(family, x);
  const Matrix design = design_matrix(basis, x);
  Vector coef = solve_penalized(design, targets, weights,
                                basis_penalty(basis), family.penalty);
  FitInfo info;
  info.training_size = x.rows();
  return SurrogateModel(family, std::move(basis), std::move(coef), info);
}

// Value of the weighted objective for an arbitrary coefficient vector.
inline double weighted_objective(const SurrogateModel &model, const Matrix &x,
                                 const Vector &targets, const Vector &weights,
                                 const Vector &coefficients) {
  const Matrix design = design_matrix(model.basis(), x);
  const Vector r = design * coefficients - targets;
  const double pen = coefficients.dot(basis_penalty(model.basis()) * coefficients);
  return weights.dot(r.cwiseProduct(r)) + model.family().penalty * pen;
}

// (1/L) sum |f(X_i) - m(X_i)|^2 + pen(f) on simulated pairs.
inline SurrogateModel fit_penalized_ls(const FunctionFamily &family,
                                       const PairedDataset &data) {
  const auto n = data.size();
  return fit_weighted(family, data.inputs(), data.outputs(),
                      Vector::Constant(n, 1.0 / static_cast<double>(n)));
}

// epsilon_i = Y_i - m_hat(X_i) on experimental data.
inline Vector compute_residuals(const SurrogateModel &model,
                                const PairedDataset &experimental) {
  if (experimental.kind() != DataKind::kExperimental) {
    throw DataError("residuals are computed on experimental data");
  }
  return experimental.outputs() - model.evaluate(experimental.inputs());
}

/*
 * (1/n) sum |f(X_i) - eps_i|^2 + pen(f). A single observation yields the
 * constant eps_1 regardless of family.
 */
inline SurrogateModel fit_residual_model(const FunctionFamily &family,
                                         const Matrix &x,
                                         const Vector &residuals) {
  if (x.rows() != residuals.size()) {
    throw DataError("residual count does not match input rows");
  }
  if (x.rows() == 1) {
    SurrogateModel m = constant_model(family, x, residuals(0));
    m.info().training_size = 1;
    return m;
  }
  const auto n = x.rows();
  return fit_weighted(family, x, residuals,
                      Vector::Constant(n, 1.0 / static_cast<double>(n)));
}

/*
 *   (w/n) sum_i |f(X_i) - eps_i|^2 + ((1-w)/N1) sum_j |f(X_j) - 0|^2 + pen(f)
 *
 * with X_j the extra inputs. The basis is built from all rows.
 */
inline SurrogateModel fit_residual_model_weighted(const FunctionFamily &family,
                                                  const Matrix &x,
                                                  const Vector &residuals,
                                                  const Matrix &extra_inputs,
                                                  double weight) {
  if (!(weight >= 0.0 && weight <= 1.0)) {
    throw DomainError("residual weight must lie in [0, 1], got " +
                      std::to_string(weight));
  }
  if (extra_inputs.rows() < 1) {
    throw DataError("weighted residual fit needs at least one extra input");
  }
  if (extra_inputs.cols() != x.cols()) {
    throw DataError("extra inputs have a different dimension");
  }
  if (x.rows() != residuals.size()) {
    throw DataError("residual count does not match input rows");
  }
  const auto n = x.rows();
  const auto m = extra_inputs.rows();
  Matrix all(n + m, x.cols());
  all << x, extra_inputs;
  Vector targets = Vector::Zero(n + m);
  targets.head(n) = residuals;
  Vector weights(n + m);
  weights.head(n).setConstant(weight / static_cast<double>(n));
  weights.tail(m).setConstant((1.0 - weight) / static_cast<double>(m));
  return fit_weighted(family, all, targets, weights);
}

inline std::vector<double> default_penalty_grid() {
  std::vector<double> grid;
  for (int k = -20; k <= 4; ++k) grid.push_back(std::pow(10.0, 0.5 * k));
  return grid;
}

/*
 * Chooses the penalty by generalized cross-validation,
 *   GCV = (RSS / n) / (1 - tr(H) / n)^2,
 * and refits. Candidates whose system is singular or that interpolate
 * (tr(H) >= n) are skipped; ties go to the larger penalty.
 */
inline SurrogateModel fit_penalized_ls_gcv(const FunctionFamily &family,
                                           const PairedDataset &data,
                                           std::vector<double> grid = {}) {
  if (grid.empty()) grid = default_penalty_grid();
  std::sort(grid.begin(), grid.end());
  const Matrix &x = data.inputs();
  const Vector &y = data.outputs();
  const auto n = static_cast<double>(data.size());
  const Basis basis = make_basis(family, x);
  const Matrix design = design_matrix(basis, x);
  const Matrix btb = design.transpose() * design;
  const Vector bty = design.transpose() * y;
  const Matrix penalty = basis_penalty(basis);

  double best_score = std::numeric_limits<double>::infinity();
  double best_penalty = -1.0;
  for (double pen : grid) {
    if (pen < 0.0) throw DomainError("penalty grid entries must be >= 0");
    const Matrix g = btb + n * pen * penalty;
    Eigen::ColPivHouseholderQR<Matrix> qr(g);
    qr.setThreshold(1e-13);
    if (qr.rank() < g.rows()) continue;
    const Vector c = qr.solve(bty);
    const double trace = qr.solve(btb).trace();
    if (!(trace < n - 1e-9)) continue;
    const Vector r = design * c - y;
    const double denom = 1.0 - trace / n;
    const double score = (r.squaredNorm() / n) / (denom * denom);
    if (std::isfinite(score) && score <= best_score) {
      best_score = score;
      best_penalty = pen;
    }
  }
  if (best_penalty < 0.0) {
    throw RankDeficiencyError(
        "no penalty on the GCV grid gives a well-posed fit");
  }
  SurrogateModel model = fit_penalized_ls(family.with_penalty(best_penalty), data);
  model.info().gcv_score = best_score;
  return model;
}

}  // namespace uqkit

#endif  // UQKIT_SURROGATE_FIT_HPP_
