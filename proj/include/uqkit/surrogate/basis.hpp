#ifndef UQKIT_SURROGATE_BASIS_HPP_
#define UQKIT_SURROGATE_BASIS_HPP_

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "uqkit/core/dataset.hpp"
#include "uqkit/core/error.hpp"
#include "uqkit/randgen/mvn.hpp"

namespace uqkit {

enum class FamilyKind { kSpline1d, kRbfRidge, kPolyRidge };

inline const char *to_string(FamilyKind kind) {
  switch (kind) {
    case FamilyKind::kSpline1d:
      return "spline1d";
    case FamilyKind::kRbfRidge:
      return "rbf-ridge";
    case FamilyKind::kPolyRidge:
      return "poly-ridge";
  }
  return "unknown";
}

inline FamilyKind family_kind_from_string(const std::string &s) {
  if (s == "spline1d" || s == "spline") return FamilyKind::kSpline1d;
  if (s == "rbf-ridge" || s == "rbf") return FamilyKind::kRbfRidge;
  if (s == "poly-ridge" || s == "poly") return FamilyKind::kPolyRidge;
  throw DomainError("unknown function family '" + s + "'");
}

/*
 * A function class plus its roughness penalty. Structural fields only apply
 * to their kind. The concrete basis (knot range, RBF centers, ...) is built
 * from the training inputs at fit time.
 *
 *   spline1d   cubic B-splines on equally spaced knots, penalty * int f''(u)^2
 *              du with u the input rescaled to [0, 1] over the knot range;
 *              linear continuation outside the range
 *   rbf-ridge  intercept + Gaussian bumps on a subsample of the training
 *              inputs (standardized), penalty * sum of squared bump weights
 *   poly-ridge monomials up to total `degree` in the raw inputs, penalty *
 *              sum of squared non-constant coefficients
 */
struct FunctionFamily {
  FamilyKind kind = FamilyKind::kSpline1d;
  int interior_knots = 8;
  int centers = 20;
  double rbf_width = 1.0;
  int degree = 1;
  double penalty = 0.0;
  std::optional<Range> range;

  FunctionFamily with_penalty(double p) const {
    FunctionFamily f = *this;
    f.penalty = p;
    return f;
  }

  void validate() const {
    if (!(penalty >= 0.0) || !std::isfinite(penalty)) {
      throw DomainError("penalty weight must be finite and >= 0");
    }
    if (kind == FamilyKind::kSpline1d && interior_knots < 0) {
      throw DomainError("spline1d needs interior_knots >= 0");
    }
    if (kind == FamilyKind::kRbfRidge && (centers < 1 || !(rbf_width > 0.0))) {
      throw DomainError("rbf-ridge needs centers >= 1 and rbf_width > 0");
    }
    if (kind == FamilyKind::kPolyRidge && degree < 0) {
      throw DomainError("poly-ridge needs degree >= 0");
    }
  }
};

// Cubic B-spline basis on [lo, hi] with a clamped knot vector in u-space.
class SplineBasis {
 public:
  static constexpr int kDegree = 3;

  SplineBasis(double lo, double hi, int interior_knots)
      : lo_(lo), hi_(hi), interior_knots_(interior_knots) {
    if (!(hi > lo)) throw DomainError("spline range must satisfy lo < hi");
    for (int i = 0; i <= kDegree; ++i) knots_.push_back(0.0);
    for (int i = 1; i <= interior_knots; ++i) {
      knots_.push_back(static_cast<double>(i) / (interior_knots + 1));
    }
    for (int i = 0; i <= kDegree; ++i) knots_.push_back(1.0);
    // boundary values and slopes used for linear continuation
    for (int side = 0; side < 2; ++side) {
      const double u = side == 0 ? 0.0 : 1.0;
      const int span = find_span(u);
      const auto ders = derivatives(span, u, 1);
      edge_first_[side] = span - kDegree;
      for (int j = 0; j <= kDegree; ++j) {
        edge_value_[side][j] = ders[0][j];
        edge_slope_[side][j] = ders[1][j];
      }
    }
  }

  double lo() const { return lo_; }
  double hi() const { return hi_; }
  int interior_knots() const { return interior_knots_; }
  Eigen::Index size() const { return interior_knots_ + kDegree + 1; }

  // Adds weight * B_j(x) into row(j) for the (at most 4) nonzero basis terms.
  template <typename Visitor>
  void visit(double x, Visitor &&emit) const {
    const double u = (x - lo_) / (hi_ - lo_);
    if (u < 0.0 || u > 1.0) {
      const int side = u < 0.0 ? 0 : 1;
      const double du = side == 0 ? u : u - 1.0;
      for (int j = 0; j <= kDegree; ++j) {
        emit(edge_first_[side] + j,
             edge_value_[side][j] + edge_slope_[side][j] * du);
      }
      return;
    }
    const int span = find_span(u);
    std::array<double, kDegree + 1> values{};
    basis_values(span, u, &values);
    for (int j = 0; j <= kDegree; ++j) emit(span - kDegree + j, values[j]);
  }

  // P_jk = int_0^1 B_j''(u) B_k''(u) du, exact (two-point Gauss per span).
  Matrix penalty_matrix() const {
    Matrix p = Matrix::Zero(size(), size());
    const double g = 0.5 / std::sqrt(3.0);
    for (int span = kDegree; span < static_cast<int>(knots_.size()) - kDegree - 1;
         ++span) {
      const double a = knots_[span];
      const double b = knots_[span + 1];
      if (b <= a) continue;
      for (double t : {0.5 - g, 0.5 + g}) {
        const double u = a + t * (b - a);
        const auto ders = derivatives(span, u, 2);
        for (int j = 0; j <= kDegree; ++j) {
          for (int k = 0; k <= kDegree; ++k) {
            p(span - kDegree + j, span - kDegree + k) +=
                0.5 * (b - a) * ders[2][j] * ders[2][k];
          }
        }
      }
    }
    return p;
  }

  // B-splines sum to one, so the constant c has all coefficients equal to c.
  Vector constant_coefficients(double c) const {
    return Vector::Constant(size(), c);
  }

 private:
  int find_span(double u) const {
    const int n = static_cast<int>(size()) - 1;
    if (u >= knots_[n + 1]) return n;
    const auto it = std::upper_bound(knots_.begin() + kDegree,
                                     knots_.begin() + n + 1, u);
    return static_cast<int>(it - knots_.begin()) - 1;
  }

  void basis_values(int span, double u,
                    std::array<double, kDegree + 1> *out) const {
    std::array<double, kDegree + 1> left{};
    std::array<double, kDegree + 1> right{};
    auto &n = *out;
    n[0] = 1.0;
    for (int j = 1; j <= kDegree; ++j) {
      left[j] = u - knots_[span + 1 - j];
      right[j] = knots_[span + j] - u;
      double saved = 0.0;
      for (int r = 0; r < j; ++r) {
        const double temp = n[r] / (right[r + 1] + left[j - r]);
        n[r] = saved + right[r + 1] * temp;
        saved = left[j - r] * temp;
      }
      n[j] = saved;
    }
  }

  // Basis values and derivatives (d/du) up to `order` on one span.
  std::array<std::array<double, kDegree + 1>, 3> derivatives(int span, double u,
                                                             int order) const {
    constexpr int p = kDegree;
    std::array<std::array<double, p + 1>, p + 1> ndu{};
    std::array<double, p + 1> left{};
    std::array<double, p + 1> right{};
    ndu[0][0] = 1.0;
    for (int j = 1; j <= p; ++j) {
      left[j] = u - knots_[span + 1 - j];
      right[j] = knots_[span + j] - u;
      double saved = 0.0;
      for (int r = 0; r < j; ++r) {
        ndu[j][r] = right[r + 1] + left[j - r];
        const double temp = ndu[r][j - 1] / ndu[j][r];
        ndu[r][j] = saved + right[r + 1] * temp;
        saved = left[j - r] * temp;
      }
      ndu[j][j] = saved;
    }
    std::array<std::array<double, p + 1>, 3> ders{};
    for (int j = 0; j <= p; ++j) ders[0][j] = ndu[j][p];
    std::array<std::array<double, p + 1>, 2> a{};
    for (int r = 0; r <= p; ++r) {
      int s1 = 0;
      int s2 = 1;
      a[0][0] = 1.0;
      for (int k = 1; k <= order; ++k) {
        double d = 0.0;
        const int rk = r - k;
        const int pk = p - k;
        if (r >= k) {
          a[s2][0] = a[s1][0] / ndu[pk + 1][rk];
          d = a[s2][0] * ndu[rk][pk];
        }
        const int j1 = rk >= -1 ? 1 : -rk;
        const int j2 = (r - 1 <= pk) ? k - 1 : p - r;
        for (int j = j1; j <= j2; ++j) {
          a[s2][j] = (a[s1][j] - a[s1][j - 1]) / ndu[pk + 1][rk + j];
          d += a[s2][j] * ndu[rk + j][pk];
        }
        if (r <= pk) {
          a[s2][k] = -a[s1][k - 1] / ndu[pk + 1][r];
          d += a[s2][k] * ndu[r][pk];
        }
        ders[k][r] = d;
        std::swap(s1, s2);
      }
    }
    double factor = p;
    for (int k = 1; k <= order; ++k) {
      for (int j = 0; j <= p; ++j) ders[k][j] *= factor;
      factor *= (p - k);
    }
    return ders;
  }

  double lo_;
  double hi_;
  int interior_knots_;
  std::vector<double> knots_;
  std::array<int, 2> edge_first_{};
  std::array<std::array<double, kDegree + 1>, 2> edge_value_{};
  std::array<std::array<double, kDegree + 1>, 2> edge_slope_{};
};

// Intercept followed by exp(-|z - c_k|^2 / (2 width^2)) on standardized z.
class RbfBasis {
 public:
  RbfBasis(Vector shift, Vector scale, Matrix centers, double width)
      : shift_(std::move(shift)),
        scale_(std::move(scale)),
        centers_(std::move(centers)),
        width_(width) {}

  const Vector &shift() const { return shift_; }
  const Vector &scale() const { return scale_; }
  const Matrix &centers() const { return centers_; }
  double width() const { return width_; }
  Eigen::Index size() const { return centers_.rows() + 1; }

  template <typename Row, typename Visitor>
  void visit(const Row &x, Visitor &&emit) const {
    emit(0, 1.0);
    const double inv = 1.0 / (2.0 * width_ * width_);
    for (Eigen::Index k = 0; k < centers_.rows(); ++k) {
      double r2 = 0.0;
      for (Eigen::Index j = 0; j < centers_.cols(); ++j) {
        const double z = (x(j) - shift_(j)) / scale_(j) - centers_(k, j);
        r2 += z * z;
      }
      emit(static_cast<int>(k + 1), std::exp(-r2 * inv));
    }
  }

  Matrix penalty_matrix() const {
    Matrix p = Matrix::Identity(size(), size());
    p(0, 0) = 0.0;
    return p;
  }

  Vector constant_coefficients(double c) const {
    Vector v = Vector::Zero(size());
    v(0) = c;
    return v;
  }

 private:
  Vector shift_;
  Vector scale_;
  Matrix centers_;
  double width_;
};

// Monomials of total degree <= degree, constant term first.
class PolyBasis {
 public:
  PolyBasis(Eigen::Index dim, int degree) : dim_(dim), degree_(degree) {
    std::vector<int> current(static_cast<std::size_t>(dim), 0);
    for (int total = 0; total <= degree; ++total) {
      append_with_total(total, 0, &current);
    }
  }

  Eigen::Index dim() const { return dim_; }
  int degree() const { return degree_; }
  Eigen::Index size() const {
    return static_cast<Eigen::Index>(exponents_.size());
  }
  const std::vector<std::vector<int>> &exponents() const { return exponents_; }

  template <typename Row, typename Visitor>
  void visit(const Row &x, Visitor &&emit) const {
    for (std::size_t k = 0; k < exponents_.size(); ++k) {
      double v = 1.0;
      for (Eigen::Index j = 0; j < dim_; ++j) {
        for (int e = 0; e < exponents_[k][static_cast<std::size_t>(j)]; ++e) {
          v *= x(j);
        }
      }
      emit(static_cast<int>(k), v);
    }
  }

  Matrix penalty_matrix() const {
    Matrix p = Matrix::Identity(size(), size());
    p(0, 0) = 0.0;
    return p;
  }

  Vector constant_coefficients(double c) const {
    Vector v = Vector::Zero(size());
    v(0) = c;
    return v;
  }

 private:
  void append_with_total(int remaining, std::size_t pos,
                         std::vector<int> *current) {
    if (pos + 1 == current->size()) {
      (*current)[pos] = remaining;
      exponents_.push_back(*current);
      (*current)[pos] = 0;
      return;
    }
    for (int e = remaining; e >= 0; --e) {
      (*current)[pos] = e;
      append_with_total(remaining - e, pos + 1, current);
    }
    (*current)[pos] = 0;
  }

  Eigen::Index dim_;
  int degree_;
  std::vector<std::vector<int>> exponents_;
};

using Basis = std::variant<SplineBasis, RbfBasis, PolyBasis>;

inline Eigen::Index basis_size(const Basis &basis) {
  return std::visit([](const auto &b) { return b.size(); }, basis);
}

inline Matrix basis_penalty(const Basis &basis) {
  return std::visit([](const auto &b) { return b.penalty_matrix(); }, basis);
}

inline Vector basis_constant(const Basis &basis, double c) {
  return std::visit([c](const auto &b) { return b.constant_coefficients(c); },
                    basis);
}

// Calls emit(column, value) for the nonzero basis terms at point x.
template <typename Row, typename Visitor>
void visit_basis(const Basis &basis, const Row &x, Visitor &&emit) {
  if (const auto *s = std::get_if<SplineBasis>(&basis)) {
    s->visit(x(0), emit);
  } else if (const auto *r = std::get_if<RbfBasis>(&basis)) {
    r->visit(x, emit);
  } else {
    std::get<PolyBasis>(basis).visit(x, emit);
  }
}

inline Matrix design_matrix(const Basis &basis, const Matrix &x) {
  Matrix b = Matrix::Zero(x.rows(), basis_size(basis));
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    visit_basis(basis, x.row(i),
                [&](int col, double v) { b(i, col) += v; });
  }
  return b;
}

/*
 * Builds the concrete basis for a family from the training inputs: knot range
 * for splines (the family's fixed range if set), standardization and centers
 * for RBFs.
 */
inline Basis make_basis(const FunctionFamily &family, const Matrix &x) {
  family.validate();
  switch (family.kind) {
    case FamilyKind::kSpline1d: {
      if (x.cols() != 1) {
        throw DomainError("spline1d requires one input dimension, got " +
                          std::to_string(x.cols()));
      }
      double lo = family.range ? family.range->lo : x.col(0).minCoeff();
      double hi = family.range ? family.range->hi : x.col(0).maxCoeff();
      if (!(hi > lo)) {
        // degenerate training range (e.g. a single point)
        const double pad = std::max(0.5, std::abs(lo) * 0.5);
        lo -= pad;
        hi += pad;
      }
      return SplineBasis(lo, hi, family.interior_knots);
    }
    case FamilyKind::kRbfRidge: {
      const Vector shift = x.colwise().mean().transpose();
      Vector scale(x.cols());
      for (Eigen::Index j = 0; j < x.cols(); ++j) {
        const double var =
            (x.col(j).array() - shift(j)).square().mean();
        scale(j) = var > 0.0 ? std::sqrt(var) : 1.0;
      }
      const Eigen::Index k = std::min<Eigen::Index>(family.centers, x.rows());
      Matrix centers(k, x.cols());
      for (Eigen::Index c = 0; c < k; ++c) {
        const Eigen::Index row =
            k == 1 ? 0 : (c * (x.rows() - 1)) / (k - 1);
        centers.row(c) =
            ((x.row(row).transpose() - shift).array() / scale.array())
                .transpose();
      }
      return RbfBasis(shift, scale, std::move(centers), family.rbf_width);
    }
    case FamilyKind::kPolyRidge:
      return PolyBasis(x.cols(), family.degree);
  }
  throw DomainError("unknown family kind");
}

inline Eigen::Index basis_input_dim(const Basis &basis) {
  if (std::holds_alternative<SplineBasis>(basis)) return 1;
  if (const auto *r = std::get_if<RbfBasis>(&basis)) return r->shift().size();
  return std::get<PolyBasis>(basis).dim();
}

}  // namespace uqkit

#endif  // UQKIT_SURROGATE_BASIS_HPP_
