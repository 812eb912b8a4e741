#ifndef UQKIT_RANDGEN_MVN_HPP_
#define UQKIT_RANDGEN_MVN_HPP_

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <utility>
#include <vector>

#include "uqkit/core/dataset.hpp"
#include "uqkit/core/error.hpp"
#include "uqkit/core/parallel.hpp"
#include "uqkit/randgen/random.hpp"

namespace uqkit {

struct MvnParams {
  Vector mean;
  Matrix covariance;

  Eigen::Index dim() const { return mean.size(); }
};

// Sigma = orthogonal * diag(eigenvalues) * orthogonal^T, eigenvalues >= 0.
struct EigenFactors {
  Matrix orthogonal;
  Vector eigenvalues;

  // O * Lambda^{1/2}; maps standard-normal vectors onto the target law.
  Matrix transform() const {
    return orthogonal * eigenvalues.cwiseSqrt().asDiagonal();
  }
};

inline constexpr double kSymmetryTolerance = 1e-12;
inline constexpr double kPsdTolerance = 1e-10;

inline void validate_mvn(const MvnParams &params) {
  const auto d = params.mean.size();
  if (d < 1) throw DomainError("MVN mean is empty");
  if (params.covariance.rows() != d || params.covariance.cols() != d) {
    throw DomainError("MVN covariance must be " + std::to_string(d) + "x" +
                      std::to_string(d));
  }
  if (!params.mean.allFinite() || !params.covariance.allFinite()) {
    throw DomainError("MVN parameters must be finite");
  }
  const double scale = std::max(1.0, params.covariance.cwiseAbs().maxCoeff());
  const double asym =
      (params.covariance - params.covariance.transpose()).cwiseAbs().maxCoeff();
  if (asym > kSymmetryTolerance * scale) {
    throw DomainError("MVN covariance is not symmetric");
  }
}

/*
 * Eigendecomposition of the covariance. Negative eigenvalues within
 * kPsdTolerance * ||Sigma|| are clipped to zero; larger ones are rejected.
 * Diagonal matrices keep the identity as eigenvector basis.
 */
inline EigenFactors eigen_factors(const Matrix &covariance) {
  const auto d = covariance.rows();
  EigenFactors f;
  const Matrix off = covariance - Matrix(covariance.diagonal().asDiagonal());
  if (off.cwiseAbs().maxCoeff() == 0.0 || d == 1) {
    f.orthogonal = Matrix::Identity(d, d);
    f.eigenvalues = covariance.diagonal();
  } else {
    Eigen::SelfAdjointEigenSolver<Matrix> solver(covariance);
    if (solver.info() != Eigen::Success) {
      throw ConditioningError("eigendecomposition of covariance failed");
    }
    f.orthogonal = solver.eigenvectors();
    f.eigenvalues = solver.eigenvalues();
  }
  const double norm = f.eigenvalues.cwiseAbs().maxCoeff();
  for (Eigen::Index i = 0; i < d; ++i) {
    if (f.eigenvalues(i) < -kPsdTolerance * norm) {
      throw DomainError("invalid covariance: eigenvalue " +
                        std::to_string(f.eigenvalues(i)) +
                        " is negative beyond tolerance");
    }
    f.eigenvalues(i) = std::max(0.0, f.eigenvalues(i));
  }
  return f;
}

// Maximum-likelihood estimate: column means and the 1/N covariance.
inline MvnParams estimate_mvn(const InputSample &sample) {
  const auto n = sample.size();
  if (n < 2) {
    throw InsufficientDataError("estimate_mvn needs at least 2 points, got " +
                                std::to_string(n));
  }
  const Matrix &x = sample.points();
  MvnParams p;
  p.mean = x.colwise().mean().transpose();
  const Matrix centered = x.rowwise() - p.mean.transpose();
  p.covariance = (centered.transpose() * centered) / static_cast<double>(n);
  // exact symmetry regardless of summation order
  p.covariance = 0.5 * (p.covariance + p.covariance.transpose()).eval();
  return p;
}

inline constexpr Eigen::Index kSampleBlockRows = 4096;

/*
 * count x dim matrix of independent N(0,1) draws. Rows are generated in
 * blocks of kSampleBlockRows, block b drawing from stream (seed, b).
 */
inline Matrix standard_normal_matrix(Eigen::Index count, Eigen::Index dim,
                                     std::uint64_t seed) {
  if (count < 1) throw DomainError("sample count must be positive");
  Matrix z(count, dim);
  const auto blocks = static_cast<std::size_t>(
      (count + kSampleBlockRows - 1) / kSampleBlockRows);
  parallel_for(blocks, [&](std::size_t b) {
    Engine rng = make_stream(seed, b);
    std::normal_distribution<double> normal;
    const Eigen::Index begin = static_cast<Eigen::Index>(b) * kSampleBlockRows;
    const Eigen::Index end = std::min(count, begin + kSampleBlockRows);
    for (Eigen::Index i = begin; i < end; ++i) {
      for (Eigen::Index j = 0; j < dim; ++j) z(i, j) = normal(rng);
    }
  });
  return z;
}

// X_i = O Lambda^{1/2} Z_i + mu.
inline InputSample sample_mvn(const MvnParams &params, Eigen::Index count,
                              std::uint64_t seed) {
  validate_mvn(params);
  const EigenFactors factors = eigen_factors(params.covariance);
  const Matrix z = standard_normal_matrix(count, params.dim(), seed);
  Matrix x = z * factors.transform().transpose();
  x.rowwise() += params.mean.transpose();
  return InputSample(std::move(x));
}

struct Range {
  double lo = 0.0;
  double hi = 1.0;
};

/*
 * Latin hypercube design: in every dimension each of the `count` equal-width
 * strata of [lo, hi) holds exactly one point. Points are uniform inside
 * their stratum (never on the stratum's lower edge).
 */
inline InputSample latin_hypercube(const std::vector<Range> &ranges,
                                   Eigen::Index count, std::uint64_t seed) {
  if (ranges.empty()) throw DomainError("latin_hypercube needs a range");
  if (count < 1) throw DomainError("sample count must be positive");
  for (std::size_t j = 0; j < ranges.size(); ++j) {
    if (!(ranges[j].lo < ranges[j].hi) || !std::isfinite(ranges[j].lo) ||
        !std::isfinite(ranges[j].hi)) {
      throw DomainError("invalid range in dimension " + std::to_string(j + 1) +
                        ": lo must be < hi");
    }
  }
  const auto d = static_cast<Eigen::Index>(ranges.size());
  Matrix x(count, d);
  std::vector<Eigen::Index> strata(static_cast<std::size_t>(count));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (Eigen::Index j = 0; j < d; ++j) {
    const Range &r = ranges[static_cast<std::size_t>(j)];
    const double width = (r.hi - r.lo) / static_cast<double>(count);
    Engine rng = make_stream(seed, static_cast<std::uint64_t>(j));
    for (Eigen::Index i = 0; i < count; ++i) {
      strata[static_cast<std::size_t>(i)] = i;
    }
    std::shuffle(strata.begin(), strata.end(), rng);
    for (Eigen::Index i = 0; i < count; ++i) {
      const auto s = static_cast<double>(strata[static_cast<std::size_t>(i)]);
      double u = unit(rng);
      while (u == 0.0) u = unit(rng);
      const double stratum_lo = r.lo + s * width;
      const double stratum_hi = r.lo + (s + 1.0) * width;
      // rounding must not push a point across its stratum edges
      x(i, j) = std::clamp(stratum_lo + u * width, stratum_lo,
                           std::nextafter(stratum_hi, r.lo));
    }
  }
  return InputSample(std::move(x));
}

}  // namespace uqkit

#endif  // UQKIT_RANDGEN_MVN_HPP_
