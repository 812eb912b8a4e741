#ifndef UQKIT_MODEL_ERROR_GP_DISCREPANCY_HPP_
#define UQKIT_MODEL_ERROR_GP_DISCREPANCY_HPP_

#include <Eigen/Cholesky>

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "uqkit/core/dataset.hpp"
#include "uqkit/core/error.hpp"
#include "uqkit/core/parallel.hpp"
#include "uqkit/density/kde.hpp"
#include "uqkit/optim/nelder_mead.hpp"
#include "uqkit/randgen/mvn.hpp"
#include "uqkit/randgen/random.hpp"

namespace uqkit {

inline constexpr double kLog2Pi = 1.8378770664093453;

// Experimental inputs and outputs together with the computer-model outputs
// m(X_i) at the same inputs.
struct GpData {
  Matrix x;
  Vector y;
  Vector m;

  Eigen::Index size() const { return y.size(); }
  Eigen::Index dim() const { return x.cols(); }
  Vector residuals() const { return y - m; }
};

inline GpData make_gp_data(const PairedDataset &experimental,
                           const Vector &model_outputs) {
  if (model_outputs.size() != experimental.size()) {
    throw DataError("model outputs must have one value per experimental point");
  }
  if (!model_outputs.allFinite()) throw DataError("model outputs must be finite");
  return GpData{experimental.inputs(), experimental.outputs(), model_outputs};
}

struct GpDiscrepancyParams {
  double lambda = 0.0;  // noise variance
  double beta = 0.0;    // discrepancy mean
  double sigma2 = 0.0;  // discrepancy variance
  Vector omega;         // inverse squared length scales

  void validate(Eigen::Index dim) const {
    if (omega.size() != dim) {
      throw DataError("expected " + std::to_string(dim) + " omega values, got " +
                      std::to_string(omega.size()));
    }
    if (!(lambda >= 0.0) || !(sigma2 >= 0.0) || !std::isfinite(beta) ||
        !std::isfinite(lambda) || !std::isfinite(sigma2) ||
        !omega.allFinite() || (omega.array() < 0.0).any()) {
      throw DomainError("GP parameters must be finite with lambda, sigma2, omega >= 0");
    }
  }
};

// c(z1, z2) = sigma2 * exp(-sum_j omega_j (z1_j - z2_j)^2).
template <typename A, typename B>
double gp_covariance(const A &z1, const B &z2, const GpDiscrepancyParams &p) {
  if (z1.size() != z2.size() || z1.size() != p.omega.size()) {
    throw DataError("gp_covariance: dimension mismatch");
  }
  double s = 0.0;
  for (Eigen::Index j = 0; j < z1.size(); ++j) {
    const double diff = z1(j) - z2(j);
    s += p.omega(j) * diff * diff;
  }
  return p.sigma2 * std::exp(-s);
}

inline Matrix gp_correlation(const Matrix &x, const Vector &omega) {
  const auto n = x.rows();
  Matrix r(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    r(k, k) = 1.0;
    for (Eigen::Index l = 0; l < k; ++l) {
      double s = 0.0;
      for (Eigen::Index j = 0; j < x.cols(); ++j) {
        const double diff = x(k, j) - x(l, j);
        s += omega(j) * diff * diff;
      }
      r(k, l) = r(l, k) = std::exp(-s);
    }
  }
  return r;
}

// Theta = sigma2 R + lambda I.
inline Matrix gp_theta(const GpDiscrepancyParams &p, const Matrix &x) {
  p.validate(x.cols());
  Matrix theta = p.sigma2 * gp_correlation(x, p.omega);
  theta.diagonal().array() += p.lambda;
  return theta;
}

struct ThetaFactor {
  Eigen::LLT<Matrix> llt;
  double jitter = 0.0;  // absolute value added to the diagonal
};

/*
 * Cholesky factor of Theta. On failure a jitter of 1e-10 * trace/n is added
 * to the diagonal and raised tenfold up to 1e-6 * trace/n.
 */
inline ThetaFactor factor_theta(const Matrix &theta) {
  ThetaFactor f;
  f.llt.compute(theta);
  if (f.llt.info() == Eigen::Success) return f;
  const double base = theta.trace() / static_cast<double>(theta.rows());
  if (base > 0.0 && std::isfinite(base)) {
    for (double rel = 1e-10; rel <= 1e-6 * (1.0 + 1e-9); rel *= 10.0) {
      Matrix t = theta;
      t.diagonal().array() += rel * base;
      f.llt.compute(t);
      if (f.llt.info() == Eigen::Success) {
        f.jitter = rel * base;
        return f;
      }
    }
  }
  throw ConditioningError("covariance matrix Theta is singular beyond jitter 1e-6 * trace/n");
}

inline double log_determinant(const Eigen::LLT<Matrix> &llt) {
  return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

// beta = 1^T Theta^{-1} r / 1^T Theta^{-1} 1 with r = y - m.
inline double gp_beta_closed_form(const GpData &data, const Matrix &theta) {
  const ThetaFactor f = factor_theta(theta);
  const Vector ones = Vector::Ones(data.size());
  const Vector a = f.llt.solve(ones);
  return a.dot(data.residuals()) / a.dot(ones);
}

inline double gp_beta_closed_form(const GpData &data, const GpDiscrepancyParams &p) {
  return gp_beta_closed_form(data, gp_theta(p, data.x));
}

// beta = (1/n) sum (y_i - m_i).
inline double gp_beta_empirical(const GpData &data) {
  if (data.size() < 1) throw InsufficientDataError("no data for beta estimate");
  return data.residuals().mean();
}

struct GpLikelihood {
  double value = 0.0;
  double jitter = 0.0;
  Vector gradient;  // d/d(lambda, beta, sigma2, omega_1..omega_d)
};

/*
 * log N(y - m; beta 1, Theta)
 *   = -1/2 [u^T Theta^{-1} u + log det Theta + n log 2 pi],  u = y - m - beta 1.
 * The gradient uses d l / d theta = 1/2 tr((a a^T - Theta^{-1}) dTheta).
 */
inline GpLikelihood gp_loglikelihood_full(const GpDiscrepancyParams &p,
                                          const GpData &data,
                                          bool with_gradient = false) {
  const auto n = data.size();
  if (n < 1) throw InsufficientDataError("GP likelihood needs data");
  p.validate(data.dim());
  const Matrix r = gp_correlation(data.x, p.omega);
  Matrix theta = p.sigma2 * r;
  theta.diagonal().array() += p.lambda;
  const ThetaFactor f = factor_theta(theta);
  const Vector u = data.residuals().array() - p.beta;
  const Vector a = f.llt.solve(u);
  GpLikelihood out;
  out.jitter = f.jitter;
  out.value = -0.5 * (u.dot(a) + log_determinant(f.llt) +
                      static_cast<double>(n) * kLog2Pi);
  if (!with_gradient) return out;

  const Matrix w = a * a.transpose() - f.llt.solve(Matrix::Identity(n, n));
  const auto d = data.dim();
  out.gradient.resize(3 + d);
  out.gradient(0) = 0.5 * w.trace();
  out.gradient(1) = a.sum();
  out.gradient(2) = 0.5 * w.cwiseProduct(r).sum();
  for (Eigen::Index j = 0; j < d; ++j) {
    double s = 0.0;
    for (Eigen::Index k = 0; k < n; ++k) {
      for (Eigen::Index l = 0; l < n; ++l) {
        const double diff = data.x(k, j) - data.x(l, j);
        s += w(k, l) * r(k, l) * diff * diff;
      }
    }
    out.gradient(3 + j) = -0.5 * p.sigma2 * s;
  }
  return out;
}

inline double gp_loglikelihood(const GpDiscrepancyParams &p, const GpData &data) {
  return gp_loglikelihood_full(p, data).value;
}

/*
 * Priors: lambda ~ N(lambda_mean, lambda_var), beta ~ N(beta_mean, beta_var)
 * (beta_var = inf is a flat prior), sigma2 and every omega_j with density
 * c / t on [floor, exp(1/c) floor].
 */
struct GpHyperParams {
  double lambda_mean = 0.0;
  double lambda_var = 1.0;
  double beta_mean = 0.0;
  double beta_var = std::numeric_limits<double>::infinity();
  double sigma2_c = 1.0 / std::log(1e12);
  double sigma2_floor = 1e-6;
  Vector omega_c;
  Vector omega_floor;

  void validate(Eigen::Index dim) const {
    if (omega_c.size() != dim || omega_floor.size() != dim) {
      throw DataError("hyperparameters need one omega constant and floor per input");
    }
    if (!(lambda_var > 0.0) || !(beta_var > 0.0) || !(sigma2_c > 0.0) ||
        !(sigma2_floor > 0.0) || (omega_c.array() <= 0.0).any() ||
        (omega_floor.array() <= 0.0).any()) {
      throw DomainError("prior variances, constants and floors must be positive");
    }
  }
};

inline double reciprocal_prior_ceiling(double c, double floor) {
  return std::exp(1.0 / c) * floor;
}

// log of c/t on [floor, exp(1/c) floor]; -inf outside.
inline double log_truncated_reciprocal(double t, double c, double floor) {
  if (!(t >= floor) || !(t <= reciprocal_prior_ceiling(c, floor) * (1.0 + 1e-12))) {
    return -std::numeric_limits<double>::infinity();
  }
  return std::log(c) - std::log(t);
}

inline double log_normal_density(double x, double mean, double var) {
  if (std::isinf(var)) return 0.0;
  const double z = x - mean;
  return -0.5 * (z * z / var + std::log(var) + kLog2Pi);
}

/*
 * Scale used for default hyperparameters: root mean square of y - m, or of
 * y when the residuals vanish, or 1.
 */
inline double gp_output_scale(const GpData &data) {
  const double rr = std::sqrt(data.residuals().squaredNorm() /
                              static_cast<double>(data.size()));
  if (rr > 0.0) return rr;
  const double ry = std::sqrt(data.y.squaredNorm() / static_cast<double>(data.size()));
  return ry > 0.0 ? ry : 1.0;
}

/*
 * Defaults: support of every reciprocal prior spans 12 decades; sigma2 floor
 * 1e-6 s^2, omega_j floor 1e-6 / range_j^2, lambda ~ N(0, s^4), flat beta.
 */
inline GpHyperParams default_gp_hyper(const GpData &data) {
  const double s = gp_output_scale(data);
  const auto d = data.dim();
  GpHyperParams h;
  h.lambda_mean = 0.0;
  h.lambda_var = s * s * s * s;
  h.sigma2_floor = 1e-6 * s * s;
  h.omega_c = Vector::Constant(d, 1.0 / std::log(1e12));
  h.omega_floor.resize(d);
  for (Eigen::Index j = 0; j < d; ++j) {
    const double range = data.x.col(j).maxCoeff() - data.x.col(j).minCoeff();
    h.omega_floor(j) = 1e-6 / (range > 0.0 ? range * range : 1.0);
  }
  return h;
}

struct GpPosterior {
  double value = -std::numeric_limits<double>::infinity();
  bool in_support = false;
  double log_likelihood = -std::numeric_limits<double>::infinity();
};

/*
 * Unnormalized log posterior: log likelihood plus log priors. Parameters
 * outside the prior support give in_support = false and value = -inf.
 */
inline GpPosterior gp_log_posterior(const GpDiscrepancyParams &p,
                                    const GpHyperParams &hyper,
                                    const GpData &data,
                                    bool include_beta_prior = true) {
  hyper.validate(data.dim());
  p.validate(data.dim());
  GpPosterior out;
  double prior = log_normal_density(p.lambda, hyper.lambda_mean, hyper.lambda_var);
  if (include_beta_prior) {
    prior += log_normal_density(p.beta, hyper.beta_mean, hyper.beta_var);
  }
  prior += log_truncated_reciprocal(p.sigma2, hyper.sigma2_c, hyper.sigma2_floor);
  for (Eigen::Index j = 0; j < data.dim(); ++j) {
    prior += log_truncated_reciprocal(p.omega(j), hyper.omega_c(j),
                                      hyper.omega_floor(j));
  }
  if (!std::isfinite(prior)) return out;
  out.in_support = true;
  out.log_likelihood = gp_loglikelihood(p, data);
  out.value = out.log_likelihood + prior;
  return out;
}

enum class BetaMode { kClosedForm, kEmpirical, kFree };

inline const char *to_string(BetaMode mode) {
  switch (mode) {
    case BetaMode::kClosedForm:
      return "closed_form";
    case BetaMode::kEmpirical:
      return "empirical";
    case BetaMode::kFree:
      return "free";
  }
  return "?";
}

inline BetaMode beta_mode_from_string(const std::string &s) {
  if (s == "closed_form" || s == "closed-form") return BetaMode::kClosedForm;
  if (s == "empirical") return BetaMode::kEmpirical;
  if (s == "free") return BetaMode::kFree;
  throw DomainError("unknown beta mode '" + s +
                    "' (expected closed_form, empirical or free)");
}

struct GpFitOptions {
  int restarts = 20;
  int max_evaluations = 1000;  // per restart
  std::uint64_t seed = 0;
  std::optional<GpDiscrepancyParams> initial;  // first start; heuristic if empty
};

struct GpFitResult {
  GpDiscrepancyParams params;
  double log_posterior = -std::numeric_limits<double>::infinity();
  double log_likelihood = -std::numeric_limits<double>::infinity();
  double jitter = 0.0;
  int restarts = 0;
  int failed_restarts = 0;
  int evaluations = 0;
};

namespace detail {

// Box for the log-parameters (log lambda, log sigma2, log omega_j [, beta]).
struct GpSearchBox {
  Vector lower;
  Vector upper;
};

inline GpSearchBox gp_search_box(const GpData &data, const GpHyperParams &h,
                                 BetaMode mode) {
  const auto d = data.dim();
  const Eigen::Index k = 2 + d + (mode == BetaMode::kFree ? 1 : 0);
  GpSearchBox box{Vector(k), Vector(k)};
  const double s2 = std::pow(gp_output_scale(data), 2);
  box.lower(0) = std::log(1e-12 * s2);
  box.upper(0) = std::log(1e3 * s2);
  box.lower(1) = std::log(h.sigma2_floor);
  box.upper(1) = std::log(h.sigma2_floor) + 1.0 / h.sigma2_c;
  for (Eigen::Index j = 0; j < d; ++j) {
    box.lower(2 + j) = std::log(h.omega_floor(j));
    box.upper(2 + j) = std::log(h.omega_floor(j)) + 1.0 / h.omega_c(j);
  }
  if (mode == BetaMode::kFree) {
    const Vector r = data.residuals();
    const double span = r.cwiseAbs().maxCoeff() + gp_output_scale(data);
    box.lower(k - 1) = r.minCoeff() - 10.0 * span;
    box.upper(k - 1) = r.maxCoeff() + 10.0 * span;
  }
  return box;
}

inline GpDiscrepancyParams gp_unpack(const Vector &z, Eigen::Index d) {
  GpDiscrepancyParams p;
  p.lambda = std::exp(z(0));
  p.sigma2 = std::exp(z(1));
  p.omega = z.segment(2, d).array().exp();
  if (z.size() > 2 + d) p.beta = z(2 + d);
  return p;
}

inline Vector gp_pack(const GpDiscrepancyParams &p, BetaMode mode) {
  const auto d = p.omega.size();
  Vector z(2 + d + (mode == BetaMode::kFree ? 1 : 0));
  z(0) = std::log(std::max(p.lambda, 1e-300));
  z(1) = std::log(std::max(p.sigma2, 1e-300));
  for (Eigen::Index j = 0; j < d; ++j) {
    z(2 + j) = std::log(std::max(p.omega(j), 1e-300));
  }
  if (mode == BetaMode::kFree) z(2 + d) = p.beta;
  return z;
}

// Fills in beta for the profiled modes and returns the log posterior.
inline GpPosterior gp_profiled_posterior(GpDiscrepancyParams &p,
                                         const GpHyperParams &h,
                                         const GpData &data, BetaMode mode) {
  switch (mode) {
    case BetaMode::kClosedForm:
      p.beta = gp_beta_closed_form(data, p);
      return gp_log_posterior(p, h, data, false);
    case BetaMode::kEmpirical:
      p.beta = gp_beta_empirical(data);
      return gp_log_posterior(p, h, data, false);
    case BetaMode::kFree:
      return gp_log_posterior(p, h, data, true);
  }
  return {};
}

}  // namespace detail

/*
 * MAP estimate of (lambda, beta, sigma2, omega) with fixed hyperparameters.
 * Nelder-Mead in log coordinates on the prior support, started from the
 * given or heuristic point and from restarts - 1 points drawn uniformly in
 * the box (stream k of the restart seed). In the profiled beta modes the
 * beta prior is left out of the objective.
 */
inline GpFitResult gp_fit_map(const GpData &data, const GpHyperParams &hyper,
                              BetaMode mode, const GpFitOptions &options = {}) {
  if (data.size() < 2) {
    throw InsufficientDataError("GP fit needs at least 2 experimental points");
  }
  if (options.restarts < 1) throw DomainError("GP fit needs at least one restart");
  hyper.validate(data.dim());
  const auto d = data.dim();
  const detail::GpSearchBox box = detail::gp_search_box(data, hyper, mode);

  Vector first;
  if (options.initial) {
    options.initial->validate(d);
    first = detail::gp_pack(*options.initial, mode);
  } else {
    const Vector r = data.residuals();
    const double var = (r.array() - r.mean()).square().mean();
    const double v = var > 0.0 ? var : std::pow(gp_output_scale(data), 2);
    GpDiscrepancyParams p0;
    p0.lambda = 0.5 * v;
    p0.sigma2 = 0.5 * v;
    p0.beta = r.mean();
    p0.omega.resize(d);
    for (Eigen::Index j = 0; j < d; ++j) {
      const double range = data.x.col(j).maxCoeff() - data.x.col(j).minCoeff();
      p0.omega(j) = range > 0.0 ? 1.0 / (range * range) : 1.0;
    }
    first = detail::gp_pack(p0, mode);
  }
  first = first.cwiseMax(box.lower).cwiseMin(box.upper);

  auto objective = [&](const Vector &z) {
    GpDiscrepancyParams p = detail::gp_unpack(z, d);
    try {
      const GpPosterior post = detail::gp_profiled_posterior(p, hyper, data, mode);
      return post.in_support ? -post.value : std::numeric_limits<double>::infinity();
    } catch (const NumericError &) {
      return std::numeric_limits<double>::infinity();
    }
  };

  const auto restarts = static_cast<std::size_t>(options.restarts);
  std::vector<NelderMeadResult> results(restarts);
  const std::uint64_t restart_seed = derive_seed(options.seed, StreamPurpose::kRestarts);
  NelderMeadOptions nm;
  nm.max_evaluations = options.max_evaluations;
  nm.initial_step = 0.1;
  parallel_for(restarts, [&](std::size_t k) {
    Vector start = first;
    if (k > 0) {
      Engine rng = make_stream(restart_seed, k);
      std::uniform_real_distribution<double> unit(0.0, 1.0);
      for (Eigen::Index i = 0; i < start.size(); ++i) {
        start(i) = box.lower(i) + unit(rng) * (box.upper(i) - box.lower(i));
      }
    }
    results[k] = nelder_mead(objective, start, box.lower, box.upper, nm);
  });

  GpFitResult out;
  out.restarts = options.restarts;
  std::size_t best = restarts;
  for (std::size_t k = 0; k < restarts; ++k) {
    out.evaluations += results[k].evaluations;
    if (!std::isfinite(results[k].value)) {
      ++out.failed_restarts;
      continue;
    }
    if (best == restarts || results[k].value < results[best].value) best = k;
  }
  if (best == restarts) {
    throw NumericError("fit_failed",
                       "every GP restart failed (singular Theta or empty support)");
  }
  out.params = detail::gp_unpack(results[best].x, d);
  const GpPosterior post = detail::gp_profiled_posterior(out.params, hyper, data, mode);
  out.log_posterior = post.value;
  out.log_likelihood = post.log_likelihood;
  out.jitter = gp_loglikelihood_full(out.params, data).jitter;
  return out;
}

struct GpErrorQuantileReport {
  double median = 0.0;
  std::vector<double> quantiles;
  double alpha = 0.0;
  int reps = 0;
  std::uint64_t seed = 0;
};

/*
 * Model errors (Y_i - m(X_i)) ~ N(beta 1, sigma2 R + lambda I) at the given
 * inputs. Each replicate draws one error vector from stream k and takes the
 * plug-in alpha-quantile of its absolute values.
 */
inline GpErrorQuantileReport gp_error_quantile(const GpDiscrepancyParams &p,
                                               const Matrix &x, double alpha,
                                               int reps, std::uint64_t seed) {
  if (reps < 1) throw DomainError("reps must be >= 1");
  if (x.rows() < 1) throw InsufficientDataError("no inputs for error simulation");
  check_alpha(alpha);
  const Matrix cov = gp_theta(p, x);
  const EigenFactors factors = eigen_factors(cov);
  const Matrix t = factors.transform();
  const auto n = x.rows();
  GpErrorQuantileReport out;
  out.alpha = alpha;
  out.reps = reps;
  out.seed = seed;
  out.quantiles.resize(static_cast<std::size_t>(reps));
  const std::uint64_t base = derive_seed(seed, StreamPurpose::kSampling);
  parallel_for(static_cast<std::size_t>(reps), [&](std::size_t k) {
    Engine rng = make_stream(base, k);
    std::normal_distribution<double> normal;
    Vector z(n);
    for (Eigen::Index i = 0; i < n; ++i) z(i) = normal(rng);
    const Vector e = (t * z).array() + p.beta;
    std::vector<double> abs_e(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
      abs_e[static_cast<std::size_t>(i)] = std::abs(e(i));
    }
    out.quantiles[k] = mc_quantile(std::move(abs_e), alpha).value;
  });
  out.median = sample_median(out.quantiles);
  return out;
}

}  // namespace uqkit

#endif  // UQKIT_MODEL_ERROR_GP_DISCREPANCY_HPP_
