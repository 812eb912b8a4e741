#ifndef UQKIT_SYNTHETIC_SYSTEMS_HPP_
#define UQKIT_SYNTHETIC_SYSTEMS_HPP_

#include <boost/math/distributions/normal.hpp>

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "uqkit/core/dataset.hpp"
#include "uqkit/core/error.hpp"
#include "uqkit/randgen/mvn.hpp"
#include "uqkit/randgen/random.hpp"

namespace uqkit {

enum class BiasKind { kConstant, kLinear, kSmooth };

inline const char *to_string(BiasKind kind) {
  switch (kind) {
    case BiasKind::kConstant:
      return "constant";
    case BiasKind::kLinear:
      return "linear";
    case BiasKind::kSmooth:
      return "smooth";
  }
  return "?";
}

inline BiasKind bias_kind_from_string(const std::string &s) {
  if (s == "constant") return BiasKind::kConstant;
  if (s == "linear") return BiasKind::kLinear;
  if (s == "smooth") return BiasKind::kSmooth;
  throw DomainError("unknown bias kind '" + s + "' (expected constant, linear or smooth)");
}

// bias(z) for a standardized coordinate z.
inline double bias_profile(BiasKind kind, double magnitude, double z) {
  switch (kind) {
    case BiasKind::kConstant:
      return magnitude;
    case BiasKind::kLinear:
      return magnitude * z;
    case BiasKind::kSmooth:
      return magnitude * (1.0 + 0.5 * std::sin(z));
  }
  return 0.0;
}

/*
 * Test system with known truth: inputs X ~ N(mu, Sigma), experiment
 * Y = g(X) + noise, computer model m(x) = g(x) + bias(x).
 */
struct SyntheticSystem {
  std::string name;
  MvnParams input_law;
  std::function<double(const Vector &)> truth;
  std::function<double(const Vector &)> bias;
  double sigma_obs = 0.0;
  BiasKind bias_kind = BiasKind::kConstant;
  double bias_magnitude = 0.0;

  Eigen::Index dim() const { return input_law.dim(); }
  double model(const Vector &x) const { return truth(x) + bias(x); }

  Vector truth_on(const Matrix &x) const { return apply(truth, x); }
  Vector bias_on(const Matrix &x) const { return apply(bias, x); }
  Vector model_on(const Matrix &x) const { return truth_on(x) + bias_on(x); }

 private:
  static Vector apply(const std::function<double(const Vector &)> &f, const Matrix &x) {
    Vector out(x.rows());
    Vector row(x.cols());
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      row = x.row(i).transpose();
      out(i) = f(row);
    }
    return out;
  }
};

// One-dimensional drop-height system.
inline constexpr double kDropHeightMean = 0.05;
inline constexpr double kDropHeightStd = 0.0057;
inline constexpr double kSqrtGain = 0.37;  // arbitrary; puts outputs near 0.08
inline constexpr double kDefaultBias = 0.003;

inline SyntheticSystem make_mafds_like(BiasKind bias_kind, double sigma_obs,
                                       double bias_magnitude = kDefaultBias) {
  if (!(sigma_obs >= 0.0)) throw DomainError("sigma_obs must be >= 0");
  SyntheticSystem s;
  s.name = "mafds-like";
  s.input_law.mean = Vector::Constant(1, kDropHeightMean);
  s.input_law.covariance = Matrix::Constant(1, 1, kDropHeightStd * kDropHeightStd);
  s.truth = [](const Vector &x) { return kSqrtGain * std::sqrt(std::max(x(0), 0.0)); };
  s.bias = [bias_kind, bias_magnitude](const Vector &x) {
    return bias_profile(bias_kind, bias_magnitude,
                        (x(0) - kDropHeightMean) / kDropHeightStd);
  };
  s.sigma_obs = sigma_obs;
  s.bias_kind = bias_kind;
  s.bias_magnitude = bias_magnitude;
  return s;
}

namespace mafds_oracle {

inline boost::math::normal_distribution<double> input_law() {
  return boost::math::normal_distribution<double>(kDropHeightMean, kDropHeightStd);
}

// alpha-quantile of g(X) = a sqrt(X): a sqrt(q_X(alpha)).
inline double truth_quantile(double alpha) {
  return kSqrtGain * std::sqrt(boost::math::quantile(input_law(), alpha));
}

// P(g(X) <= y) = P(X <= (y/a)^2) for y > 0.
inline double truth_cdf(double y) {
  if (y <= 0.0) return boost::math::cdf(input_law(), 0.0);
  const double x = (y / kSqrtGain) * (y / kSqrtGain);
  return boost::math::cdf(input_law(), x);
}

// Density of g(X): phi_X((y/a)^2) * 2y / a^2.
inline double truth_density(double y) {
  if (y <= 0.0) return 0.0;
  const double x = (y / kSqrtGain) * (y / kSqrtGain);
  return boost::math::pdf(input_law(), x) * 2.0 * y / (kSqrtGain * kSqrtGain);
}

// alpha-quantile of |bias(X)|; constant and linear bias only.
inline double abs_bias_quantile(BiasKind kind, double magnitude, double alpha) {
  switch (kind) {
    case BiasKind::kConstant:
      return std::abs(magnitude);
    case BiasKind::kLinear: {
      const boost::math::normal_distribution<double> z;
      return std::abs(magnitude) * boost::math::quantile(z, 0.5 * (1.0 + alpha));
    }
    case BiasKind::kSmooth:
      break;
  }
  throw DomainError("no closed-form |bias| quantile for smooth bias");
}

}  // namespace mafds_oracle

/*
 * Measurements of ten built piezo-beam supports in physical units:
 * k_rot_y, k_rot_z [Nm/rad], k_lat_y, k_lat_z [N/m], h_x [m], and the
 * maximal vibration amplitude y [(m/s^2)/V].
 */
inline constexpr std::array<const char *, 6> kPiezoColumns = {
    "k_rot_y", "k_rot_z", "k_lat_y", "k_lat_z", "h_x", "y"};

inline constexpr std::array<std::array<double, 6>, 10> kPiezoMeasurements = {{
    {1.31e2, 1.31e2, 3.27e7, 3.07e7, 6.79e-4, 1.45e1},
    {1.34e2, 1.28e2, 3.28e7, 3.22e7, 6.77e-4, 1.42e1},
    {1.31e2, 1.43e2, 3.35e7, 3.29e7, 6.82e-4, 1.44e1},
    {1.23e2, 1.25e2, 3.29e7, 3.25e7, 6.80e-4, 1.42e1},
    {1.14e2, 1.30e2, 3.22e7, 3.30e7, 6.79e-4, 1.43e1},
    {1.29e2, 1.34e2, 3.26e7, 3.18e7, 6.76e-4, 1.35e1},
    {1.35e2, 1.22e2, 3.19e7, 3.16e7, 6.81e-4, 1.47e1},
    {1.28e2, 1.16e2, 3.54e7, 3.51e7, 6.74e-4, 1.32e1},
    {1.04e2, 1.18e2, 3.21e7, 3.37e7, 6.68e-4, 1.31e1},
    {1.20e2, 1.11e2, 3.42e7, 3.44e7, 6.84e-4, 1.63e1},
}};

inline InputSample piezo_inputs() {
  Matrix x(10, 5);
  for (Eigen::Index i = 0; i < 10; ++i) {
    for (Eigen::Index j = 0; j < 5; ++j) {
      x(i, j) = kPiezoMeasurements[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    }
  }
  return InputSample(std::move(x));
}

/*
 * Five-input system on the MVN fitted to the piezo measurements. With
 * z_j = (x_j - mu_j) / sd_j the response is
 *
 *   g(x) = 14.3 + 0.4 z1 + 0.3 z2 - 0.5 z3 + 0.2 z4 + 0.6 z5
 *          + 0.1 z1 z5 + 0.05 z3^2
 *
 * and the bias profile acts on z1.
 */
inline SyntheticSystem make_hidim_like(BiasKind bias_kind, double sigma_obs,
                                       double bias_magnitude = 0.2) {
  if (!(sigma_obs >= 0.0)) throw DomainError("sigma_obs must be >= 0");
  SyntheticSystem s;
  s.name = "hidim-like";
  s.input_law = estimate_mvn(piezo_inputs());
  const Vector mu = s.input_law.mean;
  const Vector sd = s.input_law.covariance.diagonal().cwiseSqrt();
  s.truth = [mu, sd](const Vector &x) {
    const Vector z = (x - mu).cwiseQuotient(sd);
    return 14.3 + 0.4 * z(0) + 0.3 * z(1) - 0.5 * z(2) + 0.2 * z(3) + 0.6 * z(4) +
           0.1 * z(0) * z(4) + 0.05 * z(2) * z(2);
  };
  s.bias = [mu, sd, bias_kind, bias_magnitude](const Vector &x) {
    return bias_profile(bias_kind, bias_magnitude, (x(0) - mu(0)) / sd(0));
  };
  s.sigma_obs = sigma_obs;
  s.bias_kind = bias_kind;
  s.bias_magnitude = bias_magnitude;
  return s;
}

inline InputSample draw_inputs(const SyntheticSystem &system, Eigen::Index count,
                               std::uint64_t seed) {
  if (count < 1) throw DomainError("sample size must be >= 1");
  return sample_mvn(system.input_law, count, derive_seed(seed, StreamPurpose::kSampling));
}

// (X_i, g(X_i) + sigma_obs * Z_i).
inline PairedDataset draw_experiment(const SyntheticSystem &system, Eigen::Index n,
                                     std::uint64_t seed) {
  const InputSample x = draw_inputs(system, n, seed);
  Vector y = system.truth_on(x.points());
  if (system.sigma_obs > 0.0) {
    Engine rng = make_stream(derive_seed(seed, StreamPurpose::kNoise));
    std::normal_distribution<double> normal;
    for (Eigen::Index i = 0; i < n; ++i) y(i) += system.sigma_obs * normal(rng);
  }
  return PairedDataset(x.points(), std::move(y), DataKind::kExperimental);
}

// (X_i, m(X_i)).
inline PairedDataset draw_simulation(const SyntheticSystem &system, Eigen::Index count,
                                     std::uint64_t seed) {
  const InputSample x = draw_inputs(system, count, seed);
  return PairedDataset(x.points(), system.model_on(x.points()), DataKind::kSimulated);
}

}  // namespace uqkit

#endif  // UQKIT_SYNTHETIC_SYSTEMS_HPP_
