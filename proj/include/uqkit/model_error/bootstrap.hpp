#ifndef UQKIT_MODEL_ERROR_BOOTSTRAP_HPP_
#define UQKIT_MODEL_ERROR_BOOTSTRAP_HPP_

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include "uqkit/core/dataset.hpp"
#include "uqkit/core/error.hpp"
#include "uqkit/core/parallel.hpp"
#include "uqkit/density/kde.hpp"
#include "uqkit/randgen/random.hpp"
#include "uqkit/surrogate/fit.hpp"

namespace uqkit {

struct BootstrapSettings {
  int replicates = 500;  // B
  int learning_size = 10;  // n_l
  double alpha = 0.95;
  std::optional<Matrix> extra_inputs;  // enables the weighted residual fit
  double weight = 1.0;
  std::uint64_t seed = 0;
};

struct BootstrapErrorReport {
  std::vector<double> quantiles;  // one per replicate
  double median = 0.0;
  int replicates = 0;
  int learning_size = 0;
  double alpha = 0.0;
  std::uint64_t seed = 0;
  int degenerate_replicates = 0;  // singular fits replaced by a constant
};

/*
 * Bootstrap quantiles of the absolute model error. Replicate b resamples the
 * n pairs (X_i, eps_i) with replacement from stream b, fits the residual
 * model on the first n_l drawn pairs and takes the plug-in alpha-quantile of
 * |fit(X)| over the remaining n - n_l drawn inputs. A replicate whose fit is
 * singular uses the mean of its learning residuals instead and is counted.
 */
inline BootstrapErrorReport bootstrap_error_quantile(
    const PairedDataset &experimental, const SurrogateModel &base_surrogate,
    const FunctionFamily &family, const BootstrapSettings &settings) {
  const auto n = experimental.size();
  if (settings.replicates < 1) throw DomainError("bootstrap needs B >= 1");
  if (settings.learning_size < 1 || settings.learning_size > n - 1) {
    throw DomainError("learning size n_l must lie in [1, n - 1] = [1, " +
                      std::to_string(n - 1) + "], got " +
                      std::to_string(settings.learning_size));
  }
  check_alpha(settings.alpha);
  const Vector eps = compute_residuals(base_surrogate, experimental);
  const Matrix &x = experimental.inputs();
  const auto nl = static_cast<Eigen::Index>(settings.learning_size);
  const auto ne = n - nl;

  BootstrapErrorReport out;
  out.replicates = settings.replicates;
  out.learning_size = settings.learning_size;
  out.alpha = settings.alpha;
  out.seed = settings.seed;
  out.quantiles.resize(static_cast<std::size_t>(settings.replicates));
  std::vector<char> degenerate(out.quantiles.size(), 0);
  const std::uint64_t base = derive_seed(settings.seed, StreamPurpose::kBootstrap);

  parallel_for(out.quantiles.size(), [&](std::size_t b) {
    Engine rng = make_stream(base, b);
    std::uniform_int_distribution<Eigen::Index> pick(0, n - 1);
    std::vector<Eigen::Index> idx(static_cast<std::size_t>(n));
    for (auto &i : idx) i = pick(rng);
    const std::vector<Eigen::Index> learn(idx.begin(), idx.begin() + nl);
    const std::vector<Eigen::Index> eval(idx.begin() + nl, idx.end());
    const Matrix xl = x(learn, Eigen::all);
    const Vector el = eps(learn);
    const Matrix xe = x(eval, Eigen::all);

    Vector fitted;
    try {
      const SurrogateModel m =
          settings.extra_inputs
              ? fit_residual_model_weighted(family, xl, el, *settings.extra_inputs,
                                            settings.weight)
              : fit_residual_model(family, xl, el);
      fitted = m.evaluate(xe);
    } catch (const RankDeficiencyError &) {
      degenerate[b] = 1;
      fitted = Vector::Constant(ne, el.mean());
    }
    std::vector<double> abs_fit(static_cast<std::size_t>(ne));
    for (Eigen::Index i = 0; i < ne; ++i) {
      abs_fit[static_cast<std::size_t>(i)] = std::abs(fitted(i));
    }
    out.quantiles[b] = mc_quantile(std::move(abs_fit), settings.alpha).value;
  });
  for (char c : degenerate) out.degenerate_replicates += c;
  out.median = sample_median(out.quantiles);
  return out;
}

}  // namespace uqkit

#endif  // UQKIT_MODEL_ERROR_BOOTSTRAP_HPP_
