#ifndef UQKIT_DENSITY_KDE_HPP_
#define UQKIT_DENSITY_KDE_HPP_

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "uqkit/core/dataset.hpp"
#include "uqkit/core/error.hpp"

namespace uqkit {

enum class KernelKind { kNaive, kGauss, kEpanechnikov };

inline const char *to_string(KernelKind kind) {
  switch (kind) {
    case KernelKind::kNaive:
      return "naive";
    case KernelKind::kGauss:
      return "gauss";
    case KernelKind::kEpanechnikov:
      return "epanechnikov";
  }
  return "?";
}

inline KernelKind kernel_kind_from_string(const std::string &s) {
  if (s == "naive" || s == "box") return KernelKind::kNaive;
  if (s == "gauss" || s == "gaussian") return KernelKind::kGauss;
  if (s == "epanechnikov" || s == "epa") return KernelKind::kEpanechnikov;
  throw DomainError("unknown kernel '" + s +
                    "' (expected naive, gauss or epanechnikov)");
}

namespace detail {

// Kernel density K(u) and its distribution function.
inline double kernel_value(KernelKind kind, double u) {
  switch (kind) {
    case KernelKind::kNaive:
      return std::abs(u) <= 1.0 ? 0.5 : 0.0;
    case KernelKind::kGauss:
      return 0.3989422804014327 * std::exp(-0.5 * u * u);
    case KernelKind::kEpanechnikov:
      return std::abs(u) <= 1.0 ? 0.75 * (1.0 - u * u) : 0.0;
  }
  return 0.0;
}

inline double kernel_cdf(KernelKind kind, double u) {
  switch (kind) {
    case KernelKind::kNaive:
      return std::clamp(0.5 * (u + 1.0), 0.0, 1.0);
    case KernelKind::kGauss:
      return 0.5 * std::erfc(-u * 0.7071067811865476);
    case KernelKind::kEpanechnikov: {
      const double c = std::clamp(u, -1.0, 1.0);
      return 0.5 + 0.75 * (c - c * c * c / 3.0);
    }
  }
  return 0.0;
}

// Half-width of the region outside which the kernel is negligible.
inline double kernel_reach(KernelKind kind) {
  return kind == KernelKind::kGauss ? 40.0 : 1.0;
}

}  // namespace detail

/*
 * g(y) = 1/(N h) sum_i K((y - v_i) / h).
 * Values are kept sorted; the naive kernel additionally keeps centered
 * prefix sums so that its distribution function costs O(log N).
 */
class KdeModel {
 public:
  KdeModel(std::vector<double> values, double bandwidth,
           KernelKind kernel = KernelKind::kNaive)
      : values_(std::move(values)), h_(bandwidth), kernel_(kernel) {
    if (values_.empty()) throw InsufficientDataError("KDE needs at least one value");
    if (!(h_ > 0.0) || !std::isfinite(h_)) {
      throw DomainError("bandwidth must be positive and finite");
    }
    for (double v : values_) {
      if (!std::isfinite(v)) throw DataError("KDE values must be finite");
    }
    std::sort(values_.begin(), values_.end());
    center_ = values_[values_.size() / 2];
    prefix_.assign(values_.size() + 1, 0.0);
    for (std::size_t i = 0; i < values_.size(); ++i) {
      prefix_[i + 1] = prefix_[i] + (values_[i] - center_);
    }
  }

  const std::vector<double> &values() const { return values_; }
  double bandwidth() const { return h_; }
  KernelKind kernel() const { return kernel_; }
  std::size_t size() const { return values_.size(); }

  double operator()(double y) const {
    const double n = static_cast<double>(values_.size());
    if (kernel_ == KernelKind::kNaive) {
      const auto lo = std::lower_bound(values_.begin(), values_.end(), y - h_);
      const auto hi = std::upper_bound(values_.begin(), values_.end(), y + h_);
      return 0.5 * static_cast<double>(hi - lo) / (n * h_);
    }
    const double reach = detail::kernel_reach(kernel_) * h_;
    const auto lo = std::lower_bound(values_.begin(), values_.end(), y - reach);
    const auto hi = std::upper_bound(values_.begin(), values_.end(), y + reach);
    double sum = 0.0;
    for (auto it = lo; it != hi; ++it) {
      sum += detail::kernel_value(kernel_, (y - *it) / h_);
    }
    return sum / (n * h_);
  }

  // Integral of the estimate over (-inf, x].
  double cdf(double x) const {
    const double n = static_cast<double>(values_.size());
    if (kernel_ == KernelKind::kNaive) {
      // v <= x - h contributes 1, v in (x - h, x + h) contributes
      // (x + h - v) / (2h), the rest nothing.
      const auto lo = std::upper_bound(values_.begin(), values_.end(), x - h_);
      const auto hi = std::lower_bound(lo, values_.end(), x + h_);
      const auto full = static_cast<std::size_t>(lo - values_.begin());
      const auto end = static_cast<std::size_t>(hi - values_.begin());
      const double count = static_cast<double>(end - full);
      const double partial =
          (count * (x + h_ - center_) - (prefix_[end] - prefix_[full])) /
          (2.0 * h_);
      return std::clamp((static_cast<double>(full) + partial) / n, 0.0, 1.0);
    }
    const double reach = detail::kernel_reach(kernel_) * h_;
    const auto lo = std::upper_bound(values_.begin(), values_.end(), x - reach);
    const auto hi = std::lower_bound(lo, values_.end(), x + reach);
    double sum = static_cast<double>(lo - values_.begin());
    for (auto it = lo; it != hi; ++it) {
      sum += detail::kernel_cdf(kernel_, (x - *it) / h_);
    }
    return std::clamp(sum / n, 0.0, 1.0);
  }

  // Integral of the estimate over [a, b]; zero when b <= a.
  double integral(double a, double b) const {
    if (!(b > a)) return 0.0;
    return std::max(0.0, cdf(b) - cdf(a));
  }

 private:
  std::vector<double> values_;
  double h_;
  KernelKind kernel_;
  double center_ = 0.0;
  std::vector<double> prefix_;
};

inline double kde_evaluate(const KdeModel &model, double y) { return model(y); }

/*
 * Total mass of the naive-kernel estimate as the sum of its box areas,
 * (1/N) sum_i (1/(2h)) * 2h.
 */
inline double kde_box_mass(const KdeModel &model) {
  double area = 0.0;
  const double n = static_cast<double>(model.size());
  const double h = model.bandwidth();
  for (double v : model.values()) {
    area += ((v + h) - (v - h)) / (2.0 * h * n);
  }
  return area;
}

// Type-7 sample quantile of sorted data.
inline double sorted_quantile_linear(const std::vector<double> &sorted, double p) {
  const double pos = p * static_cast<double>(sorted.size() - 1);
  const auto i = static_cast<std::size_t>(std::floor(pos));
  if (i + 1 >= sorted.size()) return sorted.back();
  const double frac = pos - static_cast<double>(i);
  return sorted[i] + frac * (sorted[i + 1] - sorted[i]);
}

/*
 * Normal-reference rule h = 1.06 * s * N^(-1/5) with
 * s = min(sample std, IQR / 1.349). A zero IQR with nonzero spread falls
 * back to the standard deviation.
 */
inline double select_bandwidth(std::vector<double> values) {
  const auto n = values.size();
  if (n < 2) {
    throw InsufficientDataError("bandwidth selection needs at least 2 values");
  }
  std::sort(values.begin(), values.end());
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / static_cast<double>(n - 1));
  if (!(sd > 0.0)) {
    throw DataError("zero spread: all values are identical, bandwidth undefined");
  }
  const double iqr =
      sorted_quantile_linear(values, 0.75) - sorted_quantile_linear(values, 0.25);
  const double spread = iqr > 0.0 ? std::min(sd, iqr / 1.349) : sd;
  return 1.06 * spread * std::pow(static_cast<double>(n), -0.2);
}

inline std::vector<double> to_std_vector(const Vector &v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

struct QuantileEstimate {
  double alpha = 0.0;
  double value = 0.0;
  std::size_t sample_size = 0;
};

/*
 * Rank k = ceil(N * alpha) of the plug-in quantile, clamped to [1, N].
 * Products within a few ulps of an integer are treated as that integer.
 */
inline std::size_t quantile_rank(std::size_t n, double alpha) {
  const double x = static_cast<double>(n) * alpha;
  const double r = std::round(x);
  double k = std::abs(x - r) <= 1e-9 * std::max(1.0, x) ? r : std::ceil(x);
  k = std::clamp(k, 1.0, static_cast<double>(n));
  return static_cast<std::size_t>(k);
}

inline void check_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw DomainError("quantile level must lie in (0, 1), got " +
                      std::to_string(alpha));
  }
}

// min{y : G(y) >= alpha} on data that is already sorted ascending.
inline double sorted_quantile(const std::vector<double> &sorted, double alpha) {
  if (sorted.empty()) throw InsufficientDataError("quantile of an empty sample");
  check_alpha(alpha);
  return sorted[quantile_rank(sorted.size(), alpha) - 1];
}

// The ceil(N alpha)-th smallest value.
inline QuantileEstimate mc_quantile(std::vector<double> values, double alpha) {
  if (values.empty()) throw InsufficientDataError("quantile of an empty sample");
  check_alpha(alpha);
  const std::size_t k = quantile_rank(values.size(), alpha);
  auto nth = values.begin() + static_cast<std::ptrdiff_t>(k - 1);
  std::nth_element(values.begin(), nth, values.end());
  return QuantileEstimate{alpha, *nth, values.size()};
}

inline QuantileEstimate mc_quantile(const Vector &values, double alpha) {
  return mc_quantile(to_std_vector(values), alpha);
}

// Exact sample median (mean of the two middle values for even counts).
inline double sample_median(std::vector<double> values) {
  if (values.empty()) throw InsufficientDataError("median of an empty sample");
  std::sort(values.begin(), values.end());
  const std::size_t m = values.size() / 2;
  if (values.size() % 2 == 1) return values[m];
  return 0.5 * (values[m - 1] + values[m]);
}

/*
 * KDE of surrogate outputs on an input sample. `Surrogate` needs
 * evaluate(const Matrix&) -> Vector. A missing bandwidth selects one by
 * the normal-reference rule.
 */
template <typename Surrogate>
KdeModel surrogate_density(const Surrogate &surrogate, const InputSample &inputs,
                           KernelKind kernel = KernelKind::kNaive,
                           std::optional<double> bandwidth = std::nullopt) {
  std::vector<double> values = to_std_vector(surrogate.evaluate(inputs.points()));
  const double h = bandwidth ? *bandwidth : select_bandwidth(values);
  return KdeModel(std::move(values), h, kernel);
}

}  // namespace uqkit

#endif  // UQKIT_DENSITY_KDE_HPP_
