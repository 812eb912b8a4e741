#ifndef UQKIT_MODEL_ERROR_AVM_HPP_
#define UQKIT_MODEL_ERROR_AVM_HPP_

#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

#include "uqkit/core/error.hpp"

namespace uqkit {

// Right-continuous step function F(t) = #{v_i <= t} / n.
class EmpiricalCdf {
 public:
  explicit EmpiricalCdf(std::vector<double> values) : values_(std::move(values)) {
    if (values_.empty()) {
      throw InsufficientDataError("empirical CDF of an empty sample");
    }
    for (double v : values_) {
      if (!std::isfinite(v)) throw DataError("empirical CDF values must be finite");
    }
    std::sort(values_.begin(), values_.end());
  }

  double operator()(double t) const {
    const auto k = std::upper_bound(values_.begin(), values_.end(), t) - values_.begin();
    return static_cast<double>(k) / static_cast<double>(values_.size());
  }

  const std::vector<double> &values() const { return values_; }
  std::size_t size() const { return values_.size(); }

 private:
  std::vector<double> values_;
};

inline EmpiricalCdf empirical_cdf(std::vector<double> values) {
  return EmpiricalCdf(std::move(values));
}

struct AvmResult {
  double riemann = 0.0;  // midpoint sum on the equidistant grid
  double exact = 0.0;    // piecewise-constant integral
  double grid_lo = 0.0;
  double grid_hi = 0.0;
  int grid_steps = 0;
};

// Exact integral of |F_a - F_b| over the union of breakpoints.
inline double avm_exact(const EmpiricalCdf &a, const EmpiricalCdf &b) {
  const auto &va = a.values();
  const auto &vb = b.values();
  const double na = static_cast<double>(va.size());
  const double nb = static_cast<double>(vb.size());
  std::size_t i = 0, j = 0;
  double area = 0.0;
  double t = std::min(va.front(), vb.front());
  while (i < va.size() || j < vb.size()) {
    // advance past every sample equal to t
    while (i < va.size() && va[i] <= t) ++i;
    while (j < vb.size() && vb[j] <= t) ++j;
    if (i == va.size() && j == vb.size()) break;
    double next;
    if (i == va.size()) {
      next = vb[j];
    } else if (j == vb.size()) {
      next = va[i];
    } else {
      next = std::min(va[i], vb[j]);
    }
    const double diff =
        std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb);
    area += diff * (next - t);
    t = next;
  }
  return area;
}

/*
 * Area validation metric: integral of |F_exp - F_sim|. The Riemann value uses
 * grid_steps cells on [min - 1% range, max + 1% range] of the pooled samples.
 */
inline AvmResult avm(const std::vector<double> &exp_outputs,
                     const std::vector<double> &sim_outputs, int grid_steps) {
  if (exp_outputs.empty() || sim_outputs.empty()) {
    throw InsufficientDataError("AVM needs two nonempty samples");
  }
  if (grid_steps < 2) throw DomainError("AVM grid needs at least 2 steps");
  const EmpiricalCdf fa(exp_outputs);
  const EmpiricalCdf fb(sim_outputs);
  AvmResult out;
  out.exact = avm_exact(fa, fb);

  const double lo = std::min(fa.values().front(), fb.values().front());
  const double hi = std::max(fa.values().back(), fb.values().back());
  const double margin = hi > lo ? 0.01 * (hi - lo) : 1.0;
  out.grid_lo = lo - margin;
  out.grid_hi = hi + margin;
  out.grid_steps = grid_steps;
  const double width = (out.grid_hi - out.grid_lo) / grid_steps;
  const auto &va = fa.values();
  const auto &vb = fb.values();
  std::size_t i = 0, j = 0;
  double sum = 0.0;
  for (int k = 0; k < grid_steps; ++k) {
    const double t = out.grid_lo + (k + 0.5) * width;
    while (i < va.size() && va[i] <= t) ++i;
    while (j < vb.size() && vb[j] <= t) ++j;
    sum += std::abs(static_cast<double>(i) / static_cast<double>(va.size()) -
                    static_cast<double>(j) / static_cast<double>(vb.size()));
  }
  out.riemann = sum * width;
  return out;
}

}  // namespace uqkit

#endif  // UQKIT_MODEL_ERROR_AVM_HPP_
