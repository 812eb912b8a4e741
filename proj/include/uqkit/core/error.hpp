#ifndef UQKIT_CORE_ERROR_HPP_
#define UQKIT_CORE_ERROR_HPP_

#include <stdexcept>
#include <string>
#include <utility>

namespace uqkit {

/*
 * Every failure raised by the library derives from Error and carries a
 * short machine-readable code next to the human-readable message. The CLI
 * serializes both into its error JSON.
 */
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string &message)
      : std::runtime_error(message), code_(std::move(code)) {}

  const std::string &code() const noexcept { return code_; }

 private:
  std::string code_;
};

// Malformed or inconsistent input data (files, matrices, sizes).
class DataError : public Error {
 public:
  explicit DataError(const std::string &message)
      : Error("data_error", message) {}
};

// Too few observations for the requested operation.
class InsufficientDataError : public Error {
 public:
  explicit InsufficientDataError(const std::string &message)
      : Error("insufficient_data", message) {}
};

// Argument outside its mathematical domain (alpha, weights, bandwidth, ...).
class DomainError : public Error {
 public:
  explicit DomainError(const std::string &message)
      : Error("domain_error", message) {}
};

// Linear system could not be factorized or solved reliably.
class NumericError : public Error {
 public:
  explicit NumericError(std::string code, const std::string &message)
      : Error(std::move(code), message) {}
};

class RankDeficiencyError : public NumericError {
 public:
  explicit RankDeficiencyError(const std::string &message)
      : NumericError("rank_deficient", message) {}
};

class ConditioningError : public NumericError {
 public:
  explicit ConditioningError(const std::string &message)
      : NumericError("ill_conditioned", message) {}
};

/*
 * Confidence-set settings admit no valid quantile levels. When known, the
 * smallest delta that would make the settings feasible is attached.
 */
class InfeasibleError : public Error {
 public:
  explicit InfeasibleError(const std::string &message,
                           double minimal_delta = -1.0)
      : Error("infeasible", message), minimal_delta_(minimal_delta) {}

  double minimal_delta() const noexcept { return minimal_delta_; }

 private:
  double minimal_delta_;
};

}  // namespace uqkit

#endif  // UQKIT_CORE_ERROR_HPP_
