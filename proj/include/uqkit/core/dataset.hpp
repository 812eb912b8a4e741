#ifndef UQKIT_CORE_DATASET_HPP_
#define UQKIT_CORE_DATASET_HPP_

#include <Eigen/Dense>

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "uqkit/core/error.hpp"

namespace uqkit {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

enum class DataKind { kExperimental, kSimulated };

inline const char *to_string(DataKind kind) {
  return kind == DataKind::kExperimental ? "experimental" : "simulated";
}

namespace detail {

inline void require_finite(const Matrix &m, const char *what) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (!std::isfinite(m(i, j))) {
        throw DataError(std::string(what) + ": non-finite entry at row " +
                        std::to_string(i + 1) + ", column " +
                        std::to_string(j + 1));
      }
    }
  }
}

}  // namespace detail

/*
 * Input/output pairs. Experimental data holds measured outputs Y_i, simulated
 * data holds computer-model outputs m(X_i). Immutable once constructed.
 */
class PairedDataset {
 public:
  PairedDataset(Matrix inputs, Vector outputs, DataKind kind,
                std::vector<std::string> input_names = {},
                std::string output_name = "y")
      : inputs_(std::move(inputs)),
        outputs_(std::move(outputs)),
        kind_(kind),
        input_names_(std::move(input_names)),
        output_name_(std::move(output_name)) {
    if (inputs_.rows() < 1) throw DataError("dataset needs at least one row");
    if (inputs_.cols() < 1) throw DataError("dataset needs at least one input");
    if (inputs_.rows() != outputs_.size()) {
      throw DataError("dataset has " + std::to_string(inputs_.rows()) +
                      " input rows but " + std::to_string(outputs_.size()) +
                      " outputs");
    }
    detail::require_finite(inputs_, "dataset inputs");
    detail::require_finite(outputs_, "dataset outputs");
    if (input_names_.empty()) {
      for (Eigen::Index j = 0; j < inputs_.cols(); ++j) {
        input_names_.push_back("x" + std::to_string(j + 1));
      }
    }
    if (static_cast<Eigen::Index>(input_names_.size()) != inputs_.cols()) {
      throw DataError("input name count does not match input columns");
    }
  }

  Eigen::Index size() const { return inputs_.rows(); }
  Eigen::Index dim() const { return inputs_.cols(); }
  const Matrix &inputs() const { return inputs_; }
  const Vector &outputs() const { return outputs_; }
  DataKind kind() const { return kind_; }
  const std::vector<std::string> &input_names() const { return input_names_; }
  const std::string &output_name() const { return output_name_; }

 private:
  Matrix inputs_;
  Vector outputs_;
  DataKind kind_;
  std::vector<std::string> input_names_;
  std::string output_name_;
};

// A sample of input points without outputs (rows are points).
class InputSample {
 public:
  explicit InputSample(Matrix points) : points_(std::move(points)) {
    if (points_.rows() < 1) throw DataError("input sample is empty");
    if (points_.cols() < 1) throw DataError("input sample has no columns");
    detail::require_finite(points_, "input sample");
  }

  Eigen::Index size() const { return points_.rows(); }
  Eigen::Index dim() const { return points_.cols(); }
  const Matrix &points() const { return points_; }

 private:
  Matrix points_;
};

}  // namespace uqkit

#endif  // UQKIT_CORE_DATASET_HPP_
