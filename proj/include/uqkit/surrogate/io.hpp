#ifndef UQKIT_SURROGATE_IO_HPP_
#define UQKIT_SURROGATE_IO_HPP_

#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "uqkit/core/error.hpp"
#include "uqkit/surrogate/basis.hpp"
#include "uqkit/surrogate/fit.hpp"
#include "uqkit/surrogate/improved.hpp"

namespace uqkit {

namespace detail {

inline nlohmann::json vector_to_json(const Vector &v) {
  return nlohmann::json(std::vector<double>(v.data(), v.data() + v.size()));
}

inline Vector vector_from_json(const nlohmann::json &j) {
  const auto values = j.get<std::vector<double>>();
  return Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
}

inline nlohmann::json matrix_to_json(const Matrix &m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) rows.push_back(vector_to_json(m.row(i)));
  return rows;
}

inline Matrix matrix_from_json(const nlohmann::json &j, Eigen::Index cols) {
  Matrix m(static_cast<Eigen::Index>(j.size()), cols);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    const Vector row = vector_from_json(j.at(static_cast<std::size_t>(i)));
    if (row.size() != cols) throw DataError("ragged matrix in model file");
    m.row(i) = row.transpose();
  }
  return m;
}

// NaN is not valid JSON; store it as null.
inline nlohmann::json number_or_null(double v) {
  return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
}

inline double number_or_nan(const nlohmann::json &j, const char *key) {
  if (!j.contains(key) || j.at(key).is_null()) {
    return std::numeric_limits<double>::quiet_NaN();
  }
  return j.at(key).get<double>();
}

}  // namespace detail

inline nlohmann::json to_json(const FunctionFamily &f) {
  nlohmann::json j{{"kind", to_string(f.kind)}, {"penalty", f.penalty}};
  switch (f.kind) {
    case FamilyKind::kSpline1d:
      j["interior_knots"] = f.interior_knots;
      break;
    case FamilyKind::kRbfRidge:
      j["centers"] = f.centers;
      j["rbf_width"] = f.rbf_width;
      break;
    case FamilyKind::kPolyRidge:
      j["degree"] = f.degree;
      break;
  }
  if (f.range) j["range"] = {f.range->lo, f.range->hi};
  return j;
}

inline FunctionFamily family_from_json(const nlohmann::json &j) {
  FunctionFamily f;
  f.kind = family_kind_from_string(j.at("kind").get<std::string>());
  f.penalty = j.value("penalty", 0.0);
  f.interior_knots = j.value("interior_knots", f.interior_knots);
  f.centers = j.value("centers", f.centers);
  f.rbf_width = j.value("rbf_width", f.rbf_width);
  f.degree = j.value("degree", f.degree);
  if (j.contains("range")) {
    const auto r = j.at("range").get<std::vector<double>>();
    if (r.size() != 2) throw DataError("family range must have two entries");
    f.range = Range{r[0], r[1]};
  }
  f.validate();
  return f;
}

inline nlohmann::json to_json(const Basis &basis) {
  if (const auto *s = std::get_if<SplineBasis>(&basis)) {
    return {{"type", "spline"}, {"lo", s->lo()}, {"hi", s->hi()},
            {"interior_knots", s->interior_knots()}};
  }
  if (const auto *r = std::get_if<RbfBasis>(&basis)) {
    return {{"type", "rbf"},
            {"shift", detail::vector_to_json(r->shift())},
            {"scale", detail::vector_to_json(r->scale())},
            {"centers", detail::matrix_to_json(r->centers())},
            {"width", r->width()}};
  }
  const auto &p = std::get<PolyBasis>(basis);
  return {{"type", "poly"}, {"dim", p.dim()}, {"degree", p.degree()},
          {"exponents", p.exponents()}};
}

inline Basis basis_from_json(const nlohmann::json &j) {
  const std::string type = j.at("type").get<std::string>();
  if (type == "spline") {
    return SplineBasis(j.at("lo").get<double>(), j.at("hi").get<double>(),
                       j.at("interior_knots").get<int>());
  }
  if (type == "rbf") {
    const Vector shift = detail::vector_from_json(j.at("shift"));
    return RbfBasis(shift, detail::vector_from_json(j.at("scale")),
                    detail::matrix_from_json(j.at("centers"), shift.size()),
                    j.at("width").get<double>());
  }
  if (type == "poly") {
    return PolyBasis(j.at("dim").get<Eigen::Index>(), j.at("degree").get<int>());
  }
  throw DataError("unknown basis type '" + type + "' in model file");
}

inline nlohmann::json to_json(const SurrogateModel &m) {
  return {{"family", to_json(m.family())},
          {"basis", to_json(m.basis())},
          {"coefficients", detail::vector_to_json(m.coefficients())},
          {"training_size", m.info().training_size},
          {"cv_score", detail::number_or_null(m.info().cv_score)},
          {"gcv_score", detail::number_or_null(m.info().gcv_score)}};
}

inline SurrogateModel surrogate_from_json(const nlohmann::json &j) {
  FitInfo info;
  info.training_size = j.value("training_size", Eigen::Index{0});
  info.cv_score = detail::number_or_nan(j, "cv_score");
  info.gcv_score = detail::number_or_nan(j, "gcv_score");
  return SurrogateModel(family_from_json(j.at("family")), basis_from_json(j.at("basis")),
                        detail::vector_from_json(j.at("coefficients")), info);
}

/*
 * Model file layout: {"format": "uqkit-surrogate/1", "base": {...},
 * "residual": {...} or null, "weight": w, "penalty": residual penalty,
 * "cv_score": ...}.
 */
inline nlohmann::json to_json(const ImprovedSurrogate &s) {
  return {{"format", "uqkit-surrogate/1"},
          {"base", to_json(s.base())},
          {"residual", to_json(s.residual())},
          {"weight", s.weight()},
          {"penalty", s.residual().family().penalty},
          {"cv_score", detail::number_or_null(s.residual().info().cv_score)}};
}

inline ImprovedSurrogate improved_from_json(const nlohmann::json &j) {
  SurrogateModel base = surrogate_from_json(j.at("base"));
  if (!j.contains("residual") || j.at("residual").is_null()) {
    SurrogateModel zero(base.family(), base.basis(), Vector::Zero(base.coefficients().size()));
    return ImprovedSurrogate(std::move(base), std::move(zero), 1.0);
  }
  return ImprovedSurrogate(std::move(base), surrogate_from_json(j.at("residual")),
                           j.value("weight", 1.0));
}

inline void save_model(const std::filesystem::path &path, const ImprovedSurrogate &s) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write model file '" + path.string() + "'");
  out << to_json(s).dump(2) << '\n';
}

inline ImprovedSurrogate load_model(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open model file '" + path.string() + "'");
  nlohmann::json j;
  try {
    in >> j;
    return improved_from_json(j);
  } catch (const nlohmann::json::exception &e) {
    throw DataError("malformed model file '" + path.string() + "': " + e.what());
  }
}

}  // namespace uqkit

#endif  // UQKIT_SURROGATE_IO_HPP_
