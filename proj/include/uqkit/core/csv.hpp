#ifndef UQKIT_CORE_CSV_HPP_
#define UQKIT_CORE_CSV_HPP_

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "uqkit/core/dataset.hpp"
#include "uqkit/core/error.hpp"

namespace uqkit {

// Which CSV columns make up the inputs and which one is the output. An empty
// input list means "every column except the output column".
struct ColumnSchema {
  std::vector<std::string> input_columns;
  std::string output_column;
};

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  Eigen::Index column_index(const std::string &name) const {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) {
      throw DataError("column '" + name + "' not found in CSV header");
    }
    return static_cast<Eigen::Index>(it - header.begin());
  }
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) {
    s.remove_prefix(1);
  }
  while (!s.empty() &&
         (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

inline std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      cells.push_back(trim(line.substr(start)));
      return cells;
    }
    cells.push_back(trim(line.substr(start, comma - start)));
    start = comma + 1;
  }
}

inline bool parse_double(std::string_view cell, double *out) {
  if (!cell.empty() && cell.front() == '+') cell.remove_prefix(1);
  if (cell.empty()) return false;
  const auto result =
      std::from_chars(cell.data(), cell.data() + cell.size(), *out);
  return result.ec == std::errc() && result.ptr == cell.data() + cell.size() &&
         std::isfinite(*out);
}

}  // namespace detail

/*
 * Reads a numeric CSV with a header row. Data rows are numbered from 1 in
 * error messages (the header is not counted). Blank lines are skipped.
 */
inline CsvTable read_csv(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open file '" + path.string() + "'");

  CsvTable table;
  std::string line;
  bool have_header = false;
  std::size_t row_number = 0;
  while (std::getline(in, line)) {
    std::string_view view(line);
    if (!have_header && view.substr(0, 3) == "\xEF\xBB\xBF") {
      view.remove_prefix(3);
    }
    if (detail::trim(view).empty()) continue;
    const auto cells = detail::split_commas(view);
    if (!have_header) {
      for (const auto &c : cells) table.header.emplace_back(c);
      have_header = true;
      continue;
    }
    ++row_number;
    if (cells.size() != table.header.size()) {
      throw DataError(path.string() + ": row " + std::to_string(row_number) +
                      " has " + std::to_string(cells.size()) +
                      " fields, header has " +
                      std::to_string(table.header.size()));
    }
    std::vector<double> row(cells.size());
    for (std::size_t j = 0; j < cells.size(); ++j) {
      if (!detail::parse_double(cells[j], &row[j])) {
        throw DataError(path.string() + ": row " + std::to_string(row_number) +
                        ", column " + std::to_string(j + 1) + " ('" +
                        table.header[j] + "'): '" + std::string(cells[j]) +
                        "' is not a finite number");
      }
    }
    table.rows.push_back(std::move(row));
  }
  if (!have_header) throw DataError(path.string() + ": file is empty");
  if (table.rows.empty()) throw DataError(path.string() + ": no data rows");
  return table;
}

inline Matrix table_columns(const CsvTable &table,
                            const std::vector<std::string> &names) {
  Matrix m(static_cast<Eigen::Index>(table.rows.size()),
           static_cast<Eigen::Index>(names.size()));
  for (std::size_t j = 0; j < names.size(); ++j) {
    const auto col = table.column_index(names[j]);
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          table.rows[i][static_cast<std::size_t>(col)];
    }
  }
  return m;
}

inline PairedDataset parse_dataset(const std::filesystem::path &path,
                                   const ColumnSchema &schema,
                                   DataKind kind = DataKind::kExperimental) {
  const CsvTable table = read_csv(path);
  std::string output = schema.output_column;
  if (output.empty()) output = table.header.back();
  std::vector<std::string> inputs = schema.input_columns;
  if (inputs.empty()) {
    for (const auto &h : table.header) {
      if (h != output) inputs.push_back(h);
    }
  }
  if (inputs.empty()) throw DataError("dataset has no input columns");
  Matrix x = table_columns(table, inputs);
  Vector y = table_columns(table, {output}).col(0);
  return PairedDataset(std::move(x), std::move(y), kind, inputs, output);
}

// Reads the given columns (all columns when empty) as an input sample.
inline InputSample read_input_sample(const std::filesystem::path &path,
                                     std::vector<std::string> columns = {}) {
  const CsvTable table = read_csv(path);
  if (columns.empty()) columns = table.header;
  return InputSample(table_columns(table, columns));
}

// Shortest representation that parses back to the identical double.
inline std::string format_double(double v) {
  char buf[64];
  const auto result = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, result.ptr);
}

inline void write_csv(const std::filesystem::path &path,
                      const std::vector<std::string> &header,
                      const Matrix &values) {
  if (static_cast<Eigen::Index>(header.size()) != values.cols()) {
    throw DataError("CSV header size does not match column count");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write file '" + path.string() + "'");
  for (std::size_t j = 0; j < header.size(); ++j) {
    out << (j ? "," : "") << header[j];
  }
  out << '\n';
  for (Eigen::Index i = 0; i < values.rows(); ++i) {
    for (Eigen::Index j = 0; j < values.cols(); ++j) {
      out << (j ? "," : "") << format_double(values(i, j));
    }
    out << '\n';
  }
  if (!out) throw DataError("failed writing '" + path.string() + "'");
}

inline void write_dataset(const std::filesystem::path &path,
                          const PairedDataset &data) {
  Matrix all(data.size(), data.dim() + 1);
  all << data.inputs(), data.outputs();
  std::vector<std::string> header = data.input_names();
  header.push_back(data.output_name());
  write_csv(path, header, all);
}

inline void write_input_sample(const std::filesystem::path &path,
                               const InputSample &sample,
                               std::vector<std::string> header = {}) {
  if (header.empty()) {
    for (Eigen::Index j = 0; j < sample.dim(); ++j) {
      header.push_back("x" + std::to_string(j + 1));
    }
  }
  write_csv(path, header, sample.points());
}

}  // namespace uqkit

#endif  // UQKIT_CORE_CSV_HPP_
