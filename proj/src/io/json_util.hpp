#pragma once

#include <cmath>
#include <string>
#include <vector>

#include <json.hpp>

#include "shadowrank/io.hpp"
#include "shadowrank/types.hpp"

namespace shadowrank::detail {

// Location of a field inside a file, for error messages.
struct Where {
  std::string source;
  std::size_t line = 0;
  std::string path;

  Where sub(const std::string& name) const {
    return {source, line, path.empty() ? name : path + "." + name};
  }
  DataError error(const std::string& message) const {
    std::string prefix = source;
    if (line > 0) prefix += ":" + std::to_string(line);
    if (!path.empty()) prefix += ": " + path;
    return DataError(prefix + ": " + message);
  }
};

inline const nlohmann::json& field(const nlohmann::json& j, const char* name, const Where& at) {
  if (!j.is_object() || !j.contains(name)) throw at.sub(name).error("missing field");
  return j[name];
}

inline std::string get_string(const nlohmann::json& j, const Where& at) {
  if (!j.is_string()) throw at.error("expected a string");
  return j.get<std::string>();
}

inline double get_number(const nlohmann::json& j, const Where& at) {
  if (!j.is_number()) throw at.error("expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw at.error("non-finite number");
  return v;
}

inline std::size_t get_size(const nlohmann::json& j, const Where& at) {
  if (!j.is_number_integer() || j.get<long long>() < 0) throw at.error("expected a nonnegative integer");
  return j.get<std::size_t>();
}

inline bool get_bool(const nlohmann::json& j, const Where& at) {
  if (!j.is_boolean()) throw at.error("expected true or false");
  return j.get<bool>();
}

inline std::vector<double> get_vector(const nlohmann::json& j, const Where& at) {
  if (!j.is_array()) throw at.error("expected an array of numbers");
  std::vector<double> out;
  out.reserve(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(get_number(j[i], at.sub("[" + std::to_string(i) + "]")));
  return out;
}

inline std::vector<double> get_vector(const nlohmann::json& j, std::size_t expected, const Where& at) {
  if (j.is_array() && j.size() != expected)
    throw at.error("expected " + std::to_string(expected) + " numbers, got " + std::to_string(j.size()));
  return get_vector(j, at);
}

inline Matrix get_matrix(const nlohmann::json& j, const Where& at) {
  if (!j.is_array()) throw at.error("expected an array of rows");
  if (j.empty()) return {};
  const std::size_t cols = j[0].is_array() ? j[0].size() : 0;
  Matrix m(j.size(), cols);
  for (std::size_t r = 0; r < j.size(); ++r) {
    const auto row = get_vector(j[r], cols, at.sub("[" + std::to_string(r) + "]"));
    std::copy(row.begin(), row.end(), m.row(r).begin());
  }
  return m;
}

inline Matrix get_matrix(const nlohmann::json& j, std::size_t rows, std::size_t cols, const Where& at) {
  if (j.is_array() && j.size() != rows)
    throw at.error("expected " + std::to_string(rows) + " rows, got " + std::to_string(j.size()));
  Matrix m = get_matrix(j, at);
  if (m.rows() != rows || (rows > 0 && m.cols() != cols))
    throw at.error("expected a " + std::to_string(rows) + "x" + std::to_string(cols) + " matrix");
  return m;
}

inline nlohmann::json matrix_to_json(const Matrix& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const auto row = m.row(r);
    rows.push_back(std::vector<double>(row.begin(), row.end()));
  }
  return rows;
}

nlohmann::json header_to_json(const DatasetHeader& header);
DatasetHeader header_from_json(const nlohmann::json& j, const Where& at);

}  // namespace shadowrank::detail
