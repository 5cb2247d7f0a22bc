#pragma once

// JSON file plumbing shared by the model and workspace persistence code.
// Files are written with sorted keys and a trailing newline so identical
// documents are identical bytes.

#include <Eigen/Dense>
#include <filesystem>
#include <string>

#include "json.hpp"

#include "cityadapt/detail/csv.hpp"
#include "cityadapt/errors.hpp"

namespace cityadapt::detail {

inline void write_json_file(const std::filesystem::path& path, const nlohmann::json& doc) {
  write_text_file(path, doc.dump(2) + "\n");
}

inline nlohmann::json read_json_file(const std::filesystem::path& path) {
  const std::string text = read_text_file(path);
  nlohmann::json doc = nlohmann::json::parse(text, nullptr, false);
  if (doc.is_discarded()) {
    throw format_error(path.string() + ": not valid JSON");
  }
  return doc;
}

inline void require_model_header(const nlohmann::json& doc, const std::string& kind,
                                 const std::string& context) {
  if (!doc.is_object() || !doc.contains("format_version") || !doc.contains("model_kind")) {
    throw format_error(context + ": missing format_version or model_kind");
  }
  if (doc["format_version"] != 1) {
    throw format_error(context + ": unsupported format_version");
  }
  if (doc["model_kind"] != kind) {
    throw format_error(context + ": expected model_kind '" + kind + "', found '" +
                       doc["model_kind"].get<std::string>() + "'");
  }
}

inline nlohmann::json matrix_to_json(const Eigen::MatrixXd& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline Eigen::MatrixXd matrix_from_json(const nlohmann::json& rows, const std::string& context) {
  if (!rows.is_array() || rows.empty() || !rows[0].is_array()) {
    throw format_error(context + ": expected a non-empty array of rows");
  }
  const auto nr = static_cast<Eigen::Index>(rows.size());
  const auto nc = static_cast<Eigen::Index>(rows[0].size());
  Eigen::MatrixXd m(nr, nc);
  for (Eigen::Index r = 0; r < nr; ++r) {
    if (static_cast<Eigen::Index>(rows[r].size()) != nc) {
      throw format_error(context + ": ragged rows");
    }
    for (Eigen::Index c = 0; c < nc; ++c) m(r, c) = rows[r][c].get<double>();
  }
  return m;
}

inline nlohmann::json vector_to_json(const Eigen::VectorXd& v) {
  nlohmann::json arr = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
  return arr;
}

inline Eigen::VectorXd vector_from_json(const nlohmann::json& arr, const std::string& context) {
  if (!arr.is_array()) throw format_error(context + ": expected an array");
  Eigen::VectorXd v(static_cast<Eigen::Index>(arr.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = arr[static_cast<std::size_t>(i)].get<double>();
  return v;
}

}  // namespace cityadapt::detail
