#pragma once

#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ncx/common.hpp"

namespace ncx {

/// Grid of outcome-0 probabilities, rows = measurement events, columns =
/// preparations, with optional per-cell standard deviations.
///
/// The raw and primary matrices are 4x8 (M1..M4 by P1,0..P4,1), the secondary
/// matrix is 3x6; the shape itself is not fixed here, callers validate it.
class DataMatrix {
 public:
  DataMatrix() = default;

  DataMatrix(std::vector<std::string> row_ids, std::vector<std::string> col_ids,
             Grid values, std::optional<Grid> uncertainties = std::nullopt)
      : row_ids_(std::move(row_ids)),
        col_ids_(std::move(col_ids)),
        values_(std::move(values)),
        uncertainties_(std::move(uncertainties)) {
    validate();
  }

  static std::vector<std::string> measurement_ids(std::size_t n) {
    std::vector<std::string> ids;
    for (std::size_t t = 1; t <= n; ++t) ids.push_back("M" + std::to_string(t));
    return ids;
  }

  // Column order P1,0 P1,1 P2,0 P2,1 P3,0 P3,1 P4,0 P4,1.
  static std::vector<std::string> preparation_ids(std::size_t n_pairs) {
    std::vector<std::string> ids;
    for (std::size_t t = 1; t <= n_pairs; ++t) {
      ids.push_back("P" + std::to_string(t) + ",0");
      ids.push_back("P" + std::to_string(t) + ",1");
    }
    return ids;
  }

  std::size_t rows() const { return values_.size(); }
  std::size_t cols() const { return values_.empty() ? 0 : values_[0].size(); }

  double at(std::size_t r, std::size_t c) const { return values_[r][c]; }
  double& at(std::size_t r, std::size_t c) { return values_[r][c]; }

  bool has_uncertainties() const { return uncertainties_.has_value(); }

  double sigma(std::size_t r, std::size_t c) const {
    if (!uncertainties_) throw ValidationError("matrix carries no uncertainties");
    return (*uncertainties_)[r][c];
  }

  const Grid& values() const { return values_; }
  const std::optional<Grid>& uncertainties() const { return uncertainties_; }
  const std::vector<std::string>& row_ids() const { return row_ids_; }
  const std::vector<std::string>& col_ids() const { return col_ids_; }

  std::vector<double> row(std::size_t r) const { return values_[r]; }

  std::vector<double> column(std::size_t c) const {
    std::vector<double> out(rows());
    for (std::size_t r = 0; r < rows(); ++r) out[r] = values_[r][c];
    return out;
  }

  std::vector<double> column_sigma(std::size_t c) const {
    if (!uncertainties_) throw ValidationError("matrix carries no uncertainties");
    std::vector<double> out(rows());
    for (std::size_t r = 0; r < rows(); ++r) out[r] = (*uncertainties_)[r][c];
    return out;
  }

  /// Sub-matrix of the leading `n` columns (used to slice the six paired
  /// preparation columns out of an eight-column matrix).
  DataMatrix leading_columns(std::size_t n) const {
    if (n > cols()) throw ValidationError("leading_columns: not enough columns");
    Grid vals(rows()), unc(rows());
    for (std::size_t r = 0; r < rows(); ++r) {
      vals[r].assign(values_[r].begin(), values_[r].begin() + n);
      if (uncertainties_)
        unc[r].assign((*uncertainties_)[r].begin(), (*uncertainties_)[r].begin() + n);
    }
    std::vector<std::string> cids(col_ids_.begin(), col_ids_.begin() + n);
    if (uncertainties_) return DataMatrix(row_ids_, cids, vals, unc);
    return DataMatrix(row_ids_, cids, vals);
  }

  void require_shape(std::size_t r, std::size_t c, const char* what) const {
    if (rows() != r || cols() != c) {
      std::ostringstream os;
      os << what << ": expected " << r << "x" << c << " matrix, got " << rows()
         << "x" << cols();
      throw ValidationError(os.str());
    }
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["rows"] = row_ids_;
    j["cols"] = col_ids_;
    j["values"] = values_;
    if (uncertainties_)
      j["uncertainties"] = *uncertainties_;
    else
      j["uncertainties"] = nullptr;
    return j;
  }

  /// JSON text with every value written at 17 significant digits, so a
  /// round-trip through the file reproduces the doubles bit-exactly.
  std::string to_json_string() const {
    std::ostringstream os;
    os << "{\n  \"rows\": " << nlohmann::json(row_ids_).dump();
    os << ",\n  \"cols\": " << nlohmann::json(col_ids_).dump();
    os << ",\n  \"values\": ";
    write_grid(os, values_);
    os << ",\n  \"uncertainties\": ";
    if (uncertainties_)
      write_grid(os, *uncertainties_);
    else
      os << "null";
    os << "\n}\n";
    return os.str();
  }

  static DataMatrix from_json(const nlohmann::json& j) {
    std::optional<Grid> unc;
    if (j.contains("uncertainties") && !j.at("uncertainties").is_null())
      unc = j.at("uncertainties").get<Grid>();
    return DataMatrix(j.at("rows").get<std::vector<std::string>>(),
                      j.at("cols").get<std::vector<std::string>>(),
                      j.at("values").get<Grid>(), std::move(unc));
  }

  void save(const std::string& path) const {
    std::ofstream f(path);
    if (!f) throw ValidationError("cannot open for writing: " + path);
    f << to_json_string();
  }

  static DataMatrix load(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ValidationError("cannot open: " + path);
    nlohmann::json j;
    f >> j;
    return from_json(j);
  }

 private:
  void validate() {
    if (values_.empty() || values_[0].empty())
      throw ValidationError("DataMatrix: empty value grid");
    const std::size_t c = values_[0].size();
    for (auto& row : values_) {
      if (row.size() != c) throw ValidationError("DataMatrix: ragged value grid");
      for (auto& v : row) v = clamp_probability(v, tol::kProbability, "DataMatrix value");
    }
    if (row_ids_.size() != values_.size() || col_ids_.size() != c)
      throw ValidationError("DataMatrix: label count does not match grid shape");
    if (uncertainties_) {
      if (uncertainties_->size() != values_.size())
        throw ValidationError("DataMatrix: uncertainty grid shape mismatch");
      for (const auto& row : *uncertainties_) {
        if (row.size() != c)
          throw ValidationError("DataMatrix: uncertainty grid shape mismatch");
        for (double s : row)
          if (!(s >= 0.0)) throw ValidationError("DataMatrix: negative uncertainty");
      }
    }
  }

  static void write_grid(std::ostringstream& os, const Grid& g) {
    os << "[";
    for (std::size_t r = 0; r < g.size(); ++r) {
      os << (r ? ",\n             [" : "[");
      for (std::size_t c = 0; c < g[r].size(); ++c) {
        if (c) os << ", ";
        os << fmt17(g[r][c]);
      }
      os << "]";
    }
    os << "]";
  }

  std::vector<std::string> row_ids_;
  std::vector<std::string> col_ids_;
  Grid values_;
  std::optional<Grid> uncertainties_;
};

}  // namespace ncx
