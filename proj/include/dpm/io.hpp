#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "dpm/core_model.hpp"
#include "dpm/trajectory.hpp"

namespace dpm {

// Raised for malformed input files. row and column are 1-based positions in
// the file (row 1 is the header); zero means "not applicable".
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& source, std::size_t row, std::size_t column,
             const std::string& what);
  std::size_t row() const { return row_; }
  std::size_t column() const { return column_; }

 private:
  std::size_t row_;
  std::size_t column_;
};

// Raised when an artifact cannot be written.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Panel CSV: header row, first column ISO-8601 dates (YYYY-MM-DD), remaining
// columns decimal simple returns (0.01 means 1%). The column named
// `fund_column` becomes the fund series, the rest the palette in file order.
ReturnPanel parse_panel_csv(std::istream& in, const std::string& fund_column,
                            const std::string& source = "<stream>");
ReturnPanel load_panel_csv(const std::filesystem::path& path,
                           const std::string& fund_column);

// Generic dated table: first column dates, then numeric columns. Used for
// partial-period palette returns and ground-truth weight files.
struct DatedTable {
  std::vector<std::string> dates;
  std::vector<std::string> columns;
  Eigen::MatrixXd values;
};
DatedTable parse_dated_csv(std::istream& in, const std::string& source = "<stream>");
DatedTable load_dated_csv(const std::filesystem::path& path);

// "%.12g"; NaN and infinities are written as nan / inf / -inf.
std::string format_number(double value);
// Rounds to 12 significant digits so JSON output carries no more.
double round_significant(double value);

std::string panel_csv(const ReturnPanel& panel);
void write_panel_csv(const std::filesystem::path& path, const ReturnPanel& panel);

std::string dated_csv(const DatedTable& table);
void write_dated_csv(const std::filesystem::path& path, const DatedTable& table);

// Columns: date, asset_<name>_prior/_post/_lo/_hi for every asset,
// forecast_return, fitted_return, actual_return.
std::string trajectory_csv(const WeightTrajectory& trajectory);
void write_trajectory_csv(const std::filesystem::path& path,
                          const WeightTrajectory& trajectory);

// Writes text to `path`, creating parent directories.
void write_text(const std::filesystem::path& path, const std::string& text);

// 64-bit FNV-1a, rendered as 16 lowercase hex digits.
std::string fnv1a_hex(const std::string& bytes);
std::string file_digest(const std::filesystem::path& path);

}  // namespace dpm
