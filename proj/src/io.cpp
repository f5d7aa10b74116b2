#include "dpm/io.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace dpm {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    fields.push_back(trim(line.substr(start, comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return fields;
}

bool is_iso_date(const std::string& s) {
  if (s.size() != 10 || s[4] != '-' || s[7] != '-') return false;
  for (std::size_t i : {0u, 1u, 2u, 3u, 5u, 6u, 8u, 9u}) {
    if (s[i] < '0' || s[i] > '9') return false;
  }
  const int y = std::stoi(s.substr(0, 4));
  const unsigned m = static_cast<unsigned>(std::stoi(s.substr(5, 2)));
  const unsigned d = static_cast<unsigned>(std::stoi(s.substr(8, 2)));
  return std::chrono::year_month_day{std::chrono::year{y}, std::chrono::month{m},
                                     std::chrono::day{d}}
      .ok();
}

double parse_number(const std::string& field, const std::string& source, std::size_t row,
                    std::size_t column) {
  if (field.empty()) throw ParseError(source, row, column, "missing value");
  double value = 0.0;
  const char* end = field.data() + field.size();
  const auto [ptr, ec] = std::from_chars(field.data(), end, value);
  if (ec != std::errc() || ptr != end || !std::isfinite(value)) {
    throw ParseError(source, row, column, "'" + field + "' is not a finite number");
  }
  return value;
}

std::string shortest(double value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc()) throw IoError("could not format number");
  return std::string(buf, ptr);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

}  // namespace

ParseError::ParseError(const std::string& source, std::size_t row, std::size_t column,
                       const std::string& what)
    : std::runtime_error([&] {
        std::ostringstream os;
        os << source;
        if (row > 0) os << ": row " << row;
        if (column > 0) os << ", column " << column;
        os << ": " << what;
        return os.str();
      }()),
      row_(row),
      column_(column) {}

DatedTable parse_dated_csv(std::istream& in, const std::string& source) {
  DatedTable table;
  std::string line;
  if (!std::getline(in, line)) throw ParseError(source, 0, 0, "empty file");
  const std::vector<std::string> header = split_fields(line);
  if (header.size() < 2) {
    throw ParseError(source, 1, 0, "header needs a date column and at least one data column");
  }
  for (std::size_t c = 1; c < header.size(); ++c) {
    if (header[c].empty()) throw ParseError(source, 1, c + 1, "empty column name");
    for (std::size_t prev = 1; prev < c; ++prev) {
      if (header[prev] == header[c]) {
        throw ParseError(source, 1, c + 1, "duplicate column '" + header[c] + "'");
      }
    }
  }
  table.columns.assign(header.begin() + 1, header.end());

  std::vector<std::vector<double>> rows;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    const std::vector<std::string> fields = split_fields(line);
    if (fields.size() != header.size()) {
      std::ostringstream os;
      os << "expected " << header.size() << " fields, found " << fields.size();
      throw ParseError(source, row, std::min(fields.size(), header.size()) + 1, os.str());
    }
    if (!is_iso_date(fields[0])) {
      throw ParseError(source, row, 1, "'" + fields[0] + "' is not an ISO-8601 date");
    }
    if (!table.dates.empty() && fields[0] <= table.dates.back()) {
      throw ParseError(source, row, 1,
                       "date '" + fields[0] + "' is duplicated or out of order");
    }
    table.dates.push_back(fields[0]);
    std::vector<double> values(header.size() - 1);
    for (std::size_t c = 1; c < fields.size(); ++c) {
      values[c - 1] = parse_number(fields[c], source, row, c + 1);
    }
    rows.push_back(std::move(values));
  }
  table.values.resize(static_cast<Eigen::Index>(rows.size()),
                      static_cast<Eigen::Index>(table.columns.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < rows[r].size(); ++c) {
      table.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
    }
  }
  return table;
}

DatedTable load_dated_csv(const std::filesystem::path& path) {
  std::istringstream in(read_file(path));
  return parse_dated_csv(in, path.string());
}

ReturnPanel parse_panel_csv(std::istream& in, const std::string& fund_column,
                            const std::string& source) {
  const DatedTable table = parse_dated_csv(in, source);
  std::size_t fund_index = table.columns.size();
  for (std::size_t c = 0; c < table.columns.size(); ++c) {
    if (table.columns[c] == fund_column) fund_index = c;
  }
  if (fund_index == table.columns.size()) {
    throw ParseError(source, 1, 0, "no fund column named '" + fund_column + "'");
  }
  if (table.columns.size() < 2) {
    throw ParseError(source, 1, 0, "need at least one palette column besides the fund");
  }
  if (table.dates.empty()) throw ParseError(source, 0, 0, "no data rows");
  for (Eigen::Index r = 0; r < table.values.rows(); ++r) {
    for (Eigen::Index c = 0; c < table.values.cols(); ++c) {
      if (table.values(r, c) <= -1.0) {
        throw ParseError(source, static_cast<std::size_t>(r) + 2,
                         static_cast<std::size_t>(c) + 2, "return <= -100%");
      }
    }
  }

  ReturnPanel panel;
  panel.dates = table.dates;
  panel.fund_name = fund_column;
  const auto rows = table.values.rows();
  const auto palette_cols = table.values.cols() - 1;
  panel.palette.resize(rows, palette_cols);
  Eigen::Index out = 0;
  for (std::size_t c = 0; c < table.columns.size(); ++c) {
    const auto col = static_cast<Eigen::Index>(c);
    if (c == fund_index) {
      panel.fund = table.values.col(col);
    } else {
      panel.asset_names.push_back(table.columns[c]);
      panel.palette.col(out++) = table.values.col(col);
    }
  }
  panel.validate();
  return panel;
}

ReturnPanel load_panel_csv(const std::filesystem::path& path, const std::string& fund_column) {
  std::istringstream in(read_file(path));
  return parse_panel_csv(in, fund_column, path.string());
}

std::string format_number(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.12g", value);
  return buf;
}

double round_significant(double value) {
  if (!std::isfinite(value)) return value;
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.12g", value);
  return std::strtod(buf, nullptr);
}

std::string panel_csv(const ReturnPanel& panel) {
  panel.validate();
  std::ostringstream os;
  os << "date";
  for (const auto& name : panel.asset_names) os << ',' << name;
  os << ',' << panel.fund_name << '\n';
  for (Eigen::Index t = 0; t < panel.periods(); ++t) {
    os << panel.dates[static_cast<std::size_t>(t)];
    for (Eigen::Index i = 0; i < panel.assets(); ++i) os << ',' << shortest(panel.palette(t, i));
    os << ',' << shortest(panel.fund[t]) << '\n';
  }
  return os.str();
}

void write_panel_csv(const std::filesystem::path& path, const ReturnPanel& panel) {
  write_text(path, panel_csv(panel));
}

std::string dated_csv(const DatedTable& table) {
  if (static_cast<Eigen::Index>(table.dates.size()) != table.values.rows() ||
      static_cast<Eigen::Index>(table.columns.size()) != table.values.cols()) {
    throw std::invalid_argument("dated_csv: table shape mismatch");
  }
  std::ostringstream os;
  os << "date";
  for (const auto& name : table.columns) os << ',' << name;
  os << '\n';
  for (Eigen::Index r = 0; r < table.values.rows(); ++r) {
    os << table.dates[static_cast<std::size_t>(r)];
    for (Eigen::Index c = 0; c < table.values.cols(); ++c) {
      os << ',' << format_number(table.values(r, c));
    }
    os << '\n';
  }
  return os.str();
}

void write_dated_csv(const std::filesystem::path& path, const DatedTable& table) {
  write_text(path, dated_csv(table));
}

std::string trajectory_csv(const WeightTrajectory& trajectory) {
  const Eigen::Index n = static_cast<Eigen::Index>(trajectory.asset_names.size());
  if (trajectory.periods() > 0 && trajectory.assets() != n) {
    throw std::invalid_argument("trajectory_csv: asset names do not match weight columns");
  }
  std::ostringstream os;
  os << "date";
  for (const auto& name : trajectory.asset_names) {
    for (const char* suffix : {"_prior", "_post", "_lo", "_hi"}) {
      os << ",asset_" << name << suffix;
    }
  }
  os << ",forecast_return,fitted_return,actual_return\n";
  for (Eigen::Index t = 0; t < trajectory.periods(); ++t) {
    os << trajectory.dates[static_cast<std::size_t>(t)];
    for (Eigen::Index i = 0; i < n; ++i) {
      os << ',' << format_number(trajectory.prior_mean(t, i)) << ','
         << format_number(trajectory.posterior_mean(t, i)) << ','
         << format_number(trajectory.lower(t, i)) << ','
         << format_number(trajectory.upper(t, i));
    }
    os << ',' << format_number(trajectory.forecast_return[t]) << ','
       << format_number(trajectory.fitted_return[t]) << ','
       << format_number(trajectory.actual_return[t]) << '\n';
  }
  return os.str();
}

void write_trajectory_csv(const std::filesystem::path& path,
                          const WeightTrajectory& trajectory) {
  write_text(path, trajectory_csv(trajectory));
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << text;
  out.flush();
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

std::string file_digest(const std::filesystem::path& path) {
  return fnv1a_hex(read_file(path));
}

}  // namespace dpm
