#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace zevsim::io {

std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, std::string_view text);

/// Minimal header-addressed CSV table. Fields are split on commas; quoting
/// is not supported (none of the bundled formats need it).
class CsvTable {
 public:
  static CsvTable parse(std::string_view text, std::string_view origin = "<memory>");
  static CsvTable load(const std::filesystem::path& path);

  std::size_t rows() const noexcept { return rows_.size(); }
  const std::vector<std::string>& header() const noexcept { return header_; }

  /// Throws ParseError when the column is absent.
  std::size_t column(std::string_view name) const;
  bool has_column(std::string_view name) const;

  const std::string& at(std::size_t row, std::size_t col) const { return rows_.at(row).at(col); }
  double number(std::size_t row, std::size_t col) const;
  long long integer(std::size_t row, std::size_t col) const;

 private:
  std::string origin_;
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

/// Shortest representation that parses back to the identical double.
std::string format_double(double value);

std::vector<std::string> split(std::string_view text, char sep);
std::string_view trim(std::string_view text);

}  // namespace zevsim::io
