#include "zevsim/io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "zevsim/error.hpp"

namespace zevsim::io {

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::IoError, "cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_text(const std::filesystem::path& path, std::string_view text) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::IoError, "cannot write " + path.string());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw Error(Errc::IoError, "short write to " + path.string());
}

std::string_view trim(std::string_view text) {
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = text.find_last_not_of(" \t\r\n");
  return text.substr(first, last - first + 1);
}

std::vector<std::string> split(std::string_view text, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = text.find(sep, start);
    out.emplace_back(trim(text.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

CsvTable CsvTable::parse(std::string_view text, std::string_view origin) {
  CsvTable table;
  table.origin_ = origin;
  // UTF-8 byte order mark
  if (text.size() >= 3 && text.substr(0, 3) == "\xEF\xBB\xBF") text.remove_prefix(3);

  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    const auto line = trim(text.substr(start, end - start));
    start = end + 1;
    ++line_no;
    if (line.empty() || line.front() == '#') {
      if (end == text.size()) break;
      continue;
    }
    auto fields = split(line, ',');
    if (table.header_.empty()) {
      table.header_ = std::move(fields);
    } else {
      if (fields.size() != table.header_.size()) {
        throw Error(Errc::ParseError, table.origin_ + ":" + std::to_string(line_no) + ": expected " +
                                          std::to_string(table.header_.size()) + " fields, got " +
                                          std::to_string(fields.size()));
      }
      table.rows_.push_back(std::move(fields));
    }
    if (end == text.size()) break;
  }
  if (table.header_.empty()) throw Error(Errc::ParseError, table.origin_ + ": missing header row");
  return table;
}

CsvTable CsvTable::load(const std::filesystem::path& path) { return parse(read_text(path), path.string()); }

bool CsvTable::has_column(std::string_view name) const {
  for (const auto& h : header_)
    if (h == name) return true;
  return false;
}

std::size_t CsvTable::column(std::string_view name) const {
  for (std::size_t i = 0; i < header_.size(); ++i)
    if (header_[i] == name) return i;
  throw Error(Errc::ParseError, origin_ + ": missing column '" + std::string(name) + "'");
}

double CsvTable::number(std::size_t row, std::size_t col) const {
  const auto& s = at(row, col);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc{} || ptr != s.data() + s.size()) {
    throw Error(Errc::ParseError, origin_ + ": row " + std::to_string(row + 1) + ", column '" + header_[col] +
                                      "': not a number: '" + s + "'");
  }
  return value;
}

long long CsvTable::integer(std::size_t row, std::size_t col) const {
  const auto& s = at(row, col);
  long long value = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc{} || ptr != s.data() + s.size()) {
    throw Error(Errc::ParseError, origin_ + ": row " + std::to_string(row + 1) + ", column '" + header_[col] +
                                      "': not an integer: '" + s + "'");
  }
  return value;
}

std::string format_double(double value) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, ec == std::errc{} ? ptr : buf);
}

}  // namespace zevsim::io
