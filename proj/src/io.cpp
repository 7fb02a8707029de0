#include "bdnet/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace bdnet {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

double parse_number(std::string_view cell, const std::string& source, std::size_t line_no) {
  cell = trim(cell);
  double v = 0.0;
  const auto* end = cell.data() + cell.size();
  const auto [ptr, ec] = std::from_chars(cell.data(), end, v);
  if (cell.empty() || ec != std::errc() || ptr != end)
    throw ParseError(source, line_no, "non-numeric cell '" + std::string(cell) + "'");
  if (!std::isfinite(v)) throw ParseError(source, line_no, "non-finite value");
  return v;
}

}  // namespace

std::vector<double> split_csv_numbers(std::string_view line, const std::string& source, std::size_t line_no) {
  std::vector<double> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(parse_number(line.substr(start, comma == std::string_view::npos ? line.npos : comma - start), source,
                               line_no));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

Matrix parse_matrix(std::istream& in, const std::string& source) {
  Matrix m;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    std::size_t count = 0;
    std::size_t pos = 0;
    while (pos < t.size()) {
      while (pos < t.size() && (t[pos] == ' ' || t[pos] == '\t')) ++pos;
      if (pos >= t.size()) break;
      std::size_t end = pos;
      while (end < t.size() && t[end] != ' ' && t[end] != '\t') ++end;
      m.values.push_back(parse_number(t.substr(pos, end - pos), source, line_no));
      ++count;
      pos = end;
    }
    if (m.rows == 0) {
      m.cols = count;
    } else if (count != m.cols) {
      throw ParseError(source, line_no,
                       "ragged row: expected " + std::to_string(m.cols) + " values, got " + std::to_string(count));
    }
    ++m.rows;
  }
  if (m.rows == 0) throw ParseError(source, line_no == 0 ? 1 : line_no, "empty matrix file");
  return m;
}

void save_thickness_map(const std::filesystem::path& path, const Matrix& map) {
  std::string out;
  out.reserve(map.rows * map.cols * 10);
  char buf[64];
  for (std::size_t r = 0; r < map.rows; ++r) {
    for (std::size_t c = 0; c < map.cols; ++c) {
      const int n = std::snprintf(buf, sizeof buf, c == 0 ? "%.6f" : " %.6f", map(r, c));
      out.append(buf, static_cast<std::size_t>(n));
    }
    out.push_back('\n');
  }
  write_text_file(path, out);
}

Matrix load_thickness_map(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open thickness map " + path.string());
  return parse_matrix(in, path.string());
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  out.close();
  if (!out) throw IoError("failed writing " + path.string());
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

}  // namespace bdnet
