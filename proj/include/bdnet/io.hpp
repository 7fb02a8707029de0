#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace bdnet {

/// Malformed input file; carries the 1-based line number.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& source, std::size_t line, const std::string& what)
      : std::runtime_error(source + ":" + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// File could not be opened, read or written.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A forward or adjoint pass produced a non-finite value.
class NumericalFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Row-major dense matrix of doubles (thickness maps, xz maps).
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;

  double& operator()(std::size_t r, std::size_t c) { return values[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
};

/// Splits a comma-separated line into numbers; throws ParseError on non-numeric cells.
std::vector<double> split_csv_numbers(std::string_view line, const std::string& source, std::size_t line_no);

/// Thickness-map exchange format: one whitespace-separated row per feature row, mm,
/// fixed six decimals. Lines starting with '#' are comments.
void save_thickness_map(const std::filesystem::path& path, const Matrix& map);
Matrix load_thickness_map(const std::filesystem::path& path);
Matrix parse_matrix(std::istream& in, const std::string& source);

/// Writes text atomically enough for our purposes: whole buffer, then close; IoError on failure.
void write_text_file(const std::filesystem::path& path, std::string_view text);
std::string read_text_file(const std::filesystem::path& path);

/// Shortest round-trip decimal representation of a double.
std::string format_double(double v);

}  // namespace bdnet
