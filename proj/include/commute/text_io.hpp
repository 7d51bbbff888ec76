#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace commute::text {

/// One parsed CSV record plus its 1-based line number in the source file.
struct CsvRow
{
  std::size_t line = 0;
  std::vector<std::string> fields;
};

struct CsvTable
{
  std::vector<std::string> header;
  std::vector<CsvRow> rows;

  /// Column index by name; throws std::runtime_error naming the file when absent.
  std::size_t column(std::string_view name) const;
  std::string source;
};

/// Comma-separated, no quoting (all formats here are plain numeric/id columns).
/// Blank lines are skipped; a trailing CR is stripped.
CsvTable read_csv(const std::filesystem::path& path);

std::vector<std::string> split(std::string_view line, char sep);
std::string_view trim(std::string_view s);

std::optional<double> parse_double(std::string_view s);
std::optional<std::int64_t> parse_int(std::string_view s);
std::optional<std::uint64_t> parse_uint(std::string_view s);

/// Shortest decimal representation that round-trips to the same double.
std::string format_double(double v);

/// Fixed-precision formatting for human-facing tables.
std::string format_fixed(double v, int decimals);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view contents);

std::string sha256_hex(std::string_view bytes);
std::string sha256_file(const std::filesystem::path& path);

}  // namespace commute::text
