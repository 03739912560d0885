#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace areaprof::io {

/// Whole file as a string. Throws InputError when unreadable.
std::string read_file(const std::filesystem::path& path);

/// Writes atomically enough for our purposes: truncate and write.
void write_file(const std::filesystem::path& path, std::string_view content);

std::string_view trim(std::string_view s);

/// Splits on `sep` without quoting support; fields are trimmed.
std::vector<std::string_view> split(std::string_view line, char sep = ',');

/// A parsed CSV: header fields plus (line number, fields) rows. Blank lines
/// are skipped; a UTF-8 BOM and CRLF endings are tolerated.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::pair<std::size_t, std::vector<std::string>>> rows;
};

CsvTable parse_csv(std::string_view text);

/// Throws InputError unless the header equals `expected`.
void require_header(const CsvTable& table, const std::vector<std::string>& expected,
                    std::string_view what);

std::optional<double> parse_double(std::string_view s);
std::optional<std::int64_t> parse_int(std::string_view s);

/// Shortest round-trippable representation.
std::string format_double(double v);
/// Fixed notation used in CSV outputs.
std::string format_fixed(double v, int digits = 6);

/// `key=value` lines, sorted by key.
std::string format_key_values(const std::map<std::string, std::string>& kv);
std::map<std::string, std::string> parse_key_values(std::string_view text);

}  // namespace areaprof::io
