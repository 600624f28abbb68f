#pragma once

// Minimal delimited-text reader shared by the table loaders.

#include <cstdint>
#include <istream>
#include <string>
#include <string_view>
#include <vector>

namespace drivesafe::detail {

struct Row {
    std::size_t line = 0;
    std::vector<std::string> fields;
};

/// Splits `in` into rows on `delim`. Blank lines and lines starting with '#'
/// are skipped. When `header` is non-empty the first data row must equal it.
std::vector<Row> read_rows(std::istream &in, char delim, const std::vector<std::string> &header,
                           std::string_view source);

std::vector<std::string> split(std::string_view line, char delim);

int to_int(const std::string &text, std::string_view source, std::size_t line);
std::int64_t to_int64(const std::string &text, std::string_view source, std::size_t line);
double to_double(const std::string &text, std::string_view source, std::size_t line);

std::string read_file(const std::string &path);

}  // namespace drivesafe::detail
