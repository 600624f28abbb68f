#include "tsv.hpp"

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <fmt/core.h>

#include "drivesafe/error.hpp"

namespace drivesafe::detail {

std::vector<std::string> split(std::string_view line, char delim) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(delim, start);
        if (pos == std::string_view::npos) {
            out.emplace_back(line.substr(start));
            return out;
        }
        out.emplace_back(line.substr(start, pos - start));
        start = pos + 1;
    }
}

std::vector<Row> read_rows(std::istream &in, char delim, const std::vector<std::string> &header,
                           std::string_view source) {
    std::vector<Row> rows;
    std::string line;
    std::size_t lineno = 0;
    bool header_seen = header.empty();
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty() || line.front() == '#') {
            continue;
        }
        auto fields = split(line, delim);
        if (!header_seen) {
            if (fields != header) {
                throw ParseError(fmt::format("{}:{}: unexpected header '{}'", source, lineno, line));
            }
            header_seen = true;
            continue;
        }
        rows.push_back(Row{lineno, std::move(fields)});
    }
    if (!header_seen) {
        throw ParseError(fmt::format("{}: missing header", source));
    }
    return rows;
}

int to_int(const std::string &text, std::string_view source, std::size_t line) {
    const auto value = to_int64(text, source, line);
    if (value < INT32_MIN || value > INT32_MAX) {
        throw ParseError(fmt::format("{}:{}: integer out of range '{}'", source, line, text));
    }
    return static_cast<int>(value);
}

std::int64_t to_int64(const std::string &text, std::string_view source, std::size_t line) {
    std::int64_t value = 0;
    const auto *end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, value);
    if (ec != std::errc{} || ptr != end) {
        throw ParseError(fmt::format("{}:{}: expected integer, got '{}'", source, line, text));
    }
    return value;
}

double to_double(const std::string &text, std::string_view source, std::size_t line) {
    // strtod rather than from_chars<double>: libstdc++ 11 lacks the latter.
    char *end = nullptr;
    const double value = std::strtod(text.c_str(), &end);
    if (text.empty() || end != text.c_str() + text.size()) {
        throw ParseError(fmt::format("{}:{}: expected number, got '{}'", source, line, text));
    }
    return value;
}

std::string read_file(const std::string &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ParseError(fmt::format("cannot open '{}'", path));
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace drivesafe::detail
