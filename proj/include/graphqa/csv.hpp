#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace graphqa {

struct CsvError : std::runtime_error {
    CsvError(const std::string& file, std::size_t line, const std::string& reason)
        : std::runtime_error(file + ":" + std::to_string(line) + ": " + reason),
          file(file),
          line(line),
          reason(reason) {}
    std::string file;
    std::size_t line;
    std::string reason;
};

struct CsvRow {
    std::size_t line = 0;  // 1-based physical line of the row start
    std::vector<std::string> fields;
};

struct CsvTable {
    std::vector<std::string> header;
    std::vector<CsvRow> rows;

    // Column index by header name; throws CsvError if absent.
    std::size_t column(const std::string& file, const std::string& name) const;
};

// RFC 4180 style parser: quoted fields, embedded commas/quotes/newlines,
// CRLF tolerant. `file` is used only for error messages. A UTF-8 BOM on the
// first line is stripped. The header row is required.
CsvTable parse_csv(const std::string& file, std::string_view content);

CsvTable read_csv_file(const std::string& path);

}  // namespace graphqa
