#include "graphqa/csv.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace graphqa {

std::size_t CsvTable::column(const std::string& file, const std::string& name) const {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) {
        throw CsvError(file, 1, "missing required column '" + name + "'");
    }
    return static_cast<std::size_t>(it - header.begin());
}

CsvTable parse_csv(const std::string& file, std::string_view content) {
    if (content.substr(0, 3) == "\xEF\xBB\xBF") content.remove_prefix(3);

    CsvTable table;
    std::vector<std::string> fields;
    std::string field;
    bool quoted = false;
    std::size_t line = 1;
    std::size_t row_line = 1;

    auto end_field = [&] {
        fields.push_back(std::move(field));
        field.clear();
    };
    auto end_row = [&] {
        end_field();
        // Skip fully blank rows outside of quotes.
        const bool blank = fields.size() == 1 && fields[0].empty();
        if (!blank) {
            if (table.header.empty()) {
                table.header = std::move(fields);
            } else {
                if (fields.size() != table.header.size()) {
                    throw CsvError(file, row_line,
                                   "expected " + std::to_string(table.header.size()) +
                                       " fields, got " + std::to_string(fields.size()));
                }
                table.rows.push_back(CsvRow{row_line, std::move(fields)});
            }
        }
        fields.clear();
        row_line = line;
    };

    std::size_t i = 0;
    const std::size_t n = content.size();
    while (i < n) {
        const char c = content[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < n && content[i + 1] == '"') {
                    field.push_back('"');
                    i += 2;
                } else {
                    quoted = false;
                    ++i;
                }
            } else {
                if (c == '\n') ++line;
                field.push_back(c);
                ++i;
            }
        } else {
            switch (c) {
                case '"':
                    if (!field.empty()) {
                        throw CsvError(file, line, "unexpected quote inside unquoted field");
                    }
                    quoted = true;
                    ++i;
                    break;
                case ',':
                    end_field();
                    ++i;
                    break;
                case '\r':
                    ++i;
                    break;
                case '\n':
                    ++line;
                    ++i;
                    end_row();
                    break;
                default:
                    field.push_back(c);
                    ++i;
            }
        }
    }
    if (quoted) throw CsvError(file, row_line, "unterminated quoted field");
    if (!field.empty() || !fields.empty()) {
        ++line;
        end_row();
    }
    if (table.header.empty()) throw CsvError(file, 1, "missing header row");
    return table;
}

CsvTable read_csv_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw CsvError(path, 0, "cannot open file");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_csv(path, buf.str());
}

}  // namespace graphqa
