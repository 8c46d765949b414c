#include "icedist/csv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace icedist {

namespace {

std::vector<std::string> split_record(const std::string& line, const std::string& where) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur.push_back(c);
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(std::move(cur));
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    if (quoted) throw CsvError(where + ": unterminated quoted field");
    fields.push_back(std::move(cur));
    return fields;
}

double parse_number(const std::string& text, const std::string& where) {
    const char* first = text.data();
    const char* last = text.data() + text.size();
    while (first < last && *first == ' ') ++first;
    while (last > first && last[-1] == ' ') --last;
    if (first < last && *first == '+') ++first;
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last) {
        throw CsvError(where + ": cannot parse '" + text + "' as a number");
    }
    return v;
}

}  // namespace

std::size_t CsvTable::column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == name) return i;
    }
    throw CsvError("csv: no column named '" + name + "'");
}

std::vector<double> CsvTable::column_values(const std::string& name) const {
    const std::size_t c = column(name);
    std::vector<double> out;
    out.reserve(rows.size());
    for (const auto& r : rows) out.push_back(r[c]);
    return out;
}

namespace {

// Calls `header` once and then `record` for every data row; both receive
// the split fields and a "source:line" location.
template <class Header, class Record>
void read_records(std::istream& in, const std::string& source_name, Header&& header, Record&& record) {
    std::string line;
    std::size_t line_no = 0;
    std::size_t width = 0;
    bool have_header = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const std::string where = source_name + ":" + std::to_string(line_no);
        auto fields = split_record(line, where);
        if (!have_header) {
            if (line_no == 1 && line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF) {
                fields.front().erase(0, 3);  // UTF-8 BOM
            }
            width = fields.size();
            header(std::move(fields));
            have_header = true;
            continue;
        }
        if (fields.size() != width) {
            throw CsvError(where + ": expected " + std::to_string(width) + " fields, found " +
                           std::to_string(fields.size()));
        }
        record(std::move(fields), where);
    }
    if (!have_header) throw CsvError(source_name + ": missing header row");
}

}  // namespace

CsvTable parse_csv(std::istream& in, const std::string& source_name) {
    CsvTable table;
    read_records(
        in, source_name, [&](std::vector<std::string> h) { table.header = std::move(h); },
        [&](std::vector<std::string> fields, const std::string& where) {
            std::vector<double> row;
            row.reserve(fields.size());
            for (std::size_t c = 0; c < fields.size(); ++c) {
                row.push_back(parse_number(fields[c], where + " (column '" + table.header[c] + "')"));
            }
            table.rows.push_back(std::move(row));
        });
    return table;
}

TextTable parse_text_csv(std::istream& in, const std::string& source_name) {
    TextTable table;
    read_records(
        in, source_name, [&](std::vector<std::string> h) { table.header = std::move(h); },
        [&](std::vector<std::string> fields, const std::string&) { table.rows.push_back(std::move(fields)); });
    return table;
}

TextTable read_text_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw CsvError("cannot open '" + path.string() + "' for reading");
    return parse_text_csv(in, path.string());
}

CsvTable read_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw CsvError("cannot open '" + path.string() + "' for reading");
    return parse_csv(in, path.string());
}

std::string format_double(double v) {
    if (std::isnan(v)) return "NaN";
    if (std::isinf(v)) return v > 0 ? "Inf" : "-Inf";
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

std::string csv_quote(const std::string& field) {
    if (field.find_first_of(",\"\n\r") == std::string::npos) return field;
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out.push_back('"');
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

void write_csv(const CsvTable& table, std::ostream& out) {
    for (std::size_t c = 0; c < table.header.size(); ++c) {
        if (c) out << ',';
        out << csv_quote(table.header[c]);
    }
    out << "\r\n";
    for (const auto& row : table.rows) {
        for (std::size_t c = 0; c < row.size(); ++c) {
            if (c) out << ',';
            out << format_double(row[c]);
        }
        out << "\r\n";
    }
}

void write_csv(const CsvTable& table, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw CsvError("cannot open '" + path.string() + "' for writing");
    write_csv(table, out);
}

void write_csv(const TextTable& table, std::ostream& out) {
    auto line = [&out](const std::vector<std::string>& fields) {
        for (std::size_t c = 0; c < fields.size(); ++c) {
            if (c) out << ',';
            out << csv_quote(fields[c]);
        }
        out << "\r\n";
    };
    line(table.header);
    for (const auto& row : table.rows) line(row);
}

void write_csv(const TextTable& table, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw CsvError("cannot open '" + path.string() + "' for writing");
    write_csv(table, out);
}

}  // namespace icedist
