#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace icedist {

class CsvError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Numeric table with a required header row (RFC-4180 quoting for names).
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;

    std::size_t column(const std::string& name) const;
    std::vector<double> column_values(const std::string& name) const;
};

/// Table of already formatted fields, for outputs with text columns.
struct TextTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

CsvTable read_csv(const std::filesystem::path& path);
TextTable read_text_csv(const std::filesystem::path& path);
TextTable parse_text_csv(std::istream& in, const std::string& source_name);
CsvTable parse_csv(std::istream& in, const std::string& source_name);

void write_csv(const CsvTable& table, const std::filesystem::path& path);
void write_csv(const CsvTable& table, std::ostream& out);
void write_csv(const TextTable& table, const std::filesystem::path& path);
void write_csv(const TextTable& table, std::ostream& out);

/// Shortest round-trip decimal representation; identical input gives
/// byte-identical text.
std::string format_double(double v);

std::string csv_quote(const std::string& field);

}  // namespace icedist
