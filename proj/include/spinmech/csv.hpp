#pragma once

// Minimal CSV reader/writer: comma separated, '.' decimal, mandatory header,
// '#'-prefixed comment lines and blank lines ignored. No quoting.

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace spinmech::csv {

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    std::vector<std::size_t> line_numbers;  ///< source line of each row, for diagnostics

    /// Index of a header column; throws Parse if absent.
    std::size_t column(const std::string& name) const;
    bool has_column(const std::string& name) const;
    double number(std::size_t row, std::size_t col) const;
    std::vector<double> numbers(const std::string& name) const;
};

Table read(std::istream& in);
Table read_file(const std::filesystem::path& path);

/// Shortest decimal text that parses back to the same double.
std::string format_exact(double value);

/// printf "%.{digits}g".
std::string format_digits(double value, int digits);

/// Writes header + rows of numbers with exact formatting.
void write(std::ostream& out, const std::vector<std::string>& header, const std::vector<std::vector<double>>& rows);

}  // namespace spinmech::csv
