#include "spinmech/csv.hpp"

#include "spinmech/common.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace spinmech::csv {

namespace {

std::string trim(std::string_view s)
{
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) {
        return {};
    }
    const auto last = s.find_last_not_of(" \t\r");
    return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split(const std::string& line)
{
    std::vector<std::string> fields;
    std::size_t start = 0;
    for (;;) {
        const auto comma = line.find(',', start);
        if (comma == std::string::npos) {
            fields.push_back(trim(std::string_view(line).substr(start)));
            break;
        }
        fields.push_back(trim(std::string_view(line).substr(start, comma - start)));
        start = comma + 1;
    }
    return fields;
}

}  // namespace

std::size_t Table::column(const std::string& name) const
{
    const auto it = std::find(header.begin(), header.end(), name);
    require(it != header.end(), ErrorCode::Parse, "missing column '" + name + "'");
    return static_cast<std::size_t>(it - header.begin());
}

bool Table::has_column(const std::string& name) const
{
    return std::find(header.begin(), header.end(), name) != header.end();
}

double Table::number(std::size_t row, std::size_t col) const
{
    const std::string& text = rows.at(row).at(col);
    double value = 0.0;
    const char* begin = text.data();
    const char* end = text.data() + text.size();
    if (!text.empty() && *begin == '+') {
        ++begin;
    }
    const auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc() || ptr != end || text.empty()) {
        throw Error(ErrorCode::Parse, "line " + std::to_string(line_numbers.at(row)) + ": '" + text +
                                          "' is not a number in column '" + header.at(col) + "'");
    }
    return value;
}

std::vector<double> Table::numbers(const std::string& name) const
{
    const std::size_t col = column(name);
    std::vector<double> out;
    out.reserve(rows.size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        out.push_back(number(r, col));
    }
    return out;
}

Table read(std::istream& in)
{
    Table table;
    std::string line;
    std::size_t line_no = 0;
    bool have_header = false;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string stripped = trim(line);
        if (stripped.empty() || stripped.front() == '#') {
            continue;
        }
        auto fields = split(stripped);
        if (!have_header) {
            table.header = std::move(fields);
            have_header = true;
            continue;
        }
        if (fields.size() != table.header.size()) {
            throw Error(ErrorCode::Parse, "line " + std::to_string(line_no) + ": expected " +
                                              std::to_string(table.header.size()) + " fields, got " +
                                              std::to_string(fields.size()));
        }
        table.rows.push_back(std::move(fields));
        table.line_numbers.push_back(line_no);
    }
    require(have_header, ErrorCode::Parse, "missing header row");
    return table;
}

Table read_file(const std::filesystem::path& path)
{
    std::ifstream in(path);
    require(static_cast<bool>(in), ErrorCode::Io, "cannot open '" + path.string() + "'");
    return read(in);
}

std::string format_exact(double value)
{
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
    if (ec != std::errc()) {
        return "nan";
    }
    return std::string(buf, ptr);
}

std::string format_digits(double value, int digits)
{
    if (value == 0.0) {
        return "0";
    }
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*g", digits, value);
    return buf;
}

void write(std::ostream& out, const std::vector<std::string>& header, const std::vector<std::vector<double>>& rows)
{
    for (std::size_t i = 0; i < header.size(); ++i) {
        out << (i ? "," : "") << header[i];
    }
    out << '\n';
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            out << (i ? "," : "") << format_exact(row[i]);
        }
        out << '\n';
    }
}

}  // namespace spinmech::csv
