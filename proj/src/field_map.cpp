#include "spinmech/field_map.hpp"

#include "spinmech/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

namespace spinmech {

void GridGeometry::validate() const
{
    require(nx >= 2 && ny >= 2, ErrorCode::InvalidArgument, "grid must be at least 2x2");
    require(pitch_x > 0.0 && pitch_y > 0.0, ErrorCode::InvalidArgument, "grid pitch must be positive");
}

AxialMapResult map_to_axial_field(const SpinParams& params, const EsrMap& esr, unsigned threads)
{
    params.validate();
    AxialMapResult result;
    result.map = FieldMap(esr.geometry, 0.0);
    result.map.valid = esr.valid;

    std::vector<std::uint8_t> failed(esr.size(), 0);
    parallel_for(esr.size(), threads, [&](std::size_t i) {
        if (!esr.valid[i]) {
            return;
        }
        try {
            result.map.values[i] = invert_field(params, esr.values[i]).bz;
        } catch (const Error& e) {
            if (e.code() != ErrorCode::NoConvergence && e.code() != ErrorCode::OutOfRange) {
                throw;
            }
            failed[i] = 1;
        }
    });
    for (std::size_t i = 0; i < esr.size(); ++i) {
        if (failed[i]) {
            result.map.valid[i] = 0;
            ++result.report.failures;
        } else if (esr.valid[i]) {
            ++result.report.inverted;
        }
    }
    return result;
}

FieldMap interpolate_missing(const FieldMap& map)
{
    require(map.valid_count() > 0, ErrorCode::AllInvalid, "no valid pixels to interpolate from");
    FieldMap out = map;
    const auto& g = map.geometry;

    for (;;) {
        std::vector<std::size_t> filled;
        std::vector<double> fill_values;
        for (std::size_t iy = 0; iy < g.ny; ++iy) {
            for (std::size_t ix = 0; ix < g.nx; ++ix) {
                const std::size_t i = g.index(ix, iy);
                if (out.valid[i]) {
                    continue;
                }
                double sum = 0.0;
                int count = 0;
                for (int dy = -1; dy <= 1; ++dy) {
                    for (int dx = -1; dx <= 1; ++dx) {
                        if (dx == 0 && dy == 0) {
                            continue;
                        }
                        const long jx = static_cast<long>(ix) + dx;
                        const long jy = static_cast<long>(iy) + dy;
                        if (jx < 0 || jy < 0 || jx >= static_cast<long>(g.nx) || jy >= static_cast<long>(g.ny)) {
                            continue;
                        }
                        const std::size_t j = g.index(static_cast<std::size_t>(jx), static_cast<std::size_t>(jy));
                        if (out.valid[j]) {
                            sum += out.values[j];
                            ++count;
                        }
                    }
                }
                if (count > 0) {
                    filled.push_back(i);
                    fill_values.push_back(sum / count);
                }
            }
        }
        if (filled.empty()) {
            break;
        }
        // Apply after the pass so a pass only sees pixels valid at its start.
        for (std::size_t k = 0; k < filled.size(); ++k) {
            out.values[filled[k]] = fill_values[k];
            out.valid[filled[k]] = 1;
        }
    }
    return out;
}

namespace {

struct Placement {
    GridGeometry geometry;
    std::vector<std::size_t> index;  // row -> pixel
};

std::vector<double> unique_sorted(std::vector<double> v, double tol)
{
    std::sort(v.begin(), v.end());
    std::vector<double> out;
    for (double x : v) {
        if (out.empty() || std::abs(x - out.back()) > tol) {
            out.push_back(x);
        }
    }
    return out;
}

Placement place(const csv::Table& table)
{
    const auto xs = table.numbers("x_um");
    const auto ys = table.numbers("y_um");
    require(!xs.empty(), ErrorCode::Parse, "map has no rows");

    double span = 0.0;
    for (std::size_t r = 0; r < xs.size(); ++r) {
        span = std::max({span, std::abs(xs[r]), std::abs(ys[r])});
    }
    const double tol = 1e-9 * std::max(span, 1.0);
    const auto ux = unique_sorted(xs, tol);
    const auto uy = unique_sorted(ys, tol);

    Placement p;
    p.geometry.nx = ux.size();
    p.geometry.ny = uy.size();
    require(p.geometry.nx >= 2 && p.geometry.ny >= 2, ErrorCode::Parse, "map must be at least 2x2");
    require(p.geometry.size() == xs.size(), ErrorCode::Parse,
            "rows do not form a complete grid (" + std::to_string(xs.size()) + " rows for " +
                std::to_string(p.geometry.nx) + "x" + std::to_string(p.geometry.ny) + ")");
    p.geometry.x0 = ux.front() * 1e-6;
    p.geometry.y0 = uy.front() * 1e-6;
    const double px_um = (ux.back() - ux.front()) / static_cast<double>(ux.size() - 1);
    const double py_um = (uy.back() - uy.front()) / static_cast<double>(uy.size() - 1);
    p.geometry.pitch_x = px_um * 1e-6;
    p.geometry.pitch_y = py_um * 1e-6;

    std::vector<std::uint8_t> seen(p.geometry.size(), 0);
    p.index.resize(xs.size());
    for (std::size_t r = 0; r < xs.size(); ++r) {
        const double fx = (xs[r] - ux.front()) / px_um;
        const double fy = (ys[r] - uy.front()) / py_um;
        const auto ix = static_cast<std::size_t>(std::llround(fx));
        const auto iy = static_cast<std::size_t>(std::llround(fy));
        require(std::abs(fx - static_cast<double>(ix)) < 1e-6 && std::abs(fy - static_cast<double>(iy)) < 1e-6,
                ErrorCode::Parse, "line " + std::to_string(table.line_numbers[r]) + ": pixel off the uniform grid");
        const std::size_t i = p.geometry.index(ix, iy);
        require(!seen[i], ErrorCode::Parse, "line " + std::to_string(table.line_numbers[r]) + ": duplicate pixel");
        seen[i] = 1;
        p.index[r] = i;
    }
    return p;
}

std::vector<std::uint8_t> read_valid(const csv::Table& table, const Placement& p)
{
    std::vector<std::uint8_t> valid(p.geometry.size(), 1);
    if (!table.has_column("valid")) {
        return valid;
    }
    const std::size_t col = table.column("valid");
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const double v = table.number(r, col);
        require(v == 0.0 || v == 1.0, ErrorCode::Parse,
                "line " + std::to_string(table.line_numbers[r]) + ": valid must be 0 or 1");
        valid[p.index[r]] = v == 1.0 ? 1 : 0;
    }
    return valid;
}

void check_mask(const std::vector<std::uint8_t>& valid)
{
    const bool any = std::any_of(valid.begin(), valid.end(), [](auto v) { return v != 0; });
    require(any, ErrorCode::Parse, "every pixel is marked invalid");
}

}  // namespace

EsrMap esr_map_from_csv(const csv::Table& table)
{
    const Placement p = place(table);
    EsrMap map(p.geometry, EsrPair{});
    map.valid = read_valid(table, p);
    check_mask(map.valid);
    const std::size_t cm = table.column("f_minus_hz");
    const std::size_t cp = table.column("f_plus_hz");
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        map.values[p.index[r]] = {table.number(r, cm), table.number(r, cp)};
    }
    return map;
}

FieldMap field_map_from_csv(const csv::Table& table, const std::string& value_column)
{
    const Placement p = place(table);
    FieldMap map(p.geometry, 0.0);
    map.valid = read_valid(table, p);
    check_mask(map.valid);

    std::string column = value_column;
    double factor = 1.0;
    if (column.empty()) {
        if (table.has_column("bz_tesla")) {
            column = "bz_tesla";
        } else if (table.has_column("bz_gauss")) {
            column = "bz_gauss";
            factor = constants::gauss;
        } else {
            throw Error(ErrorCode::Parse, "map needs a bz_tesla or bz_gauss column");
        }
    }
    const std::size_t col = table.column(column);
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        map.values[p.index[r]] = factor * table.number(r, col);
    }
    return map;
}

void write_esr_map(std::ostream& out, const EsrMap& map)
{
    out << "x_um,y_um,f_minus_hz,f_plus_hz,valid\n";
    const auto& g = map.geometry;
    for (std::size_t i = 0; i < map.size(); ++i) {
        out << csv::format_exact(g.x(i % g.nx) * 1e6) << ',' << csv::format_exact(g.y(i / g.nx) * 1e6) << ','
            << csv::format_exact(map.values[i].f_minus) << ',' << csv::format_exact(map.values[i].f_plus) << ','
            << (map.valid[i] ? 1 : 0) << '\n';
    }
}

void write_field_map(std::ostream& out, const FieldMap& map, const std::string& value_column)
{
    out << "x_um,y_um," << value_column << ",valid\n";
    const auto& g = map.geometry;
    for (std::size_t i = 0; i < map.size(); ++i) {
        out << csv::format_exact(g.x(i % g.nx) * 1e6) << ',' << csv::format_exact(g.y(i / g.nx) * 1e6) << ','
            << csv::format_exact(map.valid[i] ? map.values[i] : 0.0) << ',' << (map.valid[i] ? 1 : 0) << '\n';
    }
}

}  // namespace spinmech
