#pragma once

/**
 * @file   field_map.hpp
 * @brief  Regular 2D scan grids with a validity mask, plus their CSV forms.
 *
 * Pixel (ix, iy) sits at (x0 + ix·pitch_x, y0 + iy·pitch_y) in the scan plane;
 * storage and CSV rows are row-major (iy outer, ix inner). CSV coordinates are
 * in micrometres, everything in memory is metres.
 */

#include "spinmech/common.hpp"
#include "spinmech/csv.hpp"
#include "spinmech/spinmodel.hpp"

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <vector>

namespace spinmech {

struct GridGeometry {
    std::size_t nx = 0;
    std::size_t ny = 0;
    double x0 = 0.0;
    double y0 = 0.0;
    double pitch_x = 0.0;
    double pitch_y = 0.0;

    std::size_t size() const { return nx * ny; }
    std::size_t index(std::size_t ix, std::size_t iy) const { return iy * nx + ix; }
    double x(std::size_t ix) const { return x0 + pitch_x * static_cast<double>(ix); }
    double y(std::size_t iy) const { return y0 + pitch_y * static_cast<double>(iy); }
    /// Pixel position at height z.
    Vec3 point(std::size_t i, double z) const { return {x(i % nx), y(i / nx), z}; }

    void validate() const;
};

template <typename T>
struct Grid {
    GridGeometry geometry;
    std::vector<T> values;
    std::vector<std::uint8_t> valid;

    Grid() = default;
    Grid(const GridGeometry& g, const T& fill) : geometry(g), values(g.size(), fill), valid(g.size(), 1) {}

    std::size_t size() const { return values.size(); }
    std::size_t valid_count() const
    {
        std::size_t n = 0;
        for (auto v : valid) {
            n += v ? 1 : 0;
        }
        return n;
    }
};

using FieldMap = Grid<double>;
using EsrMap = Grid<EsrPair>;

struct InversionReport {
    std::size_t inverted = 0;
    std::size_t failures = 0;  ///< pixels marked invalid because the inversion did not converge
};

struct AxialMapResult {
    FieldMap map;
    InversionReport report;
};

/// Per-pixel invert_field; failures become invalid pixels.
AxialMapResult map_to_axial_field(const SpinParams& params, const EsrMap& esr, unsigned threads = 1);

/// Fills invalid pixels with the mean of their valid 8-neighbours, pass by
/// pass, until none remain. Throws AllInvalid if no pixel is valid.
FieldMap interpolate_missing(const FieldMap& map);

// CSV: `x_um,y_um,f_minus_hz,f_plus_hz,valid` and `x_um,y_um,<value>,valid`.
EsrMap esr_map_from_csv(const csv::Table& table);
/// Reads `bz_tesla` (or `bz_gauss`, converted to tesla) or a named column.
FieldMap field_map_from_csv(const csv::Table& table, const std::string& value_column = "");
void write_esr_map(std::ostream& out, const EsrMap& map);
void write_field_map(std::ostream& out, const FieldMap& map, const std::string& value_column = "bz_tesla");

}  // namespace spinmech
