#include "mobent/grid.hpp"
#include "mobent/csv.hpp"
#include "mobent/error.hpp"
#include "mobent/trace.hpp"

#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <string>

namespace mobent {

namespace {

// Cells needed to cover a span, without letting float noise add a spurious
// row when the span is an exact multiple of the cell size.
int cover_count(double span, double d) {
    int k = static_cast<int>(std::ceil(span / d - 1e-9));
    return k < 1 ? 1 : k;
}

int axis_cell(double value, double origin, double d, int count, const char* axis) {
    // the 1e-9-cell nudge keeps coordinates that sit on a cell edge (up to
    // reconstruction noise) in the upper cell instead of letting the last
    // rounding decide
    double u = (value - origin) / d + 1e-9;
    if (u < 0.0)
        throw OutOfGridError(std::string("point below grid ") + axis + " origin");
    int i = static_cast<int>(std::floor(u));
    if (i >= count) {
        if (value <= origin + count * d)
            return count - 1;  // closed boundary edge
        throw OutOfGridError(std::string("point beyond grid ") + axis + " extent");
    }
    return i;
}

} // namespace

int Grid::cell_of(double lat, double lon) const {
    int i = axis_cell(lat, origin_lat, d_lat, n, "lat");
    int j = axis_cell(lon, origin_lon, d_lon, m, "lon");
    return i * m + j;
}

Grid build_grid(const std::vector<std::vector<LocationRecord>>& traces,
                double cell_size_deg, int padding) {
    if (cell_size_deg <= 0.0)
        throw ValidationError("build_grid: cell size must be positive");
    if (padding < 0)
        throw ValidationError("build_grid: padding must be non-negative");

    double min_lat = std::numeric_limits<double>::infinity();
    double max_lat = -std::numeric_limits<double>::infinity();
    double min_lon = std::numeric_limits<double>::infinity();
    double max_lon = -std::numeric_limits<double>::infinity();
    bool any = false;
    for (const auto& trace : traces)
        for (const auto& rec : trace) {
            any = true;
            min_lat = std::min(min_lat, rec.latitude);
            max_lat = std::max(max_lat, rec.latitude);
            min_lon = std::min(min_lon, rec.longitude);
            max_lon = std::max(max_lon, rec.longitude);
        }
    if (!any)
        throw ValidationError("build_grid: no records");

    Grid grid;
    grid.d_lat = cell_size_deg;
    grid.d_lon = cell_size_deg;
    grid.origin_lat = min_lat - padding * cell_size_deg;
    grid.origin_lon = min_lon - padding * cell_size_deg;
    grid.n = cover_count(max_lat - min_lat, cell_size_deg) + 2 * padding;
    grid.m = cover_count(max_lon - min_lon, cell_size_deg) + 2 * padding;
    return grid;
}

void write_grid(std::ostream& out, const Grid& grid) {
    out << "origin_lat,origin_lon,d_lat,d_lon,n,m\n"
        << csv::exact(grid.origin_lat) << ',' << csv::exact(grid.origin_lon) << ','
        << csv::exact(grid.d_lat) << ',' << csv::exact(grid.d_lon) << ','
        << grid.n << ',' << grid.m << '\n';
}

Grid parse_grid(std::istream& in) {
    std::string line;
    if (!std::getline(in, line))
        throw ParseError(1, "missing grid header");
    csv::strip_cr(line);
    if (line != "origin_lat,origin_lon,d_lat,d_lon,n,m")
        throw ParseError(1, "expected grid header, got '" + line + "'");
    if (!std::getline(in, line))
        throw ParseError(2, "missing grid row");
    csv::strip_cr(line);
    auto fields = csv::split(line);
    if (fields.size() != 6)
        throw ParseError(2, "expected 6 fields, got " + std::to_string(fields.size()));

    Grid grid;
    grid.origin_lat = csv::to_double(fields[0], 2, "origin_lat");
    grid.origin_lon = csv::to_double(fields[1], 2, "origin_lon");
    grid.d_lat = csv::to_double(fields[2], 2, "d_lat");
    grid.d_lon = csv::to_double(fields[3], 2, "d_lon");
    grid.n = static_cast<int>(csv::to_int64(fields[4], 2, "n"));
    grid.m = static_cast<int>(csv::to_int64(fields[5], 2, "m"));
    if (grid.d_lat <= 0.0 || grid.d_lon <= 0.0 || grid.n < 1 || grid.m < 1)
        throw ParseError(2, "grid dimensions must be positive");
    return grid;
}

} // namespace mobent
