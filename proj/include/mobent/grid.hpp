#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

namespace mobent {

struct LocationRecord;

/// Regular lat/lon grid. Cells are half-open [edge, edge + d) in both axes
/// except the north and east boundary edges, which are closed so every point
/// inside the bounding box maps to a cell. Edge membership is decided with a
/// 1e-9-cell tolerance, so a coordinate that lands on an edge up to float
/// reconstruction noise goes to the upper cell deterministically.
struct Grid {
    double origin_lat = 0.0;  // south-west corner
    double origin_lon = 0.0;
    double d_lat = 0.0025;    // cell height, degrees
    double d_lon = 0.0025;    // cell width, degrees
    int n = 0;                // rows (latitude)
    int m = 0;                // columns (longitude)

    int total_cells() const { return n * m; }

    /// Row-major cell index for a point; throws OutOfGridError outside the
    /// covered box.
    int cell_of(double lat, double lon) const;
};

/// Fits a grid around the bounding box of all records, with `padding` rings
/// of empty cells on every side. A span that is an exact multiple of the
/// cell size (to within 1e-9 cells) does not gain an extra row/column.
Grid build_grid(const std::vector<std::vector<LocationRecord>>& traces,
                double cell_size_deg = 0.0025, int padding = 1);

/// One-row CSV serialization, coordinates round-trip exact.
void write_grid(std::ostream& out, const Grid& grid);
Grid parse_grid(std::istream& in);

} // namespace mobent
