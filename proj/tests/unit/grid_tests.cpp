#include "doctest.h"

#include "mobent/error.hpp"
#include "mobent/grid.hpp"
#include "mobent/trace.hpp"

#include <cmath>
#include <sstream>

using namespace mobent;

namespace {

Grid grid_over(double lat_lo, double lon_lo, double lat_hi, double lon_hi,
               double cell = 0.0025, int padding = 1) {
    std::vector<std::vector<LocationRecord>> traces = {
        {{lat_lo, lon_lo, 1}, {lat_hi, lon_hi, 2}}};
    return build_grid(traces, cell, padding);
}

} // namespace

TEST_CASE("grid covers the bounding box with padding rings") {
    // span of exactly 4 x 2 cells
    Grid g = grid_over(46.0, 6.0, 46.0 + 4 * 0.0025, 6.0 + 2 * 0.0025);
    CHECK(g.n == 4 + 2);
    CHECK(g.m == 2 + 2);
    CHECK(g.origin_lat == doctest::Approx(46.0 - 0.0025).epsilon(1e-12));
    CHECK(g.origin_lon == doctest::Approx(6.0 - 0.0025).epsilon(1e-12));

    // an exact multiple of the cell size gains no extra row (1e-9 slack)
    Grid exact = grid_over(46.0, 6.0, 46.0 + 0.0025, 6.0 + 0.0025);
    CHECK(exact.n == 1 + 2);
    CHECK(exact.m == 1 + 2);

    // a degenerate single-point cloud still yields one interior cell
    std::vector<std::vector<LocationRecord>> point = {{{46.0, 6.0, 1}}};
    Grid p = build_grid(point, 0.0025, 1);
    CHECK(p.n == 3);
    CHECK(p.m == 3);
}

TEST_CASE("cells are half-open with closed north and east boundary edges") {
    Grid g = grid_over(46.0, 6.0, 46.005, 6.005);  // 2x2 interior + padding -> 4x4
    REQUIRE(g.n == 4);
    REQUIRE(g.m == 4);
    // row-major: cell = i*m + j, i south->north, j west->east
    CHECK(g.cell_of(g.origin_lat, g.origin_lon) == 0);
    CHECK(g.cell_of(46.0, 6.0) == 1 * 4 + 1);
    // interior edges belong to the cell above/right (half-open)
    CHECK(g.cell_of(46.0025, 6.0) == 2 * 4 + 1);
    // the outermost north/east edges are closed so the box is fully covered
    double north = g.origin_lat + g.n * g.d_lat;
    double east = g.origin_lon + g.m * g.d_lon;
    CHECK(g.cell_of(north, east) == g.total_cells() - 1);
    CHECK_THROWS_AS(g.cell_of(north + 1e-6, 6.0), OutOfGridError);
    CHECK_THROWS_AS(g.cell_of(46.0, east + 1e-6), OutOfGridError);
    CHECK_THROWS_AS(g.cell_of(g.origin_lat - 1e-6, 6.0), OutOfGridError);
}

TEST_CASE("grid CSV round-trips exactly") {
    Grid g = grid_over(46.000123456789, 6.000987654321, 46.0201, 6.0301);
    std::ostringstream out;
    write_grid(out, g);
    std::istringstream in(out.str());
    Grid back = parse_grid(in);
    CHECK(back.origin_lat == g.origin_lat);
    CHECK(back.origin_lon == g.origin_lon);
    CHECK(back.d_lat == g.d_lat);
    CHECK(back.d_lon == g.d_lon);
    CHECK(back.n == g.n);
    CHECK(back.m == g.m);
}

TEST_CASE("default cell size spans roughly 278 m of latitude") {
    // arc length of 0.0025 degrees on a 6,371,000 m sphere
    double expected = 6'371'000.0 * 0.0025 * std::acos(-1.0) / 180.0;
    CHECK(expected == doctest::Approx(277.9).epsilon(0.002));
}
