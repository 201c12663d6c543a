#include <sstream>

#include "doctest.h"
#include "gridtrack/error.hpp"
#include "gridtrack/grid.hpp"
#include "gridtrack/rng.hpp"
#include "support/fixtures.hpp"

using namespace gridtrack;

TEST_SUITE("geo_grid") {
  TEST_CASE("box snaps outward to whole cells") {
    const auto s = testing::synthetic_storm(
        "AL012005", 3, 10.2, -50.5, [](int) { return 1.25; }, [](int) { return 1.2; });
    const auto g = build_grid({s}, 1.0);
    CHECK(g.lat_min() == 10.0);
    CHECK(g.lat_max() == 13.0);
    CHECK(g.lon_min() == -51.0);
    CHECK(g.lon_max() == -48.0);
    CHECK(g.rows() == 3);
    CHECK(g.cols() == 3);
    CHECK(g.occupied_count() == 3);
  }

  TEST_CASE("cell boundaries are lower-inclusive and the top edge joins the last cell") {
    const GridSpec g(10.0, 13.0, -51.0, -48.0, 1.0, {});
    CHECK(encode_cell(g, {10.0, -51.0}).row == 0);
    CHECK(encode_cell(g, {11.0, -51.0}).row == 1);
    CHECK(encode_cell(g, {10.999999, -51.0}).row == 0);
    CHECK(encode_cell(g, {13.0, -48.0}).row == 2);
    CHECK(encode_cell(g, {13.0, -48.0}).col == 2);
    CHECK(encode_cell(g, {12.0, -50.0}).col == 1);
  }

  TEST_CASE("occupied ids are row-major") {
    const GridSpec g(0.0, 3.0, 0.0, 3.0, 1.0, {{2, 0}, {0, 2}, {1, 1}, {0, 0}, {1, 1}});
    CHECK(g.occupied_count() == 4);
    CHECK(g.id_of({0, 0}) == 0);
    CHECK(g.id_of({0, 2}) == 1);
    CHECK(g.id_of({1, 1}) == 2);
    CHECK(g.id_of({2, 0}) == 3);
    CHECK(g.id_of({2, 2}) == kUnoccupied);
    CHECK(encode_cell(g, {2.5, 2.5}).id == kUnoccupied);
  }

  TEST_CASE("decode returns the cell centre") {
    const GridSpec g(10.0, 20.0, -60.0, -40.0, 0.5, {});
    const auto c = decode_cell(g, CellIndex{3, 7});
    CHECK(c.lat == doctest::Approx(11.75));
    CHECK(c.lon == doctest::Approx(-56.25));
    CHECK_THROWS_AS((void)decode_cell(g, CellIndex{20, 0}), OutOfBoundsError);
    CHECK_THROWS_AS((void)decode_cell(g, CellIndex{0, -1}), OutOfBoundsError);
  }

  TEST_CASE("points outside the box are rejected") {
    const GridSpec g(10.0, 13.0, -51.0, -48.0, 1.0, {});
    CHECK_THROWS_AS((void)encode_cell(g, {9.99, -50.0}), OutOfBoundsError);
    CHECK_THROWS_AS((void)encode_cell(g, {11.0, -47.9}), OutOfBoundsError);
  }

  TEST_CASE("round-trip error never exceeds the half diagonal") {
    const GridSpec g(0.0, 60.0, -110.0, 0.0, 1.0, {});
    Rng rng(5);
    for (int k = 0; k < 5000; ++k) {
      const GeoPoint p{rng.uniform(0.0, 60.0), rng.uniform(-110.0, 0.0)};
      const double err = haversine_distance(p, decode_cell(g, encode_cell(g, p)));
      CHECK(err <= g.half_diagonal_km(p.lat) + 1e-9);
    }
    // Equatorial 1-degree cell: half diagonal is about 78.6 km.
    CHECK(g.half_diagonal_km(0.5) == doctest::Approx(78.6).epsilon(0.001));
  }

  TEST_CASE("clamp_cell") {
    const GridSpec g(0.0, 5.0, 0.0, 4.0, 1.0, {});
    CHECK(clamp_cell(g, {2, 2}) == std::pair<CellIndex, bool>{{2, 2}, false});
    CHECK(clamp_cell(g, {7, -3}) == std::pair<CellIndex, bool>{{4, 0}, true});
    CHECK(clamp_cell(g, {-1, 4}) == std::pair<CellIndex, bool>{{0, 3}, true});
  }

  TEST_CASE("continuous coordinates put centres on integers") {
    const GridSpec g(10.0, 20.0, -60.0, -40.0, 2.0, {});
    CHECK(g.row_coord(11.0) == doctest::Approx(0.0));
    CHECK(g.row_coord(13.0) == doctest::Approx(1.0));
    CHECK(g.col_coord(-59.0) == doctest::Approx(0.0));
    CHECK(g.col_coord(-40.0) == doctest::Approx(9.5));
  }

  TEST_CASE("occupancy from a subset, box from all") {
    const auto a = testing::straight_storm("AL012005", 3, 10.5, -50.5, 1, 0);
    const auto b = testing::straight_storm("AL022005", 3, 20.5, -30.5, 1, 0);
    const auto g = build_grid({a, b}, {a}, 1.0);
    CHECK(g.contains({22.5, -30.5}));
    CHECK(g.occupied_count() == 3);
    CHECK(encode_cell(g, {21.5, -30.5}).id == kUnoccupied);
  }

  TEST_CASE("grid persistence round trip") {
    const GridSpec g(-10.0, 35.5, -100.0, -20.0, 0.5, {{0, 0}, {3, 9}, {90, 159}});
    std::stringstream buf;
    save_grid(buf, g);
    const auto back = load_grid(buf);
    CHECK(back == g);
  }

  TEST_CASE("invalid grid specs") {
    CHECK_THROWS_AS(GridSpec(0.0, 0.0, 0.0, 1.0, 1.0, {}), ConfigError);
    CHECK_THROWS_AS(GridSpec(0.0, 1.5, 0.0, 1.0, 1.0, {}), ConfigError);
    CHECK_THROWS_AS(GridSpec(0.0, 1.0, 0.0, 1.0, 1.0, {{1, 0}}), ConfigError);
  }
}
