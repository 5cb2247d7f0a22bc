#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <limits>

#include "cityadapt/indicators.hpp"
#include "cityadapt/rng.hpp"
#include "helpers.hpp"
#include "oracles.hpp"

using namespace cityadapt;

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

// Raster whose NDVI = nd(NIR, RED) equals the requested value at each pixel,
// built by splitting a unit reflectance sum: NIR = (1+v)/2, RED = (1-v)/2.
template <typename F>
Raster raster_with_ndvi(int w, int h, F&& ndvi_of) {
  return testutil::make_raster(w, h, {"NIR", "RED"}, [&](int x, int y, std::size_t b) {
    const double v = ndvi_of(x, y);
    if (std::isnan(v)) return kNan;
    return b == 0 ? (1.0 + v) / 2.0 : (1.0 - v) / 2.0;
  });
}

}  // namespace

TEST_CASE("uniform NDVI pins the green index to 0 or 1") {
  const IndexConfig config;
  const Raster green = raster_with_ndvi(8, 8, [](int, int) { return 0.9; });
  REQUIRE(urban_green_index(green, config) == 1.0);

  const Raster bare = raster_with_ndvi(8, 8, [](int, int) { return -0.5; });
  REQUIRE(urban_green_index(bare, config) == 0.0);
}

TEST_CASE("checkerboard NDVI on an even grid gives exactly one half") {
  const IndexConfig config;
  const Raster board = raster_with_ndvi(8, 6, [](int x, int y) {
    return (x + y) % 2 == 0 ? 0.9 : -0.5;
  });
  REQUIRE(urban_green_index(board, config) == 0.5);
}

TEST_CASE("uniform NDBI pins the development index to 0 or 1") {
  IndexConfig config;
  config.ndbi_threshold = 0.1;
  const Raster built = testutil::make_raster(5, 5, {"SWIR", "NIR"}, [](int, int, std::size_t b) {
    return b == 0 ? 0.8 : 0.2;  // NDBI 0.6
  });
  REQUIRE(land_development_index(built, config) == 1.0);

  const Raster leafy = testutil::make_raster(5, 5, {"SWIR", "NIR"}, [](int, int, std::size_t b) {
    return b == 0 ? 0.3 : 0.7;  // NDBI -0.4
  });
  REQUIRE(land_development_index(leafy, config) == 0.0);
}

TEST_CASE("indices equal a brute-force pixel count on random rasters") {
  SeededRng rng(41);
  for (int trial = 0; trial < 20; ++trial) {
    const Raster raster =
        testutil::make_raster(9, 7, {"NIR", "RED", "SWIR"}, [&](int, int, std::size_t) {
          return rng.uniform() < 0.1 ? kNan : rng.uniform(0.0, 1.0);
        });
    IndexConfig config;
    config.ndvi_threshold = rng.uniform(-0.8, 0.8);
    config.ndbi_threshold = rng.uniform(-0.8, 0.8);
    CAPTURE(trial);
    REQUIRE(urban_green_index(raster, config) ==
            oracle::pixel_count_fraction(raster, "NIR", "RED", config.ndvi_threshold));
    REQUIRE(land_development_index(raster, config) ==
            oracle::pixel_count_fraction(raster, "SWIR", "NIR", config.ndbi_threshold));
  }
}

TEST_CASE("indices are invariant under uniform reflectance scaling") {
  SeededRng rng(43);
  const Raster base =
      testutil::make_raster(10, 10, {"NIR", "RED", "SWIR"}, [&](int, int, std::size_t) {
        return rng.uniform() < 0.05 ? kNan : rng.uniform(0.01, 2.0);
      });
  const IndexConfig config;
  const double ugi = urban_green_index(base, config);
  const double ldi = land_development_index(base, config);
  for (double c : {0.5, 2.0}) {
    Raster scaled = base;
    for (Band& band : scaled.bands) {
      for (double& v : band.grid.values) v *= c;
    }
    REQUIRE(urban_green_index(scaled, config) == ugi);
    REQUIRE(land_development_index(scaled, config) == ldi);
  }
}

TEST_CASE("lowering the NDVI threshold never shrinks the green index") {
  SeededRng rng(47);
  for (int trial = 0; trial < 10; ++trial) {
    const Raster raster = raster_with_ndvi(12, 12, [&](int, int) {
      return rng.uniform() < 0.1 ? kNan : rng.uniform(-1.0, 1.0);
    });
    IndexConfig config;
    double previous = -1.0;
    for (double t : {0.8, 0.5, 0.2, 0.0, -0.3, -0.7}) {
      config.ndvi_threshold = t;
      const double f = urban_green_index(raster, config);
      REQUIRE(f >= previous);
      previous = f;
    }
  }
}

TEST_CASE("a row partition recombines to the whole-raster index") {
  SeededRng rng(53);
  const int h = 12;
  const Raster whole = raster_with_ndvi(7, h, [&](int, int) {
    return rng.uniform() < 0.15 ? kNan : rng.uniform(-1.0, 1.0);
  });
  const IndexConfig config;
  const double whole_index = urban_green_index(whole, config);

  double weighted = 0.0;
  double total_valid = 0.0;
  for (int y0 : {0, 5, 9}) {
    const int y1 = y0 == 0 ? 5 : (y0 == 5 ? 9 : h);
    Raster part;
    part.width = whole.width;
    part.height = y1 - y0;
    for (const Band& band : whole.bands) {
      Band cut;
      cut.name = band.name;
      cut.grid = Grid(whole.width, y1 - y0);
      for (int y = y0; y < y1; ++y) {
        for (int x = 0; x < whole.width; ++x) cut.grid.at(x, y - y0) = band.grid.at(x, y);
      }
      part.bands.push_back(std::move(cut));
    }
    const Grid nd = normalized_difference(part, "NIR", "RED");
    double valid = 0.0;
    for (double v : nd.values) {
      if (!std::isnan(v)) valid += 1.0;
    }
    weighted += urban_green_index(part, config) * valid;
    total_valid += valid;
  }
  REQUIRE(weighted / total_valid == Catch::Approx(whole_index).margin(1e-12));
}

TEST_CASE("an all-nodata raster is an empty domain") {
  const Raster blank = raster_with_ndvi(3, 3, [](int, int) { return kNan; });
  REQUIRE_THROWS_MATCHES(urban_green_index(blank, IndexConfig{}), validation_error,
                         Catch::Matchers::MessageMatches(
                             Catch::Matchers::ContainsSubstring("empty domain")));
}

TEST_CASE("thresholds outside the open unit interval are rejected") {
  const Raster raster = raster_with_ndvi(2, 2, [](int, int) { return 0.5; });
  IndexConfig config;
  config.ndvi_threshold = 1.0;
  REQUIRE_THROWS_AS(urban_green_index(raster, config), validation_error);
  config.ndvi_threshold = kNan;
  REQUIRE_THROWS_AS(urban_green_index(raster, config), validation_error);
}

TEST_CASE("appending extends a copy and leaves the source series alone") {
  IndicatorSeries series;
  series.region_id = "metro";
  const IndicatorSeries one = append_observation(series, 50, {{"green", 0.4}, {"dev", 0.7}});
  REQUIRE(series.entries.empty());
  REQUIRE(series.names.empty());
  REQUIRE(one.entries.size() == 1);
  REQUIRE(one.names == std::vector<std::string>{"green", "dev"});

  const IndicatorSeries two = append_observation(one, 100, {{"dev", 0.8}, {"green", 0.5}});
  REQUIRE(one.entries.size() == 1);
  REQUIRE(two.entries.size() == 2);
  REQUIRE(two.value(1, "green") == 0.5);
  REQUIRE(two.value(1, "dev") == 0.8);
}

TEST_CASE("timestamps must strictly increase") {
  IndicatorSeries series;
  series = append_observation(series, 50, {{"green", 0.4}});
  REQUIRE_THROWS_AS(append_observation(series, 50, {{"green", 0.5}}), validation_error);
  REQUIRE_THROWS_AS(append_observation(series, 49, {{"green", 0.5}}), validation_error);
  REQUIRE_NOTHROW(append_observation(series, 51, {{"green", 0.5}}));
}

TEST_CASE("the first append fixes the schema") {
  IndicatorSeries series;
  series = append_observation(series, 1, {{"green", 0.4}, {"dev", 0.7}});
  // Missing name.
  REQUIRE_THROWS_AS(append_observation(series, 2, {{"green", 0.5}}), validation_error);
  // Unknown name.
  REQUIRE_THROWS_AS(
      append_observation(series, 2, {{"green", 0.5}, {"dev", 0.7}, {"other", 0.1}}),
      validation_error);
  // Duplicate name inside one observation.
  REQUIRE_THROWS_AS(append_observation(series, 2, {{"green", 0.5}, {"green", 0.6}}),
                    validation_error);
  // Non-finite value.
  REQUIRE_THROWS_AS(append_observation(series, 2, {{"green", kNan}, {"dev", 0.7}}),
                    validation_error);
}

TEST_CASE("series survive a CSV round trip exactly") {
  testutil::TempDir tmp;
  SeededRng rng(59);
  IndicatorSeries series;
  series.region_id = "coastal";
  std::int64_t t = 0;
  for (int i = 0; i < 24; ++i) {
    t += 1 + static_cast<std::int64_t>(rng.uniform(0.0, 30.0));
    series = append_observation(series, t, {{"green", rng.uniform(0.0, 1.0)},
                                            {"dev", rng.uniform(0.0, 1.0)}});
  }
  const auto path = tmp.path / "series.csv";
  save_series(series, path);
  const IndicatorSeries loaded = load_series(path, "coastal");
  REQUIRE(loaded.region_id == "coastal");
  REQUIRE(loaded.names == series.names);
  REQUIRE(loaded.entries.size() == series.entries.size());
  for (std::size_t i = 0; i < series.entries.size(); ++i) {
    REQUIRE(loaded.entries[i].timestamp == series.entries[i].timestamp);
    REQUIRE(loaded.entries[i].values == series.entries[i].values);
  }
}

TEST_CASE("series files with a broken header or ordering are rejected") {
  testutil::TempDir tmp;
  const auto path = tmp.path / "bad.csv";
  cityadapt::detail::write_text_file(path, "time,green\n1,0.5\n");
  REQUIRE_THROWS_AS(load_series(path), validation_error);
  cityadapt::detail::write_text_file(path, "timestamp,green\n5,0.5\n5,0.6\n");
  REQUIRE_THROWS_AS(load_series(path), validation_error);
  cityadapt::detail::write_text_file(path, "timestamp,green\n5,abc\n");
  REQUIRE_THROWS_AS(load_series(path), validation_error);
}
