#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "tisim/error.hpp"
#include "tisim/montecarlo.hpp"
#include "tisim/screen.hpp"

using namespace tisim;

TEST_CASE("default geometry") {
  const auto m = ScreenModel::default_geometry();
  CHECK(m.slit_separation == 10.0);
  CHECK(m.wavelength == 1.0);
  CHECK(m.screen_distance == 1000.0);
  CHECK(m.bins == 201);
  CHECK_NOTHROW(m.validate());
  CHECK(m.bin_center(100) == 0.0);
  CHECK(m.bin_center(0) == -m.bin_center(200));
  CHECK(m.bin_label(7) == "bin007");
  CHECK(m.bin_label(200) == "bin200");
}

TEST_CASE("geometry validation") {
  ScreenModel m;
  m.bins = 200;
  CHECK_THROWS_AS(m.validate(), SimError);
  m = ScreenModel{};
  m.wavelength = 0;
  CHECK_THROWS_AS(m.validate(), SimError);
  m = ScreenModel{};
  m.screen_distance = -1;
  CHECK_THROWS_AS(m.validate(), SimError);
}

TEST_CASE("central bin is the interference maximum") {
  const auto m = ScreenModel::default_geometry();
  CHECK(m.path_length(0, 0.0) == m.path_length(1, 0.0));
  const auto d = screen_distribution(m);
  const auto peak = std::max_element(d.interference.begin(), d.interference.end());
  CHECK(static_cast<std::size_t>(peak - d.interference.begin()) == m.bins / 2);
  CHECK(std::abs(std::accumulate(d.interference.begin(), d.interference.end(), 0.0) - 1.0) < kMathTolerance);
  CHECK(std::abs(std::accumulate(d.which_slit.begin(), d.which_slit.end(), 0.0) - 1.0) < kMathTolerance);
}

TEST_CASE("half-wavelength path difference gives a null") {
  // Choose the geometry so that a bin centre sits exactly on the first null.
  ScreenModel m;
  m.slit_separation = 10.0;
  m.screen_distance = 1000.0;
  m.bins = 3;
  // Find x with r_A - r_B = lambda / 2 by bisection.
  double lo = 0.0, hi = 100.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (m.path_length(0, mid) - m.path_length(1, mid) < 0.5 ? lo : hi) = mid;
  }
  m.span = 3.0 * lo;  // bin 2 centre = lo
  REQUIRE(std::abs(m.bin_center(2) - lo) < 1e-12);
  const auto amps = propagate_to_screen(m, 1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0));
  const auto d = screen_distribution(m);
  CHECK(d.interference[2] < 1e-9);
  CHECK(std::norm(amps[2]) < 1e-9);
}

TEST_CASE("propagated amplitudes are normalised") {
  const auto m = ScreenModel::default_geometry();
  const auto amps = propagate_to_screen(m, 0.6, Amplitude(0.0, 0.8));
  double total = 0.0;
  for (const auto& a : amps) total += std::norm(a);
  CHECK(std::abs(total - 1.0) < kMathTolerance);
}

TEST_CASE("visibility of the analytic distributions") {
  const auto d = screen_distribution(ScreenModel::default_geometry());
  CHECK(visibility(d.interference) >= 0.99);
  CHECK(visibility(d.which_slit) < 0.05);
  const std::vector<double> flat(50, 1.0);
  CHECK(visibility(flat) == 0.0);
}
