#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>

#include "doctest.h"
#include "ffd/grid.hpp"

using namespace ffd;
namespace fs = std::filesystem;

namespace {
fs::path temp_path(const std::string& stem) {
  return fs::temp_directory_path() / ("ffd_test_" + stem);
}
}  // namespace

TEST_SUITE("grid") {

TEST_CASE("validation gates") {
  CHECK_NOTHROW(Grid{1, 2, 1.0}.validate());
  CHECK_NOTHROW(Grid{3, 16, 3.5}.validate());
  CHECK_THROWS_AS((Grid{0, 8, 1.0}.validate()), std::domain_error);
  CHECK_THROWS_AS((Grid{4, 8, 1.0}.validate()), std::domain_error);
  CHECK_THROWS_AS((Grid{1, 7, 1.0}.validate()), std::domain_error);
  CHECK_THROWS_AS((Grid{1, 0, 1.0}.validate()), std::domain_error);
  CHECK_THROWS_AS((Grid{1, 8, 0.0}.validate()), std::domain_error);
  CHECK_THROWS_AS((Grid{1, 8, -2.0}.validate()), std::domain_error);
}

TEST_CASE("geometry of cell centers") {
  Grid g{1, 8, 2.0};
  CHECK(g.h() == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(g.cell_measure() == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(g.size() == 8);
  CHECK(g.coord(0) == doctest::Approx(-1.75).epsilon(1e-15));
  CHECK(g.coord(7) == doctest::Approx(1.75).epsilon(1e-15));
  // No cell center hits the origin: centers sit at half offsets.
  for (int i = 0; i < g.n; ++i) CHECK(std::abs(g.coord(i)) > 0.1);

  Grid g3{3, 4, 1.0};
  CHECK(g3.size() == 64);
  CHECK(g3.cell_measure() == doctest::Approx(0.125).epsilon(1e-15));
  auto c = g3.cell_center(0);
  CHECK(c[0] == doctest::Approx(-0.75));
  CHECK(c[1] == doctest::Approx(-0.75));
  CHECK(c[2] == doctest::Approx(-0.75));
  CHECK(g3.radius(0) == doctest::Approx(0.75 * std::sqrt(3.0)).epsilon(1e-14));

  Grid g2{2, 4, 1.0};
  auto c2 = g2.cell_center(1);  // last axis fastest
  CHECK(c2[0] == doctest::Approx(-0.75));
  CHECK(c2[1] == doctest::Approx(-0.25));
  CHECK(c2[2] == doctest::Approx(0.0));
}

TEST_CASE("flat index round trip") {
  Grid g{3, 4, 1.0};
  for (std::size_t f = 0; f < g.size(); ++f) {
    auto idx = g.unflatten(f);
    CHECK(g.flat_index(idx) == f);
  }
  CHECK(g.flat_index({0, 0, 1}) == 1);  // last axis fastest
  CHECK(g.flat_index({1, 0, 0}) == 16);
}

TEST_CASE("field reductions") {
  Grid g{1, 4, 2.0};
  Field f(g);
  f.values = {1.0, -2.0, 3.0, 0.5};
  CHECK(f.sum() == doctest::Approx(2.5).epsilon(1e-15));
  CHECK(f.mass() == doctest::Approx(2.5).epsilon(1e-15));
  CHECK(f.sup_norm() == doctest::Approx(3.0));
  CHECK(f.max_value() == doctest::Approx(3.0));
  CHECK(f.min_value() == doctest::Approx(-2.0));
  CHECK(f.lp_norm(2.0) ==
        doctest::Approx(std::sqrt((1.0 + 4.0 + 9.0 + 0.25))).epsilon(1e-14));
  CHECK(f.lp_norm(1.0) == doctest::Approx(6.5).epsilon(1e-14));
  CHECK_THROWS_AS(f.lp_norm(0.0), std::domain_error);
  CHECK_THROWS_AS(f.lp_norm(-1.0), std::domain_error);
}

TEST_CASE("lp_norm includes the cell measure") {
  Grid g{2, 16, 3.0};
  Field f(g);
  for (auto& v : f.values) v = 2.0;
  // ||f||_p = 2 * (measure of the box)^{1/p}
  const double box = std::pow(2.0 * g.L, g.N);
  CHECK(f.lp_norm(3.0) ==
        doctest::Approx(2.0 * std::pow(box, 1.0 / 3.0)).epsilon(1e-14));
}

TEST_CASE("sampling a function") {
  Grid g{2, 8, 1.5};
  Field f = sample_field(
      g, [](const std::array<double, 3>& x) { return x[0] + 10.0 * x[1]; });
  for (std::size_t i = 0; i < g.size(); ++i) {
    auto c = g.cell_center(i);
    CHECK(f.values[i] == doctest::Approx(c[0] + 10.0 * c[1]).epsilon(1e-15));
  }
}

TEST_CASE("binary round trip is exact") {
  Grid g{2, 6, 1.25};
  Field f(g);
  for (std::size_t i = 0; i < g.size(); ++i)
    f.values[i] = std::sin(static_cast<double>(i)) * 1e-3 + 1.0 / 3.0;
  const fs::path p = temp_path("roundtrip.field");
  write_field_binary(f, p.string());
  Field back = read_field_binary(p.string());
  CHECK(back.grid == g);
  REQUIRE(back.values.size() == f.values.size());
  for (std::size_t i = 0; i < f.values.size(); ++i)
    CHECK(back.values[i] == f.values[i]);  // bitwise

  // Header layout: int32 N, int32 n, float64 L, little endian.
  std::ifstream in(p, std::ios::binary);
  std::int32_t N = 0, n = 0;
  double L = 0.0;
  in.read(reinterpret_cast<char*>(&N), 4);
  in.read(reinterpret_cast<char*>(&n), 4);
  in.read(reinterpret_cast<char*>(&L), 8);
  CHECK(N == 2);
  CHECK(n == 6);
  CHECK(L == doctest::Approx(1.25));
  fs::remove(p);
}

TEST_CASE("read rejects corrupt files") {
  const fs::path p = temp_path("corrupt.field");
  {
    std::ofstream out(p, std::ios::binary);
    out.write("junk", 4);
  }
  CHECK_THROWS_AS(read_field_binary(p.string()), std::runtime_error);
  CHECK_THROWS_AS(read_field_binary((p / "nope").string()),
                  std::runtime_error);
  fs::remove(p);
}

TEST_CASE("csv export") {
  Grid g{1, 4, 1.0};
  Field f(g);
  f.values = {0.25, 0.5, 0.75, 1.0};
  const fs::path p = temp_path("field.csv");
  write_field_csv(f, p.string());
  std::ifstream in(p);
  std::string header;
  std::getline(in, header);
  CHECK(header.rfind("index,", 0) == 0);
  int rows = 0;
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) ++rows;
  CHECK(rows == 4);
  fs::remove(p);
}

TEST_CASE("non-finite detection") {
  Grid g{1, 4, 1.0};
  Field f(g);
  f.values[2] = std::nan("");
  CHECK_THROWS_WITH_AS(f.require_finite("stage-x"),
                       doctest::Contains("stage-x"), std::runtime_error);
  f.values[2] = 0.0;
  CHECK_NOTHROW(f.require_finite("stage-x"));
}

TEST_CASE("unit ball volumes") {
  CHECK(unit_ball_volume(1) == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(unit_ball_volume(2) == doctest::Approx(M_PI).epsilon(1e-14));
  CHECK(unit_ball_volume(3) ==
        doctest::Approx(4.0 * M_PI / 3.0).epsilon(1e-14));
  CHECK(unit_ball_volume(4) ==
        doctest::Approx(M_PI * M_PI / 2.0).epsilon(1e-14));
  CHECK_THROWS_AS(unit_ball_volume(0), std::domain_error);
}

}  // TEST_SUITE
