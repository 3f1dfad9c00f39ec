#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <string>
#include <vector>

namespace ffd {

/// Uniform periodic Cartesian grid on the box [-L, L)^N. Cell centers sit at
/// the half-offsets x_i = -L + (i + 1/2) h with h = 2L/n, so the origin is a
/// cell corner and no sample point coincides with a point singularity.
struct Grid {
  int N = 1;
  int n = 2;      // points per axis, even
  double L = 1.0; // half box length

  void validate() const;

  double h() const { return 2.0 * L / n; }
  double cell_measure() const;
  std::size_t size() const;
  double coord(int i) const { return -L + (i + 0.5) * h(); }

  /// Flat index with the last axis fastest (row-major).
  std::size_t flat_index(const std::array<int, 3>& idx) const;
  std::array<int, 3> unflatten(std::size_t flat) const;
  /// Cell-center coordinates; axes beyond N are set to zero.
  std::array<double, 3> cell_center(std::size_t flat) const;
  double radius(std::size_t flat) const;

  bool operator==(const Grid& other) const {
    return N == other.N && n == other.n && L == other.L;
  }
};

/// Scalar field sampled at cell centers, stored row-major (last axis fastest).
struct Field {
  Grid grid;
  std::vector<double> values;

  Field() = default;
  explicit Field(const Grid& g) : grid(g), values(g.size(), 0.0) {}

  double mass() const;       // sum * cell_measure
  double sum() const;
  double sup_norm() const;   // max |value|
  double max_value() const;
  double min_value() const;
  double lp_norm(double p) const;

  /// Throws std::runtime_error if any value is non-finite.
  void require_finite(const std::string& context) const;
};

/// Sample f at every cell center. The callback receives the padded
/// 3-component coordinate array (trailing entries zero for N < 3).
Field sample_field(const Grid& grid,
                   const std::function<double(const std::array<double, 3>&)>& f);

/// Flat binary format: header int32 N, int32 n, float64 L (little-endian),
/// then n^N float64 values in flat-index order.
void write_field_binary(const Field& field, const std::string& path);
Field read_field_binary(const std::string& path);

/// CSV with a header row: index, x1[, x2[, x3]], value (17 significant
/// digits, deterministic formatting).
void write_field_csv(const Field& field, const std::string& path);

/// Volume of the unit ball in R^N (via the Gamma function).
double unit_ball_volume(int N);

} // namespace ffd
