#include "ffd/grid.hpp"

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "ffd/gamma.hpp"

namespace ffd {

void Grid::validate() const {
  if (N < 1 || N > 3)
    throw std::domain_error("Grid: N must be 1, 2 or 3");
  if (n < 2 || n % 2 != 0)
    throw std::domain_error("Grid: n must be even and >= 2");
  if (!(L > 0.0))
    throw std::domain_error("Grid: L must be positive");
}

double Grid::cell_measure() const {
  double cm = 1.0;
  for (int d = 0; d < N; ++d) cm *= h();
  return cm;
}

std::size_t Grid::size() const {
  std::size_t s = 1;
  for (int d = 0; d < N; ++d) s *= static_cast<std::size_t>(n);
  return s;
}

std::size_t Grid::flat_index(const std::array<int, 3>& idx) const {
  std::size_t flat = 0;
  for (int d = 0; d < N; ++d)
    flat = flat * static_cast<std::size_t>(n) + static_cast<std::size_t>(idx[d]);
  return flat;
}

std::array<int, 3> Grid::unflatten(std::size_t flat) const {
  std::array<int, 3> idx{0, 0, 0};
  for (int d = N - 1; d >= 0; --d) {
    idx[d] = static_cast<int>(flat % static_cast<std::size_t>(n));
    flat /= static_cast<std::size_t>(n);
  }
  return idx;
}

std::array<double, 3> Grid::cell_center(std::size_t flat) const {
  const auto idx = unflatten(flat);
  std::array<double, 3> x{0.0, 0.0, 0.0};
  for (int d = 0; d < N; ++d) x[d] = coord(idx[d]);
  return x;
}

double Grid::radius(std::size_t flat) const {
  const auto x = cell_center(flat);
  return std::sqrt(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]);
}

double Field::sum() const {
  double s = 0.0;
  for (double v : values) s += v;
  return s;
}

double Field::mass() const { return sum() * grid.cell_measure(); }

double Field::sup_norm() const {
  double s = 0.0;
  for (double v : values) s = std::max(s, std::abs(v));
  return s;
}

double Field::max_value() const {
  double s = values.empty() ? 0.0 : values[0];
  for (double v : values) s = std::max(s, v);
  return s;
}

double Field::min_value() const {
  double s = values.empty() ? 0.0 : values[0];
  for (double v : values) s = std::min(s, v);
  return s;
}

double Field::lp_norm(double p) const {
  if (!(p > 0.0)) throw std::domain_error("Field::lp_norm: p must be positive");
  double s = 0.0;
  for (double v : values) s += std::pow(std::abs(v), p);
  return std::pow(s * grid.cell_measure(), 1.0 / p);
}

void Field::require_finite(const std::string& context) const {
  for (double v : values)
    if (!std::isfinite(v))
      throw std::runtime_error(context + ": field contains non-finite values");
}

Field sample_field(const Grid& grid,
                   const std::function<double(const std::array<double, 3>&)>& f) {
  grid.validate();
  Field out(grid);
  const std::size_t total = grid.size();
  for (std::size_t i = 0; i < total; ++i) out.values[i] = f(grid.cell_center(i));
  out.require_finite("sample_field");
  return out;
}

namespace {

void put_u32(std::string& buf, std::uint32_t v) {
  for (int b = 0; b < 4; ++b) buf.push_back(static_cast<char>((v >> (8 * b)) & 0xff));
}

void put_f64(std::string& buf, double x) {
  std::uint64_t v;
  std::memcpy(&v, &x, 8);
  for (int b = 0; b < 8; ++b) buf.push_back(static_cast<char>((v >> (8 * b)) & 0xff));
}

std::uint32_t get_u32(const unsigned char* p) {
  std::uint32_t v = 0;
  for (int b = 3; b >= 0; --b) v = (v << 8) | p[b];
  return v;
}

double get_f64(const unsigned char* p) {
  std::uint64_t v = 0;
  for (int b = 7; b >= 0; --b) v = (v << 8) | p[b];
  double x;
  std::memcpy(&x, &v, 8);
  return x;
}

} // namespace

void write_field_binary(const Field& field, const std::string& path) {
  field.grid.validate();
  if (field.values.size() != field.grid.size())
    throw std::runtime_error("write_field_binary: value count does not match grid");
  std::string buf;
  buf.reserve(16 + 8 * field.values.size());
  put_u32(buf, static_cast<std::uint32_t>(field.grid.N));
  put_u32(buf, static_cast<std::uint32_t>(field.grid.n));
  put_f64(buf, field.grid.L);
  for (double v : field.values) put_f64(buf, v);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("write_field_binary: cannot open " + path);
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw std::runtime_error("write_field_binary: write failed for " + path);
}

Field read_field_binary(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("read_field_binary: cannot open " + path);
  std::string buf((std::istreambuf_iterator<char>(in)),
                  std::istreambuf_iterator<char>());
  if (buf.size() < 16)
    throw std::runtime_error("read_field_binary: truncated header in " + path);
  const auto* p = reinterpret_cast<const unsigned char*>(buf.data());
  Field field;
  field.grid.N = static_cast<int>(get_u32(p));
  field.grid.n = static_cast<int>(get_u32(p + 4));
  field.grid.L = get_f64(p + 8);
  field.grid.validate();
  const std::size_t total = field.grid.size();
  if (buf.size() != 16 + 8 * total)
    throw std::runtime_error("read_field_binary: payload size mismatch in " + path);
  field.values.resize(total);
  for (std::size_t i = 0; i < total; ++i) field.values[i] = get_f64(p + 16 + 8 * i);
  field.require_finite("read_field_binary");
  return field;
}

void write_field_csv(const Field& field, const std::string& path) {
  field.grid.validate();
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("write_field_csv: cannot open " + path);
  out << "index";
  for (int d = 0; d < field.grid.N; ++d) out << ",x" << (d + 1);
  out << ",value\n";
  char line[160];
  for (std::size_t i = 0; i < field.values.size(); ++i) {
    const auto x = field.grid.cell_center(i);
    int len = std::snprintf(line, sizeof line, "%zu", i);
    out.write(line, len);
    for (int d = 0; d < field.grid.N; ++d) {
      len = std::snprintf(line, sizeof line, ",%.17g", x[d]);
      out.write(line, len);
    }
    len = std::snprintf(line, sizeof line, ",%.17g\n", field.values[i]);
    out.write(line, len);
  }
  if (!out) throw std::runtime_error("write_field_csv: write failed for " + path);
}

double unit_ball_volume(int N) {
  if (N < 1) throw std::domain_error("unit_ball_volume: N must be positive");
  return std::pow(M_PI, N / 2.0) / gamma_fn(N / 2.0 + 1.0);
}

} // namespace ffd
