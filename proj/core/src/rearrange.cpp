#include "ffd/rearrange.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace ffd {

double RadialProfile::midpoint_radius(std::size_t j) const {
  return std::pow(midpoint_measure(j) / unit_ball_volume(N), 1.0 / N);
}

namespace {

void require_nonnegative(const std::vector<double>& v, const char* who) {
  for (double x : v)
    if (x < 0.0) throw std::domain_error(std::string(who) + ": negative values");
}

void require_comparable(const RadialProfile& f, const RadialProfile& g,
                        const char* who) {
  if (f.values.size() != g.values.size())
    throw std::domain_error(std::string(who) + ": profile lengths differ");
  const double scale = std::max(f.cell_measure, g.cell_measure);
  if (std::abs(f.cell_measure - g.cell_measure) > 1e-12 * scale)
    throw std::domain_error(std::string(who) + ": cell measures differ");
}

} // namespace

double distribution_function(const Field& f, double level) {
  std::size_t count = 0;
  for (double v : f.values)
    if (v > level) ++count;
  return static_cast<double>(count) * f.grid.cell_measure();
}

double distribution_function(const RadialProfile& f, double level) {
  // values are sorted non-increasing: binary search for the crossing
  const auto it = std::upper_bound(f.values.begin(), f.values.end(), level,
                                   [](double lv, double v) { return v <= lv; });
  return static_cast<double>(it - f.values.begin()) * f.cell_measure;
}

RadialProfile decreasing_rearrangement(const Field& f) {
  f.grid.validate();
  require_nonnegative(f.values, "decreasing_rearrangement");
  RadialProfile p;
  p.N = f.grid.N;
  p.cell_measure = f.grid.cell_measure();
  p.values = f.values;
  std::sort(p.values.begin(), p.values.end(), std::greater<double>());
  return p;
}

Field spherical_rearrangement(const Field& f) {
  f.grid.validate();
  require_nonnegative(f.values, "spherical_rearrangement");
  const std::size_t total = f.grid.size();
  std::vector<std::size_t> rank(total);
  std::iota(rank.begin(), rank.end(), std::size_t{0});
  std::vector<double> r2(total);
  for (std::size_t i = 0; i < total; ++i) {
    const auto x = f.grid.cell_center(i);
    r2[i] = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
  }
  std::stable_sort(rank.begin(), rank.end(), [&r2](std::size_t a, std::size_t b) {
    if (r2[a] != r2[b]) return r2[a] < r2[b];
    return a < b;  // lexicographic tie-break: flat index is the lexicographic rank
  });
  std::vector<double> sorted = f.values;
  std::sort(sorted.begin(), sorted.end(), std::greater<double>());
  Field out(f.grid);
  for (std::size_t i = 0; i < total; ++i) out.values[rank[i]] = sorted[i];
  return out;
}

ConcentrationReport concentration_compare(const RadialProfile& f,
                                          const RadialProfile& g,
                                          double tolerance) {
  require_comparable(f, g, "concentration_compare");
  double pf = 0.0, pg = 0.0;
  double gap_fg = -std::numeric_limits<double>::infinity();  // max (Pf - Pg)
  double gap_gf = -std::numeric_limits<double>::infinity();  // max (Pg - Pf)
  for (std::size_t j = 0; j < f.values.size(); ++j) {
    pf += f.values[j] * f.cell_measure;
    pg += g.values[j] * g.cell_measure;
    gap_fg = std::max(gap_fg, pf - pg);
    gap_gf = std::max(gap_gf, pg - pf);
  }
  ConcentrationReport rep;
  rep.tolerance = tolerance;
  const bool le = gap_fg <= tolerance;  // f < g up to tolerance
  const bool ge = gap_gf <= tolerance;
  if (le && ge) {
    rep.verdict = Order::Equal;
    rep.max_violation = std::max(gap_fg, gap_gf);
  } else if (le) {
    rep.verdict = Order::LessOrEqual;
    rep.max_violation = gap_fg;
  } else if (ge) {
    rep.verdict = Order::GreaterOrEqual;
    rep.max_violation = gap_gf;
  } else {
    rep.verdict = Order::Incomparable;
    rep.max_violation = std::min(gap_fg, gap_gf);
  }
  return rep;
}

bool convex_test_compare(const RadialProfile& f, const RadialProfile& g,
                         int n_levels, double tolerance) {
  require_comparable(f, g, "convex_test_compare");
  if (n_levels < 1) throw std::domain_error("convex_test_compare: n_levels < 1");
  const double vmax =
      std::max(f.values.empty() ? 0.0 : f.values.front(),
               g.values.empty() ? 0.0 : g.values.front());
  for (int i = 0; i < n_levels; ++i) {
    const double k = vmax * static_cast<double>(i) / n_levels;
    double hf = 0.0, hg = 0.0;
    for (double v : f.values) hf += std::max(v - k, 0.0);
    for (double v : g.values) hg += std::max(v - k, 0.0);
    if (hf * f.cell_measure > hg * g.cell_measure + tolerance) return false;
  }
  return true;
}

double marcinkiewicz_gauge(const RadialProfile& f, double p,
                           MarcinkiewiczConvention convention) {
  if (!(p >= 1.0)) throw std::domain_error("marcinkiewicz_gauge: p must be >= 1");
  require_nonnegative(f.values, "marcinkiewicz_gauge");
  const double omega = unit_ball_volume(f.N);
  double gauge = 0.0;
  switch (convention) {
    case MarcinkiewiczConvention::Coefficient: {
      for (std::size_t j = 0; j < f.values.size(); ++j)
        gauge = std::max(gauge, std::pow(f.midpoint_measure(j) / omega, 1.0 / p) *
                                    f.values[j]);
      break;
    }
    case MarcinkiewiczConvention::SupLevel: {
      // observed levels; mu uses the strict inequality, so on the sorted
      // profile mu(f_j) is just the measure of the cells before index j
      for (std::size_t j = 0; j < f.values.size(); ++j) {
        if (f.values[j] <= 0.0) break;
        const double mu = distribution_function(f, f.values[j]);
        gauge = std::max(gauge, f.values[j] * std::pow(mu, 1.0 / p));
      }
      break;
    }
    case MarcinkiewiczConvention::Integral: {
      double prefix = 0.0;
      for (std::size_t j = 0; j < f.values.size(); ++j) {
        prefix += f.values[j] * f.cell_measure;
        const double S = static_cast<double>(j + 1) * f.cell_measure;
        gauge = std::max(gauge, prefix / std::pow(S, (p - 1.0) / p));
      }
      break;
    }
  }
  return gauge;
}

double marcinkiewicz_gauge(const Field& f, double p,
                           MarcinkiewiczConvention convention) {
  return marcinkiewicz_gauge(decreasing_rearrangement(f), p, convention);
}

double lorentz_norm(const RadialProfile& f, double p, double q) {
  if (!(p >= 1.0)) throw std::domain_error("lorentz_norm: p must be >= 1");
  if (!(q > 0.0)) throw std::domain_error("lorentz_norm: q must be positive");
  require_nonnegative(f.values, "lorentz_norm");
  if (std::isinf(q)) {
    double s = 0.0;
    for (std::size_t j = 0; j < f.values.size(); ++j)
      s = std::max(s, std::pow(f.midpoint_measure(j), 1.0 / p) * f.values[j]);
    return s;
  }
  double acc = 0.0;
  for (std::size_t j = 0; j < f.values.size(); ++j) {
    if (f.values[j] <= 0.0) break;
    const double s = f.midpoint_measure(j);
    acc += std::pow(std::pow(s, 1.0 / p) * f.values[j], q) * f.cell_measure / s;
  }
  return std::pow(acc, 1.0 / q);
}

std::vector<double> prefix_masses(const RadialProfile& f) {
  std::vector<double> out(f.values.size());
  double acc = 0.0;
  for (std::size_t j = 0; j < f.values.size(); ++j) {
    acc += f.values[j] * f.cell_measure;
    out[j] = acc;
  }
  return out;
}

} // namespace ffd
