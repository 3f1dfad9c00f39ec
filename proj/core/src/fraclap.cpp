#include "ffd/fraclap.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <mutex>
#include <stdexcept>
#include <vector>

#include "ffd/gamma.hpp"

namespace ffd {

namespace {

// FFTW plan creation/destruction is not thread-safe; executions are.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

}  // namespace

struct SpectralOperator::Impl {
  std::size_t n_real = 0;
  std::size_t n_spec = 0;
  double* real = nullptr;
  fftw_complex* spec = nullptr;    // scratch for the field being transformed
  fftw_complex* rhs_hat = nullptr; // cached transform for stabilized solves
  bool rhs_loaded = false;
  fftw_plan fwd = nullptr;
  fftw_plan bwd = nullptr;
  std::vector<double> mult;  // |k|^sigma per packed half-spectrum entry

  ~Impl() {
    std::lock_guard<std::mutex> lock(planner_mutex());
    if (fwd != nullptr) fftw_destroy_plan(fwd);
    if (bwd != nullptr) fftw_destroy_plan(bwd);
    if (real != nullptr) fftw_free(real);
    if (spec != nullptr) fftw_free(spec);
    if (rhs_hat != nullptr) fftw_free(rhs_hat);
  }
};

SpectralOperator::SpectralOperator(const Grid& grid, double sigma)
    : grid_(grid), sigma_(sigma) {
  if (!(sigma > 0.0 && sigma < 2.0)) {
    throw std::invalid_argument("SpectralOperator: sigma must lie in (0, 2)");
  }
  grid_.validate();
  const int N = grid_.N;
  const int n = grid_.n;
  impl_ = new Impl;
  try {
    const std::size_t nc = static_cast<std::size_t>(n / 2 + 1);
    std::size_t n_real = 1;
    for (int d = 0; d < N; ++d) n_real *= static_cast<std::size_t>(n);
    std::size_t n_spec = nc;
    for (int d = 0; d < N - 1; ++d) n_spec *= static_cast<std::size_t>(n);
    impl_->n_real = n_real;
    impl_->n_spec = n_spec;
    impl_->real = fftw_alloc_real(n_real);
    impl_->spec = fftw_alloc_complex(n_spec);
    impl_->rhs_hat = fftw_alloc_complex(n_spec);
    if (impl_->real == nullptr || impl_->spec == nullptr ||
        impl_->rhs_hat == nullptr) {
      throw std::bad_alloc();
    }
    int dims[3] = {n, n, n};
    {
      std::lock_guard<std::mutex> lock(planner_mutex());
      // FFTW_ESTIMATE keeps plans deterministic across runs.
      impl_->fwd = fftw_plan_dft_r2c(N, dims, impl_->real, impl_->spec,
                                     FFTW_ESTIMATE);
      impl_->bwd = fftw_plan_dft_c2r(N, dims, impl_->spec, impl_->real,
                                     FFTW_ESTIMATE);
    }
    if (impl_->fwd == nullptr || impl_->bwd == nullptr) {
      throw std::runtime_error("SpectralOperator: FFTW planning failed");
    }

    // Multiplier table: k_d = (pi / L) * j with j the signed mode index.
    impl_->mult.resize(n_spec);
    const double k0 = M_PI / grid_.L;
    const double half = 0.5 * sigma_;
    std::array<int, 3> idx{0, 0, 0};
    for (std::size_t s = 0; s < n_spec; ++s) {
      std::size_t rem = s;
      idx.fill(0);
      idx[N - 1] = static_cast<int>(rem % nc);
      rem /= nc;
      for (int d = N - 2; d >= 0; --d) {
        idx[d] = static_cast<int>(rem % static_cast<std::size_t>(n));
        rem /= static_cast<std::size_t>(n);
      }
      double k2 = 0.0;
      for (int d = 0; d < N; ++d) {
        int j = idx[d];
        if (d < N - 1 && j > n / 2) j -= n;
        const double kd = k0 * static_cast<double>(j);
        k2 += kd * kd;
      }
      impl_->mult[s] = (k2 == 0.0) ? 0.0 : std::pow(k2, half);
    }
  } catch (...) {
    delete impl_;
    throw;
  }
}

SpectralOperator::~SpectralOperator() { delete impl_; }

namespace {

void check_field(const Grid& grid, const Field& f, const char* what) {
  if (!(f.grid == grid)) {
    throw std::invalid_argument(std::string("SpectralOperator: ") + what +
                                " does not live on the operator grid");
  }
}

}  // namespace

Field SpectralOperator::apply(const Field& f) const {
  check_field(grid_, f, "apply input");
  Impl& im = *impl_;
  std::memcpy(im.real, f.values.data(), im.n_real * sizeof(double));
  fftw_execute(im.fwd);
  const double scale = 1.0 / static_cast<double>(im.n_real);
  for (std::size_t s = 0; s < im.n_spec; ++s) {
    const double factor = im.mult[s] * scale;
    im.spec[s][0] *= factor;
    im.spec[s][1] *= factor;
  }
  fftw_execute(im.bwd);
  Field out(grid_);
  std::memcpy(out.values.data(), im.real, im.n_real * sizeof(double));
  return out;
}

Field SpectralOperator::resolvent(const Field& b, double c) const {
  check_field(grid_, b, "resolvent input");
  if (!(c >= 0.0)) {
    throw std::invalid_argument("SpectralOperator: resolvent needs c >= 0");
  }
  Impl& im = *impl_;
  std::memcpy(im.real, b.values.data(), im.n_real * sizeof(double));
  fftw_execute(im.fwd);
  const double scale = 1.0 / static_cast<double>(im.n_real);
  for (std::size_t s = 0; s < im.n_spec; ++s) {
    const double factor = scale / (1.0 + c * im.mult[s]);
    im.spec[s][0] *= factor;
    im.spec[s][1] *= factor;
  }
  fftw_execute(im.bwd);
  Field out(grid_);
  std::memcpy(out.values.data(), im.real, im.n_real * sizeof(double));
  return out;
}

void SpectralOperator::load_rhs(const Field& b) const {
  check_field(grid_, b, "load_rhs input");
  Impl& im = *impl_;
  std::memcpy(im.real, b.values.data(), im.n_real * sizeof(double));
  fftw_execute_dft_r2c(im.fwd, im.real, im.rhs_hat);
  im.rhs_loaded = true;
}

Field SpectralOperator::stabilized_solve(const Field& g, double dt,
                                         double lambda) const {
  check_field(grid_, g, "stabilized_solve input");
  Impl& im = *impl_;
  if (!im.rhs_loaded) {
    throw std::logic_error(
        "SpectralOperator: stabilized_solve called before load_rhs");
  }
  if (!(dt > 0.0) || !(lambda >= 0.0)) {
    throw std::invalid_argument(
        "SpectralOperator: stabilized_solve needs dt > 0 and lambda >= 0");
  }
  std::memcpy(im.real, g.values.data(), im.n_real * sizeof(double));
  fftw_execute(im.fwd);
  const double scale = 1.0 / static_cast<double>(im.n_real);
  for (std::size_t s = 0; s < im.n_spec; ++s) {
    const double w = dt * im.mult[s];
    const double factor = scale / (1.0 + lambda * w);
    im.spec[s][0] = (im.rhs_hat[s][0] + w * im.spec[s][0]) * factor;
    im.spec[s][1] = (im.rhs_hat[s][1] + w * im.spec[s][1]) * factor;
  }
  fftw_execute(im.bwd);
  Field out(grid_);
  std::memcpy(out.values.data(), im.real, im.n_real * sizeof(double));
  return out;
}

double multiplier_value(const Grid& grid, double sigma,
                        const std::array<int, 3>& mode) {
  double k2 = 0.0;
  const double k0 = M_PI / grid.L;
  for (int d = 0; d < grid.N; ++d) {
    int j = mode[d] % grid.n;
    if (j > grid.n / 2) j -= grid.n;
    if (j < -grid.n / 2) j += grid.n;
    const double kd = k0 * static_cast<double>(j);
    k2 += kd * kd;
  }
  return (k2 == 0.0) ? 0.0 : std::pow(k2, 0.5 * sigma);
}

double levy_constant(int N, double sigma) {
  if (N < 1 || !(sigma > 0.0 && sigma < 2.0)) {
    throw std::invalid_argument("levy_constant: need N >= 1, sigma in (0, 2)");
  }
  // 2^sigma Gamma((N+sigma)/2) sin(pi sigma / 2) Gamma(1 + sigma/2)
  //   / pi^(N/2 + 1); the sine form stays finite through sigma -> 1.
  const double num = std::pow(2.0, sigma) *
                     gamma_fn(0.5 * (static_cast<double>(N) + sigma)) *
                     std::sin(0.5 * M_PI * sigma) * gamma_fn(1.0 + 0.5 * sigma);
  return num / std::pow(M_PI, 0.5 * static_cast<double>(N) + 1.0);
}

namespace {

struct SimpsonState {
  int max_depth = 40;
  long* budget = nullptr;  // shared refinement counter; exhaustion degrades to
                           // an accepted estimate with the defect in `error`
  double error = 0.0;      // accumulated |S_fine - S_coarse| / 15
};

inline double simpson_panel(double a, double b, double fa, double fm,
                            double fb) {
  return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

template <typename F>
double adaptive_simpson_rec(const F& f, double a, double fa, double b,
                            double fb, double m, double fm, double whole,
                            double tol, int depth, SimpsonState& st) {
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = simpson_panel(a, m, fa, flm, fm);
  const double right = simpson_panel(m, b, fm, frm, fb);
  const double delta = left + right - whole;
  if (depth >= st.max_depth || (st.budget != nullptr && --*st.budget <= 0) ||
      std::abs(delta) <= 15.0 * tol) {
    st.error += std::abs(delta) / 15.0;
    return left + right + delta / 15.0;
  }
  return adaptive_simpson_rec(f, a, fa, m, fm, lm, flm, left, 0.5 * tol,
                              depth + 1, st) +
         adaptive_simpson_rec(f, m, fm, b, fb, rm, frm, right, 0.5 * tol,
                              depth + 1, st);
}

// Adaptive Simpson on [a, b] with absolute tolerance, accumulating an error
// estimate into `st`. The interval is pre-split into `panels` chunks so that
// oscillatory integrands cannot fool the first refinement test.
template <typename F>
double adaptive_simpson(const F& f, double a, double b, double tol, int panels,
                        SimpsonState& st) {
  if (!(b > a)) return 0.0;
  panels = std::max(panels, 1);
  const double width = (b - a) / panels;
  const double tol_panel = tol / panels;
  double total = 0.0;
  for (int p = 0; p < panels; ++p) {
    const double pa = a + p * width;
    const double pb = (p + 1 == panels) ? b : pa + width;
    const double pm = 0.5 * (pa + pb);
    const double fa = f(pa);
    const double fb = f(pb);
    const double fm = f(pm);
    const double whole = simpson_panel(pa, pb, fa, fm, fb);
    total += adaptive_simpson_rec(f, pa, fa, pb, fb, pm, fm, whole, tol_panel,
                                  0, st);
  }
  return total;
}

// 4-point Gauss-Legendre rule on [-1, 1].
constexpr double kGaussNode[2] = {0.3399810435848563, 0.8611363115940526};
constexpr double kGaussWeight[2] = {0.6521451548625461, 0.3478548451374538};

// Mean of f over the N-dimensional box centered at `center` with side `side`,
// by tensor 4-point Gauss on a sub^N subdivision. Requires f smooth inside.
double gauss_box_mean(int N, const std::array<double, 3>& center, double side,
                      int sub, const std::function<double(double)>& f_radius) {
  const double step = side / sub;
  std::array<double, 4> nodes;
  std::array<double, 4> weights;
  for (int i = 0; i < 2; ++i) {
    nodes[i] = -kGaussNode[1 - i];
    nodes[2 + i] = kGaussNode[i];
    weights[i] = kGaussWeight[1 - i];
    weights[2 + i] = kGaussWeight[i];
  }
  double total = 0.0;
  const int boxes = static_cast<int>(std::pow(sub, N));
  for (int bx = 0; bx < boxes; ++bx) {
    std::array<double, 3> lo{};
    int rem = bx;
    for (int d = 0; d < N; ++d) {
      lo[d] = center[d] - 0.5 * side + (rem % sub) * step;
      rem /= sub;
    }
    const int pts = N == 1 ? 4 : (N == 2 ? 16 : 64);
    for (int p = 0; p < pts; ++p) {
      double w = 1.0;
      double r2 = 0.0;
      int q = p;
      for (int d = 0; d < N; ++d) {
        const int g = q % 4;
        q /= 4;
        const double x = lo[d] + 0.5 * step * (1.0 + nodes[g]);
        w *= 0.5 * weights[g];
        r2 += x * x;
      }
      total += w * f_radius(std::sqrt(r2));
    }
  }
  return total / boxes;
}

// Mean of |x|^{-alpha} over [0, h]^N (a cell with the origin at a corner),
// by dyadic shells refined toward the corner; each shell is smooth.
double corner_cell_mean(int N, double h, double alpha) {
  double integral = 0.0;
  const auto f = [alpha](double r) { return std::pow(r, -alpha); };
  for (int k = 0; k < 400; ++k) {
    const double s = h * std::pow(0.5, k);
    // shell [0, s]^N minus [0, s/2]^N: the 2^N - 1 sub-boxes not at the corner
    double shell = 0.0;
    const int corners = 1 << N;
    for (int c = 1; c < corners; ++c) {
      std::array<double, 3> center{};
      for (int d = 0; d < N; ++d) {
        center[d] = ((c >> d) & 1) ? 0.75 * s : 0.25 * s;
      }
      shell += gauss_box_mean(N, center, 0.5 * s, 2, f) *
               std::pow(0.5 * s, N);
    }
    integral += shell;
    if (shell < 1e-15 * integral) break;
  }
  return integral / std::pow(h, N);
}

struct TanhSinhResult {
  double value = 0.0;
  double error = 0.0;  // |last level - previous level|
};

// Tanh-sinh (double-exponential) quadrature on [a, b] for integrands with
// integrable endpoint singularities. The integrand receives the node together
// with its distances to both endpoints, computed without cancellation, so
// f(x) ~ (x - a)^{-gamma} data can be evaluated arbitrarily close to the
// endpoint. Levels halve the step until |I_k - I_{k-1}| <= tol_abs +
// rel_stop * |I_k| or the level cap; the last difference is the error.
template <typename G>
TanhSinhResult tanh_sinh(const G& g, double a, double b, double tol_abs,
                         double rel_stop = 0.0) {
  TanhSinhResult out;
  if (!(b > a)) return out;
  const double c = 0.5 * (b - a);
  constexpr double t_max = 4.0;
  constexpr int max_level = 7;
  const auto eval = [&](double t) -> double {
    const double w = 0.5 * M_PI * std::sinh(t);
    const double q = std::exp(-2.0 * std::abs(w));
    const double sig = 2.0 * q / (1.0 + q);  // 1 - |tanh(w)|, stable
    // dx/dt = c (pi/2) cosh(t) / cosh^2(w);  1/cosh^2(w) = sig (2 - sig)
    const double weight = 0.5 * M_PI * std::cosh(t) * sig * (2.0 - sig);
    const double near = c * sig;
    const double far = c * (2.0 - sig);
    const double v = (t >= 0.0) ? g(b - near, far, near) : g(a + near, near, far);
    return weight * v;
  };
  double h = 0.5;
  double sum = eval(0.0);
  for (int k = 1; k * h <= t_max; ++k) sum += eval(k * h) + eval(-k * h);
  double prev = c * h * sum;
  out.value = prev;
  out.error = std::abs(prev);
  for (int lev = 1; lev <= max_level; ++lev) {
    h *= 0.5;
    double add = 0.0;
    for (int k = 1; k * h <= t_max; k += 2) add += eval(k * h) + eval(-k * h);
    const double cur = 0.5 * prev + c * h * add;
    out.error = std::abs(cur - prev);
    out.value = cur;
    prev = cur;
    if (out.error <= tol_abs + rel_stop * std::abs(cur)) break;
  }
  return out;
}

}  // namespace

QuadratureResult apply_radial_quadrature(
    const std::function<double(double)>& f_radial, double r, int N,
    double sigma, double rel_tol) {
  if (!(r > 0.0)) {
    throw std::invalid_argument("apply_radial_quadrature: need r > 0");
  }
  if (N < 1 || N > 3 || !(sigma > 0.0 && sigma < 2.0)) {
    throw std::invalid_argument(
        "apply_radial_quadrature: need N in {1,2,3}, sigma in (0,2)");
  }
  if (!(rel_tol > 0.0)) rel_tol = 1e-8;

  const double c = levy_constant(N, sigma);
  const double fr = f_radial(r);

  // Angular weight of the symmetric difference: total sin^(N-2) measure.
  // N=1: paired points (weight 2 in the difference), N=2: pi, N=3: 2.
  const double w_ang = (N == 1) ? 2.0 : (N == 2 ? M_PI : 2.0);
  const double pref = (N == 1) ? c : c * (N == 2 ? 2.0 : 2.0 * M_PI);

  double inner_error = 0.0;
  // Global refinement budget shared by every adaptive-Simpson pass, so
  // pathological data cannot multiply work without bound; exhaustion shows up
  // in error_estimate rather than as a hang.
  long budget = 2000000;

  // Centered spherical mean difference at separation z > 0:
  //   w(z) = int_0^pi [f(R(theta)) - f(r)] sin^(N-2) theta dtheta
  // with R^2 = (r - z)^2 + 4 r z sin^2((pi - theta)/2). The caller supplies
  // dist = |r - z| computed without cancellation so that integrable
  // singularities of f at the origin stay evaluable arbitrarily close to the
  // coincidence point z = r. Inner-quadrature errors are weighted by
  // min(1, |ln(z/r)|), the measure the outer integral assigns to that scale.
  const auto mean_diff = [&](double z, double dist) -> double {
    const double err_weight = std::min(1.0, std::abs(std::log(z / r)));
    if (N == 1) {
      return f_radial(r + z) + f_radial(dist) - 2.0 * fr;
    }
    if (N == 2) {
      const double two_sq_rz = 2.0 * std::sqrt(r * z);
      const auto g = [&](double /*theta*/, double /*da*/, double db) {
        // db = pi - theta; R grows from dist at theta = pi to r + z at 0.
        return f_radial(std::hypot(dist, two_sq_rz * std::sin(0.5 * db)));
      };
      const TanhSinhResult ts =
          tanh_sinh(g, 0.0, M_PI, 1e-4 * rel_tol * w_ang * std::abs(fr),
                    std::max(1e-12, 0.01 * rel_tol));
      inner_error += err_weight * ts.error;
      return ts.value - w_ang * fr;
    }
    // N = 3: substitute R, then integrate f(R) R on a log-spaced variable to
    // absorb power-law behaviour near the inner endpoint.
    const double b = r + z;
    const auto g = [&](double v) {
      const double R = std::exp(v);
      return f_radial(R) * R * R;  // f(R) R dR = f(R) R^2 dv
    };
    const double lv = std::log(dist);
    const double bv = std::log(b);
    const double est0 = simpson_panel(lv, bv, g(lv), g(0.5 * (lv + bv)), g(bv));
    const double scale =
        std::abs(est0) + w_ang * std::abs(fr) * r * z + 1e-300;
    const int panels = 12 + static_cast<int>(bv - lv);
    SimpsonState st;
    st.budget = &budget;
    const double val =
        adaptive_simpson(g, lv, bv, 1e-4 * rel_tol * scale, panels, st);
    inner_error += err_weight * st.error / (r * z);
    return val / (r * z) - w_ang * fr;
  };

  // Outer cutoff: beyond z_max the difference is -w_ang f(r) plus the mean of
  // f over a sphere of radius ~ z, which we bound by f(z - r) for the error
  // estimate and integrate analytically for the constant part.
  double z_max = 64.0 * (r + 1.0);
  for (int k = 0; k < 60; ++k) {
    const double probe = std::abs(f_radial(z_max - r)) + std::abs(f_radial(z_max));
    if (probe * std::pow(z_max, -sigma) / sigma <=
            0.01 * rel_tol * (std::abs(fr) + 1e-300) ||
        z_max > 1e14) {
      break;
    }
    z_max *= 2.0;
  }
  // Below z_min the symmetric difference w(z) ~ C z^2 drowns in rounding
  // noise; integrate the quadratic model analytically instead (head_val).
  const double z_min = 1e-3 * r;

  // log substitution u = ln z:  int z^(-1-sigma) w(z) dz = int e^(-sigma u)
  // w(e^u) du. The integrand has an integrable kink (or singularity, when f
  // blows up at the origin) at u = ln r; a tanh-sinh panel on each side
  // resolves it, adaptive Simpson covers the smooth remainder.
  const auto outer = [&](double u) {
    const double z = std::exp(u);
    return std::exp(-sigma * u) * mean_diff(z, std::abs(r - z));
  };

  const double u_min = std::log(z_min);
  const double u_mid = std::log(r);
  const double u_max = std::log(z_max);
  const double kw = 0.75;  // kink-panel half-width in log z

  // Left kink panel [u_mid - kw, u_mid]: distance to r shrinks toward the
  // right endpoint, z = r e^{-db}, r - z = -r expm1(-db).
  const auto kinked_left = [&](double u, double /*da*/, double db) {
    const double z = r * std::exp(-db);
    return std::exp(-sigma * u) * mean_diff(z, -r * std::expm1(-db));
  };
  // Right kink panel [u_mid, u_mid + kw]: z = r e^{da}, z - r = r expm1(da).
  const auto kinked_right = [&](double u, double da, double /*db*/) {
    const double z = r * std::exp(da);
    return std::exp(-sigma * u) * mean_diff(z, r * std::expm1(da));
  };

  SimpsonState outer_state;
  outer_state.budget = &budget;

  // Pilot pass over the smooth segments to fix the absolute tolerance scale.
  SimpsonState pilot_state;
  pilot_state.budget = &budget;
  pilot_state.max_depth = 12;
  const double pilot =
      adaptive_simpson(outer, u_min, u_mid - kw, 1e-2, 16, pilot_state) +
      adaptive_simpson(outer, u_mid + kw, u_max, 1e-2, 16, pilot_state);
  const double scale_abs =
      std::max(std::abs(pilot), std::abs(fr) * std::pow(r, -sigma)) + 1e-300;
  const double tol_abs = 0.25 * rel_tol * scale_abs;

  const TanhSinhResult kink_l =
      tanh_sinh(kinked_left, u_mid - kw, u_mid, 0.25 * tol_abs);
  const TanhSinhResult kink_r =
      tanh_sinh(kinked_right, u_mid, u_mid + kw, 0.25 * tol_abs);
  const double body =
      adaptive_simpson(outer, u_min, u_mid - kw, 0.25 * tol_abs, 24,
                       outer_state) +
      kink_l.value + kink_r.value +
      adaptive_simpson(outer, u_mid + kw, u_max, 0.25 * tol_abs, 24,
                       outer_state);
  outer_state.error += kink_l.error + kink_r.error;

  // Analytic remainder of the constant part beyond z_max, plus the quadratic
  // model w(z) ~ w(z_min) (z/z_min)^2 integrated over the head below z_min.
  const double tail_const = -w_ang * fr * std::pow(z_max, -sigma) / sigma;
  const double tail_var_bound =
      w_ang *
      (std::abs(f_radial(z_max - r)) + std::abs(f_radial(2.0 * z_max))) *
      std::pow(z_max, -sigma) / sigma;
  const double w_small = mean_diff(z_min, r - z_min);
  const double head_val = w_small * std::pow(z_min, -sigma) / (2.0 - sigma);
  const double head_bound =
      std::abs(head_val) * 1e-4 +
      1e-15 * (std::abs(fr) + std::abs(w_small)) * std::pow(z_min, -sigma) /
          (2.0 - sigma);

  QuadratureResult out;
  out.value = -pref * (body + tail_const + head_val);
  out.error_estimate =
      pref * (outer_state.error + inner_error + tail_var_bound + head_bound);
  return out;
}

namespace {

// Lattice tail sum: sum of |v|^{-beta} over integer v with |v|_inf > V.
// Terms with |v|_2 <= W are enumerated exactly; the remainder is replaced by
// the continuum integral over |y|_2 > W (relative error O(W^-2)). W >= V
// sqrt(N) guarantees the two regions tile the tail exactly.
double lattice_tail_sum(int N, double beta, int V) {
  const double W = std::max(8.0 * V, 64.0);
  const int C = static_cast<int>(W) + 1;
  const double W2 = W * W;
  const double expo = -0.5 * beta;
  double s = 0.0;
  if (N == 1) {
    for (int a = V + 1; a <= C; ++a) {
      const double r2 = static_cast<double>(a) * a;
      if (r2 <= W2) s += 2.0 * std::pow(r2, expo);
    }
  } else if (N == 2) {
    for (int a = -C; a <= C; ++a) {
      for (int b = -C; b <= C; ++b) {
        if (std::max(std::abs(a), std::abs(b)) <= V) continue;
        const double r2 = static_cast<double>(a) * a + static_cast<double>(b) * b;
        if (r2 <= W2) s += std::pow(r2, expo);
      }
    }
  } else {
    for (int a = -C; a <= C; ++a) {
      for (int b = -C; b <= C; ++b) {
        const double ab2 =
            static_cast<double>(a) * a + static_cast<double>(b) * b;
        for (int c = -C; c <= C; ++c) {
          if (std::max(std::abs(a), std::max(std::abs(b), std::abs(c))) <= V) {
            continue;
          }
          const double r2 = ab2 + static_cast<double>(c) * c;
          if (r2 <= W2) s += std::pow(r2, expo);
        }
      }
    }
  }
  const double omega = (N == 1) ? 2.0 : (N == 2 ? 2.0 * M_PI : 4.0 * M_PI);
  s += omega * std::pow(W, static_cast<double>(N) - beta) /
       (beta - static_cast<double>(N));
  return s;
}

// Modes per axis of the periodic quadratic surrogate; capped well inside the
// band so sampling the series (and its spectral image) is exact.
int quadratic_mode_count(const Grid& grid) {
  return std::max(1, std::min(16, grid.n / 8));
}

// One axis of the surrogate: the K-term Fourier series of the periodization
// of t^2 on [-L, L).
double quadratic_series(const Grid& grid, double t) {
  const double L = grid.L;
  const int K = quadratic_mode_count(grid);
  double s = L * L / 3.0;
  const double c = 4.0 * L * L / (M_PI * M_PI);
  double sign = -1.0;
  for (int k = 1; k <= K; ++k, sign = -sign) {
    s += c * sign * std::cos(k * M_PI * t / L) / (static_cast<double>(k) * k);
  }
  return s;
}

}  // namespace

PeriodizedPowerField sample_periodized_power(const Grid& grid, double alpha,
                                             int images) {
  grid.validate();
  const int N = grid.N;
  if (!(alpha > 0.0) || !(alpha < static_cast<double>(N)) ||
      !(alpha > static_cast<double>(N) - 2.0)) {
    throw std::invalid_argument(
        "sample_periodized_power: need alpha in (max(0, N-2), N) for a "
        "convergent renormalized image sum");
  }
  if (images < 1) {
    throw std::invalid_argument("sample_periodized_power: need images >= 1");
  }
  const double period = 2.0 * grid.L;
  const double h = grid.h();
  const int half = grid.n / 2;
  const int V = images;
  const int M = 2 * V + 1;
  const double expo = -0.5 * alpha;

  std::vector<double> off(M);
  for (int v = -V; v <= V; ++v) off[v + V] = period * static_cast<double>(v);

  // Images beyond the truncation cube contribute, after the constant is
  // renormalized away, the isotropized quadratic Taylor term
  //   (1/(2N)) sum_{|v|_inf > V} Lap(|.|^{-alpha})(2Lv) |x|^2
  //     = alpha (alpha + 2 - N) / (2N) (2L)^{-alpha-2} tailsum * |x|^2
  // plus a quartic remainder. Subtracting q S(x), with S the periodic
  // quadratic mode, removes it while keeping the field periodic.
  const double q = alpha * (alpha + 2.0 - static_cast<double>(N)) /
                   (2.0 * static_cast<double>(N)) *
                   std::pow(period, -(alpha + 2.0)) *
                   lattice_tail_sum(N, alpha + 2.0, V);
  std::vector<double> qmode(half);
  for (int j = 0; j < half; ++j) {
    qmode[j] = q * quadratic_series(grid, (static_cast<double>(j) + 0.5) * h);
  }

  // Constant renormalizer: sum over v != 0 of |2 L v|^{-alpha}.
  double renorm = 0.0;
  if (N == 1) {
    for (int a = 0; a < M; ++a) {
      if (a == V) continue;
      renorm += std::pow(off[a] * off[a], expo);
    }
  } else if (N == 2) {
    for (int a = 0; a < M; ++a) {
      for (int b = 0; b < M; ++b) {
        if (a == V && b == V) continue;
        renorm += std::pow(off[a] * off[a] + off[b] * off[b], expo);
      }
    }
  } else {
    for (int a = 0; a < M; ++a) {
      for (int b = 0; b < M; ++b) {
        const double d2 = off[a] * off[a] + off[b] * off[b];
        for (int c = 0; c < M; ++c) {
          if (a == V && b == V && c == V) continue;
          renorm += std::pow(d2 + off[c] * off[c], expo);
        }
      }
    }
  }

  // Cell centers sit at half offsets, so |x_d| = (j + 0.5) h with the folded
  // index j in [0, n/2); the image sum is invariant under sign flips and
  // coordinate permutations, so only sorted folded tuples need evaluating.
  std::vector<int> ftab(grid.n);
  for (int i = 0; i < grid.n; ++i) {
    ftab[i] = (i >= half) ? i - half : half - 1 - i;
  }
  const auto fc = [&](int j) { return (static_cast<double>(j) + 0.5) * h; };

  // Near the origin the midpoint value of the central image misstates the
  // cell's mass by O(h^{N - alpha}); since the operator and the grid-mean
  // removal both feel that mass globally, central-image values within 4h of
  // the origin are replaced by exact cell averages.
  const std::function<double(double)> pw = [alpha](double r) {
    return std::pow(r, -alpha);
  };
  const double corner = corner_cell_mean(N, h, alpha);
  const double near_r = 4.0 * h;
  const auto cell_mean = [&](bool is_corner, const std::array<double, 3>& c) {
    return is_corner ? corner : gauss_box_mean(N, c, h, 2, pw);
  };

  PeriodizedPowerField out{Field(grid), q};
  if (N == 1) {
    std::vector<double> line(half);
    for (int j = 0; j < half; ++j) {
      const double x = fc(j);
      double s = 0.0;
      for (int a = 0; a < M; ++a) {
        const double d = x + off[a];
        s += std::pow(d * d, expo);
      }
      if (x <= near_r) {
        s += cell_mean(j == 0, {x, 0.0, 0.0}) - std::pow(x * x, expo);
      }
      line[j] = s - renorm + qmode[j];
    }
    for (int i = 0; i < grid.n; ++i) out.field.values[i] = line[ftab[i]];
    return out;
  }
  if (N == 2) {
    std::vector<double> tri(static_cast<std::size_t>(half) * (half + 1) / 2);
    for (int j2 = 0; j2 < half; ++j2) {
      const double y = fc(j2);
      for (int j1 = 0; j1 <= j2; ++j1) {
        const double x = fc(j1);
        double s = 0.0;
        for (int a = 0; a < M; ++a) {
          const double dx2 = (x + off[a]) * (x + off[a]);
          for (int b = 0; b < M; ++b) {
            const double dy = y + off[b];
            s += std::pow(dx2 + dy * dy, expo);
          }
        }
        const double r2 = x * x + y * y;
        if (r2 <= near_r * near_r) {
          s += cell_mean(j1 == 0 && j2 == 0, {x, y, 0.0}) -
               std::pow(r2, expo);
        }
        tri[static_cast<std::size_t>(j2) * (j2 + 1) / 2 + j1] =
            s - renorm + qmode[j1] + qmode[j2];
      }
    }
    std::size_t flat = 0;
    for (int i0 = 0; i0 < grid.n; ++i0) {
      const int f0 = ftab[i0];
      for (int i1 = 0; i1 < grid.n; ++i1, ++flat) {
        const int f1 = ftab[i1];
        const int lo = std::min(f0, f1);
        const int hi = std::max(f0, f1);
        out.field.values[flat] =
            tri[static_cast<std::size_t>(hi) * (hi + 1) / 2 + lo];
      }
    }
    return out;
  }
  const auto tet_index = [](int j1, int j2, int j3) {
    return static_cast<std::size_t>(j3) * (j3 + 1) * (j3 + 2) / 6 +
           static_cast<std::size_t>(j2) * (j2 + 1) / 2 +
           static_cast<std::size_t>(j1);
  };
  std::vector<double> tet(tet_index(half - 1, half - 1, half - 1) + 1);
  for (int j3 = 0; j3 < half; ++j3) {
    const double z = fc(j3);
    for (int j2 = 0; j2 <= j3; ++j2) {
      const double y = fc(j2);
      for (int j1 = 0; j1 <= j2; ++j1) {
        const double x = fc(j1);
        double s = 0.0;
        for (int a = 0; a < M; ++a) {
          const double dx2 = (x + off[a]) * (x + off[a]);
          for (int b = 0; b < M; ++b) {
            const double dy = y + off[b];
            const double dxy2 = dx2 + dy * dy;
            for (int c = 0; c < M; ++c) {
              const double dz = z + off[c];
              s += std::pow(dxy2 + dz * dz, expo);
            }
          }
        }
        const double r2 = x * x + y * y + z * z;
        if (r2 <= near_r * near_r) {
          s += cell_mean(j1 == 0 && j2 == 0 && j3 == 0, {x, y, z}) -
               std::pow(r2, expo);
        }
        tet[tet_index(j1, j2, j3)] =
            s - renorm + qmode[j1] + qmode[j2] + qmode[j3];
      }
    }
  }
  std::size_t flat = 0;
  for (int i0 = 0; i0 < grid.n; ++i0) {
    const int f0 = ftab[i0];
    for (int i1 = 0; i1 < grid.n; ++i1) {
      const int f1 = ftab[i1];
      for (int i2 = 0; i2 < grid.n; ++i2, ++flat) {
        int a = f0;
        int b = f1;
        int c = ftab[i2];
        if (a > b) std::swap(a, b);
        if (b > c) std::swap(b, c);
        if (a > b) std::swap(a, b);
        out.field.values[flat] = tet[tet_index(a, b, c)];
      }
    }
  }
  return out;
}

Field periodic_quadratic_mode(const Grid& grid) {
  grid.validate();
  return sample_field(grid, [&](const std::array<double, 3>& x) {
    double s = 0.0;
    for (int d = 0; d < grid.N; ++d) s += quadratic_series(grid, x[d]);
    return s;
  });
}

Field periodic_quadratic_mode_image(const Grid& grid, double sigma) {
  grid.validate();
  if (!(sigma > 0.0) || !(sigma <= 2.0)) {
    throw std::invalid_argument(
        "periodic_quadratic_mode_image: need sigma in (0, 2]");
  }
  const double L = grid.L;
  const int K = quadratic_mode_count(grid);
  const double c = 4.0 * L * L / (M_PI * M_PI);
  return sample_field(grid, [&](const std::array<double, 3>& x) {
    double s = 0.0;
    for (int d = 0; d < grid.N; ++d) {
      double sign = -1.0;
      for (int k = 1; k <= K; ++k, sign = -sign) {
        s += c * sign * std::pow(k * M_PI / L, sigma) *
             std::cos(k * M_PI * x[d] / L) / (static_cast<double>(k) * k);
      }
    }
    return s;
  });
}

Field gaussian_lowpass(const Field& field, double cutoff_fraction) {
  const Grid& grid = field.grid;
  grid.validate();
  if (!(cutoff_fraction > 0.0) || !(cutoff_fraction <= 1.0)) {
    throw std::invalid_argument(
        "gaussian_lowpass: need cutoff_fraction in (0, 1]");
  }
  const int N = grid.N;
  const int n = grid.n;
  const std::size_t nc = static_cast<std::size_t>(n / 2 + 1);
  std::size_t n_real = 1;
  for (int d = 0; d < N; ++d) n_real *= static_cast<std::size_t>(n);
  std::size_t n_spec = nc;
  for (int d = 0; d < N - 1; ++d) n_spec *= static_cast<std::size_t>(n);

  double* real = fftw_alloc_real(n_real);
  fftw_complex* spec = fftw_alloc_complex(n_spec);
  fftw_plan fwd = nullptr;
  fftw_plan bwd = nullptr;
  if (real != nullptr && spec != nullptr) {
    int dims[3] = {n, n, n};
    std::lock_guard<std::mutex> lock(planner_mutex());
    fwd = fftw_plan_dft_r2c(N, dims, real, spec, FFTW_ESTIMATE);
    bwd = fftw_plan_dft_c2r(N, dims, spec, real, FFTW_ESTIMATE);
  }
  if (real == nullptr || spec == nullptr || fwd == nullptr || bwd == nullptr) {
    std::lock_guard<std::mutex> lock(planner_mutex());
    if (fwd != nullptr) fftw_destroy_plan(fwd);
    if (bwd != nullptr) fftw_destroy_plan(bwd);
    if (real != nullptr) fftw_free(real);
    if (spec != nullptr) fftw_free(spec);
    throw std::runtime_error("gaussian_lowpass: FFTW setup failed");
  }

  std::memcpy(real, field.values.data(), n_real * sizeof(double));
  fftw_execute(fwd);
  const double k0 = M_PI / grid.L;
  const double kc = cutoff_fraction * M_PI / grid.h();
  const double scale = 1.0 / static_cast<double>(n_real);
  std::array<int, 3> idx{0, 0, 0};
  for (std::size_t s = 0; s < n_spec; ++s) {
    std::size_t rem = s;
    idx.fill(0);
    idx[N - 1] = static_cast<int>(rem % nc);
    rem /= nc;
    for (int d = N - 2; d >= 0; --d) {
      idx[d] = static_cast<int>(rem % static_cast<std::size_t>(n));
      rem /= static_cast<std::size_t>(n);
    }
    double k2 = 0.0;
    for (int d = 0; d < N; ++d) {
      int j = idx[d];
      if (d < N - 1 && j > n / 2) j -= n;
      const double kd = k0 * static_cast<double>(j);
      k2 += kd * kd;
    }
    const double factor = std::exp(-k2 / (kc * kc)) * scale;
    spec[s][0] *= factor;
    spec[s][1] *= factor;
  }
  fftw_execute(bwd);
  Field out(grid);
  std::memcpy(out.values.data(), real, n_real * sizeof(double));
  {
    std::lock_guard<std::mutex> lock(planner_mutex());
    fftw_destroy_plan(fwd);
    fftw_destroy_plan(bwd);
    fftw_free(real);
    fftw_free(spec);
  }
  return out;
}

}  // namespace ffd
