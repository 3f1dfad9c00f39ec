// ffd — command-line front end of the fractional fast-diffusion laboratory.
//
// Subcommands:
//   kappa       evaluate the power-law constant kappa(alpha) and its mirror
//   exponents   print the critical-exponent table for (N, sigma, m [, p])
//   simulate    evolve a configured datum and write a trajectory directory
//   barenblatt  measure a self-similar profile, record its constants
//   rearrange   decreasing radial profile + weak-norm gauges of a field file
//   verify      run an estimate suite, write reports and a summary CSV
//
// Configuration comes from an INI-style file (--config) with flat key=value
// sections; explicit flags override file values; every final value is echoed
// into run_manifest.json together with FNV-1a hashes of all output files, so
// identical config + seed reproduces byte-identical output directories.
//
// Exit codes: 0 success / all checks pass; 1 a check failed; 2 usage or
// domain error; 3 solver failure.

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "ffd/evolve.hpp"
#include "ffd/exponents.hpp"
#include "ffd/grid.hpp"
#include "ffd/rearrange.hpp"
#include "ffd/selfsim.hpp"
#include "ffd/verify.hpp"
#include "suites.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

// ---------------------------------------------------------------------------
// Settings: every configurable value, with its INI section.key spelling.
// ---------------------------------------------------------------------------

struct Settings {
  // [problem]
  int N = 1;
  double sigma = 1.0;
  double m = 1.0;
  // [grid]
  int n = 1024;
  double L = 20.0;
  // [solver]
  std::string scheme = "semi_implicit";
  double dt_initial = 1e-3;
  double dt_growth = 1.25;
  double dt_max = 5e-3;  // <= 0 means uncapped
  double t_start = 0.0;
  double t_end = 1.0;
  double epsilon_reg = -1.0;  // < 0 means the solver default
  double newton_tol = 1e-10;
  int max_inner_iters = 200;
  int anderson_depth = 2;
  int max_halvings = 20;
  double extinction_threshold = 1e-6;
  std::vector<double> snapshots;  // absolute times; empty: {t_start + t_end}
  // [datum]
  std::string datum_kind = "gaussian";
  double mass = 1.0;
  double width = 2.0;
  int bumps = 3;
  double amplitude = 1.0;
  double cap = 4.0;
  double tail_p = 2.0;
  double T = 1.0;
  double r_trunc = 0.15;
  double radius_cells = 4.0;
  std::string datum_file;
  // [profile]
  std::string profile_kind = "barenblatt";
  double profile_mass = 1.0;
  std::vector<double> profile_times;  // empty: ProfileOptions default {1,2,4}
  std::vector<double> caps;           // empty: ProfileOptions default {4,8,16}
  int n_bins = 512;
  double collapse_tol = 0.02;
  bool enforce_collapse = true;
  double dirac_radius_cells = 4.0;
  double profile_dt_initial = 1e-5;
  double profile_dt_max = 5e-3;
  double profile_dt_growth = 1.25;
  double profile_newton_tol = 1e-9;
  double profile_epsilon_reg = -1.0;
  std::vector<double> lp_orders;  // manifest norm orders; empty: {2}
  // [check]
  double p = 2.0;
  double tol = -1.0;  // < 0 means the per-suite default
  double F0 = 0.0;    // <= 0 means: manifest lookup, then closed form
  double Cp = 0.0;
  double Fp0 = 0.0;
  int data = 4;
  int pairs = 20;
  bool include_dirac = false;
  bool different_diffusivity = false;
  std::vector<double> times;  // check times; empty: per-suite default
  std::string constants;      // constants-manifest path for lookups
  // [run]
  std::string out;
  int jobs = 1;
  std::uint64_t seed = 7;

  std::set<std::string> assigned;
  bool is_set(const std::string& key) const { return assigned.count(key) > 0; }
};

// ---------------------------------------------------------------------------
// Value parsing
// ---------------------------------------------------------------------------

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

double parse_double(const std::string& v) {
  std::size_t pos = 0;
  double x = std::stod(v, &pos);
  if (pos != v.size()) throw std::invalid_argument("not a number: '" + v + "'");
  return x;
}

int parse_int(const std::string& v) {
  std::size_t pos = 0;
  int x = std::stoi(v, &pos);
  if (pos != v.size()) throw std::invalid_argument("not an integer: '" + v + "'");
  return x;
}

std::uint64_t parse_u64(const std::string& v) {
  std::size_t pos = 0;
  unsigned long long x = std::stoull(v, &pos);
  if (pos != v.size()) throw std::invalid_argument("not a seed: '" + v + "'");
  return static_cast<std::uint64_t>(x);
}

bool parse_bool(const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw std::invalid_argument("not a boolean: '" + v + "'");
}

std::vector<double> parse_list(const std::string& v) {
  std::vector<double> out;
  std::string item;
  std::istringstream in(v);
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(parse_double(item));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Schema: section.key -> setter. Used by both the INI loader and the flag
// overrides so precedence is defaults -> file -> flags.
// ---------------------------------------------------------------------------

using Setter = std::function<void(Settings&, const std::string&)>;

const std::map<std::string, Setter>& schema() {
  static const std::map<std::string, Setter> table = {
      {"problem.N", [](Settings& s, const std::string& v) { s.N = parse_int(v); }},
      {"problem.sigma", [](Settings& s, const std::string& v) { s.sigma = parse_double(v); }},
      {"problem.m", [](Settings& s, const std::string& v) { s.m = parse_double(v); }},
      {"grid.n", [](Settings& s, const std::string& v) { s.n = parse_int(v); }},
      {"grid.L", [](Settings& s, const std::string& v) { s.L = parse_double(v); }},
      {"solver.scheme", [](Settings& s, const std::string& v) { s.scheme = v; }},
      {"solver.dt_initial", [](Settings& s, const std::string& v) { s.dt_initial = parse_double(v); }},
      {"solver.dt_growth", [](Settings& s, const std::string& v) { s.dt_growth = parse_double(v); }},
      {"solver.dt_max", [](Settings& s, const std::string& v) { s.dt_max = parse_double(v); }},
      {"solver.t_start", [](Settings& s, const std::string& v) { s.t_start = parse_double(v); }},
      {"solver.t_end", [](Settings& s, const std::string& v) { s.t_end = parse_double(v); }},
      {"solver.epsilon_reg", [](Settings& s, const std::string& v) { s.epsilon_reg = parse_double(v); }},
      {"solver.newton_tol", [](Settings& s, const std::string& v) { s.newton_tol = parse_double(v); }},
      {"solver.max_inner_iters", [](Settings& s, const std::string& v) { s.max_inner_iters = parse_int(v); }},
      {"solver.anderson_depth", [](Settings& s, const std::string& v) { s.anderson_depth = parse_int(v); }},
      {"solver.max_halvings", [](Settings& s, const std::string& v) { s.max_halvings = parse_int(v); }},
      {"solver.extinction_threshold", [](Settings& s, const std::string& v) { s.extinction_threshold = parse_double(v); }},
      {"solver.snapshots", [](Settings& s, const std::string& v) { s.snapshots = parse_list(v); }},
      {"datum.kind", [](Settings& s, const std::string& v) { s.datum_kind = v; }},
      {"datum.mass", [](Settings& s, const std::string& v) { s.mass = parse_double(v); }},
      {"datum.width", [](Settings& s, const std::string& v) { s.width = parse_double(v); }},
      {"datum.bumps", [](Settings& s, const std::string& v) { s.bumps = parse_int(v); }},
      {"datum.amplitude", [](Settings& s, const std::string& v) { s.amplitude = parse_double(v); }},
      {"datum.cap", [](Settings& s, const std::string& v) { s.cap = parse_double(v); }},
      {"datum.tail_p", [](Settings& s, const std::string& v) { s.tail_p = parse_double(v); }},
      {"datum.T", [](Settings& s, const std::string& v) { s.T = parse_double(v); }},
      {"datum.r_trunc", [](Settings& s, const std::string& v) { s.r_trunc = parse_double(v); }},
      {"datum.radius_cells", [](Settings& s, const std::string& v) { s.radius_cells = parse_double(v); }},
      {"datum.file", [](Settings& s, const std::string& v) { s.datum_file = v; }},
      {"profile.kind", [](Settings& s, const std::string& v) { s.profile_kind = v; }},
      {"profile.mass", [](Settings& s, const std::string& v) { s.profile_mass = parse_double(v); }},
      {"profile.times", [](Settings& s, const std::string& v) { s.profile_times = parse_list(v); }},
      {"profile.caps", [](Settings& s, const std::string& v) { s.caps = parse_list(v); }},
      {"profile.n_bins", [](Settings& s, const std::string& v) { s.n_bins = parse_int(v); }},
      {"profile.collapse_tol", [](Settings& s, const std::string& v) { s.collapse_tol = parse_double(v); }},
      {"profile.enforce_collapse", [](Settings& s, const std::string& v) { s.enforce_collapse = parse_bool(v); }},
      {"profile.dirac_radius_cells", [](Settings& s, const std::string& v) { s.dirac_radius_cells = parse_double(v); }},
      {"profile.dt_initial", [](Settings& s, const std::string& v) { s.profile_dt_initial = parse_double(v); }},
      {"profile.dt_max", [](Settings& s, const std::string& v) { s.profile_dt_max = parse_double(v); }},
      {"profile.dt_growth", [](Settings& s, const std::string& v) { s.profile_dt_growth = parse_double(v); }},
      {"profile.newton_tol", [](Settings& s, const std::string& v) { s.profile_newton_tol = parse_double(v); }},
      {"profile.epsilon_reg", [](Settings& s, const std::string& v) { s.profile_epsilon_reg = parse_double(v); }},
      {"profile.lp_orders", [](Settings& s, const std::string& v) { s.lp_orders = parse_list(v); }},
      {"check.p", [](Settings& s, const std::string& v) { s.p = parse_double(v); }},
      {"check.tol", [](Settings& s, const std::string& v) { s.tol = parse_double(v); }},
      {"check.F0", [](Settings& s, const std::string& v) { s.F0 = parse_double(v); }},
      {"check.Cp", [](Settings& s, const std::string& v) { s.Cp = parse_double(v); }},
      {"check.Fp0", [](Settings& s, const std::string& v) { s.Fp0 = parse_double(v); }},
      {"check.data", [](Settings& s, const std::string& v) { s.data = parse_int(v); }},
      {"check.pairs", [](Settings& s, const std::string& v) { s.pairs = parse_int(v); }},
      {"check.include_dirac", [](Settings& s, const std::string& v) { s.include_dirac = parse_bool(v); }},
      {"check.different_diffusivity", [](Settings& s, const std::string& v) { s.different_diffusivity = parse_bool(v); }},
      {"check.times", [](Settings& s, const std::string& v) { s.times = parse_list(v); }},
      {"check.constants", [](Settings& s, const std::string& v) { s.constants = v; }},
      {"run.out", [](Settings& s, const std::string& v) { s.out = v; }},
      {"run.jobs", [](Settings& s, const std::string& v) { s.jobs = parse_int(v); }},
      {"run.seed", [](Settings& s, const std::string& v) { s.seed = parse_u64(v); }},
  };
  return table;
}

void assign(Settings& s, const std::string& key, const std::string& value) {
  const auto it = schema().find(key);
  if (it == schema().end()) {
    throw std::invalid_argument("config: unknown key '" + key + "'");
  }
  try {
    it->second(s, value);
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument("config: " + key + ": " + e.what());
  } catch (const std::out_of_range&) {
    throw std::invalid_argument("config: " + key + ": value out of range");
  }
  s.assigned.insert(key);
}

void apply_ini(Settings& s, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("config: cannot open '" + path + "'");
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find_first_of("#;");
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') {
        throw std::invalid_argument("config: line " + std::to_string(lineno) +
                                    ": unterminated section header");
      }
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty()) {
        throw std::invalid_argument("config: line " + std::to_string(lineno) +
                                    ": empty section name");
      }
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("config: line " + std::to_string(lineno) +
                                  ": expected key = value");
    }
    if (section.empty()) {
      throw std::invalid_argument("config: line " + std::to_string(lineno) +
                                  ": key outside a [section]");
    }
    assign(s, section + "." + trim(line.substr(0, eq)),
           trim(line.substr(eq + 1)));
  }
}

// ---------------------------------------------------------------------------
// Manifest: config echo + FNV-1a fingerprint of the output directory.
// ---------------------------------------------------------------------------

ordered_json settings_json(const Settings& s) {
  ordered_json j;
  j["problem"] = {{"N", s.N}, {"sigma", s.sigma}, {"m", s.m}};
  j["grid"] = {{"n", s.n}, {"L", s.L}};
  j["solver"] = {{"scheme", s.scheme},
                 {"dt_initial", s.dt_initial},
                 {"dt_growth", s.dt_growth},
                 {"dt_max", s.dt_max},
                 {"t_start", s.t_start},
                 {"t_end", s.t_end},
                 {"epsilon_reg", s.epsilon_reg},
                 {"newton_tol", s.newton_tol},
                 {"max_inner_iters", s.max_inner_iters},
                 {"anderson_depth", s.anderson_depth},
                 {"max_halvings", s.max_halvings},
                 {"extinction_threshold", s.extinction_threshold},
                 {"snapshots", s.snapshots}};
  j["datum"] = {{"kind", s.datum_kind},
                {"mass", s.mass},
                {"width", s.width},
                {"bumps", s.bumps},
                {"amplitude", s.amplitude},
                {"cap", s.cap},
                {"tail_p", s.tail_p},
                {"T", s.T},
                {"r_trunc", s.r_trunc},
                {"radius_cells", s.radius_cells},
                {"file", s.datum_file}};
  j["profile"] = {{"kind", s.profile_kind},
                  {"mass", s.profile_mass},
                  {"times", s.profile_times},
                  {"caps", s.caps},
                  {"n_bins", s.n_bins},
                  {"collapse_tol", s.collapse_tol},
                  {"enforce_collapse", s.enforce_collapse},
                  {"dirac_radius_cells", s.dirac_radius_cells},
                  {"dt_initial", s.profile_dt_initial},
                  {"dt_max", s.profile_dt_max},
                  {"dt_growth", s.profile_dt_growth},
                  {"newton_tol", s.profile_newton_tol},
                  {"epsilon_reg", s.profile_epsilon_reg},
                  {"lp_orders", s.lp_orders}};
  j["check"] = {{"p", s.p},
                {"tol", s.tol},
                {"F0", s.F0},
                {"Cp", s.Cp},
                {"Fp0", s.Fp0},
                {"data", s.data},
                {"pairs", s.pairs},
                {"include_dirac", s.include_dirac},
                {"different_diffusivity", s.different_diffusivity},
                {"times", s.times},
                {"constants", s.constants}};
  j["run"] = {{"out", s.out}, {"jobs", s.jobs}, {"seed", s.seed}};
  return j;
}

std::uint64_t fnv1a(std::uint64_t h, const char* data, std::size_t size) {
  for (std::size_t i = 0; i < size; ++i) {
    h ^= static_cast<unsigned char>(data[i]);
    h *= 1099511628211ULL;
  }
  return h;
}

constexpr std::uint64_t kFnvOffset = 1469598103934665603ULL;

std::uint64_t fnv1a_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot hash '" + path.string() + "'");
  std::uint64_t h = kFnvOffset;
  char buf[1 << 16];
  while (in.read(buf, sizeof buf) || in.gcount() > 0) {
    h = fnv1a(h, buf, static_cast<std::size_t>(in.gcount()));
  }
  return h;
}

std::string hex64(std::uint64_t h) {
  char buf[19];
  std::snprintf(buf, sizeof buf, "0x%016llx", static_cast<unsigned long long>(h));
  return buf;
}

/// Hashes every regular file under `dir` (except run_manifest.json) and
/// writes run_manifest.json with the config echo, per-file hashes, and the
/// combined fingerprint.
void write_run_manifest(const std::string& command, const Settings& s,
                        const ordered_json& resolved, const fs::path& dir) {
  std::vector<fs::path> files;
  for (const auto& entry : fs::recursive_directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    if (entry.path().filename() == "run_manifest.json") continue;
    files.push_back(fs::relative(entry.path(), dir));
  }
  std::sort(files.begin(), files.end());
  ordered_json outputs = ordered_json::array();
  std::uint64_t combined = kFnvOffset;
  for (const auto& rel : files) {
    const std::uint64_t h = fnv1a_file(dir / rel);
    const std::string name = rel.generic_string();
    combined = fnv1a(combined, name.data(), name.size());
    const std::string hx = hex64(h);
    combined = fnv1a(combined, hx.data(), hx.size());
    outputs.push_back({{"file", name}, {"fnv1a", hx}});
  }
  ordered_json man;
  man["format"] = "ffd-run-v1";
  man["command"] = command;
  man["config"] = settings_json(s);
  man["resolved"] = resolved;
  man["outputs"] = outputs;
  man["fingerprint"] = hex64(combined);
  std::ofstream out(dir / "run_manifest.json");
  out << man.dump(2) << '\n';
  if (!out) throw std::runtime_error("cannot write run_manifest.json");
  std::printf("manifest %s fingerprint %s\n",
              (dir / "run_manifest.json").string().c_str(),
              hex64(combined).c_str());
}

// ---------------------------------------------------------------------------
// Shared resolution helpers
// ---------------------------------------------------------------------------

fs::path resolve_out(const Settings& s, const std::string& sub) {
  if (!s.out.empty()) return fs::path(s.out);
  const char* env = std::getenv("FFD_OUT_DIR");
  return fs::path(env != nullptr ? env : "ffd-out") / sub;
}

ffd::SolverConfig to_solver(const Settings& s) {
  ffd::SolverConfig cfg;
  if (s.scheme == "semi_implicit") {
    cfg.scheme = ffd::TimeScheme::SemiImplicit;
  } else if (s.scheme == "explicit_oracle") {
    cfg.scheme = ffd::TimeScheme::ExplicitOracle;
  } else {
    throw std::invalid_argument(
        "solver.scheme must be semi_implicit or explicit_oracle");
  }
  cfg.dt_initial = s.dt_initial;
  cfg.dt_growth = s.dt_growth;
  if (s.dt_max > 0.0) cfg.dt_max = s.dt_max;
  cfg.t_start = s.t_start;
  cfg.t_end = s.t_end;
  if (s.epsilon_reg >= 0.0) cfg.epsilon_reg = s.epsilon_reg;
  cfg.newton_tol = s.newton_tol;
  cfg.max_inner_iters = s.max_inner_iters;
  cfg.anderson_depth = s.anderson_depth;
  cfg.max_halvings = s.max_halvings;
  cfg.extinction_threshold = s.extinction_threshold;
  cfg.snapshot_times =
      s.snapshots.empty() ? std::vector<double>{s.t_start + s.t_end} : s.snapshots;
  return cfg;
}

/// Suite grids depend on the dimension; explicit grid.n / grid.L win.
ffd::Grid resolve_grid(const Settings& s, int n1, double L1, int n2, double L2,
                       int n3, double L3) {
  int n_def = s.N == 1 ? n1 : (s.N == 2 ? n2 : n3);
  double L_def = s.N == 1 ? L1 : (s.N == 2 ? L2 : L3);
  return ffd::Grid{s.N, s.is_set("grid.n") ? s.n : n_def,
                   s.is_set("grid.L") ? s.L : L_def};
}

double resolve_tol(const Settings& s, double fallback) {
  return s.tol >= 0.0 ? s.tol : fallback;
}

std::optional<ffd::ConstantsManifest> load_constants(const Settings& s) {
  if (s.constants.empty()) return std::nullopt;
  return ffd::ConstantsManifest::load(s.constants);
}

double resolve_F0(const Settings& s, const ffd::ProblemParams& params) {
  if (s.F0 > 0.0) return s.F0;
  if (const auto man = load_constants(s)) {
    const auto* e = man->find("barenblatt", params);
    if (e == nullptr) {
      throw std::invalid_argument(
          "constants manifest has no barenblatt entry for these parameters");
    }
    return e->F0;
  }
  return 0.0;  // m = 1 falls back to the closed form inside the suite
}

/// L^p norm of the unit-mass sigma = 1, m = 1 profile (closed form), used
/// when no manifest is supplied for the linear flow.
double poisson_lp_norm(int N, double p) {
  const double q = 0.5 * (N + 1) * p;
  const double log_c =
      std::lgamma(0.5 * (N + 1)) - 0.5 * (N + 1) * std::log(M_PI);
  const double log_int = 0.5 * N * std::log(M_PI) + std::lgamma(q - 0.5 * N) -
                         std::lgamma(q);
  return std::exp(log_c + log_int / p);
}

double resolve_Cp(const Settings& s, const ffd::ProblemParams& params) {
  if (s.Cp > 0.0) return s.Cp;
  if (const auto man = load_constants(s)) {
    const auto* e = man->find("barenblatt", params);
    if (e != nullptr) {
      for (const auto& [order, norm] : e->lp_norms) {
        if (std::abs(order - s.p) <= 1e-12) return norm;
      }
    }
    throw std::invalid_argument(
        "constants manifest has no barenblatt L^p norm for this order");
  }
  if (params.m == 1.0 && params.sigma == 1.0) return poisson_lp_norm(params.N, s.p);
  throw std::invalid_argument(
      "lp suite needs --Cp or --constants (no closed form for these parameters)");
}

double resolve_Fp0(const Settings& s, const ffd::ProblemParams& params) {
  if (s.Fp0 > 0.0) return s.Fp0;
  if (const auto man = load_constants(s)) {
    const auto* e = man->find("marcinkiewicz", params, s.p);
    if (e == nullptr) {
      throw std::invalid_argument(
          "constants manifest has no marcinkiewicz entry for these parameters");
    }
    return e->F0;
  }
  throw std::invalid_argument("marcinkiewicz suite needs --Fp0 or --constants");
}

// ---------------------------------------------------------------------------
// Subcommand runners
// ---------------------------------------------------------------------------

int run_kappa(const Settings& s, double alpha) {
  const double k = ffd::kappa(alpha, s.N, s.sigma);
  const double mirror = ffd::kappa(s.N - s.sigma - alpha, s.N, s.sigma);
  std::printf("alpha        %.6f\n", alpha);
  std::printf("kappa        %.6f\n", k);
  std::printf("kappa_mirror %.6f\n", mirror);
  return 0;
}

void print_row(const char* name, const std::optional<double>& v) {
  if (v) {
    std::printf("%-22s %.6f\n", name, *v);
  } else {
    std::printf("%-22s n/a\n", name);
  }
}

int run_exponents(const Settings& s) {
  const ffd::ProblemParams params{s.N, s.sigma, s.m};
  params.validate();
  const std::optional<double> p =
      s.is_set("check.p") ? std::optional<double>(s.p) : std::nullopt;
  const ffd::ExponentSet e = ffd::exponent_set(params, p);
  std::printf("%-22s %d\n", "N", s.N);
  print_row("sigma", s.sigma);
  print_row("m", s.m);
  print_row("m_c", e.m_c);
  print_row("m_one", e.m_one);
  print_row("p_tilde", e.p_tilde);
  print_row("beta", e.beta);
  print_row("alpha", e.alpha);
  if (p) {
    print_row("p", e.p);
    print_row("beta_p", e.beta_p);
    print_row("alpha_p", e.alpha_p);
  }
  if (s.m < e.m_c) {
    const ffd::ExtinctionCoefficients ext = ffd::extinction_coefficients(params);
    print_row("extinction_alpha_e", ext.alpha_e);
    print_row("extinction_kappa", ext.kappa_value);
    print_row("extinction_C1", ext.C1);
    print_row("extinction_d", ext.d);
  }
  return 0;
}

ffd::Field build_datum(const Settings& s, ffd::Grid& grid,
                       const ffd::ProblemParams& params) {
  if (s.datum_kind == "gaussian") {
    const double inv_w2 = 1.0 / (s.width * s.width);
    const int N = grid.N;
    ffd::Field f = ffd::sample_field(grid, [inv_w2, N](const std::array<double, 3>& x) {
      double q = 0.0;
      for (int d = 0; d < N; ++d) q += x[d] * x[d];
      return std::exp(-q * inv_w2);
    });
    const double scale = s.mass / f.mass();
    for (auto& v : f.values) v *= scale;
    return f;
  }
  if (s.datum_kind == "bumps") {
    return ffd::suites::random_bump_field(grid, s.seed, s.bumps);
  }
  if (s.datum_kind == "power_capped") {
    const double tail_power = static_cast<double>(grid.N) / s.tail_p;
    ffd::Field f(grid);
    for (std::size_t c = 0; c < grid.size(); ++c) {
      f.values[c] =
          std::min(s.amplitude * std::pow(grid.radius(c), -tail_power), s.cap);
    }
    return f;
  }
  if (s.datum_kind == "extinction_truncated") {
    return ffd::suites::truncated_extinction_field(grid, params, s.T, s.r_trunc);
  }
  if (s.datum_kind == "dirac") {
    return ffd::suites::dirac_ball_field(grid, s.radius_cells);
  }
  if (s.datum_kind == "file") {
    if (s.datum_file.empty()) {
      throw std::invalid_argument("datum.kind = file requires datum.file");
    }
    ffd::Field f = ffd::read_field_binary(s.datum_file);
    if (f.grid.N != grid.N) {
      throw std::invalid_argument("datum file dimension differs from problem.N");
    }
    grid = f.grid;  // the file defines the discretization
    return f;
  }
  throw std::invalid_argument(
      "datum.kind must be gaussian | bumps | power_capped | "
      "extinction_truncated | dirac | file");
}

int run_simulate(const Settings& s) {
  const ffd::ProblemParams params{s.N, s.sigma, s.m};
  params.validate();
  ffd::Grid grid{s.N, s.n, s.L};
  grid.validate();
  ffd::Field u0 = build_datum(s, grid, params);
  const ffd::SolverConfig cfg = to_solver(s);
  const ffd::Trajectory traj =
      ffd::evolve(u0, ffd::power_nonlinearity(s.m), params, cfg);

  const fs::path dir = resolve_out(s, "simulate");
  fs::create_directories(dir);
  ffd::write_trajectory(traj, cfg, dir.string());

  ordered_json resolved;
  resolved["grid"] = {{"N", grid.N}, {"n", grid.n}, {"L", grid.L}};
  resolved["initial_mass"] = traj.initial_mass;
  resolved["initial_sup"] = traj.initial_sup;
  resolved["final_time"] = traj.final_time;
  resolved["accepted_steps"] = traj.accepted_steps;
  resolved["rejected_steps"] = traj.rejected_steps;
  resolved["total_inner_iterations"] = traj.total_inner_iterations;
  resolved["snapshots"] = traj.snapshots.size();
  resolved["extinction_time"] =
      traj.extinction_time ? ordered_json(*traj.extinction_time) : ordered_json(nullptr);
  write_run_manifest("simulate", s, resolved, dir);

  std::printf("trajectory %s\n", dir.string().c_str());
  std::printf("steps      %d accepted, %d rejected\n", traj.accepted_steps,
              traj.rejected_steps);
  std::printf("final      t = %.6f, sup = %.6g, mass = %.6g\n", traj.final_time,
              traj.final_state.sup_norm(), traj.final_state.mass());
  if (traj.extinction_time) {
    std::printf("extinction t = %.6f\n", *traj.extinction_time);
  }
  return 0;
}

int run_barenblatt(const Settings& s) {
  const ffd::ProblemParams params{s.N, s.sigma, s.m};
  params.validate();
  const ffd::Grid grid{s.N, s.n, s.L};
  grid.validate();

  ffd::ProfileOptions opts;
  if (!s.profile_times.empty()) opts.times = s.profile_times;
  if (!s.caps.empty()) opts.caps = s.caps;
  opts.dt_initial = s.profile_dt_initial;
  opts.dt_max = s.profile_dt_max;
  opts.dt_growth = s.profile_dt_growth;
  opts.newton_tol = s.profile_newton_tol;
  if (s.profile_epsilon_reg >= 0.0) opts.epsilon_reg = s.profile_epsilon_reg;
  opts.n_bins = s.n_bins;
  opts.collapse_tolerance = s.collapse_tol;
  opts.enforce_collapse = s.enforce_collapse;
  opts.dirac_radius_cells = s.dirac_radius_cells;

  ffd::SelfSimilarProfile prof;
  if (s.profile_kind == "barenblatt") {
    prof = ffd::barenblatt_profile(params, s.profile_mass, grid, opts);
  } else if (s.profile_kind == "marcinkiewicz") {
    prof = ffd::marcinkiewicz_profile(params, s.p, s.profile_mass, grid, opts);
  } else {
    throw std::invalid_argument(
        "profile.kind must be barenblatt or marcinkiewicz");
  }

  const fs::path dir = resolve_out(s, "barenblatt");
  fs::create_directories(dir);
  ffd::write_profile(prof, (dir / "profile.csv").string(),
                     (dir / "profile.json").string());

  const std::string cpath =
      s.constants.empty() ? (dir / "constants.json").string() : s.constants;
  ffd::ConstantsManifest man;
  if (fs::exists(cpath)) man = ffd::ConstantsManifest::load(cpath);
  std::erase_if(man.entries, [&](const ffd::ConstantsManifest::Entry& e) {
    return e.kind == prof.kind && e.params.N == params.N &&
           e.params.sigma == params.sigma && e.params.m == params.m &&
           e.p == prof.p;
  });
  man.add_profile(prof, s.lp_orders.empty() ? std::vector<double>{2.0} : s.lp_orders);
  man.save(cpath);
  const auto* entry = man.find(prof.kind, params, prof.p);

  ordered_json resolved;
  resolved["kind"] = prof.kind;
  resolved["quantity"] = prof.quantity;
  resolved["alpha"] = prof.alpha;
  resolved["beta"] = prof.beta;
  resolved["collapse_error"] = prof.collapse_error;
  resolved["cap_sensitivity"] = prof.cap_sensitivity;
  resolved["tail_exponent"] = prof.tail.exponent;
  resolved["xi_max"] = prof.xi_max;
  resolved["F0_unit"] = entry->F0;
  resolved["lp_norms_unit"] = entry->lp_norms;
  resolved["constants"] = cpath;
  write_run_manifest("barenblatt", s, resolved, dir);

  std::printf("profile        %s\n", (dir / "profile.csv").string().c_str());
  std::printf("kind           %s\n", prof.kind.c_str());
  std::printf("F0 (unit)      %.10f\n", entry->F0);
  for (const auto& [order, norm] : entry->lp_norms) {
    std::printf("L^%-12.6g %.10f\n", order, norm);
  }
  std::printf("collapse_error %.3e\n", prof.collapse_error);
  std::printf("tail_exponent  %.6f\n", prof.tail.exponent);
  std::printf("constants      %s\n", cpath.c_str());
  return 0;
}

int run_rearrange(const Settings& s, const std::string& in_path) {
  const ffd::Field f = ffd::read_field_binary(in_path);
  const ffd::RadialProfile prof = ffd::decreasing_rearrangement(f);

  const fs::path dir = resolve_out(s, "rearrange");
  fs::create_directories(dir);

  {
    std::ofstream csv(dir / "profile.csv");
    csv << "j,radius,measure,value\n";
    char buf[128];
    for (std::size_t j = 0; j < prof.values.size(); ++j) {
      std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.17g\n", j,
                    prof.midpoint_radius(j), prof.midpoint_measure(j),
                    prof.values[j]);
      csv << buf;
    }
    if (!csv) throw std::runtime_error("cannot write profile.csv");
  }

  const double p = s.p;
  const double coeff =
      ffd::marcinkiewicz_gauge(prof, p, ffd::MarcinkiewiczConvention::Coefficient);
  const double sup_level =
      ffd::marcinkiewicz_gauge(prof, p, ffd::MarcinkiewiczConvention::SupLevel);
  const std::optional<double> integral =
      p > 1.0 ? std::optional<double>(ffd::marcinkiewicz_gauge(
                    prof, p, ffd::MarcinkiewiczConvention::Integral))
              : std::nullopt;
  const double lorentz_pp = ffd::lorentz_norm(prof, p, p);
  const double lorentz_weak =
      ffd::lorentz_norm(prof, p, std::numeric_limits<double>::infinity());

  ordered_json gauges;
  gauges["p"] = p;
  gauges["mass"] = f.mass();
  gauges["sup"] = f.sup_norm();
  gauges["coefficient"] = coeff;
  gauges["sup_level"] = sup_level;
  gauges["integral"] = integral ? ordered_json(*integral) : ordered_json(nullptr);
  gauges["lorentz_pp"] = lorentz_pp;
  gauges["lorentz_weak"] = lorentz_weak;
  {
    std::ofstream out(dir / "gauges.json");
    out << gauges.dump(2) << '\n';
    if (!out) throw std::runtime_error("cannot write gauges.json");
  }

  ordered_json resolved;
  resolved["input"] = in_path;
  resolved["grid"] = {{"N", f.grid.N}, {"n", f.grid.n}, {"L", f.grid.L}};
  resolved["gauges"] = gauges;
  write_run_manifest("rearrange", s, resolved, dir);

  std::printf("profile      %s\n", (dir / "profile.csv").string().c_str());
  std::printf("mass         %.10g\n", f.mass());
  std::printf("sup          %.10g\n", f.sup_norm());
  std::printf("p            %.6g\n", p);
  std::printf("coefficient  %.10g\n", coeff);
  std::printf("sup_level    %.10g\n", sup_level);
  if (integral) std::printf("integral     %.10g\n", *integral);
  std::printf("lorentz_pp   %.10g\n", lorentz_pp);
  std::printf("lorentz_weak %.10g\n", lorentz_weak);
  return 0;
}

ffd::SolverConfig suite_solver(const Settings& s) {
  ffd::SolverConfig cfg = to_solver(s);
  // Suites manage their own snapshot schedules unless one is forced.
  if (!s.is_set("solver.snapshots")) cfg.snapshot_times.clear();
  return cfg;
}

int run_verify(const Settings& s, const std::string& suite) {
  namespace su = ffd::suites;
  const ffd::ProblemParams params{s.N, s.sigma, s.m};
  su::SuiteResult result;
  ordered_json resolved;
  resolved["suite"] = suite;

  if (suite == "smoothing" || suite == "lp") {
    su::SmoothingSuiteOptions opt;
    opt.params = params;
    opt.grid = resolve_grid(s, 2048, 40.0, 512, 20.0, 128, 10.0);
    opt.seed = s.seed;
    opt.data = s.data;
    opt.include_dirac = s.include_dirac;
    opt.dirac_radius_cells = s.dirac_radius_cells;
    if (!s.times.empty()) opt.times = s.times;
    opt.mode = suite == "lp" ? su::SmoothingMode::Lp : su::SmoothingMode::L1;
    opt.tol = resolve_tol(s, 0.02);
    opt.solver = suite_solver(s);
    opt.jobs = s.jobs;
    if (opt.mode == su::SmoothingMode::L1) {
      opt.F0 = resolve_F0(s, params);
      resolved["F0"] = opt.F0 > 0.0 ? opt.F0 : ffd::best_constant_linear(s.N);
    } else {
      opt.p = s.p;
      opt.Cp = resolve_Cp(s, params);
      opt.F0 = 1.0;  // unused by the Lp check
      resolved["Cp"] = opt.Cp;
    }
    resolved["grid"] = {{"n", opt.grid.n}, {"L", opt.grid.L}};
    resolved["times"] = opt.times;
    resolved["tol"] = opt.tol;
    resolved["seed"] = opt.seed;
    result = su::smoothing_suite(opt);
  } else if (suite == "marcinkiewicz") {
    su::MarcinkiewiczSuiteOptions opt;
    opt.params = params;
    opt.p = s.p;
    opt.Fp0 = resolve_Fp0(s, params);
    opt.grid = resolve_grid(s, 2048, 20.0, 512, 16.0, 128, 8.0);
    opt.seed = s.seed;
    opt.data = s.data;
    if (!s.times.empty()) opt.times = s.times;
    opt.tol = resolve_tol(s, 0.05);
    opt.solver = suite_solver(s);
    opt.jobs = s.jobs;
    resolved["Fp0"] = opt.Fp0;
    resolved["p"] = opt.p;
    resolved["grid"] = {{"n", opt.grid.n}, {"L", opt.grid.L}};
    resolved["times"] = opt.times;
    resolved["tol"] = opt.tol;
    resolved["seed"] = opt.seed;
    result = su::marcinkiewicz_suite(opt);
  } else if (suite == "concentration") {
    su::ConcentrationSuiteOptions opt;
    opt.N = s.N;
    opt.sigma = s.sigma;
    opt.grid = resolve_grid(s, 1024, 20.0, 256, 12.0, 64, 6.0);
    opt.seed = s.seed;
    opt.pairs = s.pairs;
    if (!s.times.empty()) opt.times = s.times;
    opt.tol = resolve_tol(s, 1e-3);
    opt.different_diffusivity = s.different_diffusivity;
    opt.solver = suite_solver(s);
    opt.jobs = s.jobs;
    resolved["pairs"] = opt.pairs;
    resolved["grid"] = {{"n", opt.grid.n}, {"L", opt.grid.L}};
    resolved["times"] = opt.times;
    resolved["tol"] = opt.tol;
    resolved["seed"] = opt.seed;
    resolved["different_diffusivity"] = opt.different_diffusivity;
    result = su::concentration_suite(opt);
  } else if (suite == "extinction" || suite == "general") {
    const double t_end = s.is_set("solver.t_end") ? s.t_end : 1.2;
    if (suite == "extinction") {
      su::ExtinctionSuiteOptions opt;
      opt.params = params;
      opt.grid = resolve_grid(s, 2048, 2.0, 128, 2.0, 64, 2.0);
      opt.T = s.T;
      opt.r_trunc = s.r_trunc;
      opt.t_end = t_end;
      opt.tol = resolve_tol(s, 0.05);
      opt.solver = suite_solver(s);
      resolved["grid"] = {{"n", opt.grid.n}, {"L", opt.grid.L}};
      resolved["T"] = opt.T;
      resolved["r_trunc"] = opt.r_trunc;
      resolved["t_end"] = opt.t_end;
      resolved["tol"] = opt.tol;
      result = su::extinction_suite(opt);
    } else {
      su::GeneralSuiteOptions opt;
      opt.params = params;
      opt.grid = resolve_grid(s, 2048, 2.0, 128, 2.0, 64, 2.0);
      opt.T = s.T;
      opt.r_trunc = s.r_trunc;
      opt.t_end = t_end;
      opt.tol = resolve_tol(s, 0.05);
      opt.solver = suite_solver(s);
      const double m_c = (s.N - s.sigma) / s.N;
      const double f0 = s.m < m_c ? 0.0 : resolve_F0(s, params);
      opt.F0 = f0 > 0.0 ? f0 : (s.m == 1.0 ? ffd::best_constant_linear(s.N) : 1.0);
      resolved["grid"] = {{"n", opt.grid.n}, {"L", opt.grid.L}};
      resolved["T"] = opt.T;
      resolved["r_trunc"] = opt.r_trunc;
      resolved["t_end"] = opt.t_end;
      resolved["tol"] = opt.tol;
      if (s.m >= m_c) resolved["F0"] = opt.F0;
      result = su::general_suite(opt);
    }
  } else {
    throw std::invalid_argument("unknown suite '" + suite + "'");
  }

  const fs::path dir = resolve_out(s, "verify-" + suite);
  fs::create_directories(dir);

  ordered_json summary_json = ordered_json::array();
  std::ofstream csv(dir / "summary.csv");
  csv << "theorem,label,N,sigma,m,p,margin,pass\n";
  int passed = 0;
  char buf[256];
  for (const auto& lr : result.reports) {
    const ffd::EstimateReport& r = lr.report;
    {
      std::ofstream rep(dir / ("report_" + lr.label + ".json"));
      rep << ffd::report_to_json(r) << '\n';
      if (!rep) throw std::runtime_error("cannot write report JSON");
    }
    const std::string theorem = ffd::theorem_tag_name(r.tag);
    std::snprintf(buf, sizeof buf, "%s,%s,%d,%.17g,%.17g,", theorem.c_str(),
                  lr.label.c_str(), r.params.N, r.params.sigma, r.params.m);
    csv << buf;
    if (r.p) {
      std::snprintf(buf, sizeof buf, "%.17g", *r.p);
      csv << buf;
    }
    std::snprintf(buf, sizeof buf, ",%.17g,%s\n", r.worst_margin,
                  r.pass ? "true" : "false");
    csv << buf;
    if (r.pass) ++passed;
    summary_json.push_back({{"label", lr.label},
                            {"theorem", theorem},
                            {"margin", r.worst_margin},
                            {"pass", r.pass},
                            {"conclusive", r.conclusive}});
    std::printf("[%s] %-24s %-20s margin %.4f%s\n", r.pass ? "pass" : "FAIL",
                theorem.c_str(), lr.label.c_str(), r.worst_margin,
                r.conclusive ? "" : " (inconclusive)");
  }
  csv.flush();
  if (!csv) throw std::runtime_error("cannot write summary.csv");

  resolved["reports"] = summary_json;
  write_run_manifest("verify", s, resolved, dir);

  std::printf("suite %s: %d/%zu pass\n", suite.c_str(), passed,
              result.reports.size());
  return result.all_pass() ? 0 : 1;
}

// ---------------------------------------------------------------------------
// Flag plumbing: every override is a (section.key, raw value) pair applied
// through the same schema as the config file.
// ---------------------------------------------------------------------------

using Pending = std::vector<std::pair<std::string, std::string>>;

void add_key_option(CLI::App* cmd, Pending& pending, const std::string& flag,
                    const std::string& key, const std::string& desc) {
  cmd->add_option_function<std::string>(
      flag,
      [&pending, key](const std::string& v) { pending.emplace_back(key, v); },
      desc);
}

void add_key_switch(CLI::App* cmd, Pending& pending, const std::string& flag,
                    const std::string& key, const std::string& value,
                    const std::string& desc) {
  cmd->add_flag_function(
      flag,
      [&pending, key, value](std::int64_t count) {
        if (count > 0) pending.emplace_back(key, value);
      },
      desc);
}

void add_problem_flags(CLI::App* cmd, Pending& p) {
  add_key_option(cmd, p, "--N", "problem.N", "space dimension (1, 2 or 3)");
  add_key_option(cmd, p, "--sigma", "problem.sigma", "fractional order in (0,2)");
  add_key_option(cmd, p, "--m", "problem.m", "nonlinearity exponent in (0,1]");
}

void add_grid_flags(CLI::App* cmd, Pending& p) {
  add_key_option(cmd, p, "--n", "grid.n", "grid points per axis");
  add_key_option(cmd, p, "--L", "grid.L", "box half-width");
}

void add_solver_flags(CLI::App* cmd, Pending& p) {
  add_key_option(cmd, p, "--scheme", "solver.scheme",
                 "semi_implicit | explicit_oracle");
  add_key_option(cmd, p, "--dt", "solver.dt_initial", "initial step size");
  add_key_option(cmd, p, "--dt-growth", "solver.dt_growth", "step growth factor");
  add_key_option(cmd, p, "--dt-max", "solver.dt_max", "step cap (<= 0: none)");
  add_key_option(cmd, p, "--t-start", "solver.t_start", "absolute start time");
  add_key_option(cmd, p, "--t-end", "solver.t_end", "integration horizon");
  add_key_option(cmd, p, "--epsilon", "solver.epsilon_reg",
                 "diffusivity regularization width (< 0: solver default)");
  add_key_option(cmd, p, "--newton-tol", "solver.newton_tol",
                 "inner-iteration tolerance");
  add_key_option(cmd, p, "--max-inner", "solver.max_inner_iters",
                 "inner-iteration cap");
  add_key_option(cmd, p, "--anderson", "solver.anderson_depth",
                 "Anderson acceleration depth (0: off)");
  add_key_option(cmd, p, "--max-halvings", "solver.max_halvings",
                 "step halvings before giving up");
  add_key_option(cmd, p, "--extinction-threshold", "solver.extinction_threshold",
                 "sup-norm fraction declaring extinction");
  add_key_option(cmd, p, "--snapshots", "solver.snapshots",
                 "comma-separated absolute snapshot times");
}

void add_run_flags(CLI::App* cmd, Pending& p, bool with_jobs = true) {
  add_key_option(cmd, p, "--out", "run.out",
                 "output directory (default: $FFD_OUT_DIR/<command>)");
  if (with_jobs) {
    add_key_option(cmd, p, "--jobs", "run.jobs", "worker threads for suites");
  }
  add_key_option(cmd, p, "--seed", "run.seed", "random seed");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ffd — numerical laboratory for fractional fast diffusion"};
  app.require_subcommand(1);
  Settings s;
  Pending pending;
  std::string config_path;
  double alpha = 0.0;
  std::string rearrange_in;
  std::string verify_suite;

  CLI::App* c_kappa =
      app.add_subcommand("kappa", "evaluate kappa(alpha) and its mirror value");
  add_problem_flags(c_kappa, pending);
  c_kappa->add_option("--alpha", alpha, "power-law exponent in (0, N - sigma)")
      ->required();

  CLI::App* c_exp =
      app.add_subcommand("exponents", "print the critical-exponent table");
  add_problem_flags(c_exp, pending);
  add_key_option(c_exp, pending, "--p", "check.p", "weak-norm order");

  CLI::App* c_sim =
      app.add_subcommand("simulate", "evolve a datum and write the trajectory");
  c_sim->add_option("--config", config_path, "INI-style configuration file");
  add_problem_flags(c_sim, pending);
  add_grid_flags(c_sim, pending);
  add_solver_flags(c_sim, pending);
  add_key_option(c_sim, pending, "--datum", "datum.kind",
                 "gaussian | bumps | power_capped | extinction_truncated | "
                 "dirac | file");
  add_key_option(c_sim, pending, "--mass", "datum.mass", "gaussian datum mass");
  add_key_option(c_sim, pending, "--width", "datum.width", "gaussian width");
  add_key_option(c_sim, pending, "--bumps", "datum.bumps", "number of bumps");
  add_key_option(c_sim, pending, "--amplitude", "datum.amplitude",
                 "power datum amplitude");
  add_key_option(c_sim, pending, "--cap", "datum.cap", "power datum cap");
  add_key_option(c_sim, pending, "--tail-p", "datum.tail_p",
                 "power datum order: |x|^{-N/p}");
  add_key_option(c_sim, pending, "--T", "datum.T",
                 "extinction time of the explicit datum");
  add_key_option(c_sim, pending, "--r-trunc", "datum.r_trunc",
                 "truncation radius of the explicit datum");
  add_key_option(c_sim, pending, "--radius-cells", "datum.radius_cells",
                 "dirac ball radius in cells");
  add_key_option(c_sim, pending, "--file", "datum.file", "field binary path");
  add_run_flags(c_sim, pending, false);

  CLI::App* c_bar = app.add_subcommand(
      "barenblatt", "measure a self-similar profile and its constants");
  c_bar->add_option("--config", config_path, "INI-style configuration file");
  add_problem_flags(c_bar, pending);
  add_grid_flags(c_bar, pending);
  add_key_option(c_bar, pending, "--kind", "profile.kind",
                 "barenblatt | marcinkiewicz");
  add_key_option(c_bar, pending, "--p", "check.p",
                 "weak-norm order (marcinkiewicz profiles)");
  add_key_option(c_bar, pending, "--mass", "profile.mass",
                 "datum mass (or weak-norm gauge)");
  add_key_option(c_bar, pending, "--times", "profile.times",
                 "comma-separated collapse times");
  add_key_option(c_bar, pending, "--caps", "profile.caps",
                 "comma-separated datum caps (marcinkiewicz)");
  add_key_option(c_bar, pending, "--n-bins", "profile.n_bins",
                 "radial profile bins");
  add_key_option(c_bar, pending, "--collapse-tol", "profile.collapse_tol",
                 "collapse distance tolerance");
  add_key_switch(c_bar, pending, "--no-enforce-collapse",
                 "profile.enforce_collapse", "false",
                 "report instead of rejecting a failed collapse");
  add_key_option(c_bar, pending, "--dirac-radius", "profile.dirac_radius_cells",
                 "initial ball radius in cells");
  add_key_option(c_bar, pending, "--dt", "profile.dt_initial",
                 "initial step size");
  add_key_option(c_bar, pending, "--dt-max", "profile.dt_max", "step cap");
  add_key_option(c_bar, pending, "--dt-growth", "profile.dt_growth",
                 "step growth factor");
  add_key_option(c_bar, pending, "--newton-tol", "profile.newton_tol",
                 "inner-iteration tolerance");
  add_key_option(c_bar, pending, "--epsilon", "profile.epsilon_reg",
                 "regularization width (< 0: solver default)");
  add_key_option(c_bar, pending, "--lp-orders", "profile.lp_orders",
                 "comma-separated manifest norm orders");
  add_key_option(c_bar, pending, "--constants", "check.constants",
                 "constants manifest to update");
  add_run_flags(c_bar, pending, false);

  CLI::App* c_rea = app.add_subcommand(
      "rearrange", "decreasing radial profile and gauges of a field file");
  c_rea->add_option("--in", rearrange_in, "field binary file")
      ->required()
      ->check(CLI::ExistingFile);
  add_key_option(c_rea, pending, "--p", "check.p", "weak-norm order");
  add_run_flags(c_rea, pending, false);

  CLI::App* c_ver =
      app.add_subcommand("verify", "run an estimate suite and write reports");
  c_ver
      ->add_option("suite", verify_suite,
                   "smoothing | lp | marcinkiewicz | concentration | "
                   "extinction | general")
      ->required()
      ->check(CLI::IsMember({"smoothing", "lp", "marcinkiewicz",
                             "concentration", "extinction", "general"}));
  c_ver->add_option("--config", config_path, "INI-style configuration file");
  add_problem_flags(c_ver, pending);
  add_grid_flags(c_ver, pending);
  add_solver_flags(c_ver, pending);
  add_key_option(c_ver, pending, "--p", "check.p", "weak / Lebesgue norm order");
  add_key_option(c_ver, pending, "--tol", "check.tol", "margin tolerance");
  add_key_option(c_ver, pending, "--F0", "check.F0",
                 "unit-mass central profile value");
  add_key_option(c_ver, pending, "--Cp", "check.Cp", "unit-mass L^p norm");
  add_key_option(c_ver, pending, "--Fp0", "check.Fp0",
                 "unit-gauge central profile value");
  add_key_option(c_ver, pending, "--data", "check.data", "data per suite");
  add_key_option(c_ver, pending, "--pairs", "check.pairs",
                 "concentration pairs");
  add_key_option(c_ver, pending, "--times", "check.times",
                 "comma-separated check times");
  add_key_switch(c_ver, pending, "--include-dirac", "check.include_dirac",
                 "true", "add the near-Dirac attainment datum");
  add_key_switch(c_ver, pending, "--different-diffusivity",
                 "check.different_diffusivity", "true",
                 "compare two nonlinearities ordered by diffusivity");
  add_key_option(c_ver, pending, "--constants", "check.constants",
                 "constants manifest for F0 / Cp / Fp0 lookups");
  add_key_option(c_ver, pending, "--T", "datum.T",
                 "extinction time of the explicit datum");
  add_key_option(c_ver, pending, "--r-trunc", "datum.r_trunc",
                 "truncation radius of the explicit datum");
  add_run_flags(c_ver, pending);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (!config_path.empty()) apply_ini(s, config_path);
    for (const auto& [key, value] : pending) assign(s, key, value);

    if (app.got_subcommand(c_kappa)) return run_kappa(s, alpha);
    if (app.got_subcommand(c_exp)) return run_exponents(s);
    if (app.got_subcommand(c_sim)) return run_simulate(s);
    if (app.got_subcommand(c_bar)) return run_barenblatt(s);
    if (app.got_subcommand(c_rea)) return run_rearrange(s, rearrange_in);
    if (app.got_subcommand(c_ver)) return run_verify(s, verify_suite);
    std::fprintf(stderr, "error: no subcommand\n");
    return 2;
  } catch (const std::domain_error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::out_of_range& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "solver error: %s\n", e.what());
    return 3;
  }
}
