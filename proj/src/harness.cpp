#include "adisc/harness.hpp"

#include "adisc/parallel.hpp"
#include "adisc/rng.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

namespace adisc {

namespace fs = std::filesystem;

namespace {

// ---------------------------------------------------------------- config reading

[[noreturn]] void config_error(const std::string& path, const std::string& msg) {
  throw Error(ErrorKind::ConfigError, path + ": " + msg);
}

void check_keys(const Json& obj, const std::set<std::string>& allowed, const std::string& path) {
  if (!obj.is_object()) config_error(path, "expected an object");
  for (const auto& [key, _] : obj.items()) {
    if (!allowed.count(key)) config_error(path + "." + key, "unknown key");
  }
}

const Json& section(const Json& obj, const char* key) {
  static const Json empty = Json::object();
  auto it = obj.find(key);
  return it == obj.end() ? empty : *it;
}

double get_number(const Json& obj, const char* key, double def, const std::string& path) {
  auto it = obj.find(key);
  if (it == obj.end()) return def;
  if (!it->is_number()) config_error(path + "." + key, "expected a number");
  const double x = it->get<double>();
  if (!std::isfinite(x)) config_error(path + "." + key, "must be finite");
  return x;
}

double get_positive(const Json& obj, const char* key, double def, const std::string& path) {
  const double x = get_number(obj, key, def, path);
  if (!(x > 0.0)) config_error(path + "." + key, "must be positive");
  return x;
}

int get_int(const Json& obj, const char* key, int def, const std::string& path, int lo = 0) {
  auto it = obj.find(key);
  if (it == obj.end()) return def;
  if (!it->is_number_integer()) config_error(path + "." + key, "expected an integer");
  const long long x = it->get<long long>();
  if (x < lo || x > std::numeric_limits<int>::max()) {
    config_error(path + "." + key, "must be an integer >= " + std::to_string(lo));
  }
  return static_cast<int>(x);
}

bool get_bool(const Json& obj, const char* key, bool def, const std::string& path) {
  auto it = obj.find(key);
  if (it == obj.end()) return def;
  if (!it->is_boolean()) config_error(path + "." + key, "expected a boolean");
  return it->get<bool>();
}

std::string get_string(const Json& obj, const char* key, const std::string& def,
                       const std::string& path) {
  auto it = obj.find(key);
  if (it == obj.end()) return def;
  if (!it->is_string()) config_error(path + "." + key, "expected a string");
  return it->get<std::string>();
}

Vec read_vec(const Json& j, int size, const std::string& path) {
  if (!j.is_array()) config_error(path, "expected an array");
  if (size >= 0 && static_cast<int>(j.size()) != size) {
    config_error(path, "expected " + std::to_string(size) + " entries");
  }
  Vec v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) config_error(path + "[" + std::to_string(i) + "]", "expected a number");
    v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  }
  return v;
}

Complex read_complex(const Json& j, const std::string& path) {
  if (j.is_number()) return Complex(j.get<double>(), 0.0);
  const Vec v = read_vec(j, 2, path);
  return Complex(v[0], v[1]);
}

Polynomial read_polynomial(const Json& terms, int n_vars, const std::string& path) {
  if (!terms.is_array()) config_error(path, "expected a list of {multi_index, coeff} terms");
  Polynomial p(n_vars);
  for (std::size_t k = 0; k < terms.size(); ++k) {
    const std::string tp = path + "[" + std::to_string(k) + "]";
    const Json& t = terms[k];
    check_keys(t, {"multi_index", "coeff"}, tp);
    if (!t.contains("multi_index") || !t.contains("coeff")) {
      config_error(tp, "term needs multi_index and coeff");
    }
    const Json& mi = t["multi_index"];
    if (!mi.is_array() || static_cast<int>(mi.size()) != n_vars) {
      config_error(tp + ".multi_index", "expected " + std::to_string(n_vars) + " exponents");
    }
    MultiIndex e;
    for (const Json& x : mi) {
      if (!x.is_number_integer() || x.get<int>() < 0) {
        config_error(tp + ".multi_index", "exponents must be non-negative integers");
      }
      e.push_back(x.get<int>());
    }
    if (!t["coeff"].is_number()) config_error(tp + ".coeff", "expected a number");
    p.add_term(e, t["coeff"].get<double>());
  }
  return p;
}

Json vec_json(const Vec& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Json params_json(const DiscParams& p) { return Json{{"c", vec_json(p.c)}, {"t", vec_json(p.t)}}; }

Json cmat_json(const CMat& A) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < A.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index j = 0; j < A.cols(); ++j) row.push_back({A(i, j).real(), A(i, j).imag()});
    rows.push_back(row);
  }
  return rows;
}

Json mat_json(const Mat& A) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < A.rows(); ++i) rows.push_back(vec_json(A.row(i).transpose()));
  return rows;
}

// JSON cannot hold inf/nan; they are written as null.
Json num(double x) { return std::isfinite(x) ? Json(x) : Json(nullptr); }

PshTestFn read_fixture(const Json& spec, int n, const std::string& path) {
  if (!spec.is_object()) config_error(path, "expected an object");
  const std::string kind = get_string(spec, "kind", "", path);
  const std::string name = get_string(spec, "name", kind, path);
  try {
    if (kind == "constant") {
      check_keys(spec, {"name", "kind", "value", "radius"}, path);
      return PshTestFn::constant(name, get_number(spec, "value", 0.0, path),
                                 get_positive(spec, "radius", 0.5, path));
    }
    if (kind == "log_modulus") {
      check_keys(spec, {"name", "kind", "a", "w", "eps", "radius"}, path);
      if (!spec.contains("a")) config_error(path + ".a", "missing");
      const Json& aj = spec["a"];
      if (!aj.is_array() || static_cast<int>(aj.size()) != n) {
        config_error(path + ".a", "expected " + std::to_string(n) + " coefficients");
      }
      CVec a(n);
      for (int i = 0; i < n; ++i) {
        a[i] = read_complex(aj[static_cast<std::size_t>(i)], path + ".a[" + std::to_string(i) + "]");
      }
      const Complex w = spec.contains("w") ? read_complex(spec["w"], path + ".w") : Complex(0.0);
      return PshTestFn::log_modulus(name, a, w, get_positive(spec, "eps", 0.2, path),
                                    get_positive(spec, "radius", 0.5, path));
    }
    if (kind == "maximum") {
      check_keys(spec, {"name", "kind", "parts"}, path);
      const Json& parts = section(spec, "parts");
      if (!parts.is_array() || parts.empty()) config_error(path + ".parts", "expected a non-empty list");
      std::vector<PshTestFn> fns;
      for (std::size_t i = 0; i < parts.size(); ++i) {
        fns.push_back(read_fixture(parts[i], n, path + ".parts[" + std::to_string(i) + "]"));
      }
      return PshTestFn::maximum(name, fns);
    }
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::ConfigError) throw;
    config_error(path, e.what());
  }
  config_error(path + ".kind", "unknown fixture kind '" + kind + "'");
}

// ---------------------------------------------------------------- reporting helpers

class Checks {
 public:
  void add(const std::string& name, bool pass, double value, double limit) {
    list_.push_back({{"name", name}, {"pass", pass}, {"value", num(value)}, {"limit", num(limit)}});
    ok_ = ok_ && pass;
  }
  bool ok() const { return ok_; }
  const Json& json() const { return list_; }

 private:
  Json list_ = Json::array();
  bool ok_ = true;
};

struct Stopwatch {
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
};

RunResult finish(Json report, const Checks& checks, const Stopwatch& clock, bool inconclusive = false) {
  report["checks"] = checks.json();
  int code = 0;
  if (!checks.ok()) {
    code = 1;
  } else if (inconclusive) {
    code = 2;
  }
  report["status"] = code == 0 ? "pass" : (code == 1 ? "fail" : "inconclusive");
  report["timing"] = {{"wall_seconds", clock.seconds()}};
  return RunResult{std::move(report), code};
}

bool writes_output(const Setup& s) { return !s.config.output_dir.empty(); }

fs::path out_path(const Setup& s, const std::string& rel) {
  const fs::path p = fs::path(s.config.output_dir) / rel;
  fs::create_directories(p.parent_path());
  return p;
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream os(p);
  if (!os) throw Error(ErrorKind::InvalidArgument, "cannot write " + p.string());
  os << std::setprecision(17);
  return os;
}

void write_disc_csv(const fs::path& p, const BishopSolution& sol) {
  std::ofstream os = open_out(p);
  const int n = sol.X.dim();
  os << "tau";
  for (int k = 1; k <= n; ++k) os << ",X_" << k;
  for (int k = 1; k <= n; ++k) os << ",hstar_" << k;
  os << "\n";
  for (int j = 0; j < sol.X.size(); ++j) {
    os << sol.X.grid().node(j);
    for (int k = 0; k < n; ++k) os << "," << sol.X.values()(j, k);
    for (int k = 0; k < n; ++k) os << "," << sol.h_star.values()(j, k);
    os << "\n";
  }
}

// Writes discs/disc_XXXX.csv for every converged entry and discs/manifest.json.
void export_discs(const Setup& s, const std::vector<SweepEntry>& entries) {
  if (!writes_output(s)) return;
  Json manifest = Json::array();
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const SweepEntry& e = entries[i];
    Json rec{{"index", i}, {"params", params_json(e.params)}};
    if (e.solution) {
      std::ostringstream name;
      name << "discs/disc_" << std::setw(4) << std::setfill('0') << i << ".csv";
      write_disc_csv(out_path(s, name.str()), *e.solution);
      rec["file"] = name.str();
      rec["residual"] = e.solution->residual;
      rec["iterations"] = e.solution->iterations;
    } else {
      rec["error"] = e.error;
    }
    manifest.push_back(rec);
  }
  open_out(out_path(s, "discs/manifest.json")) << manifest.dump(2) << "\n";
}

Json solution_record(const Setup& s, const BishopSolution& sol, const AnalyticDisc& disc) {
  return Json{{"params", params_json(sol.params)},
              {"residual", sol.residual},
              {"iterations", sol.iterations},
              {"spectral_tail", sol.spectral_tail},
              {"attachment_error", attachment_error(disc, s.M)},
              {"centering_error", max_norm(center(disc) - sol.params.c)}};
}

Vec uniform_in_ball(CounterRng& rng, int dim) {
  Vec dir(dim);
  for (int i = 0; i < dim; ++i) {
    const double u1 = 1.0 - rng.uniform();
    const double u2 = rng.uniform();
    dir[i] = std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);
  }
  return std::pow(rng.uniform(), 1.0 / dim) * dir / dir.norm();
}

DiscParams uniform_in_box(CounterRng& rng, const ParamBox& box, bool t_zero) {
  const int n = box.dim();
  DiscParams p = DiscParams::zero(n);
  for (int i = 0; i < n; ++i) p.c[i] = rng.uniform(-box.c_half[i], box.c_half[i]);
  for (int i = 0; i < n; ++i) p.t[i] = t_zero ? 0.0 : rng.uniform(-box.t_half[i], box.t_half[i]);
  return p;
}

std::vector<bool> upper_arc_nodes(const CircleGrid& grid) {
  std::vector<bool> on(static_cast<std::size_t>(grid.size()));
  for (int j = 0; j < grid.size(); ++j) on[static_cast<std::size_t>(j)] = kUpperArc.contains(grid.node(j));
  return on;
}

struct ArcMaxima {
  double k = -std::numeric_limits<double>::infinity();
  double K = -std::numeric_limits<double>::infinity();
};

// k = max of u on gamma away from gamma_I, K = max of u overall.
ArcMaxima arc_maxima(const Vec& boundary, const Mat* interior, const std::vector<bool>& arc,
                     const std::vector<bool>& gamma_i) {
  ArcMaxima m;
  for (Eigen::Index j = 0; j < boundary.size(); ++j) {
    const auto js = static_cast<std::size_t>(j);
    if (arc[js] && !gamma_i[js]) m.k = std::max(m.k, boundary[j]);
    m.K = std::max(m.K, boundary[j]);
  }
  if (interior) m.K = std::max(m.K, interior->maxCoeff());
  if (!std::isfinite(m.k)) m.k = m.K;
  return m;
}

// u = V on the boundary of the disc; FixtureRangeEscape when it leaves the validity ball.
Vec boundary_u(const PshTestFn& V, const CMat& phi) {
  Vec u(phi.rows());
  for (Eigen::Index j = 0; j < phi.rows(); ++j) {
    const CVec z = phi.row(j).transpose();
    if (!V.in_validity_region(z)) {
      throw Error(ErrorKind::FixtureRangeEscape,
                  "disc boundary leaves the validity ball of '" + V.name() + "'");
    }
    u[j] = V(z);
  }
  return u;
}

CVec to_complex(const Vec& s) {
  const int n = static_cast<int>(s.size()) / 2;
  CVec z(n);
  for (int i = 0; i < n; ++i) z[i] = Complex(s[i], s[n + i]);
  return z;
}

}  // namespace

// ---------------------------------------------------------------- config

ExperimentConfig parse_config(const Json& doc) {
  const std::string root = "config";
  check_keys(doc, {"schema_version", "seed", "output_dir", "manifold", "slice", "cutoff",
                   "exceptional_set", "box", "certify", "grid", "solver", "zeta0", "omega_threshold",
                   "psh_fixtures", "sweep", "solve", "two_constants", "density", "coverage", "jacobian",
                   "description"},
             root);
  ExperimentConfig c;
  if (!doc.contains("schema_version")) config_error(root + ".schema_version", "missing");
  c.schema_version = get_int(doc, "schema_version", 0, root);
  if (c.schema_version != kSchemaVersion) {
    config_error(root + ".schema_version", "unsupported version " + std::to_string(c.schema_version));
  }
  if (!doc.contains("seed")) config_error(root + ".seed", "missing (the seed is mandatory)");
  if (!doc["seed"].is_number_integer() || doc["seed"].get<long long>() < 0) {
    if (!doc["seed"].is_number_unsigned()) config_error(root + ".seed", "expected a non-negative integer");
  }
  c.seed = doc["seed"].get<std::uint64_t>();
  c.output_dir = get_string(doc, "output_dir", "", root);

  if (!doc.contains("manifold")) config_error(root + ".manifold", "missing");
  const Json& man = doc["manifold"];
  const std::string mp = root + ".manifold";
  check_keys(man, {"kind", "n", "m", "domain_radius", "h"}, mp);
  c.manifold_kind = get_string(man, "kind", "totally_real", mp);
  if (c.manifold_kind != "totally_real" && c.manifold_kind != "generic") {
    config_error(mp + ".kind", "expected totally_real or generic");
  }
  c.n = get_int(man, "n", 0, mp, 1);
  if (c.n == 0) config_error(mp + ".n", "missing");
  c.m = get_int(man, "m", c.n, mp, 1);
  if (c.manifold_kind == "totally_real" && c.m != c.n) config_error(mp + ".m", "must equal n");
  if (c.m < c.n || c.m > 2 * c.n) config_error(mp + ".m", "need n <= m <= 2n");
  c.domain_radius = get_positive(man, "domain_radius", 0.5, mp);
  const int n_out = c.manifold_kind == "totally_real" ? c.n : 2 * c.n - c.m;
  const Json& hj = section(man, "h");
  std::vector<Polynomial> comps;
  if (hj.is_array() && !hj.empty()) {
    if (static_cast<int>(hj.size()) != n_out) {
      config_error(mp + ".h", "expected " + std::to_string(n_out) + " components");
    }
    for (std::size_t i = 0; i < hj.size(); ++i) {
      comps.push_back(read_polynomial(hj[i], c.m, mp + ".h[" + std::to_string(i) + "]"));
    }
  } else if (man.contains("h") && !hj.is_array()) {
    config_error(mp + ".h", "expected a list of components");
  } else {
    for (int i = 0; i < n_out; ++i) comps.emplace_back(c.m);
  }
  c.h = PolyMap(c.m, comps);

  const Json& sl = section(doc, "slice");
  check_keys(sl, {"b_max", "max_attempts", "threshold", "candidates"}, root + ".slice");
  c.slice.b_max = get_positive(sl, "b_max", 0.1, root + ".slice");
  c.slice.max_attempts = get_int(sl, "max_attempts", 64, root + ".slice", 1);
  c.slice_threshold = get_positive(sl, "threshold", kDefaultSliceThreshold, root + ".slice");
  const Json& cands = section(sl, "candidates");
  if (!cands.is_array() && !cands.empty()) config_error(root + ".slice.candidates", "expected a list");
  for (std::size_t k = 0; k < cands.size(); ++k) {
    const std::string cp = root + ".slice.candidates[" + std::to_string(k) + "]";
    if (!cands[k].is_array() || static_cast<int>(cands[k].size()) != c.n) {
      config_error(cp, "expected " + std::to_string(c.n) + " rows");
    }
    Mat B(c.n, c.m - c.n);
    for (int i = 0; i < c.n; ++i) {
      B.row(i) = read_vec(cands[k][static_cast<std::size_t>(i)], c.m - c.n,
                          cp + "[" + std::to_string(i) + "]").transpose();
    }
    c.slice.candidates.push_back(B);
  }

  const Json& cut = section(doc, "cutoff");
  check_keys(cut, {"gamma0"}, root + ".cutoff");
  if (cut.contains("gamma0")) {
    const Vec g = read_vec(cut["gamma0"], 2, root + ".cutoff.gamma0");
    if (!(0.0 < g[0] && g[0] < g[1] && g[1] < kPi)) {
      config_error(root + ".cutoff.gamma0", "need 0 < begin < end < pi");
    }
    c.gamma0 = Arc{g[0], g[1]};
  }

  const Json& ex = section(doc, "exceptional_set");
  const std::string ep = root + ".exceptional_set";
  check_keys(ex, {"eta", "max_zero_arc", "functions"}, ep);
  c.eta = get_positive(ex, "eta", 1e-6, ep);
  c.max_zero_arc = get_positive(ex, "max_zero_arc", 0.05, ep);
  const Json& fns = section(ex, "functions");
  if (!fns.is_array() && !fns.empty()) config_error(ep + ".functions", "expected a list");
  for (std::size_t i = 0; i < fns.size(); ++i) {
    Polynomial g = read_polynomial(fns[i], c.m, ep + ".functions[" + std::to_string(i) + "]");
    if (g.is_zero()) config_error(ep + ".functions[" + std::to_string(i) + "]", "identically zero");
    c.exceptional.push_back(std::move(g));
  }

  if (!doc.contains("box")) config_error(root + ".box", "missing");
  const Json& bx = doc["box"];
  check_keys(bx, {"c_half_widths", "t_half_widths"}, root + ".box");
  if (!bx.contains("c_half_widths") || !bx.contains("t_half_widths")) {
    config_error(root + ".box", "needs c_half_widths and t_half_widths");
  }
  c.box.c_half = read_vec(bx["c_half_widths"], c.n, root + ".box.c_half_widths");
  c.box.t_half = read_vec(bx["t_half_widths"], c.n, root + ".box.t_half_widths");
  if ((c.box.c_half.array() <= 0.0).any() || (c.box.t_half.array() <= 0.0).any()) {
    config_error(root + ".box", "half-widths must be positive");
  }

  const Json& ce = section(doc, "certify");
  check_keys(ce, {"target_factor", "max_halvings", "random_samples"}, root + ".certify");
  c.certify.target_factor = get_positive(ce, "target_factor", 0.5, root + ".certify");
  c.certify.max_halvings = get_int(ce, "max_halvings", 20, root + ".certify");
  c.certify.random_samples = get_int(ce, "random_samples", 8, root + ".certify");
  c.certify.seed = c.seed;

  const Json& gr = section(doc, "grid");
  check_keys(gr, {"n_nodes", "lattice_radii"}, root + ".grid");
  c.n_nodes = get_int(gr, "n_nodes", 1024, root + ".grid", 8);
  if ((c.n_nodes & (c.n_nodes - 1)) != 0) config_error(root + ".grid.n_nodes", "must be a power of two");
  c.lattice_radii = get_int(gr, "lattice_radii", kDefaultLatticeRadii, root + ".grid", 2);

  const Json& so = section(doc, "solver");
  check_keys(so, {"tol", "max_iter", "divergence_window"}, root + ".solver");
  c.solver.tol = get_positive(so, "tol", 1e-12, root + ".solver");
  c.solver.max_iter = get_int(so, "max_iter", 500, root + ".solver", 1);
  c.solver.divergence_window = get_int(so, "divergence_window", 5, root + ".solver", 1);

  const Json& z0 = section(doc, "zeta0");
  check_keys(z0, {"r", "theta"}, root + ".zeta0");
  c.zeta0 = DiscPoint{get_number(z0, "r", 0.8, root + ".zeta0"),
                      get_number(z0, "theta", kPi / 2, root + ".zeta0")};
  if (!(c.zeta0.r > 0.0 && c.zeta0.r < 1.0)) config_error(root + ".zeta0.r", "need 0 < r < 1");

  c.omega_threshold = get_positive(doc, "omega_threshold", 0.25, root);
  if (c.omega_threshold >= 1.0) config_error(root + ".omega_threshold", "must be below 1");

  c.psh_fixtures = doc.contains("psh_fixtures") ? doc["psh_fixtures"] : Json::array();
  if (!c.psh_fixtures.is_array()) config_error(root + ".psh_fixtures", "expected a list");
  build_fixtures(c.psh_fixtures, c.n);

  const Json& sw = section(doc, "sweep");
  check_keys(sw, {"points_per_axis"}, root + ".sweep");
  c.sweep_points = get_int(sw, "points_per_axis", 3, root + ".sweep", 1);

  const Json& sv = section(doc, "solve");
  check_keys(sv, {"c", "t"}, root + ".solve");
  c.solve_params = DiscParams::zero(c.n);
  if (sv.contains("c")) c.solve_params.c = read_vec(sv["c"], c.n, root + ".solve.c");
  if (sv.contains("t")) c.solve_params.t = read_vec(sv["t"], c.n, root + ".solve.t");

  const Json& tc = section(doc, "two_constants");
  check_keys(tc, {"compositions"}, root + ".two_constants");
  c.compositions = get_int(tc, "compositions", 100, root + ".two_constants", 1);

  const Json& de = section(doc, "density");
  const std::string dp = root + ".density";
  check_keys(de, {"n_discs", "t_zero", "floor", "check_doubling"}, dp);
  c.density.n_discs = get_int(de, "n_discs", 1000, dp, 1);
  c.density.t_zero = get_bool(de, "t_zero", false, dp);
  c.density.floor = get_number(de, "floor", 0.99, dp);
  c.density.check_doubling = get_bool(de, "check_doubling", true, dp);

  const Json& co = section(doc, "coverage");
  const std::string cp = root + ".coverage";
  check_keys(co, {"probe_radius", "n_probes", "n_targets", "n_starts", "floor", "max_newton", "newton_tol"}, cp);
  c.coverage.probe_radius = get_positive(co, "probe_radius", 1e-3, cp);
  c.coverage.n_probes = get_int(co, "n_probes", 64, cp, 1);
  c.coverage.n_targets = get_int(co, "n_targets", 10000, cp, 1);
  c.coverage.n_starts = get_int(co, "n_starts", 16, cp, 1);
  c.coverage.floor = get_number(co, "floor", 0.999, cp);
  c.coverage.max_newton = get_int(co, "max_newton", 30, cp, 1);
  c.coverage.newton_tol = get_positive(co, "newton_tol", 1e-10, cp);

  const Json& ja = section(doc, "jacobian");
  const std::string jp = root + ".jacobian";
  check_keys(ja, {"step", "scan_points", "verify_scan_points", "t_n", "reduced_radius", "boundary_points"}, jp);
  c.jacobian.step = get_positive(ja, "step", 1e-5, jp);
  c.jacobian.scan_points = get_int(ja, "scan_points", 5, jp, 1);
  c.jacobian.verify_scan_points = get_int(ja, "verify_scan_points", 3, jp, 1);
  c.jacobian.t_n = get_positive(ja, "t_n", 0.02, jp);
  c.jacobian.reduced_radius = get_positive(ja, "reduced_radius", 1.0 - 1e-3, jp);
  if (c.jacobian.reduced_radius >= 1.0) config_error(jp + ".reduced_radius", "must be below 1");
  c.jacobian.boundary_points = get_int(ja, "boundary_points", 9, jp, 1);
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error(ErrorKind::ConfigError, "cannot open config file '" + path + "'");
  Json doc;
  try {
    doc = Json::parse(is);
  } catch (const Json::exception& e) {
    throw Error(ErrorKind::ConfigError, path + ": " + e.what());
  }
  return parse_config(doc);
}

std::vector<PshTestFn> build_fixtures(const Json& specs, int n) {
  std::vector<PshTestFn> out;
  std::set<std::string> names;
  for (std::size_t i = 0; i < specs.size(); ++i) {
    const std::string path = "config.psh_fixtures[" + std::to_string(i) + "]";
    out.push_back(read_fixture(specs[i], n, path));
    if (!names.insert(out.back().name()).second) {
      config_error(path + ".name", "duplicate fixture name '" + out.back().name() + "'");
    }
  }
  return out;
}

// ---------------------------------------------------------------- setup

Setup make_setup(const ExperimentConfig& config) {
  const CircleGrid grid(config.n_nodes);
  CutoffV v = default_cutoff(grid, config.gamma0);
  if (config.manifold_kind == "totally_real") {
    TotallyRealGraph M(config.h, config.domain_radius);
    validate_graph(M);
    ExceptionalSet I{config.exceptional, config.eta, ParamChart::identity(config.n)};
    I.validate();
    return Setup{config, grid, std::move(v), std::move(M), std::move(I), std::nullopt};
  }
  const GenericGraph g{config.n, config.m, config.h, config.domain_radius};
  validate_graph(g);
  CMat to_original = CMat::Identity(config.n, config.n);
  ExceptionalSet I0{config.exceptional, config.eta, ParamChart{config.n, config.m, to_original}};
  I0.validate();
  SampledSlice sampled = sample_good_B(g, I0, config.seed, config.slice);
  SliceResult result = slice(g, sampled.plane, config.slice_threshold);
  ExceptionalSet I = restrict_to_slice(I0, g, result.normalized);
  TotallyRealGraph M = result.normalized.graph;
  return Setup{config, grid, std::move(v), std::move(M), std::move(I),
               SliceInfo{std::move(sampled), std::move(result)}};
}

Setup with_nodes(const Setup& setup, int n_nodes) {
  Setup s = setup;
  s.config.n_nodes = n_nodes;
  s.grid = CircleGrid(n_nodes);
  s.v = default_cutoff(s.grid, s.config.gamma0);
  return s;
}

// ---------------------------------------------------------------- experiments

RunResult run_solve(const Setup& s) {
  const Stopwatch clock;
  const ExperimentConfig& c = s.config;
  const BishopSolution sol = solve_bishop(s.M, s.v, c.solve_params, c.solver);
  const AnalyticDisc disc(sol, s.v);
  const GoodDiscResult good = good_disc(disc, s.I, GoodDiscOptions{c.max_zero_arc});

  Json report{{"command", "solve"}, {"seed", c.seed}, {"n_nodes", c.n_nodes}};
  report["disc"] = solution_record(s, sol, disc);
  report["disc"]["good"] = good.is_good;
  report["disc"]["gamma_i_hits"] = good.hits;
  report["disc"]["crossings"] = good.crossings;
  report["disc"]["cauchy_riemann_residual"] = disc.cauchy_riemann_residual(0.9);

  Checks checks;
  checks.add("residual", sol.residual <= c.solver.tol, sol.residual, c.solver.tol);
  const double att = report["disc"]["attachment_error"];
  const double cen = report["disc"]["centering_error"];
  checks.add("attachment", att <= 1e-10, att, 1e-10);
  checks.add("centering", cen <= 1e-11, cen, 1e-11);
  export_discs(s, {SweepEntry{c.solve_params, sol, std::nullopt, ""}});
  return finish(std::move(report), checks, clock);
}

RunResult run_sweep(const Setup& s) {
  const Stopwatch clock;
  const ExperimentConfig& c = s.config;
  const ContractionCertificate cert = contraction_certify(s.M, s.v, c.box, c.certify);
  const SweepResult res = sweep(s.M, s.v, cert.box, c.sweep_points, c.solver);

  Json discs = Json::array();
  double worst_residual = 0.0, worst_att = 0.0, worst_cen = 0.0;
  int max_iter = 0;
  for (const SweepEntry& e : res.entries) {
    if (!e.solution) {
      discs.push_back({{"params", params_json(e.params)},
                       {"error_kind", std::string(to_string(*e.error_kind))},
                       {"error", e.error}});
      continue;
    }
    const AnalyticDisc disc(*e.solution, s.v);
    Json rec = solution_record(s, *e.solution, disc);
    worst_residual = std::max(worst_residual, e.solution->residual);
    worst_att = std::max(worst_att, rec["attachment_error"].get<double>());
    worst_cen = std::max(worst_cen, rec["centering_error"].get<double>());
    max_iter = std::max(max_iter, e.solution->iterations);
    discs.push_back(std::move(rec));
  }
  Json report{{"command", "sweep"}, {"seed", c.seed}, {"n_nodes", c.n_nodes}};
  report["certificate"] = {{"c_half", vec_json(cert.box.c_half)},
                           {"t_half", vec_json(cert.box.t_half)},
                           {"factor", cert.factor},
                           {"halvings", cert.halvings},
                           {"factor_history", cert.factor_history}};
  report["converged"] = res.converged();
  report["total"] = res.entries.size();
  report["max_iterations"] = max_iter;
  report["discs"] = std::move(discs);

  Checks checks;
  checks.add("max_residual", worst_residual <= c.solver.tol, worst_residual, c.solver.tol);
  checks.add("max_attachment", worst_att <= 1e-10, worst_att, 1e-10);
  checks.add("max_centering", worst_cen <= 1e-11, worst_cen, 1e-11);
  export_discs(s, res.entries);
  return finish(std::move(report), checks, clock, res.converged() != res.entries.size());
}

RunResult run_measure(const Setup& s) {
  const Stopwatch clock;
  const ExperimentConfig& c = s.config;
  const PolarLattice lattice = polar_lattice(s.grid, c.lattice_radii);
  const OmegaRegion region = omega_region(kUpperArc, c.omega_threshold, lattice, c.gamma0);
  const double w0 = harmonic_measure(kUpperArc, DiscPoint{0.0, 0.0});
  const double raw = harmonic_measure(kUpperArc, DiscPoint{1.0 - 1e-4, kPi / 2});
  const double lim = radial_limit(kUpperArc, kPi / 2);
  const HarmonicityReport harm = harmonicity_residual(kUpperArc, lattice);

  const int last = lattice.n_radii() - 1;
  int arc_nodes = 0, arc_in = 0;
  for (int j = 0; j < lattice.n_angles(); ++j) {
    if (!kUpperArc.contains(s.grid.node(j))) continue;
    ++arc_nodes;
    arc_in += region.contains(last, j) ? 1 : 0;
  }
  const double extreme = std::max(region.one_plus_omega.maxCoeff() - 1.0, -region.one_plus_omega.minCoeff());

  Json report{{"command", "measure"}, {"seed", c.seed}, {"n_nodes", c.n_nodes}};
  report["omega_at_origin"] = w0;
  report["omega_near_arc_midpoint"] = raw;
  report["radial_limit"] = lim;
  report["harmonicity"] = {{"max_residual", harm.max_residual},
                           {"checked", harm.checked},
                           {"unresolved", harm.unresolved}};
  report["region"] = {{"threshold", region.threshold},
                      {"interior_count", region.interior_count},
                      {"inradius", region.inradius},
                      {"arc_nodes", arc_nodes},
                      {"arc_nodes_inside", arc_in},
                      {"one_plus_omega_at_zeta0", 1.0 + harmonic_measure(kUpperArc, c.zeta0)}};

  Checks checks;
  checks.add("omega_at_origin", std::abs(w0 + 0.5) <= 1e-12, std::abs(w0 + 0.5), 1e-12);
  checks.add("radial_limit", std::abs(lim + 1.0) <= 1e-6, std::abs(lim + 1.0), 1e-6);
  checks.add("arc_nodes_in_omega", arc_in == arc_nodes, arc_nodes - arc_in, 0);
  checks.add("harmonicity", harm.max_residual <= 1e-6, harm.max_residual, 1e-6);
  checks.add("range", extreme <= 1e-12, extreme, 1e-12);

  if (writes_output(s)) {
    std::ofstream os = open_out(out_path(s, "omega.csv"));
    write_csv(omega_field(kUpperArc, lattice), os);
  }
  return finish(std::move(report), checks, clock);
}

namespace {

DiscParams axis_params(const Setup& s, const ParamBox& box) {
  const int n = s.config.n;
  DiscParams p = DiscParams::zero(n);
  p.t[n - 1] = std::min(s.config.jacobian.t_n, 0.8 * box.t_half[n - 1]);
  return p;
}

JacobianOptions jacobian_options(const Setup& s) {
  JacobianOptions o;
  o.step = s.config.jacobian.step;
  return o;
}

void write_scan_csv(const Setup& s, const JacobianScan& scan) {
  if (!writes_output(s)) return;
  std::ofstream os = open_out(out_path(s, "jacobian_scan.csv"));
  const int n = s.config.n;
  for (int k = 1; k <= n; ++k) os << "c_" << k << ",";
  for (int k = 1; k <= n; ++k) os << "t_" << k << ",";
  os << "det,error_estimate,status\n";
  for (const ScanPoint& p : scan.points) {
    for (int k = 0; k < n; ++k) os << p.params.c[k] << ",";
    for (int k = 0; k < n; ++k) os << p.params.t[k] << ",";
    os << p.determinant << "," << p.error_estimate << ","
       << (p.error_kind ? std::string(to_string(*p.error_kind)) : std::string("ok")) << "\n";
  }
}

Json scan_json(const JacobianScan& scan) {
  return Json{{"points", scan.points.size()},
              {"min_abs_det", scan.min_abs_det},
              {"max_abs_det", scan.max_abs_det},
              {"sign_change", scan.sign_change},
              {"failures", scan.failures}};
}

}  // namespace

RunResult run_jacobian(const Setup& s, const std::string& kind) {
  const Stopwatch clock;
  const ExperimentConfig& c = s.config;
  const int n = c.n;
  if (kind != "full" && kind != "reduced" && kind != "boundary") {
    throw Error(ErrorKind::ConfigError, "unknown jacobian kind '" + kind + "'");
  }
  const ContractionCertificate cert = contraction_certify(s.M, s.v, c.box, c.certify);
  const JacobianOptions opts = jacobian_options(s);
  Json report{{"command", "jacobian"}, {"kind", kind}, {"seed", c.seed}, {"n_nodes", c.n_nodes}};
  report["certificate"] = {{"c_half", vec_json(cert.box.c_half)},
                           {"t_half", vec_json(cert.box.t_half)},
                           {"factor", cert.factor},
                           {"halvings", cert.halvings}};
  Checks checks;

  if (kind == "full") {
    const JacobianReport j0 = jac_S_full(s.M, s.v, DiscParams::zero(n), c.zeta0, opts);
    const double vn = std::pow(s.v.extend(c.zeta0), n);
    const JacobianScan scan = jacobian_scan(s.M, s.v, cert.box, c.zeta0, c.jacobian.scan_points, opts);
    report["t0"] = {{"determinant", j0.determinant}, {"v_power", vn}, {"error_estimate", j0.error_estimate}};
    report["scan"] = scan_json(scan);
    checks.add("t0_determinant", std::abs(j0.determinant - vn) <= 1e-6, std::abs(j0.determinant - vn), 1e-6);
    checks.add("no_sign_change", !scan.sign_change, scan.sign_change ? 1 : 0, 0);
    checks.add("scan_failures", scan.failures == 0, scan.failures, 0);
    write_scan_csv(s, scan);
    return finish(std::move(report), checks, clock);
  }

  const DiscParams p = axis_params(s, cert.box);
  report["params"] = params_json(p);
  const double tnorm = max_norm(p.t);
  const double b = s.v.b();

  if (kind == "reduced") {
    const DiscPoint zeta{c.jacobian.reduced_radius, 0.5 * (c.gamma0.begin + c.gamma0.end)};
    const ReducedJacobianReport r = jac_S_reduced(s.M, s.v, p, zeta, opts);
    const double d33_diff = std::abs(r.d33_minor - r.d33_cr);
    const double d33_rel = d33_diff / std::max(std::abs(r.d33_cr), std::numeric_limits<double>::min());
    report["reduced"] = {{"zeta", {zeta.r, zeta.theta}},
                         {"determinant", r.report.determinant},
                         {"error_estimate", r.report.error_estimate},
                         {"det_d11", r.det_d11},
                         {"det_d22", r.det_d22},
                         {"d33_minor", r.d33_minor},
                         {"d33_cr", r.d33_cr},
                         {"d33_relative_difference", d33_rel},
                         {"factorization_residual", r.factorization_residual},
                         {"v_power", r.v_power}};
    const double det = std::abs(r.report.determinant);
    checks.add("determinant_nonzero", det > 10.0 * r.report.error_estimate && det > 0.0, det,
               10.0 * r.report.error_estimate);
    checks.add("d33_agreement", d33_rel <= 1e-6, d33_rel, 1e-6);
    if (writes_output(s)) {
      std::ofstream os = open_out(out_path(s, "jacobian_scan.csv"));
      os << "r,theta,det,error_estimate,d33_minor,d33_cr\n"
         << zeta.r << "," << zeta.theta << "," << r.report.determinant << "," << r.report.error_estimate
         << "," << r.d33_minor << "," << r.d33_cr << "\n";
    }
    return finish(std::move(report), checks, clock);
  }

  // boundary
  const int pts = c.jacobian.boundary_points;
  std::vector<JacobianReport> reps(static_cast<std::size_t>(pts));
  std::vector<double> taus(static_cast<std::size_t>(pts));
  for (int k = 0; k < pts; ++k) {
    taus[static_cast<std::size_t>(k)] =
        c.gamma0.begin + (c.gamma0.end - c.gamma0.begin) * (pts == 1 ? 0.5 : static_cast<double>(k) / (pts - 1));
  }
  parallel_for(reps.size(), [&](std::size_t k) { reps[k] = jac_boundary(s.M, s.v, p, taus[k], opts); });
  double min_det = std::numeric_limits<double>::infinity();
  Json rows = Json::array();
  for (std::size_t k = 0; k < reps.size(); ++k) {
    min_det = std::min(min_det, std::abs(reps[k].determinant));
    rows.push_back({{"tau", taus[k]}, {"determinant", reps[k].determinant}, {"error_estimate", reps[k].error_estimate}});
  }
  const double bound = 0.4 * b * tnorm;
  const JacobianReport degenerate = jac_boundary(s.M, s.v, DiscParams::zero(n), taus[taus.size() / 2], opts);
  report["boundary"] = {{"points", rows},
                        {"min_abs_det", min_det},
                        {"lower_bound", bound},
                        {"b", b},
                        {"t_norm", tnorm}};
  report["t0_case"] = {{"determinant", degenerate.determinant}, {"degenerate", degenerate.degenerate}};
  checks.add("boundary_minor", min_det >= bound, min_det, bound);
  if (writes_output(s)) {
    std::ofstream os = open_out(out_path(s, "jacobian_scan.csv"));
    os << "tau,det,error_estimate\n";
    for (std::size_t k = 0; k < reps.size(); ++k) {
      os << taus[k] << "," << reps[k].determinant << "," << reps[k].error_estimate << "\n";
    }
  }
  return finish(std::move(report), checks, clock);
}

RunResult run_good_disc_density(const Setup& s) {
  const Stopwatch clock;
  const ExperimentConfig& c = s.config;
  const ContractionCertificate cert = contraction_certify(s.M, s.v, c.box, c.certify);
  const auto N = static_cast<std::size_t>(c.density.n_discs);
  const GoodDiscOptions gopt{c.max_zero_arc};
  std::optional<Setup> doubled;
  if (c.density.check_doubling) doubled = with_nodes(s, 2 * c.n_nodes);

  struct Rec {
    DiscParams params;
    std::optional<GoodDiscResult> good;
    std::optional<bool> good_doubled;
    std::string error;
  };
  std::vector<Rec> recs(N);
  const CounterRng base(c.seed, 0xde75ULL);
  parallel_for(N, [&](std::size_t i) {
    CounterRng rng = base.substream(i);
    Rec& r = recs[i];
    r.params = uniform_in_box(rng, cert.box, c.density.t_zero);
    try {
      const AnalyticDisc disc(solve_bishop(s.M, s.v, r.params, c.solver), s.v);
      r.good = good_disc(disc, s.I, gopt);
      if (doubled) {
        const AnalyticDisc d2(solve_bishop(doubled->M, doubled->v, r.params, c.solver), doubled->v);
        r.good_doubled = good_disc(d2, doubled->I, gopt).is_good;
      }
    } catch (const Error& e) {
      r.error = e.what();
    }
  });

  int good = 0, failed = 0, disagreements = 0;
  std::map<int, int> hits_hist, crossings_hist;
  Json failures = Json::array();
  for (std::size_t i = 0; i < N; ++i) {
    const Rec& r = recs[i];
    if (!r.good) {
      ++failed;
      failures.push_back({{"index", i}, {"params", params_json(r.params)}, {"error", r.error}});
      continue;
    }
    good += r.good->is_good ? 1 : 0;
    ++hits_hist[r.good->hits];
    ++crossings_hist[r.good->crossings];
    if (r.good_doubled && *r.good_doubled != r.good->is_good) ++disagreements;
  }
  auto hist_json = [](const std::map<int, int>& h) {
    Json out = Json::object();
    for (const auto& [k, v] : h) out[std::to_string(k)] = v;
    return out;
  };
  const double fraction = static_cast<double>(good) / static_cast<double>(N);
  Json report{{"command", "density"}, {"seed", c.seed}, {"n_nodes", c.n_nodes}};
  report["certified_box"] = {{"c_half", vec_json(cert.box.c_half)}, {"t_half", vec_json(cert.box.t_half)}};
  report["n_discs"] = N;
  report["t_zero"] = c.density.t_zero;
  report["good"] = good;
  report["failed"] = failed;
  report["good_fraction"] = fraction;
  report["hits_histogram"] = hist_json(hits_hist);
  report["crossings_histogram"] = hist_json(crossings_hist);
  report["doubling_checked"] = c.density.check_doubling;
  report["doubling_disagreements"] = disagreements;
  report["failures"] = failures;

  Checks checks;
  checks.add("good_fraction", fraction >= c.density.floor, fraction, c.density.floor);
  checks.add("doubling_stability", disagreements == 0, disagreements, 0);
  return finish(std::move(report), checks, clock);
}

CoverageResult estimate_coverage(const Setup& s, const ParamBox& box, double radius, int n_targets,
                                 int n_starts, const std::vector<PshTestFn>& fixtures) {
  const ExperimentConfig& c = s.config;
  const int n = c.n;
  const DiscParams origin = DiscParams::zero(n);
  JacobianOptions jopt = jacobian_options(s);
  const Mat J0 = jac_S_full(s.M, s.v, origin, c.zeta0, jopt).matrix;
  const Eigen::PartialPivLU<Mat> lu(J0);

  CoverageResult res;
  res.radius = radius;
  res.center = disc_map(s.M, s.v, origin, c.zeta0, jopt.solver);

  // Start s sits where the linearization puts the preimage of a point of the ball.
  const CounterRng start_base(c.seed, 0x57a7ULL);
  std::vector<DiscParams> starts(static_cast<std::size_t>(n_starts));
  std::vector<Vec> start_images(starts.size());
  std::vector<char> start_ok(starts.size(), 0);
  parallel_for(starts.size(), [&](std::size_t k) {
    if (k == 0) {
      starts[k] = origin;
    } else {
      CounterRng rng = start_base.substream(k);
      starts[k] = DiscParams::unpack(lu.solve(radius * uniform_in_ball(rng, 2 * n)));
    }
    try {
      start_images[k] = disc_map(s.M, s.v, starts[k], c.zeta0, jopt.solver);
      start_ok[k] = 1;
    } catch (const Error&) {
    }
  });

  const CounterRng target_base(c.seed, 0x7a29ULL);
  res.targets.resize(static_cast<std::size_t>(n_targets));
  for (std::size_t t = 0; t < res.targets.size(); ++t) {
    CounterRng rng = target_base.substream(t);
    res.targets[t] = res.center + radius * uniform_in_ball(rng, 2 * n);
  }
  res.covered.assign(res.targets.size(), 0);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  res.bounds.assign(fixtures.size(), std::vector<double>(res.targets.size(), nan));
  res.values.assign(fixtures.size(), std::vector<double>(res.targets.size(), nan));

  const double one_plus_omega = 1.0 + harmonic_measure(kUpperArc, c.zeta0);
  const std::vector<bool> arc = upper_arc_nodes(s.grid);
  const GoodDiscOptions gopt{c.max_zero_arc};

  parallel_for(res.targets.size(), [&](std::size_t t) {
    const Vec& target = res.targets[t];
    std::vector<std::size_t> order;
    for (std::size_t k = 0; k < starts.size(); ++k) {
      if (start_ok[k]) order.push_back(k);
    }
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return (start_images[a] - target).norm() < (start_images[b] - target).norm();
    });
    for (std::size_t k : order) {
      const NewtonResult nr = chord_newton(s.M, s.v, target, starts[k], J0, c.zeta0,
                                           c.coverage.max_newton, c.coverage.newton_tol, c.solver);
      if (!nr.converged || !box.contains(nr.params, 1e-12)) continue;
      std::optional<AnalyticDisc> disc;
      try {
        disc.emplace(solve_bishop(s.M, s.v, nr.params, c.solver), s.v);
      } catch (const Error&) {
        continue;
      }
      const GoodDiscResult good = good_disc(*disc, s.I, gopt);
      if (!good.is_good) continue;
      const CMat phi = disc->boundary_values();
      const CVec z = to_complex(target);
      for (std::size_t f = 0; f < fixtures.size(); ++f) {
        const ArcMaxima m = arc_maxima(boundary_u(fixtures[f], phi), nullptr, arc, good.gamma_i);
        res.bounds[f][t] = m.k + (m.K - m.k) * one_plus_omega;
        res.values[f][t] = fixtures[f](z);
      }
      res.covered[t] = 1;
      break;
    }
  });
  res.n_covered = static_cast<int>(std::count(res.covered.begin(), res.covered.end(), 1));
  return res;
}

RunResult run_thinness_experiment(const Setup& s) {
  const Stopwatch clock;
  const ExperimentConfig& c = s.config;
  const int n = c.n;
  const std::vector<PshTestFn> fixtures = build_fixtures(c.psh_fixtures, n);
  Json report{{"command", "verify"}, {"seed", c.seed}, {"n_nodes", c.n_nodes}, {"n", n}};
  Checks checks;
  bool inconclusive = false;

  // (i) Omega.
  const PolarLattice lattice = polar_lattice(s.grid, c.lattice_radii);
  const OmegaRegion region = omega_region(kUpperArc, c.omega_threshold, lattice, c.gamma0);
  const LatticeField omega = omega_field(kUpperArc, lattice);
  const double opw0 = 1.0 + harmonic_measure(kUpperArc, c.zeta0);
  report["omega"] = {{"threshold", region.threshold},
                     {"interior_count", region.interior_count},
                     {"inradius", region.inradius},
                     {"one_plus_omega_at_zeta0", opw0}};
  checks.add("zeta0_in_omega", opw0 < c.omega_threshold, opw0, c.omega_threshold);
  {
    // The extremal function 1 + omega against its own constants k = 0, K = 1.
    LatticeField ext{lattice, region.one_plus_omega};
    const TwoConstantsReport r = two_constants_check(ext, kUpperArc, 0.0, 1.0, 1e-10, {}, &omega);
    report["extremal_two_constants_margin"] = r.worst_margin;
    checks.add("extremal_two_constants", r.worst_margin <= 1e-10, r.worst_margin, 1e-10);
  }

  // (ii) certified box, sweep and good discs.
  const ContractionCertificate cert = contraction_certify(s.M, s.v, c.box, c.certify);
  report["certificate"] = {{"c_half", vec_json(cert.box.c_half)},
                           {"t_half", vec_json(cert.box.t_half)},
                           {"factor", cert.factor},
                           {"halvings", cert.halvings}};
  const SweepResult sw = sweep(s.M, s.v, cert.box, c.sweep_points, c.solver);
  const GoodDiscOptions gopt{c.max_zero_arc};
  Json discs = Json::array();
  std::vector<std::size_t> good_idx;
  std::vector<GoodDiscResult> goods(sw.entries.size());
  double worst_att = 0.0, worst_cen = 0.0;
  for (std::size_t i = 0; i < sw.entries.size(); ++i) {
    const SweepEntry& e = sw.entries[i];
    Json rec{{"params", params_json(e.params)}};
    if (!e.solution) {
      rec["error"] = e.error;
      inconclusive = true;
      discs.push_back(rec);
      continue;
    }
    const AnalyticDisc disc(*e.solution, s.v);
    goods[i] = good_disc(disc, s.I, gopt);
    const double att = attachment_error(disc, s.M);
    const double cen = max_norm(center(disc) - e.params.c);
    worst_att = std::max(worst_att, att);
    worst_cen = std::max(worst_cen, cen);
    rec["good"] = goods[i].is_good;
    rec["gamma_i_hits"] = goods[i].hits;
    rec["residual"] = e.solution->residual;
    if (goods[i].is_good) good_idx.push_back(i);
    discs.push_back(rec);
  }
  report["discs"] = std::move(discs);
  report["good_discs"] = good_idx.size();
  checks.add("sweep_attachment", worst_att <= 1e-10, worst_att, 1e-10);
  checks.add("sweep_centering", worst_cen <= 1e-11, worst_cen, 1e-11);

  // (iii) two-constants on u = V o Phi over the lattice; W' bound over Omega.
  const std::vector<bool> arc = upper_arc_nodes(s.grid);
  const std::size_t n_comp = std::min(good_idx.size(), static_cast<std::size_t>(c.compositions));
  struct CompRec {
    double margin = -std::numeric_limits<double>::infinity();
    double k = 0.0, K = 0.0;
    double omega_bound = -std::numeric_limits<double>::infinity();
    double omega_max_u = -std::numeric_limits<double>::infinity();
    double sub_mean = -std::numeric_limits<double>::infinity();
    std::string violation;
  };
  std::vector<std::vector<CompRec>> comp(fixtures.size(), std::vector<CompRec>(n_comp));
  for (std::size_t d = 0; d < n_comp; ++d) {
    const SweepEntry& e = sw.entries[good_idx[d]];
    const AnalyticDisc disc(*e.solution, s.v);
    const DiscImage image = disc_image(disc, lattice);
    for (std::size_t f = 0; f < fixtures.size(); ++f) {
      ComposedField u = [&] {
        try {
          return compose(fixtures[f], image);
        } catch (const Error& err) {
          throw Error(ErrorKind::FixtureRangeEscape, err.what());
        }
      }();
      const ArcMaxima mx = arc_maxima(u.u.boundary(), &u.u.values, arc, goods[good_idx[d]].gamma_i);
      CompRec& r = comp[f][d];
      r.k = mx.k;
      r.K = mx.K;
      try {
        r.margin = two_constants_check(u.u, kUpperArc, mx.k, mx.K, 1e-8, goods[good_idx[d]].gamma_i, &omega)
                       .worst_margin;
      } catch (const Error& err) {
        r.violation = err.what();
      }
      for (int i = 0; i < lattice.n_radii(); ++i) {
        for (int j = 0; j < lattice.n_angles(); ++j) {
          if (!region.contains(i, j)) continue;
          r.omega_bound = std::max(r.omega_bound, mx.k + (mx.K - mx.k) * region.one_plus_omega(i, j));
          r.omega_max_u = std::max(r.omega_max_u, u.u.values(i, j));
        }
      }
      // Sub-mean spot check of u along small circles inside the disc.
      CounterRng rng = CounterRng(c.seed, 0x5b3ULL).substream(d * fixtures.size() + f);
      for (int q = 0; q < 4; ++q) {
        const Complex z0 = std::polar(0.8 * std::sqrt(rng.uniform()), kTwoPi * rng.uniform());
        const double rho = 0.1 * (1.0 - std::abs(z0)) * (0.5 + rng.uniform());
        const double defect = sub_mean_defect(
            [&](Complex z) { return fixtures[f](disc.evaluate_schwarz(DiscPoint::from_complex(z))); }, z0, rho);
        r.sub_mean = std::max(r.sub_mean, defect);
      }
    }
  }
  Json fx = Json::array();
  for (std::size_t f = 0; f < fixtures.size(); ++f) {
    double worst_margin = -std::numeric_limits<double>::infinity();
    double w_bound = -std::numeric_limits<double>::infinity();
    double w_u = -std::numeric_limits<double>::infinity();
    double w_threshold_excess = -std::numeric_limits<double>::infinity();
    double sub_mean = -std::numeric_limits<double>::infinity();
    int violations = 0;
    Json vlist = Json::array();
    for (std::size_t d = 0; d < n_comp; ++d) {
      const CompRec& r = comp[f][d];
      if (!r.violation.empty()) {
        ++violations;
        vlist.push_back({{"disc", good_idx[d]}, {"error", r.violation}});
        continue;
      }
      worst_margin = std::max(worst_margin, r.margin);
      w_bound = std::max(w_bound, r.omega_bound);
      w_u = std::max(w_u, r.omega_max_u);
      w_threshold_excess =
          std::max(w_threshold_excess, r.omega_bound - (r.k + (r.K - r.k) * c.omega_threshold));
      sub_mean = std::max(sub_mean, r.sub_mean);
    }
    const double spot = psh_spot_check(fixtures[f], n, c.seed);
    fx.push_back({{"name", fixtures[f].name()},
                  {"descriptor", fixtures[f].descriptor()},
                  {"validity_radius", fixtures[f].validity_radius()},
                  {"compositions", n_comp},
                  {"worst_margin", num(worst_margin)},
                  {"w_prime_bound", num(w_bound)},
                  {"w_prime_max_u", num(w_u)},
                  {"bound_minus_threshold_bound", num(w_threshold_excess)},
                  {"disc_sub_mean_defect", num(sub_mean)},
                  {"psh_spot_check", spot},
                  {"violations", vlist}});
    const std::string tag = fixtures[f].name() + ":";
    checks.add(tag + "two_constants", violations == 0 && worst_margin <= 1e-8, worst_margin, 1e-8);
    checks.add(tag + "w_prime", w_u <= w_bound + 1e-8, w_u - w_bound, 1e-8);
    checks.add(tag + "bound_below_threshold", w_threshold_excess <= 1e-12, w_threshold_excess, 1e-12);
    checks.add(tag + "psh_spot_check", spot <= 1e-8, spot, 1e-8);
    checks.add(tag + "disc_sub_mean", sub_mean <= 1e-8, sub_mean, 1e-8);
  }
  report["compositions"] = n_comp * fixtures.size();
  checks.add("composition_count", n_comp * fixtures.size() >= static_cast<std::size_t>(c.compositions),
             static_cast<double>(n_comp * fixtures.size()), c.compositions);

  // (iv) coverage of the W proxy.
  OpenImageOptions oopt;
  oopt.probe_radius = c.coverage.probe_radius;
  oopt.n_probes = c.coverage.n_probes;
  oopt.max_newton = c.coverage.max_newton;
  oopt.newton_tol = c.coverage.newton_tol;
  oopt.seed = c.seed;
  oopt.jacobian = jacobian_options(s);
  double radius = 0.0;
  Json probes = Json::array();
  for (int attempt = 0; attempt < 5; ++attempt) {
    const OpenImageReport o = open_image_check(s.M, s.v, cert.box, c.zeta0, oopt);
    probes.push_back({{"radius", oopt.probe_radius}, {"attained", o.attained}, {"probes", o.probes}});
    if (o.attained == o.probes) {
      radius = oopt.probe_radius;
      break;
    }
    oopt.probe_radius *= 0.5;
  }
  Json cov{{"probe_history", probes}, {"radius", radius}};
  if (radius == 0.0) {
    cov["error"] = "CoverageInconclusive: no probe radius was fully attained";
    inconclusive = true;
    report["coverage"] = cov;
  } else {
    const CoverageResult cr =
        estimate_coverage(s, cert.box, radius, c.coverage.n_targets, c.coverage.n_starts, fixtures);
    cov["center"] = vec_json(cr.center);
    cov["targets"] = cr.targets.size();
    cov["covered"] = cr.n_covered;
    cov["fraction"] = cr.fraction();
    cov["floor"] = c.coverage.floor;
    if (cr.fraction() < c.coverage.floor) {
      cov["error"] = "CoverageInconclusive: attained fraction below floor";
      inconclusive = true;
    }
    // (v) ball average of V against the propagated bound.
    Json ball = Json::array();
    for (std::size_t f = 0; f < fixtures.size(); ++f) {
      double avg = 0.0, bound = -std::numeric_limits<double>::infinity(), worst = -std::numeric_limits<double>::infinity();
      for (std::size_t t = 0; t < cr.targets.size(); ++t) {
        avg += fixtures[f](to_complex(cr.targets[t]));
        if (!cr.covered[t]) continue;
        bound = std::max(bound, cr.bounds[f][t]);
        worst = std::max(worst, cr.values[f][t] - cr.bounds[f][t]);
      }
      avg /= static_cast<double>(cr.targets.size());
      const double v_center = fixtures[f](to_complex(cr.center));
      ball.push_back({{"name", fixtures[f].name()},
                      {"ball_average", avg},
                      {"value_at_center", v_center},
                      {"propagated_bound", num(bound)},
                      {"worst_pointwise_margin", num(worst)}});
      const std::string tag = fixtures[f].name() + ":";
      checks.add(tag + "ball_average", avg <= bound + 1e-6, avg - bound, 1e-6);
      checks.add(tag + "pointwise_bound", worst <= 1e-8, worst, 1e-8);
    }
    cov["ball_average"] = ball;
    report["coverage"] = cov;
  }

  // Jacobian summary.
  {
    const JacobianOptions jopt = jacobian_options(s);
    const JacobianReport j0 = jac_S_full(s.M, s.v, DiscParams::zero(n), c.zeta0, jopt);
    const double vn = std::pow(s.v.extend(c.zeta0), n);
    const JacobianScan scan =
        jacobian_scan(s.M, s.v, cert.box, c.zeta0, c.jacobian.verify_scan_points, jopt);
    report["jacobian"] = {{"t0_determinant", j0.determinant}, {"v_power", vn}, {"scan", scan_json(scan)}};
    checks.add("jacobian_t0", std::abs(j0.determinant - vn) <= 1e-6, std::abs(j0.determinant - vn), 1e-6);
    checks.add("jacobian_no_sign_change", !scan.sign_change && scan.failures == 0, scan.sign_change ? 1 : 0, 0);
    write_scan_csv(s, scan);
  }

  export_discs(s, sw.entries);
  if (writes_output(s)) {
    std::ofstream os = open_out(out_path(s, "omega.csv"));
    write_csv(omega, os);
  }
  return finish(std::move(report), checks, clock, inconclusive);
}

RunResult run_general_case(const ExperimentConfig& config) {
  const Stopwatch clock;
  const Setup s = make_setup(config);
  RunResult r = run_thinness_experiment(s);
  r.report["command"] = "slice";
  r.report["manifold"] = {{"kind", config.manifold_kind}, {"n", config.n}, {"m", config.m}};
  if (s.slice) {
    const SliceInfo& info = *s.slice;
    r.report["slice"] = {{"B", mat_json(info.sampled.plane.B)},
                         {"B_norm", info.sampled.plane.norm()},
                         {"attempts", info.sampled.attempts},
                         {"rejections", info.sampled.rejections},
                         {"flat", s.M.is_flat()},
                         {"to_original", cmat_json(info.result.normalized.to_original)},
                         {"to_normalized", cmat_json(info.result.normalized.to_normalized)},
                         {"certificate", r.report["certificate"]}};
    const RunResult density = run_good_disc_density(s);
    r.report["density"] = strip_timing(density.report);
    r.exit_code = std::max(r.exit_code, density.exit_code);
    if (r.exit_code == 1) r.report["status"] = "fail";
    else if (r.exit_code == 2) r.report["status"] = "inconclusive";
  }
  r.report["timing"] = {{"wall_seconds", clock.seconds()}};
  return r;
}

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::ConfigError:
    case ErrorKind::MalformedGraph:
    case ErrorKind::InvalidArgument:
    case ErrorKind::NotTotallyReal:
      return 3;
    case ErrorKind::HypothesisViolated:
    case ErrorKind::RangeEscape:
    case ErrorKind::FixtureRangeEscape:
      return 1;
    default:
      return 2;
  }
}

Json strip_timing(Json report) {
  if (report.is_object()) {
    report.erase("timing");
    for (auto& [_, v] : report.items()) v = strip_timing(std::move(v));
  } else if (report.is_array()) {
    for (auto& v : report) v = strip_timing(std::move(v));
  }
  return report;
}

// ---------------------------------------------------------------- CLI

int cli_dispatch(int argc, char** argv) {
  CLI::App app{"Analytic discs attached to real submanifolds: solver and verification harness"};
  app.require_subcommand(1);
  std::string config_path, out_dir, kind = "full";
  std::optional<std::uint64_t> seed;
  std::optional<int> nodes;
  const std::vector<std::pair<std::string, std::string>> commands = {
      {"solve", "solve one disc"},
      {"sweep", "solve the disc family over the certified box"},
      {"measure", "harmonic measure and the region Omega"},
      {"jacobian", "Jacobian checks (full, reduced or boundary)"},
      {"density", "good-disc density"},
      {"verify", "end-to-end thinness experiment"},
      {"slice", "general case: slice a generic manifold, then verify"}};
  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", config_path, "experiment config (JSON)")->required();
    sub->add_option("--seed", seed, "overrides the config seed");
    sub->add_option("--out", out_dir, "output directory");
    sub->add_option("--nodes", nodes, "grid nodes (power of two)");
    if (name == "jacobian") {
      sub->add_option("--kind", kind, "full | reduced | boundary")
          ->check(CLI::IsMember({"full", "reduced", "boundary"}));
    }
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 3;
  }
  const std::string command = app.get_subcommands().front()->get_name();

  ExperimentConfig config;
  try {
    config = load_config(config_path);
    if (seed) {
      config.seed = *seed;
      config.certify.seed = *seed;
    }
    if (nodes) {
      if (*nodes < 8 || (*nodes & (*nodes - 1)) != 0) {
        throw Error(ErrorKind::ConfigError, "--nodes must be a power of two >= 8");
      }
      config.n_nodes = *nodes;
    }
    if (!out_dir.empty()) config.output_dir = out_dir;
    if (config.output_dir.empty()) config.output_dir = "out";
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e.kind());
  }

  const Stopwatch clock;
  RunResult result;
  try {
    if (command == "slice") {
      result = run_general_case(config);
    } else {
      const Setup s = make_setup(config);
      if (command == "solve") result = run_solve(s);
      else if (command == "sweep") result = run_sweep(s);
      else if (command == "measure") result = run_measure(s);
      else if (command == "jacobian") result = run_jacobian(s, kind);
      else if (command == "density") result = run_good_disc_density(s);
      else if (s.slice) result = run_general_case(config);
      else result = run_thinness_experiment(s);
    }
  } catch (const Error& e) {
    result.exit_code = exit_code_for(e.kind());
    result.report = {{"command", command},
                     {"seed", config.seed},
                     {"status", "error"},
                     {"error_kind", std::string(to_string(e.kind()))},
                     {"message", e.what()}};
    std::cerr << "error: " << e.what() << "\n";
  } catch (const std::exception& e) {
    result.exit_code = 2;
    result.report = {{"command", command}, {"status", "error"}, {"message", e.what()}};
    std::cerr << "error: " << e.what() << "\n";
  }
  result.report["timing"] = {{"wall_seconds", clock.seconds()}};

  try {
    fs::create_directories(config.output_dir);
    std::ofstream os(fs::path(config.output_dir) / "report.json");
    os << std::setprecision(17) << result.report.dump(2) << "\n";
  } catch (const std::exception& e) {
    std::cerr << "error: cannot write report: " << e.what() << "\n";
    return 3;
  }
  std::cout << command << ": " << result.report.value("status", std::string("error")) << " (exit "
            << result.exit_code << "), report in " << (fs::path(config.output_dir) / "report.json").string()
            << "\n";
  return result.exit_code;
}

}  // namespace adisc
