#pragma once

// Config-driven experiments and the command-line entry point.

#include "adisc/bishop.hpp"
#include "adisc/geometry.hpp"
#include "adisc/jacobians.hpp"
#include "adisc/potential.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace adisc {

using Json = nlohmann::json;

inline constexpr int kSchemaVersion = 1;

struct DensitySettings {
  int n_discs = 1000;
  /// Restrict sampling to t = 0 (constant discs).
  bool t_zero = false;
  double floor = 0.99;
  /// Re-classify every disc at 2 n_nodes and count disagreements.
  bool check_doubling = true;
};

struct CoverageSettings {
  double probe_radius = 1e-3;
  int n_probes = 64;
  int n_targets = 10000;
  int n_starts = 16;
  double floor = 0.999;
  int max_newton = 30;
  double newton_tol = 1e-10;
};

struct JacobianSettings {
  double step = 1e-5;
  int scan_points = 5;
  /// Lattice points per axis of the scan embedded in `verify`.
  int verify_scan_points = 3;
  /// t_n used by the reduced map and boundary minor (clipped to the certified box).
  double t_n = 0.02;
  /// Radius where the reduced map is evaluated.
  double reduced_radius = 1.0 - 1e-3;
  /// Evaluation angles of the boundary minor spread over gamma0.
  int boundary_points = 9;
};

struct ExperimentConfig {
  int schema_version = kSchemaVersion;
  std::uint64_t seed = 0;
  std::string output_dir;

  /// "totally_real" or "generic".
  std::string manifold_kind = "totally_real";
  int n = 0;
  int m = 0;
  double domain_radius = 0.5;
  PolyMap h;
  SliceSampling slice;
  double slice_threshold = kDefaultSliceThreshold;

  Arc gamma0{kPi / 4, 3 * kPi / 4};
  /// Functions of the manifold parameters (x, or (x, y'') for generic graphs).
  std::vector<Polynomial> exceptional;
  double eta = 1e-6;
  double max_zero_arc = 0.05;

  ParamBox box;
  CertifyOptions certify;
  int n_nodes = 1024;
  int lattice_radii = kDefaultLatticeRadii;
  BishopOptions solver;
  DiscPoint zeta0{0.8, kPi / 2};
  double omega_threshold = 0.25;
  Json psh_fixtures = Json::array();
  int sweep_points = 3;
  DiscParams solve_params;
  int compositions = 100;

  DensitySettings density;
  CoverageSettings coverage;
  JacobianSettings jacobian;
};

/// Throws ConfigError with a path-qualified message on any schema problem.
ExperimentConfig parse_config(const Json& doc);
ExperimentConfig load_config(const std::string& path);

std::vector<PshTestFn> build_fixtures(const Json& specs, int n);

struct SliceInfo {
  SampledSlice sampled;
  SliceResult result;
};

/// Everything an experiment needs, on the slice when the manifold is generic.
struct Setup {
  ExperimentConfig config;
  CircleGrid grid;
  CutoffV v;
  TotallyRealGraph M;
  ExceptionalSet I;
  std::optional<SliceInfo> slice;
};

Setup make_setup(const ExperimentConfig& config);
/// The same setup resampled on a grid with n_nodes nodes.
Setup with_nodes(const Setup& setup, int n_nodes);

struct RunResult {
  Json report;
  /// 0 pass, 1 violation, 2 non-convergence / inconclusive, 3 config error.
  int exit_code = 0;
};

/// Random targets in a ball about S(0) (the W proxy) hit by good-disc images.
struct CoverageResult {
  double radius = 0.0;
  Vec center;
  std::vector<Vec> targets;
  /// Per target: 1 when some start reaches it with a good disc inside the box.
  std::vector<char> covered;
  /// bounds[f][t] = k + (K - k)(1 + omega(zeta0)) for fixture f on the disc reaching t (NaN otherwise).
  std::vector<std::vector<double>> bounds;
  /// Same layout, V at the target.
  std::vector<std::vector<double>> values;
  int n_covered = 0;

  double fraction() const {
    return targets.empty() ? 0.0 : static_cast<double>(n_covered) / static_cast<double>(targets.size());
  }
};

/// Targets and Newton starts come from seeded substreams keyed by index, so with the
/// same seed a run with more starts tries a superset of the starts of a smaller run.
CoverageResult estimate_coverage(const Setup& s, const ParamBox& box, double radius, int n_targets,
                                 int n_starts, const std::vector<PshTestFn>& fixtures);

RunResult run_solve(const Setup& s);
RunResult run_sweep(const Setup& s);
RunResult run_measure(const Setup& s);
/// kind is "full", "reduced" or "boundary".
RunResult run_jacobian(const Setup& s, const std::string& kind);
RunResult run_good_disc_density(const Setup& s);
RunResult run_thinness_experiment(const Setup& s);
/// Slices a generic manifold first; with m = n it is run_thinness_experiment.
RunResult run_general_case(const ExperimentConfig& config);

/// Exit code for a failure of the given kind.
int exit_code_for(ErrorKind kind);

/// Drops the "timing" member so reports can be compared across runs.
Json strip_timing(Json report);

/// Parses argv, runs one subcommand, writes report.json and returns the exit code.
int cli_dispatch(int argc, char** argv);

}  // namespace adisc
