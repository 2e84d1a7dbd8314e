#pragma once

// Run configuration in a plain `key = value` format, one pair per line,
// '#' starts a comment. Required keys: xmin xmax ymin ymax nx ny tau T k.
//
//   key               default     meaning
//   eps alpha beta gamma  1       model parameters
//   mode              simulate    simulate | converge
//   epc               on          energy correction (off by default in converge mode)
//   start             cascade     cascade | exact (exact needs a manufactured solution)
//   initial           example2    example1 | example2 | example3 | uniform
//   forcing           none        none | analytic | discrete (manufactured runs only)
//   snapshot_every    0           steps between field snapshots (0: final only)
//   snapshot_format   csv         csv | vtk
//   out_dir           out
//   solver_tol        1e-10       relative residual of both linear solves
//   solver_maxit      0           0 means 10 * nx * ny
//   jacobi            off         diagonal preconditioning
//   startup_substeps  0           cascade substeps per step (0: tau^{-1/(k-1)})

#include <filesystem>
#include <functional>
#include <string>
#include <string_view>

#include "ks/grid.hpp"
#include "ks/scheme.hpp"

namespace ks {

enum class RunMode { simulate, converge };
enum class StartMode { exact, cascade };
enum class SnapshotFormat { csv, vtk };
enum class ForcingKind { none, analytic, discrete };

struct RunConfig {
  ModelParams params;
  double xmin = 0, xmax = 0, ymin = 0, ymax = 0;
  int nx = 0, ny = 0;
  double tau = 0, T = 0;
  int k = 0;
  RunMode mode = RunMode::simulate;
  bool epc = true;
  StartMode start = StartMode::cascade;
  std::string initial = "example2";
  ForcingKind forcing = ForcingKind::none;
  int snapshot_every = 0;
  SnapshotFormat snapshot_format = SnapshotFormat::csv;
  std::string out_dir = "out";
  double solver_tol = 1e-10;
  int solver_maxit = 0;
  bool jacobi = false;
  int startup_substeps = 0;

  Grid2D grid() const { return build_grid(xmin, xmax, ymin, ymax, nx, ny); }
  SolverOptions solver() const { return {solver_tol, solver_maxit, jacobi}; }
  /// Number of steps, round(T / tau).
  int steps() const;
};

/// Throws ConfigError naming the offending line.
RunConfig parse_config(std::string_view text);
RunConfig load_config(const std::filesystem::path& path);

struct InitialCondition {
  std::function<double(double, double)> c0, rho0;
};

/// example1: manufactured solution at t = 0; example2: c = exp(-r^2/2),
/// rho = 4 exp(-r^2); example3: c = 420 exp(-42 r^2), rho = 840 exp(-84 r^2);
/// uniform: the steady state rho = 1, c = beta/alpha.
InitialCondition builtin_initial_conditions(const std::string& name, const ModelParams& p = {});

} // namespace ks
