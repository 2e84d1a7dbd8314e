#pragma once

// Manufactured solutions, their source terms, error norms, and the
// tau-refinement harness that measures temporal convergence orders.

#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "ks/grid.hpp"
#include "ks/scheme.hpp"

namespace ks {

/// Exact solution with the derivatives needed to build forcing.
struct ManufacturedSolution {
  using Fn = std::function<double(double, double, double)>;
  Fn c, rho, u;
  Fn c_t, u_t;
  Fn c_x, c_y, u_x, u_y;
  Fn lap_c, lap_u;
  /// Domain on which the solution satisfies the Neumann conditions.
  double xmin = 0, xmax = 1, ymin = 0, ymax = 1;
};

/// c = S sin t + 1.1, rho = S sin t / (2 pi^2 + 1) + 1.1,
/// S = sin(10 pi x) sin(10 pi y), on (-0.05, 0.05)^2.
ManufacturedSolution example1_solution();

/// Pointwise sources that make the exact solution satisfy the forced system
///   eps c_t = Lap c - alpha c + beta rho + f_c
///   u_t = Lap u + |grad u|^2 - gamma grad u . grad c - gamma Lap c + f_u.
struct PointForcing {
  ManufacturedSolution::Fn f_c, f_u;
};
PointForcing forcing(const ManufacturedSolution& sol, const ModelParams& p);

/// analytic: the pointwise sources sampled at the nodes.
/// discrete: the same sources with every spatial derivative replaced by the
/// grid operator, so node samples of the exact solution solve the spatially
/// discrete system exactly and only the time discretisation error remains.
enum class ForcingMode { analytic, discrete };

Forcing grid_forcing(const ManufacturedSolution& sol, const ModelParams& p, const Grid2D& g, ForcingMode mode);

/// Exact (c, rho) samples for initialize_exact.
ExactSampler exact_sampler(const ManufacturedSolution& sol, const Grid2D& g);

struct ErrorNorms {
  double cbar_L2 = 0, u_L2 = 0, rho_L2 = 0, c_L2 = 0;
  double cbar_H1 = 0, u_H1 = 0, rho_H1 = 0, c_H1 = 0;
};

/// Norms of (exact - numerical) for the newest level of s, taken at time t.
ErrorNorms error_norms(const State& s, const ManufacturedSolution& sol, double t, const Grid2D& g);

enum class GridPolicy {
  fixed,  ///< the configured grid for every tau
  coupled ///< h = tau^k
};

struct ConvergenceConfig {
  ModelParams params;
  double T = 1.0;
  int nx = 129, ny = 129;
  bool epc = false;
  ForcingMode forcing = ForcingMode::discrete;
  SolverOptions solver;
  /// 0: KS_THREADS, else hardware concurrency.
  int threads = 0;
};

struct ConvergenceRow {
  int k = 1;
  double tau = 0;
  int nx = 0, ny = 0;
  ErrorNorms err;
  double max_dev_lambda = 0;
  double max_dev_mu = 0;
  /// sqrt(tau * sum_n ||grad e^n||^2) over the scheme steps.
  double acc_cbar_H1 = 0, acc_u_H1 = 0, acc_rho_H1 = 0, acc_c_H1 = 0;
};

struct OrderFit {
  std::string column;
  double order = 0;
  /// RMS deviation of log(error) from the fitted line.
  double residual = 0;
};

struct ConvergenceTable {
  std::vector<ConvergenceRow> rows;
  std::vector<OrderFit> fits;
};

/// Least-squares slope of log(err) against log(tau). NaN if any err <= 0.
OrderFit fit_order(std::span<const double> taus, std::span<const double> errs, std::string column = {});

/// Column names of the convergence CSV, in order, after k and tau.
const std::vector<std::string>& convergence_columns();
/// Value of a named column for one row.
double column_value(const ConvergenceRow& r, const std::string& column);

/// Requires >= 3 taus, strictly decreasing. Every tau point is an independent
/// exact-start run to T; they run on up to `threads` workers.
ConvergenceTable run_convergence(int k, const std::vector<double>& taus, GridPolicy policy,
                                 const ConvergenceConfig& cfg,
                                 const ManufacturedSolution& sol = example1_solution());

/// One run of the harness (exposed for tests).
ConvergenceRow run_convergence_point(int k, double tau, const Grid2D& g, const ConvergenceConfig& cfg,
                                     const ManufacturedSolution& sol);

void write_convergence_csv(const ConvergenceTable& t, std::ostream& os);
void write_accumulated_csv(const ConvergenceTable& t, std::ostream& os);
/// One line per column: name, fitted order, fit residual.
std::string order_summary(const ConvergenceTable& t);

/// KS_THREADS if set and positive, else the hardware concurrency (at least 1).
int harness_threads();

} // namespace ks
