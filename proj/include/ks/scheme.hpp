#pragma once

// Linear, decoupled BDF-k time stepping for the parabolic-parabolic
// Keller-Segel system
//
//   eps c_t = Lap c - alpha c + beta rho
//   rho_t   = Lap rho - gamma div(rho grad c)
//
// advanced in the log variable u = log rho. One step runs five stages:
//
//   1. implicit Helmholtz solve for the provisional chemoattractant cbar
//   2. implicit advection-diffusion solve for u with frozen, extrapolated
//      advection velocity
//   3. rho = lambda * exp(u), lambda fixing the total mass
//   4. scalar mu fixing the discrete energy law D E = -dissipation
//   5. c = sqrt(mu) * cbar
//
// Stages 3-5 are assignments; all the linear algebra is in 1 and 2.

#include <functional>
#include <optional>
#include <vector>

#include "ks/bdf.hpp"
#include "ks/grid.hpp"
#include "ks/linsolve.hpp"

namespace ks {

struct ModelParams {
  double eps = 1.0;   ///< response rate of the chemoattractant
  double alpha = 1.0; ///< chemoattractant decay
  double beta = 1.0;  ///< production by cells
  double gamma = 1.0; ///< chemotactic sensitivity

  /// Throws ConfigError unless all four are finite and strictly positive.
  void validate() const;
};

/// Source terms for manufactured solutions, as grid fields at a given time.
/// Empty closures mean no forcing.
struct Forcing {
  std::function<Field(double)> f_c;
  std::function<Field(double)> f_u;
};

struct State {
  Grid2D grid;
  BdfScheme scheme;
  double tau = 0.0;
  int n = 0; ///< time index of the newest stored level

  History<Field> cbar, c, u, rho;
  History<double> energy;
  double lambda = 1.0;
  double mu = 1.0;
  double mass0 = 0.0;

  double time() const { return n * tau; }
  bool warm() const;
};

/// Empty state for order k; levels are pushed by the initializers.
State make_state(const Grid2D& g, int k, double tau);

/// One stored time level.
struct Level {
  Field cbar, c, u, rho;
  double energy = 0.0;
};

/// Appends a level to every history and advances the time index (except for
/// the very first level, which sits at n = 0).
void push_level(State& s, Level level);

struct StepDiagnostics {
  int step = 0;
  double time = 0.0;
  double mass = 0.0;
  double min_rho = 0.0;
  double energy = 0.0;
  double dissipation = 0.0;
  double lambda = 1.0;
  double mu = 1.0;
  SolveReport step1;
  SolveReport step2;
};

struct AdvanceOptions {
  bool epc = true;
  SolverOptions solver;
  Forcing forcing;
};

/// Stage 1: solves (eps*alpha_k/tau + alpha) cbar - Lap cbar
///   = eps*A_k(cbar)/tau + beta*B_k(rho) + f_c.
SolveResult step1_chemoattractant(const State& s, const ModelParams& p, double tau,
                                  const std::optional<Field>& f_c, const SolverOptions& opts);

/// Linear operator of stage 1.
LinearOperator helmholtz_operator(const Grid2D& g, double shift);

/// Stage 2: with w = grad B_k(u) - gamma grad B_k(c), solves
///   (alpha_k/tau) u - Lap u - w . grad u = A_k(u)/tau - gamma Lap cbar_new + f_u.
SolveResult step2_log_density(const State& s, const ModelParams& p, double tau, const Field& cbar_new,
                              const std::optional<Field>& f_u, const SolverOptions& opts);

/// Linear operator of stage 2 for a given advection velocity.
LinearOperator advection_diffusion_operator(const Grid2D& g, double shift, VectorField w);

struct Recovery {
  Field rho_bar;
  double lambda = 1.0;
  Field rho;
};

/// Stage 3: rho_bar = exp(u), lambda = int(rho^n) / int(rho_bar), rho = lambda rho_bar.
Recovery step3_recover_density(const State& s, const Field& u_new);

/// Pieces of the free energy that are linear in the correction scalar:
///   E = F + mu*G, F = int(rho log rho - rho - rho c), G = 1/2 int(alpha c^2 + |grad c|^2).
struct EnergyParts {
  double F = 0.0;
  double G = 0.0;
};

EnergyParts energy_parts(const Field& rho, const Field& c, const ModelParams& p, const Grid2D& g);

/// Free energy with mu-weighted quadratic terms; mu = 1 is the continuous energy.
double compute_energy(const Field& rho, const Field& c, double mu, const ModelParams& p, const Grid2D& g);

/// int( rho |grad(u - cbar)|^2 + eps |D_k cbar|^2 ), always >= 0.
double compute_dissipation(const Field& rho_new, const Field& u_new, const Field& cbar_new,
                           const History<Field>& cbar_hist, double tau, const BdfScheme& scheme,
                           const ModelParams& p, const Grid2D& g);

struct EnergyCorrection {
  double mu = 1.0;
  double dissipation = 0.0;
  double energy = 0.0;
  EnergyParts parts;
};

/// Stage 4: mu such that D_k E^{n+1} = -dissipation.
EnergyCorrection step4_energy_correction(const State& s, const Field& rho_new, const Field& u_new,
                                         const Field& cbar_new, double tau, const ModelParams& p);

/// Stage 5: c = sqrt(mu) cbar.
Field step5_rescale(const Field& cbar_new, double mu);

/// Runs stages 1-5, pushes the new level and returns its diagnostics.
/// With epc off, stages 4-5 are replaced by mu = 1, c = cbar.
StepDiagnostics advance(State& s, const ModelParams& p, const AdvanceOptions& opts);

// ---- startup ---------------------------------------------------------------

/// Exact (c, rho) at time t, sampled on the grid.
using ExactSampler = std::function<std::pair<Field, Field>(double)>;

struct Startup {
  State state;
  /// Diagnostics for levels 1..k-1 (empty for k = 1).
  std::vector<StepDiagnostics> rows;
};

/// Fills levels 0..k-1 from an exact solution.
Startup initialize_exact(const Grid2D& g, int k, double tau, const ModelParams& p, const ExactSampler& exact);

/// Level 0 from initial data; levels 1..k-1 from the order k-1 scheme run with
/// `substeps` substeps per step (0 picks ceil(tau^{-1/(k-1)}), so that the
/// startup error is O(tau^k)). The lower-order run is started the same way.
Startup initialize_cascade(const Grid2D& g, int k, double tau, const ModelParams& p, const Field& c0,
                           const Field& rho0, const AdvanceOptions& opts, int substeps = 0);

/// Substep count used by the cascade for order k when `substeps` is 0.
int default_startup_substeps(int k, double tau);

} // namespace ks
