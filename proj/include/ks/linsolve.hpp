#pragma once

// Matrix-free Krylov solvers for the two implicit solves of each time step.
//
// solve_spd runs conjugate gradients in the inner product given by
// LinearOperator::inner_weights. The Neumann-closed stencils are self-adjoint
// in the trapezoidal inner product rather than the Euclidean one, so the grid
// weights go there. solve_nonsym is BiCGSTAB. Both stop on the Euclidean
// relative residual ||A x - b||_2 / ||b||_2 and report the recomputed true
// residual. A solve whose residual stagnates below the rounding floor of the
// stencil (a few ulps of max|diag| ||x|| / ||b||) also counts as converged, so
// tol values under that floor return the best attainable answer.

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "ks/errors.hpp"
#include "ks/grid.hpp"

namespace ks {

struct LinearOperator {
  std::size_t size = 0;
  std::function<void(std::span<const double>, std::span<double>)> apply;
  /// Self-adjoint (and positive definite) in the inner product below.
  bool symmetric = false;
  /// Diagonal inner-product weights; empty means Euclidean.
  std::vector<double> inner_weights;
  /// Operator diagonal, used by the Jacobi preconditioner.
  std::vector<double> diagonal;

  Field operator()(const Field& f) const;
};

struct SolveReport {
  int iterations = 0;
  double residual = 0.0;
  bool converged = false;
};

struct SolverOptions {
  double tol = 1e-10;
  /// 0 selects 10 * (number of unknowns).
  int maxit = 0;
  bool jacobi = false;
};

struct SolveResult {
  Field x;
  SolveReport report;
};

/// Thrown when a solve exhausts its iteration budget or breaks down.
class ConvergenceError : public NumericalError {
public:
  ConvergenceError(const std::string& what, SolveReport r) : NumericalError(what), report(r) {}
  SolveReport report;
};

/// ||op(x) - rhs||_2 / ||rhs||_2 (or ||op(x)||_2 when rhs = 0).
double relative_residual(const LinearOperator& op, const Field& x, const Field& rhs);

/// Conjugate gradients. `guess` (empty for zero) seeds the iteration.
SolveResult solve_spd(const LinearOperator& op, const Field& rhs, const SolverOptions& opts,
                      std::span<const double> guess = {});

/// BiCGSTAB with restart on breakdown.
SolveResult solve_nonsym(const LinearOperator& op, const Field& rhs, const SolverOptions& opts,
                         std::span<const double> guess = {});

} // namespace ks
