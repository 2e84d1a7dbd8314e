#include "ks/linsolve.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace ks {
namespace {

std::string failure_message(const char* method, double tol, double rel, int it) {
  std::ostringstream os;
  os << method << " did not reach tol " << tol << " (residual " << rel << " after " << it << " iterations)";
  return os.str();
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t n = 0; n < a.size(); ++n)
    s += a[n] * b[n];
  return s;
}

double wdot(std::span<const double> a, std::span<const double> b, const std::vector<double>& w) {
  if (w.empty())
    return dot(a, b);
  double s = 0.0;
  for (std::size_t n = 0; n < a.size(); ++n)
    s += w[n] * a[n] * b[n];
  return s;
}

double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

void check_operator(const LinearOperator& op, const Field& rhs, std::span<const double> guess, const char* who) {
  if (!op.apply)
    throw ConfigError(std::string(who) + ": operator has no apply function");
  if (rhs.size() != op.size)
    throw ShapeError(std::string(who) + ": rhs size does not match operator");
  if (!guess.empty() && guess.size() != op.size)
    throw ShapeError(std::string(who) + ": initial guess size does not match operator");
  if (!op.inner_weights.empty() && op.inner_weights.size() != op.size)
    throw ShapeError(std::string(who) + ": inner-product weights size does not match operator");
}

int iteration_budget(const SolverOptions& opts, std::size_t n) {
  if (!(opts.tol > 0.0))
    throw ConfigError("solver tolerance must be positive");
  return opts.maxit > 0 ? opts.maxit : static_cast<int>(10 * n);
}

std::vector<double> inverse_diagonal(const LinearOperator& op, bool enabled) {
  if (!enabled)
    return {};
  if (op.diagonal.size() != op.size)
    throw ConfigError("Jacobi preconditioning requested but the operator has no diagonal");
  std::vector<double> inv(op.size);
  for (std::size_t n = 0; n < op.size; ++n) {
    if (op.diagonal[n] == 0.0)
      throw NumericalError("Jacobi preconditioner: zero diagonal entry");
    inv[n] = 1.0 / op.diagonal[n];
  }
  return inv;
}

void precondition(const std::vector<double>& inv_diag, std::span<const double> r, std::span<double> z) {
  if (inv_diag.empty()) {
    std::copy(r.begin(), r.end(), z.begin());
    return;
  }
  for (std::size_t n = 0; n < r.size(); ++n)
    z[n] = inv_diag[n] * r[n];
}

// r = b - A x; returns ||r||_2.
double true_residual(const LinearOperator& op, const std::vector<double>& b, const std::vector<double>& x,
                     std::vector<double>& r) {
  op.apply(x, r);
  for (std::size_t n = 0; n < r.size(); ++n)
    r[n] = b[n] - r[n];
  return norm2(r);
}

SolveResult finish(std::vector<double> x, int iterations, double residual, bool converged) {
  return {Field(std::move(x)), SolveReport{iterations, residual, converged}};
}

constexpr int kMaxRestarts = 50;

// Smallest relative residual that rounding in A x can resolve: a few ulps of
// |A||x|, with max|diag| standing in for the row sums of |A|. Zero without a
// diagonal, which makes tol the only acceptance test.
double roundoff_floor(const LinearOperator& op, const std::vector<double>& x, double bnorm) {
  if (op.diagonal.size() != op.size)
    return 0.0;
  double dmax = 0.0;
  for (double d : op.diagonal)
    dmax = std::max(dmax, std::abs(d));
  return 16.0 * std::numeric_limits<double>::epsilon() * dmax * norm2(x) / bnorm;
}

} // namespace

Field LinearOperator::operator()(const Field& f) const {
  if (f.size() != size)
    throw ShapeError("operator applied to a field of the wrong size");
  Field out(std::vector<double>(size, 0.0));
  apply(f.span(), out.span());
  return out;
}

double relative_residual(const LinearOperator& op, const Field& x, const Field& rhs) {
  std::vector<double> r(op.size);
  const double rn = true_residual(op, rhs.values(), x.values(), r);
  const double bn = norm2(rhs.span());
  return bn > 0.0 ? rn / bn : rn;
}

SolveResult solve_spd(const LinearOperator& op, const Field& rhs, const SolverOptions& opts,
                      std::span<const double> guess) {
  check_operator(op, rhs, guess, "solve_spd");
  const std::size_t n = op.size;
  const int maxit = iteration_budget(opts, n);
  const auto inv_diag = inverse_diagonal(op, opts.jacobi);
  const auto& w = op.inner_weights;
  const std::vector<double>& b = rhs.values();

  const double bnorm = norm2(b);
  std::vector<double> x(n, 0.0);
  if (bnorm == 0.0)
    return finish(std::move(x), 0, 0.0, true);
  if (!guess.empty())
    x.assign(guess.begin(), guess.end());

  std::vector<double> r(n), z(n), p(n), q(n);
  double rel = true_residual(op, b, x, r) / bnorm;
  int it = 0;
  for (int restart = 0; restart <= kMaxRestarts; ++restart) {
    if (rel <= opts.tol)
      return finish(std::move(x), it, rel, true);
    precondition(inv_diag, r, z);
    p = z;
    double rz = wdot(r, z, w);
    bool recursive_converged = false;
    while (it < maxit) {
      ++it;
      op.apply(p, q);
      const double pq = wdot(p, q, w);
      if (!(pq > 0.0) || !std::isfinite(pq))
        break; // loss of definiteness or breakdown; restart from the true residual
      const double a = rz / pq;
      for (std::size_t m = 0; m < n; ++m) {
        x[m] += a * p[m];
        r[m] -= a * q[m];
      }
      if (norm2(r) / bnorm <= opts.tol) {
        recursive_converged = true;
        break;
      }
      precondition(inv_diag, r, z);
      const double rz_new = wdot(r, z, w);
      const double beta = rz_new / rz;
      rz = rz_new;
      for (std::size_t m = 0; m < n; ++m)
        p[m] = z[m] + beta * p[m];
    }
    const double prev = rel;
    rel = true_residual(op, b, x, r) / bnorm;
    if (rel <= opts.tol || (recursive_converged && rel <= roundoff_floor(op, x, bnorm)))
      return finish(std::move(x), it, rel, true);
    if (it >= maxit || (recursive_converged && rel >= prev))
      break;
  }
  SolveReport rep{it, rel, false};
  throw ConvergenceError(failure_message("conjugate gradients", opts.tol, rel, it),
                         rep);
}

SolveResult solve_nonsym(const LinearOperator& op, const Field& rhs, const SolverOptions& opts,
                         std::span<const double> guess) {
  check_operator(op, rhs, guess, "solve_nonsym");
  const std::size_t n = op.size;
  const int maxit = iteration_budget(opts, n);
  const auto inv_diag = inverse_diagonal(op, opts.jacobi);
  const std::vector<double>& b = rhs.values();

  const double bnorm = norm2(b);
  std::vector<double> x(n, 0.0);
  if (bnorm == 0.0)
    return finish(std::move(x), 0, 0.0, true);
  if (!guess.empty())
    x.assign(guess.begin(), guess.end());

  std::vector<double> r(n), rhat(n), p(n), v(n), s(n), t(n), phat(n), shat(n);
  double rel = true_residual(op, b, x, r) / bnorm;
  int it = 0;
  constexpr double tiny = 1e-300;
  for (int restart = 0; restart <= kMaxRestarts; ++restart) {
    if (rel <= opts.tol)
      return finish(std::move(x), it, rel, true);
    rhat = r;
    std::fill(p.begin(), p.end(), 0.0);
    std::fill(v.begin(), v.end(), 0.0);
    double rho = 1.0, alpha = 1.0, omega = 1.0;
    bool recursive_converged = false;
    while (it < maxit) {
      ++it;
      const double rho_new = dot(rhat, r);
      if (std::abs(rho_new) <= 1e-30 * norm2(rhat) * norm2(r) || std::abs(rho_new) < tiny)
        break;
      const double beta = (rho_new / rho) * (alpha / omega);
      rho = rho_new;
      for (std::size_t m = 0; m < n; ++m)
        p[m] = r[m] + beta * (p[m] - omega * v[m]);
      precondition(inv_diag, p, phat);
      op.apply(phat, v);
      const double rv = dot(rhat, v);
      if (std::abs(rv) < tiny || !std::isfinite(rv))
        break;
      alpha = rho / rv;
      for (std::size_t m = 0; m < n; ++m)
        s[m] = r[m] - alpha * v[m];
      if (norm2(s) / bnorm <= opts.tol) {
        for (std::size_t m = 0; m < n; ++m)
          x[m] += alpha * phat[m];
        recursive_converged = true;
        break;
      }
      precondition(inv_diag, s, shat);
      op.apply(shat, t);
      const double tt = dot(t, t);
      if (!(tt > 0.0))
        break;
      omega = dot(t, s) / tt;
      for (std::size_t m = 0; m < n; ++m) {
        x[m] += alpha * phat[m] + omega * shat[m];
        r[m] = s[m] - omega * t[m];
      }
      if (norm2(r) / bnorm <= opts.tol) {
        recursive_converged = true;
        break;
      }
      if (std::abs(omega) < tiny)
        break;
    }
    const double prev = rel;
    rel = true_residual(op, b, x, r) / bnorm;
    if (!std::isfinite(rel))
      break;
    if (rel <= opts.tol || (recursive_converged && rel <= roundoff_floor(op, x, bnorm)))
      return finish(std::move(x), it, rel, true);
    if (it >= maxit || (recursive_converged && rel >= prev))
      break;
  }
  SolveReport rep{it, rel, false};
  throw ConvergenceError(failure_message("BiCGSTAB", opts.tol, rel, it),
                         rep);
}

} // namespace ks
