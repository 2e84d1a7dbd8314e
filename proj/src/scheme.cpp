#include "ks/scheme.hpp"

#include <cmath>
#include <string>

namespace ks {
namespace {

void require_finite(const Field& f, const char* what, int step) {
  if (!f.all_finite())
    throw NumericalError(std::string("non-finite value in ") + what + " at step " + std::to_string(step));
}

double laplacian_diagonal(const Grid2D& g) { return 2.0 / (g.hx * g.hx) + 2.0 / (g.hy * g.hy); }

} // namespace

void ModelParams::validate() const {
  auto ok = [](double v) { return std::isfinite(v) && v > 0.0; };
  if (!ok(eps) || !ok(alpha) || !ok(beta) || !ok(gamma))
    throw ConfigError("model parameters eps, alpha, beta, gamma must all be positive");
}

bool State::warm() const {
  return cbar.warm() && c.warm() && u.warm() && rho.warm() && energy.warm();
}

State make_state(const Grid2D& g, int k, double tau) {
  if (!(tau > 0.0) || !std::isfinite(tau))
    throw ConfigError("time step must be positive");
  State s;
  s.grid = g;
  s.scheme = bdf_coefficients(k);
  s.tau = tau;
  s.n = -1;
  const auto cap = static_cast<std::size_t>(k);
  s.cbar = History<Field>(cap);
  s.c = History<Field>(cap);
  s.u = History<Field>(cap);
  s.rho = History<Field>(cap);
  s.energy = History<double>(cap);
  return s;
}

void push_level(State& s, Level level) {
  for (const Field* f : {&level.cbar, &level.c, &level.u, &level.rho})
    check_shape(*f, s.grid, "push_level");
  if (s.n < 0)
    s.mass0 = integrate(level.rho, s.grid);
  s.cbar.push(std::move(level.cbar));
  s.c.push(std::move(level.c));
  s.u.push(std::move(level.u));
  s.rho.push(std::move(level.rho));
  s.energy.push(level.energy);
  ++s.n;
}

LinearOperator helmholtz_operator(const Grid2D& g, double shift) {
  LinearOperator op;
  op.size = g.size();
  op.symmetric = true;
  op.inner_weights = g.weights();
  op.diagonal.assign(g.size(), shift + laplacian_diagonal(g));
  op.apply = [g, shift](std::span<const double> x, std::span<double> y) {
    apply_laplacian(x, y, g);
    for (std::size_t n = 0; n < x.size(); ++n)
      y[n] = shift * x[n] - y[n];
  };
  return op;
}

LinearOperator advection_diffusion_operator(const Grid2D& g, double shift, VectorField w) {
  check_shape(w.dx, g, "advection_diffusion_operator");
  check_shape(w.dy, g, "advection_diffusion_operator");
  LinearOperator op;
  op.size = g.size();
  op.symmetric = false;
  op.diagonal.assign(g.size(), shift + laplacian_diagonal(g));
  op.apply = [g, shift, w = std::move(w)](std::span<const double> x, std::span<double> y) {
    const double ax = 1.0 / (g.hx * g.hx), ay = 1.0 / (g.hy * g.hy);
    const double sx = 0.5 / g.hx, sy = 0.5 / g.hy;
    const int nx = g.nx, ny = g.ny;
    for (int j = 0; j < ny; ++j) {
      const int jd = (j == 0) ? 1 : j - 1;
      const int ju = (j == ny - 1) ? ny - 2 : j + 1;
      const bool y_interior = j > 0 && j < ny - 1;
      for (int i = 0; i < nx; ++i) {
        const int il = (i == 0) ? 1 : i - 1;
        const int ir = (i == nx - 1) ? nx - 2 : i + 1;
        const std::size_t n = g.index(i, j);
        const double v = x[n];
        const double xl = x[g.index(il, j)], xr = x[g.index(ir, j)];
        const double xd = x[g.index(i, jd)], xu = x[g.index(i, ju)];
        const double lap = ax * (xl - 2.0 * v + xr) + ay * (xd - 2.0 * v + xu);
        const double gx = (i > 0 && i < nx - 1) ? sx * (xr - xl) : 0.0;
        const double gy = y_interior ? sy * (xu - xd) : 0.0;
        y[n] = shift * v - lap - (w.dx[n] * gx + w.dy[n] * gy);
      }
    }
  };
  return op;
}

SolveResult step1_chemoattractant(const State& s, const ModelParams& p, double tau,
                                  const std::optional<Field>& f_c, const SolverOptions& opts) {
  const BdfScheme& b = s.scheme;
  Field rhs = history_combination(s.cbar, b);
  rhs *= p.eps / tau;
  Field rho_ext = extrapolate(s.rho, b);
  rho_ext *= p.beta;
  rhs += rho_ext;
  if (f_c) {
    check_shape(*f_c, s.grid, "step1 forcing");
    rhs += *f_c;
  }
  const LinearOperator op = helmholtz_operator(s.grid, p.eps * b.alpha / tau + p.alpha);
  const Field guess = extrapolate(s.cbar, b);
  return solve_spd(op, rhs, opts, guess.span());
}

SolveResult step2_log_density(const State& s, const ModelParams& p, double tau, const Field& cbar_new,
                              const std::optional<Field>& f_u, const SolverOptions& opts) {
  const BdfScheme& b = s.scheme;
  const Grid2D& g = s.grid;
  check_shape(cbar_new, g, "step2");
  const Field u_ext = extrapolate(s.u, b);
  VectorField w = gradient(u_ext, g);
  {
    const VectorField gc = gradient(extrapolate(s.c, b), g);
    for (std::size_t n = 0; n < g.size(); ++n) {
      w.dx[n] -= p.gamma * gc.dx[n];
      w.dy[n] -= p.gamma * gc.dy[n];
    }
  }
  Field rhs = history_combination(s.u, b);
  rhs *= 1.0 / tau;
  const Field lap_c = apply_laplacian(cbar_new, g);
  for (std::size_t n = 0; n < g.size(); ++n)
    rhs[n] -= p.gamma * lap_c[n];
  if (f_u) {
    check_shape(*f_u, g, "step2 forcing");
    rhs += *f_u;
  }
  const LinearOperator op = advection_diffusion_operator(g, b.alpha / tau, std::move(w));
  return solve_nonsym(op, rhs, opts, u_ext.span());
}

Recovery step3_recover_density(const State& s, const Field& u_new) {
  check_shape(u_new, s.grid, "step3");
  Recovery r;
  r.rho_bar = u_new;
  for (double& v : r.rho_bar.values())
    v = std::exp(v);
  const double bar_mass = integrate(r.rho_bar, s.grid);
  if (!std::isfinite(bar_mass) || !(bar_mass > 0.0))
    throw NumericalError("density recovery: integral of exp(u) is " + std::to_string(bar_mass));
  r.lambda = integrate(s.rho.newest(), s.grid) / bar_mass;
  r.rho = r.rho_bar;
  r.rho *= r.lambda;
  return r;
}

EnergyParts energy_parts(const Field& rho, const Field& c, const ModelParams& p, const Grid2D& g) {
  check_shape(rho, g, "energy");
  check_shape(c, g, "energy");
  const VectorField dc = gradient(c, g);
  CompensatedSum F, G;
  for (int j = 0; j < g.ny; ++j) {
    for (int i = 0; i < g.nx; ++i) {
      const std::size_t n = g.index(i, j);
      const double r = rho[n];
      if (!(r > 0.0))
        throw DomainError("energy: density must be positive, got " + std::to_string(r) + " at node " +
                          std::to_string(n));
      const double w = g.weight(i, j);
      F.add(w * (r * std::log(r) - r - r * c[n]));
      G.add(w * 0.5 * (p.alpha * c[n] * c[n] + dc.dx[n] * dc.dx[n] + dc.dy[n] * dc.dy[n]));
    }
  }
  return {F.value(), G.value()};
}

double compute_energy(const Field& rho, const Field& c, double mu, const ModelParams& p, const Grid2D& g) {
  const EnergyParts e = energy_parts(rho, c, p, g);
  return e.F + mu * e.G;
}

double compute_dissipation(const Field& rho_new, const Field& u_new, const Field& cbar_new,
                           const History<Field>& cbar_hist, double tau, const BdfScheme& scheme,
                           const ModelParams& p, const Grid2D& g) {
  check_shape(rho_new, g, "dissipation");
  check_shape(u_new, g, "dissipation");
  check_shape(cbar_new, g, "dissipation");
  // grad log rho = grad u: lambda is spatially constant
  const VectorField d = gradient(u_new - cbar_new, g);
  const Field dt = discrete_derivative(cbar_new, cbar_hist, tau, scheme);
  CompensatedSum s;
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      const std::size_t n = g.index(i, j);
      s.add(g.weight(i, j) *
            (rho_new[n] * (d.dx[n] * d.dx[n] + d.dy[n] * d.dy[n]) + p.eps * dt[n] * dt[n]));
    }
  return s.value();
}

EnergyCorrection step4_energy_correction(const State& s, const Field& rho_new, const Field& u_new,
                                         const Field& cbar_new, double tau, const ModelParams& p) {
  const BdfScheme& b = s.scheme;
  EnergyCorrection out;
  out.dissipation = compute_dissipation(rho_new, u_new, cbar_new, s.cbar, tau, b, p, s.grid);
  out.parts = energy_parts(rho_new, cbar_new, p, s.grid);
  const double hist = history_combination(s.energy, b);
  const double numer = hist - tau * out.dissipation - b.alpha * out.parts.F;
  const double denom = b.alpha * out.parts.G;
  const double scale = std::abs(hist) + tau * out.dissipation + b.alpha * std::abs(out.parts.F);
  if (!(denom > 1e-14 * scale) || !std::isfinite(denom))
    throw DegenerateFieldError("energy correction: quadratic energy of cbar vanishes (G = " +
                               std::to_string(out.parts.G) + ")");
  out.mu = numer / denom;
  if (!(out.mu > 0.0) || !std::isfinite(out.mu))
    throw NonpositiveCorrectionError("energy correction scalar mu = " + std::to_string(out.mu) +
                                     " is not positive; reduce the time step");
  out.energy = out.parts.F + out.mu * out.parts.G;
  return out;
}

Field step5_rescale(const Field& cbar_new, double mu) {
  if (!(mu > 0.0) || !std::isfinite(mu))
    throw NonpositiveCorrectionError("cannot rescale by sqrt(mu) with mu = " + std::to_string(mu));
  Field c = cbar_new;
  c *= std::sqrt(mu);
  return c;
}

StepDiagnostics advance(State& s, const ModelParams& p, const AdvanceOptions& opts) {
  if (!s.warm())
    throw StateError("advance: state history is not warm");
  const double tau = s.tau;
  const int step = s.n + 1;
  const double t_next = step * tau;

  std::optional<Field> f_c, f_u;
  if (opts.forcing.f_c)
    f_c = opts.forcing.f_c(t_next);
  if (opts.forcing.f_u)
    f_u = opts.forcing.f_u(t_next);

  StepDiagnostics d;
  d.step = step;
  d.time = t_next;

  SolveResult s1 = step1_chemoattractant(s, p, tau, f_c, opts.solver);
  require_finite(s1.x, "cbar", step);
  d.step1 = s1.report;

  SolveResult s2 = step2_log_density(s, p, tau, s1.x, f_u, opts.solver);
  require_finite(s2.x, "u", step);
  d.step2 = s2.report;

  Recovery rec = step3_recover_density(s, s2.x);
  require_finite(rec.rho, "rho", step);

  Level next;
  if (opts.epc) {
    const EnergyCorrection ec = step4_energy_correction(s, rec.rho, s2.x, s1.x, tau, p);
    next.c = step5_rescale(s1.x, ec.mu);
    d.mu = ec.mu;
    d.dissipation = ec.dissipation;
    next.energy = ec.energy;
  } else {
    next.c = s1.x;
    d.mu = 1.0;
    d.dissipation = compute_dissipation(rec.rho, s2.x, s1.x, s.cbar, tau, s.scheme, p, s.grid);
    next.energy = compute_energy(rec.rho, s1.x, 1.0, p, s.grid);
  }
  require_finite(next.c, "c", step);
  d.lambda = rec.lambda;
  d.energy = next.energy;
  d.mass = integrate(rec.rho, s.grid);
  d.min_rho = rec.rho.min();

  next.cbar = std::move(s1.x);
  next.u = std::move(s2.x);
  next.rho = std::move(rec.rho);
  push_level(s, std::move(next));
  s.lambda = d.lambda;
  s.mu = d.mu;
  return d;
}

} // namespace ks
