#include <algorithm>
#include <cmath>
#include <string>

#include "ks/scheme.hpp"

namespace ks {
namespace {

Field log_density(const Field& rho) {
  Field u = rho;
  for (double& v : u.values()) {
    if (!(v > 0.0) || !std::isfinite(v))
      throw DomainError("initial density must be positive and finite, got " + std::to_string(v));
    v = std::log(v);
  }
  return u;
}

StepDiagnostics level_row(const State& s, int step) {
  StepDiagnostics d;
  d.step = step;
  d.time = step * s.tau;
  d.mass = integrate(s.rho.newest(), s.grid);
  d.min_rho = s.rho.newest().min();
  d.energy = s.energy.newest();
  return d;
}

} // namespace

int default_startup_substeps(int k, double tau) {
  if (k <= 1 || tau >= 1.0)
    return 1;
  const double m = std::pow(tau, -1.0 / (k - 1));
  return static_cast<int>(std::max(1.0, std::ceil(m - 1e-9)));
}

Startup initialize_exact(const Grid2D& g, int k, double tau, const ModelParams& p, const ExactSampler& exact) {
  if (!exact)
    throw ConfigError("exact start requested without an exact solution");
  p.validate();
  Startup out{make_state(g, k, tau), {}};
  for (int i = 0; i < k; ++i) {
    auto [c, rho] = exact(i * tau);
    check_shape(c, g, "exact start");
    check_shape(rho, g, "exact start");
    Level level;
    level.u = log_density(rho);
    level.energy = compute_energy(rho, c, 1.0, p, g);
    level.cbar = c;
    level.c = std::move(c);
    level.rho = std::move(rho);
    push_level(out.state, std::move(level));
    if (i > 0)
      out.rows.push_back(level_row(out.state, i));
  }
  return out;
}

Startup initialize_cascade(const Grid2D& g, int k, double tau, const ModelParams& p, const Field& c0,
                           const Field& rho0, const AdvanceOptions& opts, int substeps) {
  p.validate();
  check_shape(c0, g, "initial chemoattractant");
  check_shape(rho0, g, "initial density");
  Startup out{make_state(g, k, tau), {}};
  {
    Level level;
    level.u = log_density(rho0);
    level.energy = compute_energy(rho0, c0, 1.0, p, g);
    level.cbar = c0;
    level.c = c0;
    level.rho = rho0;
    push_level(out.state, std::move(level));
  }
  if (k == 1)
    return out;

  const int m = substeps > 0 ? substeps : default_startup_substeps(k, tau);
  Startup sub = initialize_cascade(g, k - 1, tau / m, p, c0, rho0, opts, 0);
  State& fine = sub.state;

  for (int j = 1; j < k; ++j) {
    const int target = j * m;
    StepDiagnostics row;
    bool stepped = false;
    int it1 = 0, it2 = 0;
    while (fine.n < target) {
      row = advance(fine, p, opts);
      it1 += row.step1.iterations;
      it2 += row.step2.iterations;
      stepped = true;
    }
    if (!stepped && target >= 1 && target <= static_cast<int>(sub.rows.size()))
      row = sub.rows[static_cast<std::size_t>(target - 1)];
    const auto age = static_cast<std::size_t>(fine.n - target);
    Level level;
    level.cbar = fine.cbar[age];
    level.c = fine.c[age];
    level.u = fine.u[age];
    level.rho = fine.rho[age];
    level.energy = compute_energy(level.rho, level.c, 1.0, p, g);
    push_level(out.state, std::move(level));

    StepDiagnostics d = level_row(out.state, j);
    d.dissipation = row.dissipation;
    d.lambda = row.lambda;
    d.mu = row.mu;
    d.step1 = row.step1;
    d.step2 = row.step2;
    d.step1.iterations = it1;
    d.step2.iterations = it2;
    out.rows.push_back(d);
  }
  out.state.lambda = fine.lambda;
  out.state.mu = fine.mu;
  return out;
}

} // namespace ks
