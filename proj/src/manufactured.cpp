#include "ks/manufactured.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>
#include <thread>

namespace ks {

ManufacturedSolution example1_solution() {
  constexpr double pi = std::numbers::pi;
  constexpr double k = 10.0 * pi;
  const double amp = 1.0 / (2.0 * pi * pi + 1.0);
  constexpr double base = 1.1;

  auto S = [](double x, double y) { return std::sin(k * x) * std::sin(k * y); };
  auto Sx = [](double x, double y) { return k * std::cos(k * x) * std::sin(k * y); };
  auto Sy = [](double x, double y) { return k * std::sin(k * x) * std::cos(k * y); };

  ManufacturedSolution m;
  m.xmin = -0.05;
  m.xmax = 0.05;
  m.ymin = -0.05;
  m.ymax = 0.05;

  m.c = [=](double x, double y, double t) { return S(x, y) * std::sin(t) + base; };
  m.c_t = [=](double x, double y, double t) { return S(x, y) * std::cos(t); };
  m.c_x = [=](double x, double y, double t) { return Sx(x, y) * std::sin(t); };
  m.c_y = [=](double x, double y, double t) { return Sy(x, y) * std::sin(t); };
  m.lap_c = [=](double x, double y, double t) { return -2.0 * k * k * S(x, y) * std::sin(t); };

  m.rho = [=](double x, double y, double t) { return amp * S(x, y) * std::sin(t) + base; };
  m.u = [=](double x, double y, double t) { return std::log(amp * S(x, y) * std::sin(t) + base); };
  m.u_t = [=](double x, double y, double t) {
    return amp * S(x, y) * std::cos(t) / (amp * S(x, y) * std::sin(t) + base);
  };
  m.u_x = [=](double x, double y, double t) {
    return amp * Sx(x, y) * std::sin(t) / (amp * S(x, y) * std::sin(t) + base);
  };
  m.u_y = [=](double x, double y, double t) {
    return amp * Sy(x, y) * std::sin(t) / (amp * S(x, y) * std::sin(t) + base);
  };
  // Lap log rho = Lap rho / rho - |grad rho|^2 / rho^2
  m.lap_u = [=](double x, double y, double t) {
    const double st = std::sin(t);
    const double r = amp * S(x, y) * st + base;
    const double rx = amp * Sx(x, y) * st, ry = amp * Sy(x, y) * st;
    const double lap_r = -2.0 * k * k * amp * S(x, y) * st;
    return lap_r / r - (rx * rx + ry * ry) / (r * r);
  };
  return m;
}

PointForcing forcing(const ManufacturedSolution& sol, const ModelParams& p) {
  PointForcing f;
  f.f_c = [sol, p](double x, double y, double t) {
    return p.eps * sol.c_t(x, y, t) - sol.lap_c(x, y, t) + p.alpha * sol.c(x, y, t) - p.beta * sol.rho(x, y, t);
  };
  f.f_u = [sol, p](double x, double y, double t) {
    const double ux = sol.u_x(x, y, t), uy = sol.u_y(x, y, t);
    const double cx = sol.c_x(x, y, t), cy = sol.c_y(x, y, t);
    return sol.u_t(x, y, t) - sol.lap_u(x, y, t) - (ux * ux + uy * uy) + p.gamma * (ux * cx + uy * cy) +
           p.gamma * sol.lap_c(x, y, t);
  };
  return f;
}

namespace {

Field sample_at(const Grid2D& g, const ManufacturedSolution::Fn& f, double t) {
  return sample(g, [&](double x, double y) { return f(x, y, t); });
}

} // namespace

Forcing grid_forcing(const ManufacturedSolution& sol, const ModelParams& p, const Grid2D& g, ForcingMode mode) {
  Forcing out;
  if (mode == ForcingMode::analytic) {
    const PointForcing pf = forcing(sol, p);
    out.f_c = [g, f = pf.f_c](double t) { return sample_at(g, f, t); };
    out.f_u = [g, f = pf.f_u](double t) { return sample_at(g, f, t); };
    return out;
  }
  out.f_c = [g, sol, p](double t) {
    const Field c = sample_at(g, sol.c, t);
    const Field rho = sample_at(g, sol.rho, t);
    const Field ct = sample_at(g, sol.c_t, t);
    const Field lap = apply_laplacian(c, g);
    Field f(g);
    for (std::size_t n = 0; n < g.size(); ++n)
      f[n] = p.eps * ct[n] - lap[n] + p.alpha * c[n] - p.beta * rho[n];
    return f;
  };
  out.f_u = [g, sol, p](double t) {
    const Field u = sample_at(g, sol.u, t);
    const Field c = sample_at(g, sol.c, t);
    const Field ut = sample_at(g, sol.u_t, t);
    const Field lap_u = apply_laplacian(u, g);
    const Field lap_c = apply_laplacian(c, g);
    const VectorField du = gradient(u, g);
    const VectorField dc = gradient(c, g);
    Field f(g);
    for (std::size_t n = 0; n < g.size(); ++n) {
      const double uu = du.dx[n] * du.dx[n] + du.dy[n] * du.dy[n];
      const double uc = du.dx[n] * dc.dx[n] + du.dy[n] * dc.dy[n];
      f[n] = ut[n] - lap_u[n] - uu + p.gamma * uc + p.gamma * lap_c[n];
    }
    return f;
  };
  return out;
}

ExactSampler exact_sampler(const ManufacturedSolution& sol, const Grid2D& g) {
  return [sol, g](double t) { return std::pair<Field, Field>{sample_at(g, sol.c, t), sample_at(g, sol.rho, t)}; };
}

ErrorNorms error_norms(const State& s, const ManufacturedSolution& sol, double t, const Grid2D& g) {
  const Field c = sample_at(g, sol.c, t);
  const Field rho = sample_at(g, sol.rho, t);
  const Field u = sample_at(g, sol.u, t);
  auto both = [&g](const Field& exact, const Field& num, double& l2, double& h1) {
    const Field e = exact - num;
    l2 = norm(e, g, NormKind::L2);
    h1 = norm(e, g, NormKind::H1semi);
  };
  ErrorNorms n;
  both(c, s.cbar.newest(), n.cbar_L2, n.cbar_H1);
  both(u, s.u.newest(), n.u_L2, n.u_H1);
  both(rho, s.rho.newest(), n.rho_L2, n.rho_H1);
  both(c, s.c.newest(), n.c_L2, n.c_H1);
  return n;
}

OrderFit fit_order(std::span<const double> taus, std::span<const double> errs, std::string column) {
  OrderFit fit;
  fit.column = std::move(column);
  const std::size_t m = std::min(taus.size(), errs.size());
  if (m < 2 || std::any_of(errs.begin(), errs.begin() + static_cast<std::ptrdiff_t>(m),
                           [](double e) { return !(e > 0.0) || !std::isfinite(e); })) {
    fit.order = fit.residual = std::numeric_limits<double>::quiet_NaN();
    return fit;
  }
  double sx = 0, sy = 0;
  for (std::size_t i = 0; i < m; ++i) {
    sx += std::log(taus[i]);
    sy += std::log(errs[i]);
  }
  const double mx = sx / m, my = sy / m;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < m; ++i) {
    const double dx = std::log(taus[i]) - mx;
    sxx += dx * dx;
    sxy += dx * (std::log(errs[i]) - my);
  }
  fit.order = sxy / sxx;
  double ss = 0;
  for (std::size_t i = 0; i < m; ++i) {
    const double r = std::log(errs[i]) - (my + fit.order * (std::log(taus[i]) - mx));
    ss += r * r;
  }
  fit.residual = std::sqrt(ss / m);
  return fit;
}

const std::vector<std::string>& convergence_columns() {
  static const std::vector<std::string> cols{"err_cbar_L2", "err_u_L2",  "err_rho_L2", "err_c_L2",
                                             "err_cbar_H1", "err_u_H1",  "err_rho_H1", "err_c_H1",
                                             "max_dev_lambda", "max_dev_mu"};
  return cols;
}

double column_value(const ConvergenceRow& r, const std::string& column) {
  if (column == "err_cbar_L2") return r.err.cbar_L2;
  if (column == "err_u_L2") return r.err.u_L2;
  if (column == "err_rho_L2") return r.err.rho_L2;
  if (column == "err_c_L2") return r.err.c_L2;
  if (column == "err_cbar_H1") return r.err.cbar_H1;
  if (column == "err_u_H1") return r.err.u_H1;
  if (column == "err_rho_H1") return r.err.rho_H1;
  if (column == "err_c_H1") return r.err.c_H1;
  if (column == "max_dev_lambda") return r.max_dev_lambda;
  if (column == "max_dev_mu") return r.max_dev_mu;
  throw ConfigError("unknown convergence column " + column);
}

int harness_threads() {
  if (const char* env = std::getenv("KS_THREADS")) {
    const int v = std::atoi(env);
    if (v > 0)
      return v;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

ConvergenceRow run_convergence_point(int k, double tau, const Grid2D& g, const ConvergenceConfig& cfg,
                                     const ManufacturedSolution& sol) {
  const int steps = static_cast<int>(std::llround(cfg.T / tau));
  if (steps < k)
    throw ConfigError("final time T must cover at least k steps of size tau");
  Startup start = initialize_exact(g, k, tau, cfg.params, exact_sampler(sol, g));
  State& s = start.state;

  AdvanceOptions opts;
  opts.epc = cfg.epc;
  opts.solver = cfg.solver;
  opts.forcing = grid_forcing(sol, cfg.params, g, cfg.forcing);

  ConvergenceRow row;
  row.k = k;
  row.tau = tau;
  row.nx = g.nx;
  row.ny = g.ny;
  double acc[4] = {0, 0, 0, 0};
  while (s.n < steps) {
    const StepDiagnostics d = advance(s, cfg.params, opts);
    row.max_dev_lambda = std::max(row.max_dev_lambda, std::abs(1.0 - d.lambda));
    row.max_dev_mu = std::max(row.max_dev_mu, std::abs(1.0 - d.mu));
    const ErrorNorms e = error_norms(s, sol, s.time(), g);
    acc[0] += tau * e.cbar_H1 * e.cbar_H1;
    acc[1] += tau * e.u_H1 * e.u_H1;
    acc[2] += tau * e.rho_H1 * e.rho_H1;
    acc[3] += tau * e.c_H1 * e.c_H1;
    if (s.n == steps)
      row.err = e;
  }
  row.acc_cbar_H1 = std::sqrt(acc[0]);
  row.acc_u_H1 = std::sqrt(acc[1]);
  row.acc_rho_H1 = std::sqrt(acc[2]);
  row.acc_c_H1 = std::sqrt(acc[3]);
  return row;
}

ConvergenceTable run_convergence(int k, const std::vector<double>& taus, GridPolicy policy,
                                 const ConvergenceConfig& cfg, const ManufacturedSolution& sol) {
  bdf_coefficients(k);
  cfg.params.validate();
  if (taus.size() < 3)
    throw ConfigError("convergence study needs at least 3 time steps");
  for (std::size_t i = 0; i < taus.size(); ++i) {
    if (!(taus[i] > 0.0))
      throw ConfigError("time steps must be positive");
    if (i > 0 && !(taus[i] < taus[i - 1]))
      throw ConfigError("time steps must be strictly decreasing");
  }

  std::vector<Grid2D> grids;
  for (double tau : taus) {
    if (policy == GridPolicy::fixed) {
      grids.push_back(build_grid(sol.xmin, sol.xmax, sol.ymin, sol.ymax, cfg.nx, cfg.ny));
      continue;
    }
    const double h = std::pow(tau, k);
    auto nodes = [h](double len) {
      const double n = std::round(len / h) + 1.0;
      if (n > 4097.0)
        throw ConfigError("coupled grid policy needs more than 4097 nodes per axis; use the fixed policy");
      return std::max(3, static_cast<int>(n));
    };
    grids.push_back(build_grid(sol.xmin, sol.xmax, sol.ymin, sol.ymax, nodes(sol.xmax - sol.xmin),
                               nodes(sol.ymax - sol.ymin)));
  }

  ConvergenceTable table;
  table.rows.resize(taus.size());
  std::vector<std::exception_ptr> errors(taus.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t i = next++; i < taus.size(); i = next++) {
      try {
        table.rows[i] = run_convergence_point(k, taus[i], grids[i], cfg, sol);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const int threads = std::min<int>(cfg.threads > 0 ? cfg.threads : harness_threads(),
                                    static_cast<int>(taus.size()));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t)
      pool.emplace_back(worker);
    for (auto& t : pool)
      t.join();
  }
  for (const auto& e : errors)
    if (e)
      std::rethrow_exception(e);

  for (const std::string& col : convergence_columns()) {
    std::vector<double> errs;
    for (const auto& r : table.rows)
      errs.push_back(column_value(r, col));
    table.fits.push_back(fit_order(taus, errs, col));
  }
  return table;
}

namespace {

std::string num(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

} // namespace

void write_convergence_csv(const ConvergenceTable& t, std::ostream& os) {
  os << "k,tau";
  for (const auto& c : convergence_columns())
    os << ',' << c;
  os << '\n';
  for (const auto& r : t.rows) {
    os << r.k << ',' << num(r.tau);
    for (const auto& c : convergence_columns())
      os << ',' << num(column_value(r, c));
    os << '\n';
  }
}

void write_accumulated_csv(const ConvergenceTable& t, std::ostream& os) {
  os << "k,tau,acc_cbar_H1,acc_u_H1,acc_rho_H1,acc_c_H1\n";
  for (const auto& r : t.rows)
    os << r.k << ',' << num(r.tau) << ',' << num(r.acc_cbar_H1) << ',' << num(r.acc_u_H1) << ','
       << num(r.acc_rho_H1) << ',' << num(r.acc_c_H1) << '\n';
}

std::string order_summary(const ConvergenceTable& t) {
  std::ostringstream os;
  os.precision(4);
  for (const auto& f : t.fits)
    os << "order " << f.column << " = " << f.order << " (fit residual " << f.residual << ")\n";
  return os.str();
}

} // namespace ks
