#include <doctest.h>

#include <cmath>
#include <random>

#include "ks/config.hpp"
#include "ks/errors.hpp"
#include "ks/manufactured.hpp"
#include "ks/scheme.hpp"
#include "oracles.hpp"

using ks::Field;
using ks::Grid2D;
using ks::ModelParams;
using ks::State;

namespace {

/// State of order k whose every level holds the same constant fields.
State constant_state(const Grid2D& g, int k, double tau, double c, double rho, const ModelParams& p) {
  State s = ks::make_state(g, k, tau);
  for (int i = 0; i < k; ++i) {
    ks::Level l{Field(g, c), Field(g, c), Field(g, std::log(rho)), Field(g, rho), 0.0};
    l.energy = ks::compute_energy(l.rho, l.c, 1.0, p, g);
    ks::push_level(s, std::move(l));
  }
  return s;
}

double rel_l2(const Field& a, const Field& b) { return oracle::l2_diff(a.values(), b.values()) / oracle::l2(b.values()); }

/// Energy of (rho, c) from scratch: trapezoid weights, centred differences, long double.
long double energy_oracle(const std::vector<double>& rho, const std::vector<double>& c, double mu, double alpha,
                          const Grid2D& g) {
  long double e = 0;
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      const long double r = oracle::at(rho, g, i, j), cc = oracle::at(c, g, i, j);
      const long double gx = oracle::ddx(c, g, i, j), gy = oracle::ddy(c, g, i, j);
      e += oracle::trap_weight(g, i, j) *
           (r * std::log(r) - r - r * cc + 0.5L * mu * (alpha * cc * cc + gx * gx + gy * gy));
    }
  return e;
}

} // namespace

TEST_CASE("model parameters must be positive") {
  ModelParams p;
  CHECK_NOTHROW(p.validate());
  p.alpha = 0.0;
  CHECK_THROWS_AS(p.validate(), ks::ConfigError);
  p.alpha = 1.0;
  p.gamma = -1.0;
  CHECK_THROWS_AS(p.validate(), ks::ConfigError);
}

TEST_CASE("step 1: constant fixed point and scalar reduction") {
  const Grid2D g = ks::build_grid(0, 1, 0, 1, 9, 9);
  ModelParams p;
  p.alpha = 2.0;
  p.beta = 3.0;
  p.eps = 0.7;
  const double tau = 0.01;
  for (int k = 1; k <= 5; ++k) {
    // alpha C = beta R
    State s = constant_state(g, k, tau, 1.5, 1.0, p);
    const auto r = ks::step1_chemoattractant(s, p, tau, std::nullopt, {});
    CHECK(r.x.max() == doctest::Approx(1.5).epsilon(1e-10));
    CHECK(r.x.min() == doctest::Approx(1.5).epsilon(1e-10));
  }
  // rho history zero, alpha = 1.
  ModelParams q;
  q.eps = 0.5;
  const double C = 2.0;
  for (int k = 1; k <= 5; ++k) {
    State s = ks::make_state(g, k, tau);
    for (int i = 0; i < k; ++i)
      ks::push_level(s, {Field(g, C), Field(g, C), Field(g, 0.0), Field(g, 0.0), 0.0});
    const double ak = ks::bdf_coefficients(k).alpha;
    const double expect = (q.eps * ak * C / tau) / (q.eps * ak / tau + 1.0);
    const auto r = ks::step1_chemoattractant(s, q, tau, std::nullopt, {});
    CHECK(r.x.max() == doctest::Approx(expect).epsilon(1e-10));
    CHECK(r.x.min() == doctest::Approx(expect).epsilon(1e-10));
  }
}

TEST_CASE("step 2: constants are a fixed point") {
  const Grid2D g = ks::build_grid(0, 1, 0, 1, 9, 9);
  const ModelParams p;
  for (int k = 1; k <= 5; ++k) {
    State s = constant_state(g, k, 0.01, 1.0, 2.5, p);
    const auto r = ks::step2_log_density(s, p, 0.01, Field(g, 1.0), std::nullopt, {});
    CHECK(r.x.max() == doctest::Approx(std::log(2.5)).epsilon(1e-10));
    CHECK(r.x.min() == doctest::Approx(std::log(2.5)).epsilon(1e-10));
  }
}

TEST_CASE("step 2: zero advection reduces to a symmetric diffusion solve") {
  const Grid2D g = ks::build_grid(0, 1, 0, 1, 17, 17);
  ModelParams p;
  p.gamma = 1.7;
  const double tau = 0.02;
  std::mt19937_64 rng(3);
  State s = ks::make_state(g, 2, tau);
  for (int i = 0; i < 2; ++i)
    ks::push_level(s, {Field(g, 0.3), Field(g, 0.3), Field(g, 0.1), Field(g, std::exp(0.1)), 0.0});
  const Field cbar(oracle::smooth_random(g, rng));
  const auto r = ks::step2_log_density(s, p, tau, cbar, std::nullopt, {});
  const auto b = ks::bdf_coefficients(2);
  Field rhs = ks::history_combination(s.u, b);
  rhs *= 1.0 / tau;
  Field lap = ks::apply_laplacian(cbar, g);
  lap *= -p.gamma;
  rhs += lap;
  const auto ref = ks::solve_spd(ks::helmholtz_operator(g, b.alpha / tau), rhs, {});
  CHECK(rel_l2(r.x, ref.x) <= 1e-9);
}

TEST_CASE("step 3: recovery") {
  const Grid2D g = ks::build_grid(-1, 1, -1, 1, 11, 11);
  std::mt19937_64 rng(17);
  const Field rho(oracle::smooth_random(g, rng, 3.0));
  State s = ks::make_state(g, 1, 0.1);
  Field u = rho;
  for (double& v : u.values())
    v = std::log(v);
  ks::push_level(s, {Field(g, 0.0), Field(g, 0.0), u, rho, 0.0});

  const auto same = ks::step3_recover_density(s, u);
  CHECK(same.lambda == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(rel_l2(same.rho, rho) <= 1e-14);

  Field u2 = u;
  for (double& v : u2.values())
    v += std::log(2.0);
  const auto half = ks::step3_recover_density(s, u2);
  CHECK(half.lambda == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(rel_l2(half.rho, rho) <= 1e-14);
  CHECK(ks::integrate(half.rho, g) == doctest::Approx(ks::integrate(rho, g)).epsilon(1e-14));
  CHECK(half.rho_bar.min() > 0.0);
}

TEST_CASE("energy closed forms") {
  const Grid2D g = ks::build_grid(0, 2, 0, 3, 13, 9);
  const ModelParams p;
  CHECK(ks::compute_energy(Field(g, 1.0), Field(g, 0.0), 1.0, p, g) == doctest::Approx(-6.0).epsilon(1e-14));
  const double K = 0.8;
  CHECK(ks::compute_energy(Field(g, 1.0), Field(g, K), 1.0, p, g) ==
        doctest::Approx(6.0 * (-1.0 - K + K * K / 2.0)).epsilon(1e-14));
  Field bad(g, 1.0);
  bad[4] = 0.0;
  CHECK_THROWS_AS(ks::compute_energy(bad, Field(g, 0.0), 1.0, p, g), ks::DomainError);
  bad[4] = -1.0;
  CHECK_THROWS_AS(ks::energy_parts(bad, Field(g, 0.0), p, g), ks::DomainError);
}

TEST_CASE("energy matches an independent summation oracle") {
  std::mt19937_64 rng(99);
  for (auto [nx, ny] : {std::pair{9, 9}, std::pair{14, 11}}) {
    const Grid2D g = ks::build_grid(-0.3, 0.4, 0.1, 0.9, nx, ny);
    for (double mu : {1.0, 0.8}) {
      ModelParams p;
      p.alpha = 2.5;
      const auto rho = oracle::smooth_random(g, rng, 3.0);
      const auto c = oracle::smooth_random(g, rng);
      const double got = ks::compute_energy(Field(rho), Field(c), mu, p, g);
      const double expect = static_cast<double>(energy_oracle(rho, c, mu, p.alpha, g));
      CHECK(std::abs(got - expect) <= 1e-12 * (1.0 + std::abs(expect)));
      const auto parts = ks::energy_parts(Field(rho), Field(c), p, g);
      CHECK(parts.F + mu * parts.G == doctest::Approx(got).epsilon(1e-13));
    }
  }
}

TEST_CASE("Example 2 initial energy: discrete functional and its continuum limit") {
  ModelParams p;
  p.alpha = 6.0;
  const auto ic = ks::builtin_initial_conditions("example2", p);
  constexpr double pi = 3.14159265358979323846;
  // Integrals over the plane; the tails beyond (-5, 5)^2 are below e^-25.
  const double exact = 4 * pi * std::log(4.0) - 4 * pi - 4 * pi - 4 * pi / 1.5 + 0.5 * p.alpha * pi + 0.5 * pi;

  const Grid2D g = ks::build_grid(-5, 5, -5, 5, 401, 401);
  const Field rho = ks::sample(g, ic.rho0), c = ks::sample(g, ic.c0);
  const double e401 = ks::compute_energy(rho, c, 1.0, p, g);
  const double oracle401 = static_cast<double>(energy_oracle(rho.values(), c.values(), 1.0, p.alpha, g));
  CHECK(e401 == doctest::Approx(oracle401).epsilon(1e-12));

  // The centred gradient carries the only O(h^2) error.
  double prev = 0.0;
  for (int n : {101, 201, 401}) {
    const Grid2D gg = ks::build_grid(-5, 5, -5, 5, n, n);
    const double err = std::abs(ks::compute_energy(ks::sample(gg, ic.rho0), ks::sample(gg, ic.c0), 1.0, p, gg) - exact);
    if (prev > 0.0)
      CHECK(prev / err >= 3.5);
    prev = err;
  }
  CHECK(prev / std::abs(exact) <= 1e-4);
}

TEST_CASE("dissipation matches an independent summation oracle") {
  std::mt19937_64 rng(31);
  const Grid2D g = ks::build_grid(0, 1, 0, 1, 9, 9);
  for (int k = 1; k <= 5; ++k) {
    ModelParams p;
    p.eps = 0.6;
    const double tau = 0.05;
    const auto s = ks::bdf_coefficients(k);
    ks::History<Field> hist(static_cast<std::size_t>(k));
    std::vector<std::vector<double>> levels;
    for (int i = 0; i < k; ++i) {
      levels.push_back(oracle::smooth_random(g, rng));
      hist.push(Field(levels.back()));
    }
    const auto rho = oracle::smooth_random(g, rng, 3.0);
    const auto u = oracle::smooth_random(g, rng);
    const auto cbar = oracle::smooth_random(g, rng);
    const double got = ks::compute_dissipation(Field(rho), Field(u), Field(cbar), hist, tau, s, p, g);

    std::vector<double> diff(g.size());
    for (std::size_t n = 0; n < diff.size(); ++n)
      diff[n] = u[n] - cbar[n];
    long double expect = 0;
    for (int j = 0; j < g.ny; ++j)
      for (int i = 0; i < g.nx; ++i) {
        const std::size_t n = g.index(i, j);
        long double hc = 0;
        for (int m = 0; m < k; ++m)
          hc += static_cast<long double>(s.a_weights[static_cast<std::size_t>(m)]) *
                levels[static_cast<std::size_t>(k - 1 - m)][n];
        const long double dt = (s.alpha * static_cast<long double>(cbar[n]) - hc) / tau;
        const long double gx = oracle::ddx(diff, g, i, j), gy = oracle::ddy(diff, g, i, j);
        expect += oracle::trap_weight(g, i, j) * (rho[n] * (gx * gx + gy * gy) + p.eps * dt * dt);
      }
    CHECK(std::abs(got - static_cast<double>(expect)) <= 1e-12 * (1.0 + std::abs(static_cast<double>(expect))));
    CHECK(got >= 0.0);
  }
}

TEST_CASE("dissipation vanishes on trivial data") {
  const Grid2D g = ks::build_grid(0, 1, 0, 1, 7, 7);
  const ModelParams p;
  const auto s = ks::bdf_coefficients(2);
  ks::History<Field> hist(2);
  hist.push(Field(g, 0.4));
  hist.push(Field(g, 0.4));
  CHECK(std::abs(ks::compute_dissipation(Field(g, 2.0), Field(g, 1.0), Field(g, 0.4), hist, 0.1, s, p, g)) <= 1e-14);
  std::mt19937_64 rng(1);
  const Field c(oracle::smooth_random(g, rng));
  ks::History<Field> same(2);
  same.push(c);
  same.push(c);
  CHECK(std::abs(ks::compute_dissipation(Field(g, 1.0), c, c, same, 0.1, s, p, g)) <= 1e-14);
}

TEST_CASE("step 4 and 5") {
  const Grid2D g = ks::build_grid(0, 1, 0, 1, 9, 9);
  const ModelParams p;
  // Steady state with alpha c = beta rho.
  for (int k = 1; k <= 5; ++k) {
    State s = constant_state(g, k, 0.01, 1.0, 1.0, p);
    const auto ec =
        ks::step4_energy_correction(s, Field(g, 1.0), Field(g, 0.0), Field(g, 1.0), 0.01, p);
    CHECK(ec.mu == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(std::abs(ec.dissipation) <= 1e-14);
  }
  // Degenerate cbar.
  State s = constant_state(g, 1, 0.01, 1.0, 1.0, p);
  CHECK_THROWS_AS(ks::step4_energy_correction(s, Field(g, 1.0), Field(g, 0.0), Field(g, 0.0), 0.01, p),
                  ks::DegenerateFieldError);
  // Energy history far below anything reachable forces mu < 0.
  State low = ks::make_state(g, 1, 0.01);
  ks::push_level(low, {Field(g, 1.0), Field(g, 1.0), Field(g, 0.0), Field(g, 1.0), -100.0});
  CHECK_THROWS_AS(ks::step4_energy_correction(low, Field(g, 1.0), Field(g, 0.0), Field(g, 1.0), 0.01, p),
                  ks::NonpositiveCorrectionError);

  const Field one = ks::step5_rescale(Field(g, 3.0), 1.0);
  CHECK(one.max() == 3.0);
  const Field two = ks::step5_rescale(Field(g, 1.0), 4.0);
  CHECK(two.min() == 2.0);
  CHECK_THROWS_AS(ks::step5_rescale(Field(g, 1.0), 0.0), ks::NonpositiveCorrectionError);
  CHECK_THROWS_AS(ks::step5_rescale(Field(g, 1.0), -1.0), ks::NonpositiveCorrectionError);
}

TEST_CASE("advance: steady state is preserved") {
  const Grid2D g = ks::build_grid(0, 1, 0, 1, 11, 11);
  ModelParams p;
  p.alpha = 2.0;
  for (int k = 1; k <= 5; ++k) {
    State s = constant_state(g, k, 0.01, 0.5, 1.0, p);
    const auto d = ks::advance(s, p, {});
    CHECK(d.step == k);
    CHECK(std::abs(d.dissipation) <= 1e-12);
    CHECK(d.lambda == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(d.mu == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(s.rho.newest().max() == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(s.c.newest().min() == doctest::Approx(0.5).epsilon(1e-10));
  }
}

TEST_CASE("advance: cold state and NaN input are rejected") {
  const Grid2D g = ks::build_grid(0, 1, 0, 1, 7, 7);
  const ModelParams p;
  State cold = ks::make_state(g, 2, 0.1);
  ks::push_level(cold, {Field(g, 1.0), Field(g, 1.0), Field(g, 0.0), Field(g, 1.0), 0.0});
  CHECK_THROWS_AS(ks::advance(cold, p, {}), ks::StateError);

  State s = constant_state(g, 1, 0.1, 1.0, 1.0, p);
  ks::Level bad{Field(g, 1.0), Field(g, 1.0), Field(g, 0.0), Field(g, 1.0), 0.0};
  bad.cbar[3] = std::nan("");
  State t = ks::make_state(g, 1, 0.1);
  ks::push_level(t, bad);
  CHECK_THROWS_AS(ks::advance(t, p, {}), ks::NumericalError);
}

TEST_CASE("advance: Example 2 conserves mass, stays positive, closes the energy law") {
  const Grid2D g = ks::build_grid(-5, 5, -5, 5, 41, 41);
  ModelParams p;
  p.alpha = 6.0;
  const auto ic = ks::builtin_initial_conditions("example2", p);
  for (int k : {1, 2, 3}) {
    const double tau = 1e-3;
    auto start = ks::initialize_cascade(g, k, tau, p, ks::sample(g, ic.c0), ks::sample(g, ic.rho0), {});
    State& s = start.state;
    const double m0 = s.mass0;
    for (const auto& row : start.rows)
      CHECK(std::abs(row.mass - m0) <= 1e-12 * m0);
    for (int n = 0; n < 5; ++n) {
      const double e_hist = ks::history_combination(s.energy, s.scheme);
      const auto d = ks::advance(s, p, {});
      CHECK(std::abs(d.mass - m0) <= 1e-12 * m0);
      CHECK(d.min_rho > 0.0);
      CHECK(d.dissipation >= 0.0);
      const double dE = (s.scheme.alpha * d.energy - e_hist) / tau;
      CHECK(std::abs(dE + d.dissipation) <= 1e-10 * (1.0 + std::abs(d.dissipation)));
      CHECK(s.c.newest()[0] == doctest::Approx(std::sqrt(d.mu) * s.cbar.newest()[0]).epsilon(1e-15));
    }
  }
}

TEST_CASE("advance with epc off keeps c = cbar and mu = 1") {
  const Grid2D g = ks::build_grid(-5, 5, -5, 5, 21, 21);
  ModelParams p;
  p.alpha = 6.0;
  const auto ic = ks::builtin_initial_conditions("example2", p);
  ks::AdvanceOptions opts;
  opts.epc = false;
  auto start = ks::initialize_cascade(g, 2, 1e-3, p, ks::sample(g, ic.c0), ks::sample(g, ic.rho0), opts);
  const auto d = ks::advance(start.state, p, opts);
  CHECK(d.mu == 1.0);
  CHECK(start.state.c.newest() == start.state.cbar.newest());
}

TEST_CASE("initialization") {
  const Grid2D g = ks::build_grid(-0.05, 0.05, -0.05, 0.05, 17, 17);
  const ModelParams p;
  const auto sol = ks::example1_solution();
  for (int k = 1; k <= 5; ++k) {
    const auto st = ks::initialize_exact(g, k, 0.1, p, ks::exact_sampler(sol, g));
    CHECK(st.state.warm());
    CHECK(st.state.n == k - 1);
    CHECK(st.rows.size() == static_cast<std::size_t>(k - 1));
    // Levels are the sampled exact solution.
    const auto [c, rho] = ks::exact_sampler(sol, g)((k - 1) * 0.1);
    CHECK(st.state.c.newest() == c);
    CHECK(st.state.rho.newest() == rho);
  }
  CHECK_THROWS_AS(ks::initialize_exact(g, 2, 0.1, p, ks::ExactSampler{}), ks::ConfigError);

  const auto c0 = ks::sample(g, [](double, double) { return 1.0; });
  const auto r0 = ks::sample(g, [](double, double) { return 1.0; });
  const auto one = ks::initialize_cascade(g, 1, 0.1, p, c0, r0, {});
  CHECK(one.state.n == 0);
  CHECK(one.rows.empty());
  CHECK(ks::default_startup_substeps(1, 0.01) == 1);
  CHECK(ks::default_startup_substeps(2, 0.01) == 100);
  CHECK(ks::default_startup_substeps(3, 0.01) == 10);
  CHECK(ks::default_startup_substeps(5, 1.0 / 16) == 2);
}

TEST_CASE("cascade startup error is O(tau^k)") {
  // Manufactured solution with grid forcing: nodal samples solve the spatial
  // system, so the startup error is the temporal error alone.
  const Grid2D g = ks::build_grid(-0.05, 0.05, -0.05, 0.05, 33, 33);
  const ModelParams p;
  const auto sol = ks::example1_solution();
  ks::AdvanceOptions opts;
  opts.epc = false;
  opts.forcing = ks::grid_forcing(sol, p, g, ks::ForcingMode::discrete);
  const auto exact = ks::exact_sampler(sol, g);
  const auto [c0, rho0] = exact(0.0);
  for (int k : {2, 3}) {
    std::vector<double> errs;
    const std::vector<double> taus{0.1, 0.05, 0.025, 0.0125};
    for (double tau : taus) {
      const auto st = ks::initialize_cascade(g, k, tau, p, c0, rho0, opts);
      double err = 0.0;
      for (int i = 1; i < k; ++i) {
        const auto [c, rho] = exact(i * tau);
        err = std::max(err, ks::norm(st.state.c[static_cast<std::size_t>(k - 1 - i)] - c, g, ks::NormKind::L2));
      }
      errs.push_back(err);
    }
    for (std::size_t i = 1; i < errs.size(); ++i)
      MESSAGE("k=" << k << " startup error ratio " << errs[i - 1] / errs[i]);
    // Substep counts come from a ceiling, so single ratios wobble around 2^k.
    CHECK(ks::fit_order(taus, errs).order >= k - 0.3);
  }
}

TEST_CASE("single forced step: local error shrinks faster than tau^k") {
  const Grid2D g = ks::build_grid(-0.05, 0.05, -0.05, 0.05, 33, 33);
  const ModelParams p;
  const auto sol = ks::example1_solution();
  ks::AdvanceOptions opts;
  opts.epc = false;
  opts.forcing = ks::grid_forcing(sol, p, g, ks::ForcingMode::discrete);
  for (int k : {1, 2, 3}) {
    std::vector<double> errs;
    for (double tau : {0.02, 0.01, 0.005}) {
      auto st = ks::initialize_exact(g, k, tau, p, ks::exact_sampler(sol, g));
      ks::advance(st.state, p, opts);
      const auto [c, rho] = ks::exact_sampler(sol, g)(k * tau);
      errs.push_back(ks::norm(st.state.cbar.newest() - c, g, ks::NormKind::L2) +
                     ks::norm(st.state.rho.newest() - rho, g, ks::NormKind::L2));
    }
    for (std::size_t i = 1; i < errs.size(); ++i) {
      MESSAGE("k=" << k << " one-step error ratio " << errs[i - 1] / errs[i]);
      CHECK(errs[i - 1] / errs[i] >= std::pow(2.0, k) * 0.9);
    }
  }
}
