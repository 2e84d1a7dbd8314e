#include "ks/simulate.hpp"

#include <cstdio>

#include "ks/output.hpp"

namespace ks {
namespace {

Startup start_run(const RunConfig& cfg, const Grid2D& g, const AdvanceOptions& opts) {
  if (cfg.start == StartMode::exact) {
    if (cfg.initial != "example1")
      throw ConfigError("exact start needs a manufactured solution");
    return initialize_exact(g, cfg.k, cfg.tau, cfg.params, exact_sampler(example1_solution(), g));
  }
  const InitialCondition ic = builtin_initial_conditions(cfg.initial, cfg.params);
  return initialize_cascade(g, cfg.k, cfg.tau, cfg.params, sample(g, ic.c0), sample(g, ic.rho0), opts,
                            cfg.startup_substeps);
}

AdvanceOptions advance_options(const RunConfig& cfg, const Grid2D& g) {
  AdvanceOptions opts;
  opts.epc = cfg.epc;
  opts.solver = cfg.solver();
  if (cfg.forcing != ForcingKind::none)
    opts.forcing = grid_forcing(example1_solution(), cfg.params, g,
                                cfg.forcing == ForcingKind::analytic ? ForcingMode::analytic : ForcingMode::discrete);
  return opts;
}

std::string level_name(const char* var, int step, SnapshotFormat f) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s_%06d.%s", var, step, f == SnapshotFormat::csv ? "csv" : "vtk");
  return buf;
}

} // namespace

Simulation::Simulation(RunConfig cfg)
    : cfg_(std::move(cfg)), grid_(cfg_.grid()), opts_(advance_options(cfg_, grid_)),
      startup_(start_run(cfg_, grid_, opts_)), total_steps_(cfg_.steps()) {}

StepDiagnostics Simulation::step() {
  if (done())
    throw StateError("simulation already reached its final time");
  return advance(startup_.state, cfg_.params, opts_);
}

SimulationResult simulate(const RunConfig& cfg, const std::optional<std::filesystem::path>& out_dir) {
  SimulationResult result;
  result.out_dir = out_dir ? *out_dir : std::filesystem::path(cfg.out_dir);
  const std::filesystem::path snapdir = result.out_dir / "snapshots";

  Simulation sim(cfg);
  const Grid2D& g = sim.grid();
  const int total = sim.total_steps();
  result.mass0 = sim.state().mass0;

  SeriesWriter series(result.out_dir / "series.csv");
  auto snapshot = [&](int step, const Field& rho, const Field& c) {
    write_snapshot(rho, g, snapdir / level_name("rho", step, cfg.snapshot_format), cfg.snapshot_format);
    write_snapshot(c, g, snapdir / level_name("c", step, cfg.snapshot_format), cfg.snapshot_format);
  };
  auto wants_snapshot = [&](int step) { return cfg.snapshot_every > 0 && step % cfg.snapshot_every == 0; };

  // Startup levels are accepted steps too. They may overshoot T when T < (k-1) tau.
  const int k = cfg.k;
  for (const StepDiagnostics& d : sim.startup_rows()) {
    if (d.step > total)
      break;
    series.write(d);
    result.last = d;
    result.steps = d.step;
    const std::size_t age = static_cast<std::size_t>(k - 1 - d.step);
    if (wants_snapshot(d.step) && d.step != total)
      snapshot(d.step, sim.state().rho[age], sim.state().c[age]);
  }

  while (!sim.done()) {
    const StepDiagnostics d = sim.step();
    series.write(d);
    result.last = d;
    result.steps = d.step;
    if (wants_snapshot(d.step) && d.step != total)
      snapshot(d.step, sim.state().rho.newest(), sim.state().c.newest());
  }

  const State& s = sim.state();
  const std::size_t age = static_cast<std::size_t>(s.n - total);
  snapshot(total, s.rho[age], s.c[age]);
  write_cross_section(s.rho[age], g, 0.0, "rho", result.out_dir / "cross_section_rho.csv");
  return result;
}

} // namespace ks
