#pragma once

#include <filesystem>
#include <optional>
#include <vector>

#include "ks/config.hpp"
#include "ks/manufactured.hpp"
#include "ks/scheme.hpp"

namespace ks {

/// A configured run: grid, parameters, warmed state and step loop.
class Simulation {
public:
  explicit Simulation(RunConfig cfg);

  const RunConfig& config() const { return cfg_; }
  const Grid2D& grid() const { return grid_; }
  const State& state() const { return startup_.state; }
  /// Diagnostics of the startup levels 1..k-1.
  const std::vector<StepDiagnostics>& startup_rows() const { return startup_.rows; }
  int total_steps() const { return total_steps_; }
  bool done() const { return startup_.state.n >= total_steps_; }

  /// Advances one step; throws StateError once the final time is reached.
  StepDiagnostics step();

private:
  RunConfig cfg_;
  Grid2D grid_;
  AdvanceOptions opts_;
  Startup startup_;
  int total_steps_ = 0;
};

struct SimulationResult {
  int steps = 0;
  double mass0 = 0.0;
  std::optional<StepDiagnostics> last;
  std::filesystem::path out_dir;
};

/// Runs to T writing series.csv, snapshots of rho and c (every
/// snapshot_every steps and at T), and the y = 0 cross-section of rho at T.
/// On a scheme error the rows written so far stay on disk and the error is
/// rethrown.
SimulationResult simulate(const RunConfig& cfg, const std::optional<std::filesystem::path>& out_dir = {});

} // namespace ks
