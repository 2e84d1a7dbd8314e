#pragma once

#include <filesystem>
#include <fstream>
#include <string>

#include "ks/config.hpp"
#include "ks/grid.hpp"
#include "ks/scheme.hpp"

namespace ks {

/// Shortest decimal form that parses back to the same double.
std::string format_double(double v);

/// csv: header `x,y,value`, one row per node in storage order.
/// vtk: legacy ASCII STRUCTURED_POINTS.
void write_snapshot(const Field& f, const Grid2D& g, const std::filesystem::path& path, SnapshotFormat format);

/// Reads a csv snapshot back into a Field (values only, storage order).
Field read_snapshot_csv(const std::filesystem::path& path);

/// Cross-section of f along y = y0 (linear interpolation between grid rows),
/// written as `x,<name>`.
void write_cross_section(const Field& f, const Grid2D& g, double y0, const std::string& name,
                         const std::filesystem::path& path);

/// series.csv: one row per accepted step, flushed as it is written.
class SeriesWriter {
public:
  static constexpr const char* header =
      "step,time,mass,min_rho,energy,dissipation,lambda,mu,step1_iters,step2_iters";

  explicit SeriesWriter(const std::filesystem::path& path);
  void write(const StepDiagnostics& d);

private:
  std::ofstream out_;
};

} // namespace ks
