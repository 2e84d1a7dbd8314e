#include "ks/output.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <vector>

namespace ks {
namespace {

std::ofstream open_for_write(const std::filesystem::path& path) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out)
    throw IoError("cannot open " + path.string() + " for writing");
  return out;
}

void check_stream(const std::ofstream& out, const std::filesystem::path& path) {
  if (!out)
    throw IoError("write to " + path.string() + " failed");
}

} // namespace

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

void write_snapshot(const Field& f, const Grid2D& g, const std::filesystem::path& path, SnapshotFormat format) {
  check_shape(f, g, "write_snapshot");
  std::ofstream out = open_for_write(path);
  if (format == SnapshotFormat::csv) {
    out << "x,y,value\n";
    for (int j = 0; j < g.ny; ++j)
      for (int i = 0; i < g.nx; ++i)
        out << format_double(g.x(i)) << ',' << format_double(g.y(j)) << ',' << format_double(f[g.index(i, j)])
            << '\n';
  } else {
    out << "# vtk DataFile Version 3.0\n"
        << "ks snapshot\n"
        << "ASCII\n"
        << "DATASET STRUCTURED_POINTS\n"
        << "DIMENSIONS " << g.nx << ' ' << g.ny << " 1\n"
        << "ORIGIN " << format_double(g.xmin) << ' ' << format_double(g.ymin) << " 0\n"
        << "SPACING " << format_double(g.hx) << ' ' << format_double(g.hy) << " 1\n"
        << "POINT_DATA " << g.size() << '\n'
        << "SCALARS value double 1\n"
        << "LOOKUP_TABLE default\n";
    for (std::size_t n = 0; n < f.size(); ++n)
      out << format_double(f[n]) << '\n';
  }
  out.flush();
  check_stream(out, path);
}

Field read_snapshot_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in)
    throw IoError("cannot open " + path.string());
  std::string line;
  std::getline(in, line);
  if (line != "x,y,value")
    throw IoError(path.string() + ": not a snapshot csv");
  std::vector<double> values;
  while (std::getline(in, line)) {
    if (line.empty())
      continue;
    const auto comma = line.rfind(',');
    double v = 0;
    const auto res = std::from_chars(line.data() + comma + 1, line.data() + line.size(), v);
    if (comma == std::string::npos || res.ec != std::errc())
      throw IoError(path.string() + ": malformed row '" + line + "'");
    values.push_back(v);
  }
  return Field(std::move(values));
}

void write_cross_section(const Field& f, const Grid2D& g, double y0, const std::string& name,
                         const std::filesystem::path& path) {
  check_shape(f, g, "write_cross_section");
  const double s = std::clamp((y0 - g.ymin) / g.hy, 0.0, static_cast<double>(g.ny - 1));
  const int j0 = std::min(static_cast<int>(std::floor(s)), g.ny - 2);
  const double w = s - j0;
  std::ofstream out = open_for_write(path);
  out << "x," << name << '\n';
  for (int i = 0; i < g.nx; ++i) {
    const double a = f[g.index(i, j0)], b = f[g.index(i, j0 + 1)];
    const double v = (w == 0.0) ? a : (w == 1.0 ? b : (1.0 - w) * a + w * b);
    out << format_double(g.x(i)) << ',' << format_double(v) << '\n';
  }
  out.flush();
  check_stream(out, path);
}

SeriesWriter::SeriesWriter(const std::filesystem::path& path) : out_(open_for_write(path)) {
  out_ << header << '\n';
  out_.flush();
}

void SeriesWriter::write(const StepDiagnostics& d) {
  out_ << d.step << ',' << format_double(d.time) << ',' << format_double(d.mass) << ',' << format_double(d.min_rho)
       << ',' << format_double(d.energy) << ',' << format_double(d.dissipation) << ',' << format_double(d.lambda)
       << ',' << format_double(d.mu) << ',' << d.step1.iterations << ',' << d.step2.iterations << '\n';
  out_.flush();
  if (!out_)
    throw IoError("write to series.csv failed");
}

} // namespace ks
