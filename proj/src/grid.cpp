#include "ks/grid.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ks/errors.hpp"

namespace ks {

double Grid2D::weight(int i, int j) const {
  const double wx = (i == 0 || i == nx - 1) ? 0.5 : 1.0;
  const double wy = (j == 0 || j == ny - 1) ? 0.5 : 1.0;
  return wx * wy * hx * hy;
}

std::vector<double> Grid2D::weights() const {
  std::vector<double> w(size());
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i)
      w[index(i, j)] = weight(i, j);
  return w;
}

Grid2D build_grid(double xmin, double xmax, double ymin, double ymax, int nx, int ny) {
  if (!(std::isfinite(xmin) && std::isfinite(xmax) && std::isfinite(ymin) && std::isfinite(ymax)))
    throw ConfigError("grid bounds must be finite");
  if (!(xmax > xmin) || !(ymax > ymin))
    throw ConfigError("grid extent is degenerate: need xmax > xmin and ymax > ymin");
  if (nx < 3 || ny < 3)
    throw ConfigError("grid needs at least 3 nodes per axis, got nx=" + std::to_string(nx) +
                      ", ny=" + std::to_string(ny));
  Grid2D g;
  g.xmin = xmin;
  g.xmax = xmax;
  g.ymin = ymin;
  g.ymax = ymax;
  g.nx = nx;
  g.ny = ny;
  g.hx = (xmax - xmin) / (nx - 1);
  g.hy = (ymax - ymin) / (ny - 1);
  return g;
}

double Field::min() const { return *std::min_element(values_.begin(), values_.end()); }
double Field::max() const { return *std::max_element(values_.begin(), values_.end()); }

bool Field::all_finite() const {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

Field& Field::operator+=(const Field& o) {
  if (o.size() != size())
    throw ShapeError("field size mismatch in +=");
  for (std::size_t n = 0; n < size(); ++n)
    values_[n] += o.values_[n];
  return *this;
}

Field& Field::operator-=(const Field& o) {
  if (o.size() != size())
    throw ShapeError("field size mismatch in -=");
  for (std::size_t n = 0; n < size(); ++n)
    values_[n] -= o.values_[n];
  return *this;
}

Field& Field::operator*=(double s) {
  for (double& v : values_)
    v *= s;
  return *this;
}

Field operator+(Field a, const Field& b) { return a += b; }
Field operator-(Field a, const Field& b) { return a -= b; }
Field operator*(double s, Field a) { return a *= s; }

Field sample(const Grid2D& g, const std::function<double(double, double)>& f) {
  Field out(g);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i)
      out[g.index(i, j)] = f(g.x(i), g.y(j));
  return out;
}

void check_shape(const Field& f, const Grid2D& g, const char* what) {
  if (f.size() != g.size())
    throw ShapeError(std::string(what) + ": field has " + std::to_string(f.size()) +
                     " values, grid has " + std::to_string(g.size()) + " nodes");
}

void apply_laplacian(std::span<const double> f, std::span<double> out, const Grid2D& g) {
  const double ax = 1.0 / (g.hx * g.hx);
  const double ay = 1.0 / (g.hy * g.hy);
  const int nx = g.nx, ny = g.ny;
  for (int j = 0; j < ny; ++j) {
    // mirror ghosts
    const int jd = (j == 0) ? 1 : j - 1;
    const int ju = (j == ny - 1) ? ny - 2 : j + 1;
    const double* row = &f[g.index(0, j)];
    const double* down = &f[g.index(0, jd)];
    const double* up = &f[g.index(0, ju)];
    double* o = &out[g.index(0, j)];
    for (int i = 0; i < nx; ++i) {
      const int il = (i == 0) ? 1 : i - 1;
      const int ir = (i == nx - 1) ? nx - 2 : i + 1;
      const double c = row[i];
      o[i] = ax * (row[il] - 2.0 * c + row[ir]) + ay * (down[i] - 2.0 * c + up[i]);
    }
  }
}

Field apply_laplacian(const Field& f, const Grid2D& g) {
  check_shape(f, g, "apply_laplacian");
  Field out(g);
  apply_laplacian(f.span(), out.span(), g);
  return out;
}

VectorField gradient(const Field& f, const Grid2D& g) {
  check_shape(f, g, "gradient");
  VectorField v{Field(g), Field(g)};
  const double sx = 0.5 / g.hx;
  const double sy = 0.5 / g.hy;
  for (int j = 0; j < g.ny; ++j) {
    for (int i = 0; i < g.nx; ++i) {
      const std::size_t n = g.index(i, j);
      if (i > 0 && i < g.nx - 1)
        v.dx[n] = sx * (f[n + 1] - f[n - 1]);
      if (j > 0 && j < g.ny - 1)
        v.dy[n] = sy * (f[g.index(i, j + 1)] - f[g.index(i, j - 1)]);
    }
  }
  return v;
}

double integrate(const Field& f, const Grid2D& g) {
  check_shape(f, g, "integrate");
  CompensatedSum s;
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i)
      s.add(g.weight(i, j) * f[g.index(i, j)]);
  return s.value();
}

double inner(const Field& f, const Field& h, const Grid2D& g) {
  check_shape(f, g, "inner");
  check_shape(h, g, "inner");
  CompensatedSum s;
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      const std::size_t n = g.index(i, j);
      s.add(g.weight(i, j) * f[n] * h[n]);
    }
  return s.value();
}

double norm(const Field& f, const Grid2D& g, NormKind kind) {
  check_shape(f, g, "norm");
  switch (kind) {
  case NormKind::L2:
    return std::sqrt(std::max(0.0, inner(f, f, g)));
  case NormKind::H1semi: {
    const VectorField d = gradient(f, g);
    return std::sqrt(std::max(0.0, inner(d.dx, d.dx, g) + inner(d.dy, d.dy, g)));
  }
  case NormKind::Linf: {
    double m = 0.0;
    for (double v : f.values())
      m = std::max(m, std::abs(v));
    return m;
  }
  }
  return 0.0;
}

} // namespace ks
