#pragma once

// Uniform node-centred grid on a rectangle with homogeneous Neumann closure.
//
// Nodes sit at (xmin + i*hx, ymin + j*hy), i = 0..nx-1, j = 0..ny-1, and are
// stored row-major by j then i. Boundary conditions enter through mirror
// ghosts: the ghost beyond a boundary node equals its first interior
// neighbour. Under this closure the 5-point Laplacian is self-adjoint in the
// trapezoidal inner product and integrates to zero, which is what the mass and
// energy bookkeeping downstream relies on.

#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace ks {

struct Grid2D {
  double xmin = 0.0, xmax = 1.0, ymin = 0.0, ymax = 1.0;
  int nx = 3, ny = 3;
  double hx = 0.5, hy = 0.5;

  std::size_t size() const { return static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny); }
  std::size_t index(int i, int j) const {
    return static_cast<std::size_t>(j) * static_cast<std::size_t>(nx) + static_cast<std::size_t>(i);
  }
  double x(int i) const { return xmin + i * hx; }
  double y(int j) const { return ymin + j * hy; }
  double area() const { return (xmax - xmin) * (ymax - ymin); }

  /// Trapezoidal quadrature weight of node (i, j), including hx*hy.
  double weight(int i, int j) const;
  /// All quadrature weights in storage order.
  std::vector<double> weights() const;

  friend bool operator==(const Grid2D&, const Grid2D&) = default;
};

/// Throws ConfigError on a degenerate extent or fewer than 3 nodes per axis.
Grid2D build_grid(double xmin, double xmax, double ymin, double ymax, int nx, int ny);

/// Scalar grid function, one value per node.
class Field {
public:
  Field() = default;
  explicit Field(const Grid2D& g, double value = 0.0) : values_(g.size(), value) {}
  explicit Field(std::vector<double> values) : values_(std::move(values)) {}

  std::size_t size() const { return values_.size(); }
  double& operator[](std::size_t n) { return values_[n]; }
  double operator[](std::size_t n) const { return values_[n]; }

  std::span<double> span() { return values_; }
  std::span<const double> span() const { return values_; }
  std::vector<double>& values() { return values_; }
  const std::vector<double>& values() const { return values_; }

  double min() const;
  double max() const;
  bool all_finite() const;

  Field& operator+=(const Field& o);
  Field& operator-=(const Field& o);
  Field& operator*=(double s);

  friend bool operator==(const Field&, const Field&) = default;

private:
  std::vector<double> values_;
};

Field operator+(Field a, const Field& b);
Field operator-(Field a, const Field& b);
Field operator*(double s, Field a);

/// Discrete gradient: one Field per component.
struct VectorField {
  Field dx, dy;
};

/// Samples f(x, y) at every node.
Field sample(const Grid2D& g, const std::function<double(double, double)>& f);

/// Throws ShapeError when f does not live on g.
void check_shape(const Field& f, const Grid2D& g, const char* what);

Field apply_laplacian(const Field& f, const Grid2D& g);
void apply_laplacian(std::span<const double> f, std::span<double> out, const Grid2D& g);

/// Centred differences inside; the normal component is zero on the boundary.
VectorField gradient(const Field& f, const Grid2D& g);

/// Trapezoidal rule, compensated summation.
double integrate(const Field& f, const Grid2D& g);
/// Trapezoidal integral of the pointwise product f*h.
double inner(const Field& f, const Field& h, const Grid2D& g);

enum class NormKind { L2, H1semi, Linf };
double norm(const Field& f, const Grid2D& g, NormKind kind);

/// Neumaier-compensated running sum.
class CompensatedSum {
public:
  void add(double v) {
    const double t = sum_ + v;
    if (std::abs(sum_) >= std::abs(v))
      comp_ += (sum_ - t) + v;
    else
      comp_ += (v - t) + sum_;
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

} // namespace ks
