#pragma once

// BDF-k time operators, k = 1..5.
//
//   D v^{n+1} = (alpha * v^{n+1} - sum_i a_i v^{n+1-i}) / tau
//   B v^n     = sum_i b_i v^{n+1-i}
//
// a-weights form the history combination of the backward difference; the
// b-weights are the order-k extrapolation to t_{n+1}. Both act on scalars and
// on grid Fields.

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "ks/errors.hpp"
#include "ks/grid.hpp"

namespace ks {

struct BdfScheme {
  int k = 1;
  double alpha = 1.0;
  /// Weights of v^n, v^{n-1}, ..., v^{n-k+1}.
  std::vector<double> a_weights;
  std::vector<double> b_weights;
};

inline BdfScheme bdf_coefficients(int k) {
  switch (k) {
  case 1:
    return {1, 1.0, {1.0}, {1.0}};
  case 2:
    return {2, 3.0 / 2.0, {2.0, -1.0 / 2.0}, {2.0, -1.0}};
  case 3:
    return {3, 11.0 / 6.0, {3.0, -3.0 / 2.0, 1.0 / 3.0}, {3.0, -3.0, 1.0}};
  case 4:
    return {4, 25.0 / 12.0, {4.0, -3.0, 4.0 / 3.0, -1.0 / 4.0}, {4.0, -6.0, 4.0, -1.0}};
  case 5:
    return {5, 137.0 / 60.0, {5.0, -5.0, 10.0 / 3.0, -5.0 / 4.0, 1.0 / 5.0}, {5.0, -10.0, 10.0, -5.0, 1.0}};
  default:
    throw ConfigError("BDF order must be in 1..5, got " + std::to_string(k));
  }
}

/// Fixed-capacity ring buffer of the most recent values, newest first.
template <class T>
class History {
public:
  History() = default;
  explicit History(std::size_t capacity) : slots_(capacity) {}

  std::size_t capacity() const { return slots_.size(); }
  std::size_t size() const { return count_; }
  bool warm() const { return count_ == slots_.size() && !slots_.empty(); }

  /// Inserts the newest value, evicting the oldest once full.
  void push(T value) {
    if (slots_.empty())
      throw StateError("push into a zero-capacity history");
    head_ = (head_ + slots_.size() - 1) % slots_.size();
    slots_[head_] = std::move(value);
    if (count_ < slots_.size())
      ++count_;
  }

  /// age 0 is the newest entry.
  const T& operator[](std::size_t age) const {
    if (age >= count_)
      throw StateError("history access beyond stored levels");
    return slots_[(head_ + age) % slots_.size()];
  }
  const T& newest() const { return (*this)[0]; }

private:
  std::vector<T> slots_;
  std::size_t head_ = 0;
  std::size_t count_ = 0;
};

namespace detail {

template <class T>
void require_warm(const History<T>& h, const BdfScheme& s, const char* what) {
  if (h.size() < static_cast<std::size_t>(s.k))
    throw StateError(std::string(what) + ": history holds " + std::to_string(h.size()) +
                     " levels, BDF" + std::to_string(s.k) + " needs " + std::to_string(s.k));
}

inline double lincomb(const History<double>& h, const std::vector<double>& w) {
  double acc = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i)
    acc += w[i] * h[i];
  return acc;
}

inline Field lincomb(const History<Field>& h, const std::vector<double>& w) {
  Field out(std::vector<double>(h[0].size(), 0.0));
  for (std::size_t i = 0; i < w.size(); ++i) {
    const Field& v = h[i];
    if (v.size() != out.size())
      throw ShapeError("history levels have different sizes");
    for (std::size_t n = 0; n < out.size(); ++n)
      out[n] += w[i] * v[n];
  }
  return out;
}

} // namespace detail

/// A_k: sum_i a_i v^{n+1-i}.
template <class T>
T history_combination(const History<T>& hist, const BdfScheme& s) {
  detail::require_warm(hist, s, "history_combination");
  return detail::lincomb(hist, s.a_weights);
}

/// B_k: order-k extrapolation of the history to the next level.
template <class T>
T extrapolate(const History<T>& hist, const BdfScheme& s) {
  detail::require_warm(hist, s, "extrapolate");
  return detail::lincomb(hist, s.b_weights);
}

inline double discrete_derivative(double next, const History<double>& hist, double tau, const BdfScheme& s) {
  return (s.alpha * next - history_combination(hist, s)) / tau;
}

inline Field discrete_derivative(const Field& next, const History<Field>& hist, double tau, const BdfScheme& s) {
  Field out = history_combination(hist, s);
  if (out.size() != next.size())
    throw ShapeError("discrete_derivative: new level and history differ in size");
  for (std::size_t n = 0; n < out.size(); ++n)
    out[n] = (s.alpha * next[n] - out[n]) / tau;
  return out;
}

} // namespace ks
