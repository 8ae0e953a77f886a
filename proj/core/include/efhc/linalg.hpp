#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace efhc {

using Vec = std::vector<double>;

inline double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("dot: dimension mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// y += alpha * x
inline void axpy(double alpha, std::span<const double> x, Vec& y) {
  if (x.size() != y.size()) throw std::invalid_argument("axpy: dimension mismatch");
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

inline void scale(Vec& v, double alpha) {
  for (double& x : v) x *= alpha;
}

inline Vec sub(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("sub: dimension mismatch");
  Vec r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] - b[i];
  return r;
}

inline double norm2(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

inline double norm_inf(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s = std::max(s, std::fabs(x));
  return s;
}

/// q-norm for any real order q >= 1.
inline double norm_q(std::span<const double> v, double q) {
  if (q < 1.0) throw std::invalid_argument("norm_q: order must be >= 1");
  if (q == 2.0) return norm2(v);
  double s = 0.0;
  for (double x : v) s += std::pow(std::fabs(x), q);
  return std::pow(s, 1.0 / q);
}

inline Vec mean_of(std::span<const Vec> vs) {
  if (vs.empty()) throw std::invalid_argument("mean_of: empty set");
  Vec m(vs[0].size(), 0.0);
  for (const Vec& v : vs) axpy(1.0, v, m);
  scale(m, 1.0 / static_cast<double>(vs.size()));
  return m;
}

}  // namespace efhc
