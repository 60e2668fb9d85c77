#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <numbers>
#include <random>
#include <vector>

#include "membrane/geometry.hpp"
#include "membrane/harmonics.hpp"

namespace testing {

using namespace membrane;
constexpr double pi = std::numbers::pi;

// Closed-form real harmonics through l = 2 (no Condon-Shortley phase).
inline double ylm_closed(int l, int m, double th, double ph) {
  const double c = std::cos(th), s = std::sin(th);
  if (l == 0) return 1.0 / std::sqrt(4 * pi);
  if (l == 1) {
    const double k = std::sqrt(3.0 / (4 * pi));
    if (m == 0) return k * c;
    return m > 0 ? k * s * std::cos(ph) : k * s * std::sin(ph);
  }
  if (l == 2) {
    if (m == 0) return std::sqrt(5.0 / (16 * pi)) * (3 * c * c - 1);
    if (std::abs(m) == 1) {
      const double k = std::sqrt(15.0 / (4 * pi)) * s * c;
      return m > 0 ? k * std::cos(ph) : k * std::sin(ph);
    }
    const double k = std::sqrt(15.0 / (16 * pi)) * s * s;
    return m > 0 ? k * std::cos(2 * ph) : k * std::sin(2 * ph);
  }
  return NAN;
}

inline SpectralField random_field(int lmax, std::mt19937_64& rng, double decay = 0.0) {
  std::normal_distribution<double> n;
  SpectralField c(lmax);
  for (int l = 0; l <= lmax; ++l)
    for (int m = -l; m <= l; ++m) c(l, m) = n(rng) * std::pow(1.0 + l * (l + 1.0), -decay / 2);
  return c;
}

inline SpectralField single(int lmax, int l, int m, double v = 1.0) {
  SpectralField c(lmax);
  c(l, m) = v;
  return c;
}

inline double max_abs(const SpectralField& a, const SpectralField& b) {
  double m = 0.0;
  const std::size_t n = std::min(a.size(), b.size());
  for (std::size_t i = 0; i < n; ++i) m = std::max(m, std::abs(a.coeffs[i] - b.coeffs[i]));
  for (std::size_t i = n; i < a.size(); ++i) m = std::max(m, std::abs(a.coeffs[i]));
  for (std::size_t i = n; i < b.size(); ++i) m = std::max(m, std::abs(b.coeffs[i]));
  return m;
}

inline double max_abs(const GridField& a, const GridField& b) {
  double m = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) m = std::max(m, std::abs(a[k] - b[k]));
  return m;
}

inline double max_abs(const GridField& a) {
  double m = 0.0;
  for (double v : a.values) m = std::max(m, std::abs(v));
  return m;
}

inline double max_abs(const VectorField& a) {
  double m = 0.0;
  for (std::size_t k = 0; k < a.grid()->size(); ++k) m = std::max(m, a.at(k).norm());
  return m;
}

inline double max_abs(const VectorField& a, const VectorField& b) { return max_abs(a - b); }

inline GridField scalar(const GridPtr& g, const SpectralField& c) { return synthesize(c, g); }

// Smooth Cartesian polynomial field restricted to the sphere.
inline VectorField polynomial_field(const GridPtr& g, const std::array<double, 9>& k) {
  VectorField out(g);
  for (std::size_t n = 0; n < g->size(); ++n) {
    const auto p = g->position(n);
    const double x = p[0], y = p[1], z = p[2];
    out.set(n, Vec3(k[0] * x * y + k[1] * z + k[2] * x * x, k[3] * y * z + k[4] * x + k[5] * z * z,
                    k[6] * x * z + k[7] * y + k[8] * y * y));
  }
  return out;
}

// Dormand-Prince 5(4) with error control, for y' = f(t, y).
using OdeRhs = std::function<std::vector<double>(double, const std::vector<double>&)>;

inline std::vector<std::vector<double>> dopri(const OdeRhs& f, std::vector<double> y, const std::vector<double>& times,
                                              double rtol = 1e-13, double atol = 1e-14) {
  static const double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  static const double a21 = 1.0 / 5;
  static const double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static const double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static const double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
  static const double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                      a65 = -5103.0 / 18656;
  static const double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
  static const double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                      e6 = 22.0 / 525, e7 = -1.0 / 40;
  const std::size_t n = y.size();
  auto axpy = [&](const std::vector<double>& base, std::initializer_list<std::pair<double, const std::vector<double>*>> terms,
                  double h) {
    std::vector<double> out = base;
    for (const auto& [c, v] : terms)
      for (std::size_t i = 0; i < n; ++i) out[i] += h * c * (*v)[i];
    return out;
  };
  std::vector<std::vector<double>> out;
  double t = 0.0, h = 1e-3;
  std::size_t next = 0;
  while (next < times.size() && times[next] <= t) out.push_back(y), ++next;
  while (next < times.size()) {
    const double target = times[next];
    if (t + h > target) h = target - t;
    const auto k1 = f(t, y);
    const auto k2 = f(t + c2 * h, axpy(y, {{a21, &k1}}, h));
    const auto k3 = f(t + c3 * h, axpy(y, {{a31, &k1}, {a32, &k2}}, h));
    const auto k4 = f(t + c4 * h, axpy(y, {{a41, &k1}, {a42, &k2}, {a43, &k3}}, h));
    const auto k5 = f(t + c5 * h, axpy(y, {{a51, &k1}, {a52, &k2}, {a53, &k3}, {a54, &k4}}, h));
    const auto k6 = f(t + h, axpy(y, {{a61, &k1}, {a62, &k2}, {a63, &k3}, {a64, &k4}, {a65, &k5}}, h));
    const auto y5 = axpy(y, {{b1, &k1}, {b3, &k3}, {b4, &k4}, {b5, &k5}, {b6, &k6}}, h);
    const auto k7 = f(t + h, y5);
    double err = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double e = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
      const double sc = atol + rtol * std::max(std::abs(y[i]), std::abs(y5[i]));
      err = std::max(err, std::abs(e) / sc);
    }
    if (err <= 1.0) {
      t += h;
      y = y5;
      if (std::abs(t - target) <= 1e-12 * (1.0 + target)) {
        t = target;
        out.push_back(y);
        ++next;
      }
    }
    const double fac = err == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(err, -0.2), 0.2, 5.0);
    h *= fac;
  }
  return out;
}

}  // namespace testing
