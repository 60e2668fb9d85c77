// Direct-summation transforms, O(nodes * (lmax+1)^2), one thread.

#include <cmath>

#include "membrane/harmonics.hpp"

namespace membrane::serial {

namespace {

// Azimuthal factor of Y_lm and its first two phi derivatives.
struct Azimuth {
  double v, d, dd;
};

Azimuth azimuth(int m, double phi) {
  const double r2 = std::sqrt(2.0);
  if (m == 0) return {1.0, 0.0, 0.0};
  if (m > 0)
    return {r2 * std::cos(m * phi), -r2 * m * std::sin(m * phi), -r2 * m * m * std::cos(m * phi)};
  const int k = -m;
  return {r2 * std::sin(k * phi), r2 * k * std::cos(k * phi), -r2 * k * k * std::sin(k * phi)};
}

}  // namespace

SpectralField analyze(const GridField& f, int lmax) {
  const SphGrid& g = *f.grid;
  g.require_band(lmax);
  SpectralField out(lmax);
  for (int l = 0; l <= lmax; ++l)
    for (int m = -l; m <= l; ++m) {
      double s = 0.0;
      for (int i = 0; i < g.nlat(); ++i)
        for (int j = 0; j < g.nlon(); ++j) {
          const std::size_t k = g.node(i, j);
          s += g.weight(k) * f[k] * g.plm(i, l, std::abs(m)) * azimuth(m, g.longitudes()[j]).v;
        }
      out(l, m) = s;
    }
  return out;
}

GridField synthesize(const SpectralField& c, const GridPtr& grid) {
  return serial::synthesize_jet(c, grid).f;
}

FieldJet synthesize_jet(const SpectralField& c, const GridPtr& grid) {
  const SphGrid& g = *grid;
  g.require_band(c.lmax);
  FieldJet jet{GridField(grid), GridField(grid), GridField(grid),
               GridField(grid), GridField(grid), GridField(grid)};
  for (int i = 0; i < g.nlat(); ++i)
    for (int j = 0; j < g.nlon(); ++j) {
      const std::size_t k = g.node(i, j);
      for (int l = 0; l <= c.lmax; ++l)
        for (int m = -l; m <= l; ++m) {
          const double a = c(l, m);
          const int am = std::abs(m);
          const Azimuth z = azimuth(m, g.longitudes()[j]);
          const double p = g.plm(i, l, am), dp = g.dplm(i, l, am), d2p = g.d2plm(i, l, am);
          jet.f[k] += a * p * z.v;
          jet.dt[k] += a * dp * z.v;
          jet.dp[k] += a * p * z.d;
          jet.dtt[k] += a * d2p * z.v;
          jet.dtp[k] += a * dp * z.d;
          jet.dpp[k] += a * p * z.dd;
        }
    }
  return jet;
}

}  // namespace membrane::serial
