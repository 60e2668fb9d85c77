#include "membrane/harmonics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace membrane {

namespace {

constexpr double kPi = std::numbers::pi;
const double kSqrt2 = std::sqrt(2.0);

void require_same_grid(const GridField& a, const GridField& b) {
  if (a.grid != b.grid && (a.grid->nlat() != b.grid->nlat() || a.grid->nlon() != b.grid->nlon()))
    throw ValidationError("grid fields live on different grids");
}

void require_same_band(const SpectralField& a, const SpectralField& b) {
  if (a.lmax != b.lmax) throw ValidationError("spectral fields have different band limits");
}

}  // namespace

void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights) {
  nodes.assign(n, 0.0);
  weights.assign(n, 0.0);
  for (int k = 0; k < (n + 1) / 2; ++k) {
    double x = std::cos(kPi * (k + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int l = 2; l <= n; ++l) {
        const double p2 = ((2 * l - 1) * x * p1 - (l - 1) * p0) / l;
        p0 = p1;
        p1 = p2;
      }
      // p1 = P_n(x), p0 = P_{n-1}(x)
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    double p0 = 1.0, p1 = x;
    for (int l = 2; l <= n; ++l) {
      const double p2 = ((2 * l - 1) * x * p1 - (l - 1) * p0) / l;
      p0 = p1;
      p1 = p2;
    }
    dp = n * (x * p1 - p0) / (x * x - 1.0);
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    nodes[k] = x;
    nodes[n - 1 - k] = -x;
    weights[k] = w;
    weights[n - 1 - k] = w;
  }
  if (n % 2 == 1) nodes[n / 2] = 0.0;
}

GridPtr SphGrid::make(int nlat, int nlon, int band_limit) {
  if (nlat < 1 || nlon < 1) throw ValidationError("grid needs nlat >= 1 and nlon >= 1");
  return GridPtr(new SphGrid(nlat, nlon, band_limit));
}

GridPtr SphGrid::for_band(int lmax) {
  if (lmax < 0) throw ValidationError("band limit must be non-negative");
  const int nlat = std::max(lmax + 1, 3 * lmax / 2 + 2);
  return make(nlat, 2 * nlat, lmax);
}

SphGrid::SphGrid(int nlat, int nlon, int band_limit)
    : nlat_(nlat), nlon_(nlon), dphi_(2.0 * kPi / nlon) {
  max_degree_ = std::min(nlat - 1, (nlon - 1) / 2);
  band_limit_ = band_limit < 0 ? max_degree_ : band_limit;
  if (band_limit_ > max_degree_)
    throw ResolutionError("band limit " + std::to_string(band_limit_) +
                          " exceeds what a " + std::to_string(nlat) + "x" +
                          std::to_string(nlon) + " grid resolves");

  std::vector<double> x;
  gauss_legendre(nlat, x, lat_weights_);
  theta_.resize(nlat);
  cos_theta_.resize(nlat);
  sin_theta_.resize(nlat);
  for (int i = 0; i < nlat; ++i) {
    cos_theta_[i] = x[i];
    theta_[i] = std::acos(x[i]);
    sin_theta_[i] = std::sqrt((1.0 - x[i]) * (1.0 + x[i]));
  }
  phi_.resize(nlon);
  for (int j = 0; j < nlon; ++j) phi_[j] = j * dphi_;

  const int L = max_degree_;
  cos_.resize(static_cast<std::size_t>(L + 1) * nlon);
  sin_.resize(cos_.size());
  for (int m = 0; m <= L; ++m)
    for (int j = 0; j < nlon; ++j) {
      cos_[static_cast<std::size_t>(m) * nlon + j] = std::cos(m * phi_[j]);
      sin_[static_cast<std::size_t>(m) * nlon + j] = std::sin(m * phi_[j]);
    }

  table_stride_ = static_cast<std::size_t>(L + 1) * (L + 2) / 2;
  p_.assign(table_stride_ * nlat, 0.0);
  dp_.assign(p_.size(), 0.0);
  d2p_.assign(p_.size(), 0.0);
  for (int i = 0; i < nlat; ++i) {
    const double c = cos_theta_[i], s = sin_theta_[i];
    double pmm = 1.0 / std::sqrt(4.0 * kPi);
    for (int m = 0; m <= L; ++m) {
      if (m > 0) pmm *= std::sqrt((2.0 * m + 1.0) / (2.0 * m)) * s;
      p_[table_index(i, m, m)] = pmm;
      if (m + 1 <= L) p_[table_index(i, m + 1, m)] = std::sqrt(2.0 * m + 3.0) * c * pmm;
      for (int l = m + 2; l <= L; ++l) {
        const double a = std::sqrt((4.0 * l * l - 1.0) / (static_cast<double>(l) * l - static_cast<double>(m) * m));
        const double b = std::sqrt((static_cast<double>(l - 1) * (l - 1) - static_cast<double>(m) * m) /
                                   (4.0 * (l - 1) * (l - 1) - 1.0));
        p_[table_index(i, l, m)] = a * (c * p_[table_index(i, l - 1, m)] - b * p_[table_index(i, l - 2, m)]);
      }
      for (int l = m; l <= L; ++l) {
        const double plm = p_[table_index(i, l, m)];
        const double prev = l > m ? p_[table_index(i, l - 1, m)] : 0.0;
        const double k = l > m ? std::sqrt((2.0 * l + 1.0) / (2.0 * l - 1.0) *
                                           (static_cast<double>(l) * l - static_cast<double>(m) * m))
                               : 0.0;
        const double d1 = (l * c * plm - k * prev) / s;
        dp_[table_index(i, l, m)] = d1;
        // Associated Legendre equation in theta.
        d2p_[table_index(i, l, m)] =
            -(c / s) * d1 - (l * (l + 1.0) - m * m / (s * s)) * plm;
      }
    }
  }
}

std::array<double, 3> SphGrid::position(std::size_t node) const {
  const int i = static_cast<int>(node / nlon_);
  const int j = static_cast<int>(node % nlon_);
  return {sin_theta_[i] * std::cos(phi_[j]), sin_theta_[i] * std::sin(phi_[j]), cos_theta_[i]};
}

void SphGrid::require_band(int lmax) const {
  if (lmax < 0) throw ValidationError("band limit must be non-negative");
  if (nlat_ < lmax + 1 || nlon_ < 2 * lmax + 1)
    throw ResolutionError("grid " + std::to_string(nlat_) + "x" + std::to_string(nlon_) +
                          " is too coarse for band limit " + std::to_string(lmax) +
                          " (needs nlat >= lmax+1 and nlon >= 2 lmax+1)");
}

// --- field arithmetic --------------------------------------------------------

SpectralField& SpectralField::operator+=(const SpectralField& o) {
  require_same_band(*this, o);
  for (std::size_t k = 0; k < coeffs.size(); ++k) coeffs[k] += o.coeffs[k];
  return *this;
}
SpectralField& SpectralField::operator-=(const SpectralField& o) {
  require_same_band(*this, o);
  for (std::size_t k = 0; k < coeffs.size(); ++k) coeffs[k] -= o.coeffs[k];
  return *this;
}
SpectralField& SpectralField::operator*=(double s) {
  for (double& v : coeffs) v *= s;
  return *this;
}
SpectralField operator+(SpectralField a, const SpectralField& b) { return a += b; }
SpectralField operator-(SpectralField a, const SpectralField& b) { return a -= b; }
SpectralField operator*(double s, SpectralField a) { return a *= s; }

GridField& GridField::operator+=(const GridField& o) {
  require_same_grid(*this, o);
  for (std::size_t k = 0; k < values.size(); ++k) values[k] += o.values[k];
  return *this;
}
GridField& GridField::operator-=(const GridField& o) {
  require_same_grid(*this, o);
  for (std::size_t k = 0; k < values.size(); ++k) values[k] -= o.values[k];
  return *this;
}
GridField& GridField::operator*=(double s) {
  for (double& v : values) v *= s;
  return *this;
}
GridField operator+(GridField a, const GridField& b) { return a += b; }
GridField operator-(GridField a, const GridField& b) { return a -= b; }
GridField operator*(double s, GridField a) { return a *= s; }
GridField operator*(const GridField& a, const GridField& b) {
  require_same_grid(a, b);
  GridField out(a.grid);
  for (std::size_t k = 0; k < a.size(); ++k) out[k] = a[k] * b[k];
  return out;
}

// --- transforms --------------------------------------------------------------

SpectralField analyze(const GridField& f, int lmax) {
  const SphGrid& g = *f.grid;
  g.require_band(lmax);
  const int nlat = g.nlat(), nlon = g.nlon();
  const int nm = lmax + 1;
  // Fourier stage: per latitude, cosine and sine sums for m = 0..lmax.
  std::vector<double> fc(static_cast<std::size_t>(nlat) * nm), fs(fc.size());
#pragma omp parallel for schedule(static)
  for (int i = 0; i < nlat; ++i) {
    const double* row = &f.values[g.node(i, 0)];
    const double wi = g.lat_weights()[i] * g.longitude_step();
    for (int m = 0; m < nm; ++m) {
      double sc = 0.0, ss = 0.0;
      for (int j = 0; j < nlon; ++j) {
        sc += row[j] * g.cos_mp(m, j);
        ss += row[j] * g.sin_mp(m, j);
      }
      fc[static_cast<std::size_t>(i) * nm + m] = wi * sc;
      fs[static_cast<std::size_t>(i) * nm + m] = wi * ss;
    }
  }
  // Legendre stage: per order m.
  SpectralField out(lmax);
#pragma omp parallel for schedule(dynamic)
  for (int m = 0; m < nm; ++m) {
    const double scale = m == 0 ? 1.0 : kSqrt2;
    for (int l = m; l <= lmax; ++l) {
      double ac = 0.0, as = 0.0;
      for (int i = 0; i < nlat; ++i) {
        const double p = g.plm(i, l, m);
        ac += p * fc[static_cast<std::size_t>(i) * nm + m];
        as += p * fs[static_cast<std::size_t>(i) * nm + m];
      }
      out(l, m) = scale * ac;
      if (m > 0) out(l, -m) = scale * as;
    }
  }
  return out;
}

namespace {

// Legendre sums A_m, B_m at one latitude for value and theta derivatives.
struct LatitudeSums {
  std::vector<double> a, b, da, db, d2a, d2b;
  explicit LatitudeSums(int nm) : a(nm), b(nm), da(nm), db(nm), d2a(nm), d2b(nm) {}
};

void legendre_sums(const SphGrid& g, const SpectralField& c, int i, bool derivs, LatitudeSums& s) {
  const int L = c.lmax;
  for (int m = 0; m <= L; ++m) {
    const double scale = m == 0 ? 1.0 : kSqrt2;
    const double* p = g.plm_run(i, m);
    double a = 0.0, b = 0.0;
    for (int l = m; l <= L; ++l) {
      a += c(l, m) * p[l - m];
      if (m > 0) b += c(l, -m) * p[l - m];
    }
    s.a[m] = scale * a;
    s.b[m] = scale * b;
    if (!derivs) continue;
    const double* dp = g.dplm_run(i, m);
    const double* d2p = g.d2plm_run(i, m);
    double da = 0.0, db = 0.0, d2a = 0.0, d2b = 0.0;
    for (int l = m; l <= L; ++l) {
      da += c(l, m) * dp[l - m];
      d2a += c(l, m) * d2p[l - m];
      if (m > 0) {
        db += c(l, -m) * dp[l - m];
        d2b += c(l, -m) * d2p[l - m];
      }
    }
    s.da[m] = scale * da;
    s.db[m] = scale * db;
    s.d2a[m] = scale * d2a;
    s.d2b[m] = scale * d2b;
  }
}

// sum_m cm[m] cos(m p_j) + sm[m] sin(m p_j), with optional multipliers.
inline double fourier_sum(const SphGrid& g, int j, int L, const double* cm, const double* sm) {
  double v = 0.0;
  for (int m = 0; m <= L; ++m) v += cm[m] * g.cos_mp(m, j) + sm[m] * g.sin_mp(m, j);
  return v;
}

}  // namespace

GridField synthesize(const SpectralField& c, const GridPtr& grid) {
  const SphGrid& g = *grid;
  g.require_band(c.lmax);
  GridField out(grid);
  const int L = c.lmax;
#pragma omp parallel
  {
    LatitudeSums s(L + 1);
#pragma omp for schedule(static)
    for (int i = 0; i < g.nlat(); ++i) {
      legendre_sums(g, c, i, false, s);
      for (int j = 0; j < g.nlon(); ++j) out[g.node(i, j)] = fourier_sum(g, j, L, s.a.data(), s.b.data());
    }
  }
  return out;
}

std::pair<GridField, GridField> differentiate(const SpectralField& c, const GridPtr& grid) {
  FieldJet jet = synthesize_jet(c, grid);
  return {std::move(jet.dt), std::move(jet.dp)};
}

FieldJet synthesize_jet(const SpectralField& c, const GridPtr& grid) {
  const SphGrid& g = *grid;
  g.require_band(c.lmax);
  FieldJet jet{GridField(grid), GridField(grid), GridField(grid),
               GridField(grid), GridField(grid), GridField(grid)};
  const int L = c.lmax;
#pragma omp parallel
  {
    LatitudeSums s(L + 1);
    std::vector<double> pa(L + 1), pb(L + 1), pda(L + 1), pdb(L + 1), qa(L + 1), qb(L + 1);
#pragma omp for schedule(static)
    for (int i = 0; i < g.nlat(); ++i) {
      legendre_sums(g, c, i, true, s);
      for (int m = 0; m <= L; ++m) {
        // d/dphi maps (A cos + B sin) to (m B cos - m A sin).
        pa[m] = m * s.b[m];
        pb[m] = -m * s.a[m];
        pda[m] = m * s.db[m];
        pdb[m] = -m * s.da[m];
        qa[m] = -static_cast<double>(m) * m * s.a[m];
        qb[m] = -static_cast<double>(m) * m * s.b[m];
      }
      for (int j = 0; j < g.nlon(); ++j) {
        const std::size_t k = g.node(i, j);
        jet.f[k] = fourier_sum(g, j, L, s.a.data(), s.b.data());
        jet.dt[k] = fourier_sum(g, j, L, s.da.data(), s.db.data());
        jet.dtt[k] = fourier_sum(g, j, L, s.d2a.data(), s.d2b.data());
        jet.dp[k] = fourier_sum(g, j, L, pa.data(), pb.data());
        jet.dtp[k] = fourier_sum(g, j, L, pda.data(), pdb.data());
        jet.dpp[k] = fourier_sum(g, j, L, qa.data(), qb.data());
      }
    }
  }
  return jet;
}

// --- spectral operators ------------------------------------------------------

SpectralField laplacian(const SpectralField& c) {
  SpectralField out = c;
  for (int l = 0; l <= c.lmax; ++l)
    for (int m = -l; m <= l; ++m) out(l, m) *= -static_cast<double>(l) * (l + 1);
  return out;
}

SpectralField smooth_theta(const SpectralField& c, double theta) {
  SpectralField out = c;
  for (int l = 0; l <= c.lmax; ++l)
    if (static_cast<double>(l) * (l + 1) > theta)
      for (int m = -l; m <= l; ++m) out(l, m) = 0.0;
  return out;
}

SpectralField smooth(const SpectralField& c, int j) {
  if (j < 0) throw ValidationError("smoothing index must be non-negative");
  return smooth_theta(c, std::ldexp(1.0, j));
}

SpectralField resize(const SpectralField& c, int lmax) {
  SpectralField out(lmax);
  const int top = std::min(lmax, c.lmax);
  std::copy_n(c.coeffs.begin(), SpectralField::count(top), out.coeffs.begin());
  return out;
}

double sobolev_norm(const SpectralField& c, double n) {
  double s = 0.0;
  for (int l = 0; l <= c.lmax; ++l) {
    const double w = std::pow(1.0 + l * (l + 1.0), n);
    double block = 0.0;
    for (int m = -l; m <= l; ++m) block += c(l, m) * c(l, m);
    s += w * block;
  }
  return std::sqrt(s);
}

double dot(const SpectralField& a, const SpectralField& b) {
  require_same_band(a, b);
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a.coeffs[k] * b.coeffs[k];
  return s;
}

double integrate(const GridField& f) {
  const SphGrid& g = *f.grid;
  double total = 0.0;
  for (int i = 0; i < g.nlat(); ++i) {
    double row = 0.0;
    for (int j = 0; j < g.nlon(); ++j) row += f[g.node(i, j)];
    total += g.lat_weights()[i] * row;
  }
  return total * g.longitude_step();
}

double inner(const GridField& f, const GridField& h) {
  require_same_grid(f, h);
  return integrate(f * h);
}

}  // namespace membrane
