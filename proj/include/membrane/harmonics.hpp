#pragma once

// Real spherical-harmonic analysis and synthesis on a Gauss-Legendre x
// equiangular grid, plus the spectral operators built on it (Laplacian,
// graded norms, cutoff smoothing).
//
// Basis: orthonormal real harmonics without the Condon-Shortley phase,
//   Y_l0        = Pbar_l0(cos t)
//   Y_lm (m>0)  = sqrt(2) Pbar_lm(cos t) cos(m p)
//   Y_l,-m      = sqrt(2) Pbar_lm(cos t) sin(m p)
// where Pbar_lm carries the full normalization so that each Y has unit
// L2 norm on the unit sphere.

#include <array>
#include <cstddef>
#include <memory>
#include <utility>
#include <vector>

#include "membrane/errors.hpp"

namespace membrane {

class SphGrid;
using GridPtr = std::shared_ptr<const SphGrid>;

class SphGrid {
 public:
  // band_limit is the working band limit used by operators that have to
  // differentiate grid data (geometry, curved Laplacian). Negative means
  // "largest degree the grid transforms exactly".
  static GridPtr make(int nlat, int nlon, int band_limit = -1);

  // Grid padded for nonlinear work at band lmax: products of a few band-lmax
  // factors are still integrated with spectral accuracy.
  static GridPtr for_band(int lmax);

  int nlat() const { return nlat_; }
  int nlon() const { return nlon_; }
  int band_limit() const { return band_limit_; }
  // Largest degree L with nlat >= L+1 and nlon >= 2L+1.
  int max_degree() const { return max_degree_; }
  std::size_t size() const { return static_cast<std::size_t>(nlat_) * nlon_; }
  std::size_t node(int i, int j) const {
    return static_cast<std::size_t>(i) * nlon_ + j;
  }

  const std::vector<double>& colatitudes() const { return theta_; }
  const std::vector<double>& longitudes() const { return phi_; }
  // Gauss-Legendre weights in cos(theta); they sum to 2.
  const std::vector<double>& lat_weights() const { return lat_weights_; }
  double cos_theta(int i) const { return cos_theta_[i]; }
  double sin_theta(int i) const { return sin_theta_[i]; }
  // Full quadrature weight of a node; the weights sum to 4 pi.
  double weight(std::size_t node) const {
    return lat_weights_[node / nlon_] * dphi_;
  }
  double longitude_step() const { return dphi_; }
  std::array<double, 3> position(std::size_t node) const;

  // Normalized associated Legendre values and their first two colatitude
  // derivatives at latitude row i, for m <= l <= max_degree().
  double plm(int i, int l, int m) const { return p_[table_index(i, l, m)]; }
  double dplm(int i, int l, int m) const { return dp_[table_index(i, l, m)]; }
  double d2plm(int i, int l, int m) const { return d2p_[table_index(i, l, m)]; }
  // Contiguous run Pbar_{m..L, m}(cos theta_i).
  const double* plm_run(int i, int m) const { return &p_[table_index(i, m, m)]; }
  const double* dplm_run(int i, int m) const { return &dp_[table_index(i, m, m)]; }
  const double* d2plm_run(int i, int m) const { return &d2p_[table_index(i, m, m)]; }

  double cos_mp(int m, int j) const { return cos_[static_cast<std::size_t>(m) * nlon_ + j]; }
  double sin_mp(int m, int j) const { return sin_[static_cast<std::size_t>(m) * nlon_ + j]; }

  // Throws ResolutionError unless the grid transforms band lmax exactly.
  void require_band(int lmax) const;

 private:
  SphGrid(int nlat, int nlon, int band_limit);
  std::size_t table_index(int i, int l, int m) const {
    const std::size_t off =
        static_cast<std::size_t>(m) * (max_degree_ + 1) - static_cast<std::size_t>(m) * (m - 1) / 2;
    return static_cast<std::size_t>(i) * table_stride_ + off + (l - m);
  }

  int nlat_;
  int nlon_;
  int band_limit_;
  int max_degree_;
  double dphi_;
  std::size_t table_stride_;
  std::vector<double> theta_, phi_, lat_weights_, cos_theta_, sin_theta_;
  std::vector<double> p_, dp_, d2p_;
  std::vector<double> cos_, sin_;
};

// Gauss-Legendre nodes (descending, in [-1,1]) and weights on n points.
void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights);

// Coefficients a_{l,m}, l-major, m from -l to l.
struct SpectralField {
  int lmax = 0;
  std::vector<double> coeffs;

  SpectralField() : coeffs(1, 0.0) {}
  explicit SpectralField(int band) : lmax(band), coeffs(count(band), 0.0) {}

  static std::size_t count(int band) {
    return static_cast<std::size_t>(band + 1) * (band + 1);
  }
  static std::size_t index(int l, int m) {
    return static_cast<std::size_t>(l) * l + l + m;
  }
  double& operator()(int l, int m) { return coeffs[index(l, m)]; }
  double operator()(int l, int m) const { return coeffs[index(l, m)]; }
  std::size_t size() const { return coeffs.size(); }

  SpectralField& operator+=(const SpectralField& o);
  SpectralField& operator-=(const SpectralField& o);
  SpectralField& operator*=(double s);
};

SpectralField operator+(SpectralField a, const SpectralField& b);
SpectralField operator-(SpectralField a, const SpectralField& b);
SpectralField operator*(double s, SpectralField a);

struct GridField {
  GridPtr grid;
  std::vector<double> values;

  GridField() = default;
  explicit GridField(GridPtr g) : grid(std::move(g)), values(grid->size(), 0.0) {}
  GridField(GridPtr g, std::vector<double> v) : grid(std::move(g)), values(std::move(v)) {}

  std::size_t size() const { return values.size(); }
  double& operator[](std::size_t k) { return values[k]; }
  double operator[](std::size_t k) const { return values[k]; }

  GridField& operator+=(const GridField& o);
  GridField& operator-=(const GridField& o);
  GridField& operator*=(double s);
};

GridField operator+(GridField a, const GridField& b);
GridField operator-(GridField a, const GridField& b);
GridField operator*(double s, GridField a);
// Pointwise product.
GridField operator*(const GridField& a, const GridField& b);

// Grid values of f(theta, phi).
template <class F>
GridField sample(const GridPtr& grid, F&& f) {
  GridField out(grid);
  for (int i = 0; i < grid->nlat(); ++i)
    for (int j = 0; j < grid->nlon(); ++j)
      out[grid->node(i, j)] = f(grid->colatitudes()[i], grid->longitudes()[j]);
  return out;
}

// Values plus all first and second coordinate derivatives of a truncated
// expansion, evaluated exactly at the nodes.
struct FieldJet {
  GridField f, dt, dp, dtt, dtp, dpp;
};

SpectralField analyze(const GridField& f, int lmax);
GridField synthesize(const SpectralField& c, const GridPtr& grid);
std::pair<GridField, GridField> differentiate(const SpectralField& c, const GridPtr& grid);
FieldJet synthesize_jet(const SpectralField& c, const GridPtr& grid);

// Reference implementations: direct summation over every (node, l, m),
// single-threaded. Kept for testing the separable kernels above.
namespace serial {
SpectralField analyze(const GridField& f, int lmax);
GridField synthesize(const SpectralField& c, const GridPtr& grid);
FieldJet synthesize_jet(const SpectralField& c, const GridPtr& grid);
}  // namespace serial

SpectralField laplacian(const SpectralField& c);
// Keeps coefficients with l(l+1) <= theta.
SpectralField smooth_theta(const SpectralField& c, double theta);
// Dyadic cutoff: keeps l(l+1) <= 2^j.
SpectralField smooth(const SpectralField& c, int j);
// Zero-pads or truncates to a new band limit.
SpectralField resize(const SpectralField& c, int lmax);
// sqrt(sum (1 + l(l+1))^n a_lm^2)
double sobolev_norm(const SpectralField& c, double n);
double dot(const SpectralField& a, const SpectralField& b);

double integrate(const GridField& f);
// Quadrature inner product <f, g>_{L2(mu0)}.
double inner(const GridField& f, const GridField& g);

}  // namespace membrane
