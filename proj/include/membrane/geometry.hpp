#pragma once

// Extrinsic geometry of an embedded sphere w: S^2 -> R^3 sampled on a
// SphGrid, and the membrane force built from it.
//
// Conventions: N is the outward unit normal, h_ij = -N . d_i d_j w, and the
// mean curvature H = g^ij h_ij is +2 on the unit sphere, so that
// Delta_g w = -H N.

#include <array>
#include <numbers>
#include <vector>

#include <Eigen/Dense>

#include "membrane/harmonics.hpp"

namespace membrane {

using Vec3 = Eigen::Vector3d;
using Mat2 = Eigen::Matrix2d;

// Volume term coefficient that makes the unit sphere static.
inline constexpr double kDefaultKappa = 8.0 * std::numbers::pi / 3.0;

// R^3-valued field on the grid, one GridField per Cartesian component.
struct VectorField {
  std::array<GridField, 3> comp;

  VectorField() = default;
  explicit VectorField(const GridPtr& g) : comp{GridField(g), GridField(g), GridField(g)} {}

  const GridPtr& grid() const { return comp[0].grid; }
  std::size_t size() const { return comp[0].size(); }
  Vec3 at(std::size_t k) const { return {comp[0][k], comp[1][k], comp[2][k]}; }
  void set(std::size_t k, const Vec3& v) {
    comp[0][k] = v[0];
    comp[1][k] = v[1];
    comp[2][k] = v[2];
  }

  VectorField& operator+=(const VectorField& o);
  VectorField& operator-=(const VectorField& o);
  VectorField& operator*=(double s);
};

VectorField operator+(VectorField a, const VectorField& b);
VectorField operator-(VectorField a, const VectorField& b);
VectorField operator*(double s, VectorField a);
// Scalar field times vector field, pointwise.
VectorField operator*(const GridField& s, const VectorField& v);

// Unit-sphere position i0 at every node.
VectorField position_field(const GridPtr& grid);
VectorField constant_field(const GridPtr& grid, const Vec3& c);
// Pointwise dot product.
GridField dot(const VectorField& a, const VectorField& b);
// sqrt(sum_k ||component k||^2) in the graded norm of order n, after
// analysis at band lmax.
double sobolev_norm(const VectorField& v, int lmax, double n);
// L2(mu0) norm by quadrature.
double l2_norm(const VectorField& v);

struct Embedding {
  VectorField w;
  int lmax = 0;  // band limit used to differentiate w

  static Embedding unit_sphere(const GridPtr& grid);
  static Embedding sphere(const GridPtr& grid, double radius, const Vec3& center = Vec3::Zero());
};

struct GeometryCache {
  GridPtr grid;
  int lmax = 0;
  // Band-limited embedding and its coordinate derivatives at the nodes.
  std::vector<Vec3> w, w_t, w_p, w_tt, w_tp, w_pp;
  std::vector<Mat2> g, ginv, h;
  std::vector<double> sqrt_detg, hmean, area_ratio, h_norm2;
  std::vector<Vec3> normal;
  double volume = 0.0;
  double area = 0.0;
  // Set when the parameterization was inward-oriented and N was flipped.
  bool orientation_flipped = false;

  GridField mean_curvature() const { return {grid, hmean}; }
  GridField area_ratio_field() const { return {grid, area_ratio}; }
  VectorField normal_field() const;
};

GeometryCache geometry_of(const Embedding& w);
// Same, from the three Cartesian coefficient tables directly.
GeometryCache geometry_of(const std::array<SpectralField, 3>& w, const GridPtr& grid);

// (dmu(w)/dmu0) (-H(w) + kappa / Vol(w)) N(w)
VectorField rhs_force(const GeometryCache& geom, double kappa = kDefaultKappa);
VectorField rhs_force(const Embedding& w, double kappa = kDefaultKappa);

// Surface operators of the metric g(w), applied to band-limited scalars.
GridField surface_laplacian(const GeometryCache& geom, const SpectralField& f);
GridField surface_laplacian(const GeometryCache& geom, const GridField& f);
// Gradient as an R^3 vector tangent to w.
VectorField surface_gradient(const GeometryCache& geom, const GridField& f);
// Tangential divergence g^ij (d_i V . d_j w) of an R^3-valued field.
GridField surface_divergence(const GeometryCache& geom, const VectorField& v);

struct GeometrySummary {
  double area, volume, h_min, h_max, min_detg;
};
GeometrySummary summarize(const GeometryCache& geom);

// One time slice of a variation eta with its time derivatives.
struct VariationSlice {
  VectorField eta, eta_t, eta_tt;
};

// Linearization Psi'(w) eta of
//   Psi(w) = d_t^2 w + b d_t w - (dmu(w)/dmu0)(-H + kappa/Vol) N
// at one time slice. Psi is linear in the time derivatives of w, so only
// those of eta enter.
VectorField apply_psi_prime(const Embedding& w, const VariationSlice& eta, double b,
                            double kappa = kDefaultKappa);
// First variation of the unit normal, -grad(eta.N) + h^kl (eta . d_l w) d_k w.
VectorField normal_variation(const GeometryCache& geom, const VectorField& eta);
// Directional derivative F'(w) eta of rhs_force.
VectorField force_derivative(const GeometryCache& geom, const VectorField& eta,
                             double kappa = kDefaultKappa);

}  // namespace membrane
