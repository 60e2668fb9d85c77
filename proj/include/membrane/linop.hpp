#pragma once

// Linearized elliptic operators about a reparameterized sphere
//   L_phi f = A (Delta_g f + 2 f - (6/4pi) int f dmu_phi),   A = dmu_phi/dmu0
// and their perturbation L(phi,u) about i_phi + a + u, together with the
// projection onto their near-zero modes and spectral tools.

#include <functional>
#include <iosfwd>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "membrane/gauge.hpp"

namespace membrane {

// Multipliers of L_id on each degree: -4 at l=0, 2-l(l+1) otherwise.
double L_id_multiplier(int l);
SpectralField apply_L_id(const SpectralField& phi);

GridField apply_L_phi(const GeometryCache& geom, const GridField& phi);
GridField apply_L_phi(const TangentField& X, const GridField& phi);

// Perturbation u of the embedding at one time slice.
struct PerturbationSlice {
  VectorField u, u_t;
};

GridField apply_L_pert(const GeometryCache& geom, const VectorField& w_t, const GridField& phi,
                       double kappa = kDefaultKappa);
GridField apply_L_pert(const TangentField& X, const Vec3& a, const PerturbationSlice& u,
                       const GridField& phi, double kappa = kDefaultKappa);

// Orthogonal L2(mu0) projection onto span{N^k(i_phi)}, k = 1..3, where
// N(i_phi) = exp_map(X) is the position on the unit sphere.
class ZeroModeProjection {
 public:
  explicit ZeroModeProjection(const TangentField& X);
  static ZeroModeProjection identity(const GridPtr& grid);

  struct Result {
    Vec3 c;
    GridField proj;
  };
  Result apply(const GridField& phi) const;
  // Coefficients G^{-1} <phi, N^k>.
  Vec3 coefficients(const GridField& phi) const;

  const std::array<GridField, 3>& basis() const { return basis_; }
  const Eigen::Matrix3d& gram() const { return gram_; }
  // Orthonormal basis of the analyzed N^k in coefficient space at band lmax.
  Eigen::MatrixXd coefficient_basis(int lmax) const;

 private:
  std::array<GridField, 3> basis_;
  Eigen::Matrix3d gram_;
  Eigen::Matrix3d gram_inv_;
};

ZeroModeProjection::Result p0_project(const TangentField& X, const GridField& phi);

// Linear map on band-lmax coefficient vectors. The coefficient inner product
// is the L2(mu0) inner product, so symmetric operators are self-adjoint.
struct CoefficientOperator {
  int lmax = 0;
  std::function<SpectralField(const SpectralField&)> apply;

  std::size_t dim() const { return SpectralField::count(lmax); }
};

CoefficientOperator L_id_operator(int lmax);
CoefficientOperator neg_laplacian_operator(int lmax);
// Galerkin restriction analyze o L o synthesize on the geometry's grid.
CoefficientOperator L_phi_operator(const GeometryCache& geom, int lmax);
CoefficientOperator L_pert_operator(const GeometryCache& geom, const VectorField& w_t, int lmax,
                                    double kappa = kDefaultKappa);

struct RayleighOptions {
  double tol = 1e-8;
  int max_iter = 0;  // 0: dimension of the space
  unsigned seed = 12345;
};

struct RayleighResult {
  double value;
  double residual;
  int iterations;
};

// Largest eigenvalue by Lanczos with full reorthogonalization. With a
// deflation, the Krylov space is kept orthogonal to the zero modes.
RayleighResult rayleigh_extremes(const CoefficientOperator& op,
                                 const ZeroModeProjection* deflate = nullptr,
                                 const RayleighOptions& opt = {});

Eigen::MatrixXd dense_matrix(const CoefficientOperator& op);

struct Spectrum {
  Eigen::VectorXd values;  // ascending
  Eigen::MatrixXd vectors;
  Eigen::VectorXd residuals;
};
// Full eigendecomposition of the symmetrized Galerkin matrix.
Spectrum dense_spectrum(const CoefficientOperator& op);
// index,eigenvalue,residual rows in descending order of eigenvalue.
void write_spectrum_csv(std::ostream& os, const Spectrum& s);

}  // namespace membrane
