#pragma once

// Exact modewise solution of the damped linearized problem about a
// reparameterized sphere,
//   phi'' + b phi' - L_phi phi = gamma,      psi'' + b psi' = f_T,
// and the splitting of its solution into a terminal reparameterization, a
// terminal translation and a decaying remainder.

#include <complex>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "membrane/gauge.hpp"

namespace membrane {

// Guaranteed decay rate: b/3 for b < 2, (b - sqrt(b^2-4))/3 otherwise.
double beta(double b);

struct ModeRoots {
  double lambda, b;
  std::complex<double> omega_plus, omega_minus;
};
// Roots of w^2 + b w + lambda.
ModeRoots mode_roots(double b, double lambda);

// Impulse response K of x'' + b x' + lambda x = 0 (K(0) = 0, K'(0) = 1)
// and its derivative, evaluated without cancellation for every (b, lambda).
struct ModeKernel {
  double k, dk;
};
ModeKernel mode_kernel(double b, double lambda, double tau);

template <class T>
struct Trajectory {
  std::vector<double> t;
  std::vector<T> values;

  std::size_t size() const { return t.size(); }
  bool empty() const { return t.empty(); }
};
using ScalarTrajectory = Trajectory<GridField>;
using SpectralTrajectory = Trajectory<SpectralField>;
using VectorTrajectory = Trajectory<VectorField>;

// --- independent scalar modes ------------------------------------------------

// Forcing samples, one vector per sample time. Between samples the forcing is
// the cubic Lagrange interpolant of the nearest four samples; outside the
// sample range it is zero.
struct ModalForcing {
  std::vector<double> t;
  std::vector<Eigen::VectorXd> g;
};

struct ModalTrajectory {
  std::vector<Eigen::VectorXd> x, dx;  // at the requested times
  double t_end = 0.0;                  // last time the state was advanced to
  Eigen::VectorXd x_end, dx_end;
};

// Solves x_i'' + b x_i' + lambda_i x_i = g_i(t) from t = 0. Duhamel integrals
// use composite Gauss-Legendre panels between forcing samples.
ModalTrajectory propagate_modes(const Eigen::VectorXd& lambda, double b, const Eigen::VectorXd& x0,
                                const Eigen::VectorXd& dx0, const ModalForcing& forcing,
                                const std::vector<double>& times);

// --- scalar (normal) part ------------------------------------------------------

// Eigenbasis of -L_phi at band lmax. At X = 0 the basis is the harmonic one;
// otherwise the Galerkin matrix is deflated by the analyzed zero modes and
// diagonalized densely.
struct ModalBasis {
  int lmax = 0;
  Eigen::VectorXd lambda;          // per mode, 0 on the zero modes
  std::vector<char> zero;          // zero-mode flags
  std::optional<Eigen::MatrixXd> vectors;  // columns; identity when empty
  Eigen::MatrixXd zero_coeffs;     // analyzed N^k(i_phi), one column each

  static ModalBasis flat(int lmax);
  static ModalBasis from_tangent(const TangentField& X, int lmax);

  Eigen::VectorXd to_modal(const SpectralField& c) const;
  SpectralField from_modal(const Eigen::VectorXd& x) const;
  // Coefficients of a zero-mode field in the N^k basis (Gram solve).
  Vec3 zero_mode_coefficients(const SpectralField& c) const;
};

struct LinearEvolution {
  GridPtr grid;
  std::vector<double> t;
  std::vector<SpectralField> phi, dphi;
  // phi(infinity); empty when b = 0.
  std::optional<SpectralField> limit;

  GridField phi_at(std::size_t i) const { return synthesize(phi[i], grid); }
};

LinearEvolution evolve_linear(const ModalBasis& basis, const GridPtr& grid, double b,
                              const SpectralField& phi0, const SpectralField& dphi0,
                              const SpectralTrajectory& gamma, const std::vector<double>& times);
LinearEvolution evolve_linear(const TangentField& X, double b, const GridField& phi0,
                              const GridField& dphi0, const ScalarTrajectory& gamma,
                              const std::vector<double>& times);

// --- tangential part -----------------------------------------------------------

struct TangentialEvolution {
  std::vector<double> t;
  std::vector<VectorField> psi, dpsi;
  std::optional<VectorField> limit;  // empty when b = 0
};

TangentialEvolution evolve_tangential(double b, const VectorField& psi0, const VectorField& dpsi0,
                                      const VectorTrajectory& f_top, const std::vector<double>& times);

// --- splitting -----------------------------------------------------------------

struct TripleSplit {
  TangentField Y;
  Vec3 c;
  std::vector<double> t;
  std::vector<VectorField> v, dv;
  double beta_used;
  // Solution eta(t) = Sigma_phi Y + c + v(t).
  VectorField eta_at(const TangentField& X, std::size_t i) const;
};

// Throws DomainError for b <= 0 and ForcingNotDecaying when a nonzero forcing
// has not decayed by its last sample and fits a rate below beta(b).
TripleSplit triple_split(const TangentField& X, double b, const VectorField& eta0,
                         const VectorField& deta0, const VectorTrajectory& f,
                         const std::vector<double>& times);

}  // namespace membrane
