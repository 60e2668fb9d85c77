#pragma once

// Graded-scale tools: smoothing-operator constants, exponent constraints, the
// sampled residual of the nonlinear problem and a smoothed Newton iteration
// that uses the flat linear solver as approximate right inverse.

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "membrane/linsolve.hpp"

namespace membrane {

// --- exponents -----------------------------------------------------------------

struct ScaleSpec {
  double a0 = 0, mu = 0, a1 = 0, lambda = 0, rho = 0, a2 = 0;
  std::optional<double> c;
};

// Empty when the tuple satisfies a0 <= mu <= a1, a1 + lambda/2 < rho < a2 + lambda
// and 2 rho < a1 + a2; otherwise one message per violated inequality.
std::vector<std::string> validate_exponents(const ScaleSpec& s);

// --- smoothing axioms ------------------------------------------------------------

struct AxiomConstants {
  double a, b;  // a < b
  // sup ||S_j u||_a / ||u||_a
  double bounded;
  // sup ||S_j u||_b / ((1 + 2^j)^{(b-a)/2} ||u||_a)
  double gain;
  // sup ||(1 - S_j) u||_a / ((1 + 2^j)^{-(b-a)/2} ||u||_b)
  double loss;
  // range of (sum_j (1 + 2^{j+1})^a ||R_j u||_0^2 + (1 + 2^{j0})^a ||S_{j0} u||_0^2) / ||u||_a^2
  double block_lower, block_upper;
};

struct SmoothingReport {
  int lmax = 0, samples = 0, j_max = 0;
  std::vector<AxiomConstants> pairs;
  // max |sum_j ||R_j u||_0^2 - (||u||_0^2 - ||S_{j0} u||_0^2)| over samples
  double telescoping_error = 0.0;
};

// Random coefficients N(0,1) (1 + l(l+1))^{-decay/2}; j runs over 1..j_max with
// 2^{j_max} >= lmax (lmax + 1).
SmoothingReport check_smoothing_axioms(int samples, int lmax,
                                       const std::vector<std::pair<double, double>>& exponent_pairs,
                                       std::uint64_t seed = 7, double decay = 2.0);
// Same constants for caller-supplied fields.
SmoothingReport measure_smoothing_constants(const std::vector<SpectralField>& fields,
                                            const std::vector<std::pair<double, double>>& exponent_pairs);

// --- residual --------------------------------------------------------------------

// w_tt + b w_t - rhs_force(w) at every sample. Time derivatives are centered
// at interior samples and second-order one-sided at the ends (first order
// with exactly three samples). Requires uniformly spaced samples.
VectorTrajectory residual(const VectorTrajectory& w, double b, double kappa = kDefaultKappa);

// --- iteration -------------------------------------------------------------------

struct IterationRecord {
  int iterate;
  std::vector<double> residual_norms;  // at IterationOptions::residual_indices
  int j;                               // smoothing index used for the correction (-1 before any)
  double correction_norm;              // max over samples of ||S_j eta||_{residual_indices[0]}
  bool accepted;                       // residual decreased
};

struct IterationTrace {
  std::vector<double> indices;
  std::vector<IterationRecord> rows;
};

using ResidualModel = std::function<VectorTrajectory(const VectorTrajectory&)>;

struct IterationOptions {
  double b = 1.0;
  double kappa = kDefaultKappa;
  double T = 5.0;
  double sample_dt = 0.005;
  int max_iterations = 12;
  // Smoothing indices per iterate; empty: j_k = k + 3.
  std::vector<int> schedule;
  double tol = 1e-10;
  std::vector<double> residual_indices{0.0, 1.0, 2.0};
  // ||u0 - i0||_2 + ||u1||_2 must not exceed this.
  double smallness = 0.1;
  // Defaults to residual(., b, kappa).
  ResidualModel model;
  bool throw_on_divergence = true;
  void validate() const;
};

enum class IterationStatus { converged, exhausted, diverged };
std::string to_string(IterationStatus s);

struct IterationResult {
  VectorTrajectory w;
  IterationTrace trace;
  IterationStatus status = IterationStatus::exhausted;
  int iterations = 0;
  double initial_residual = 0.0, final_residual = 0.0;
};

// Flat linear solve: eta'' + b eta' - L_id(phi) N = f with zero data, where
// eta = phi x + psi, psi tangent to the unit sphere.
VectorTrajectory flat_right_inverse(const VectorTrajectory& f, double b, const VectorField& eta0,
                                    const VectorField& deta0);

// Starts from w(t) = u0 + t u1 and iterates w <- w + S_{j_k} eta_k with eta_k
// the flat response to -residual(w). Throws DivergenceError after three
// consecutive residual increases unless throw_on_divergence is false.
IterationResult solve_by_iteration(const VectorField& u0, const VectorField& u1,
                                   const IterationOptions& opt);

}  // namespace membrane
