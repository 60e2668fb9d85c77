#pragma once

// Nonlinear evolution w_tt + b w_t = A (-H + kappa/Vol) N on a spectral grid,
// with energy and shape diagnostics and the radial (breather) reduction.

#include <cstdint>
#include <functional>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "membrane/fit.hpp"
#include "membrane/geometry.hpp"

namespace membrane {

struct State {
  Embedding w;
  VectorField wdot;
  double t = 0.0;
};

// Spectral truncation applied to the acceleration at every stage.
struct FilterSpec {
  // Dyadic cutoff S_j; takes precedence over dealias when set.
  std::optional<int> j;
  // Keep degrees l <= floor(2 lmax / 3).
  bool dealias = true;
};

// Keeps the state (or any field) in the band selected by the filter.
VectorField band_limit(const VectorField& v, int lmax, const FilterSpec& filter);

// One classical RK4 step. A degenerate stage is reported as
// DegenerateEmbedding naming the stage and the time.
State step(const State& s, double dt, double b, double kappa = kDefaultKappa,
           const FilterSpec& filter = {});

double default_dt(int lmax);

// 1/2 int |w_t|^2 dmu0 + Area - kappa log(Vol / vol0)
double energy(const State& s, double kappa = kDefaultKappa,
              double vol0 = 4.0 * std::numbers::pi / 3.0);
double energy(const State& s, const GeometryCache& geom, double kappa, double vol0);

struct SphereFit {
  Vec3 center;
  double radius;
  double rms;
  int iterations;
};
// Gauss-Newton fit of |w - a| = r weighted by the reference measure, started
// from the area-weighted centroid and r = sqrt(Area / 4 pi). Throws
// NoConvergence after 50 iterations with the last gradient norm.
SphereFit sphere_fit(const Embedding& w);
SphereFit sphere_fit(const VectorField& w, const Vec3& center0, double radius0);

// --- initial data --------------------------------------------------------------

enum class Channel { normal, tangent };

struct ModeSpec {
  int l = 0, m = 0;
  double amplitude = 0.0;
  Channel channel = Channel::normal;
  bool velocity = false;  // perturb w_t instead of w
};

struct InitialData {
  double radius = 1.0;
  double radial_velocity = 0.0;
  Vec3 center = Vec3::Zero();
  std::vector<ModeSpec> modes;
  // Seeded random normal perturbation on degrees [random_lmin, random_lmax]
  // with root-mean-square amplitude epsilon; off when random_lmax < random_lmin.
  int random_lmin = 2;
  int random_lmax = 0;
  double epsilon = 0.0;
  std::uint64_t seed = 1;
  // Symmetrize the random perturbation under x -> -x.
  bool symmetric_x = false;
};

// Seeded N(0,1) coefficients on degrees [lmin, lmax] scaled so that the
// field has root-mean-square value epsilon over the sphere.
SpectralField random_coefficients(int lmin, int lmax, double epsilon, std::uint64_t seed, bool symmetric_x);

// Y_lm (normal) or grad Y_lm (tangent) on the unit sphere, as a vector field.
VectorField mode_field(const GridPtr& grid, const ModeSpec& mode);
State make_initial_state(const GridPtr& grid, const InitialData& data);

// --- runs ----------------------------------------------------------------------

enum class Termination { time_reached, degenerate, norm_threshold };
std::string to_string(Termination t);

struct RunConfig {
  int lmax = 16;
  double dt = 0.0;  // 0: default_dt(lmax)
  double T = 10.0;
  double b = 0.0;
  double kappa = kDefaultKappa;
  InitialData initial;
  FilterSpec filter;
  double sample_dt = 0.0;  // 0: every step
  std::vector<double> norm_indices{4.0};
  // Stop when ||w - i0||_{norm_indices[0]} exceeds this (0: never).
  double norm_threshold = 0.0;
  void validate() const;
};

struct SampleRow {
  double t;
  double energy, area, volume;
  SphereFit fit;
  std::vector<double> norms;  // ||w - i0||_n for each configured n
  double shape_norm;          // ||(|w - a| - r)||_{n0} about the fitted sphere
  double energy_norm;         // sqrt(||w_t||_{n0-1}^2 + ||w - i0||_{n0}^2)
};

struct SolveReport {
  std::vector<SampleRow> rows;
  Termination reason = Termination::time_reached;
  std::string message;
  State final_state;
  long steps = 0;
};

struct Observers {
  std::function<void(const SampleRow&)> on_sample;
  std::function<void(const State&, long step)> on_step;
};

SampleRow diagnose(const State& s, const RunConfig& cfg);

// Runs from the configured initial data, or from resume when given.
SolveReport simulate(const RunConfig& cfg, const Observers& obs = {}, const State* resume = nullptr);

// --- radial reduction ----------------------------------------------------------

struct BreatherTrace {
  std::vector<double> t, r, rdot, ode_energy;
  double period;
  bool period_measured;  // false: small-oscillation value pi
};

// RK4 for r'' = -2 r + 2 / r.
BreatherTrace breather_ode(double r0, double rdot0, double dt, double T);
double breather_energy(double r, double rdot);

// --- lifespan ------------------------------------------------------------------

struct LifespanRow {
  double epsilon;
  double lifespan;
  Termination reason;
  bool global;
};

struct LifespanTable {
  std::vector<LifespanRow> rows;
  std::optional<double> slope;  // d log T / d log eps over finite lifespans
};

LifespanTable lifespan_scan(const std::vector<double>& epsilons, const RunConfig& base, double threshold);

}  // namespace membrane
