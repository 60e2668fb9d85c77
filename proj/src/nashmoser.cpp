#include "membrane/nashmoser.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <random>

#include "membrane/dynamics.hpp"

namespace membrane {

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

// Per-degree energies sum_m c_lm^2.
std::vector<double> degree_energies(const SpectralField& c) {
  std::vector<double> e(c.lmax + 1, 0.0);
  for (int l = 0; l <= c.lmax; ++l)
    for (int m = -l; m <= l; ++m) e[l] += c(l, m) * c(l, m);
  return e;
}

double lam(int l) { return l * (l + 1.0); }

// ||.||_n^2 over degrees with lo < l(l+1) <= hi.
double band_norm2(const std::vector<double>& e, double n, double lo, double hi) {
  double s = 0.0;
  for (std::size_t l = 0; l < e.size(); ++l) {
    const double x = lam(static_cast<int>(l));
    if (x > lo && x <= hi) s += std::pow(1.0 + x, n) * e[l];
  }
  return s;
}

VectorField smooth_vector(const VectorField& v, int lmax, int j) {
  VectorField out(v.grid());
  for (int c = 0; c < 3; ++c) out.comp[c] = synthesize(smooth(analyze(v.comp[c], lmax), j), v.grid());
  return out;
}

double max_norm(const VectorTrajectory& tr, int lmax, double n) {
  double m = 0.0;
  for (const auto& v : tr.values) m = std::max(m, sobolev_norm(v, lmax, n));
  return m;
}

}  // namespace

// --- exponents ---------------------------------------------------------------

std::vector<std::string> validate_exponents(const ScaleSpec& s) {
  std::vector<std::string> bad;
  if (!(s.a0 <= s.mu)) bad.push_back("a0 <= mu violated (" + fmt(s.a0) + " > " + fmt(s.mu) + ")");
  if (!(s.mu <= s.a1)) bad.push_back("mu <= a1 violated (" + fmt(s.mu) + " > " + fmt(s.a1) + ")");
  if (!(s.a1 + s.lambda / 2 < s.rho))
    bad.push_back("a1 + lambda/2 < rho violated (" + fmt(s.a1 + s.lambda / 2) + " >= " + fmt(s.rho) + ")");
  if (!(s.rho < s.a2 + s.lambda))
    bad.push_back("rho < a2 + lambda violated (" + fmt(s.rho) + " >= " + fmt(s.a2 + s.lambda) + ")");
  if (!(2 * s.rho < s.a1 + s.a2))
    bad.push_back("2 rho < a1 + a2 violated (" + fmt(2 * s.rho) + " >= " + fmt(s.a1 + s.a2) + ")");
  return bad;
}

// --- smoothing axioms --------------------------------------------------------

SmoothingReport measure_smoothing_constants(const std::vector<SpectralField>& fields,
                                            const std::vector<std::pair<double, double>>& exponent_pairs) {
  if (fields.empty()) throw InsufficientData("no sample fields");
  SmoothingReport rep;
  rep.lmax = fields.front().lmax;
  rep.samples = static_cast<int>(fields.size());
  int jmax = 1;
  while (std::ldexp(1.0, jmax) < lam(rep.lmax)) ++jmax;
  rep.j_max = jmax;
  constexpr int j0 = 1;

  std::vector<std::vector<double>> energies;
  for (const auto& f : fields) energies.push_back(degree_energies(f));

  for (const auto& [a, b] : exponent_pairs) {
    if (!(a < b)) throw ValidationError("exponent pairs need a < b");
    AxiomConstants k{a, b, 0.0, 0.0, 0.0, std::numeric_limits<double>::infinity(), 0.0};
    for (const auto& e : energies) {
      const double ua = std::sqrt(band_norm2(e, a, -1.0, INFINITY));
      const double ub = std::sqrt(band_norm2(e, b, -1.0, INFINITY));
      if (ua == 0.0) continue;
      for (int j = 1; j <= jmax; ++j) {
        const double cut = std::ldexp(1.0, j);
        const double scale = std::pow(1.0 + cut, (b - a) / 2);
        k.bounded = std::max(k.bounded, std::sqrt(band_norm2(e, a, -1.0, cut)) / ua);
        k.gain = std::max(k.gain, std::sqrt(band_norm2(e, b, -1.0, cut)) / (scale * ua));
        k.loss = std::max(k.loss, std::sqrt(band_norm2(e, a, cut, INFINITY)) * scale / ub);
      }
      double blocks = std::pow(1.0 + std::ldexp(1.0, j0), a) * band_norm2(e, 0.0, -1.0, std::ldexp(1.0, j0));
      for (int j = j0; j < jmax; ++j)
        blocks += std::pow(1.0 + std::ldexp(1.0, j + 1), a) *
                  band_norm2(e, 0.0, std::ldexp(1.0, j), std::ldexp(1.0, j + 1));
      const double ratio = blocks / (ua * ua);
      k.block_lower = std::min(k.block_lower, ratio);
      k.block_upper = std::max(k.block_upper, ratio);
    }
    rep.pairs.push_back(k);
  }

  for (const auto& e : energies) {
    double sum = 0.0;
    for (int j = j0; j < jmax; ++j) sum += band_norm2(e, 0.0, std::ldexp(1.0, j), std::ldexp(1.0, j + 1));
    const double rhs = band_norm2(e, 0.0, -1.0, INFINITY) - band_norm2(e, 0.0, -1.0, std::ldexp(1.0, j0));
    rep.telescoping_error = std::max(rep.telescoping_error, std::abs(sum - rhs));
  }
  return rep;
}

SmoothingReport check_smoothing_axioms(int samples, int lmax,
                                       const std::vector<std::pair<double, double>>& exponent_pairs,
                                       std::uint64_t seed, double decay) {
  if (lmax < 8) throw ValidationError("smoothing axioms need lmax >= 8");
  if (samples < 1) throw ValidationError("samples must be positive");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::vector<SpectralField> fields;
  for (int s = 0; s < samples; ++s) {
    SpectralField c(lmax);
    for (int l = 0; l <= lmax; ++l) {
      const double w = std::pow(1.0 + lam(l), -decay / 2);
      for (int m = -l; m <= l; ++m) c(l, m) = w * normal(rng);
    }
    fields.push_back(std::move(c));
  }
  return measure_smoothing_constants(fields, exponent_pairs);
}

// --- residual ----------------------------------------------------------------

VectorTrajectory residual(const VectorTrajectory& w, double b, double kappa) {
  const std::size_t n = w.size();
  if (n < 3) throw InsufficientData("residual needs at least three samples, got " + std::to_string(n));
  const double h = (w.t.back() - w.t.front()) / static_cast<double>(n - 1);
  if (!(h > 0.0)) throw ValidationError("residual: sample times must increase");
  for (std::size_t k = 1; k < n; ++k)
    if (std::abs(w.t[k] - w.t[k - 1] - h) > 1e-9 * h) throw ValidationError("residual: samples must be uniform");

  const int lmax = w.values.front().grid()->band_limit();
  const double h2 = h * h;
  VectorTrajectory out;
  out.t = w.t;
  out.values.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    const auto& W = w.values;
    VectorField d2, d1;
    if (n == 3) {
      d2 = (1.0 / h2) * (W[0] - 2.0 * W[1] + W[2]);
      if (k == 0)
        d1 = (0.5 / h) * (-3.0 * W[0] + 4.0 * W[1] - W[2]);
      else if (k == 2)
        d1 = (0.5 / h) * (3.0 * W[2] - 4.0 * W[1] + W[0]);
      else
        d1 = (0.5 / h) * (W[2] - W[0]);
    } else if (k == 0) {
      d2 = (1.0 / h2) * (2.0 * W[0] - 5.0 * W[1] + 4.0 * W[2] - W[3]);
      d1 = (0.5 / h) * (-3.0 * W[0] + 4.0 * W[1] - W[2]);
    } else if (k == n - 1) {
      d2 = (1.0 / h2) * (2.0 * W[k] - 5.0 * W[k - 1] + 4.0 * W[k - 2] - W[k - 3]);
      d1 = (0.5 / h) * (3.0 * W[k] - 4.0 * W[k - 1] + W[k - 2]);
    } else {
      d2 = (1.0 / h2) * (W[k + 1] - 2.0 * W[k] + W[k - 1]);
      d1 = (0.5 / h) * (W[k + 1] - W[k - 1]);
    }
    VectorField r = d2;
    if (b != 0.0) r += b * d1;
    r -= rhs_force(Embedding{W[k], lmax}, kappa);
    out.values[k] = std::move(r);
  }
  return out;
}

// --- iteration ---------------------------------------------------------------

void IterationOptions::validate() const {
  if (!(b >= 0.0)) throw ValidationError("b must be nonnegative");
  if (!(kappa > 0.0)) throw ValidationError("kappa must be positive");
  if (!(T > 0.0)) throw ValidationError("T must be positive");
  if (!(sample_dt > 0.0) || sample_dt > T) throw ValidationError("sample_dt must lie in (0, T]");
  if (max_iterations < 0) throw ValidationError("max_iterations must be nonnegative");
  if (!(tol > 0.0)) throw ValidationError("tol must be positive");
  if (residual_indices.empty()) throw ValidationError("at least one residual index is required");
  if (!(smallness > 0.0)) throw ValidationError("smallness must be positive");
  for (std::size_t i = 0; i < schedule.size(); ++i) {
    if (schedule[i] < 0) throw ValidationError("smoothing indices must be nonnegative");
    if (i > 0 && schedule[i] < schedule[i - 1]) throw ValidationError("smoothing schedule must be nondecreasing");
  }
}

std::string to_string(IterationStatus s) {
  switch (s) {
    case IterationStatus::converged: return "converged";
    case IterationStatus::exhausted: return "exhausted";
    case IterationStatus::diverged: return "diverged";
  }
  return "unknown";
}

VectorTrajectory flat_right_inverse(const VectorTrajectory& f, double b, const VectorField& eta0,
                                    const VectorField& deta0) {
  const GridPtr& grid = eta0.grid();
  const int lmax = grid->band_limit();
  const VectorField x = position_field(grid);
  auto split = [&](const VectorField& v, GridField& nrm, VectorField& tan) {
    nrm = dot(v, x);
    tan = v - nrm * x;
  };

  GridField p0, dp0;
  VectorField q0, dq0;
  split(eta0, p0, q0);
  split(deta0, dp0, dq0);
  SpectralTrajectory gamma;
  VectorTrajectory ftan;
  gamma.t = ftan.t = f.t;
  for (const auto& v : f.values) {
    GridField g;
    VectorField tan;
    split(v, g, tan);
    gamma.values.push_back(analyze(g, lmax));
    ftan.values.push_back(std::move(tan));
  }
  const LinearEvolution lin = evolve_linear(ModalBasis::flat(lmax), grid, b, analyze(p0, lmax),
                                            analyze(dp0, lmax), gamma, f.t);
  const TangentialEvolution tan = evolve_tangential(b, q0, dq0, ftan, f.t);
  VectorTrajectory out;
  out.t = f.t;
  for (std::size_t k = 0; k < f.size(); ++k) out.values.push_back(lin.phi_at(k) * x + tan.psi[k]);
  return out;
}

IterationResult solve_by_iteration(const VectorField& u0, const VectorField& u1, const IterationOptions& opt) {
  opt.validate();
  const GridPtr& grid = u0.grid();
  const int lmax = grid->band_limit();
  const double data = sobolev_norm(u0 - position_field(grid), lmax, 2.0) + sobolev_norm(u1, lmax, 2.0);
  if (data > opt.smallness)
    throw ValidationError("Cauchy data norm " + fmt(data) + " exceeds the smallness threshold " + fmt(opt.smallness));

  const ResidualModel model =
      opt.model ? opt.model : [&](const VectorTrajectory& w) { return residual(w, opt.b, opt.kappa); };

  const long n = std::max(2L, std::lround(opt.T / opt.sample_dt));
  const double h = opt.T / static_cast<double>(n);
  IterationResult res;
  res.trace.indices = opt.residual_indices;
  for (long k = 0; k <= n; ++k) {
    const double t = k == n ? opt.T : k * h;
    res.w.t.push_back(t);
    res.w.values.push_back(u0 + t * u1);
  }

  auto norms_of = [&](const VectorTrajectory& r) {
    std::vector<double> v;
    for (double idx : opt.residual_indices) v.push_back(max_norm(r, lmax, idx));
    return v;
  };

  VectorTrajectory r = model(res.w);
  std::vector<double> norms = norms_of(r);
  res.initial_residual = res.final_residual = norms.front();
  res.trace.rows.push_back({0, norms, -1, 0.0, true});
  if (norms.front() <= opt.tol) {
    res.status = IterationStatus::converged;
    return res;
  }

  const VectorField zero(grid);
  int increases = 0;
  for (int k = 0; k < opt.max_iterations; ++k) {
    const int j = k < static_cast<int>(opt.schedule.size()) ? opt.schedule[k]
                  : opt.schedule.empty()                      ? k + 3
                                                              : opt.schedule.back();
    for (auto& v : r.values) v *= -1.0;
    VectorTrajectory eta = flat_right_inverse(r, opt.b, zero, zero);
    double corr = 0.0;
    for (std::size_t i = 0; i < eta.size(); ++i) {
      const VectorField s = smooth_vector(eta.values[i], lmax, j);
      corr = std::max(corr, sobolev_norm(s, lmax, opt.residual_indices.front()));
      res.w.values[i] += s;
    }
    r = model(res.w);
    const double prev = norms.front();
    norms = norms_of(r);
    const bool better = norms.front() < prev;
    res.trace.rows.push_back({k + 1, norms, j, corr, better});
    res.iterations = k + 1;
    res.final_residual = norms.front();
    increases = better ? 0 : increases + 1;
    if (!std::isfinite(norms.front()) || increases >= 3) {
      res.status = IterationStatus::diverged;
      if (opt.throw_on_divergence)
        throw DivergenceError("residual grew for three consecutive iterates (last " + fmt(norms.front()) + ")");
      return res;
    }
    if (norms.front() <= opt.tol) {
      res.status = IterationStatus::converged;
      return res;
    }
  }
  res.status = IterationStatus::exhausted;
  return res;
}

}  // namespace membrane
