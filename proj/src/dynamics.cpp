#include "membrane/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace membrane {

namespace {

constexpr double kPi = std::numbers::pi;

Vec3 node_position(const SphGrid& g, std::size_t k) {
  const auto p = g.position(k);
  return {p[0], p[1], p[2]};
}

bool finite(const VectorField& v) {
  for (const auto& c : v.comp)
    for (double x : c.values)
      if (!std::isfinite(x)) return false;
  return true;
}

}  // namespace

VectorField band_limit(const VectorField& v, int lmax, const FilterSpec& filter) {
  VectorField out(v.grid());
  for (int c = 0; c < 3; ++c) {
    SpectralField a = analyze(v.comp[c], lmax);
    if (filter.j) {
      a = smooth(a, *filter.j);
    } else if (filter.dealias) {
      const int keep = 2 * lmax / 3;
      a = smooth_theta(a, keep * (keep + 1.0));
    }
    out.comp[c] = synthesize(a, v.grid());
  }
  return out;
}

double default_dt(int lmax) { return 0.5 / std::sqrt(lmax * (lmax + 1.0)); }

State step(const State& s, double dt, double b, double kappa, const FilterSpec& filter) {
  const int lmax = s.w.lmax;
  int stage = 0;
  auto accel = [&](const VectorField& w, const VectorField& v) {
    ++stage;
    VectorField f;
    try {
      f = rhs_force(Embedding{w, lmax}, kappa);
    } catch (const DegenerateEmbedding& e) {
      throw DegenerateEmbedding("RK4 stage " + std::to_string(stage) + " at t = " + std::to_string(s.t) +
                                    ": " + e.what(),
                                e.node());
    }
    if (b != 0.0) f -= b * v;
    return band_limit(f, lmax, filter);
  };

  const VectorField& w0 = s.w.w;
  const VectorField& v0 = s.wdot;
  const VectorField a1 = accel(w0, v0);
  const VectorField w2 = w0 + (0.5 * dt) * v0, v2 = v0 + (0.5 * dt) * a1;
  const VectorField a2 = accel(w2, v2);
  const VectorField w3 = w0 + (0.5 * dt) * v2, v3 = v0 + (0.5 * dt) * a2;
  const VectorField a3 = accel(w3, v3);
  const VectorField w4 = w0 + dt * v3, v4 = v0 + dt * a3;
  const VectorField a4 = accel(w4, v4);

  State out;
  out.w.lmax = lmax;
  out.w.w = w0 + (dt / 6.0) * (v0 + 2.0 * v2 + 2.0 * v3 + v4);
  out.wdot = v0 + (dt / 6.0) * (a1 + 2.0 * a2 + 2.0 * a3 + a4);
  out.w.w = band_limit(out.w.w, lmax, filter);
  out.wdot = band_limit(out.wdot, lmax, filter);
  out.t = s.t + dt;
  return out;
}

double energy(const State& s, const GeometryCache& geom, double kappa, double vol0) {
  const SphGrid& g = *s.wdot.grid();
  double kinetic = 0.0;
  for (std::size_t k = 0; k < g.size(); ++k) kinetic += g.weight(k) * s.wdot.at(k).squaredNorm();
  return 0.5 * kinetic + geom.area - kappa * std::log(geom.volume / vol0);
}

double energy(const State& s, double kappa, double vol0) {
  return energy(s, geometry_of(s.w), kappa, vol0);
}

// --- sphere fit --------------------------------------------------------------

SphereFit sphere_fit(const VectorField& w, const Vec3& center0, double radius0) {
  const SphGrid& g = *w.grid();
  Vec3 a = center0;
  double r = radius0;
  double grad_norm = 0.0;
  for (int it = 1; it <= 50; ++it) {
    Eigen::Matrix4d jtj = Eigen::Matrix4d::Zero();
    Eigen::Vector4d jtr = Eigen::Vector4d::Zero();
    for (std::size_t k = 0; k < g.size(); ++k) {
      const Vec3 d = w.at(k) - a;
      const double dist = d.norm();
      Eigen::Vector4d j;
      j << -d / dist, -1.0;
      const double wt = g.weight(k);
      jtj += wt * j * j.transpose();
      jtr += wt * (dist - r) * j;
    }
    grad_norm = jtr.norm();
    if (grad_norm <= 1e-12) {
      double ss = 0.0, ws = 0.0;
      for (std::size_t k = 0; k < g.size(); ++k) {
        const double res = (w.at(k) - a).norm() - r;
        ss += g.weight(k) * res * res;
        ws += g.weight(k);
      }
      return {a, r, std::sqrt(ss / ws), it};
    }
    const Eigen::Vector4d delta = jtj.ldlt().solve(-jtr);
    a += delta.head<3>();
    r += delta[3];
  }
  throw NoConvergence("sphere fit did not converge in 50 iterations", grad_norm);
}

SphereFit sphere_fit(const Embedding& w) {
  const SphGrid& g = *w.w.grid();
  Vec3 c = Vec3::Zero();
  double mass = 0.0;
  try {
    const GeometryCache geom = geometry_of(w);
    for (std::size_t k = 0; k < g.size(); ++k) {
      const double m = g.weight(k) * geom.area_ratio[k];
      c += m * w.w.at(k);
      mass += m;
    }
    return sphere_fit(w.w, c / mass, std::sqrt(geom.area / (4.0 * kPi)));
  } catch (const DegenerateEmbedding&) {
    for (std::size_t k = 0; k < g.size(); ++k) {
      c += g.weight(k) * w.w.at(k);
      mass += g.weight(k);
    }
    c /= mass;
    double r = 0.0;
    for (std::size_t k = 0; k < g.size(); ++k) r += g.weight(k) * (w.w.at(k) - c).norm();
    return sphere_fit(w.w, c, r / mass);
  }
}

// --- initial data ------------------------------------------------------------

VectorField mode_field(const GridPtr& grid, const ModeSpec& mode) {
  if (mode.l < 0 || std::abs(mode.m) > mode.l) throw ValidationError("invalid mode (l, m)");
  SpectralField c(mode.l);
  c(mode.l, mode.m) = mode.amplitude;
  const FieldJet jet = synthesize_jet(c, grid);
  const SphGrid& g = *grid;
  VectorField out(grid);
  for (int i = 0; i < g.nlat(); ++i)
    for (int j = 0; j < g.nlon(); ++j) {
      const std::size_t k = g.node(i, j);
      if (mode.channel == Channel::normal) {
        out.set(k, jet.f[k] * node_position(g, k));
      } else {
        const double ct = g.cos_theta(i), st = g.sin_theta(i);
        const double cp = std::cos(g.longitudes()[j]), sp = std::sin(g.longitudes()[j]);
        const Vec3 e_theta(ct * cp, ct * sp, -st), e_phi(-sp, cp, 0.0);
        out.set(k, jet.dt[k] * e_theta + (jet.dp[k] / st) * e_phi);
      }
    }
  return out;
}

SpectralField random_coefficients(int lmin, int lmax, double epsilon, std::uint64_t seed, bool symmetric_x) {
  SpectralField c(std::max(lmax, 0));
  if (lmax < lmin) return c;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  double ss = 0.0;
  for (int l = std::max(0, lmin); l <= lmax; ++l)
    for (int m = -l; m <= l; ++m) {
      const double v = normal(rng);
      const bool even = m >= 0 ? (m % 2 == 0) : (m % 2 != 0);
      if (symmetric_x && !even) continue;
      c(l, m) = v;
      ss += v * v;
    }
  if (ss > 0.0) c *= epsilon * std::sqrt(4.0 * kPi / ss);
  return c;
}

State make_initial_state(const GridPtr& grid, const InitialData& data) {
  const int lmax = grid->band_limit();
  if (!(data.radius > 0.0)) throw ValidationError("initial radius must be positive");
  State s;
  const VectorField x = position_field(grid);
  s.w = {data.radius * x + constant_field(grid, data.center), lmax};
  s.wdot = data.radial_velocity * x;
  for (const ModeSpec& m : data.modes) {
    if (m.l > lmax) throw ValidationError("mode degree " + std::to_string(m.l) + " exceeds lmax");
    const VectorField f = mode_field(grid, m);
    if (m.velocity)
      s.wdot += f;
    else
      s.w.w += f;
  }
  if (data.random_lmax >= data.random_lmin && data.epsilon != 0.0) {
    if (data.random_lmax > lmax) throw ValidationError("random perturbation degree exceeds lmax");
    const SpectralField c =
        random_coefficients(data.random_lmin, data.random_lmax, data.epsilon, data.seed, data.symmetric_x);
    s.w.w += synthesize(c, grid) * x;
  }
  return s;
}

// --- runs --------------------------------------------------------------------

std::string to_string(Termination t) {
  switch (t) {
    case Termination::time_reached: return "time-reached";
    case Termination::degenerate: return "degenerate";
    case Termination::norm_threshold: return "norm-threshold";
  }
  return "unknown";
}

void RunConfig::validate() const {
  if (lmax < 2 || lmax > 128) throw ValidationError("lmax must lie in [2, 128]");
  if (!(dt >= 0.0) || !std::isfinite(dt)) throw ValidationError("dt must be positive (or 0 for the default)");
  if (!(T > 0.0) || !std::isfinite(T)) throw ValidationError("T must be positive");
  if (!(b >= 0.0) || !std::isfinite(b)) throw ValidationError("b must be nonnegative");
  if (!(kappa > 0.0)) throw ValidationError("kappa must be positive");
  if (!(sample_dt >= 0.0)) throw ValidationError("sample_dt must be nonnegative");
  if (norm_indices.empty()) throw ValidationError("at least one norm index is required");
  for (double n : norm_indices)
    if (!(n >= 0.0)) throw ValidationError("norm indices must be nonnegative");
  if (!(norm_threshold >= 0.0)) throw ValidationError("norm_threshold must be nonnegative");
  if (filter.j && *filter.j < 0) throw ValidationError("filter index must be nonnegative");
  if (!(initial.radius > 0.0)) throw ValidationError("initial radius must be positive");
  if (!(initial.epsilon >= 0.0)) throw ValidationError("epsilon must be nonnegative");
}

SampleRow diagnose(const State& s, const RunConfig& cfg) {
  const GridPtr& grid = s.wdot.grid();
  const int lmax = s.w.lmax;
  const GeometryCache geom = geometry_of(s.w);
  SampleRow row;
  row.t = s.t;
  row.energy = energy(s, geom, cfg.kappa, 4.0 * kPi / 3.0);
  row.area = geom.area;
  row.volume = geom.volume;
  row.fit = sphere_fit(s.w);
  const VectorField dev = s.w.w - position_field(grid);
  for (double n : cfg.norm_indices) row.norms.push_back(sobolev_norm(dev, lmax, n));
  GridField radial(grid);
  for (std::size_t k = 0; k < grid->size(); ++k)
    radial[k] = (s.w.w.at(k) - row.fit.center).norm() - row.fit.radius;
  const double n0 = cfg.norm_indices.front();
  row.shape_norm = sobolev_norm(analyze(radial, lmax), n0);
  const double vel = sobolev_norm(s.wdot, lmax, std::max(0.0, n0 - 1.0));
  row.energy_norm = std::sqrt(vel * vel + row.norms.front() * row.norms.front());
  return row;
}

SolveReport simulate(const RunConfig& cfg, const Observers& obs, const State* resume) {
  cfg.validate();
  const GridPtr grid = SphGrid::for_band(cfg.lmax);
  State s;
  if (resume) {
    const SphGrid& rg = *resume->wdot.grid();
    if (rg.nlat() != grid->nlat() || rg.nlon() != grid->nlon() || resume->w.lmax != cfg.lmax)
      throw ValidationError("resume state does not match the configured grid");
    s = *resume;
  } else {
    s = make_initial_state(grid, cfg.initial);
    s.w.w = band_limit(s.w.w, cfg.lmax, cfg.filter);
    s.wdot = band_limit(s.wdot, cfg.lmax, cfg.filter);
  }
  const double dt = cfg.dt > 0.0 ? cfg.dt : default_dt(cfg.lmax);

  SolveReport rep;
  auto sample = [&](const State& st) {
    rep.rows.push_back(diagnose(st, cfg));
    if (obs.on_sample) obs.on_sample(rep.rows.back());
  };
  auto over_threshold = [&](const State& st) {
    if (cfg.norm_threshold <= 0.0) return false;
    const VectorField dev = st.w.w - position_field(grid);
    return sobolev_norm(dev, cfg.lmax, cfg.norm_indices.front()) > cfg.norm_threshold;
  };

  try {
    sample(s);
    double next_sample = s.t + cfg.sample_dt;
    while (s.t < cfg.T - 1e-9 * dt) {
      const double h = std::min(dt, cfg.T - s.t);
      State n = step(s, h, cfg.b, cfg.kappa, cfg.filter);
      if (std::abs(n.t - cfg.T) < 1e-9 * dt) n.t = cfg.T;
      if (!finite(n.w.w) || !finite(n.wdot)) {
        rep.reason = Termination::degenerate;
        rep.message = "non-finite state at t = " + std::to_string(n.t);
        break;
      }
      s = std::move(n);
      ++rep.steps;
      if (obs.on_step) obs.on_step(s, rep.steps);
      const bool last = s.t >= cfg.T;
      if (cfg.sample_dt <= 0.0 || s.t >= next_sample - 1e-9 * dt || last) {
        sample(s);
        while (next_sample <= s.t + 1e-9 * dt) next_sample += cfg.sample_dt > 0.0 ? cfg.sample_dt : dt;
      }
      if (over_threshold(s)) {
        rep.reason = Termination::norm_threshold;
        rep.message = "norm threshold exceeded at t = " + std::to_string(s.t);
        if (!(cfg.sample_dt <= 0.0 || rep.rows.back().t == s.t)) sample(s);
        break;
      }
    }
  } catch (const DegenerateEmbedding& e) {
    rep.reason = Termination::degenerate;
    rep.message = e.what();
  } catch (const NoConvergence& e) {
    rep.reason = Termination::degenerate;
    rep.message = e.what();
  }
  rep.final_state = std::move(s);
  return rep;
}

// --- breather ----------------------------------------------------------------

double breather_energy(double r, double rdot) { return 0.5 * rdot * rdot + r * r - 2.0 * std::log(r); }

BreatherTrace breather_ode(double r0, double rdot0, double dt, double T) {
  if (!(r0 > 0.0)) throw DomainError("breather radius must be positive");
  if (!(dt > 0.0) || !(T >= 0.0)) throw ValidationError("breather needs dt > 0 and T >= 0");
  auto acc = [](double r) { return -2.0 * r + 2.0 / r; };
  BreatherTrace tr;
  double t = 0.0, r = r0, v = rdot0;
  auto push = [&] {
    tr.t.push_back(t);
    tr.r.push_back(r);
    tr.rdot.push_back(v);
    tr.ode_energy.push_back(breather_energy(r, v));
  };
  push();
  const long n = static_cast<long>(std::ceil(T / dt - 1e-9));
  for (long i = 0; i < n; ++i) {
    const double h = std::min(dt, T - t);
    const double k1r = v, k1v = acc(r);
    const double r2 = r + 0.5 * h * k1r, k2r = v + 0.5 * h * k1v;
    if (!(r2 > 0.0)) throw BlowDownError("breather radius reached zero");
    const double k2v = acc(r2);
    const double r3 = r + 0.5 * h * k2r, k3r = v + 0.5 * h * k2v;
    if (!(r3 > 0.0)) throw BlowDownError("breather radius reached zero");
    const double k3v = acc(r3);
    const double r4 = r + h * k3r, k4r = v + h * k3v;
    if (!(r4 > 0.0)) throw BlowDownError("breather radius reached zero");
    const double k4v = acc(r4);
    r += h / 6.0 * (k1r + 2.0 * k2r + 2.0 * k3r + k4r);
    v += h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
    t = (i + 1 == n) ? T : t + h;
    if (!(r > 0.0)) throw BlowDownError("breather radius reached zero");
    push();
  }

  // Upward crossings of r = 1, located on the cubic Hermite interpolant.
  std::vector<double> up;
  for (std::size_t i = 0; i + 1 < tr.t.size(); ++i) {
    const double f0 = tr.r[i] - 1.0, f1 = tr.r[i + 1] - 1.0;
    if (!(f0 < 0.0 && f1 >= 0.0)) continue;
    const double h = tr.t[i + 1] - tr.t[i];
    auto herm = [&](double s) {
      const double s2 = s * s, s3 = s2 * s;
      return (2 * s3 - 3 * s2 + 1) * f0 + (s3 - 2 * s2 + s) * h * tr.rdot[i] + (-2 * s3 + 3 * s2) * f1 +
             (s3 - s2) * h * tr.rdot[i + 1];
    };
    double lo = 0.0, hi = 1.0;
    for (int it = 0; it < 60; ++it) {
      const double mid = 0.5 * (lo + hi);
      (herm(mid) < 0.0 ? lo : hi) = mid;
    }
    up.push_back(tr.t[i] + 0.5 * (lo + hi) * h);
  }
  if (up.size() >= 2) {
    tr.period = (up.back() - up.front()) / static_cast<double>(up.size() - 1);
    tr.period_measured = true;
  } else {
    tr.period = kPi;
    tr.period_measured = false;
  }
  return tr;
}

// --- lifespan ----------------------------------------------------------------

LifespanTable lifespan_scan(const std::vector<double>& epsilons, const RunConfig& base, double threshold) {
  LifespanTable table;
  std::vector<double> x, y;
  for (double eps : epsilons) {
    RunConfig cfg = base;
    cfg.initial.epsilon = eps;
    cfg.norm_threshold = threshold;
    cfg.sample_dt = cfg.T;
    LifespanRow row{eps, 0.0, Termination::time_reached, false};
    try {
      const SolveReport rep = simulate(cfg);
      row.lifespan = rep.final_state.t;
      row.reason = rep.reason;
    } catch (const DegenerateEmbedding&) {
      row.reason = Termination::degenerate;
    }
    row.global = row.reason == Termination::time_reached;
    if (!row.global && row.lifespan > 0.0 && eps > 0.0) {
      x.push_back(std::log(eps));
      y.push_back(std::log(row.lifespan));
    }
    table.rows.push_back(row);
  }
  if (x.size() >= 2) {
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      mx += x[i];
      my += y[i];
    }
    mx /= x.size();
    my /= y.size();
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      sxx += (x[i] - mx) * (x[i] - mx);
      sxy += (x[i] - mx) * (y[i] - my);
    }
    if (sxx > 0.0) table.slope = sxy / sxx;
  }
  return table;
}

}  // namespace membrane
