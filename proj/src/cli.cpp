#include "membrane/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <functional>
#include <sstream>

#include "membrane/linop.hpp"
#include "membrane/nashmoser.hpp"

namespace membrane {

namespace {

namespace fs = std::filesystem;

struct Context {
  fs::path out;
  RunManifest& manifest;
  std::ostream& log;
  int exit_code = kExitOk;

  fs::path output(const std::string& name) {
    const fs::path p = out / name;
    manifest.outputs.push_back(p);
    return p;
  }
};

using Job = std::function<void(Context&)>;

std::string grid_label(const GridPtr& g) {
  return std::to_string(g->nlat()) + "x" + std::to_string(g->nlon()) + ", lmax " + std::to_string(g->band_limit());
}

void require(bool ok, const std::string& msg) {
  if (!ok) throw ValidationError(msg);
}

int checked_lmax(long v, const std::string& key) {
  require(v >= 2 && v <= 128, key + " must lie in [2, 128]");
  return static_cast<int>(v);
}

Vec3 read_vec3(const Config& c, const std::string& key, const Vec3& fallback) {
  const auto v = c.get_doubles(key, {fallback.x(), fallback.y(), fallback.z()});
  require(v.size() == 3, key + " needs three components");
  return {v[0], v[1], v[2]};
}

TangentField read_gauge(const Config& c, const std::string& prefix, const GridPtr& grid) {
  const Vec3 axis = read_vec3(c, prefix + ".gauge_axis", Vec3::UnitZ());
  const double angle = c.get_double(prefix + ".gauge_angle", 0.0);
  require(std::isfinite(angle), prefix + ".gauge_angle must be finite");
  if (angle == 0.0) return TangentField::zero(grid);
  require(axis.norm() > 0.0, prefix + ".gauge_axis must be nonzero");
  return TangentField::killing(grid, axis.normalized(), angle);
}

std::vector<double> sample_times(double T, double dt) {
  require(T > 0.0 && std::isfinite(T), "T must be positive");
  require(dt > 0.0 && dt <= T, "sample_dt must lie in (0, T]");
  const long n = std::lround(T / dt);
  std::vector<double> t;
  for (long k = 0; k <= n; ++k) t.push_back(k == n ? T : k * (T / n));
  return t;
}

// Normal-channel data from [initial]: (phi, dphi) coefficients.
std::pair<SpectralField, SpectralField> scalar_data(const InitialData& d, int lmax) {
  SpectralField phi(lmax), dphi(lmax);
  for (const auto& m : d.modes) {
    require(m.channel == Channel::normal, "this command takes normal-channel modes only");
    require(m.l <= lmax, "mode degree exceeds lmax");
    (m.velocity ? dphi : phi)(m.l, m.m) += m.amplitude;
  }
  if (d.random_lmax >= d.random_lmin && d.epsilon != 0.0) {
    require(d.random_lmax <= lmax, "random perturbation degree exceeds lmax");
    phi += resize(random_coefficients(d.random_lmin, d.random_lmax, d.epsilon, d.seed, d.symmetric_x), lmax);
  }
  return {phi, dphi};
}

// Perturbation (eta, deta) from [initial] on the unit sphere.
std::pair<VectorField, VectorField> vector_data(const InitialData& d, const GridPtr& grid) {
  const int lmax = grid->band_limit();
  VectorField eta(grid), deta(grid);
  for (const auto& m : d.modes) {
    require(m.l <= lmax, "mode degree exceeds lmax");
    (m.velocity ? deta : eta) += mode_field(grid, m);
  }
  if (d.random_lmax >= d.random_lmin && d.epsilon != 0.0) {
    require(d.random_lmax <= lmax, "random perturbation degree exceeds lmax");
    const auto c = random_coefficients(d.random_lmin, d.random_lmax, d.epsilon, d.seed, d.symmetric_x);
    eta += synthesize(c, grid) * position_field(grid);
  }
  return {eta, deta};
}

// --- commands ------------------------------------------------------------------

Job prepare_simulate(const RunRequest& req, RunManifest& man) {
  const Config& c = req.config;
  RunConfig cfg = run_config_from(c);
  if (req.seed) cfg.initial.seed = *req.seed;
  const long every = c.get_int("run.checkpoint_every", 0);
  require(every >= 0, "run.checkpoint_every must be nonnegative");
  cfg.validate();
  man.grid = grid_label(SphGrid::for_band(cfg.lmax));
  const auto resume = req.resume;

  return [cfg, every, resume](Context& ctx) {
    std::optional<State> start;
    if (resume) start = read_checkpoint(*resume);
    const fs::path ckdir = ctx.out / "checkpoints";
    fs::create_directories(ckdir);
    CsvWriter csv(ctx.output("report.csv"), sample_header(cfg));
    Observers obs;
    obs.on_sample = [&](const SampleRow& r) { csv.row(sample_values(r)); };
    obs.on_step = [&](const State& s, long step) {
      if (every > 0 && step % every == 0) {
        char name[40];
        std::snprintf(name, sizeof name, "step_%08ld.memb", step);
        const fs::path p = ckdir / name;
        write_checkpoint(s, p);
      }
    };
    const SolveReport rep = simulate(cfg, obs, start ? &*start : nullptr);
    write_checkpoint(rep.final_state, ctx.output("checkpoints/final.memb"));
    std::vector<fs::path> steps;
    for (const auto& e : fs::directory_iterator(ckdir))
      if (e.path().filename() != "final.memb") steps.push_back(e.path());
    std::sort(steps.begin(), steps.end());
    ctx.manifest.outputs.insert(ctx.manifest.outputs.end(), steps.begin(), steps.end());

    ctx.manifest.termination = to_string(rep.reason);
    ctx.manifest.summary["steps"] = static_cast<double>(rep.steps);
    ctx.manifest.summary["t_final"] = rep.final_state.t;
    if (!rep.rows.empty()) {
      const double e0 = rep.rows.front().energy, e1 = rep.rows.back().energy;
      ctx.manifest.summary["energy_relative_change"] = (e1 - e0) / std::abs(e0);
    }
    if (!rep.message.empty()) ctx.manifest.error = rep.message;
    ctx.log << "simulate: " << rep.steps << " steps, t = " << rep.final_state.t << ", " << to_string(rep.reason)
            << "\n";
    if (rep.reason == Termination::degenerate) ctx.exit_code = kExitNumerical;
  };
}

Job prepare_linear(const RunRequest& req, RunManifest& man) {
  const Config& c = req.config;
  const int lmax = checked_lmax(c.get_int("linear.lmax", 16), "linear.lmax");
  const double b = c.get_double("linear.b", 1.0);
  require(b >= 0.0, "linear.b must be nonnegative");
  const auto times = sample_times(c.get_double("linear.T", 20.0), c.get_double("linear.sample_dt", 0.1));
  const double n = c.get_double("linear.norm_index", 2.0);
  require(n >= 0.0, "linear.norm_index must be nonnegative");
  InitialData d = initial_from(c);
  if (req.seed) d.seed = *req.seed;
  const GridPtr grid = SphGrid::for_band(lmax);
  const TangentField X = read_gauge(c, "linear", grid);
  const auto [phi0, dphi0] = scalar_data(d, lmax);
  man.grid = grid_label(grid);

  return [=](Context& ctx) {
    const ModalBasis basis = X.is_zero() ? ModalBasis::flat(lmax) : ModalBasis::from_tangent(X, lmax);
    const LinearEvolution ev = evolve_linear(basis, grid, b, phi0, dphi0, {}, times);
    CsvWriter csv(ctx.output("report.csv"),
                  {"t", "phi_norm_0", "phi_norm_n", "dphi_norm_0", "zero_x", "zero_y", "zero_z"});
    for (std::size_t i = 0; i < ev.t.size(); ++i) {
      const Vec3 z = basis.zero_mode_coefficients(ev.phi[i]);
      csv.row({ev.t[i], sobolev_norm(ev.phi[i], 0.0), sobolev_norm(ev.phi[i], n), sobolev_norm(ev.dphi[i], 0.0),
               z.x(), z.y(), z.z()});
    }
    if (b > 0.0) {
      ctx.manifest.summary["beta"] = beta(b);
      const Vec3 z = basis.zero_mode_coefficients(*ev.limit);
      ctx.manifest.summary["limit_zero_x"] = z.x();
      ctx.manifest.summary["limit_zero_y"] = z.y();
      ctx.manifest.summary["limit_zero_z"] = z.z();
    }
    ctx.manifest.termination = "time-reached";
  };
}

Job prepare_split(const RunRequest& req, RunManifest& man) {
  const Config& c = req.config;
  const int lmax = checked_lmax(c.get_int("split.lmax", 16), "split.lmax");
  const double b = c.get_double("split.b", 1.0);
  require(b > 0.0, "split.b must be positive");
  const auto times = sample_times(c.get_double("split.T", 20.0), c.get_double("split.sample_dt", 0.1));
  InitialData d = initial_from(c);
  if (req.seed) d.seed = *req.seed;
  const GridPtr grid = SphGrid::for_band(lmax);
  const TangentField X = read_gauge(c, "split", grid);
  const auto [eta0, deta0] = vector_data(d, grid);
  man.grid = grid_label(grid);

  return [=](Context& ctx) {
    const TripleSplit s = triple_split(X, b, eta0, deta0, {}, times);
    CsvWriter csv(ctx.output("report.csv"), {"t", "v_norm_0", "dv_norm_0"});
    std::vector<double> vn;
    for (std::size_t i = 0; i < s.t.size(); ++i) {
      vn.push_back(sobolev_norm(s.v[i], lmax, 0.0));
      csv.row({s.t[i], vn.back(), sobolev_norm(s.dv[i], lmax, 0.0)});
    }
    auto& sum = ctx.manifest.summary;
    sum["beta"] = s.beta_used;
    sum["c_x"] = s.c.x();
    sum["c_y"] = s.c.y();
    sum["c_z"] = s.c.z();
    sum["Y_max_norm"] = s.Y.max_norm();
    try {
      sum["v_decay_rate"] = decay_fit(s.t, vn, {0.5, 1.0, true, 0.0}).rate;
    } catch (const Error&) {
    }
    ctx.manifest.termination = "time-reached";
  };
}

Job prepare_breather(const RunRequest& req, RunManifest& man) {
  const Config& c = req.config;
  const double r0 = c.get_double("breather.r0", 1.05);
  const double rdot0 = c.get_double("breather.rdot0", 0.0);
  const double dt = c.get_double("breather.dt", 1e-3);
  const double T = c.get_double("breather.T", 10.0);
  require(r0 > 0.0, "breather.r0 must be positive");
  require(dt > 0.0, "breather.dt must be positive");
  require(T > 0.0, "breather.T must be positive");
  man.grid = "none";

  return [=](Context& ctx) {
    const BreatherTrace tr = breather_ode(r0, rdot0, dt, T);
    CsvWriter csv(ctx.output("report.csv"), {"t", "r", "rdot", "ode_energy"});
    for (std::size_t i = 0; i < tr.t.size(); ++i) csv.row({tr.t[i], tr.r[i], tr.rdot[i], tr.ode_energy[i]});
    double drift = 0.0;
    for (double e : tr.ode_energy) drift = std::max(drift, std::abs(e - tr.ode_energy.front()));
    ctx.manifest.summary["period"] = tr.period;
    ctx.manifest.summary["period_measured"] = tr.period_measured ? 1.0 : 0.0;
    ctx.manifest.summary["ode_energy_drift"] = drift;
    ctx.manifest.termination = "time-reached";
  };
}

Job prepare_spectrum(const RunRequest& req, RunManifest& man) {
  const Config& c = req.config;
  const int lmax = checked_lmax(c.get_int("spectrum.lmax", 16), "spectrum.lmax");
  const std::string op = c.get_string("spectrum.operator", "L_id");
  require(op == "L_id" || op == "neg_laplacian" || op == "L_phi",
          "spectrum.operator must be one of L_id, neg_laplacian, L_phi");
  const GridPtr grid = SphGrid::for_band(lmax);
  const TangentField X = read_gauge(c, "spectrum", grid);
  man.grid = grid_label(grid);

  return [=](Context& ctx) {
    CoefficientOperator A = op == "L_id"            ? L_id_operator(lmax)
                            : op == "neg_laplacian" ? neg_laplacian_operator(lmax)
                                                    : L_phi_operator(geometry_of(exp_map(X)), lmax);
    const Spectrum s = dense_spectrum(A);
    std::ofstream out(ctx.output("report.csv"), std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write report.csv");
    write_spectrum_csv(out, s);
    ctx.manifest.summary["dimension"] = static_cast<double>(s.values.size());
    ctx.manifest.summary["largest"] = s.values[s.values.size() - 1];
    ctx.manifest.summary["max_residual"] = s.residuals.maxCoeff();
    ctx.manifest.termination = "complete";
  };
}

Job prepare_smoothing(const RunRequest& req, RunManifest& man) {
  const Config& c = req.config;
  const long samples = c.get_int("smoothing.samples", 200);
  const long lmax = c.get_int("smoothing.lmax", 16);
  require(samples >= 1, "smoothing.samples must be positive");
  require(lmax >= 8 && lmax <= 256, "smoothing.lmax must lie in [8, 256]");
  const auto flat = c.get_doubles("smoothing.pairs", {0.0, 2.0});
  require(!flat.empty() && flat.size() % 2 == 0, "smoothing.pairs needs a,b pairs");
  std::vector<std::pair<double, double>> pairs;
  for (std::size_t i = 0; i < flat.size(); i += 2) {
    require(flat[i] < flat[i + 1], "smoothing.pairs needs a < b in each pair");
    pairs.emplace_back(flat[i], flat[i + 1]);
  }
  std::uint64_t seed = static_cast<std::uint64_t>(c.get_int("smoothing.seed", 7));
  if (req.seed) seed = *req.seed;
  const double decay = c.get_double("smoothing.decay", 2.0);
  man.grid = "spectral, lmax " + std::to_string(lmax);

  return [=](Context& ctx) {
    const SmoothingReport r = check_smoothing_axioms(static_cast<int>(samples), static_cast<int>(lmax), pairs, seed, decay);
    CsvWriter csv(ctx.output("report.csv"), {"a", "b", "bounded", "gain", "loss", "block_lower", "block_upper"});
    for (const auto& k : r.pairs) csv.row({k.a, k.b, k.bounded, k.gain, k.loss, k.block_lower, k.block_upper});
    ctx.manifest.summary["telescoping_error"] = r.telescoping_error;
    ctx.manifest.summary["j_max"] = r.j_max;
    ctx.manifest.termination = "complete";
  };
}

Job prepare_nash_moser(const RunRequest& req, RunManifest& man) {
  const Config& c = req.config;
  const int lmax = checked_lmax(c.get_int("nash-moser.lmax", 8), "nash-moser.lmax");
  IterationOptions opt;
  opt.b = c.get_double("nash-moser.b", opt.b);
  opt.kappa = c.get_double("nash-moser.kappa", opt.kappa);
  opt.T = c.get_double("nash-moser.T", opt.T);
  opt.sample_dt = c.get_double("nash-moser.sample_dt", opt.sample_dt);
  opt.max_iterations = static_cast<int>(c.get_int("nash-moser.max_iterations", opt.max_iterations));
  opt.tol = c.get_double("nash-moser.tol", opt.tol);
  opt.smallness = c.get_double("nash-moser.smallness", opt.smallness);
  for (double j : c.get_doubles("nash-moser.schedule", {})) opt.schedule.push_back(static_cast<int>(j));
  opt.residual_indices = c.get_doubles("nash-moser.residual_indices", opt.residual_indices);
  opt.throw_on_divergence = false;
  opt.validate();
  InitialData d = initial_from(c);
  if (req.seed) d.seed = *req.seed;
  const GridPtr grid = SphGrid::for_band(lmax);
  const State s0 = make_initial_state(grid, d);
  man.grid = grid_label(grid);

  return [=](Context& ctx) {
    const IterationResult r = solve_by_iteration(s0.w.w, s0.wdot, opt);
    std::vector<std::string> head{"iterate"};
    for (double n : opt.residual_indices) head.push_back("residual_" + format_double(n));
    head.insert(head.end(), {"j", "correction_norm", "accepted"});
    CsvWriter csv(ctx.output("report.csv"), head);
    for (const auto& row : r.trace.rows) {
      std::vector<double> v{static_cast<double>(row.iterate)};
      v.insert(v.end(), row.residual_norms.begin(), row.residual_norms.end());
      v.insert(v.end(), {static_cast<double>(row.j), row.correction_norm, row.accepted ? 1.0 : 0.0});
      csv.row(v);
    }
    ctx.manifest.summary["iterations"] = r.iterations;
    ctx.manifest.summary["initial_residual"] = r.initial_residual;
    ctx.manifest.summary["final_residual"] = r.final_residual;
    if (r.final_residual > 0.0) ctx.manifest.summary["reduction"] = r.initial_residual / r.final_residual;
    ctx.manifest.termination = to_string(r.status);
    if (r.status == IterationStatus::diverged) {
      ctx.manifest.error = "residual grew for three consecutive iterates";
      ctx.exit_code = kExitNumerical;
    }
  };
}

Job prepare_lifespan(const RunRequest& req, RunManifest& man) {
  const Config& c = req.config;
  RunConfig cfg = run_config_from(c);
  if (req.seed) cfg.initial.seed = *req.seed;
  const auto eps = c.get_doubles("lifespan.epsilons", {1e-2, 3e-3, 1e-3});
  const double threshold = c.get_double("lifespan.threshold", 0.1);
  require(!eps.empty(), "lifespan.epsilons must not be empty");
  for (double e : eps) require(e > 0.0, "lifespan.epsilons must be positive");
  require(threshold > 0.0, "lifespan.threshold must be positive");
  cfg.initial.epsilon = eps.front();
  cfg.validate();
  if (cfg.initial.random_lmax < cfg.initial.random_lmin) cfg.initial.random_lmax = std::max(cfg.initial.random_lmin, 2 * cfg.lmax / 3);
  man.grid = grid_label(SphGrid::for_band(cfg.lmax));

  return [=](Context& ctx) {
    const LifespanTable t = lifespan_scan(eps, cfg, threshold);
    CsvWriter csv(ctx.output("report.csv"), {"epsilon", "lifespan", "reason", "global"});
    for (const auto& r : t.rows)
      csv.row_text({format_double(r.epsilon), format_double(r.lifespan), to_string(r.reason), r.global ? "1" : "0"});
    if (t.slope) ctx.manifest.summary["slope"] = *t.slope;
    ctx.manifest.termination = "complete";
  };
}

}  // namespace

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names{"simulate",         "linear",      "split",        "breather",
                                              "spectrum",         "smoothing-axioms", "nash-moser", "lifespan-scan"};
  return names;
}

InitialData initial_from(const Config& c) {
  InitialData d;
  d.radius = c.get_double("initial.radius", d.radius);
  d.radial_velocity = c.get_double("initial.radial_velocity", d.radial_velocity);
  d.center = read_vec3(c, "initial.center", d.center);
  d.modes = parse_modes(c.get_string("initial.modes", ""));
  d.random_lmin = static_cast<int>(c.get_int("initial.random_lmin", d.random_lmin));
  d.random_lmax = static_cast<int>(c.get_int("initial.random_lmax", d.random_lmax));
  d.epsilon = c.get_double("initial.epsilon", d.epsilon);
  d.seed = static_cast<std::uint64_t>(c.get_int("initial.seed", static_cast<long>(d.seed)));
  d.symmetric_x = c.get_bool("initial.symmetric_x", d.symmetric_x);
  require(d.radius > 0.0, "initial.radius must be positive");
  require(d.epsilon >= 0.0, "initial.epsilon must be nonnegative");
  require(d.random_lmin >= 0, "initial.random_lmin must be nonnegative");
  return d;
}

RunConfig run_config_from(const Config& c) {
  RunConfig r;
  r.lmax = checked_lmax(c.get_int("run.lmax", r.lmax), "run.lmax");
  r.dt = c.get_double("run.dt", r.dt);
  require(r.dt >= 0.0, "run.dt must be positive (or 0 for the default)");
  r.T = c.get_double("run.T", r.T);
  r.b = c.get_double("run.b", r.b);
  r.kappa = c.get_double("run.kappa", r.kappa);
  r.sample_dt = c.get_double("run.sample_dt", r.sample_dt);
  r.norm_indices = c.get_doubles("run.norm_indices", r.norm_indices);
  r.norm_threshold = c.get_double("run.norm_threshold", r.norm_threshold);
  const long j = c.get_int("filter.j", -1);
  if (j >= 0) r.filter.j = static_cast<int>(j);
  r.filter.dealias = c.get_bool("filter.dealias", r.filter.dealias);
  r.initial = initial_from(c);
  r.validate();
  return r;
}

int run(const RunRequest& req, std::ostream& log) {
  const auto start = std::chrono::steady_clock::now();
  RunManifest man;
  man.command = req.command;
  man.config = req.config.entries();
  if (req.seed) man.config["--seed"] = std::to_string(*req.seed);
  if (req.resume) man.config["--resume"] = req.resume->string();

  auto finish = [&](int code) {
    man.exit_code = code;
    man.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    try {
      fs::create_directories(req.out_dir);
      write_manifest(man, req.out_dir / "manifest.json");
    } catch (const std::exception& e) {
      log << "error: cannot write manifest: " << e.what() << "\n";
      return code == kExitOk ? kExitNumerical : code;
    }
    return code;
  };

  Job job;
  try {
    const std::string& cmd = req.command;
    if (cmd == "simulate")
      job = prepare_simulate(req, man);
    else if (cmd == "linear")
      job = prepare_linear(req, man);
    else if (cmd == "split")
      job = prepare_split(req, man);
    else if (cmd == "breather")
      job = prepare_breather(req, man);
    else if (cmd == "spectrum")
      job = prepare_spectrum(req, man);
    else if (cmd == "smoothing-axioms")
      job = prepare_smoothing(req, man);
    else if (cmd == "nash-moser")
      job = prepare_nash_moser(req, man);
    else if (cmd == "lifespan-scan")
      job = prepare_lifespan(req, man);
    else
      throw ValidationError("unknown command '" + cmd + "'");
    if (req.resume && cmd != "simulate") throw ValidationError("--resume applies to simulate only");
    req.config.reject_unused();
  } catch (const Error& e) {
    man.termination = "invalid";
    man.error = e.what();
    log << "error: " << e.what() << "\n";
    return finish(kExitValidation);
  }

  Context ctx{req.out_dir, man, log};
  try {
    fs::create_directories(req.out_dir);
    job(ctx);
  } catch (const ValidationError& e) {
    man.termination = "invalid";
    man.error = e.what();
    log << "error: " << e.what() << "\n";
    return finish(kExitValidation);
  } catch (const IoError& e) {
    man.termination = "io-error";
    man.error = e.what();
    log << "error: " << e.what() << "\n";
    return finish(kExitValidation);
  } catch (const VersionMismatch& e) {
    man.termination = "invalid";
    man.error = e.what();
    log << "error: " << e.what() << "\n";
    return finish(kExitValidation);
  } catch (const CorruptCheckpoint& e) {
    man.termination = "invalid";
    man.error = e.what();
    log << "error: " << e.what() << "\n";
    return finish(kExitValidation);
  } catch (const Error& e) {
    man.termination = "numerical-failure";
    man.error = e.what();
    log << "error: " << e.what() << "\n";
    return finish(kExitNumerical);
  }
  return finish(ctx.exit_code);
}

}  // namespace membrane
