#include "membrane/linsolve.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <string>

#include "membrane/fit.hpp"
#include "membrane/linop.hpp"

namespace membrane {

namespace {

double sinc(double x) {
  if (std::abs(x) < 1e-4) {
    const double x2 = x * x;
    return 1.0 - x2 / 6.0 + x2 * x2 / 120.0;
  }
  return std::sin(x) / x;
}

// Gauss-Legendre rule on [0, 1].
struct PanelRule {
  std::vector<double> x, w;
  PanelRule() {
    std::vector<double> n, wt;
    gauss_legendre(8, n, wt);
    for (std::size_t i = 0; i < n.size(); ++i) {
      x.push_back(0.5 * (n[i] + 1.0));
      w.push_back(0.5 * wt[i]);
    }
  }
};

const PanelRule& panel_rule() {
  static const PanelRule rule;
  return rule;
}

// Cubic Lagrange interpolation of the forcing samples, zero outside them.
class ForcingInterpolant {
 public:
  ForcingInterpolant(const ModalForcing& f, Eigen::Index dim) : f_(f), dim_(dim) {}

  bool active(double a, double b) const {
    return !f_.t.empty() && b > f_.t.front() && a < f_.t.back();
  }

  Eigen::VectorXd operator()(double s) const {
    const auto& t = f_.t;
    const std::size_t n = t.size();
    if (n == 0 || s < t.front() || s > t.back()) return Eigen::VectorXd::Zero(dim_);
    if (n == 1) return f_.g[0];
    const std::size_t i =
        std::min<std::size_t>(n - 2, std::upper_bound(t.begin(), t.end(), s) - t.begin() - 1);
    const std::size_t npts = std::min<std::size_t>(n, 4);
    std::size_t j0 = i > 0 ? i - 1 : 0;
    j0 = std::min(j0, n - npts);
    Eigen::VectorXd out = Eigen::VectorXd::Zero(dim_);
    for (std::size_t a = j0; a < j0 + npts; ++a) {
      double w = 1.0;
      for (std::size_t c = j0; c < j0 + npts; ++c)
        if (c != a) w *= (s - t[c]) / (t[a] - t[c]);
      out += w * f_.g[a];
    }
    return out;
  }

 private:
  const ModalForcing& f_;
  Eigen::Index dim_;
};

Eigen::VectorXd to_vec(const SpectralField& c) {
  return Eigen::Map<const Eigen::VectorXd>(c.coeffs.data(), static_cast<Eigen::Index>(c.size()));
}

SpectralField from_vec(const Eigen::VectorXd& v, int lmax) {
  SpectralField c(lmax);
  Eigen::Map<Eigen::VectorXd>(c.coeffs.data(), v.size()) = v;
  return c;
}

Eigen::VectorXd flatten(const VectorField& v) {
  const auto n = static_cast<Eigen::Index>(v.size());
  Eigen::VectorXd out(3 * n);
  for (int c = 0; c < 3; ++c)
    out.segment(c * n, n) = Eigen::Map<const Eigen::VectorXd>(v.comp[c].values.data(), n);
  return out;
}

VectorField unflatten(const Eigen::VectorXd& x, const GridPtr& grid) {
  VectorField out(grid);
  const auto n = static_cast<Eigen::Index>(grid->size());
  for (int c = 0; c < 3; ++c)
    Eigen::Map<Eigen::VectorXd>(out.comp[c].values.data(), n) = x.segment(c * n, n);
  return out;
}

void require_times(const std::vector<double>& times) {
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (!(times[i] >= 0.0)) throw ValidationError("output times must be nonnegative");
    if (i > 0 && times[i] < times[i - 1]) throw ValidationError("output times must be nondecreasing");
  }
}

}  // namespace

double beta(double b) {
  if (!(b > 0.0)) throw DomainError("beta requires b > 0, got " + std::to_string(b));
  return b >= 2.0 ? (b - std::sqrt(b * b - 4.0)) / 3.0 : b / 3.0;
}

ModeRoots mode_roots(double b, double lambda) {
  const double disc = b * b - 4.0 * lambda;
  ModeRoots r{lambda, b, {}, {}};
  if (disc >= 0.0) {
    const double sq = std::sqrt(disc);
    const double minus = -0.5 * (b + sq);
    r.omega_minus = minus;
    r.omega_plus = minus != 0.0 ? lambda / minus : 0.0;
  } else {
    const double im = 0.5 * std::sqrt(-disc);
    r.omega_plus = {-0.5 * b, im};
    r.omega_minus = {-0.5 * b, -im};
  }
  return r;
}

ModeKernel mode_kernel(double b, double lambda, double tau) {
  const double disc = b * b - 4.0 * lambda;
  if (disc > 0.0) {
    const double s = 0.5 * std::sqrt(disc);
    const double up = s - 0.5 * b, down = -(s + 0.5 * b);
    const double eu = std::exp(up * tau), ed = std::exp(down * tau);
    const double k = 2.0 * s * tau < 50.0 ? ed * std::expm1(2.0 * s * tau) / (2.0 * s) : (eu - ed) / (2.0 * s);
    return {k, 0.5 * (eu + ed) - 0.5 * b * k};
  }
  const double e = std::exp(-0.5 * b * tau);
  if (disc < 0.0) {
    const double q = 0.5 * std::sqrt(-disc);
    const double k = e * tau * sinc(q * tau);
    return {k, e * std::cos(q * tau) - 0.5 * b * k};
  }
  return {tau * e, e * (1.0 - 0.5 * b * tau)};
}

ModalTrajectory propagate_modes(const Eigen::VectorXd& lambda, double b, const Eigen::VectorXd& x0,
                                const Eigen::VectorXd& dx0, const ModalForcing& forcing,
                                const std::vector<double>& times) {
  const Eigen::Index m = lambda.size();
  if (x0.size() != m || dx0.size() != m) throw ValidationError("propagate_modes: state size mismatch");
  if (b < 0.0) throw DomainError("damping must be nonnegative");
  require_times(times);
  for (std::size_t i = 0; i < forcing.t.size(); ++i) {
    if (forcing.g[i].size() != m) throw ValidationError("propagate_modes: forcing size mismatch");
    if (i > 0 && !(forcing.t[i] > forcing.t[i - 1]))
      throw ValidationError("forcing sample times must be strictly increasing");
  }

  // Modes sharing an eigenvalue share their kernels.
  std::map<double, int> index;
  std::vector<int> group(m);
  for (Eigen::Index i = 0; i < m; ++i) group[i] = index.emplace(lambda[i], static_cast<int>(index.size())).first->second;
  std::vector<double> lam(index.size());
  double rate = b;
  for (const auto& [l, g] : index) {
    lam[g] = l;
    rate = std::max(rate, std::sqrt(std::abs(l)));
  }
  const std::size_t ng = lam.size();

  double t_final = times.empty() ? 0.0 : times.back();
  if (!forcing.t.empty()) t_final = std::max(t_final, forcing.t.back());
  std::vector<double> breaks{0.0};
  breaks.insert(breaks.end(), times.begin(), times.end());
  for (double s : forcing.t)
    if (s > 0.0 && s <= t_final) breaks.push_back(s);
  std::sort(breaks.begin(), breaks.end());
  breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());

  ForcingInterpolant interp(forcing, m);
  const PanelRule& rule = panel_rule();
  std::vector<ModeKernel> kern(ng);

  Eigen::VectorXd x = x0, dx = dx0;
  ModalTrajectory out;
  std::size_t next = 0;
  auto record = [&](double t) {
    while (next < times.size() && times[next] == t) {
      out.x.push_back(x);
      out.dx.push_back(dx);
      ++next;
    }
  };
  record(0.0);
  for (std::size_t s = 1; s < breaks.size(); ++s) {
    const double ta = breaks[s - 1], tb = breaks[s], h = tb - ta;
    for (std::size_t g = 0; g < ng; ++g) kern[g] = mode_kernel(b, lam[g], h);
    Eigen::VectorXd nx(m), ndx(m);
    for (Eigen::Index i = 0; i < m; ++i) {
      const ModeKernel& kk = kern[group[i]];
      nx[i] = (kk.dk + b * kk.k) * x[i] + kk.k * dx[i];
      ndx[i] = -lam[group[i]] * kk.k * x[i] + kk.dk * dx[i];
    }
    if (interp.active(ta, tb)) {
      const int nsub = std::max(1, static_cast<int>(std::ceil(h * rate)));
      const double hs = h / nsub;
      for (int p = 0; p < nsub; ++p)
        for (std::size_t q = 0; q < rule.x.size(); ++q) {
          const double sigma = (p + rule.x[q]) * hs;
          const Eigen::VectorXd gv = interp(ta + sigma);
          for (std::size_t g = 0; g < ng; ++g) kern[g] = mode_kernel(b, lam[g], h - sigma);
          const double w = rule.w[q] * hs;
          for (Eigen::Index i = 0; i < m; ++i) {
            nx[i] += w * kern[group[i]].k * gv[i];
            ndx[i] += w * kern[group[i]].dk * gv[i];
          }
        }
    }
    x.swap(nx);
    dx.swap(ndx);
    record(tb);
  }
  out.t_end = breaks.back();
  out.x_end = x;
  out.dx_end = dx;
  return out;
}

// --- modal basis -------------------------------------------------------------

ModalBasis ModalBasis::flat(int lmax) {
  ModalBasis mb;
  mb.lmax = lmax;
  const auto n = static_cast<Eigen::Index>(SpectralField::count(lmax));
  mb.lambda.resize(n);
  mb.zero.assign(n, 0);
  for (int l = 0; l <= lmax; ++l)
    for (int m = -l; m <= l; ++m) {
      const auto i = static_cast<Eigen::Index>(SpectralField::index(l, m));
      mb.lambda[i] = -L_id_multiplier(l);
      mb.zero[i] = l == 1;
    }
  mb.zero_coeffs = Eigen::MatrixXd::Zero(n, 3);
  if (lmax >= 1) {
    const double s = std::sqrt(4.0 * std::numbers::pi / 3.0);
    mb.zero_coeffs(SpectralField::index(1, 1), 0) = s;
    mb.zero_coeffs(SpectralField::index(1, -1), 1) = s;
    mb.zero_coeffs(SpectralField::index(1, 0), 2) = s;
  }
  return mb;
}

ModalBasis ModalBasis::from_tangent(const TangentField& X, int lmax) {
  if (X.is_zero()) return flat(lmax);
  const GeometryCache geom = geometry_of(exp_map(X));
  const Eigen::MatrixXd mat = dense_matrix(L_phi_operator(geom, lmax));
  const Eigen::MatrixXd sym = 0.5 * (mat + mat.transpose());
  const ZeroModeProjection p0(X);
  const auto n = sym.rows();

  ModalBasis mb;
  mb.lmax = lmax;
  mb.zero_coeffs.resize(n, 3);
  for (int k = 0; k < 3; ++k) mb.zero_coeffs.col(k) = to_vec(analyze(p0.basis()[k], lmax));
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(mb.zero_coeffs);
  const Eigen::MatrixXd full = qr.householderQ() * Eigen::MatrixXd::Identity(n, n);
  const Eigen::MatrixXd comp = full.rightCols(n - 3);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(comp.transpose() * sym * comp);

  Eigen::MatrixXd v(n, n);
  v.leftCols(3) = full.leftCols(3);
  v.rightCols(n - 3) = comp * es.eigenvectors();
  mb.vectors = std::move(v);
  mb.lambda.resize(n);
  mb.lambda.head(3).setZero();
  mb.lambda.tail(n - 3) = -es.eigenvalues();
  mb.zero.assign(n, 0);
  mb.zero[0] = mb.zero[1] = mb.zero[2] = 1;
  return mb;
}

Eigen::VectorXd ModalBasis::to_modal(const SpectralField& c) const {
  const Eigen::VectorXd v = to_vec(resize(c, lmax));
  return vectors ? Eigen::VectorXd(vectors->transpose() * v) : v;
}

SpectralField ModalBasis::from_modal(const Eigen::VectorXd& x) const {
  return from_vec(vectors ? Eigen::VectorXd(*vectors * x) : x, lmax);
}

Vec3 ModalBasis::zero_mode_coefficients(const SpectralField& c) const {
  const Eigen::Matrix3d gram = zero_coeffs.transpose() * zero_coeffs;
  return gram.ldlt().solve(zero_coeffs.transpose() * to_vec(resize(c, lmax)));
}

// --- evolutions --------------------------------------------------------------

LinearEvolution evolve_linear(const ModalBasis& basis, const GridPtr& grid, double b,
                              const SpectralField& phi0, const SpectralField& dphi0,
                              const SpectralTrajectory& gamma, const std::vector<double>& times) {
  ModalForcing forcing;
  forcing.t = gamma.t;
  for (const auto& g : gamma.values) forcing.g.push_back(basis.to_modal(g));
  const ModalTrajectory tr =
      propagate_modes(basis.lambda, b, basis.to_modal(phi0), basis.to_modal(dphi0), forcing, times);

  LinearEvolution out;
  out.grid = grid;
  out.t = times;
  for (std::size_t i = 0; i < times.size(); ++i) {
    out.phi.push_back(basis.from_modal(tr.x[i]));
    out.dphi.push_back(basis.from_modal(tr.dx[i]));
  }
  if (b > 0.0) {
    Eigen::VectorXd lim = Eigen::VectorXd::Zero(basis.lambda.size());
    for (Eigen::Index i = 0; i < lim.size(); ++i)
      if (basis.zero[i]) lim[i] = tr.x_end[i] + tr.dx_end[i] / b;
    out.limit = basis.from_modal(lim);
  }
  return out;
}

LinearEvolution evolve_linear(const TangentField& X, double b, const GridField& phi0,
                              const GridField& dphi0, const ScalarTrajectory& gamma,
                              const std::vector<double>& times) {
  const GridPtr& grid = phi0.grid;
  const int lmax = grid->band_limit();
  const ModalBasis basis = ModalBasis::from_tangent(X, lmax);
  SpectralTrajectory g;
  g.t = gamma.t;
  for (const auto& v : gamma.values) g.values.push_back(analyze(v, lmax));
  return evolve_linear(basis, grid, b, analyze(phi0, lmax), analyze(dphi0, lmax), g, times);
}

TangentialEvolution evolve_tangential(double b, const VectorField& psi0, const VectorField& dpsi0,
                                      const VectorTrajectory& f_top, const std::vector<double>& times) {
  const GridPtr& grid = psi0.grid();
  ModalForcing forcing;
  forcing.t = f_top.t;
  for (const auto& f : f_top.values) forcing.g.push_back(flatten(f));
  const Eigen::VectorXd x0 = flatten(psi0);
  const ModalTrajectory tr =
      propagate_modes(Eigen::VectorXd::Zero(x0.size()), b, x0, flatten(dpsi0), forcing, times);

  TangentialEvolution out;
  out.t = times;
  for (std::size_t i = 0; i < times.size(); ++i) {
    out.psi.push_back(unflatten(tr.x[i], grid));
    out.dpsi.push_back(unflatten(tr.dx[i], grid));
  }
  if (b > 0.0) out.limit = unflatten(tr.x_end + tr.dx_end / b, grid);
  return out;
}

// --- splitting ---------------------------------------------------------------

VectorField TripleSplit::eta_at(const TangentField& X, std::size_t i) const {
  VectorField out = sigma_apply(X, Y);
  out += constant_field(out.grid(), c);
  out += v[i];
  return out;
}

TripleSplit triple_split(const TangentField& X, double b, const VectorField& eta0,
                         const VectorField& deta0, const VectorTrajectory& f,
                         const std::vector<double>& times) {
  const double rate = beta(b);
  const GridPtr& grid = eta0.grid();
  const int lmax = grid->band_limit();
  const std::size_t n = grid->size();

  if (!f.empty()) {
    std::vector<double> norms;
    for (const auto& v : f.values) norms.push_back(l2_norm(v));
    const double peak = *std::max_element(norms.begin(), norms.end());
    if (peak > 0.0 && norms.back() > 1e-12 * peak) {
      DecayFit fit{};
      try {
        fit = decay_fit(f.t, norms);
      } catch (const Error& e) {
        throw ForcingNotDecaying(std::string("cannot verify forcing decay: ") + e.what());
      }
      if (fit.rate < rate - 0.01)
        throw ForcingNotDecaying("forcing decays at fitted rate " + std::to_string(fit.rate) +
                                 ", below beta = " + std::to_string(rate));
    }
  }

  const VectorField normal = exp_map(X).w;
  auto split = [&](const VectorField& v, GridField& perp, VectorField& top) {
    perp = dot(v, normal);
    top = v - perp * normal;
  };

  GridField phi0, dphi0;
  VectorField psi0, dpsi0;
  split(eta0, phi0, psi0);
  split(deta0, dphi0, dpsi0);
  SpectralTrajectory f_perp;
  VectorTrajectory f_top;
  f_perp.t = f_top.t = f.t;
  for (const auto& v : f.values) {
    GridField p;
    VectorField t;
    split(v, p, t);
    f_perp.values.push_back(analyze(p, lmax));
    f_top.values.push_back(std::move(t));
  }

  const ModalBasis basis = ModalBasis::from_tangent(X, lmax);
  const LinearEvolution lin =
      evolve_linear(basis, grid, b, analyze(phi0, lmax), analyze(dphi0, lmax), f_perp, times);
  const TangentialEvolution tan = evolve_tangential(b, psi0, dpsi0, f_top, times);

  TripleSplit out;
  out.beta_used = rate;
  out.t = times;
  out.c = basis.zero_mode_coefficients(*lin.limit);
  VectorField target = *tan.limit;
  for (std::size_t k = 0; k < n; ++k) {
    const Vec3 nk = normal.at(k);
    target.set(k, target.at(k) - (out.c - out.c.dot(nk) * nk));
  }
  out.Y = sigma_inverse(X, target);
  VectorField anchor = sigma_apply(X, out.Y);
  anchor += constant_field(grid, out.c);
  for (std::size_t i = 0; i < times.size(); ++i) {
    VectorField v = synthesize(lin.phi[i], grid) * normal;
    v += tan.psi[i];
    v -= anchor;
    out.v.push_back(std::move(v));
    VectorField dv = synthesize(lin.dphi[i], grid) * normal;
    dv += tan.dpsi[i];
    out.dv.push_back(std::move(dv));
  }
  return out;
}

}  // namespace membrane
