#include "membrane/linop.hpp"

#include <cmath>
#include <iomanip>
#include <numbers>
#include <ostream>
#include <random>

namespace membrane {

namespace {

constexpr double kPi = std::numbers::pi;

double surface_integral(const GeometryCache& geom, const GridField& f) {
  double s = 0.0;
  for (std::size_t k = 0; k < f.size(); ++k) s += geom.grid->weight(k) * geom.area_ratio[k] * f[k];
  return s;
}

Eigen::VectorXd to_vec(const SpectralField& c) {
  return Eigen::Map<const Eigen::VectorXd>(c.coeffs.data(), static_cast<Eigen::Index>(c.size()));
}

SpectralField from_vec(const Eigen::VectorXd& v, int lmax) {
  SpectralField c(lmax);
  Eigen::Map<Eigen::VectorXd>(c.coeffs.data(), v.size()) = v;
  return c;
}

}  // namespace

double L_id_multiplier(int l) { return l == 0 ? -4.0 : 2.0 - l * (l + 1.0); }

SpectralField apply_L_id(const SpectralField& phi) {
  SpectralField out = phi;
  for (int l = 0; l <= phi.lmax; ++l)
    for (int m = -l; m <= l; ++m) out(l, m) *= L_id_multiplier(l);
  return out;
}

GridField apply_L_phi(const GeometryCache& geom, const GridField& phi) {
  GridField out = surface_laplacian(geom, phi);
  const double mass = 6.0 / (4.0 * kPi) * surface_integral(geom, phi);
  for (std::size_t k = 0; k < out.size(); ++k)
    out[k] = geom.area_ratio[k] * (out[k] + 2.0 * phi[k] - mass);
  return out;
}

GridField apply_L_phi(const TangentField& X, const GridField& phi) {
  return apply_L_phi(geometry_of(exp_map(X)), phi);
}

GridField apply_L_pert(const GeometryCache& geom, const VectorField& w_t, const GridField& phi,
                       double kappa) {
  GridField out = surface_laplacian(geom, phi);
  const double pressure = kappa / geom.volume;
  const double mass = kappa / (geom.volume * geom.volume) * surface_integral(geom, phi);
  const VectorField dn = normal_variation(geom, w_t);
  for (std::size_t k = 0; k < out.size(); ++k) {
    const double h = geom.hmean[k];
    const double inner = out[k] + geom.h_norm2[k] * phi[k] + (pressure - h) * h * phi[k] - mass;
    out[k] = geom.area_ratio[k] * inner - dn.at(k).squaredNorm() * phi[k];
  }
  return out;
}

GridField apply_L_pert(const TangentField& X, const Vec3& a, const PerturbationSlice& u,
                       const GridField& phi, double kappa) {
  Embedding w = exp_map(X);
  w.w += constant_field(w.w.grid(), a);
  w.w += u.u;
  return apply_L_pert(geometry_of(w), u.u_t, phi, kappa);
}

// --- zero modes --------------------------------------------------------------

ZeroModeProjection::ZeroModeProjection(const TangentField& X) {
  const Embedding e = exp_map(X);
  for (int k = 0; k < 3; ++k) basis_[k] = e.w.comp[k];
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) gram_(i, j) = inner(basis_[i], basis_[j]);
  gram_inv_ = gram_.inverse();
}

ZeroModeProjection ZeroModeProjection::identity(const GridPtr& grid) {
  return ZeroModeProjection(TangentField::zero(grid));
}

Vec3 ZeroModeProjection::coefficients(const GridField& phi) const {
  const Vec3 moments(inner(phi, basis_[0]), inner(phi, basis_[1]), inner(phi, basis_[2]));
  return gram_inv_ * moments;
}

ZeroModeProjection::Result ZeroModeProjection::apply(const GridField& phi) const {
  const Vec3 c = coefficients(phi);
  GridField proj(phi.grid);
  for (int k = 0; k < 3; ++k) proj += c[k] * basis_[k];
  return {c, std::move(proj)};
}

Eigen::MatrixXd ZeroModeProjection::coefficient_basis(int lmax) const {
  Eigen::MatrixXd a(SpectralField::count(lmax), 3);
  for (int k = 0; k < 3; ++k) a.col(k) = to_vec(analyze(basis_[k], lmax));
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
  return qr.householderQ() * Eigen::MatrixXd::Identity(a.rows(), 3);
}

ZeroModeProjection::Result p0_project(const TangentField& X, const GridField& phi) {
  return ZeroModeProjection(X).apply(phi);
}

// --- operators on coefficients -----------------------------------------------

CoefficientOperator L_id_operator(int lmax) {
  return {lmax, [](const SpectralField& c) { return apply_L_id(c); }};
}

CoefficientOperator neg_laplacian_operator(int lmax) {
  return {lmax, [](const SpectralField& c) { return -1.0 * laplacian(c); }};
}

CoefficientOperator L_phi_operator(const GeometryCache& geom, int lmax) {
  geom.grid->require_band(lmax);
  return {lmax, [geom, lmax](const SpectralField& c) {
            return analyze(apply_L_phi(geom, synthesize(c, geom.grid)), lmax);
          }};
}

CoefficientOperator L_pert_operator(const GeometryCache& geom, const VectorField& w_t, int lmax,
                                    double kappa) {
  geom.grid->require_band(lmax);
  return {lmax, [geom, w_t, lmax, kappa](const SpectralField& c) {
            return analyze(apply_L_pert(geom, w_t, synthesize(c, geom.grid), kappa), lmax);
          }};
}

RayleighResult rayleigh_extremes(const CoefficientOperator& op, const ZeroModeProjection* deflate,
                                 const RayleighOptions& opt) {
  const auto n = static_cast<Eigen::Index>(op.dim());
  Eigen::MatrixXd defl(n, 0);
  if (deflate) defl = deflate->coefficient_basis(op.lmax);
  const Eigen::Index space = n - defl.cols();
  const int cap = opt.max_iter > 0 ? opt.max_iter : static_cast<int>(space);

  auto orthogonalize = [&](Eigen::VectorXd& v, const Eigen::MatrixXd& q, Eigen::Index cols) {
    for (int pass = 0; pass < 2; ++pass) {
      if (defl.cols() > 0) v -= defl * (defl.transpose() * v);
      if (cols > 0) v -= q.leftCols(cols) * (q.leftCols(cols).transpose() * v);
    }
  };

  std::mt19937_64 rng(opt.seed);
  std::normal_distribution<double> normal;
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = normal(rng);

  Eigen::MatrixXd q(n, std::min<Eigen::Index>(cap, space) + 1);
  std::vector<double> alpha, beta;
  orthogonalize(v, q, 0);
  v.normalize();
  q.col(0) = v;

  double theta = 0.0, resid = 0.0;
  for (int k = 0; k < cap && k < space; ++k) {
    Eigen::VectorXd w = to_vec(op.apply(from_vec(q.col(k), op.lmax)));
    if (defl.cols() > 0) w -= defl * (defl.transpose() * w);
    alpha.push_back(q.col(k).dot(w));
    orthogonalize(w, q, k + 1);
    const double b = w.norm();

    const int m = k + 1;
    Eigen::MatrixXd t = Eigen::MatrixXd::Zero(m, m);
    for (int i = 0; i < m; ++i) {
      t(i, i) = alpha[i];
      if (i + 1 < m) t(i, i + 1) = t(i + 1, i) = beta[i];
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(t);
    theta = es.eigenvalues()(m - 1);
    resid = std::abs(b * es.eigenvectors()(m - 1, m - 1));
    double scale = 0.0;
    for (int i = 0; i < m; ++i) scale = std::max(scale, std::abs(es.eigenvalues()(i)));
    if (resid <= opt.tol * std::max(1.0, std::abs(theta)) || b <= 1e-14 * std::max(1.0, scale) ||
        m == space)
      return {theta, resid, m};
    beta.push_back(b);
    q.col(k + 1) = w / b;
  }
  throw NoConvergence("Lanczos iteration did not converge", theta);
}

Eigen::MatrixXd dense_matrix(const CoefficientOperator& op) {
  const auto n = static_cast<Eigen::Index>(op.dim());
  Eigen::MatrixXd m(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    SpectralField e(op.lmax);
    e.coeffs[j] = 1.0;
    m.col(j) = to_vec(op.apply(e));
  }
  return m;
}

Spectrum dense_spectrum(const CoefficientOperator& op) {
  const Eigen::MatrixXd m = dense_matrix(op);
  const Eigen::MatrixXd sym = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym);
  Spectrum s{es.eigenvalues(), es.eigenvectors(), Eigen::VectorXd(m.rows())};
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    s.residuals[i] = (m * s.vectors.col(i) - s.values[i] * s.vectors.col(i)).norm();
  return s;
}

void write_spectrum_csv(std::ostream& os, const Spectrum& s) {
  os << "index,eigenvalue,residual\n";
  const auto n = s.values.size();
  os << std::setprecision(17);
  for (Eigen::Index i = 0; i < n; ++i)
    os << i << ',' << s.values[n - 1 - i] << ',' << s.residuals[n - 1 - i] << '\n';
}

}  // namespace membrane
