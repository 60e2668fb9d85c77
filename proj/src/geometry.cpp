#include "membrane/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace membrane {

// --- vector fields -----------------------------------------------------------

VectorField& VectorField::operator+=(const VectorField& o) {
  for (int c = 0; c < 3; ++c) comp[c] += o.comp[c];
  return *this;
}
VectorField& VectorField::operator-=(const VectorField& o) {
  for (int c = 0; c < 3; ++c) comp[c] -= o.comp[c];
  return *this;
}
VectorField& VectorField::operator*=(double s) {
  for (auto& f : comp) f *= s;
  return *this;
}
VectorField operator+(VectorField a, const VectorField& b) { return a += b; }
VectorField operator-(VectorField a, const VectorField& b) { return a -= b; }
VectorField operator*(double s, VectorField a) { return a *= s; }
VectorField operator*(const GridField& s, const VectorField& v) {
  VectorField out = v;
  for (auto& f : out.comp)
    for (std::size_t k = 0; k < f.size(); ++k) f[k] *= s[k];
  return out;
}

VectorField position_field(const GridPtr& grid) {
  VectorField out(grid);
  for (std::size_t k = 0; k < grid->size(); ++k) {
    const auto p = grid->position(k);
    out.set(k, Vec3(p[0], p[1], p[2]));
  }
  return out;
}

VectorField constant_field(const GridPtr& grid, const Vec3& c) {
  VectorField out(grid);
  for (std::size_t k = 0; k < grid->size(); ++k) out.set(k, c);
  return out;
}

GridField dot(const VectorField& a, const VectorField& b) {
  GridField out(a.grid());
  for (std::size_t k = 0; k < a.size(); ++k) out[k] = a.at(k).dot(b.at(k));
  return out;
}

double sobolev_norm(const VectorField& v, int lmax, double n) {
  double s = 0.0;
  for (const auto& c : v.comp) {
    const double x = sobolev_norm(analyze(c, lmax), n);
    s += x * x;
  }
  return std::sqrt(s);
}

double l2_norm(const VectorField& v) { return std::sqrt(integrate(dot(v, v))); }

Embedding Embedding::unit_sphere(const GridPtr& grid) { return {position_field(grid), grid->band_limit()}; }

Embedding Embedding::sphere(const GridPtr& grid, double radius, const Vec3& center) {
  VectorField w = radius * position_field(grid);
  w += constant_field(grid, center);
  return {std::move(w), grid->band_limit()};
}

VectorField GeometryCache::normal_field() const {
  VectorField out(grid);
  for (std::size_t k = 0; k < normal.size(); ++k) out.set(k, normal[k]);
  return out;
}

// --- geometry ----------------------------------------------------------------

GeometryCache geometry_of(const Embedding& w) {
  std::array<SpectralField, 3> c;
  for (int i = 0; i < 3; ++i) c[i] = analyze(w.w.comp[i], w.lmax);
  return geometry_of(c, w.w.grid());
}

GeometryCache geometry_of(const std::array<SpectralField, 3>& wc, const GridPtr& grid) {
  const SphGrid& gr = *grid;
  const std::size_t n = gr.size();
  std::array<FieldJet, 3> jet;
  for (int c = 0; c < 3; ++c) jet[c] = synthesize_jet(wc[c], grid);

  GeometryCache out;
  out.grid = grid;
  out.lmax = wc[0].lmax;
  out.w.resize(n);
  out.w_t.resize(n);
  out.w_p.resize(n);
  out.w_tt.resize(n);
  out.w_tp.resize(n);
  out.w_pp.resize(n);
  out.g.resize(n);
  out.ginv.resize(n);
  out.h.resize(n);
  out.sqrt_detg.resize(n);
  out.hmean.resize(n);
  out.area_ratio.resize(n);
  out.h_norm2.resize(n);
  out.normal.resize(n);

  auto vec = [&](const GridField FieldJet::*member, std::size_t k) {
    return Vec3((jet[0].*member)[k], (jet[1].*member)[k], (jet[2].*member)[k]);
  };

  std::size_t bad = n;
#pragma omp parallel for schedule(static)
  for (std::size_t k = 0; k < n; ++k) {
    out.w[k] = vec(&FieldJet::f, k);
    out.w_t[k] = vec(&FieldJet::dt, k);
    out.w_p[k] = vec(&FieldJet::dp, k);
    out.w_tt[k] = vec(&FieldJet::dtt, k);
    out.w_tp[k] = vec(&FieldJet::dtp, k);
    out.w_pp[k] = vec(&FieldJet::dpp, k);
    Mat2 g;
    g(0, 0) = out.w_t[k].dot(out.w_t[k]);
    g(0, 1) = g(1, 0) = out.w_t[k].dot(out.w_p[k]);
    g(1, 1) = out.w_p[k].dot(out.w_p[k]);
    const double det = g.determinant();
    const double tr = g.trace();
    if (!(det > 1e-12 * tr * tr) || !(tr > 1e-20)) {
#pragma omp critical
      bad = std::min(bad, k);
      continue;
    }
    out.g[k] = g;
    out.ginv[k] = g.inverse();
    out.sqrt_detg[k] = std::sqrt(det);
    out.area_ratio[k] = out.sqrt_detg[k] / gr.sin_theta(static_cast<int>(k / gr.nlon()));
    out.normal[k] = out.w_t[k].cross(out.w_p[k]) / out.sqrt_detg[k];
  }
  if (bad < n)
    throw DegenerateEmbedding("degenerate embedding: det g vanishes at node " + std::to_string(bad), bad);

  double vol = 0.0, area = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double dmu = gr.weight(k) * out.area_ratio[k];
    vol += dmu * out.w[k].dot(out.normal[k]);
    area += dmu;
  }
  vol /= 3.0;
  if (vol < 0.0) {
    out.orientation_flipped = true;
    vol = -vol;
    for (auto& nv : out.normal) nv = -nv;
  }
  out.volume = vol;
  out.area = area;

#pragma omp parallel for schedule(static)
  for (std::size_t k = 0; k < n; ++k) {
    const Vec3& nv = out.normal[k];
    Mat2 h;
    h(0, 0) = -nv.dot(out.w_tt[k]);
    h(0, 1) = h(1, 0) = -nv.dot(out.w_tp[k]);
    h(1, 1) = -nv.dot(out.w_pp[k]);
    out.h[k] = h;
    const Mat2 mixed = out.ginv[k] * h;  // h^i_j
    out.hmean[k] = mixed.trace();
    out.h_norm2[k] = (mixed * mixed).trace();
  }
  return out;
}

VectorField rhs_force(const GeometryCache& geom, double kappa) {
  VectorField out(geom.grid);
  const double pressure = kappa / geom.volume;
  for (std::size_t k = 0; k < geom.normal.size(); ++k)
    out.set(k, geom.area_ratio[k] * (pressure - geom.hmean[k]) * geom.normal[k]);
  return out;
}

VectorField rhs_force(const Embedding& w, double kappa) { return rhs_force(geometry_of(w), kappa); }

// --- surface operators -------------------------------------------------------

GridField surface_laplacian(const GeometryCache& geom, const SpectralField& f) {
  const FieldJet jf = synthesize_jet(f, geom.grid);
  GridField out(geom.grid);
#pragma omp parallel for schedule(static)
  for (std::size_t k = 0; k < out.size(); ++k) {
    const Mat2& gi = geom.ginv[k];
    // Gamma^m_ij d_m f = g^{ml} (d_l w . d_ij w) d_m f
    const Eigen::Vector2d df(jf.dt[k], jf.dp[k]);
    const Eigen::Vector2d grad = gi * df;  // g^{ml} d_m f
    const Vec3 tangent = grad[0] * geom.w_t[k] + grad[1] * geom.w_p[k];
    const double ctt = jf.dtt[k] - tangent.dot(geom.w_tt[k]);
    const double ctp = jf.dtp[k] - tangent.dot(geom.w_tp[k]);
    const double cpp = jf.dpp[k] - tangent.dot(geom.w_pp[k]);
    out[k] = gi(0, 0) * ctt + 2.0 * gi(0, 1) * ctp + gi(1, 1) * cpp;
  }
  return out;
}

GridField surface_laplacian(const GeometryCache& geom, const GridField& f) {
  return surface_laplacian(geom, analyze(f, geom.lmax));
}

VectorField surface_gradient(const GeometryCache& geom, const GridField& f) {
  auto [ft, fp] = differentiate(analyze(f, geom.lmax), geom.grid);
  VectorField out(geom.grid);
  for (std::size_t k = 0; k < out.size(); ++k) {
    const Eigen::Vector2d up = geom.ginv[k] * Eigen::Vector2d(ft[k], fp[k]);
    out.set(k, up[0] * geom.w_t[k] + up[1] * geom.w_p[k]);
  }
  return out;
}

GridField surface_divergence(const GeometryCache& geom, const VectorField& v) {
  std::array<GridField, 3> vt, vp;
  for (int c = 0; c < 3; ++c) {
    auto d = differentiate(analyze(v.comp[c], geom.lmax), geom.grid);
    vt[c] = std::move(d.first);
    vp[c] = std::move(d.second);
  }
  GridField out(geom.grid);
  for (std::size_t k = 0; k < out.size(); ++k) {
    const Vec3 dt(vt[0][k], vt[1][k], vt[2][k]);
    const Vec3 dp(vp[0][k], vp[1][k], vp[2][k]);
    const Mat2& gi = geom.ginv[k];
    out[k] = gi(0, 0) * dt.dot(geom.w_t[k]) + gi(0, 1) * (dt.dot(geom.w_p[k]) + dp.dot(geom.w_t[k])) +
             gi(1, 1) * dp.dot(geom.w_p[k]);
  }
  return out;
}

GeometrySummary summarize(const GeometryCache& geom) {
  GeometrySummary s{geom.area, geom.volume, std::numeric_limits<double>::infinity(),
                    -std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
  for (std::size_t k = 0; k < geom.hmean.size(); ++k) {
    s.h_min = std::min(s.h_min, geom.hmean[k]);
    s.h_max = std::max(s.h_max, geom.hmean[k]);
    s.min_detg = std::min(s.min_detg, geom.sqrt_detg[k] * geom.sqrt_detg[k]);
  }
  return s;
}

// --- linearization -----------------------------------------------------------

VectorField normal_variation(const GeometryCache& geom, const VectorField& eta) {
  GridField phi(geom.grid);
  for (std::size_t k = 0; k < phi.size(); ++k) phi[k] = eta.at(k).dot(geom.normal[k]);
  VectorField out = surface_gradient(geom, phi);
  out *= -1.0;
  for (std::size_t k = 0; k < phi.size(); ++k) {
    const Vec3 e = eta.at(k);
    const Eigen::Vector2d proj(e.dot(geom.w_t[k]), e.dot(geom.w_p[k]));
    const Eigen::Vector2d up = geom.ginv[k] * geom.h[k] * geom.ginv[k] * proj;
    out.set(k, out.at(k) + up[0] * geom.w_t[k] + up[1] * geom.w_p[k]);
  }
  return out;
}

VectorField force_derivative(const GeometryCache& geom, const VectorField& eta, double kappa) {
  const GridPtr& grid = geom.grid;
  const std::size_t n = grid->size();
  const double pressure = kappa / geom.volume;

  GridField phi(grid);
  for (std::size_t k = 0; k < n; ++k) phi[k] = eta.at(k).dot(geom.normal[k]);

  const SpectralField phi_c = analyze(phi, geom.lmax);
  const GridField lap_phi = surface_laplacian(geom, phi_c);
  const VectorField dnormal = normal_variation(geom, eta);
  const VectorField grad_h = surface_gradient(geom, geom.mean_curvature());
  // div_S eta = div(T eta) + H phi
  const GridField div_eta = surface_divergence(geom, eta);

  double phi_mass = 0.0;  // int phi dmu(w)
  for (std::size_t k = 0; k < n; ++k) phi_mass += grid->weight(k) * geom.area_ratio[k] * phi[k];
  const double vol_term = kappa / (geom.volume * geom.volume) * phi_mass;

  VectorField out(grid);
#pragma omp parallel for schedule(static)
  for (std::size_t k = 0; k < n; ++k) {
    const double a = geom.area_ratio[k];
    const double p = pressure - geom.hmean[k];
    const Vec3& nv = geom.normal[k];
    const Vec3 e = eta.at(k);
    // Variation of the mean curvature: -Delta phi - |h|^2 phi + grad H . T eta.
    const double dh = -lap_phi[k] - geom.h_norm2[k] * phi[k] + grad_h.at(k).dot(e);
    const double dp = -dh - vol_term;
    out.set(k, a * div_eta[k] * p * nv + a * dp * nv + a * p * dnormal.at(k));
  }
  return out;
}

VectorField apply_psi_prime(const Embedding& w, const VariationSlice& eta, double b, double kappa) {
  const GeometryCache geom = geometry_of(w);
  VectorField out = eta.eta_tt + b * eta.eta_t;
  out -= force_derivative(geom, eta.eta, kappa);
  return out;
}

}  // namespace membrane
