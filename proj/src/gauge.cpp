#include "membrane/gauge.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include <Eigen/SVD>

namespace membrane {

namespace {

constexpr double kTangentTol = 1e-10;

double sinc(double r) {
  if (std::abs(r) < 1e-4) {
    const double r2 = r * r;
    return 1.0 - r2 / 6.0 + r2 * r2 / 120.0;
  }
  return std::sin(r) / r;
}

// (cos r - sinc r) / r^2
double cos_minus_sinc(double r) {
  if (std::abs(r) < 1e-3) {
    const double r2 = r * r;
    return -1.0 / 3.0 + r2 / 30.0 - r2 * r2 / 840.0;
  }
  return (std::cos(r) - std::sin(r) / r) / (r * r);
}

// Orthonormal pair spanning the plane orthogonal to the unit vector n.
std::pair<Vec3, Vec3> plane_basis(const Vec3& n) {
  const Vec3 seed = std::abs(n.x()) < 0.6 ? Vec3::UnitX() : (std::abs(n.y()) < 0.6 ? Vec3::UnitY() : Vec3::UnitZ());
  Vec3 e1 = (seed - seed.dot(n) * n).normalized();
  return {e1, n.cross(e1)};
}

Vec3 sigma_at(const Vec3& p, const Vec3& x, const Vec3& y) {
  const double r = x.norm();
  const double s = sinc(r);
  const double xy = x.dot(y);
  return -s * xy * p + cos_minus_sinc(r) * xy * x + s * y;
}

void check_injective(const TangentField& X) {
  for (std::size_t k = 0; k < X.v.size(); ++k)
    if (!(X.v.at(k).norm() < std::numbers::pi))
      throw InjectivityError("tangent field reaches the injectivity radius at node " + std::to_string(k));
}

}  // namespace

TangentField::TangentField(VectorField field) : v(std::move(field)) {
  const GridPtr& g = v.grid();
  for (std::size_t k = 0; k < v.size(); ++k) {
    const auto p = g->position(k);
    const double radial = v.at(k).dot(Vec3(p[0], p[1], p[2]));
    if (std::abs(radial) > kTangentTol)
      throw ValidationError("field is not tangent to the sphere at node " + std::to_string(k));
  }
}

TangentField TangentField::zero(const GridPtr& grid) {
  TangentField t;
  t.v = VectorField(grid);
  return t;
}

TangentField TangentField::project(const VectorField& field) {
  TangentField t;
  t.v = field;
  for (std::size_t k = 0; k < field.size(); ++k) {
    const auto p = field.grid()->position(k);
    const Vec3 x(p[0], p[1], p[2]);
    const Vec3 f = field.at(k);
    t.v.set(k, f - f.dot(x) * x);
  }
  return t;
}

TangentField TangentField::killing(const GridPtr& grid, const Vec3& axis, double angle) {
  TangentField t;
  t.v = VectorField(grid);
  for (std::size_t k = 0; k < grid->size(); ++k) {
    const auto p = grid->position(k);
    t.v.set(k, angle * axis.cross(Vec3(p[0], p[1], p[2])));
  }
  return t;
}

double TangentField::max_norm() const {
  double m = 0.0;
  for (std::size_t k = 0; k < v.size(); ++k) m = std::max(m, v.at(k).norm());
  return m;
}

Embedding exp_map(const TangentField& X) {
  check_injective(X);
  const GridPtr& g = X.grid();
  VectorField out(g);
  for (std::size_t k = 0; k < out.size(); ++k) {
    const auto p = g->position(k);
    const Vec3 x = X.v.at(k);
    const double r = x.norm();
    out.set(k, std::cos(r) * Vec3(p[0], p[1], p[2]) + sinc(r) * x);
  }
  return {std::move(out), g->band_limit()};
}

VectorField sigma_apply(const TangentField& X, const TangentField& Y) {
  check_injective(X);
  const GridPtr& g = X.grid();
  VectorField out(g);
  for (std::size_t k = 0; k < out.size(); ++k) {
    const auto p = g->position(k);
    out.set(k, sigma_at(Vec3(p[0], p[1], p[2]), X.v.at(k), Y.v.at(k)));
  }
  return out;
}

TangentField sigma_inverse(const TangentField& X, const VectorField& xi) {
  check_injective(X);
  const GridPtr& g = X.grid();
  TangentField out = TangentField::zero(g);
  for (std::size_t k = 0; k < out.v.size(); ++k) {
    const auto pa = g->position(k);
    const Vec3 p(pa[0], pa[1], pa[2]);
    const Vec3 x = X.v.at(k);
    const double r = x.norm();
    const Vec3 q = std::cos(r) * p + sinc(r) * x;
    const Vec3 target = xi.at(k);
    if (std::abs(target.dot(q)) > 1e-8)
      throw NotTangentError("target field has a normal component " + std::to_string(target.dot(q)) +
                            " at node " + std::to_string(k));
    const auto [e1, e2] = plane_basis(p);
    const auto [f1, f2] = plane_basis(q);
    const Vec3 s1 = sigma_at(p, x, e1), s2 = sigma_at(p, x, e2);
    Mat2 m;
    m << f1.dot(s1), f1.dot(s2), f2.dot(s1), f2.dot(s2);
    const Eigen::JacobiSVD<Mat2> svd(m);
    const double smin = svd.singularValues()(1);
    if (!(smin > 0.0) || svd.singularValues()(0) / smin > 1e8)
      throw SingularMapError("exponential map derivative is singular at node " + std::to_string(k));
    const Eigen::Vector2d y = m.inverse() * Eigen::Vector2d(f1.dot(target), f2.dot(target));
    out.v.set(k, y[0] * e1 + y[1] * e2);
  }
  return out;
}

}  // namespace membrane
