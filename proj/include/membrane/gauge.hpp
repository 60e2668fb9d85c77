#pragma once

// Tangent fields on the unit sphere and the diffeomorphisms they generate
// through the exponential map of the round metric.

#include "membrane/geometry.hpp"

namespace membrane {

// R^3-valued field with v(x) . x = 0 at every node.
struct TangentField {
  VectorField v;

  TangentField() = default;
  // Throws ValidationError if v has a normal component above 1e-10.
  explicit TangentField(VectorField field);

  static TangentField zero(const GridPtr& grid);
  // Drops the radial component.
  static TangentField project(const VectorField& field);
  // angle * (axis x x): rotation about axis, to first order.
  static TangentField killing(const GridPtr& grid, const Vec3& axis, double angle = 1.0);

  const GridPtr& grid() const { return v.grid(); }
  double max_norm() const;
  bool is_zero() const { return max_norm() == 0.0; }
};

// i0 o E_X = cos|X| x + sinc|X| X. Throws InjectivityError if |X| >= pi
// anywhere.
Embedding exp_map(const TangentField& X);

// Derivative of X -> exp_map(X) in direction Y.
VectorField sigma_apply(const TangentField& X, const TangentField& Y);

// Tangent Y with sigma_apply(X, Y) = xi. xi must be tangent to the sphere at
// exp_map(X); throws NotTangentError or SingularMapError.
TangentField sigma_inverse(const TangentField& X, const VectorField& xi);

}  // namespace membrane
