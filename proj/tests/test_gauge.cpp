#include <doctest.h>

#include "membrane/gauge.hpp"
#include "support.hpp"

using namespace testing;

namespace {

TangentField smooth_tangent(const GridPtr& g, double scale, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1, 1);
  std::array<double, 9> k;
  for (auto& v : k) v = u(rng);
  auto t = TangentField::project(polynomial_field(g, k));
  t.v = (scale / t.max_norm()) * t.v;
  return t;
}

// Tangent field of constant length r pointing towards the north pole.
TangentField poleward(const GridPtr& g, double r) {
  VectorField v(g);
  for (std::size_t k = 0; k < g->size(); ++k) {
    const auto p = g->position(k);
    const Vec3 x(p[0], p[1], p[2]);
    const Vec3 t = Vec3::UnitZ() - x.z() * x;
    v.set(k, r * t.normalized());
  }
  return TangentField(v);
}

}  // namespace

TEST_CASE("exponential map at zero is the identity") {
  const auto g = SphGrid::for_band(8);
  const auto e = exp_map(TangentField::zero(g));
  CHECK(max_abs(e.w, position_field(g)) == 0.0);
}

TEST_CASE("exponential map stays on the unit sphere at geodesic distance |X|") {
  const auto g = SphGrid::for_band(10);
  const auto X = smooth_tangent(g, 2.5, 1);
  const auto e = exp_map(X);
  for (std::size_t k = 0; k < g->size(); ++k) {
    const auto p = g->position(k);
    CHECK(std::abs(e.w.at(k).norm() - 1) < 1e-14);
    const double d = std::acos(std::clamp(e.w.at(k).dot(Vec3(p[0], p[1], p[2])), -1.0, 1.0));
    CHECK(std::abs(d - X.v.at(k).norm()) < 1e-7);
  }
}

TEST_CASE("poleward flow moves latitude by |X|") {
  const auto g = SphGrid::for_band(8);
  const double r = 0.1;
  const auto e = exp_map(poleward(g, r));
  for (std::size_t k = 0; k < g->size(); ++k) {
    const double th = g->colatitudes()[k / g->nlon()];
    CHECK(std::abs(std::acos(e.w.at(k).z()) - std::abs(th - r)) < 1e-12);
  }
}

TEST_CASE("tangent field validation") {
  const auto g = SphGrid::for_band(6);
  CHECK_THROWS_AS(TangentField(position_field(g)), ValidationError);
  const auto k = TangentField::killing(g, Vec3(0, 0, 1), 0.3);
  CHECK_NOTHROW(TangentField(k.v));
  CHECK(std::abs(k.max_norm() - 0.3) < 0.3 * 1e-2);
  CHECK(TangentField::zero(g).is_zero());
}

TEST_CASE("injectivity radius") {
  const auto g = SphGrid::for_band(6);
  CHECK_THROWS_AS(exp_map(poleward(g, std::numbers::pi)), InjectivityError);
  CHECK_THROWS_AS(exp_map(poleward(g, 4.0)), InjectivityError);
  CHECK_NOTHROW(exp_map(poleward(g, 3.0)));
}

TEST_CASE("sigma is the derivative of the exponential map") {
  const auto g = SphGrid::for_band(10);
  for (double scale : {0.0, 0.4, 2.0}) {
    const auto X = smooth_tangent(g, scale, 2);
    const auto Y = smooth_tangent(g, 1.0, 3);
    const double s = 1e-6;
    TangentField Xp = X, Xm = X;
    Xp.v += s * Y.v;
    Xm.v -= s * Y.v;
    const auto fd = (0.5 / s) * (exp_map(Xp).w - exp_map(Xm).w);
    CHECK(max_abs(fd, sigma_apply(X, Y)) < 1e-8);
  }
}

TEST_CASE("sigma at zero is the identity on tangent fields") {
  const auto g = SphGrid::for_band(8);
  const auto Y = smooth_tangent(g, 1.0, 4);
  CHECK(max_abs(sigma_apply(TangentField::zero(g), Y), Y.v) < 1e-15);
}

TEST_CASE("sigma inverse roundtrip") {
  const auto g = SphGrid::for_band(10);
  for (double scale : {0.0, 0.5, 2.8}) {
    const auto X = smooth_tangent(g, scale, 5);
    const auto Y = smooth_tangent(g, 0.7, 6);
    const auto back = sigma_inverse(X, sigma_apply(X, Y));
    CHECK(max_abs(back.v, Y.v) < 1e-10);
  }
}

TEST_CASE("sigma inverse error paths") {
  const auto g = SphGrid::for_band(6);
  const auto X = smooth_tangent(g, 0.5, 7);
  CHECK_THROWS_AS(sigma_inverse(X, exp_map(X).w), NotTangentError);
  const auto near = poleward(g, std::numbers::pi - 1e-10);
  const auto Y = smooth_tangent(g, 1.0, 8);
  VectorField xi = sigma_apply(near, Y);
  CHECK_THROWS_AS(sigma_inverse(near, xi), SingularMapError);
}
