#include <doctest.h>

#include <sstream>

#include "membrane/linop.hpp"
#include "support.hpp"

using namespace testing;

namespace {

TangentField small_tangent(const GridPtr& g, double scale) {
  auto t = TangentField::project(polynomial_field(g, {0.3, -0.2, 0.5, 0.1, 0.4, -0.3, 0.2, 0.6, -0.1}));
  t.v = (scale / t.max_norm()) * t.v;
  return t;
}

}  // namespace

TEST_CASE("L_id multipliers") {
  CHECK(L_id_multiplier(0) == -4.0);
  CHECK(L_id_multiplier(1) == 0.0);
  CHECK(L_id_multiplier(2) == -4.0);
  CHECK(L_id_multiplier(3) == -10.0);
  CHECK(L_id_multiplier(10) == -108.0);
  std::mt19937_64 rng(1);
  const auto c = random_field(6, rng);
  const auto out = apply_L_id(c);
  for (int l = 0; l <= 6; ++l)
    for (int m = -l; m <= l; ++m) CHECK(out(l, m) == doctest::Approx(L_id_multiplier(l) * c(l, m)));
}

TEST_CASE("L_phi at the identity matches L_id") {
  const int L = 10;
  const auto g = SphGrid::for_band(L);
  std::mt19937_64 rng(2);
  const auto c = random_field(L, rng);
  const auto out = apply_L_phi(TangentField::zero(g), synthesize(c, g));
  CHECK(max_abs(out, synthesize(apply_L_id(c), g)) < 1e-9);
}

TEST_CASE("L_phi on constants and on the zero modes") {
  const int L = 16;
  const auto g = SphGrid::for_band(L);
  const auto X = small_tangent(g, 0.1);
  const auto geom = geometry_of(exp_map(X));
  const auto one = apply_L_phi(geom, GridField(g, std::vector<double>(g->size(), 1.0)));
  for (std::size_t k = 0; k < g->size(); ++k) CHECK(std::abs(one[k] + 4 * geom.area_ratio[k]) < 1e-8);
  const ZeroModeProjection p0(X);
  for (int k = 0; k < 3; ++k) CHECK(max_abs(apply_L_phi(geom, p0.basis()[k])) < 1e-6);
}

TEST_CASE("perturbed operator reduces to L_id at rest") {
  const int L = 10;
  const auto g = SphGrid::for_band(L);
  std::mt19937_64 rng(3);
  const auto c = random_field(L, rng);
  const auto out = apply_L_pert(geometry_of(Embedding::unit_sphere(g)), VectorField(g), synthesize(c, g));
  CHECK(max_abs(out, synthesize(apply_L_id(c), g)) < 1e-9);
  const auto viaX = apply_L_pert(TangentField::zero(g), Vec3(0.3, 0, -0.1),
                                 {VectorField(g), VectorField(g)}, synthesize(c, g));
  CHECK(max_abs(viaX, out) < 1e-9);
}

TEST_CASE("zero-mode projection") {
  const int L = 12;
  const auto g = SphGrid::for_band(L);
  std::mt19937_64 rng(4);
  const auto phi = synthesize(random_field(L, rng), g);
  for (double s : {0.0, 0.3}) {
    const auto X = small_tangent(g, s);
    const ZeroModeProjection p0(X);
    const auto once = p0.apply(phi);
    const auto twice = p0.apply(once.proj);
    CHECK(max_abs(once.proj, twice.proj) < 1e-12);
    CHECK((once.c - twice.c).norm() < 1e-12);
    const auto rest = phi - once.proj;
    for (int k = 0; k < 3; ++k) CHECK(std::abs(inner(rest, p0.basis()[k])) < 1e-12);
    const auto n1 = p0.apply(1.5 * p0.basis()[1] - 0.5 * p0.basis()[2]);
    CHECK((n1.c - Vec3(0, 1.5, -0.5)).norm() < 1e-12);
    const auto q = p0.coefficient_basis(L);
    CHECK((q.transpose() * q - Eigen::Matrix3d::Identity()).norm() < 1e-12);
  }
  const auto id = ZeroModeProjection::identity(g);
  CHECK((id.gram() - (4 * pi / 3) * Eigen::Matrix3d::Identity()).norm() < 1e-12);
}

TEST_CASE("Lanczos extremes") {
  const int L = 8;
  const auto g = SphGrid::for_band(L);
  const auto id = ZeroModeProjection::identity(g);
  const auto top = rayleigh_extremes(L_id_operator(L));
  CHECK(std::abs(top.value) < 1e-8);
  const auto deflated = rayleigh_extremes(L_id_operator(L), &id);
  CHECK(std::abs(deflated.value + 4) < 1e-8);
  CHECK(deflated.residual < 1e-6);
  const auto lap = rayleigh_extremes(neg_laplacian_operator(L));
  CHECK(std::abs(lap.value - 72) < 1e-8);
}

TEST_CASE("Galerkin L_phi is self-adjoint and negative off the zero modes") {
  const int L = 8;
  const auto g = SphGrid::for_band(24);
  const auto X = small_tangent(g, 0.05);
  const auto op = L_phi_operator(geometry_of(exp_map(X)), L);
  const auto m = dense_matrix(op);
  CHECK((m - m.transpose()).norm() < 1e-6 * m.norm());
  const ZeroModeProjection p0(X);
  const auto top = rayleigh_extremes(op, &p0);
  CHECK(top.value < -3.5);
}

TEST_CASE("dense spectrum of L_id") {
  const auto s = dense_spectrum(L_id_operator(3));
  REQUIRE(s.values.size() == 16);
  int near_zero = 0, minus4 = 0, minus10 = 0;
  for (Eigen::Index i = 0; i < s.values.size(); ++i) {
    const double v = s.values[i];
    near_zero += std::abs(v) < 1e-12;
    minus4 += std::abs(v + 4) < 1e-12;
    minus10 += std::abs(v + 10) < 1e-12;
    CHECK(s.residuals[i] < 1e-12);
  }
  CHECK(near_zero == 3);
  CHECK(minus4 == 6);
  CHECK(minus10 == 7);
  std::ostringstream os;
  write_spectrum_csv(os, s);
  std::istringstream in(os.str());
  std::string line;
  std::getline(in, line);
  CHECK(line == "index,eigenvalue,residual");
  std::getline(in, line);
  CHECK(line.rfind("0,", 0) == 0);
}
