#include <doctest.h>

#include "membrane/dynamics.hpp"
#include "membrane/linop.hpp"
#include "membrane/nashmoser.hpp"
#include "support.hpp"

using namespace testing;

namespace {

VectorTrajectory sampled(const GridPtr& g, double T, int n, const std::function<VectorField(double)>& f) {
  VectorTrajectory w;
  for (int k = 0; k <= n; ++k) {
    const double t = T * k / n;
    w.t.push_back(t);
    w.values.push_back(f(t));
  }
  return w;
}

double max_l2(const VectorTrajectory& r, std::size_t from = 0, std::size_t skip_end = 0) {
  double m = 0.0;
  for (std::size_t i = from; i + skip_end < r.size(); ++i) m = std::max(m, l2_norm(r.values[i]));
  return m;
}

// eta'' + b eta' - L_id(eta . x) x for w = x + eta, with second-order stencils.
VectorTrajectory flat_linear_model(const VectorTrajectory& w, double b) {
  const auto& g = w.values.front().grid();
  const int L = g->band_limit();
  const auto x = position_field(g);
  const std::size_t n = w.size();
  const double h = w.t[1] - w.t[0];
  VectorTrajectory out;
  out.t = w.t;
  for (std::size_t i = 0; i < n; ++i) {
    VectorField d1(g), d2(g);
    if (i == 0) {
      d1 = (0.5 / h) * (-3.0 * w.values[0] + 4.0 * w.values[1] - w.values[2]);
      d2 = (1 / (h * h)) * (2.0 * w.values[0] - 5.0 * w.values[1] + 4.0 * w.values[2] - w.values[3]);
    } else if (i == n - 1) {
      d1 = (0.5 / h) * (3.0 * w.values[i] - 4.0 * w.values[i - 1] + w.values[i - 2]);
      d2 = (1 / (h * h)) * (2.0 * w.values[i] - 5.0 * w.values[i - 1] + 4.0 * w.values[i - 2] - w.values[i - 3]);
    } else {
      d1 = (0.5 / h) * (w.values[i + 1] - w.values[i - 1]);
      d2 = (1 / (h * h)) * (w.values[i + 1] - 2.0 * w.values[i] + w.values[i - 1]);
    }
    const auto phi = analyze(dot(w.values[i] - x, x), L);
    out.values.push_back(d2 + b * d1 - synthesize(apply_L_id(phi), g) * x);
  }
  return out;
}

}  // namespace

TEST_CASE("exponent constraints") {
  CHECK(validate_exponents({2, 4, 12, 41, 33, 55, {}}).empty());
  CHECK(validate_exponents({2, 2, 7, 24, 21, 43, {}}).empty());
  CHECK(validate_exponents({5, 4, 12, 41, 33, 55, {}}).size() == 1);
  CHECK(validate_exponents({2, 13, 12, 41, 33, 55, {}}).size() == 1);
  CHECK(validate_exponents({2, 4, 12, 41, 32, 55, {}}).size() == 1);
  CHECK(validate_exponents({2, 4, 12, 41, 34, 55, {}}).size() == 1);
  CHECK(validate_exponents({2, 4, 12, 10, 80, 55, {}}).size() == 2);
}

TEST_CASE("smoothing constants of a single l = 1 mode") {
  const auto rep = measure_smoothing_constants({single(16, 1, 0)}, {{0.0, 2.0}, {1.0, 3.0}});
  REQUIRE(rep.pairs.size() == 2);
  for (const auto& p : rep.pairs) {
    CHECK(p.bounded == doctest::Approx(1.0));
    CHECK(p.gain == doctest::Approx(1.0));
    CHECK(p.loss == 0.0);
    CHECK(p.block_lower == doctest::Approx(1.0));
    CHECK(p.block_upper == doctest::Approx(1.0));
  }
}

TEST_CASE("smoothing axioms on random fields") {
  const auto rep = check_smoothing_axioms(20, 16, {{0.0, 2.0}, {1.0, 4.0}});
  CHECK(rep.samples == 20);
  CHECK((1 << rep.j_max) >= 16 * 17);
  CHECK(rep.telescoping_error < 1e-12);
  for (const auto& p : rep.pairs) {
    CHECK(p.bounded <= 1.0 + 1e-12);
    CHECK(p.gain <= 1.0 + 1e-12);
    CHECK(p.loss <= 1.0 + 1e-12);
    CHECK(p.block_lower > 0.0);
    CHECK(p.block_lower <= p.block_upper);
  }
  CHECK_THROWS_AS(check_smoothing_axioms(5, 4, {{0.0, 1.0}}), ValidationError);
}

TEST_CASE("residual of the static sphere vanishes") {
  const auto g = SphGrid::for_band(8);
  const auto x = position_field(g);
  const auto w = sampled(g, 1.0, 10, [&](double) { return x; });
  CHECK(max_l2(residual(w, 1.0)) < 1e-10);
}

TEST_CASE("residual of the breather is second order in the sample step") {
  const auto g = SphGrid::for_band(8);
  const auto x = position_field(g);
  std::vector<double> errs;
  for (double h : {0.02, 0.01}) {
    const auto tr = breather_ode(1.1, 0.0, h, 2.0);
    VectorTrajectory w;
    for (std::size_t i = 0; i < tr.t.size(); ++i) {
      w.t.push_back(tr.t[i]);
      w.values.push_back(tr.r[i] * x);
    }
    errs.push_back(max_l2(residual(w, 0.0)));
  }
  CHECK(errs[1] < 1e-3);
  CHECK(errs[0] / errs[1] == doctest::Approx(4.0).epsilon(0.15));
}

TEST_CASE("residual input checks") {
  const auto g = SphGrid::for_band(4);
  const auto x = position_field(g);
  auto w = sampled(g, 1.0, 1, [&](double) { return x; });
  CHECK_THROWS_AS(residual(w, 1.0), InsufficientData);
  w = sampled(g, 1.0, 4, [&](double) { return x; });
  w.t[2] += 0.01;
  CHECK_THROWS_AS(residual(w, 1.0), ValidationError);
}

TEST_CASE("residual linearization matches the linearized operator") {
  const int L = 10;
  const auto g = SphGrid::for_band(L);
  const auto x = position_field(g);
  const auto P = polynomial_field(g, {0.3, 0.1, -0.2, 0.5, 0.4, 0.1, -0.3, 0.2, 0.6});
  const double b = 1.0;
  const auto sphere = Embedding::unit_sphere(g);
  const auto base = residual(sampled(g, 1.0, 10, [&](double) { return x; }), b);
  std::vector<double> errs;
  for (double s : {1e-4, 1e-5}) {
    const auto pert = residual(sampled(g, 1.0, 10, [&](double t) { return x + (s * (1 + t * t)) * P; }), b);
    double err = 0.0;
    for (std::size_t i = 0; i < pert.size(); ++i) {
      const double t = pert.t[i];
      const auto lin = apply_psi_prime(sphere, {(1 + t * t) * P, (2 * t) * P, 2.0 * P}, b);
      err = std::max(err, l2_norm((1 / s) * (pert.values[i] - base.values[i]) - lin));
    }
    errs.push_back(err);
  }
  CHECK(errs[1] < 1e-3);
  CHECK(errs[0] / errs[1] == doctest::Approx(10.0).epsilon(0.2));
}

TEST_CASE("zero data needs no iterations") {
  const auto g = SphGrid::for_band(6);
  IterationOptions opt;
  opt.T = 1.0;
  opt.sample_dt = 0.05;
  const auto res = solve_by_iteration(position_field(g), VectorField(g), opt);
  CHECK(res.iterations == 0);
  CHECK(res.status == IterationStatus::converged);
  CHECK(res.trace.rows.size() == 1);
}

TEST_CASE("one unsmoothed step solves a linear model exactly") {
  const int L = 8;
  const auto g = SphGrid::for_band(L);
  const auto x = position_field(g);
  const double b = 1.0;
  const auto u0 = x + synthesize(single(L, 2, 0, 0.01), g) * x;
  const auto u1 = 0.02 * TangentField::killing(g, Vec3(0, 0, 1)).v + synthesize(single(L, 3, 1, 0.01), g) * x;
  IterationOptions opt;
  opt.b = b;
  opt.T = 2.0;
  opt.sample_dt = 0.05;
  opt.max_iterations = 1;
  opt.schedule = {60};
  opt.smallness = 1.0;
  opt.model = [&](const VectorTrajectory& w) { return flat_linear_model(w, b); };
  const auto res = solve_by_iteration(u0, u1, opt);
  REQUIRE(res.iterations == 1);

  VectorTrajectory none;
  none.t = res.w.t;
  for (std::size_t i = 0; i < none.t.size(); ++i) none.values.push_back(VectorField(g));
  const auto direct = flat_right_inverse(none, b, u0 - x, u1);
  double err = 0.0;
  for (std::size_t i = 0; i < res.w.size(); ++i) err = std::max(err, max_abs(res.w.values[i], x + direct.values[i]));
  CHECK(err < 1e-10);
}

TEST_CASE("iteration options and divergence") {
  const auto g = SphGrid::for_band(6);
  const auto x = position_field(g);
  IterationOptions opt;
  opt.T = 1.0;
  opt.sample_dt = 0.1;
  CHECK_THROWS_AS(solve_by_iteration(1.5 * x, VectorField(g), opt), ValidationError);
  IterationOptions bad = opt;
  bad.schedule = {4, 3};
  CHECK_THROWS_AS(bad.validate(), ValidationError);
  bad = opt;
  bad.sample_dt = 2.0;
  CHECK_THROWS_AS(bad.validate(), ValidationError);

  int calls = 0;
  opt.model = [&](const VectorTrajectory& w) {
    VectorTrajectory r;
    r.t = w.t;
    for (std::size_t i = 0; i < w.size(); ++i) r.values.push_back(constant_field(g, Vec3(1.0 + calls, 0, 0)));
    ++calls;
    return r;
  };
  CHECK_THROWS_AS(solve_by_iteration(x, VectorField(g), opt), DivergenceError);
  calls = 0;
  opt.throw_on_divergence = false;
  const auto res = solve_by_iteration(x, VectorField(g), opt);
  CHECK(res.status == IterationStatus::diverged);
  CHECK(res.iterations == 3);
  CHECK(to_string(IterationStatus::diverged) == "diverged");
}
