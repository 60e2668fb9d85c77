#include <doctest.h>

#include "support.hpp"

using namespace testing;

TEST_CASE("grid weights sum to the sphere area") {
  for (int L : {4, 8, 16, 32}) {
    const auto g = SphGrid::for_band(L);
    double s = 0.0;
    for (std::size_t k = 0; k < g->size(); ++k) s += g->weight(k);
    CHECK(std::abs(s - 4 * pi) / (4 * pi) < 1e-12);
    CHECK(g->nlat() >= L + 1);
    CHECK(g->nlon() >= 2 * L + 1);
  }
}

TEST_CASE("too coarse a grid is rejected") {
  const auto g = SphGrid::make(5, 9);
  CHECK_THROWS_AS(analyze(GridField(g), 8), ResolutionError);
  CHECK_THROWS_AS(synthesize(SpectralField(8), g), ResolutionError);
}

TEST_CASE("constant field analyzes to the l=0 coefficient") {
  const auto g = SphGrid::for_band(8);
  const auto c = analyze(sample(g, [](double, double) { return 1.0; }), 8);
  CHECK(std::abs(c(0, 0) - std::sqrt(4 * pi)) < 1e-12);
  CHECK(max_abs(c, single(8, 0, 0, std::sqrt(4 * pi))) < 1e-12);
  CHECK(max_abs(synthesize(single(8, 0, 0, std::sqrt(4 * pi)), g), sample(g, [](double, double) { return 1.0; })) <
        1e-12);
}

TEST_CASE("cos(theta) is a pure l=1, m=0 field") {
  // Oracle: direct quadrature of cos(theta) Y_1^0 on a much finer grid.
  const auto fine = SphGrid::for_band(64);
  const auto zf = sample(fine, [](double th, double) { return std::cos(th); });
  const auto y10 = sample(fine, [](double th, double ph) { return ylm_closed(1, 0, th, ph); });
  const double oracle = integrate(zf * y10);
  const auto g = SphGrid::for_band(8);
  auto c = analyze(sample(g, [](double th, double) { return std::cos(th); }), 8);
  CHECK(std::abs(c(1, 0) - oracle) < 1e-12);
  CHECK(std::abs(oracle - std::sqrt(4 * pi / 3)) < 1e-12);
  c.coeffs[SpectralField::index(1, 0)] = 0.0;
  CHECK(max_abs(c, SpectralField(8)) < 1e-12);
}

TEST_CASE("basis matches closed-form real harmonics without phase") {
  const auto g = SphGrid::for_band(6);
  for (int l = 0; l <= 2; ++l)
    for (int m = -l; m <= l; ++m) {
      const auto f = synthesize(single(6, l, m), g);
      const auto ref = sample(g, [&](double th, double ph) { return ylm_closed(l, m, th, ph); });
      CHECK(max_abs(f, ref) < 1e-13);
    }
}

TEST_CASE("analyze inverts synthesize on band-limited fields") {
  std::mt19937_64 rng(1);
  for (int L : {4, 8, 16, 32}) {
    const auto g = SphGrid::for_band(L);
    const auto c = random_field(L, rng);
    CHECK(max_abs(analyze(synthesize(c, g), L), c) < 1e-10);
  }
  const auto g = SphGrid::for_band(8);
  CHECK(max_abs(synthesize(SpectralField(8), g)) == 0.0);
  CHECK(max_abs(analyze(synthesize(single(8, 2, 1), g), 8), single(8, 2, 1)) < 1e-13);
}

TEST_CASE("Parseval and the n=0 norm") {
  std::mt19937_64 rng(2);
  const auto g = SphGrid::for_band(12);
  const auto c = random_field(12, rng);
  const auto f = synthesize(c, g);
  const double sum = dot(c, c);
  CHECK(std::abs(integrate(f * f) - sum) / sum < 1e-10);
  CHECK(std::abs(sobolev_norm(c, 0.0) - std::sqrt(sum)) < 1e-12 * std::sqrt(sum));
}

TEST_CASE("integrals of simple fields") {
  const auto g = SphGrid::for_band(8);
  CHECK(std::abs(integrate(sample(g, [](double, double) { return 1.0; })) - 4 * pi) < 1e-12);
  CHECK(std::abs(integrate(sample(g, [](double th, double) { return std::cos(th); }))) < 1e-12);
  CHECK(std::abs(integrate(sample(g, [](double th, double) { return std::cos(th) * std::cos(th); })) - 4 * pi / 3) <
        1e-10);
}

TEST_CASE("laplacian multipliers and symmetry") {
  const auto lap1 = laplacian(single(4, 1, -1));
  CHECK(lap1(1, -1) == doctest::Approx(-2.0));
  CHECK(laplacian(single(4, 0, 0))(0, 0) == 0.0);
  std::mt19937_64 rng(3);
  const auto g = SphGrid::for_band(10);
  const auto a = random_field(10, rng), b = random_field(10, rng);
  const double lhs = integrate(synthesize(laplacian(a), g) * synthesize(b, g));
  const double rhs = integrate(synthesize(a, g) * synthesize(laplacian(b), g));
  CHECK(std::abs(lhs - rhs) < 1e-10 * std::abs(lhs));
  CHECK(dot(a, laplacian(a)) <= 0.0);
}

TEST_CASE("smoothing cutoffs") {
  std::mt19937_64 rng(4);
  const auto c = random_field(8, rng);
  CHECK(max_abs(smooth(c, 7), c) == 0.0);  // 2^7 >= 72
  const auto s0 = smooth(c, 0);
  CHECK(s0(0, 0) == c(0, 0));
  for (int l = 1; l <= 8; ++l)
    for (int m = -l; m <= l; ++m) CHECK(s0(l, m) == 0.0);
  for (int j = 0; j < 8; ++j) CHECK(max_abs(smooth(smooth(c, j), j), smooth(c, j)) == 0.0);
  CHECK_THROWS_AS(smooth(c, -1), ValidationError);
}

TEST_CASE("sobolev norm values and monotonicity") {
  CHECK(sobolev_norm(single(4, 0, 0), 0.0) == doctest::Approx(1.0));
  CHECK(sobolev_norm(single(4, 1, 0), 1.0) == doctest::Approx(std::sqrt(3.0)));
  std::mt19937_64 rng(5);
  const auto c = random_field(8, rng);
  double prev = 0.0;
  for (double n = 0.0; n <= 6.0; n += 0.5) {
    const double v = sobolev_norm(c, n);
    CHECK(v >= prev);
    prev = v;
  }
}

TEST_CASE("derivatives of simple fields") {
  const auto g = SphGrid::for_band(8);
  auto [dt0, dp0] = differentiate(single(8, 0, 0, 3.0), g);
  CHECK(max_abs(dt0) < 1e-12);
  CHECK(max_abs(dp0) < 1e-12);
  const auto c = analyze(sample(g, [](double th, double) { return std::cos(th); }), 8);
  auto [dt, dp] = differentiate(c, g);
  CHECK(max_abs(dt, sample(g, [](double th, double) { return -std::sin(th); })) < 1e-10);
  CHECK(max_abs(dp) < 1e-10);
}

TEST_CASE("derivatives agree with finite differences of the expansion") {
  // Oracle: evaluate the expansion at shifted points through a rotated grid
  // offset, using 4th-order centered differences in theta and phi.
  std::mt19937_64 rng(6);
  const int L = 6;
  const auto c = random_field(L, rng);
  const double h = 1e-3;
  auto value = [&](double th, double ph) {
    double s = 0.0;
    for (int l = 0; l <= 2; ++l)
      for (int m = -l; m <= l; ++m) s += c(l, m) * ylm_closed(l, m, th, ph);
    return s;
  };
  SpectralField low(L);
  for (int l = 0; l <= 2; ++l)
    for (int m = -l; m <= l; ++m) low(l, m) = c(l, m);
  const auto g = SphGrid::for_band(L);
  auto [dt, dp] = differentiate(low, g);
  const auto jet = synthesize_jet(low, g);
  double err = 0.0, err2 = 0.0;
  for (int i = 0; i < g->nlat(); ++i)
    for (int j = 0; j < g->nlon(); ++j) {
      const double th = g->colatitudes()[i], ph = g->longitudes()[j];
      const double ft = (-value(th + 2 * h, ph) + 8 * value(th + h, ph) - 8 * value(th - h, ph) + value(th - 2 * h, ph)) /
                        (12 * h);
      const double fp = (-value(th, ph + 2 * h) + 8 * value(th, ph + h) - 8 * value(th, ph - h) + value(th, ph - 2 * h)) /
                        (12 * h);
      const double ftt = (-value(th + 2 * h, ph) + 16 * value(th + h, ph) - 30 * value(th, ph) + 16 * value(th - h, ph) -
                          value(th - 2 * h, ph)) /
                         (12 * h * h);
      const std::size_t k = g->node(i, j);
      err = std::max({err, std::abs(dt[k] - ft), std::abs(dp[k] - fp)});
      err2 = std::max(err2, std::abs(jet.dtt[k] - ftt));
    }
  CHECK(err < 1e-6);
  CHECK(err2 < 1e-5);
}

TEST_CASE("parallel transforms match the serial reference") {
  std::mt19937_64 rng(7);
  for (int L : {5, 12, 20}) {
    const auto g = SphGrid::for_band(L);
    const auto c = random_field(L, rng);
    const auto f = synthesize(c, g);
    CHECK(max_abs(f, serial::synthesize(c, g)) < 1e-12);
    CHECK(max_abs(analyze(f, L), serial::analyze(f, L)) < 1e-12);
    const auto a = synthesize_jet(c, g), b = serial::synthesize_jet(c, g);
    CHECK(max_abs(a.dt, b.dt) < 1e-11);
    CHECK(max_abs(a.dp, b.dp) < 1e-11);
    CHECK(max_abs(a.dtt, b.dtt) < 1e-10);
    CHECK(max_abs(a.dtp, b.dtp) < 1e-10);
    CHECK(max_abs(a.dpp, b.dpp) < 1e-10);
  }
}

TEST_CASE("resize pads and truncates") {
  std::mt19937_64 rng(8);
  const auto c = random_field(4, rng);
  const auto up = resize(c, 6);
  CHECK(max_abs(up, c) == 0.0);
  const auto down = resize(up, 2);
  CHECK(down(2, -2) == c(2, -2));
  CHECK(down.size() == 9);
}
