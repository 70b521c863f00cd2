#include <cmath>
#include <numbers>
#include <random>

#include <doctest.h>

#include "nmer/envs.hpp"
#include "nmer/error.hpp"

using namespace nmer;

TEST_CASE("linear params are stable with the requested radius") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto p = make_linear_params(4, 2, seed, 0.9);
    CHECK(spectral_radius(p.A) == doctest::Approx(0.9).epsilon(1e-9));
    CHECK(p.w.norm() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(p.b == 0.0);
  }
  CHECK(make_linear_params(3, 1, 7).A == make_linear_params(3, 1, 7).A);
  CHECK(spectral_radius((Matrix(2, 2) << 0.0, 2.0, -2.0, 0.0).finished()) ==
        doctest::Approx(2.0));
}

TEST_CASE("linear env step matches matrix algebra") {
  const auto p = make_linear_params(3, 2, 11);
  LinearEnv env(p);
  Rng rng(60);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int i = 0; i < 50; ++i) {
    const std::vector<double> s{g(rng), g(rng), g(rng)};
    const std::vector<double> a{g(rng), g(rng)};
    const auto res = env.step(s, a, rng);
    for (int r = 0; r < 3; ++r) {
      double want = 0.0;
      for (int c = 0; c < 3; ++c) want += p.A(r, c) * s[c];
      for (int c = 0; c < 2; ++c) want += p.B(r, c) * a[c];
      CHECK(res.s2[r] == doctest::Approx(want).epsilon(1e-13));
    }
    double rw = 0.0;
    for (int c = 0; c < 3; ++c) rw += p.w(c) * s[c];
    for (int c = 0; c < 2; ++c) rw += p.w(3 + c) * a[c];
    CHECK(res.r == doctest::Approx(rw).epsilon(1e-13));
    CHECK_FALSE(res.done);
  }
  CHECK(env.deterministic());
}

TEST_CASE("linear env noise has the configured spread") {
  auto p = make_linear_params(2, 1, 12);
  p.noise_sd = 0.3;
  LinearEnv env(p);
  CHECK_FALSE(env.deterministic());
  Rng rng(61);
  const std::vector<double> s{0.5, -0.5}, a{0.2};
  const auto clean = env.model(s, a);
  double ss = 0.0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    const auto res = env.step(s, a, rng);
    ss += (res.s2[0] - clean.s2[0]) * (res.s2[0] - clean.s2[0]);
  }
  CHECK(std::sqrt(ss / n) == doctest::Approx(0.3).epsilon(0.03));
}

TEST_CASE("pendulum matches an independent implementation") {
  PendulumEnv env;
  Rng rng(62);
  std::uniform_real_distribution<double> ang(-10.0, 10.0), spd(-9.0, 9.0), tq(-3.0, 3.0);
  for (int i = 0; i < 500; ++i) {
    const double th = ang(rng), thdot = spd(rng), u_raw = tq(rng);
    const std::vector<double> s{std::cos(th), std::sin(th), thdot};
    const auto res = env.step(s, std::vector<double>{u_raw}, rng);
    const double u = std::min(2.0, std::max(-2.0, u_raw));
    const double norm_th = std::remainder(th, 2.0 * std::numbers::pi);
    const double cost = norm_th * norm_th + 0.1 * thdot * thdot + 0.001 * u * u;
    double nd = thdot + (3.0 * 10.0 / 2.0 * std::sin(th) + 3.0 * u) * 0.05;
    nd = std::min(8.0, std::max(-8.0, nd));
    const double nth = th + nd * 0.05;
    CHECK(res.r == doctest::Approx(-cost).epsilon(1e-10));
    CHECK(res.s2[0] == doctest::Approx(std::cos(nth)).epsilon(1e-10));
    CHECK(res.s2[1] == doctest::Approx(std::sin(nth)).epsilon(1e-10));
    CHECK(res.s2[2] == doctest::Approx(nd).epsilon(1e-12));
    CHECK(res.r <= 0.0);
  }
}

TEST_CASE("pendulum rejects states off the circle") {
  PendulumEnv env;
  Rng rng(63);
  CHECK_THROWS_AS(env.step(std::vector<double>{0.5, 0.5, 0.0}, std::vector<double>{0.0}, rng),
                  InvalidInput);
  CHECK_NOTHROW(env.model(std::vector<double>{0.5, 0.5, 0.0}, std::vector<double>{0.0}));
}

TEST_CASE("pendulum resets cover the circle") {
  PendulumEnv env;
  Rng rng(64);
  double sum_c = 0.0, sum_s = 0.0, sum_v = 0.0, sum_v2 = 0.0;
  const int n = 40000;
  for (int i = 0; i < n; ++i) {
    const auto s = env.reset(rng);
    CHECK(std::abs(s[0] * s[0] + s[1] * s[1] - 1.0) < 1e-12);
    CHECK(std::abs(s[2]) <= 1.0);
    sum_c += s[0];
    sum_s += s[1];
    sum_v += s[2];
    sum_v2 += s[2] * s[2];
  }
  // cos and sin of a uniform angle have mean 0 and variance 1/2.
  const double tol = 4.0 * std::sqrt(0.5 / n);
  CHECK(std::abs(sum_c / n) < tol);
  CHECK(std::abs(sum_s / n) < tol);
  CHECK(std::abs(sum_v / n) < 4.0 * std::sqrt(1.0 / 3.0 / n));
  CHECK(sum_v2 / n == doctest::Approx(1.0 / 3.0).epsilon(0.02));
}

TEST_CASE("wrap angle") {
  CHECK(wrap_angle(0.0) == 0.0);
  CHECK(wrap_angle(2.0 * std::numbers::pi + 0.5) == doctest::Approx(0.5));
  CHECK(wrap_angle(-2.0 * std::numbers::pi - 0.5) == doctest::Approx(-0.5));
  CHECK(wrap_angle(std::numbers::pi) == doctest::Approx(-std::numbers::pi));
}

TEST_CASE("swing-up controller reaches and holds the top") {
  PendulumEnv env;
  SwingUpController ctl;
  Rng rng(65);
  for (int ep = 0; ep < 5; ++ep) {
    auto s = env.reset(rng);
    double tail = 0.0;
    for (int t = 0; t < 200; ++t) {
      const auto a = ctl.act(env.params(), s);
      CHECK(std::abs(a[0]) <= 2.0);
      auto res = env.step(s, a, rng);
      if (t >= 150) tail += res.r;
      s = res.s2;
    }
    CHECK(tail > -0.5);
  }
}
