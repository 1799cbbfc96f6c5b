#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "rockfrag/error.hpp"
#include "rockfrag/swebrec.hpp"

using namespace rockfrag;

namespace {

const SwebrecParams kReference{27.53, 17.84, 2.79};

std::vector<SizePoint> reference_points() {
  return {{4.00, 0.0042}, {9.53, 0.0854}, {12.70, 0.1622}, {19.05, 0.6129}};
}

SwebrecParams random_params(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> x50(1.0, 200.0), ratio(1.05, 5.0), b(0.5, 5.0);
  const double m = x50(rng);
  return {m * ratio(rng), m, b(rng)};
}

}  // namespace

TEST_CASE("evaluate at the anchors") {
  CHECK(swebrec::evaluate(kReference, kReference.x_50) == 0.5);
  CHECK(swebrec::evaluate(kReference, kReference.x_max) == 1.0);
  CHECK(swebrec::evaluate(kReference, 2.0 * kReference.x_max) == 1.0);
  // 1 / (1 + (ln(27.53/19.05) / ln(27.53/17.84))^2.79), evaluated independently
  CHECK(std::abs(swebrec::evaluate(kReference, 19.05) - 0.6124410134) < 1e-9);
  CHECK_THROWS_AS(swebrec::evaluate(kReference, 0.0), InputError);
  CHECK_THROWS_AS(swebrec::evaluate(SwebrecParams{10.0, 20.0, 2.0}, 5.0), InputError);
}

TEST_CASE("closed-form inversion") {
  CHECK(swebrec::invert(kReference, 0.5) == doctest::Approx(kReference.x_50).epsilon(1e-15));
  CHECK(std::abs(swebrec::invert(kReference, 0.8) - 21.14) < 0.005);
  CHECK(std::abs(swebrec::invert(kReference, 0.2) - 13.49) < 0.005);
  CHECK_THROWS_AS(swebrec::invert(kReference, 0.0), InputError);
  CHECK_THROWS_AS(swebrec::invert(kReference, 1.0), InputError);
}

TEST_CASE("mass-fraction sampling") {
  CHECK(swebrec::sample_size(kReference, 0.5) == doctest::Approx(kReference.x_50));
  CHECK(std::abs(swebrec::sample_size(kReference, 0.8) - 21.14) < 0.005);
  CHECK(swebrec::sample_size(kReference, 1.0 - 1e-12) == doctest::Approx(kReference.x_max).epsilon(1e-3));
  CHECK_THROWS_AS(swebrec::sample_size(kReference, 1.0), InputError);
}

TEST_CASE("evaluate is strictly increasing below x_max") {
  std::mt19937_64 rng(3);
  for (int k = 0; k < 50; ++k) {
    const auto p = random_params(rng);
    double prev = 0.0;
    for (int i = 1; i < 200; ++i) {
      const double x = p.x_max * (0.01 + 0.989 * i / 200.0);
      const double v = swebrec::evaluate(p, x);
      CHECK(v > prev);
      prev = v;
    }
  }
}

TEST_CASE("analytic gradient matches central differences") {
  std::mt19937_64 rng(11);
  for (int k = 0; k < 200; ++k) {
    const auto p = random_params(rng);
    const double x = p.x_max * std::uniform_real_distribution<double>(0.05, 0.95)(rng);
    const auto g = swebrec::gradient(p, x);
    const auto u = swebrec::to_unconstrained(p);
    for (int j = 0; j < 3; ++j) {
      const double h = 1e-6;
      auto up = u, dn = u;
      up[j] += h;
      dn[j] -= h;
      const double fd = (swebrec::evaluate(swebrec::from_unconstrained(up), x) -
                         swebrec::evaluate(swebrec::from_unconstrained(dn), x)) /
                        (2 * h);
      CHECK(std::abs(g[j] - fd) <= 1e-5 * std::max(std::abs(fd), 1e-3));
    }
  }
}

TEST_CASE("fit to the sieve points") {
  const auto r = swebrec::fit(reference_points());
  CHECK(r.converged);
  CHECK(std::abs(r.params.x_max - 27.53) < 0.5);
  CHECK(std::abs(r.params.x_50 - 17.84) < 0.3);
  CHECK(std::abs(r.params.b - 2.79) < 0.2);
  CHECK(r.residual_rms < 0.02);
}

TEST_CASE("noise-free recovery") {
  std::mt19937_64 rng(5);
  for (int k = 0; k < 20; ++k) {
    const auto truth = random_params(rng);
    std::vector<SizePoint> pts;
    for (double f : {0.2, 0.35, 0.5, 0.65, 0.8, 0.9})
      pts.push_back({truth.x_max * f, swebrec::evaluate(truth, truth.x_max * f)});
    const auto r = swebrec::fit(pts);
    CHECK(r.converged);
    CHECK(r.params.x_max == doctest::Approx(truth.x_max).epsilon(1e-4));
    CHECK(r.params.x_50 == doctest::Approx(truth.x_50).epsilon(1e-4));
    CHECK(r.params.b == doctest::Approx(truth.b).epsilon(1e-4));
    CHECK(r.residual_rms < 1e-8);
  }
}

TEST_CASE("recovery under passing noise") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> noise(-0.005, 0.005);
  for (int k = 0; k < 50; ++k) {
    std::vector<SizePoint> pts;
    for (double x : {6.0, 9.53, 12.7, 15.0, 17.0, 19.05, 21.0, 23.0, 25.0})
      pts.push_back({x, std::clamp(swebrec::evaluate(kReference, x) + noise(rng), 1e-4, 1.0)});
    const auto r = swebrec::fit(pts);
    CHECK(r.params.x_50 == doctest::Approx(kReference.x_50).epsilon(0.03));
  }
}

TEST_CASE("fit is scale-equivariant") {
  const auto base = swebrec::fit(reference_points());
  for (double k : {0.1, 2.5, 40.0}) {
    auto pts = reference_points();
    for (auto& p : pts) p.size_mm *= k;
    const auto r = swebrec::fit(pts);
    CHECK(r.params.x_max == doctest::Approx(k * base.params.x_max).epsilon(1e-6));
    CHECK(r.params.x_50 == doctest::Approx(k * base.params.x_50).epsilon(1e-6));
    CHECK(r.params.b == doctest::Approx(base.params.b).epsilon(1e-6));
  }
}

TEST_CASE("fit preconditions") {
  CHECK_THROWS_AS(swebrec::fit(std::vector<SizePoint>{{1.0, 0.2}, {2.0, 0.5}}), InputError);
  CHECK_THROWS_AS(swebrec::fit(std::vector<SizePoint>{{1.0, 0.5}, {2.0, 0.5}, {3.0, 0.5}}), InputError);
  CHECK_THROWS_AS(swebrec::fit(std::vector<SizePoint>{{1.0, 0.2}, {1.0, 0.3}, {3.0, 0.5}}), InputError);
  CHECK_THROWS_AS(swebrec::fit(std::vector<SizePoint>{{1.0, 0.0}, {2.0, 0.3}, {3.0, 0.5}}), InputError);
}

TEST_CASE("characteristic sizes from parameters are ordered") {
  const auto s = swebrec::characteristic_sizes(kReference);
  CHECK(s.p20 < s.p50);
  CHECK(s.p50 < s.p80);
  CHECK(s.p50 == doctest::Approx(kReference.x_50));
}
