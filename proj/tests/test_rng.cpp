#include <catch2/catch_amalgamated.hpp>

#include "speclab/rng.hpp"
#include "speclab/stats.hpp"

using namespace speclab;

TEST_CASE("keyed draws are deterministic and key-sensitive") {
  auto a = rng::keyed(42, 1, 2, 3);
  auto b = rng::keyed(42, 1, 2, 3);
  REQUIRE(a == b);
  REQUIRE(rng::keyed(42, 1, 2, 4) != a);
  REQUIRE(rng::keyed(43, 1, 2, 3) != a);
}

TEST_CASE("unit draws live in [0,1) with mean 1/2") {
  RunningMean acc;
  for (int i = 0; i < 10000; ++i) {
    double u = rng::uniform01(7, 0, static_cast<std::uint64_t>(i));
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    acc.add(u);
  }
  REQUIRE(std::abs(acc.mean() - 0.5) < 0.02);
}

TEST_CASE("streams replay identically") {
  rng::Stream s1(99, 5);
  rng::Stream s2(99, 5);
  for (int i = 0; i < 100; ++i) REQUIRE(s1.next_bits() == s2.next_bits());
}

TEST_CASE("wilson interval brackets the estimate") {
  auto ci = wilson_interval(3, 2000);
  REQUIRE(ci.lower <= ci.estimate);
  REQUIRE(ci.estimate <= ci.upper);
  REQUIRE(ci.center > 0.0);
  auto zero = wilson_interval(0, 2000);
  REQUIRE(zero.center > 0.0);  // defined even with no hits
  REQUIRE(zero.estimate == 0.0);
}

TEST_CASE("binomial cdf matches a direct small case") {
  // Bin(4, 1/2): P{X <= 1} = (1 + 4)/16
  REQUIRE(binomial_cdf(4, 0.5, 1) == Catch::Approx(5.0 / 16.0).epsilon(1e-12));
  REQUIRE(binomial_cdf(4, 0.5, 4) == Catch::Approx(1.0));
  REQUIRE(binomial_cdf(4, 0.5, -1) == 0.0);
}

TEST_CASE("line fit recovers an exact line") {
  std::vector<double> x{1.0, 2.0, 3.0, 4.0};
  std::vector<double> y{0.5, 2.5, 4.5, 6.5};
  auto f = fit_line(x, y);
  REQUIRE(f.slope == Catch::Approx(2.0).margin(1e-12));
  REQUIRE(f.intercept == Catch::Approx(-1.5).margin(1e-12));
  REQUIRE(f.residual < 1e-12);
}
