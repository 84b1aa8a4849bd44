#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "presparse/rng.hpp"

using namespace presparse;

TEST_CASE("splitmix64 streams are pure functions of the seed") {
  SplitMix64 a(42), b(42), c(43);
  bool all_equal = true;
  bool any_differs = false;
  for (int i = 0; i < 1000; ++i) {
    const auto va = a.next();
    all_equal &= va == b.next();
    any_differs |= va != c.next();
  }
  CHECK(all_equal);
  CHECK(any_differs);
}

TEST_CASE("unit doubles stay in [0, 1)") {
  SplitMix64 rng(7);
  for (int i = 0; i < 10000; ++i) {
    const double u = rng.next_unit();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
  }
}

TEST_CASE("bounded draws cover the range uniformly enough") {
  SplitMix64 rng(11);
  std::vector<int> counts(8, 0);
  const int draws = 80000;
  for (int i = 0; i < draws; ++i) counts[rng.next_below(8)]++;
  for (int bucket : counts) {
    CHECK(bucket > draws / 8 - 600);
    CHECK(bucket < draws / 8 + 600);
  }
}

TEST_CASE("shuffle permutes without losing elements") {
  SplitMix64 rng(3);
  std::vector<int> values(257);
  std::iota(values.begin(), values.end(), 0);
  auto shuffled = values;
  rng.shuffle(shuffled);
  CHECK(shuffled != values);
  std::sort(shuffled.begin(), shuffled.end());
  CHECK(shuffled == values);
}

TEST_CASE("gaussian moments are roughly standard") {
  SplitMix64 rng(5);
  const int n = 200000;
  double sum = 0, sum_sq = 0;
  for (int i = 0; i < n; ++i) {
    const double g = rng.next_gaussian();
    sum += g;
    sum_sq += g * g;
  }
  const double mean = sum / n;
  const double var = sum_sq / n - mean * mean;
  CHECK(std::abs(mean) < 0.01);
  CHECK(std::abs(var - 1.0) < 0.02);
}

TEST_CASE("derived streams differ from each other and the base") {
  SplitMix64 base(99);
  SplitMix64 s0(derive_stream(99, 0));
  SplitMix64 s1(derive_stream(99, 1));
  CHECK(derive_stream(99, 0) != derive_stream(99, 1));
  CHECK(base.next() != s0.next());
  CHECK(s0.next() != s1.next());
  CHECK(derive_stream(99, 0) == derive_stream(99, 0));
}
