#include <doctest.h>

#include <cmath>
#include <set>
#include <vector>

#include "rng.hpp"

using namespace subqba;

TEST_CASE("streams are deterministic and keyed") {
  RngStream a(key_combine(42, "node"));
  RngStream b(key_combine(42, "node"));
  for (int i = 0; i < 100; ++i) CHECK(a.next() == b.next());

  RngStream c(key_combine(42, "fmine"));
  RngStream d(key_combine(43, "node"));
  std::set<uint64_t> firsts{RngStream(key_combine(42, "node")).next(), c.next(), d.next()};
  CHECK(firsts.size() == 3);
}

TEST_CASE("adding a consumer never perturbs another stream") {
  RngStream solo(key_combine(7, "adv"));
  std::vector<uint64_t> expect;
  for (int i = 0; i < 32; ++i) expect.push_back(solo.next());

  RngStream again(key_combine(7, "adv"));
  RngStream interloper(key_combine(7, "input"));
  std::vector<uint64_t> got;
  for (int i = 0; i < 32; ++i) {
    interloper.next();
    got.push_back(again.next());
  }
  CHECK(got == expect);
}

TEST_CASE("unit draws and bernoulli are sane") {
  RngStream s(key_combine(1, "x"));
  int heads = 0;
  const int trials = 100000;
  for (int i = 0; i < trials; ++i) {
    const double u = s.next_unit();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    if (u < 0.25) ++heads;
  }
  CHECK(std::abs(heads / double(trials) - 0.25) < 0.01);
}

TEST_CASE("below stays in range and covers values") {
  RngStream s(key_combine(5, "b"));
  std::set<uint32_t> seen;
  for (int i = 0; i < 1000; ++i) {
    const uint32_t v = s.below(7);
    CHECK(v < 7);
    seen.insert(v);
  }
  CHECK(seen.size() == 7);
}
