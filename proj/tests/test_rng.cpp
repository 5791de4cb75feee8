#include <doctest.h>

#include <cmath>
#include <vector>

#include "rpi/rng.hpp"

using rpi::RngStream;

TEST_CASE("same key path gives the same sequence") {
  RngStream a(42, 3), b(42, 3);
  for (int i = 0; i < 100; ++i) CHECK(a.uniform() == b.uniform());
}

TEST_CASE("different stream ids differ") {
  RngStream a(42, 0), b(42, 1);
  int equal = 0;
  for (int i = 0; i < 100; ++i) equal += a.uniform() == b.uniform();
  CHECK(equal == 0);
}

TEST_CASE("child streams do not depend on parent consumption") {
  RngStream a(9);
  const RngStream c1 = a.child(5);
  for (int i = 0; i < 1000; ++i) a.uniform();
  RngStream c2 = a.child(5);
  RngStream c1m = c1;
  for (int i = 0; i < 50; ++i) CHECK(c1m.uniform() == c2.uniform());
}

TEST_CASE("child(i).child(j) differs from child(j).child(i)") {
  RngStream root(1);
  RngStream x = root.child(1).child(2);
  RngStream y = root.child(2).child(1);
  CHECK(x.uniform() != y.uniform());
}

TEST_CASE("uniform lies in the open unit interval with mean 1/2") {
  RngStream r(123);
  const int n = 200000;
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    const double u = r.uniform();
    REQUIRE(u > 0.0);
    REQUIRE(u < 1.0);
    sum += u;
  }
  const double sigma = std::sqrt(1.0 / 12.0 / n);
  CHECK(std::abs(sum / n - 0.5) < 4 * sigma);
}

TEST_CASE("exponential draws have mean 1/rate") {
  RngStream r(77);
  const int n = 200000;
  double sum = 0.0;
  for (int i = 0; i < n; ++i) sum += r.exponential(2.0);
  CHECK(std::abs(sum / n - 0.5) < 4 * 0.5 / std::sqrt(double(n)));
}
