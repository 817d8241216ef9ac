#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "f2ocl/matrix.hpp"
#include "f2ocl/rng.hpp"

using namespace f2ocl;

TEST_CASE("counter rng is a pure function of seed, stream, and index") {
  CounterRng a(42, stream_id(1, 2));
  CounterRng b(42, stream_id(1, 2));
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());

  CounterRng c(42, stream_id(1, 3));
  CounterRng d(43, stream_id(1, 2));
  CHECK(CounterRng(42, stream_id(1, 2)).next_u64() != c.next_u64());
  CHECK(CounterRng(42, stream_id(1, 2)).next_u64() != d.next_u64());
}

TEST_CASE("next_unit stays in (0, 1]") {
  CounterRng rng(7, 0);
  for (int i = 0; i < 10000; ++i) {
    const double u = rng.next_unit();
    CHECK(u > 0.0);
    CHECK(u <= 1.0);
  }
}

TEST_CASE("gaussian draws have roughly unit scale") {
  CounterRng rng(11, 5);
  double sum = 0.0, sumsq = 0.0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    const double g = rng.next_gaussian();
    sum += g;
    sumsq += g * g;
  }
  const double mean = sum / n;
  const double var = sumsq / n - mean * mean;
  CHECK(std::abs(mean) < 0.05);
  CHECK(std::abs(var - 1.0) < 0.05);
}

TEST_CASE("matmul against a hand-computed product") {
  Matrix a(2, 3);
  a.data = {1, 2, 3, 4, 5, 6};
  Matrix b(3, 2);
  b.data = {7, 8, 9, 10, 11, 12};
  const Matrix c = matmul(a, b);
  CHECK(c.rows == 2);
  CHECK(c.cols == 2);
  CHECK(c.at(0, 0) == doctest::Approx(58));
  CHECK(c.at(0, 1) == doctest::Approx(64));
  CHECK(c.at(1, 0) == doctest::Approx(139));
  CHECK(c.at(1, 1) == doctest::Approx(154));
}

TEST_CASE("matmul_nt and matmul_tn match explicit transposition") {
  CounterRng rng(3, 1);
  Matrix a(4, 3), b(5, 3), bt(3, 5);
  for (double& v : a.data) v = rng.next_gaussian();
  for (std::size_t i = 0; i < b.rows; ++i) {
    for (std::size_t j = 0; j < b.cols; ++j) {
      b.at(i, j) = rng.next_gaussian();
      bt.at(j, i) = b.at(i, j);
    }
  }
  const Matrix via_nt = matmul_nt(a, b);
  const Matrix direct = matmul(a, bt);
  REQUIRE(via_nt.same_shape(direct));
  for (std::size_t i = 0; i < direct.data.size(); ++i)
    CHECK(via_nt.data[i] == doctest::Approx(direct.data[i]));

  Matrix c(4, 2);
  for (double& v : c.data) v = rng.next_gaussian();
  Matrix at(3, 4);
  for (std::size_t i = 0; i < a.rows; ++i)
    for (std::size_t j = 0; j < a.cols; ++j) at.at(j, i) = a.at(i, j);
  const Matrix via_tn = matmul_tn(a, c);
  const Matrix direct_tn = matmul(at, c);
  REQUIRE(via_tn.same_shape(direct_tn));
  for (std::size_t i = 0; i < direct_tn.data.size(); ++i)
    CHECK(via_tn.data[i] == doctest::Approx(direct_tn.data[i]));
}

TEST_CASE("cosine similarity basics") {
  std::vector<double> x{1, 0}, y{0, 1}, z{2, 0}, zero{0, 0};
  CHECK(cosine_similarity(x, y) == doctest::Approx(0.0));
  CHECK(cosine_similarity(x, z) == doctest::Approx(1.0));
  CHECK(cosine_similarity(x, zero) == 0.0);
  CHECK(l2_norm(normalized(std::vector<double>{3, 4})) == doctest::Approx(1.0));
}
