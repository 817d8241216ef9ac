#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "f2ocl/errors.hpp"
#include "f2ocl/matrix.hpp"
#include "f2ocl/ncm.hpp"
#include "f2ocl/rng.hpp"
#include "helpers/test_util.hpp"

using namespace f2ocl;

TEST_CASE("store stays sorted and placeholders start at count zero") {
  PrototypeStore store;
  const std::vector<double> z = {1.0, 2.0};
  for (int c : {5, 1, 3}) create_prototype(store, c, z);
  CHECK(store.prototypes[0].class_id == 1);
  CHECK(store.prototypes[1].class_id == 3);
  CHECK(store.prototypes[2].class_id == 5);
  CHECK(store.prototypes[0].mu == z);
  CHECK(store.prototypes[0].count == 0);
  CHECK_THROWS_AS(create_prototype(store, 3, z), Error);
  CHECK(find_prototype(store, 9) == nullptr);
}

TEST_CASE("placeholder carries no weight into the first update") {
  PrototypeStore store;
  Prototype& p = create_prototype(store, 0, std::vector<double>{100.0, -100.0});
  update_prototype(p, {{2.0, 4.0}, {4.0, 8.0}});
  CHECK(p.mu[0] == doctest::Approx(3.0));
  CHECK(p.mu[1] == doctest::Approx(6.0));
  CHECK(p.count == 2);
}

TEST_CASE("running mean folds match the hand example") {
  // n=2 with mu=(1,1); one new embedding (4,4) -> mu'=(2,2), n=3.
  Prototype p;
  p.class_id = 0;
  p.mu = {1.0, 1.0};
  p.count = 2;
  update_prototype(p, {{4.0, 4.0}});
  CHECK(p.mu == std::vector<double>{2.0, 2.0});
  CHECK(p.count == 3);
}

TEST_CASE("incremental folds equal the full-batch mean exactly on random data") {
  CounterRng rng(17, 0);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<std::vector<double>> all;
    for (int i = 0; i < 12; ++i) all.push_back(testutil::random_vector(rng, 4));

    Prototype incremental;
    incremental.class_id = 0;
    incremental.mu = testutil::random_vector(rng, 4);  // arbitrary placeholder
    incremental.count = 0;
    // fold in three uneven batches: 3, 4, 5
    update_prototype(incremental, {all.begin(), all.begin() + 3});
    update_prototype(incremental, {all.begin() + 3, all.begin() + 7});
    update_prototype(incremental, {all.begin() + 7, all.end()});

    std::vector<double> mean(4, 0.0);
    for (const std::vector<double>& z : all)
      for (std::size_t j = 0; j < 4; ++j) mean[j] += z[j] / 12.0;
    CHECK(incremental.count == 12);
    for (std::size_t j = 0; j < 4; ++j)
      CHECK(incremental.mu[j] == doctest::Approx(mean[j]).epsilon(1e-12));
  }
}

TEST_CASE("update rejects empty batches and dimension mismatches") {
  Prototype p;
  p.mu = {0.0, 0.0};
  CHECK_THROWS_AS(update_prototype(p, {}), Error);
  try {
    update_prototype(p, {{1.0, 2.0, 3.0}});
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::input);
  }
}

TEST_CASE("predict matches brute-force cosine scan") {
  CounterRng rng(21, 0);
  PrototypeStore store;
  for (int c = 0; c < 10; ++c) create_prototype(store, c, testutil::random_vector(rng, 6));

  for (int trial = 0; trial < 1000; ++trial) {
    const std::vector<double> z = testutil::random_vector(rng, 6);
    int best = -1;
    double best_cos = -2.0;
    for (const Prototype& p : store.prototypes) {
      const double c = cosine_similarity(z, p.mu);
      if (c > best_cos) {
        best_cos = c;
        best = p.class_id;
      }
    }
    CHECK(predict(store, z) == best);
  }
}

TEST_CASE("predict ties go to the smaller class id") {
  PrototypeStore store;
  create_prototype(store, 8, std::vector<double>{0.0, 3.0});
  create_prototype(store, 2, std::vector<double>{0.0, 1.0});  // same direction, same cosine
  CHECK(predict(store, std::vector<double>{0.0, 5.0}) == 2);

  PrototypeStore empty;
  CHECK_THROWS_AS(static_cast<void>(predict(empty, std::vector<double>{1.0, 0.0})), Error);
}
