#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "f2ocl/adam.hpp"
#include "f2ocl/errors.hpp"
#include "f2ocl/rng.hpp"

using namespace f2ocl;

TEST_CASE("first step moves every coordinate by almost exactly lr") {
  // With t=1 the bias corrections cancel: m_hat = g, v_hat = g^2, so the
  // update is lr * g / (|g| + eps) = lr * sign(g) up to eps rounding.
  AdamConfig cfg;
  Matrix p(2, 3);
  p.data = {1.0, -2.0, 3.0, 0.5, -0.25, 0.0};
  const std::vector<double> before = p.data;
  Matrix g(2, 3);
  g.data = {0.3, -0.7, 2.0, -0.01, 5.0, 1e-4};
  AdamSlot slot;

  adam_step(p, g, slot, cfg);
  CHECK(slot.t == 1);
  for (std::size_t i = 0; i < p.data.size(); ++i) {
    const double expected = before[i] - cfg.lr * (g.data[i] > 0 ? 1.0 : -1.0);
    CHECK(p.data[i] == doctest::Approx(expected).epsilon(1e-5));
  }
}

TEST_CASE("three steps reproduce the hand recurrence") {
  AdamConfig cfg;
  cfg.lr = 0.05;
  Matrix p(1, 2);
  p.data = {0.4, -1.2};
  AdamSlot slot;

  const std::vector<std::vector<double>> grads = {{0.5, -1.0}, {-0.2, 0.3}, {1.5, 0.0}};
  std::vector<double> m(2, 0.0), v(2, 0.0), ref = p.data;
  for (std::size_t t = 1; t <= grads.size(); ++t) {
    Matrix g(1, 2);
    g.data = grads[t - 1];
    adam_step(p, g, slot, cfg);
    for (std::size_t i = 0; i < 2; ++i) {
      m[i] = cfg.beta1 * m[i] + (1 - cfg.beta1) * g.data[i];
      v[i] = cfg.beta2 * v[i] + (1 - cfg.beta2) * g.data[i] * g.data[i];
      const double mh = m[i] / (1 - std::pow(cfg.beta1, static_cast<double>(t)));
      const double vh = v[i] / (1 - std::pow(cfg.beta2, static_cast<double>(t)));
      ref[i] -= cfg.lr * mh / (std::sqrt(vh) + cfg.eps);
      CHECK(p.data[i] == doctest::Approx(ref[i]).epsilon(1e-14));
    }
  }
  CHECK(slot.t == 3);
}

TEST_CASE("zero gradient leaves parameters in place on the first step") {
  AdamConfig cfg;
  Matrix p(1, 3);
  p.data = {1.0, 2.0, 3.0};
  Matrix g(1, 3);  // zeros
  AdamSlot slot;
  adam_step(p, g, slot, cfg);
  CHECK(p.data == std::vector<double>{1.0, 2.0, 3.0});
}

TEST_CASE("shape mismatch and non-finite gradients are rejected") {
  AdamConfig cfg;
  Matrix p(2, 2);
  Matrix bad(1, 2);
  AdamSlot slot;
  CHECK_THROWS_AS(adam_step(p, bad, slot, cfg), Error);

  Matrix g(2, 2);
  g.data[3] = std::nan("");
  try {
    adam_step(p, g, slot, cfg);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::numeric);
  }
}

TEST_CASE("slots are independent per parameter") {
  AdamConfig cfg;
  Matrix a(1, 1), b(1, 1);
  a.data = {1.0};
  b.data = {1.0};
  Matrix g(1, 1);
  g.data = {1.0};
  AdamSlot sa, sb;
  adam_step(a, g, sa, cfg);
  adam_step(a, g, sa, cfg);
  adam_step(b, g, sb, cfg);
  CHECK(sa.t == 2);
  CHECK(sb.t == 1);
  CHECK(a.data[0] != b.data[0]);
}
