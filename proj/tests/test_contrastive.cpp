#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <vector>

#include "f2ocl/contrastive.hpp"
#include "f2ocl/errors.hpp"
#include "f2ocl/matrix.hpp"
#include "f2ocl/ncm.hpp"
#include "f2ocl/rng.hpp"
#include "helpers/test_util.hpp"

using namespace f2ocl;

namespace {

// Naive re-statement of the per-anchor loss, written directly from the
// definition with no shared code and no stabilization. Test values keep
// |cos|/tau small enough that raw exponentials are exact.
double oracle_anchor_loss(std::size_t i, const std::vector<AnchorView>& batch,
                          const PrototypeStore& protos,
                          const std::map<int, LossWeights>& weights, double tau) {
  const AnchorView& a = batch[i];
  double gamma1 = 0.0, gamma2 = 0.0;
  std::vector<std::size_t> positives;
  for (std::size_t j = 0; j < batch.size(); ++j) {
    if (j == i) continue;
    if (batch[j].class_id == a.class_id) {
      positives.push_back(j);
      continue;
    }
    const Prototype* pj = find_prototype(protos, batch[j].class_id);
    gamma1 += std::exp(cosine_similarity(a.z, pj->mu) / tau);
    gamma2 += std::exp(cosine_similarity(a.z, batch[j].z) / tau);
  }

  const LossWeights w = weights.at(a.class_id);
  const Prototype* own = find_prototype(protos, a.class_id);
  const double e1 = std::exp(cosine_similarity(a.z, own->mu) / tau);
  double loss = -w.alpha * std::log(e1 / (e1 + gamma1));
  if (!positives.empty()) {
    double pos_denom = 0.0;
    for (std::size_t j : positives)
      pos_denom += std::exp(cosine_similarity(a.z, batch[j].z) / tau);
    double sum_logs = 0.0;
    for (std::size_t j : positives)
      sum_logs += std::log(std::exp(cosine_similarity(a.z, batch[j].z) / tau) /
                           (pos_denom + gamma2));
    loss -= w.beta / static_cast<double>(positives.size()) * sum_logs;
  }
  return loss;
}

double oracle_batch_loss(const std::vector<AnchorView>& batch, const PrototypeStore& protos,
                         const std::map<int, LossWeights>& weights, double tau) {
  double total = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i)
    total += oracle_anchor_loss(i, batch, protos, weights, tau);
  return total / static_cast<double>(batch.size());
}

struct Instance {
  std::vector<AnchorView> batch;
  PrototypeStore protos;
  std::map<int, LossWeights> weights;
};

Instance random_instance(CounterRng& rng, std::size_t m, std::size_t dim, int num_classes) {
  Instance inst;
  for (std::size_t i = 0; i < m; ++i) {
    AnchorView a;
    a.class_id = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(num_classes)));
    a.z = testutil::random_vector(rng, dim);
    inst.batch.push_back(std::move(a));
  }
  for (int c = 0; c < num_classes; ++c) {
    create_prototype(inst.protos, c, testutil::random_vector(rng, dim));
    const double alpha = rng.next_unit();
    inst.weights[c] = LossWeights{alpha, 1.0 - alpha};
  }
  return inst;
}

}  // namespace

TEST_CASE("class_weights follow the count ratio") {
  LossWeights w = class_weights(0, 10);
  CHECK(w.alpha == 0.0);
  CHECK(w.beta == 1.0);
  w = class_weights(30, 10);
  CHECK(w.alpha == doctest::Approx(0.75));
  CHECK(w.beta == doctest::Approx(0.25));
  CHECK(w.alpha + w.beta == doctest::Approx(1.0));
}

TEST_CASE("per-anchor loss matches the naive oracle on random batches") {
  CounterRng rng(31, 0);
  for (int trial = 0; trial < 100; ++trial) {
    const Instance inst = random_instance(rng, 6, 5, 3);
    const double tau = 0.15 + 0.3 * rng.next_unit();
    for (std::size_t i = 0; i < inst.batch.size(); ++i) {
      const double got = loss_for_anchor(i, inst.batch, inst.protos, inst.weights, tau);
      const double want = oracle_anchor_loss(i, inst.batch, inst.protos, inst.weights, tau);
      CHECK(testutil::rel_err(got, want) < 1e-10);
    }
  }
}

TEST_CASE("batch loss is the mean of anchor losses") {
  CounterRng rng(32, 0);
  const Instance inst = random_instance(rng, 8, 4, 3);
  const double tau = 0.2;
  const BatchLossResult res =
      batch_loss_and_embedding_grads(inst.batch, inst.protos, inst.weights, tau);
  CHECK(testutil::rel_err(res.loss, oracle_batch_loss(inst.batch, inst.protos, inst.weights, tau)) <
        1e-10);
  REQUIRE(res.dz.size() == inst.batch.size());
}

TEST_CASE("embedding gradients match finite differences, cross terms included") {
  CounterRng rng(33, 0);
  for (int trial = 0; trial < 10; ++trial) {
    Instance inst = random_instance(rng, 6, 5, 3);
    const double tau = 0.2;
    const BatchLossResult res =
        batch_loss_and_embedding_grads(inst.batch, inst.protos, inst.weights, tau);

    auto full_loss = [&] { return oracle_batch_loss(inst.batch, inst.protos, inst.weights, tau); };
    for (std::size_t i = 0; i < inst.batch.size(); ++i) {
      for (std::size_t d = 0; d < inst.batch[i].z.size(); ++d) {
        const double fd = testutil::central_diff(full_loss, inst.batch[i].z[d]);
        CHECK(testutil::rel_err(res.dz[i][d], fd) < 1e-4);
      }
    }
  }
}

TEST_CASE("loss is scale invariant and gradients are tangent to each embedding") {
  CounterRng rng(34, 0);
  Instance inst = random_instance(rng, 6, 5, 3);
  const double tau = 0.2;
  const BatchLossResult res =
      batch_loss_and_embedding_grads(inst.batch, inst.protos, inst.weights, tau);
  const double before = res.loss;

  for (std::size_t i = 0; i < inst.batch.size(); ++i) {
    // d/dt L(t * z_i) = 0 at t = 1, so grad . z = 0
    CHECK(std::abs(dot(res.dz[i], inst.batch[i].z)) < 1e-10);
  }

  for (double& v : inst.batch[2].z) v *= 7.5;
  for (double& v : inst.batch[4].z) v *= 0.013;
  const BatchLossResult scaled =
      batch_loss_and_embedding_grads(inst.batch, inst.protos, inst.weights, tau);
  CHECK(testutil::rel_err(scaled.loss, before) < 1e-10);
}

TEST_CASE("permuting the batch permutes the gradients and keeps the loss") {
  CounterRng rng(35, 0);
  const Instance inst = random_instance(rng, 6, 4, 3);
  const double tau = 0.25;
  const BatchLossResult base =
      batch_loss_and_embedding_grads(inst.batch, inst.protos, inst.weights, tau);

  const std::vector<std::size_t> perm = {3, 0, 5, 1, 4, 2};
  Instance shuffled = inst;
  for (std::size_t i = 0; i < perm.size(); ++i) shuffled.batch[i] = inst.batch[perm[i]];
  const BatchLossResult permuted =
      batch_loss_and_embedding_grads(shuffled.batch, shuffled.protos, shuffled.weights, tau);

  CHECK(testutil::rel_err(permuted.loss, base.loss) < 1e-12);
  for (std::size_t i = 0; i < perm.size(); ++i) {
    for (std::size_t d = 0; d < base.dz[0].size(); ++d)
      CHECK(permuted.dz[i][d] == doctest::Approx(base.dz[perm[i]][d]).epsilon(1e-12));
  }
}

TEST_CASE("single-class batch with alpha=1 has exactly zero loss and gradient") {
  // No negatives -> L1 = 1 identically; beta = 0 kills the pair term.
  CounterRng rng(36, 0);
  std::vector<AnchorView> batch;
  for (int i = 0; i < 4; ++i) batch.push_back({0, testutil::random_vector(rng, 5)});
  PrototypeStore protos;
  create_prototype(protos, 0, testutil::random_vector(rng, 5));
  const std::map<int, LossWeights> weights = {{0, LossWeights{1.0, 0.0}}};

  const BatchLossResult res = batch_loss_and_embedding_grads(batch, protos, weights, 0.2);
  CHECK(res.loss == 0.0);
  for (const std::vector<double>& g : res.dz)
    for (double v : g) CHECK(v == 0.0);
}

TEST_CASE("anchor with no positives drops the pair term") {
  CounterRng rng(37, 0);
  std::vector<AnchorView> batch = {{0, testutil::random_vector(rng, 4)},
                                   {1, testutil::random_vector(rng, 4)},
                                   {1, testutil::random_vector(rng, 4)}};
  PrototypeStore protos;
  create_prototype(protos, 0, testutil::random_vector(rng, 4));
  create_prototype(protos, 1, testutil::random_vector(rng, 4));
  std::map<int, LossWeights> weights = {{0, {0.3, 0.7}}, {1, {0.5, 0.5}}};

  const double tau = 0.2;
  const double got = loss_for_anchor(0, batch, protos, weights, tau);
  // By hand: only the prototype contrast term survives for anchor 0.
  const double s1 = std::exp(cosine_similarity(batch[0].z, find_prototype(protos, 0)->mu) / tau);
  const double g1 = std::exp(cosine_similarity(batch[0].z, find_prototype(protos, 1)->mu) / tau) +
                    std::exp(cosine_similarity(batch[0].z, find_prototype(protos, 1)->mu) / tau);
  CHECK(got == doctest::Approx(-0.3 * std::log(s1 / (s1 + g1))).epsilon(1e-12));
}

TEST_CASE("negative prototypes count once per sample, not once per class") {
  // Two negative samples of the same class must double that prototype's
  // weight in the contrast denominator.
  CounterRng rng(38, 0);
  const std::vector<double> anchor_z = testutil::random_vector(rng, 4);
  std::vector<AnchorView> batch = {{0, anchor_z},
                                   {1, testutil::random_vector(rng, 4)},
                                   {1, testutil::random_vector(rng, 4)}};
  PrototypeStore protos;
  create_prototype(protos, 0, testutil::random_vector(rng, 4));
  create_prototype(protos, 1, testutil::random_vector(rng, 4));
  std::map<int, LossWeights> weights = {{0, {1.0, 0.0}}, {1, {0.5, 0.5}}};

  const double tau = 0.2;
  const double s1 = std::exp(cosine_similarity(anchor_z, find_prototype(protos, 0)->mu) / tau);
  const double per_sample =
      std::exp(cosine_similarity(anchor_z, find_prototype(protos, 1)->mu) / tau);
  const double expected = -std::log(s1 / (s1 + 2.0 * per_sample));
  CHECK(loss_for_anchor(0, batch, protos, weights, tau) ==
        doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("zero-norm embeddings are a numeric error, zero-norm prototypes are not") {
  std::vector<AnchorView> batch = {{0, {0.0, 0.0}}, {1, {1.0, 0.0}}};
  PrototypeStore protos;
  create_prototype(protos, 0, std::vector<double>{1.0, 1.0});
  create_prototype(protos, 1, std::vector<double>{0.5, -0.5});
  std::map<int, LossWeights> weights = {{0, {0.5, 0.5}}, {1, {0.5, 0.5}}};
  try {
    static_cast<void>(batch_loss_and_embedding_grads(batch, protos, weights, 0.2));
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::numeric);
  }

  // A zero prototype contributes cos = 0 everywhere; the loss stays finite
  // and matches the oracle (which shares the cosine convention).
  batch[0].z = {0.3, 0.9};
  find_prototype(protos, 1)->mu = {0.0, 0.0};
  const BatchLossResult res = batch_loss_and_embedding_grads(batch, protos, weights, 0.2);
  CHECK(std::isfinite(res.loss));
  CHECK(testutil::rel_err(res.loss, oracle_batch_loss(batch, protos, weights, 0.2)) < 1e-12);
}
