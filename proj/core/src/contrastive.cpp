#include "f2ocl/contrastive.hpp"

#include <algorithm>
#include <cmath>

#include "f2ocl/errors.hpp"

namespace f2ocl {

namespace {

// Per-anchor loss plus dloss/dcosine weights, indexed by batch position:
// w_pair[j] weights cos(z_i, z_j); w_proto[j] weights cos(z_i, mu_{y_j})
// (j == i carries the anchor's own-prototype term, positives carry none).
struct AnchorPartials {
  double loss = 0.0;
  std::vector<double> w_pair;
  std::vector<double> w_proto;
};

struct BatchCosines {
  std::vector<double> norm;             // |z_i|
  std::vector<std::vector<double>> unit;  // z_i / |z_i|
  Matrix pair;   // cos(z_i, z_j)
  Matrix proto;  // cos(z_i, mu_{y_j})
};

BatchCosines precompute_cosines(const std::vector<AnchorView>& batch,
                                const PrototypeStore& prototypes) {
  const std::size_t m = batch.size();
  BatchCosines c;
  c.norm.resize(m);
  c.unit.resize(m);
  for (std::size_t i = 0; i < m; ++i) {
    c.norm[i] = l2_norm(batch[i].z);
    if (!(c.norm[i] > 0.0) || !std::isfinite(c.norm[i]))
      fail(ErrorKind::numeric, "embedding norm is zero or non-finite in contrastive batch");
    c.unit[i] = normalized(batch[i].z);
  }
  c.pair = Matrix(m, m);
  for (std::size_t i = 0; i < m; ++i) {
    c.pair.at(i, i) = 1.0;
    for (std::size_t j = i + 1; j < m; ++j) {
      const double v = dot(c.unit[i], c.unit[j]);
      c.pair.at(i, j) = v;
      c.pair.at(j, i) = v;
    }
  }
  c.proto = Matrix(m, m);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      const Prototype* p = find_prototype(prototypes, batch[j].class_id);
      if (!p)
        fail(ErrorKind::logic,
             "no prototype for batch class " + std::to_string(batch[j].class_id));
      c.proto.at(i, j) = cosine_similarity(batch[i].z, p->mu);
    }
  }
  return c;
}

AnchorPartials anchor_partials(std::size_t i, const std::vector<AnchorView>& batch,
                               const BatchCosines& cos,
                               const std::map<int, LossWeights>& weights, double tau) {
  const std::size_t m = batch.size();
  const int anchor_class = batch[i].class_id;
  auto w_it = weights.find(anchor_class);
  if (w_it == weights.end())
    fail(ErrorKind::logic, "no loss weights for class " + std::to_string(anchor_class));
  const double alpha = w_it->second.alpha;
  const double beta = w_it->second.beta;

  std::vector<std::size_t> pos, neg;
  for (std::size_t j = 0; j < m; ++j) {
    if (j == i) continue;
    (batch[j].class_id == anchor_class ? pos : neg).push_back(j);
  }

  AnchorPartials out;
  out.w_pair.assign(m, 0.0);
  out.w_proto.assign(m, 0.0);

  // Prototype contrast: s1 against one exp(cos/tau) term per negative sample.
  {
    const double s1 = cos.proto.at(i, i) / tau;
    double shift = s1;
    for (std::size_t j : neg) shift = std::max(shift, cos.proto.at(i, j) / tau);
    const double e1 = std::exp(s1 - shift);
    double gamma1 = 0.0;
    for (std::size_t j : neg) gamma1 += std::exp(cos.proto.at(i, j) / tau - shift);
    const double denom = e1 + gamma1;
    out.loss += -alpha * ((s1 - shift) - std::log(denom));
    const double lambda1 = e1 / denom;
    out.w_proto[i] += -alpha * (1.0 - lambda1) / tau;
    for (std::size_t j : neg)
      out.w_proto[j] += alpha * std::exp(cos.proto.at(i, j) / tau - shift) / denom / tau;
  }

  // Sample contrast: each positive against the positive set plus negatives.
  if (!pos.empty()) {
    double shift = -1e300;
    for (std::size_t j : pos) shift = std::max(shift, cos.pair.at(i, j) / tau);
    for (std::size_t j : neg) shift = std::max(shift, cos.pair.at(i, j) / tau);
    double denom = 0.0;
    for (std::size_t j : pos) denom += std::exp(cos.pair.at(i, j) / tau - shift);
    for (std::size_t j : neg) denom += std::exp(cos.pair.at(i, j) / tau - shift);
    const double inv_p = 1.0 / static_cast<double>(pos.size());
    double sum_c = 0.0;
    for (std::size_t j : pos) sum_c += cos.pair.at(i, j) / tau;
    out.loss += -beta * inv_p * sum_c + beta * (shift + std::log(denom));
    for (std::size_t j : pos) {
      const double soft = std::exp(cos.pair.at(i, j) / tau - shift) / denom;
      out.w_pair[j] += beta * (soft - inv_p) / tau;
    }
    for (std::size_t j : neg) {
      const double soft = std::exp(cos.pair.at(i, j) / tau - shift) / denom;
      out.w_pair[j] += beta * soft / tau;
    }
  }

  return out;
}

void validate_tau(double tau) {
  if (!(tau > 0.0)) fail(ErrorKind::config, "temperature must be positive");
}

}  // namespace

LossWeights class_weights(std::size_t n_prev, std::size_t n_batch) {
  if (n_batch == 0) fail(ErrorKind::input, "class_weights needs n_batch >= 1");
  const double total = static_cast<double>(n_prev + n_batch);
  return {static_cast<double>(n_prev) / total, static_cast<double>(n_batch) / total};
}

double loss_for_anchor(std::size_t anchor, const std::vector<AnchorView>& batch,
                       const PrototypeStore& prototypes,
                       const std::map<int, LossWeights>& weights, double tau) {
  validate_tau(tau);
  if (anchor >= batch.size()) fail(ErrorKind::input, "anchor index out of range");
  const BatchCosines cos = precompute_cosines(batch, prototypes);
  return anchor_partials(anchor, batch, cos, weights, tau).loss;
}

BatchLossResult batch_loss_and_embedding_grads(const std::vector<AnchorView>& batch,
                                               const PrototypeStore& prototypes,
                                               const std::map<int, LossWeights>& weights,
                                               double tau) {
  validate_tau(tau);
  if (batch.empty()) fail(ErrorKind::input, "empty contrastive batch");
  const std::size_t m = batch.size();
  const BatchCosines cos = precompute_cosines(batch, prototypes);

  BatchLossResult result;
  result.dz.assign(m, std::vector<double>(batch.front().z.size(), 0.0));
  const double inv_m = 1.0 / static_cast<double>(m);

  for (std::size_t i = 0; i < m; ++i) {
    const AnchorPartials parts = anchor_partials(i, batch, cos, weights, tau);
    result.loss += parts.loss * inv_m;

    // cos(z_i, z_j) moves both embeddings
    for (std::size_t j = 0; j < m; ++j) {
      const double w = parts.w_pair[j] * inv_m;
      if (w == 0.0) continue;
      const double cij = cos.pair.at(i, j);
      for (std::size_t d = 0; d < cos.unit[i].size(); ++d) {
        result.dz[i][d] += w * (cos.unit[j][d] - cij * cos.unit[i][d]) / cos.norm[i];
        result.dz[j][d] += w * (cos.unit[i][d] - cij * cos.unit[j][d]) / cos.norm[j];
      }
    }
    // cos(z_i, mu) moves only z_i; prototypes are constants
    for (std::size_t j = 0; j < m; ++j) {
      const double w = parts.w_proto[j] * inv_m;
      if (w == 0.0) continue;
      const Prototype* p = find_prototype(prototypes, batch[j].class_id);
      const double pn = l2_norm(p->mu);
      if (pn == 0.0) continue;  // cosine is constant zero: true gradient is 0
      const double cij = cos.proto.at(i, j);
      for (std::size_t d = 0; d < cos.unit[i].size(); ++d) {
        result.dz[i][d] +=
            w * (p->mu[d] / pn - cij * cos.unit[i][d]) / cos.norm[i];
      }
    }
  }

  if (!std::isfinite(result.loss)) fail(ErrorKind::numeric, "non-finite contrastive loss");
  return result;
}

}  // namespace f2ocl
