#pragma once

#include <cstddef>
#include <map>
#include <vector>

#include "f2ocl/matrix.hpp"
#include "f2ocl/ncm.hpp"

namespace f2ocl {

// Count-based anchor weights: alpha = n_prev / (n_prev + n_batch).
struct LossWeights {
  double alpha = 0.0;
  double beta = 1.0;
};

LossWeights class_weights(std::size_t n_prev, std::size_t n_batch);

// One anchor of the contrastive batch: its class and augmented embedding.
struct AnchorView {
  int class_id = -1;
  std::vector<double> z;
};

// Loss for one anchor i:
//   -( alpha * log L1  +  beta / |S+| * sum_{j in S+} log L2_j )
// where L1 contrasts cos(z_i, mu_{y_i}) against prototypes of negative
// samples' classes (counted per sample), L2_j contrasts cos(z_i, z_j) against
// the positive set plus negative samples, and every cosine is divided by tau
// before exponentiation. S+ is the same-class batch samples excluding the
// anchor; an empty S+ drops the second term, an empty S- makes both
// contrast sums zero.
double loss_for_anchor(std::size_t anchor, const std::vector<AnchorView>& batch,
                       const PrototypeStore& prototypes,
                       const std::map<int, LossWeights>& weights, double tau);

struct BatchLossResult {
  double loss = 0.0;          // mean of per-anchor losses
  std::vector<std::vector<double>> dz;  // dL/dz per batch sample
};

// Mean anchor loss over the batch plus exact gradients with respect to every
// embedding (cross-terms included; prototypes are constants). `weights` must
// cover every class present in the batch, `prototypes` every batch class.
BatchLossResult batch_loss_and_embedding_grads(const std::vector<AnchorView>& batch,
                                               const PrototypeStore& prototypes,
                                               const std::map<int, LossWeights>& weights,
                                               double tau);

}  // namespace f2ocl
