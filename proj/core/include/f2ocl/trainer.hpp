#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <vector>

#include "f2ocl/adam.hpp"
#include "f2ocl/encoder.hpp"
#include "f2ocl/ncm.hpp"
#include "f2ocl/prompt_pool.hpp"
#include "f2ocl/stream.hpp"

namespace f2ocl {

struct TrainConfig {
  std::size_t batch_size = 10;
  std::size_t passes = 5;
  double learning_rate = 0.1;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  double key_lr = 0.1;
  double temperature = 0.2;
  std::size_t prompt_length = 20;
  std::uint64_t seed = 1;

  void validate() const;  // throws ErrorKind::config
  AdamConfig adam() const { return {learning_rate, adam_beta1, adam_beta2, adam_eps}; }
};

// Everything that persists across batches. Size is O(#classes * L_p * d):
// no raw sample or per-sample embedding survives process_batch.
struct ModelState {
  EncoderConfig encoder_config;
  TrainConfig train_config;
  PromptPool pool;
  PrototypeStore prototypes;
  // Parallel store fed by un-augmented query embeddings over the same data
  // order; serves the no-prompt comparison without a second training run.
  PrototypeStore ablation_prototypes;
  std::map<int, AdamSlot> adam_slots;       // per class prompt
  std::map<int, std::size_t> class_counts;  // historical n_y
};

struct BatchLog {
  std::size_t batch_index = 0;
  double loss = 0.0;  // mean anchor loss of the final pass
  std::size_t new_classes = 0;
  double seconds = 0.0;
};

// Algorithm: pre-scan creates (key, prompt, prototype) for first-seen
// classes; P passes each recompute all augmented embeddings, take one Adam
// step per touched prompt on the batch-mean contrastive loss, then one
// plain-gradient key update per batch class; after the last pass embeddings
// are recomputed with the final prompts and folded into the prototypes, and
// the historical counts advance. The batch itself is then dropped.
BatchLog process_batch(ModelState& state, const EncoderState& enc, const Batch& batch,
                       std::size_t batch_index);

// Called after each processed batch; used by the pipeline to snapshot
// evaluation checkpoints. Receives the index just processed.
using BatchObserver = std::function<void(std::size_t batch_index, const ModelState&)>;

// Folds process_batch over the stream in order (one-pass contract). The
// trainer never reads Batch::group; erasing it leaves the result
// bit-identical.
std::vector<BatchLog> train_stream(ModelState& state, const EncoderState& enc,
                                   const StreamSchedule& stream,
                                   const BatchObserver& observer = nullptr);

ModelState make_model_state(const EncoderConfig& enc_config, const TrainConfig& train_config);

}  // namespace f2ocl
