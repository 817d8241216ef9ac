#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "f2ocl/encoder.hpp"
#include "f2ocl/ncm.hpp"
#include "f2ocl/prompt_pool.hpp"

namespace f2ocl {

// How the prompt is chosen before the nearest-prototype decision.
enum class KeyMode {
  retrieved,  // top-K keys by cosine(query, key), prompts concatenated
  oracle,     // the true class's prompt is force-selected (upper-bound probe)
  none,       // no prompt at all: classify the raw query embedding
};

struct InferenceResult {
  int predicted_class = -1;
  int top_key_class = -1;           // class of the best-matching key (-1 in `none` mode)
  std::vector<double> query;        // q_x
  std::vector<double> augmented;    // z_x (equals query in `none` mode)
};

// Full classification path: query embedding -> key retrieval (per mode) ->
// prompt-augmented embedding -> nearest prototype. `k` is the number of keys
// whose prompts are concatenated in descending-similarity order; ignored in
// oracle/none modes. `true_class` is only consulted in oracle mode.
// `prototypes` should be the ablation store when mode is `none`.
InferenceResult classify(const EncoderState& enc, const PromptPool& pool,
                         const PrototypeStore& prototypes, std::span<const double> x,
                         std::size_t k, KeyMode mode, int true_class = -1);

}  // namespace f2ocl
