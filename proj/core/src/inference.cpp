#include "f2ocl/inference.hpp"

#include "f2ocl/errors.hpp"

namespace f2ocl {

InferenceResult classify(const EncoderState& enc, const PromptPool& pool,
                         const PrototypeStore& prototypes, std::span<const double> x,
                         std::size_t k, KeyMode mode, int true_class) {
  InferenceResult result;
  result.query = encode_query(enc, x);

  switch (mode) {
    case KeyMode::none:
      result.augmented = result.query;
      break;
    case KeyMode::oracle: {
      const PromptEntry* entry = find_entry(pool, true_class);
      if (!entry)
        fail(ErrorKind::input,
             "oracle mode: class " + std::to_string(true_class) + " not in prompt pool");
      result.top_key_class = entry->class_id;
      result.augmented = encode_with_prompt(enc, x, entry->prompt);
      break;
    }
    case KeyMode::retrieved: {
      const std::vector<const PromptEntry*> top = retrieve_top_k(pool, result.query, k);
      result.top_key_class = top.front()->class_id;
      if (top.size() == 1) {
        result.augmented = encode_with_prompt(enc, x, top.front()->prompt);
      } else {
        std::vector<const Prompt*> parts;
        parts.reserve(top.size());
        for (const PromptEntry* e : top) parts.push_back(&e->prompt);
        result.augmented = encode_with_prompt(enc, x, concat_prompts(parts));
      }
      break;
    }
  }

  result.predicted_class = predict(prototypes, result.augmented);
  return result;
}

}  // namespace f2ocl
