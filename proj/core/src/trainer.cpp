#include "f2ocl/trainer.hpp"

#include <chrono>
#include <cstring>
#include <map>
#include <string>
#include <vector>

#include "f2ocl/contrastive.hpp"
#include "f2ocl/errors.hpp"

namespace f2ocl {

void TrainConfig::validate() const {
  if (batch_size == 0) fail(ErrorKind::config, "batch_size must be positive");
  if (passes == 0) fail(ErrorKind::config, "passes must be positive");
  if (!(learning_rate > 0.0)) fail(ErrorKind::config, "learning_rate must be positive");
  if (!(key_lr > 0.0)) fail(ErrorKind::config, "key_lr must be positive");
  if (!(temperature > 0.0)) fail(ErrorKind::config, "temperature must be positive");
  if (prompt_length == 0) fail(ErrorKind::config, "prompt_length must be positive");
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0))
    fail(ErrorKind::config, "adam_beta1 must be in [0, 1)");
  if (!(adam_beta2 >= 0.0 && adam_beta2 < 1.0))
    fail(ErrorKind::config, "adam_beta2 must be in [0, 1)");
  if (!(adam_eps > 0.0)) fail(ErrorKind::config, "adam_eps must be positive");
}

ModelState make_model_state(const EncoderConfig& enc_config, const TrainConfig& train_config) {
  enc_config.validate();
  train_config.validate();
  ModelState state;
  state.encoder_config = enc_config;
  state.train_config = train_config;
  return state;
}

namespace {

// Joint forward for one sample: [prompt tokens; content tokens] -> z, with
// the trace kept so the batch gradient can flow back to the prompt rows.
struct SampleForward {
  std::vector<double> z;
  EncoderTrace trace;
  Matrix tokens;
};

SampleForward forward_sample(const EncoderState& enc, const Matrix& content,
                             const Prompt& prompt) {
  SampleForward fwd;
  fwd.tokens = Matrix(prompt.length() + content.rows, content.cols);
  std::memcpy(fwd.tokens.data.data(), prompt.tokens.data.data(),
              prompt.tokens.data.size() * sizeof(double));
  std::memcpy(fwd.tokens.data.data() + prompt.tokens.data.size(), content.data.data(),
              content.data.size() * sizeof(double));
  fwd.z = encode_tokens(enc, fwd.tokens, &fwd.trace);
  return fwd;
}

}  // namespace

BatchLog process_batch(ModelState& state, const EncoderState& enc, const Batch& batch,
                       std::size_t batch_index) {
  const auto started = std::chrono::steady_clock::now();
  BatchLog log;
  log.batch_index = batch_index;
  if (batch.samples.empty()) return log;

  const TrainConfig& cfg = state.train_config;
  const std::size_t m = batch.samples.size();

  // Content tokens and prompt-free query embeddings never change across
  // passes; compute them once.
  std::vector<Matrix> content(m);
  std::vector<std::vector<double>> query(m);
  for (std::size_t i = 0; i < m; ++i) {
    content[i] = tokenize(enc, batch.samples[i].features);
    query[i] = encode_tokens(enc, content[i]);
  }

  // Batch composition: per class, the sample indices in batch order.
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < m; ++i) {
    if (batch.samples[i].class_id < 0)
      fail(ErrorKind::input, "negative class id in batch " + std::to_string(batch_index));
    by_class[batch.samples[i].class_id].push_back(i);
  }

  // First-seen classes get their triplet and placeholder prototypes before
  // any loss term is evaluated, so negatives always have a prototype.
  for (const auto& [class_id, members] : by_class) {
    if (state.pool.contains(class_id)) continue;
    ++log.new_classes;
    PromptEntry& entry = insert_class(state.pool, class_id, cfg.prompt_length,
                                      enc.config.token_dim, cfg.seed);
    const std::size_t first = members.front();
    const std::vector<double> z0 =
        encode_with_prompt(enc, batch.samples[first].features, entry.prompt);
    create_prototype(state.prototypes, class_id, z0);
    create_prototype(state.ablation_prototypes, class_id, query[first]);
    state.adam_slots.emplace(class_id, AdamSlot{});
    state.class_counts.emplace(class_id, 0);
  }

  // Pre-batch historical counts fix alpha/beta for the whole batch.
  std::map<int, LossWeights> weights;
  for (const auto& [class_id, members] : by_class)
    weights[class_id] = class_weights(state.class_counts.at(class_id), members.size());

  const AdamConfig adam_cfg = cfg.adam();
  std::vector<AnchorView> anchors(m);
  std::vector<SampleForward> forwards(m);

  try {
    for (std::size_t pass = 0; pass < cfg.passes; ++pass) {
      for (std::size_t i = 0; i < m; ++i) {
        const PromptEntry* entry = find_entry(state.pool, batch.samples[i].class_id);
        forwards[i] = forward_sample(enc, content[i], entry->prompt);
        anchors[i] = {batch.samples[i].class_id, forwards[i].z};
      }

      const BatchLossResult batch_loss = batch_loss_and_embedding_grads(
          anchors, state.prototypes, weights, cfg.temperature);
      log.loss = batch_loss.loss;

      // Chain each sample's embedding gradient back to its class prompt.
      std::map<int, Matrix> prompt_grads;
      for (std::size_t i = 0; i < m; ++i) {
        const Matrix dtokens = backprop_to_tokens(enc, forwards[i].trace, batch_loss.dz[i]);
        Matrix& acc = prompt_grads
                          .try_emplace(batch.samples[i].class_id, cfg.prompt_length,
                                       enc.config.token_dim)
                          .first->second;
        for (std::size_t r = 0; r < cfg.prompt_length; ++r) {
          for (std::size_t c = 0; c < enc.config.token_dim; ++c)
            acc.at(r, c) += dtokens.at(r, c);
        }
      }

      for (auto& [class_id, grad] : prompt_grads) {
        PromptEntry* entry = find_entry(state.pool, class_id);
        adam_step(entry->prompt.tokens, grad, state.adam_slots.at(class_id), adam_cfg);
      }

      // One key step per class per pass, pulled toward this batch's queries.
      for (const auto& [class_id, members] : by_class) {
        std::vector<std::vector<double>> class_queries;
        class_queries.reserve(members.size());
        for (std::size_t i : members) class_queries.push_back(query[i]);
        const LossWeights& w = weights.at(class_id);
        update_key(*find_entry(state.pool, class_id), class_queries, w.alpha, w.beta,
                   cfg.key_lr);
      }
    }
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::numeric)
      fail(ErrorKind::numeric,
           std::string(e.what()) + " (batch " + std::to_string(batch_index) + ")");
    throw;
  }

  // Final-prompt embeddings feed the prototypes; counts advance once per
  // batch no matter how many passes ran.
  for (const auto& [class_id, members] : by_class) {
    const PromptEntry* entry = find_entry(state.pool, class_id);
    std::vector<std::vector<double>> final_z, class_queries;
    final_z.reserve(members.size());
    class_queries.reserve(members.size());
    for (std::size_t i : members) {
      final_z.push_back(encode_with_prompt(enc, batch.samples[i].features, entry->prompt));
      class_queries.push_back(query[i]);
    }
    update_prototype(*find_prototype(state.prototypes, class_id), final_z);
    update_prototype(*find_prototype(state.ablation_prototypes, class_id), class_queries);
    state.class_counts.at(class_id) += members.size();
  }

  log.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return log;
}

std::vector<BatchLog> train_stream(ModelState& state, const EncoderState& enc,
                                   const StreamSchedule& stream,
                                   const BatchObserver& observer) {
  if (!(enc.config == state.encoder_config))
    fail(ErrorKind::logic, "encoder does not match the model state's encoder config");
  std::vector<BatchLog> logs;
  logs.reserve(stream.batches.size());
  for (std::size_t t = 0; t < stream.batches.size(); ++t) {
    logs.push_back(process_batch(state, enc, stream.batches[t], t));
    if (observer) observer(t, state);
  }
  return logs;
}

}  // namespace f2ocl
