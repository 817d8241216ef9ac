#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "f2ocl/matrix.hpp"

namespace f2ocl {

enum class EncoderVariant {
  affine_reference,  // z = W * mean(tokens); every derivative is analytic
  tiny_transformer,  // pre-norm self-attention + feed-forward blocks
};

EncoderVariant parse_encoder_variant(const std::string& name);
std::string encoder_variant_name(EncoderVariant variant);

struct EncoderConfig {
  std::size_t input_dim = 32;
  std::size_t token_dim = 32;
  std::size_t num_content_tokens = 4;
  std::size_t num_blocks = 2;
  std::size_t num_heads = 4;
  double mlp_ratio = 2.0;
  EncoderVariant variant = EncoderVariant::tiny_transformer;
  std::uint64_t seed = 1;

  std::size_t chunk_dim() const { return input_dim / num_content_tokens; }
  std::size_t mlp_dim() const;
  void validate() const;  // throws ErrorKind::config

  bool operator==(const EncoderConfig&) const = default;
};

// Learnable prompt tokens (rows) of width token_dim. Trained prompts keep a
// fixed length for the whole run; multi-key inference concatenates several
// into a transient longer prompt.
struct Prompt {
  Matrix tokens;

  Prompt() = default;
  Prompt(std::size_t length, std::size_t dim) : tokens(length, dim) {}

  std::size_t length() const { return tokens.rows; }
  std::size_t dim() const { return tokens.cols; }
};

Prompt concat_prompts(const std::vector<const Prompt*>& parts);

struct TransformerBlockWeights {
  Matrix wq, wk, wv, wo;  // token_dim x token_dim, applied as out = in * W
  Matrix w1;              // token_dim x mlp_dim
  Matrix w2;              // mlp_dim x token_dim
};

// Frozen after build_encoder; every forward/backward below treats it as
// read-only and is safe to call concurrently.
struct EncoderState {
  EncoderConfig config;
  std::vector<Matrix> tokenizer;  // per content token: chunk_dim x token_dim
  Matrix affine_w;                // affine-reference readout, token_dim x token_dim
  std::vector<TransformerBlockWeights> blocks;
};

EncoderState build_encoder(const EncoderConfig& config);

// FNV-1a over all weight bytes; used to assert frozen-ness across a run.
std::uint64_t encoder_hash(const EncoderState& enc);

// Content tokens for an input vector: x is split into num_content_tokens
// chunks, each projected to token_dim. Rows = tokens.
Matrix tokenize(const EncoderState& enc, std::span<const double> x);

// Forward-pass cache for one token sequence; consumed by backprop_to_tokens.
struct BlockTrace {
  Matrix xhat1;
  std::vector<double> istd1;
  Matrix q, k, v;
  std::vector<Matrix> attn;  // per head: seq x seq softmax rows
  Matrix xhat2;
  std::vector<double> istd2;
  Matrix u;  // pre-activation MLP input, seq x mlp_dim
};

struct EncoderTrace {
  std::size_t seq = 0;
  std::vector<BlockTrace> blocks;
};

// Core forward over an arbitrary token sequence (mean-pooled over all
// positions). `trace` may be null when no backward pass is needed.
std::vector<double> encode_tokens(const EncoderState& enc, const Matrix& tokens,
                                  EncoderTrace* trace = nullptr);

// Query embedding q_x = f(x): content tokens only.
std::vector<double> encode_query(const EncoderState& enc, std::span<const double> x);

// Augmented embedding z_x = f(x, p): prompt tokens prepended to content tokens.
std::vector<double> encode_with_prompt(const EncoderState& enc, std::span<const double> x,
                                       const Prompt& prompt);

// Exact reverse-mode gradient of upstream^T z with respect to every input
// token row. Encoder weights receive no gradient by construction.
Matrix backprop_to_tokens(const EncoderState& enc, const EncoderTrace& trace,
                          std::span<const double> upstream);

// dL/dp for the embedding z = encode_with_prompt(enc, x, p), given dL/dz.
Matrix grad_wrt_prompt(const EncoderState& enc, std::span<const double> x,
                       const Prompt& prompt, std::span<const double> upstream);

}  // namespace f2ocl
