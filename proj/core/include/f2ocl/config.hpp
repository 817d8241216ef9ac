#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "f2ocl/datagen.hpp"
#include "f2ocl/encoder.hpp"
#include "f2ocl/trainer.hpp"

namespace f2ocl {

enum class CheckpointGranularity { group, batch };

struct EvalOptions {
  std::size_t top_k = 1;  // prompts concatenated at inference
  CheckpointGranularity checkpoints = CheckpointGranularity::group;
};

// Whole-run configuration, parseable from one JSON document. A single
// top-level "seed" fans out to the encoder, stream, and trainer seeds.
struct RunConfig {
  EncoderConfig encoder;
  TrainConfig train;
  StreamConfig stream;
  EvalOptions eval;
  std::string output_dir = "out";
  std::uint64_t seed = 1;

  void validate() const;
};

// Parse from JSON text; unknown fields anywhere are rejected (config error).
// Omitted fields keep their defaults.
RunConfig config_from_json(const std::string& text);
RunConfig load_config(const std::string& path);

// Echo used inside metrics.json. Excludes output_dir so byte-identical
// metrics don't depend on where results land.
std::string config_to_json(const RunConfig& config, bool include_output_dir);

// Seed resolution, weakest to strongest: config file, F2OCL_SEED environment
// variable, --seed flag. Returns the effective seed and applies the fan-out.
void apply_seed(RunConfig& config, std::optional<std::uint64_t> env_seed,
                std::optional<std::uint64_t> flag_seed);

}  // namespace f2ocl
