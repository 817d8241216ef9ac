#include "f2ocl/config.hpp"

#include <set>
#include <string>

#include <json.hpp>

#include "f2ocl/errors.hpp"
#include "internal/text_io.hpp"

namespace f2ocl {

namespace {

using nlohmann::json;

void require_keys(const json& obj, const std::set<std::string>& allowed,
                  const std::string& where) {
  for (const auto& [key, value] : obj.items()) {
    (void)value;
    if (!allowed.contains(key))
      fail(ErrorKind::config, "unknown config field '" + key + "' in " + where);
  }
}

template <typename T>
void read_field(const json& obj, const char* key, T& out, const std::string& where) {
  const auto it = obj.find(key);
  if (it == obj.end()) return;  // keep the default
  try {
    out = it->get<T>();
  } catch (const json::exception&) {
    fail(ErrorKind::config, std::string("bad value for '") + key + "' in " + where);
  }
}

void parse_encoder(const json& j, EncoderConfig& c) {
  require_keys(j,
               {"input_dim", "token_dim", "num_content_tokens", "num_blocks", "num_heads",
                "mlp_ratio", "variant"},
               "encoder");
  read_field(j, "input_dim", c.input_dim, "encoder");
  read_field(j, "token_dim", c.token_dim, "encoder");
  read_field(j, "num_content_tokens", c.num_content_tokens, "encoder");
  read_field(j, "num_blocks", c.num_blocks, "encoder");
  read_field(j, "num_heads", c.num_heads, "encoder");
  read_field(j, "mlp_ratio", c.mlp_ratio, "encoder");
  if (j.contains("variant"))
    c.variant = parse_encoder_variant(j.at("variant").get<std::string>());
}

void parse_train(const json& j, TrainConfig& c) {
  require_keys(j,
               {"batch_size", "passes", "learning_rate", "adam_beta1", "adam_beta2",
                "adam_eps", "key_lr", "temperature", "prompt_length"},
               "train");
  read_field(j, "batch_size", c.batch_size, "train");
  read_field(j, "passes", c.passes, "train");
  read_field(j, "learning_rate", c.learning_rate, "train");
  read_field(j, "adam_beta1", c.adam_beta1, "train");
  read_field(j, "adam_beta2", c.adam_beta2, "train");
  read_field(j, "adam_eps", c.adam_eps, "train");
  read_field(j, "key_lr", c.key_lr, "train");
  read_field(j, "temperature", c.temperature, "train");
  read_field(j, "prompt_length", c.prompt_length, "train");
}

void parse_stream(const json& j, StreamConfig& c) {
  require_keys(j,
               {"num_groups", "classes_per_group", "samples_per_class", "input_dim",
                "batch_size", "cluster_spread", "cluster_separation"},
               "stream");
  read_field(j, "num_groups", c.num_groups, "stream");
  read_field(j, "classes_per_group", c.classes_per_group, "stream");
  read_field(j, "samples_per_class", c.samples_per_class, "stream");
  read_field(j, "input_dim", c.input_dim, "stream");
  read_field(j, "batch_size", c.batch_size, "stream");
  read_field(j, "cluster_spread", c.cluster_spread, "stream");
  read_field(j, "cluster_separation", c.cluster_separation, "stream");
}

void parse_eval(const json& j, EvalOptions& c) {
  require_keys(j, {"top_k", "checkpoints"}, "eval");
  read_field(j, "top_k", c.top_k, "eval");
  if (j.contains("checkpoints")) {
    const std::string granularity = j.at("checkpoints").get<std::string>();
    if (granularity == "group") {
      c.checkpoints = CheckpointGranularity::group;
    } else if (granularity == "batch") {
      c.checkpoints = CheckpointGranularity::batch;
    } else {
      fail(ErrorKind::config, "eval.checkpoints must be 'group' or 'batch'");
    }
  }
}

json encoder_to_json(const EncoderConfig& c) {
  json j;
  j["input_dim"] = c.input_dim;
  j["token_dim"] = c.token_dim;
  j["num_content_tokens"] = c.num_content_tokens;
  j["num_blocks"] = c.num_blocks;
  j["num_heads"] = c.num_heads;
  j["mlp_ratio"] = c.mlp_ratio;
  j["variant"] = encoder_variant_name(c.variant);
  return j;
}

json train_to_json(const TrainConfig& c) {
  json j;
  j["batch_size"] = c.batch_size;
  j["passes"] = c.passes;
  j["learning_rate"] = c.learning_rate;
  j["adam_beta1"] = c.adam_beta1;
  j["adam_beta2"] = c.adam_beta2;
  j["adam_eps"] = c.adam_eps;
  j["key_lr"] = c.key_lr;
  j["temperature"] = c.temperature;
  j["prompt_length"] = c.prompt_length;
  return j;
}

json stream_to_json(const StreamConfig& c) {
  json j;
  j["num_groups"] = c.num_groups;
  j["classes_per_group"] = c.classes_per_group;
  j["samples_per_class"] = c.samples_per_class;
  j["input_dim"] = c.input_dim;
  j["batch_size"] = c.batch_size;
  j["cluster_spread"] = c.cluster_spread;
  j["cluster_separation"] = c.cluster_separation;
  return j;
}

}  // namespace

void RunConfig::validate() const {
  encoder.validate();
  train.validate();
  stream.validate();
  if (eval.top_k == 0) fail(ErrorKind::config, "eval.top_k must be positive");
  if (encoder.input_dim != stream.input_dim)
    fail(ErrorKind::config, "encoder.input_dim must equal stream.input_dim");
  if (train.batch_size != stream.batch_size)
    fail(ErrorKind::config, "train.batch_size must equal stream.batch_size");
  if (output_dir.empty()) fail(ErrorKind::config, "output_dir must not be empty");
}

RunConfig config_from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    fail(ErrorKind::parse, std::string("config: ") + e.what());
  }
  if (!doc.is_object()) fail(ErrorKind::parse, "config: not a JSON object");
  require_keys(doc, {"seed", "output_dir", "encoder", "train", "stream", "eval"}, "config");

  RunConfig config;
  read_field(doc, "seed", config.seed, "config");
  read_field(doc, "output_dir", config.output_dir, "config");
  if (doc.contains("encoder")) parse_encoder(doc.at("encoder"), config.encoder);
  if (doc.contains("train")) parse_train(doc.at("train"), config.train);
  if (doc.contains("stream")) parse_stream(doc.at("stream"), config.stream);
  if (doc.contains("eval")) parse_eval(doc.at("eval"), config.eval);

  // Sub-configs never carry their own seed in a config file; the top-level
  // seed fans out once resolution (file < env < flag) has happened.
  apply_seed(config, std::nullopt, std::nullopt);
  return config;
}

RunConfig load_config(const std::string& path) {
  return config_from_json(internal::read_file(path));
}

std::string config_to_json(const RunConfig& config, bool include_output_dir) {
  json doc;
  doc["seed"] = config.seed;
  if (include_output_dir) doc["output_dir"] = config.output_dir;
  doc["encoder"] = encoder_to_json(config.encoder);
  doc["train"] = train_to_json(config.train);
  doc["stream"] = stream_to_json(config.stream);
  json eval;
  eval["top_k"] = config.eval.top_k;
  eval["checkpoints"] =
      config.eval.checkpoints == CheckpointGranularity::group ? "group" : "batch";
  doc["eval"] = std::move(eval);
  return doc.dump(2) + "\n";
}

void apply_seed(RunConfig& config, std::optional<std::uint64_t> env_seed,
                std::optional<std::uint64_t> flag_seed) {
  if (env_seed) config.seed = *env_seed;
  if (flag_seed) config.seed = *flag_seed;
  config.encoder.seed = config.seed;
  config.train.seed = config.seed;
  config.stream.seed = config.seed;
}

}  // namespace f2ocl
