#include "f2ocl/serialize.hpp"

#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "f2ocl/errors.hpp"
#include "internal/text_io.hpp"

namespace f2ocl {

namespace {

using nlohmann::json;

json matrix_to_json(const Matrix& m) {
  json j;
  j["rows"] = m.rows;
  j["cols"] = m.cols;
  j["data"] = m.data;
  return j;
}

void require_keys(const json& obj, const std::set<std::string>& allowed,
                  const std::string& where) {
  for (const auto& [key, value] : obj.items()) {
    (void)value;
    if (!allowed.contains(key))
      fail(ErrorKind::parse, "unknown field '" + key + "' in " + where);
  }
}

const json& field(const json& obj, const std::string& key, const std::string& where) {
  const auto it = obj.find(key);
  if (it == obj.end()) fail(ErrorKind::parse, "missing field '" + key + "' in " + where);
  return *it;
}

Matrix matrix_from_json(const json& j, const std::string& where) {
  require_keys(j, {"rows", "cols", "data"}, where);
  Matrix m;
  m.rows = field(j, "rows", where).get<std::size_t>();
  m.cols = field(j, "cols", where).get<std::size_t>();
  m.data = field(j, "data", where).get<std::vector<double>>();
  if (m.data.size() != m.rows * m.cols)
    fail(ErrorKind::parse, where + ": matrix data length does not match shape");
  return m;
}

json encoder_config_to_json(const EncoderConfig& c) {
  json j;
  j["input_dim"] = c.input_dim;
  j["token_dim"] = c.token_dim;
  j["num_content_tokens"] = c.num_content_tokens;
  j["num_blocks"] = c.num_blocks;
  j["num_heads"] = c.num_heads;
  j["mlp_ratio"] = c.mlp_ratio;
  j["variant"] = encoder_variant_name(c.variant);
  j["seed"] = c.seed;
  return j;
}

EncoderConfig encoder_config_from_json(const json& j, const std::string& where) {
  require_keys(j,
               {"input_dim", "token_dim", "num_content_tokens", "num_blocks", "num_heads",
                "mlp_ratio", "variant", "seed"},
               where);
  EncoderConfig c;
  c.input_dim = field(j, "input_dim", where).get<std::size_t>();
  c.token_dim = field(j, "token_dim", where).get<std::size_t>();
  c.num_content_tokens = field(j, "num_content_tokens", where).get<std::size_t>();
  c.num_blocks = field(j, "num_blocks", where).get<std::size_t>();
  c.num_heads = field(j, "num_heads", where).get<std::size_t>();
  c.mlp_ratio = field(j, "mlp_ratio", where).get<double>();
  c.variant = parse_encoder_variant(field(j, "variant", where).get<std::string>());
  c.seed = field(j, "seed", where).get<std::uint64_t>();
  return c;
}

json train_config_to_json(const TrainConfig& c) {
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
  j["seed"] = c.seed;
  return j;
}

TrainConfig train_config_from_json(const json& j, const std::string& where) {
  require_keys(j,
               {"batch_size", "passes", "learning_rate", "adam_beta1", "adam_beta2",
                "adam_eps", "key_lr", "temperature", "prompt_length", "seed"},
               where);
  TrainConfig c;
  c.batch_size = field(j, "batch_size", where).get<std::size_t>();
  c.passes = field(j, "passes", where).get<std::size_t>();
  c.learning_rate = field(j, "learning_rate", where).get<double>();
  c.adam_beta1 = field(j, "adam_beta1", where).get<double>();
  c.adam_beta2 = field(j, "adam_beta2", where).get<double>();
  c.adam_eps = field(j, "adam_eps", where).get<double>();
  c.key_lr = field(j, "key_lr", where).get<double>();
  c.temperature = field(j, "temperature", where).get<double>();
  c.prompt_length = field(j, "prompt_length", where).get<std::size_t>();
  c.seed = field(j, "seed", where).get<std::uint64_t>();
  return c;
}

json prototypes_to_json(const PrototypeStore& store) {
  json arr = json::array();
  for (const Prototype& p : store.prototypes) {
    json j;
    j["class_id"] = p.class_id;
    j["mu"] = p.mu;
    j["count"] = p.count;
    arr.push_back(std::move(j));
  }
  return arr;
}

PrototypeStore prototypes_from_json(const json& arr, const std::string& where) {
  PrototypeStore store;
  for (const json& j : arr) {
    require_keys(j, {"class_id", "mu", "count"}, where);
    Prototype p;
    p.class_id = field(j, "class_id", where).get<int>();
    p.mu = field(j, "mu", where).get<std::vector<double>>();
    p.count = field(j, "count", where).get<std::size_t>();
    if (!store.prototypes.empty() && store.prototypes.back().class_id >= p.class_id)
      fail(ErrorKind::parse, where + " records not strictly sorted by class_id");
    store.prototypes.push_back(std::move(p));
  }
  return store;
}

}  // namespace

std::string state_to_json(const ModelState& state) {
  json doc;
  doc["magic"] = kStateMagic;
  doc["version"] = kStateVersion;
  doc["encoder"] = encoder_config_to_json(state.encoder_config);
  doc["train"] = train_config_to_json(state.train_config);

  json pool = json::array();
  for (const PromptEntry& e : state.pool.entries) {
    json j;
    j["class_id"] = e.class_id;
    j["key"] = e.key;
    j["prompt"] = matrix_to_json(e.prompt.tokens);
    pool.push_back(std::move(j));
  }
  doc["pool"] = std::move(pool);

  doc["prototypes"] = prototypes_to_json(state.prototypes);
  doc["ablation_prototypes"] = prototypes_to_json(state.ablation_prototypes);

  json adam = json::array();
  for (const auto& [class_id, slot] : state.adam_slots) {
    json j;
    j["class_id"] = class_id;
    j["t"] = slot.t;
    j["m"] = matrix_to_json(slot.m);
    j["v"] = matrix_to_json(slot.v);
    adam.push_back(std::move(j));
  }
  doc["adam"] = std::move(adam);

  json counts = json::array();
  for (const auto& [class_id, n] : state.class_counts) {
    json j;
    j["class_id"] = class_id;
    j["n"] = n;
    counts.push_back(std::move(j));
  }
  doc["counts"] = std::move(counts);

  return doc.dump(2) + "\n";
}

ModelState state_from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    fail(ErrorKind::parse, std::string("state file: ") + e.what());
  }
  if (!doc.is_object()) fail(ErrorKind::parse, "state file: not a JSON object");
  require_keys(doc,
               {"magic", "version", "encoder", "train", "pool", "prototypes",
                "ablation_prototypes", "adam", "counts"},
               "state file");
  if (field(doc, "magic", "state file").get<std::string>() != kStateMagic)
    fail(ErrorKind::parse, "state file: bad magic");
  const int version = field(doc, "version", "state file").get<int>();
  if (version != kStateVersion)
    fail(ErrorKind::parse,
         "state file: unsupported version " + std::to_string(version));

  ModelState state;
  state.encoder_config = encoder_config_from_json(field(doc, "encoder", "state file"), "encoder");
  state.train_config = train_config_from_json(field(doc, "train", "state file"), "train");

  for (const json& j : field(doc, "pool", "state file")) {
    require_keys(j, {"class_id", "key", "prompt"}, "pool entry");
    PromptEntry e;
    e.class_id = field(j, "class_id", "pool entry").get<int>();
    e.key = field(j, "key", "pool entry").get<std::vector<double>>();
    e.prompt.tokens = matrix_from_json(field(j, "prompt", "pool entry"), "pool entry prompt");
    if (!state.pool.entries.empty() && state.pool.entries.back().class_id >= e.class_id)
      fail(ErrorKind::parse, "pool entries not strictly sorted by class_id");
    state.pool.entries.push_back(std::move(e));
  }

  state.prototypes = prototypes_from_json(field(doc, "prototypes", "state file"), "prototype");
  state.ablation_prototypes =
      prototypes_from_json(field(doc, "ablation_prototypes", "state file"), "ablation prototype");

  for (const json& j : field(doc, "adam", "state file")) {
    require_keys(j, {"class_id", "t", "m", "v"}, "adam slot");
    AdamSlot slot;
    const int class_id = field(j, "class_id", "adam slot").get<int>();
    slot.t = field(j, "t", "adam slot").get<std::uint64_t>();
    slot.m = matrix_from_json(field(j, "m", "adam slot"), "adam m");
    slot.v = matrix_from_json(field(j, "v", "adam slot"), "adam v");
    state.adam_slots.emplace(class_id, std::move(slot));
  }

  for (const json& j : field(doc, "counts", "state file")) {
    require_keys(j, {"class_id", "n"}, "count entry");
    state.class_counts.emplace(field(j, "class_id", "count entry").get<int>(),
                               field(j, "n", "count entry").get<std::size_t>());
  }

  // Cross-container coupling: one prototype and one count per pool entry.
  if (state.prototypes.size() != state.pool.size() ||
      state.ablation_prototypes.size() != state.pool.size() ||
      state.class_counts.size() != state.pool.size())
    fail(ErrorKind::parse, "state file: pool, prototype, and count sizes disagree");
  for (const PromptEntry& e : state.pool.entries) {
    if (!state.prototypes.contains(e.class_id) ||
        !state.ablation_prototypes.contains(e.class_id) ||
        !state.class_counts.contains(e.class_id))
      fail(ErrorKind::parse, "state file: class " + std::to_string(e.class_id) +
                                 " missing from a paired container");
  }
  return state;
}

void save_state(const ModelState& state, const std::string& path) {
  internal::write_file(path, state_to_json(state));
}

ModelState load_state(const std::string& path) {
  return state_from_json(internal::read_file(path));
}

}  // namespace f2ocl
