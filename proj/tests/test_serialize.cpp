#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <string>
#include <vector>

#include "f2ocl/datagen.hpp"
#include "f2ocl/errors.hpp"
#include "f2ocl/serialize.hpp"
#include "f2ocl/trainer.hpp"
#include "helpers/test_util.hpp"

using namespace f2ocl;

namespace {

// A trained state exercises every serialized container with non-trivial
// values: keys, prompts, both prototype stores, Adam moments, counts.
ModelState trained_state(EncoderConfig* out_ecfg = nullptr) {
  StreamConfig scfg;
  scfg.num_groups = 2;
  scfg.classes_per_group = 2;
  scfg.samples_per_class = 10;
  scfg.input_dim = 8;
  scfg.batch_size = 4;
  scfg.seed = 13;
  const GeneratedData data = generate_synthetic_stream(scfg);

  EncoderConfig ecfg;
  ecfg.input_dim = 8;
  ecfg.token_dim = 8;
  ecfg.num_content_tokens = 2;
  ecfg.num_blocks = 1;
  ecfg.num_heads = 2;
  ecfg.mlp_ratio = 1.5;
  ecfg.seed = 13;
  if (out_ecfg) *out_ecfg = ecfg;

  TrainConfig tcfg;
  tcfg.batch_size = 4;
  tcfg.passes = 2;
  tcfg.prompt_length = 3;
  tcfg.seed = 13;

  const EncoderState enc = build_encoder(ecfg);
  ModelState state = make_model_state(ecfg, tcfg);
  train_stream(state, enc, data.stream);
  return state;
}

bool states_identical(const ModelState& a, const ModelState& b) {
  if (!(a.encoder_config == b.encoder_config)) return false;
  if (a.pool.size() != b.pool.size()) return false;
  for (std::size_t i = 0; i < a.pool.size(); ++i) {
    if (a.pool.entries[i].class_id != b.pool.entries[i].class_id) return false;
    if (a.pool.entries[i].key != b.pool.entries[i].key) return false;
    if (a.pool.entries[i].prompt.tokens.data != b.pool.entries[i].prompt.tokens.data)
      return false;
  }
  for (const PrototypeStore* stores : {&a.prototypes, &a.ablation_prototypes}) {
    const PrototypeStore& other =
        (stores == &a.prototypes) ? b.prototypes : b.ablation_prototypes;
    if (stores->size() != other.size()) return false;
    for (std::size_t i = 0; i < stores->size(); ++i) {
      if (stores->prototypes[i].class_id != other.prototypes[i].class_id) return false;
      if (stores->prototypes[i].mu != other.prototypes[i].mu) return false;
      if (stores->prototypes[i].count != other.prototypes[i].count) return false;
    }
  }
  if (a.class_counts != b.class_counts) return false;
  if (a.adam_slots.size() != b.adam_slots.size()) return false;
  for (const auto& [c, slot] : a.adam_slots) {
    const auto it = b.adam_slots.find(c);
    if (it == b.adam_slots.end()) return false;
    if (slot.t != it->second.t || slot.m.data != it->second.m.data ||
        slot.v.data != it->second.v.data)
      return false;
  }
  return true;
}

}  // namespace

TEST_CASE("round-trip through text is bit-exact, twice over") {
  const ModelState state = trained_state();
  const std::string text = state_to_json(state);
  const ModelState back = state_from_json(text);
  CHECK(states_identical(state, back));
  // Serializing the reloaded state reproduces the same bytes.
  CHECK(state_to_json(back) == text);
}

TEST_CASE("round-trip through a file is bit-exact") {
  const testutil::ScratchDir dir("serialize_file");
  const ModelState state = trained_state();
  save_state(state, dir.file("state.json"));
  const ModelState back = load_state(dir.file("state.json"));
  CHECK(states_identical(state, back));

  // Saved bytes are stable across writes.
  save_state(back, dir.file("again.json"));
  CHECK(testutil::slurp(dir.file("state.json")) == testutil::slurp(dir.file("again.json")));
}

TEST_CASE("state size depends on classes, not on samples absorbed") {
  // Two streams with the same classes but 10x the samples produce states
  // with identical record counts and identical serialized structure size
  // modulo number text width.
  auto build = [](std::size_t samples_per_class) {
    StreamConfig scfg;
    scfg.num_groups = 2;
    scfg.classes_per_group = 2;
    scfg.samples_per_class = samples_per_class;
    scfg.input_dim = 8;
    scfg.batch_size = 4;
    scfg.seed = 3;
    const GeneratedData data = generate_synthetic_stream(scfg);
    EncoderConfig ecfg;
    ecfg.input_dim = 8;
    ecfg.token_dim = 8;
    ecfg.num_content_tokens = 2;
    ecfg.num_blocks = 1;
    ecfg.num_heads = 2;
    ecfg.seed = 3;
    TrainConfig tcfg;
    tcfg.batch_size = 4;
    tcfg.passes = 1;
    tcfg.prompt_length = 3;
    tcfg.seed = 3;
    const EncoderState enc = build_encoder(ecfg);
    ModelState state = make_model_state(ecfg, tcfg);
    train_stream(state, enc, data.stream);
    return state;
  };

  const ModelState small = build(10);
  const ModelState large = build(100);
  CHECK(small.pool.size() == large.pool.size());
  CHECK(small.prototypes.size() == large.prototypes.size());
  CHECK(small.adam_slots.size() == large.adam_slots.size());
  for (std::size_t i = 0; i < small.pool.size(); ++i) {
    CHECK(small.pool.entries[i].key.size() == large.pool.entries[i].key.size());
    CHECK(small.pool.entries[i].prompt.tokens.data.size() ==
          large.pool.entries[i].prompt.tokens.data.size());
  }
}

TEST_CASE("magic, version, and structure are enforced on load") {
  const ModelState state = trained_state();
  const std::string good = state_to_json(state);

  SUBCASE("wrong magic") {
    std::string bad = good;
    const std::size_t pos = bad.find("f2ocl-state");
    bad.replace(pos, 11, "f2ocl-stats");
    CHECK_THROWS_WITH_AS(static_cast<void>(state_from_json(bad)), doctest::Contains("magic"),
                         Error);
  }
  SUBCASE("wrong version") {
    std::string bad = good;
    const std::size_t pos = bad.find("\"version\": 1");
    REQUIRE(pos != std::string::npos);
    bad.replace(pos, 12, "\"version\": 9");
    CHECK_THROWS_WITH_AS(static_cast<void>(state_from_json(bad)), doctest::Contains("version"),
                         Error);
  }
  SUBCASE("not json at all") {
    try {
      static_cast<void>(state_from_json("definitely not json"));
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::parse);
    }
  }
  SUBCASE("unknown field rejected") {
    std::string bad = good;
    const std::size_t pos = bad.find("\"version\"");
    REQUIRE(pos != std::string::npos);
    bad.insert(pos, "\"vestigial\": 1, ");
    CHECK_THROWS_AS(static_cast<void>(state_from_json(bad)), Error);
  }
  SUBCASE("missing field rejected") {
    std::string bad = good;
    const std::size_t pos = bad.find("\"counts\"");
    REQUIRE(pos != std::string::npos);
    // Rename a required key so it goes missing and appears unknown.
    bad.replace(pos, 8, "\"counts_\"");
    CHECK_THROWS_AS(static_cast<void>(state_from_json(bad)), Error);
  }
  SUBCASE("missing file is an io error") {
    try {
      static_cast<void>(load_state("no/such/file.json"));
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::io);
    }
  }
}
