// Command-line front end: generate / train / eval / sweep / dump-embeddings.
// Exit codes: 0 success, 1 usage or configuration, 2 I/O or parse, 3 numeric.

#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "f2ocl/config.hpp"
#include "f2ocl/errors.hpp"
#include "f2ocl/pipeline.hpp"

namespace {

using namespace f2ocl;

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::io:
    case ErrorKind::parse:
      return 2;
    case ErrorKind::numeric:
      return 3;
    default:
      return 1;
  }
}

std::optional<std::uint64_t> env_seed() {
  const char* raw = std::getenv("F2OCL_SEED");
  if (!raw || !*raw) return std::nullopt;
  std::uint64_t value = 0;
  const char* end = raw + std::string_view(raw).size();
  const auto res = std::from_chars(raw, end, value);
  if (res.ec != std::errc() || res.ptr != end)
    fail(ErrorKind::config, std::string("F2OCL_SEED is not an integer: ") + raw);
  return value;
}

std::string sibling_manifest(const std::string& data_path) {
  return (std::filesystem::path(data_path).parent_path() / "manifest.json").string();
}

// Scalar flag overrides land on top of file values; the seed additionally
// respects F2OCL_SEED between the two.
struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> passes;
  std::optional<double> learning_rate;
  std::optional<double> temperature;
  std::optional<std::size_t> prompt_length;
  std::optional<std::size_t> top_k;
  std::optional<std::size_t> num_groups;
  std::optional<std::size_t> classes_per_group;
  std::optional<std::size_t> samples_per_class;
  std::optional<std::size_t> input_dim;
  std::optional<std::size_t> batch_size;
  std::optional<double> cluster_spread;
  std::optional<double> cluster_separation;
  std::optional<std::string> variant;

  void apply(RunConfig& config) const {
    if (passes) config.train.passes = *passes;
    if (learning_rate) config.train.learning_rate = *learning_rate;
    if (temperature) config.train.temperature = *temperature;
    if (prompt_length) config.train.prompt_length = *prompt_length;
    if (top_k) config.eval.top_k = *top_k;
    if (num_groups) config.stream.num_groups = *num_groups;
    if (classes_per_group) config.stream.classes_per_group = *classes_per_group;
    if (samples_per_class) config.stream.samples_per_class = *samples_per_class;
    if (input_dim) {
      config.stream.input_dim = *input_dim;
      config.encoder.input_dim = *input_dim;
    }
    if (batch_size) {
      config.stream.batch_size = *batch_size;
      config.train.batch_size = *batch_size;
    }
    if (cluster_spread) config.stream.cluster_spread = *cluster_spread;
    if (cluster_separation) config.stream.cluster_separation = *cluster_separation;
    if (variant) config.encoder.variant = parse_encoder_variant(*variant);
    apply_seed(config, env_seed(), seed);
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"continual learner with class-contrastive prompts over a frozen encoder"};
  app.require_subcommand(1);

  std::string config_path;
  app.add_option("--config", config_path, "JSON run configuration")->type_name("FILE");
  Overrides over;
  app.add_option("--seed", over.seed, "override the config seed");

  auto* generate = app.add_subcommand("generate", "write a synthetic stream to disk");
  std::string gen_out;
  generate->add_option("--out", gen_out, "output directory (default: config output_dir)");
  generate->add_option("--groups", over.num_groups, "number of class groups");
  generate->add_option("--classes-per-group", over.classes_per_group);
  generate->add_option("--samples-per-class", over.samples_per_class);
  generate->add_option("--input-dim", over.input_dim);
  generate->add_option("--batch-size", over.batch_size);
  generate->add_option("--spread", over.cluster_spread, "per-class noise sigma");
  generate->add_option("--separation", over.cluster_separation, "class mean radius");

  auto* train = app.add_subcommand("train", "train on a stream file");
  std::string train_stream_path, train_manifest, train_out;
  train->add_option("--stream", train_stream_path, "stream CSV")->required();
  train->add_option("--manifest", train_manifest, "class-to-group JSON (default: sibling)");
  train->add_option("--out", train_out, "output directory (default: config output_dir)");
  train->add_option("--passes", over.passes, "optimization passes per batch");
  train->add_option("--lr", over.learning_rate, "prompt learning rate");
  train->add_option("--temperature", over.temperature, "contrastive temperature");
  train->add_option("--prompt-length", over.prompt_length, "tokens per class prompt");
  train->add_option("--batch-size", over.batch_size);
  train->add_option("--variant", over.variant,
                    "encoder variant: tiny-transformer | affine-reference");

  auto* eval = app.add_subcommand("eval", "evaluate a trained state");
  std::string eval_state, eval_test, eval_manifest, eval_out;
  bool oracle_keys = false, ablation = false;
  eval->add_option("--state", eval_state, "state file")->required();
  eval->add_option("--test", eval_test, "test CSV")->required();
  eval->add_option("--manifest", eval_manifest, "class-to-group JSON (default: sibling)");
  eval->add_option("--out", eval_out, "output directory (default: config output_dir)");
  eval->add_option("--top-k", over.top_k, "prompts concatenated at inference");
  eval->add_flag("--oracle-keys", oracle_keys, "force each sample's true-class prompt");
  eval->add_flag("--ablation", ablation, "classify raw query embeddings, no prompts");

  auto* sweep = app.add_subcommand("sweep", "train and evaluate a passes-by-K grid");
  std::string sweep_stream, sweep_manifest, sweep_test, sweep_out;
  std::vector<std::size_t> sweep_passes{1, 5, 10};
  std::vector<std::size_t> sweep_keys{1, 2};
  sweep->add_option("--stream", sweep_stream, "stream CSV")->required();
  sweep->add_option("--manifest", sweep_manifest, "class-to-group JSON (default: sibling)");
  sweep->add_option("--test", sweep_test, "test CSV")->required();
  sweep->add_option("--out", sweep_out, "output directory (default: config output_dir)");
  sweep->add_option("--passes", sweep_passes, "pass counts to try")->delimiter(',');
  sweep->add_option("--keys", sweep_keys, "K values to try")->delimiter(',');

  auto* dump = app.add_subcommand("dump-embeddings", "write query/augmented embeddings");
  std::string dump_state, dump_test, dump_manifest, dump_out;
  dump->add_option("--state", dump_state, "state file")->required();
  dump->add_option("--test", dump_test, "test CSV")->required();
  dump->add_option("--manifest", dump_manifest, "class-to-group JSON (default: sibling)");
  dump->add_option("--out", dump_out, "output CSV path (default: embeddings.csv)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // Fold CLI11's exit-code zoo into the documented contract: help stays 0,
    // every usage mistake is 1.
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    RunConfig config = config_path.empty() ? RunConfig{} : load_config(config_path);
    over.apply(config);

    if (generate->parsed()) {
      const std::string out = gen_out.empty() ? config.output_dir : gen_out;
      const GenerateSummary s = run_generate(config, out);
      std::printf("generated %zu classes: %zu train samples in %zu batches, %zu test samples -> %s\n",
                  s.classes, s.train_samples, s.batches, s.test_samples, out.c_str());
    } else if (train->parsed()) {
      const std::string manifest =
          train_manifest.empty() ? sibling_manifest(train_stream_path) : train_manifest;
      const std::string out = train_out.empty() ? config.output_dir : train_out;
      const TrainSummary s = run_train(config, train_stream_path, manifest, out);
      for (const std::string& w : s.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
      std::printf("trained %zu batches over %zu classes, final loss %.6f -> %s\n",
                  s.batches, s.classes, s.final_loss, s.state_path.c_str());
    } else if (eval->parsed()) {
      if (oracle_keys && ablation)
        fail(ErrorKind::config, "--oracle-keys and --ablation are mutually exclusive");
      EvalRunOptions options;
      options.top_k = config.eval.top_k;
      options.mode = oracle_keys ? KeyMode::oracle
                   : ablation    ? KeyMode::none
                                 : KeyMode::retrieved;
      const std::string manifest =
          eval_manifest.empty() ? sibling_manifest(eval_test) : eval_manifest;
      const std::string out = eval_out.empty() ? config.output_dir : eval_out;
      const EvalSummary s = run_eval(config, options, eval_state, eval_test, manifest, out);
      for (const std::string& w : s.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
      std::printf("A_n %.4f", s.a_n.back());
      if (s.f_n.size() > 1) std::printf("  F_n %.4f", s.f_n.back());
      std::printf("  A_k %.4f  UB %.4f  (%zu checkpoint rows) -> %s\n", s.a_k, s.ub,
                  s.a_n.size(), out.c_str());
    } else if (sweep->parsed()) {
      const std::string manifest =
          sweep_manifest.empty() ? sibling_manifest(sweep_stream) : sweep_manifest;
      const std::string out = sweep_out.empty() ? config.output_dir : sweep_out;
      const std::vector<SweepCell> cells =
          run_sweep(config, sweep_stream, manifest, sweep_test, sweep_passes, sweep_keys, out);
      for (const SweepCell& c : cells)
        std::printf("passes %zu  k %zu  A_n %.4f\n", c.passes, c.top_k, c.a_n);
      std::printf("grid -> %s/grid.csv\n", out.c_str());
    } else if (dump->parsed()) {
      const std::string manifest =
          dump_manifest.empty() ? sibling_manifest(dump_test) : dump_manifest;
      const std::string out = dump_out.empty() ? "embeddings.csv" : dump_out;
      const std::size_t rows = run_dump_embeddings(config, dump_state, dump_test, manifest, out);
      std::printf("wrote %zu embedding rows -> %s\n", rows, out.c_str());
    }
    return 0;
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
