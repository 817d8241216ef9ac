#include "f2ocl/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <map>
#include <set>

#include <json.hpp>

#include "f2ocl/datagen.hpp"
#include "f2ocl/errors.hpp"
#include "f2ocl/serialize.hpp"
#include "internal/text_io.hpp"

namespace f2ocl {

namespace {

namespace fs = std::filesystem;
using internal::format_double;
using internal::write_file;

void make_dirs(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) fail(ErrorKind::io, "cannot create directory " + dir + ": " + ec.message());
}

std::string checkpoint_name(std::size_t index) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "after_group_%04zu.json", index);
  return buf;
}

// Group ids in first-appearance order; the columns of the accuracy matrix.
std::vector<int> group_order_of(const StreamSchedule& stream) {
  std::vector<int> order;
  for (const Batch& b : stream.batches) {
    if (std::find(order.begin(), order.end(), b.group) == order.end())
      order.push_back(b.group);
  }
  return order;
}

// Rewrites test-sample group ids as training-order indices; samples of
// never-trained groups get -1 and drop out of the matrix.
TestSet remap_test_groups(const TestSet& test, const std::vector<int>& order) {
  TestSet remapped = test;
  for (TestSample& s : remapped.samples) {
    const auto it = std::find(order.begin(), order.end(), s.group);
    s.group = it == order.end() ? -1 : static_cast<int>(it - order.begin());
  }
  return remapped;
}

struct CheckpointSet {
  std::vector<int> order;        // trained group ids, training order
  std::vector<std::string> paths;  // state file per checkpoint row
};

// Earlier matrix rows come from the checkpoints/ directory next to the state
// file; without it only the final row can be computed.
CheckpointSet discover_checkpoints(const std::string& state_path,
                                   std::vector<std::string>& warnings) {
  CheckpointSet found;
  const fs::path dir = fs::path(state_path).parent_path() / "checkpoints";
  const fs::path order_path = dir / "order.json";
  std::error_code ec;
  if (!fs::exists(order_path, ec)) {
    warnings.push_back("no checkpoints directory next to the state file; "
                       "only the final matrix row is available");
    return found;
  }
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(internal::read_file(order_path.string()));
    found.order = doc.at("groups").get<std::vector<int>>();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::parse, order_path.string() + ": " + e.what());
  }
  for (std::size_t r = 1; r <= found.order.size(); ++r) {
    const fs::path p = dir / checkpoint_name(r);
    if (!fs::exists(p, ec))
      fail(ErrorKind::io, "missing checkpoint " + p.string());
    found.paths.push_back(p.string());
  }
  return found;
}

std::string matrix_to_csv(const AccuracyMatrix& matrix, std::size_t columns) {
  std::string out = "checkpoint";
  for (std::size_t c = 1; c <= columns; ++c) out += ",tau_" + std::to_string(c);
  out += '\n';
  for (std::size_t r = 0; r < matrix.rows.size(); ++r) {
    out += std::to_string(r + 1);
    for (std::size_t c = 0; c < columns; ++c) {
      out += ',';
      if (c < matrix.rows[r].size()) out += format_double(matrix.rows[r][c]);
    }
    out += '\n';
  }
  return out;
}

const char* key_mode_name(KeyMode mode) {
  switch (mode) {
    case KeyMode::retrieved: return "retrieved";
    case KeyMode::oracle: return "oracle";
    case KeyMode::none: return "ablation";
  }
  return "retrieved";
}

}  // namespace

GenerateSummary run_generate(const RunConfig& config, const std::string& out_dir) {
  config.validate();
  make_dirs(out_dir);
  const GeneratedData data = generate_synthetic_stream(config.stream);
  save_stream_csv(data.stream, out_dir + "/stream.csv");
  save_test_csv(data.test, out_dir + "/test.csv");
  save_manifest(data, out_dir + "/manifest.json");

  GenerateSummary summary;
  summary.classes = config.stream.num_groups * config.stream.classes_per_group;
  summary.train_samples = data.stream.total_samples();
  summary.test_samples = data.test.samples.size();
  summary.batches = data.stream.batches.size();
  return summary;
}

TrainSummary run_train(const RunConfig& config, const std::string& stream_path,
                       const std::string& manifest_path, const std::string& out_dir) {
  config.validate();
  make_dirs(out_dir);
  const std::string checkpoint_dir = out_dir + "/checkpoints";
  make_dirs(checkpoint_dir);

  LoadedStream loaded = load_stream(stream_path, manifest_path, config.train.batch_size);
  const EncoderState enc = build_encoder(config.encoder);
  ModelState state = make_model_state(config.encoder, config.train);

  const std::vector<int> order = group_order_of(loaded.stream);
  {
    nlohmann::json doc;
    doc["groups"] = order;
    write_file(checkpoint_dir + "/order.json", doc.dump(2) + "\n");
  }

  // Group boundaries in training order drive the checkpoint snapshots.
  std::size_t groups_done = 0;
  const std::vector<Batch>& batches = loaded.stream.batches;
  const BatchObserver observer = [&](std::size_t t, const ModelState& snapshot) {
    if (config.eval.checkpoints == CheckpointGranularity::batch) {
      char buf[40];
      std::snprintf(buf, sizeof buf, "after_batch_%06zu.json", t + 1);
      save_state(snapshot, checkpoint_dir + "/" + buf);
    }
    const bool group_end = t + 1 == batches.size() || batches[t + 1].group != batches[t].group;
    if (group_end) {
      ++groups_done;
      save_state(snapshot, checkpoint_dir + "/" + checkpoint_name(groups_done));
    }
  };

  const std::vector<BatchLog> logs = train_stream(state, enc, loaded.stream, observer);

  std::string log_csv = "batch,loss,new_classes,seconds\n";
  for (const BatchLog& log : logs) {
    log_csv += std::to_string(log.batch_index) + ',' + format_double(log.loss) + ',' +
               std::to_string(log.new_classes) + ',' + format_double(log.seconds) + '\n';
  }
  write_file(out_dir + "/train_log.csv", log_csv);

  TrainSummary summary;
  summary.state_path = out_dir + "/state.json";
  save_state(state, summary.state_path);
  summary.batches = logs.size();
  summary.classes = state.pool.size();
  summary.final_loss = logs.empty() ? 0.0 : logs.back().loss;
  summary.warnings = std::move(loaded.warnings);
  return summary;
}

EvalSummary run_eval(const RunConfig& config, const EvalRunOptions& options,
                     const std::string& state_path, const std::string& test_path,
                     const std::string& manifest_path, const std::string& out_dir) {
  if (options.top_k == 0) fail(ErrorKind::config, "eval top_k must be positive");
  make_dirs(out_dir);

  EvalSummary summary;
  const ModelState final_state = load_state(state_path);
  // metrics.json echoes the run config, so the config must describe the
  // encoder this state was actually trained with.
  if (!(final_state.encoder_config == config.encoder))
    fail(ErrorKind::config, "config encoder settings do not match the state file");
  const EncoderState enc = build_encoder(final_state.encoder_config);
  const TestSet test = load_test_set(test_path, manifest_path);

  CheckpointSet checkpoints = discover_checkpoints(state_path, summary.warnings);
  if (checkpoints.order.empty()) {
    // Fallback: every test group counts as trained, in sorted order.
    std::set<int> groups;
    for (const TestSample& s : test.samples) groups.insert(s.group);
    checkpoints.order.assign(groups.begin(), groups.end());
  } else {
    checkpoints.paths.pop_back();  // the last checkpoint is the state file itself
  }

  if (checkpoints.order.empty())
    fail(ErrorKind::input, "nothing to evaluate: no trained groups and no test groups");
  const TestSet remapped = remap_test_groups(test, checkpoints.order);

  std::size_t row_index = 0;
  for (const std::string& path : checkpoints.paths) {
    const ModelState row_state = load_state(path);
    summary.matrix.rows.push_back(evaluate_group_checkpoint(
        enc, row_state, remapped, row_index, options.top_k, options.mode,
        &summary.warnings));
    ++row_index;
  }
  summary.matrix.rows.push_back(evaluate_group_checkpoint(
      enc, final_state, remapped, checkpoints.order.size() - 1, options.top_k,
      options.mode, &summary.warnings));

  for (std::size_t n = 0; n < summary.matrix.rows.size(); ++n) {
    summary.a_n.push_back(average_accuracy(summary.matrix, n));
    summary.f_n.push_back(n == 0 ? std::numeric_limits<double>::quiet_NaN()
                                 : average_forgetting(summary.matrix, n));
  }

  const KeyMetrics keys = key_and_ub_metrics(enc, final_state, remapped);
  summary.a_k = keys.key_accuracy;
  summary.ub = keys.oracle_accuracy;

  nlohmann::json doc;
  doc["mode"] = key_mode_name(options.mode);
  doc["top_k"] = options.top_k;
  doc["group_order"] = checkpoints.order;
  doc["a_n"] = summary.a_n;
  nlohmann::json f_n = nlohmann::json::array();
  for (double v : summary.f_n) {
    if (std::isnan(v)) {
      f_n.push_back(nullptr);
    } else {
      f_n.push_back(v);
    }
  }
  doc["f_n"] = std::move(f_n);
  doc["final_a_n"] = summary.a_n.back();
  if (summary.f_n.size() > 1) doc["final_f_n"] = summary.f_n.back();
  doc["a_k"] = summary.a_k;
  doc["ub"] = summary.ub;
  doc["seed"] = config.seed;
  doc["config"] = nlohmann::json::parse(config_to_json(config, false));
  doc["warnings"] = summary.warnings;
  write_file(out_dir + "/metrics.json", doc.dump(2) + "\n");
  write_file(out_dir + "/matrix.csv",
             matrix_to_csv(summary.matrix, checkpoints.order.size()));
  return summary;
}

std::vector<SweepCell> run_sweep(const RunConfig& config, const std::string& stream_path,
                                 const std::string& manifest_path,
                                 const std::string& test_path,
                                 const std::vector<std::size_t>& passes_grid,
                                 const std::vector<std::size_t>& k_grid,
                                 const std::string& out_dir) {
  config.validate();
  if (passes_grid.empty() || k_grid.empty())
    fail(ErrorKind::config, "sweep grids must be non-empty");
  for (std::size_t p : passes_grid)
    if (p == 0) fail(ErrorKind::config, "sweep passes must be positive");
  for (std::size_t k : k_grid)
    if (k == 0) fail(ErrorKind::config, "sweep k must be positive");
  make_dirs(out_dir);

  const LoadedStream loaded =
      load_stream(stream_path, manifest_path, config.train.batch_size);
  const EncoderState enc = build_encoder(config.encoder);
  const TestSet test = load_test_set(test_path, manifest_path);
  const std::vector<int> order = group_order_of(loaded.stream);
  const TestSet remapped = remap_test_groups(test, order);

  std::vector<SweepCell> cells;
  for (std::size_t passes : passes_grid) {
    RunConfig cell_config = config;
    cell_config.train.passes = passes;
    ModelState state = make_model_state(cell_config.encoder, cell_config.train);
    train_stream(state, enc, loaded.stream);

    for (std::size_t k : k_grid) {
      AccuracyMatrix matrix;
      matrix.rows.push_back(evaluate_group_checkpoint(
          enc, state, remapped, order.empty() ? 0 : order.size() - 1, k,
          KeyMode::retrieved));
      cells.push_back({passes, k, average_accuracy(matrix, 0)});
    }
  }

  std::string csv = "passes,k,a_n\n";
  for (const SweepCell& cell : cells) {
    csv += std::to_string(cell.passes) + ',' + std::to_string(cell.top_k) + ',' +
           format_double(cell.a_n) + '\n';
  }
  write_file(out_dir + "/grid.csv", csv);
  return cells;
}

std::size_t run_dump_embeddings(const RunConfig& config, const std::string& state_path,
                                const std::string& test_path,
                                const std::string& manifest_path,
                                const std::string& out_path) {
  const ModelState state = load_state(state_path);
  const EncoderState enc = build_encoder(state.encoder_config);
  const TestSet test = load_test_set(test_path, manifest_path);

  const std::size_t d = enc.config.token_dim;
  std::string out = "class_id";
  for (std::size_t i = 0; i < d; ++i) out += ",q_" + std::to_string(i);
  for (std::size_t i = 0; i < d; ++i) out += ",z_" + std::to_string(i);
  out += '\n';

  for (const TestSample& s : test.samples) {
    const InferenceResult r = classify(enc, state.pool, state.prototypes, s.features,
                                       config.eval.top_k, KeyMode::retrieved);
    out += std::to_string(s.class_id);
    for (double v : r.query) out += ',' + format_double(v);
    for (double v : r.augmented) out += ',' + format_double(v);
    out += '\n';
  }
  write_file(out_path, out);
  return test.samples.size();
}

}  // namespace f2ocl
