#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "f2ocl/config.hpp"
#include "f2ocl/inference.hpp"
#include "f2ocl/metrics.hpp"

namespace f2ocl {

// File-level orchestration behind the CLI subcommands. Everything here is
// deterministic given (config, seed); wall-clock timing only ever lands in
// the training log, never in state files or metrics.json.

struct GenerateSummary {
  std::size_t classes = 0;
  std::size_t train_samples = 0;
  std::size_t test_samples = 0;
  std::size_t batches = 0;
};

// Writes stream.csv, test.csv, manifest.json into out_dir.
GenerateSummary run_generate(const RunConfig& config, const std::string& out_dir);

struct TrainSummary {
  std::size_t batches = 0;
  std::size_t classes = 0;
  double final_loss = 0.0;
  std::string state_path;
  std::vector<std::string> warnings;  // from stream loading
};

// Loads the stream, trains, and writes state.json, train_log.csv, and
// checkpoints/after_group_NNNN.json (plus per-batch checkpoints when the
// config asks for them) into out_dir.
TrainSummary run_train(const RunConfig& config, const std::string& stream_path,
                       const std::string& manifest_path, const std::string& out_dir);

struct EvalRunOptions {
  std::size_t top_k = 1;
  KeyMode mode = KeyMode::retrieved;  // `oracle` and `none` mirror the paper probes
};

struct EvalSummary {
  AccuracyMatrix matrix;
  std::vector<double> a_n;  // per checkpoint row
  std::vector<double> f_n;  // NaN for the first row
  double a_k = 0.0;
  double ub = 0.0;
  std::vector<std::string> warnings;
};

// Evaluates the state file (and any sibling checkpoints/ directory, which
// supplies the earlier matrix rows) against the test set; writes
// metrics.json and matrix.csv into out_dir.
EvalSummary run_eval(const RunConfig& config, const EvalRunOptions& options,
                     const std::string& state_path, const std::string& test_path,
                     const std::string& manifest_path, const std::string& out_dir);

struct SweepCell {
  std::size_t passes = 0;
  std::size_t top_k = 0;
  double a_n = 0.0;
};

// Trains once per distinct pass count on the same loaded stream, evaluates
// the final state per K, and writes grid.csv (columns passes,k,a_n) into
// out_dir. Cells appear in grid order: passes outer, K inner.
std::vector<SweepCell> run_sweep(const RunConfig& config, const std::string& stream_path,
                                 const std::string& manifest_path,
                                 const std::string& test_path,
                                 const std::vector<std::size_t>& passes_grid,
                                 const std::vector<std::size_t>& k_grid,
                                 const std::string& out_dir);

// One row per test sample: class_id, q_x components, z_x components (z via
// the standard retrieved-prompt path, K from config.eval).
std::size_t run_dump_embeddings(const RunConfig& config, const std::string& state_path,
                                const std::string& test_path,
                                const std::string& manifest_path,
                                const std::string& out_path);

}  // namespace f2ocl
