#include "f2ocl/metrics.hpp"

#include <cmath>
#include <limits>
#include <map>

#include "f2ocl/errors.hpp"

namespace f2ocl {

std::vector<double> evaluate_group_checkpoint(const EncoderState& enc,
                                              const ModelState& state, const TestSet& test,
                                              std::size_t through_group, std::size_t k,
                                              KeyMode mode,
                                              std::vector<std::string>* warnings) {
  const PrototypeStore& prototypes =
      (mode == KeyMode::none) ? state.ablation_prototypes : state.prototypes;

  std::vector<std::size_t> correct(through_group + 1, 0);
  std::vector<std::size_t> total(through_group + 1, 0);
  for (const TestSample& s : test.samples) {
    if (s.group < 0 || static_cast<std::size_t>(s.group) > through_group) continue;
    const InferenceResult r =
        classify(enc, state.pool, prototypes, s.features, k, mode, s.class_id);
    total[static_cast<std::size_t>(s.group)] += 1;
    if (r.predicted_class == s.class_id) correct[static_cast<std::size_t>(s.group)] += 1;
  }

  std::vector<double> row(through_group + 1, 0.0);
  for (std::size_t g = 0; g <= through_group; ++g) {
    if (total[g] == 0) {
      row[g] = std::numeric_limits<double>::quiet_NaN();
      if (warnings)
        warnings->push_back("no test samples for group " + std::to_string(g + 1) +
                            "; entry skipped");
      continue;
    }
    row[g] = static_cast<double>(correct[g]) / static_cast<double>(total[g]);
  }
  return row;
}

double average_accuracy(const AccuracyMatrix& t, std::size_t n) {
  if (n >= t.rows.size()) fail(ErrorKind::input, "accuracy row out of range");
  const std::vector<double>& row = t.rows[n];
  if (row.empty()) fail(ErrorKind::input, "empty accuracy row");
  double sum = 0.0;
  std::size_t defined = 0;
  for (double v : row) {
    if (std::isnan(v)) continue;
    sum += v;
    ++defined;
  }
  if (defined == 0) fail(ErrorKind::input, "accuracy row has no defined entries");
  return sum / static_cast<double>(defined);
}

double average_forgetting(const AccuracyMatrix& t, std::size_t n) {
  if (n >= t.rows.size()) fail(ErrorKind::input, "accuracy row out of range");
  if (n < 1) fail(ErrorKind::input, "forgetting needs at least two checkpoints");
  double sum = 0.0;
  std::size_t defined = 0;
  for (std::size_t tau = 0; tau < n; ++tau) {
    if (std::isnan(t.rows[n][tau])) continue;
    double peak = -std::numeric_limits<double>::infinity();
    for (std::size_t past = tau; past < n; ++past) {
      if (tau < t.rows[past].size() && !std::isnan(t.rows[past][tau]))
        peak = std::max(peak, t.rows[past][tau]);
    }
    if (!std::isfinite(peak)) continue;
    sum += peak - t.rows[n][tau];
    ++defined;
  }
  if (defined == 0) fail(ErrorKind::input, "no defined forgetting terms");
  return sum / static_cast<double>(defined);
}

KeyMetrics key_and_ub_metrics(const EncoderState& enc, const ModelState& state,
                              const TestSet& test) {
  if (test.samples.empty()) fail(ErrorKind::input, "empty test set");
  KeyMetrics out;
  std::size_t key_hits = 0, oracle_hits = 0;
  for (const TestSample& s : test.samples) {
    const InferenceResult retrieved =
        classify(enc, state.pool, state.prototypes, s.features, 1, KeyMode::retrieved);
    if (retrieved.top_key_class == s.class_id) ++key_hits;
    // a class the model never saw has no prompt to force and counts as a miss
    if (!state.pool.contains(s.class_id)) continue;
    const InferenceResult oracle = classify(enc, state.pool, state.prototypes, s.features,
                                            1, KeyMode::oracle, s.class_id);
    if (oracle.predicted_class == s.class_id) ++oracle_hits;
  }
  const double n = static_cast<double>(test.samples.size());
  out.key_accuracy = static_cast<double>(key_hits) / n;
  out.oracle_accuracy = static_cast<double>(oracle_hits) / n;
  return out;
}

}  // namespace f2ocl
