#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "f2ocl/encoder.hpp"
#include "f2ocl/inference.hpp"
#include "f2ocl/stream.hpp"
#include "f2ocl/trainer.hpp"

namespace f2ocl {

// Lower-triangular accuracy record: row(n)[tau] = accuracy on the test
// classes of group tau after training through group n. Rows are appended as
// checkpoints are evaluated; groups and checkpoints are 0-based here, the
// CSV output labels them 1-based.
struct AccuracyMatrix {
  std::vector<std::vector<double>> rows;

  std::size_t checkpoints() const { return rows.size(); }
};

// Accuracy per group 0..through_group for one trained checkpoint, using the
// full inference path. A group with no test samples gets NaN and a warning.
std::vector<double> evaluate_group_checkpoint(const EncoderState& enc,
                                              const ModelState& state, const TestSet& test,
                                              std::size_t through_group, std::size_t k,
                                              KeyMode mode,
                                              std::vector<std::string>* warnings = nullptr);

// A_n = mean of T[n][0..n]; n is the 0-based checkpoint row. NaN entries
// (empty groups) are excluded from the mean. Empty row -> input error.
double average_accuracy(const AccuracyMatrix& t, std::size_t n);

// F_n = mean over tau < n of (max_{tau <= tau' < n} T[tau'][tau]) - T[n][tau].
// Terms are kept signed (an accuracy above every past value contributes
// negatively). Requires n >= 1; NaN columns are skipped.
double average_forgetting(const AccuracyMatrix& t, std::size_t n);

struct KeyMetrics {
  double key_accuracy = 0.0;  // A_k: top-1 key class == true class
  double oracle_accuracy = 0.0;  // UB: accuracy with the true class's prompt forced
};

// A_k always grades the single best key; UB always forces one prompt, so
// neither depends on the inference-time K.
KeyMetrics key_and_ub_metrics(const EncoderState& enc, const ModelState& state,
                              const TestSet& test);

}  // namespace f2ocl
