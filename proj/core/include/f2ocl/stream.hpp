#pragma once

#include <cstddef>
#include <map>
#include <utility>
#include <vector>

namespace f2ocl {

struct Sample {
  int class_id = -1;
  std::vector<double> features;
};

// One training batch. `group` is evaluation metadata only: the trainer never
// reads it, and training output is bit-identical with it erased.
struct Batch {
  std::vector<Sample> samples;
  int group = -1;
};

struct StreamSchedule {
  std::vector<Batch> batches;
  // Per class: [first, last] batch index in which the class occurs.
  std::map<int, std::pair<std::size_t, std::size_t>> intervals;

  std::size_t total_samples() const {
    std::size_t n = 0;
    for (const Batch& b : batches) n += b.samples.size();
    return n;
  }
};

struct TestSample {
  int class_id = -1;
  int group = -1;
  std::vector<double> features;
};

struct TestSet {
  std::vector<TestSample> samples;
};

}  // namespace f2ocl
