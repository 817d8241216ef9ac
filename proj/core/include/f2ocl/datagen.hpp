#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "f2ocl/stream.hpp"

namespace f2ocl {

struct StreamConfig {
  std::size_t num_groups = 10;
  std::size_t classes_per_group = 5;
  std::size_t samples_per_class = 100;
  std::size_t input_dim = 32;
  std::size_t batch_size = 10;
  double cluster_spread = 0.3;     // sigma of per-sample Gaussian noise
  double cluster_separation = 3.0;  // radius of the sphere class means live on
  std::uint64_t seed = 1;

  void validate() const;  // throws ErrorKind::config
};

struct GeneratedData {
  StreamSchedule stream;
  TestSet test;
};

// Synthetic class-incremental stream: per class a seeded mean on the sphere
// of radius cluster_separation, samples = mean + N(0, spread) noise. Class
// ids are group*classes_per_group + slot, so groups never share classes.
// Per class the last 20% of samples (floor) are held out as test; the rest
// are shuffled within their group and chunked into batches of batch_size
// (the last batch of a group may be short — batches never span groups).
GeneratedData generate_synthetic_stream(const StreamConfig& cfg);

struct LoadedStream {
  StreamSchedule stream;
  std::vector<std::string> warnings;  // e.g. non-contiguous class intervals
};

// Reads a stream CSV + sidecar manifest (class -> group) and re-batches in
// file order with the given batch size; a batch closes early when the next
// sample belongs to a different group. Intervals come from actual batch
// indices. Malformed rows -> parse error naming the line.
LoadedStream load_stream(const std::string& stream_path, const std::string& manifest_path,
                         std::size_t batch_size);

TestSet load_test_set(const std::string& test_path, const std::string& manifest_path);

void save_stream_csv(const StreamSchedule& stream, const std::string& path);
void save_test_csv(const TestSet& test, const std::string& path);
// Manifest: JSON object mapping class_id (as text) -> group index.
void save_manifest(const GeneratedData& data, const std::string& path);

}  // namespace f2ocl
