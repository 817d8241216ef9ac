#include "f2ocl/datagen.hpp"

#include <algorithm>
#include <map>
#include <string>
#include <utility>

#include <json.hpp>

#include "f2ocl/errors.hpp"
#include "f2ocl/matrix.hpp"
#include "f2ocl/rng.hpp"
#include "internal/text_io.hpp"

namespace f2ocl {

namespace {

using internal::format_double;
using internal::parse_double;
using internal::parse_int;
using internal::read_file;
using internal::split;
using internal::split_lines;
using internal::write_file;

// rng stream tags for data synthesis
constexpr std::uint64_t kClassMeanStream = 0x50;
constexpr std::uint64_t kSampleNoiseStream = 0x51;
constexpr std::uint64_t kGroupShuffleStream = 0x52;

std::string feature_header(std::size_t dim) {
  std::string h = "class_id";
  for (std::size_t i = 0; i < dim; ++i) h += ",f_" + std::to_string(i);
  h += "\n";
  return h;
}

void append_row(std::string& out, int class_id, const std::vector<double>& features) {
  out += std::to_string(class_id);
  for (double f : features) {
    out += ',';
    out += format_double(f);
  }
  out += '\n';
}

struct ParsedRow {
  int class_id = -1;
  std::vector<double> features;
};

ParsedRow parse_row(std::string_view line, std::size_t line_number, std::size_t dim) {
  const std::vector<std::string_view> fields = split(line, ',');
  if (fields.size() != dim + 1)
    fail(ErrorKind::parse, "line " + std::to_string(line_number) + ": expected " +
                               std::to_string(dim + 1) + " fields, got " +
                               std::to_string(fields.size()));
  long long id = 0;
  if (!parse_int(fields[0], id) || id < 0)
    fail(ErrorKind::parse,
         "line " + std::to_string(line_number) + ": bad class id '" +
             std::string(fields[0]) + "'");
  ParsedRow row;
  row.class_id = static_cast<int>(id);
  row.features.resize(dim);
  for (std::size_t i = 0; i < dim; ++i) {
    if (!parse_double(fields[i + 1], row.features[i]))
      fail(ErrorKind::parse, "line " + std::to_string(line_number) + ": bad number '" +
                                 std::string(fields[i + 1]) + "'");
  }
  return row;
}

// Header gives the feature count; it must match feature_header's shape.
std::size_t parse_header(const std::vector<std::string_view>& lines, const std::string& path) {
  if (lines.empty()) fail(ErrorKind::parse, path + ": missing header");
  const std::vector<std::string_view> fields = split(lines[0], ',');
  if (fields.empty() || fields[0] != "class_id")
    fail(ErrorKind::parse, path + ": header must start with class_id");
  return fields.size() - 1;
}

std::map<int, int> load_manifest(const std::string& path) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::parse, path + ": " + e.what());
  }
  if (!doc.is_object()) fail(ErrorKind::parse, path + ": manifest must be a JSON object");
  std::map<int, int> groups;
  for (const auto& [key, value] : doc.items()) {
    long long id = 0;
    if (!parse_int(key, id) || id < 0 || !value.is_number_integer())
      fail(ErrorKind::parse, path + ": bad manifest entry '" + key + "'");
    groups[static_cast<int>(id)] = value.get<int>();
  }
  return groups;
}

}  // namespace

void StreamConfig::validate() const {
  if (num_groups == 0) fail(ErrorKind::config, "num_groups must be positive");
  if (classes_per_group == 0) fail(ErrorKind::config, "classes_per_group must be positive");
  if (samples_per_class == 0) fail(ErrorKind::config, "samples_per_class must be positive");
  if (input_dim == 0) fail(ErrorKind::config, "input_dim must be positive");
  if (batch_size == 0) fail(ErrorKind::config, "batch_size must be positive");
  if (cluster_spread < 0.0) fail(ErrorKind::config, "cluster_spread must be non-negative");
  if (!(cluster_separation > 0.0))
    fail(ErrorKind::config, "cluster_separation must be positive");
}

GeneratedData generate_synthetic_stream(const StreamConfig& cfg) {
  cfg.validate();
  GeneratedData data;

  const std::size_t n_test = cfg.samples_per_class / 5;  // 20% held out
  const std::size_t n_train = cfg.samples_per_class - n_test;

  for (std::size_t g = 0; g < cfg.num_groups; ++g) {
    // All training samples of this group's classes, then a seeded shuffle so
    // classes interleave inside the group.
    std::vector<Sample> group_train;
    group_train.reserve(cfg.classes_per_group * n_train);

    for (std::size_t s = 0; s < cfg.classes_per_group; ++s) {
      const int class_id = static_cast<int>(g * cfg.classes_per_group + s);

      CounterRng mean_rng(cfg.seed, stream_id(kClassMeanStream, class_id));
      std::vector<double> mean(cfg.input_dim);
      for (double& v : mean) v = mean_rng.next_gaussian();
      mean = normalized(mean);
      for (double& v : mean) v *= cfg.cluster_separation;

      CounterRng noise_rng(cfg.seed, stream_id(kSampleNoiseStream, class_id));
      for (std::size_t i = 0; i < cfg.samples_per_class; ++i) {
        std::vector<double> x(cfg.input_dim);
        for (std::size_t d = 0; d < cfg.input_dim; ++d)
          x[d] = mean[d] + noise_rng.next_gaussian(cfg.cluster_spread);
        if (i < n_train) {
          group_train.push_back({class_id, std::move(x)});
        } else {
          data.test.samples.push_back({class_id, static_cast<int>(g), std::move(x)});
        }
      }
    }

    CounterRng shuffle_rng(cfg.seed, stream_id(kGroupShuffleStream, g));
    for (std::size_t i = group_train.size(); i > 1; --i) {
      const std::size_t j = shuffle_rng.next_below(i);
      std::swap(group_train[i - 1], group_train[j]);
    }

    for (std::size_t start = 0; start < group_train.size(); start += cfg.batch_size) {
      Batch batch;
      batch.group = static_cast<int>(g);
      const std::size_t end = std::min(start + cfg.batch_size, group_train.size());
      batch.samples.assign(group_train.begin() + static_cast<std::ptrdiff_t>(start),
                           group_train.begin() + static_cast<std::ptrdiff_t>(end));
      data.stream.batches.push_back(std::move(batch));
    }
  }

  for (std::size_t t = 0; t < data.stream.batches.size(); ++t) {
    for (const Sample& s : data.stream.batches[t].samples) {
      auto [it, inserted] = data.stream.intervals.try_emplace(s.class_id, t, t);
      if (!inserted) it->second.second = t;
    }
  }
  return data;
}

LoadedStream load_stream(const std::string& stream_path, const std::string& manifest_path,
                         std::size_t batch_size) {
  if (batch_size == 0) fail(ErrorKind::config, "batch_size must be positive");
  const std::map<int, int> groups = load_manifest(manifest_path);
  const std::string text = read_file(stream_path);
  const std::vector<std::string_view> lines = split_lines(text);
  const std::size_t dim = parse_header(lines, stream_path);

  LoadedStream loaded;
  Batch current;
  auto flush = [&] {
    if (!current.samples.empty()) {
      loaded.stream.batches.push_back(std::move(current));
      current = Batch{};
    }
  };

  for (std::size_t ln = 1; ln < lines.size(); ++ln) {
    ParsedRow row = parse_row(lines[ln], ln + 1, dim);
    const auto group_it = groups.find(row.class_id);
    if (group_it == groups.end())
      fail(ErrorKind::parse, "line " + std::to_string(ln + 1) + ": class " +
                                 std::to_string(row.class_id) + " missing from manifest");
    const int group = group_it->second;
    if (!current.samples.empty() && (current.group != group || current.samples.size() == batch_size))
      flush();
    current.group = group;
    current.samples.push_back({row.class_id, std::move(row.features)});
  }
  flush();

  for (std::size_t t = 0; t < loaded.stream.batches.size(); ++t) {
    for (const Sample& s : loaded.stream.batches[t].samples) {
      auto [it, inserted] = loaded.stream.intervals.try_emplace(s.class_id, t, t);
      if (!inserted) it->second.second = t;
    }
  }

  // A class skipping the odd batch inside its own group is normal under
  // shuffling; an interval that straddles another group's batches breaks the
  // group-of-batches protocol and is worth a warning (not a failure).
  for (const auto& [class_id, interval] : loaded.stream.intervals) {
    const int group = groups.at(class_id);
    for (std::size_t t = interval.first; t <= interval.second; ++t) {
      if (loaded.stream.batches[t].group != group) {
        loaded.warnings.push_back("class " + std::to_string(class_id) +
                                  " has a non-contiguous batch interval: batch " +
                                  std::to_string(t) + " belongs to group " +
                                  std::to_string(loaded.stream.batches[t].group));
        break;
      }
    }
  }
  return loaded;
}

TestSet load_test_set(const std::string& test_path, const std::string& manifest_path) {
  const std::map<int, int> groups = load_manifest(manifest_path);
  const std::string text = read_file(test_path);
  const std::vector<std::string_view> lines = split_lines(text);
  const std::size_t dim = parse_header(lines, test_path);

  TestSet test;
  for (std::size_t ln = 1; ln < lines.size(); ++ln) {
    ParsedRow row = parse_row(lines[ln], ln + 1, dim);
    const auto group_it = groups.find(row.class_id);
    if (group_it == groups.end())
      fail(ErrorKind::parse, "line " + std::to_string(ln + 1) + ": class " +
                                 std::to_string(row.class_id) + " missing from manifest");
    test.samples.push_back({row.class_id, group_it->second, std::move(row.features)});
  }
  return test;
}

void save_stream_csv(const StreamSchedule& stream, const std::string& path) {
  std::size_t dim = 0;
  for (const Batch& b : stream.batches) {
    if (!b.samples.empty()) {
      dim = b.samples.front().features.size();
      break;
    }
  }
  std::string out = feature_header(dim);
  for (const Batch& b : stream.batches) {
    for (const Sample& s : b.samples) append_row(out, s.class_id, s.features);
  }
  write_file(path, out);
}

void save_test_csv(const TestSet& test, const std::string& path) {
  const std::size_t dim = test.samples.empty() ? 0 : test.samples.front().features.size();
  std::string out = feature_header(dim);
  for (const TestSample& s : test.samples) append_row(out, s.class_id, s.features);
  write_file(path, out);
}

void save_manifest(const GeneratedData& data, const std::string& path) {
  std::map<int, int> groups;
  for (const Batch& b : data.stream.batches) {
    for (const Sample& s : b.samples) groups[s.class_id] = b.group;
  }
  for (const TestSample& s : data.test.samples) groups[s.class_id] = s.group;
  nlohmann::json doc = nlohmann::json::object();
  for (const auto& [class_id, group] : groups) doc[std::to_string(class_id)] = group;
  write_file(path, doc.dump(2) + "\n");
}

}  // namespace f2ocl
