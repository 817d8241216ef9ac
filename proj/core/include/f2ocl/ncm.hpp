#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace f2ocl {

// Per-class running mean of augmented embeddings plus the number of samples
// absorbed so far.
struct Prototype {
  int class_id = -1;
  std::vector<double> mu;
  std::size_t count = 0;
};

// Prototypes stay sorted by class_id.
struct PrototypeStore {
  std::vector<Prototype> prototypes;

  std::size_t size() const { return prototypes.size(); }
  bool contains(int class_id) const;
};

Prototype* find_prototype(PrototypeStore& store, int class_id);
const Prototype* find_prototype(const PrototypeStore& store, int class_id);

// New-class placeholder: mu = z (an embedding made with the freshly
// initialized prompt), count = 0. Count 0 makes the first update collapse to
// the plain batch mean, so the placeholder carries no lasting weight.
// Duplicate class -> logic error.
Prototype& create_prototype(PrototypeStore& store, int class_id, std::span<const double> z);

// Running-mean fold of a batch of embeddings:
//   mu' = (count * mu + sum(embeddings)) / (count + m),  count' = count + m.
// Empty list or dimension mismatch -> input error; non-finite result -> numeric error.
void update_prototype(Prototype& proto, const std::vector<std::vector<double>>& embeddings);

// Nearest prototype by cosine similarity; ties broken toward the smaller
// class_id. Empty store -> state error.
int predict(const PrototypeStore& store, std::span<const double> embedding);

}  // namespace f2ocl
