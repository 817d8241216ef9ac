#include "f2ocl/ncm.hpp"

#include <algorithm>

#include "f2ocl/errors.hpp"
#include "f2ocl/matrix.hpp"

namespace f2ocl {

namespace {

auto lower_bound_proto(auto& protos, int class_id) {
  return std::lower_bound(protos.begin(), protos.end(), class_id,
                          [](const Prototype& p, int id) { return p.class_id < id; });
}

}  // namespace

bool PrototypeStore::contains(int class_id) const {
  return find_prototype(*this, class_id) != nullptr;
}

Prototype* find_prototype(PrototypeStore& store, int class_id) {
  auto it = lower_bound_proto(store.prototypes, class_id);
  if (it == store.prototypes.end() || it->class_id != class_id) return nullptr;
  return &*it;
}

const Prototype* find_prototype(const PrototypeStore& store, int class_id) {
  auto it = lower_bound_proto(store.prototypes, class_id);
  if (it == store.prototypes.end() || it->class_id != class_id) return nullptr;
  return &*it;
}

Prototype& create_prototype(PrototypeStore& store, int class_id, std::span<const double> z) {
  if (class_id < 0) fail(ErrorKind::input, "class_id must be non-negative");
  auto it = lower_bound_proto(store.prototypes, class_id);
  if (it != store.prototypes.end() && it->class_id == class_id)
    fail(ErrorKind::logic, "class " + std::to_string(class_id) + " already has a prototype");
  Prototype proto;
  proto.class_id = class_id;
  proto.mu.assign(z.begin(), z.end());
  proto.count = 0;
  return *store.prototypes.insert(it, std::move(proto));
}

void update_prototype(Prototype& proto, const std::vector<std::vector<double>>& embeddings) {
  if (embeddings.empty()) fail(ErrorKind::input, "update_prototype needs embeddings");
  const std::size_t d = proto.mu.size();
  const double n = static_cast<double>(proto.count);
  const double total = n + static_cast<double>(embeddings.size());
  std::vector<double> acc(d, 0.0);
  for (const std::vector<double>& z : embeddings) {
    if (z.size() != d) fail(ErrorKind::input, "embedding dimension mismatch in update_prototype");
    for (std::size_t i = 0; i < d; ++i) acc[i] += z[i];
  }
  for (std::size_t i = 0; i < d; ++i) proto.mu[i] = (n * proto.mu[i] + acc[i]) / total;
  if (!all_finite(proto.mu)) fail(ErrorKind::numeric, "non-finite prototype after update");
  proto.count += embeddings.size();
}

int predict(const PrototypeStore& store, std::span<const double> embedding) {
  if (store.prototypes.empty()) fail(ErrorKind::state, "prototype store is empty");
  int best_class = store.prototypes.front().class_id;
  double best_sim = cosine_similarity(embedding, store.prototypes.front().mu);
  for (std::size_t i = 1; i < store.prototypes.size(); ++i) {
    const Prototype& p = store.prototypes[i];
    const double sim = cosine_similarity(embedding, p.mu);
    // strict > keeps the smaller class_id on ties (store is sorted)
    if (sim > best_sim) {
      best_sim = sim;
      best_class = p.class_id;
    }
  }
  return best_class;
}

}  // namespace f2ocl
