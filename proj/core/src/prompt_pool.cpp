#include "f2ocl/prompt_pool.hpp"

#include <algorithm>
#include <cmath>

#include "f2ocl/errors.hpp"
#include "f2ocl/rng.hpp"

namespace f2ocl {

namespace {

// rng stream tags for per-class initialization
constexpr std::uint64_t kKeyStream = 0x40;
constexpr std::uint64_t kPromptStream = 0x41;
constexpr double kPromptInitStd = 0.02;

auto lower_bound_entry(auto& entries, int class_id) {
  return std::lower_bound(entries.begin(), entries.end(), class_id,
                          [](const PromptEntry& e, int id) { return e.class_id < id; });
}

}  // namespace

bool PromptPool::contains(int class_id) const {
  return find_entry(*this, class_id) != nullptr;
}

PromptEntry* find_entry(PromptPool& pool, int class_id) {
  auto it = lower_bound_entry(pool.entries, class_id);
  if (it == pool.entries.end() || it->class_id != class_id) return nullptr;
  return &*it;
}

const PromptEntry* find_entry(const PromptPool& pool, int class_id) {
  auto it = lower_bound_entry(pool.entries, class_id);
  if (it == pool.entries.end() || it->class_id != class_id) return nullptr;
  return &*it;
}

PromptEntry& insert_class(PromptPool& pool, int class_id, std::size_t prompt_length,
                          std::size_t token_dim, std::uint64_t seed) {
  if (class_id < 0) fail(ErrorKind::input, "class_id must be non-negative");
  if (prompt_length == 0 || token_dim == 0)
    fail(ErrorKind::config, "prompt dimensions must be positive");
  auto it = lower_bound_entry(pool.entries, class_id);
  if (it != pool.entries.end() && it->class_id == class_id)
    fail(ErrorKind::logic, "class " + std::to_string(class_id) + " already in prompt pool");

  PromptEntry entry;
  entry.class_id = class_id;

  CounterRng key_rng(seed, stream_id(kKeyStream, static_cast<std::uint64_t>(class_id)));
  entry.key.resize(token_dim);
  for (double& v : entry.key) v = key_rng.next_gaussian();
  entry.key = normalized(entry.key);

  CounterRng prompt_rng(seed, stream_id(kPromptStream, static_cast<std::uint64_t>(class_id)));
  entry.prompt = Prompt(prompt_length, token_dim);
  for (double& v : entry.prompt.tokens.data) v = prompt_rng.next_gaussian(kPromptInitStd);

  return *pool.entries.insert(it, std::move(entry));
}

std::vector<const PromptEntry*> retrieve_top_k(const PromptPool& pool,
                                               std::span<const double> query,
                                               std::size_t k) {
  if (pool.entries.empty()) fail(ErrorKind::state, "prompt pool is empty");
  if (k == 0) fail(ErrorKind::input, "retrieval needs k >= 1");

  std::vector<const PromptEntry*> order;
  order.reserve(pool.entries.size());
  for (const PromptEntry& e : pool.entries) order.push_back(&e);
  // entries are sorted by class_id, and stable_sort keeps that order within
  // equal similarities — exactly the smaller-class tie-break
  std::stable_sort(order.begin(), order.end(),
                   [&](const PromptEntry* a, const PromptEntry* b) {
                     return cosine_similarity(query, a->key) >
                            cosine_similarity(query, b->key);
                   });
  order.resize(std::min(k, order.size()));
  return order;
}

void update_key(PromptEntry& entry, const std::vector<std::vector<double>>& queries,
                double alpha, double beta, double lr) {
  if (queries.empty()) fail(ErrorKind::input, "update_key needs at least one query");
  (void)alpha;  // cos(k', k_old) is maximal at the start point: zero gradient

  const std::size_t d = entry.key.size();
  std::vector<double> grad(d, 0.0);
  for (const std::vector<double>& q : queries) {
    if (q.size() != d) fail(ErrorKind::input, "query dimension mismatch in update_key");
    const double norm = l2_norm(q);
    if (norm == 0.0) fail(ErrorKind::input, "zero-norm query in update_key");
    // d cos(k, q_hat) / dk at unit k: q_hat - (k . q_hat) k
    const double k_dot_q = dot(entry.key, q) / norm;
    for (std::size_t i = 0; i < d; ++i)
      grad[i] += q[i] / norm - k_dot_q * entry.key[i];
  }

  for (std::size_t i = 0; i < d; ++i) entry.key[i] += lr * beta * grad[i];
  entry.key = normalized(entry.key);
}

}  // namespace f2ocl
