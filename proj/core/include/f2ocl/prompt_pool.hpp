#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "f2ocl/encoder.hpp"

namespace f2ocl {

// One (class, key, prompt) triplet. Keys live on the unit sphere.
struct PromptEntry {
  int class_id = -1;
  std::vector<double> key;
  Prompt prompt;
};

// Entries stay sorted by class_id so iteration order is deterministic.
struct PromptPool {
  std::vector<PromptEntry> entries;

  std::size_t size() const { return entries.size(); }
  bool contains(int class_id) const;
};

PromptEntry* find_entry(PromptPool& pool, int class_id);
const PromptEntry* find_entry(const PromptPool& pool, int class_id);

// Creates the triplet for a class seen for the first time. The key is a
// unit-normalized Gaussian draw, the prompt is Gaussian with stddev 0.02;
// both come from per-class rng streams so insertion order is irrelevant.
// Duplicate class -> logic error.
PromptEntry& insert_class(PromptPool& pool, int class_id, std::size_t prompt_length,
                          std::size_t token_dim, std::uint64_t seed);

// Top-k entries by cosine(query, key), descending; ties broken toward the
// smaller class_id. Returns min(k, size) entries; empty pool -> state error.
std::vector<const PromptEntry*> retrieve_top_k(const PromptPool& pool,
                                               std::span<const double> query,
                                               std::size_t k);

// One gradient-ascent step on the key attraction objective
//   alpha * cos(k', k_old) + beta * sum over queries of cos(k', q)
// starting from k' = k_old, followed by renormalization. The first term has
// zero gradient at the start point (cosine is maximal there), so only the
// query attraction moves the key; alpha still matters through beta.
// Any zero-norm query -> input error.
void update_key(PromptEntry& entry, const std::vector<std::vector<double>>& queries,
                double alpha, double beta, double lr);

}  // namespace f2ocl
