#pragma once

#include <cstddef>
#include <cstdint>
#include <random>

#include "ehgm/tensor.hpp"

namespace ehgm {

struct RandomModelOptions {
  /// Hyperedges drawn per degree (capped by C(n1, d)).
  int max_hyperedges_per_degree = 3;
  /// Highest degree to populate; 0 means n1.
  int max_degree = 0;
  /// Probability that an entry of a declared hyperedge is nonzero.
  double entry_density = 0.7;
  /// Hyperedges with more injective point tuples than this become lazy,
  /// hash-derived tensors instead of stored tables.
  std::size_t max_stored_entries = 4096;
  /// Costs drawn from {0.25, 0.5, ..., 2}: sums are exact, so equal-cost
  /// mappings tie exactly and exercise the lexicographic tie-break.
  bool quantized = false;
};

/// Random sparse nonnegative tensors for an n1 x n2 instance. Deterministic in `rng`.
HypergraphModel random_model(int vertex_count, int point_count, std::mt19937_64& rng,
                             const RandomModelOptions& options = {});

}  // namespace ehgm
