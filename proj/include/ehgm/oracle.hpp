#pragma once

#include <cstddef>
#include <vector>

#include "ehgm/tensor.hpp"
#include "ehgm/types.hpp"

namespace ehgm {

inline constexpr double kOracleMappingLimit = 1e7;

/// n2! / (n2 - n1)!, as a double so that large instances do not overflow.
double injective_mapping_count(int vertex_count, int point_count);

/// The `count` lowest-cost injective mappings, ascending by cost with
/// lexicographic tie-break, found by evaluating objective_eval on every mapping
/// that honors `seeds`. Throws TooLarge beyond kOracleMappingLimit mappings.
std::vector<FullAssignment> top_k_exhaustive(const HypergraphModel& model, int count, const SeedSet& seeds = {});

/// The single best mapping (top_k_exhaustive with count 1).
FullAssignment exhaustive_solve(const HypergraphModel& model, const SeedSet& seeds = {});

std::vector<FullAssignment> top_k_exhaustive(const VertexSet& vertices, const PointSet& points,
                                             const HypergraphModel& model, int count);
FullAssignment exhaustive_solve(const VertexSet& vertices, const PointSet& points, const HypergraphModel& model);

}  // namespace ehgm
