#include "ehgm/oracle.hpp"

#include <algorithm>

#include "ehgm/error.hpp"
#include "ehgm/objective.hpp"

namespace ehgm {

double injective_mapping_count(int vertex_count, int point_count) {
  double count = 1.0;
  for (int i = 0; i < vertex_count; ++i) count *= static_cast<double>(point_count - i);
  return std::max(count, 0.0);
}

std::vector<FullAssignment> top_k_exhaustive(const HypergraphModel& model, int count, const SeedSet& seeds) {
  const int n1 = model.vertex_count();
  const int n2 = model.point_count();
  if (count < 1) throw Error(ErrorCode::InvalidArgument, "count must be >= 1");
  if (n2 < n1) throw Error(ErrorCode::InfeasibleSize, "n2 < n1");
  if (injective_mapping_count(n1, n2) > kOracleMappingLimit) {
    throw Error(ErrorCode::TooLarge, "exhaustive enumeration of " + std::to_string(n2) + "!/(" +
                                         std::to_string(n2) + "-" + std::to_string(n1) + ")! mappings refused");
  }
  for (const auto& [v, p] : seeds.fixed) {
    if (v < 0 || v >= n1 || p < 0 || p >= n2) throw Error(ErrorCode::SeedConflict, "seed out of range");
  }

  // Lexicographic enumeration plus a strict (cost, mapping) order keeps ties deterministic.
  std::vector<FullAssignment> best;
  std::vector<int> mapping(static_cast<std::size_t>(n1));
  std::vector<bool> used(static_cast<std::size_t>(n2), false);
  auto descend = [&](auto&& self, int v) -> void {
    if (v == n1) {
      FullAssignment candidate{mapping, objective_eval(mapping, model)};
      if (static_cast<int>(best.size()) == count && !ranks_before(candidate, best.back())) return;
      best.insert(std::upper_bound(best.begin(), best.end(), candidate, ranks_before), std::move(candidate));
      if (static_cast<int>(best.size()) > count) best.pop_back();
      return;
    }
    auto seeded = seeds.fixed.find(v);
    for (int p = 0; p < n2; ++p) {
      if (used[static_cast<std::size_t>(p)]) continue;
      if (seeded != seeds.fixed.end() && seeded->second != p) continue;
      used[static_cast<std::size_t>(p)] = true;
      mapping[static_cast<std::size_t>(v)] = p;
      self(self, v + 1);
      used[static_cast<std::size_t>(p)] = false;
    }
  };
  descend(descend, 0);
  return best;
}

FullAssignment exhaustive_solve(const HypergraphModel& model, const SeedSet& seeds) {
  auto best = top_k_exhaustive(model, 1, seeds);
  if (best.empty()) throw Error(ErrorCode::SeedConflict, "no mapping honors the seeds");
  return best.front();
}

std::vector<FullAssignment> top_k_exhaustive(const VertexSet& vertices, const PointSet& points,
                                             const HypergraphModel& model, int count) {
  if (vertices.size() != model.vertex_count() || points.size() != model.point_count()) {
    throw Error(ErrorCode::DimensionMismatch, "vertex or point set does not match the model");
  }
  return top_k_exhaustive(model, count);
}

FullAssignment exhaustive_solve(const VertexSet& vertices, const PointSet& points, const HypergraphModel& model) {
  return top_k_exhaustive(vertices, points, model, 1).front();
}

}  // namespace ehgm
