#pragma once

#include <atomic>
#include <cstdint>
#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include "ehgm/lru_cache.hpp"
#include "ehgm/tensor.hpp"
#include "ehgm/types.hpp"

namespace ehgm {

/// Full objective: the sum over every degree d and every increasing vertex
/// d-tuple of the tensor entry under `mapping`. Accumulates degree-ascending,
/// hyperedges in lexicographic order.
/// Throws DuplicatePoint / PointOutOfRange for an invalid mapping and
/// DimensionMismatch if mapping.size() != n1.
double objective_eval(std::span<const int> mapping, const HypergraphModel& model);

struct StratificationOptions {
  /// Turn degree <= 2k lazy tensors into dense lookup tables up front.
  bool materialize = false;
  /// Memoize lazy entries (0 disables memoization).
  std::size_t cache_capacity = 0;
  /// Largest dense table (in entries) materialization may allocate per hyperedge;
  /// bigger hyperedges stay lazy.
  std::size_t dense_limit = std::size_t{1} << 22;
};

/// Splits the objective by branch. With branch size k and M = n1/k branches,
/// every hyperedge is owned by the branch holding its highest vertex. Owned
/// hyperedges of degree <= 2k form the selection cost H_m; the rest form the
/// aggregation cost I_m (nonempty only for m >= 3). Branches are 1-based.
///
/// Immutable after construction apart from the internal lazy-entry cache, so
/// one instance can serve concurrent workers.
class StratifiedObjective {
 public:
  /// Throws KNotDivisor unless 1 <= k and k divides n1.
  StratifiedObjective(const HypergraphModel& model, int branch_size,
                      StratificationOptions options = {});

  int branch_size() const { return branch_size_; }
  int branch_count() const { return branch_count_; }
  int vertex_count() const { return model_->vertex_count(); }
  int point_count() const { return model_->point_count(); }
  const HypergraphModel& model() const { return *model_; }

  /// `assignment` holds the points of vertices 0 .. m*k-1 (at least).
  double selection_cost(int m, std::span<const int> assignment) const;
  double aggregation_cost(int m, std::span<const int> assignment) const;
  bool has_aggregation(int m) const { return !aggregation_[static_cast<std::size_t>(m)].empty(); }

  /// Objective through the same term evaluators, in objective_eval's order.
  double full_cost(std::span<const int> mapping) const;

  /// Number of lazy entries actually computed (cache misses).
  std::size_t lazy_evaluations() const { return lazy_evaluations_.load(std::memory_order_relaxed); }

 private:
  struct Term {
    std::vector<int> vertices;
    const DissimilarityTensor* tensor = nullptr;
    std::size_t hyperedge = 0;
    std::vector<double> dense;  // n2^d table when materialized
    std::uint32_t id = 0;
  };

  double term_cost(const Term& term, std::span<const int> assignment) const;
  double sum_terms(const std::vector<std::size_t>& terms, std::span<const int> assignment) const;

  const HypergraphModel* model_;
  int branch_size_;
  int branch_count_;
  std::vector<Term> terms_;                          // canonical order
  std::vector<std::vector<std::size_t>> selection_;   // index m, 1-based
  std::vector<std::vector<std::size_t>> aggregation_;
  std::unique_ptr<LruCache> cache_;
  mutable std::atomic<std::size_t> lazy_evaluations_{0};
};

/// Selection cost of the first branch; k = first_branch.size().
double h1_cost(std::span<const int> first_branch, const HypergraphModel& model);

/// Selection cost H_m of `branch` given the committed prefix (m >= 1).
/// Throws BranchOrderViolation if prior holds other than (m-1)k points,
/// DuplicatePoint if branch and prior overlap.
double hm_cost(int m, std::span<const int> branch, const PartialAssignment& prior,
               const HypergraphModel& model);

/// Aggregation cost I_m: degree > 2k hyperedges whose highest vertex lies in branch m.
double im_cost(int m, std::span<const int> branch, const PartialAssignment& prior,
               const HypergraphModel& model);

/// Sum of all H_m and I_m for a complete mapping.
double stratified_cost(std::span<const int> mapping, const HypergraphModel& model, int branch_size);

/// True iff the stratified sum matches objective_eval within 1e-9 relative.
bool decomposition_check(std::span<const int> mapping, const HypergraphModel& model, int branch_size);

bool nearly_equal(double a, double b, double relative_tolerance = 1e-9);

}  // namespace ehgm
