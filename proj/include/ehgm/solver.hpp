#pragma once

#include <atomic>
#include <chrono>
#include <cstddef>
#include <limits>
#include <mutex>
#include <optional>
#include <span>
#include <vector>

#include "ehgm/objective.hpp"
#include "ehgm/tensor.hpp"
#include "ehgm/types.hpp"

namespace ehgm {

inline constexpr std::size_t kDefaultCacheCapacity = std::size_t{1} << 24;

struct SearchConfig {
  int branch_size = 1;
  double initial_bound = std::numeric_limits<double>::infinity();
  int top_k = 1;
  std::optional<std::chrono::duration<double>> time_limit;
  SeedSet seeds;
  int workers = 1;
  std::size_t cache_capacity = kDefaultCacheCapacity;
  /// Record commit/leaf/backtrack events (single worker only).
  bool record_trace = false;
};

struct BranchCandidate {
  std::vector<int> points;
  double selection_cost = 0.0;
};

/// Candidates for branch m, ascending by selection cost, ties by point tuple.
struct BranchQueue {
  int branch = 1;
  std::vector<BranchCandidate> candidates;
};

/// The best `capacity` complete assignments seen so far. The pruning bound is
/// the cost of the worst kept assignment once the list is full, otherwise the
/// initial bound. Insertions are serialized; bound() is a lock-free read that
/// may lag behind a concurrent insert, which only makes it larger.
class Incumbent {
 public:
  Incumbent(int capacity, double initial_bound);

  double bound() const { return bound_.load(std::memory_order_acquire); }
  /// Inserts when it ranks among the best `capacity`. Returns whether it was kept.
  bool offer(FullAssignment assignment);
  std::vector<FullAssignment> solutions() const;
  std::vector<double> bound_history() const;

 private:
  int capacity_;
  double initial_bound_;
  mutable std::mutex mutex_;
  std::vector<FullAssignment> best_;
  std::vector<double> history_;
  std::atomic<double> bound_;
};

/// Depth-first search state: committed branch tuples with their stored H and I
/// values. The partial cost is always the sum of the stored values.
class SearchState {
 public:
  explicit SearchState(const StratifiedObjective& objective);

  /// Commits `points` as the next branch; computes its aggregation cost.
  void commit(std::span<const int> points, double selection_cost);
  /// Drops the last committed branch.
  void backtrack();

  int depth() const { return static_cast<int>(selection_costs_.size()); }
  double cost() const { return cost_; }
  bool used(int point) const { return used_[static_cast<std::size_t>(point)]; }
  std::span<const int> assignment() const { return assignment_; }
  PartialAssignment partial() const { return {assignment_, objective_->branch_size()}; }
  double selection_cost(int m) const { return selection_costs_[static_cast<std::size_t>(m - 1)]; }
  double aggregation_cost(int m) const { return aggregation_costs_[static_cast<std::size_t>(m - 1)]; }

 private:
  void recompute_cost();

  const StratifiedObjective* objective_;
  std::vector<int> assignment_;
  std::vector<bool> used_;
  std::vector<double> selection_costs_;
  std::vector<double> aggregation_costs_;
  double cost_ = 0.0;
};

struct TraceEvent {
  enum class Kind { commit, leaf, backtrack };
  Kind kind;
  int branch;
  std::vector<int> points;  // committed tuple, or the full mapping at a leaf
  double cost;              // partial cost after the event
};

struct SearchStats {
  std::size_t nodes_expanded = 0;
  std::size_t candidates_pruned = 0;
  std::size_t lazy_entries = 0;
  std::size_t leaves = 0;
  double wall_seconds = 0.0;
  std::vector<double> bound_history;
  std::vector<TraceEvent> trace;
};

struct SolverResult {
  std::vector<FullAssignment> solutions;
  SearchStats stats;
  bool converged_exactly = false;
};

/// Builds Q_m for the child of `parent`: every k-tuple of unused points whose
/// `prefix_cost + H_m` does not exceed `bound`, sorted by H_m.
BranchQueue enqueue(const PartialAssignment& parent, int m, const StratifiedObjective& objective,
                    double prefix_cost, double bound);

/// Converts seeds into the forced leading branches. Throws SeedConflict for a
/// non-injective or out-of-range seed and SeedNotPrefix unless the seeded
/// vertices are exactly the first j*k vertices for some j.
PartialAssignment apply_seeds(const SeedSet& seeds, const VertexSet& vertices, const PointSet& points,
                              int branch_size);
PartialAssignment apply_seeds(const SeedSet& seeds, int vertex_count, int point_count, int branch_size);

/// Exact top-K hypergraph matching by branch and bound.
/// Throws InfeasibleSize if n2 < n1, KNotDivisor, SeedConflict, SeedNotPrefix.
SolverResult solve(const VertexSet& vertices, const PointSet& points, const HypergraphModel& model,
                   const SearchConfig& config);
SolverResult solve(const HypergraphModel& model, const SearchConfig& config);

}  // namespace ehgm
