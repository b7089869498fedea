#include "ehgm/solver.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include "ehgm/error.hpp"

namespace ehgm {

namespace {

// Partial costs are sums in a different order than the leaf cost, so a tie
// with the bound can be off by a few ulps. Keeping such candidates only costs
// extra search, never exactness.
double with_slack(double bound) {
  if (!std::isfinite(bound)) return bound;
  return bound + 1e-12 * std::max(1.0, std::abs(bound));
}

// Appends every admissible k-tuple for branch m in lexicographic order, then
// sorts by selection cost (stable, so ties keep lexicographic order).
void fill_queue(std::span<const int> prefix, const std::vector<bool>& used, int m,
                const StratifiedObjective& objective, double prefix_cost, double bound, BranchQueue& queue,
                std::size_t& pruned) {
  const int k = objective.branch_size();
  const int n2 = objective.point_count();
  const double limit = with_slack(bound);
  queue.branch = m;
  queue.candidates.clear();

  std::vector<int> assignment(prefix.begin(), prefix.end());
  assignment.resize(prefix.size() + static_cast<std::size_t>(k));
  std::vector<bool> taken(used);
  const std::size_t base = prefix.size();

  auto descend = [&](auto&& self, int slot) -> void {
    if (slot == k) {
      const double h = objective.selection_cost(m, assignment);
      if (prefix_cost + h <= limit) {
        queue.candidates.push_back({std::vector<int>(assignment.begin() + static_cast<std::ptrdiff_t>(base),
                                                     assignment.end()),
                                    h});
      } else {
        ++pruned;
      }
      return;
    }
    for (int p = 0; p < n2; ++p) {
      if (taken[static_cast<std::size_t>(p)]) continue;
      taken[static_cast<std::size_t>(p)] = true;
      assignment[base + static_cast<std::size_t>(slot)] = p;
      self(self, slot + 1);
      taken[static_cast<std::size_t>(p)] = false;
    }
  };
  descend(descend, 0);

  std::stable_sort(queue.candidates.begin(), queue.candidates.end(),
                   [](const BranchCandidate& a, const BranchCandidate& b) {
                     return a.selection_cost < b.selection_cost;
                   });
}

class Search {
 public:
  Search(const StratifiedObjective& objective, const SearchConfig& config, Incumbent& incumbent)
      : objective_(objective),
        config_(config),
        incumbent_(incumbent),
        start_(std::chrono::steady_clock::now()),
        trace_enabled_(config.record_trace && config.workers == 1) {}

  struct Local {
    std::size_t nodes = 0;
    std::size_t pruned = 0;
    std::size_t leaves = 0;
    std::vector<TraceEvent> trace;
  };

  bool out_of_time() {
    if (stop_.load(std::memory_order_relaxed)) return true;
    if (!config_.time_limit) return false;
    if (std::chrono::steady_clock::now() - start_ >= *config_.time_limit) {
      stop_.store(true, std::memory_order_relaxed);
      return true;
    }
    return false;
  }

  bool interrupted() const { return stop_.load(std::memory_order_relaxed); }

  double elapsed() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

  // Time is checked once per queue construction.
  bool build_queue(const SearchState& state, int m, BranchQueue& queue, Local& local) {
    if (out_of_time()) return false;
    std::vector<bool> used(static_cast<std::size_t>(objective_.point_count()));
    for (int p : state.assignment()) used[static_cast<std::size_t>(p)] = true;
    fill_queue(state.assignment(), used, m, objective_, state.cost(), incumbent_.bound(), queue, local.pruned);
    return true;
  }

  void visit(SearchState& state, int m, Local& local) {
    BranchQueue queue;
    if (!build_queue(state, m, queue, local)) return;
    for (std::size_t i = 0; i < queue.candidates.size(); ++i) {
      if (interrupted()) return;
      const auto& candidate = queue.candidates[i];
      if (state.cost() + candidate.selection_cost > with_slack(incumbent_.bound())) {
        local.pruned += queue.candidates.size() - i;
        break;
      }
      expand(state, m, candidate, local);
    }
  }

  void expand(SearchState& state, int m, const BranchCandidate& candidate, Local& local) {
    state.commit(candidate.points, candidate.selection_cost);
    ++local.nodes;
    record(local, TraceEvent::Kind::commit, m, candidate.points, state.cost());
    if (state.cost() > with_slack(incumbent_.bound())) {
      ++local.pruned;
    } else if (m == objective_.branch_count()) {
      leaf(state, local);
    } else {
      visit(state, m + 1, local);
    }
    state.backtrack();
    record(local, TraceEvent::Kind::backtrack, m, {}, state.cost());
  }

  void leaf(const SearchState& state, Local& local) {
    std::vector<int> mapping(state.assignment().begin(), state.assignment().end());
    const double cost = objective_.full_cost(mapping);
    ++local.leaves;
    record(local, TraceEvent::Kind::leaf, objective_.branch_count(), mapping, cost);
    incumbent_.offer({std::move(mapping), cost});
  }

 private:
  void record(Local& local, TraceEvent::Kind kind, int m, std::vector<int> points, double cost) const {
    if (trace_enabled_) local.trace.push_back({kind, m, std::move(points), cost});
  }

  const StratifiedObjective& objective_;
  const SearchConfig& config_;
  Incumbent& incumbent_;
  std::chrono::steady_clock::time_point start_;
  std::atomic<bool> stop_{false};
  bool trace_enabled_;
};

}  // namespace

Incumbent::Incumbent(int capacity, double initial_bound)
    : capacity_(capacity), initial_bound_(initial_bound), bound_(initial_bound) {
  if (capacity < 1) throw Error(ErrorCode::InvalidArgument, "top-K capacity must be >= 1");
  history_.push_back(initial_bound);
}

bool Incumbent::offer(FullAssignment assignment) {
  std::lock_guard lock(mutex_);
  if (static_cast<int>(best_.size()) < capacity_) {
    if (assignment.cost > initial_bound_) return false;
  } else if (!ranks_before(assignment, best_.back())) {
    return false;
  }
  auto it = std::lower_bound(best_.begin(), best_.end(), assignment, ranks_before);
  if (it != best_.end() && *it == assignment) return false;
  best_.insert(it, std::move(assignment));
  if (static_cast<int>(best_.size()) > capacity_) best_.pop_back();
  const double bound = static_cast<int>(best_.size()) == capacity_ ? best_.back().cost : initial_bound_;
  if (bound != history_.back()) history_.push_back(bound);
  bound_.store(bound, std::memory_order_release);
  return true;
}

std::vector<FullAssignment> Incumbent::solutions() const {
  std::lock_guard lock(mutex_);
  return best_;
}

std::vector<double> Incumbent::bound_history() const {
  std::lock_guard lock(mutex_);
  return history_;
}

SearchState::SearchState(const StratifiedObjective& objective)
    : objective_(&objective), used_(static_cast<std::size_t>(objective.point_count()), false) {}

void SearchState::commit(std::span<const int> points, double selection_cost) {
  for (int p : points) {
    assignment_.push_back(p);
    used_[static_cast<std::size_t>(p)] = true;
  }
  const int m = depth() + 1;
  selection_costs_.push_back(selection_cost);
  aggregation_costs_.push_back(objective_->has_aggregation(m) ? objective_->aggregation_cost(m, assignment_) : 0.0);
  recompute_cost();
}

void SearchState::backtrack() {
  if (selection_costs_.empty()) return;
  for (int i = 0; i < objective_->branch_size(); ++i) {
    used_[static_cast<std::size_t>(assignment_.back())] = false;
    assignment_.pop_back();
  }
  selection_costs_.pop_back();
  aggregation_costs_.pop_back();
  recompute_cost();
}

void SearchState::recompute_cost() {
  double total = 0.0;
  for (std::size_t j = 0; j < selection_costs_.size(); ++j) total += selection_costs_[j] + aggregation_costs_[j];
  cost_ = total;
}

BranchQueue enqueue(const PartialAssignment& parent, int m, const StratifiedObjective& objective,
                    double prefix_cost, double bound) {
  const int k = objective.branch_size();
  if (m < 1 || m > objective.branch_count() ||
      parent.committed.size() != static_cast<std::size_t>((m - 1) * k)) {
    throw Error(ErrorCode::BranchOrderViolation, "parent does not end at branch " + std::to_string(m - 1));
  }
  check_distinct_points(parent.committed, objective.point_count());
  std::vector<bool> used(static_cast<std::size_t>(objective.point_count()), false);
  for (int p : parent.committed) used[static_cast<std::size_t>(p)] = true;
  BranchQueue queue;
  std::size_t pruned = 0;
  fill_queue(parent.committed, used, m, objective, prefix_cost, bound, queue, pruned);
  return queue;
}

PartialAssignment apply_seeds(const SeedSet& seeds, int vertex_count, int point_count, int branch_size) {
  if (branch_size < 1 || vertex_count % branch_size != 0) {
    throw Error(ErrorCode::KNotDivisor, "branch size does not divide n1");
  }
  std::vector<bool> taken(static_cast<std::size_t>(point_count), false);
  PartialAssignment prefix{{}, branch_size};
  int expected_vertex = 0;
  for (const auto& [vertex, point] : seeds.fixed) {
    if (vertex < 0 || vertex >= vertex_count) {
      throw Error(ErrorCode::SeedConflict, "seed vertex " + std::to_string(vertex) + " out of range");
    }
    if (point < 0 || point >= point_count) {
      throw Error(ErrorCode::SeedConflict, "seed point " + std::to_string(point) + " out of range");
    }
    if (taken[static_cast<std::size_t>(point)]) {
      throw Error(ErrorCode::SeedConflict, "point " + std::to_string(point) + " seeded twice");
    }
    taken[static_cast<std::size_t>(point)] = true;
    if (vertex != expected_vertex++) {
      throw Error(ErrorCode::SeedNotPrefix, "seeded vertices must be a prefix of the branch order");
    }
    prefix.committed.push_back(point);
  }
  if (prefix.committed.size() % static_cast<std::size_t>(branch_size) != 0) {
    throw Error(ErrorCode::SeedNotPrefix, "seeds must cover whole branches of size " + std::to_string(branch_size));
  }
  return prefix;
}

PartialAssignment apply_seeds(const SeedSet& seeds, const VertexSet& vertices, const PointSet& points,
                              int branch_size) {
  return apply_seeds(seeds, vertices.size(), points.size(), branch_size);
}

SolverResult solve(const VertexSet& vertices, const PointSet& points, const HypergraphModel& model,
                   const SearchConfig& config) {
  if (vertices.size() != model.vertex_count() || points.size() != model.point_count()) {
    throw Error(ErrorCode::DimensionMismatch, "vertex or point set does not match the model");
  }
  return solve(model, config);
}

SolverResult solve(const HypergraphModel& model, const SearchConfig& config) {
  const int n1 = model.vertex_count();
  const int n2 = model.point_count();
  if (n2 < n1) {
    throw Error(ErrorCode::InfeasibleSize, "n2 = " + std::to_string(n2) + " < n1 = " + std::to_string(n1));
  }
  if (config.top_k < 1 || config.workers < 1) {
    throw Error(ErrorCode::InvalidArgument, "topK and workers must be >= 1");
  }
  if (std::isnan(config.initial_bound) || config.initial_bound < 0.0) {
    throw Error(ErrorCode::InvalidArgument, "initial bound must be nonnegative");
  }

  StratificationOptions options;
  options.materialize = true;
  options.cache_capacity = config.cache_capacity;
  const StratifiedObjective objective(model, config.branch_size, options);
  const PartialAssignment prefix = apply_seeds(config.seeds, n1, n2, config.branch_size);
  const int k = config.branch_size;

  Incumbent incumbent(config.top_k, config.initial_bound);
  Search search(objective, config, incumbent);
  SearchState seeded(objective);
  std::vector<int> scratch;
  for (std::size_t offset = 0; offset < prefix.committed.size(); offset += static_cast<std::size_t>(k)) {
    std::span<const int> branch(prefix.committed.data() + offset, static_cast<std::size_t>(k));
    scratch.assign(seeded.assignment().begin(), seeded.assignment().end());
    scratch.insert(scratch.end(), branch.begin(), branch.end());
    seeded.commit(branch, objective.selection_cost(seeded.depth() + 1, scratch));
  }

  SolverResult result;
  const int first_free = seeded.depth() + 1;
  Search::Local root;
  if (first_free > objective.branch_count()) {
    if (!search.out_of_time() && seeded.cost() <= with_slack(incumbent.bound())) search.leaf(seeded, root);
  } else {
    BranchQueue queue;
    if (search.build_queue(seeded, first_free, queue, root)) {
      std::atomic<std::size_t> next{0};
      std::vector<Search::Local> locals(static_cast<std::size_t>(config.workers));
      auto work = [&](Search::Local& local) {
        SearchState state = seeded;
        for (;;) {
          const std::size_t i = next.fetch_add(1);
          if (i >= queue.candidates.size() || search.interrupted()) return;
          const auto& candidate = queue.candidates[i];
          if (state.cost() + candidate.selection_cost > with_slack(incumbent.bound())) {
            ++local.pruned;
            continue;
          }
          search.expand(state, first_free, candidate, local);
        }
      };
      if (config.workers == 1) {
        work(locals[0]);
      } else {
        std::vector<std::thread> threads;
        for (auto& local : locals) threads.emplace_back(work, std::ref(local));
        for (auto& t : threads) t.join();
      }
      for (auto& local : locals) {
        root.nodes += local.nodes;
        root.pruned += local.pruned;
        root.leaves += local.leaves;
        root.trace.insert(root.trace.end(), local.trace.begin(), local.trace.end());
      }
    }
  }

  result.solutions = incumbent.solutions();
  result.converged_exactly = !search.interrupted();
  result.stats.nodes_expanded = root.nodes;
  result.stats.candidates_pruned = root.pruned;
  result.stats.leaves = root.leaves;
  result.stats.lazy_entries = objective.lazy_evaluations();
  result.stats.bound_history = incumbent.bound_history();
  result.stats.trace = std::move(root.trace);
  result.stats.wall_seconds = search.elapsed();
  return result;
}

}  // namespace ehgm
