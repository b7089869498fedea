#include "ehgm/objective.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "ehgm/error.hpp"

namespace ehgm {

namespace {

constexpr std::size_t kStackDegree = 64;

// Points of `vertices` under `assignment`, gathered into caller storage.
std::span<const int> gather(std::span<const int> vertices, std::span<const int> assignment,
                            std::array<int, kStackDegree>& stack, std::vector<int>& heap) {
  if (vertices.size() <= kStackDegree) {
    for (std::size_t i = 0; i < vertices.size(); ++i) stack[i] = assignment[static_cast<std::size_t>(vertices[i])];
    return {stack.data(), vertices.size()};
  }
  heap.resize(vertices.size());
  for (std::size_t i = 0; i < vertices.size(); ++i) heap[i] = assignment[static_cast<std::size_t>(vertices[i])];
  return heap;
}

void check_mapping(std::span<const int> mapping, const HypergraphModel& model) {
  if (static_cast<int>(mapping.size()) != model.vertex_count()) {
    throw Error(ErrorCode::DimensionMismatch, "mapping has " + std::to_string(mapping.size()) +
                                                  " entries, model has " + std::to_string(model.vertex_count()) +
                                                  " vertices");
  }
  check_distinct_points(mapping, model.point_count());
}

}  // namespace

bool nearly_equal(double a, double b, double relative_tolerance) {
  return std::abs(a - b) <= relative_tolerance * std::max(std::abs(a), std::abs(b));
}

double objective_eval(std::span<const int> mapping, const HypergraphModel& model) {
  check_mapping(mapping, model);
  std::array<int, kStackDegree> stack{};
  std::vector<int> heap;
  double total = 0.0;
  for (const auto& tensor : model.tensors()) {
    const auto& hyperedges = tensor.hyperedges();
    for (std::size_t h = 0; h < hyperedges.size(); ++h) {
      total += tensor.entry_at(h, gather(hyperedges[h], mapping, stack, heap));
    }
  }
  return total;
}

StratifiedObjective::StratifiedObjective(const HypergraphModel& model, int branch_size,
                                         StratificationOptions options)
    : model_(&model), branch_size_(branch_size) {
  const int n1 = model.vertex_count();
  if (branch_size < 1 || n1 % branch_size != 0) {
    throw Error(ErrorCode::KNotDivisor, "branch size " + std::to_string(branch_size) + " does not divide n1 = " +
                                            std::to_string(n1));
  }
  branch_count_ = n1 / branch_size;
  selection_.resize(static_cast<std::size_t>(branch_count_) + 1);
  aggregation_.resize(static_cast<std::size_t>(branch_count_) + 1);

  const auto n2 = static_cast<std::size_t>(model.point_count());
  for (const auto& tensor : model.tensors()) {
    const auto& hyperedges = tensor.hyperedges();
    for (std::size_t h = 0; h < hyperedges.size(); ++h) {
      Term term;
      term.vertices = hyperedges[h];
      term.tensor = &tensor;
      term.hyperedge = h;
      term.id = static_cast<std::uint32_t>(terms_.size());
      const int degree = tensor.degree();
      const bool selection = degree <= 2 * branch_size;

      if (options.materialize && selection && tensor.mode() == EvaluationMode::lazy) {
        std::size_t size = 1;
        bool fits = true;
        for (int i = 0; i < degree && fits; ++i) {
          if (size > options.dense_limit / n2) fits = false;
          size *= n2;
        }
        if (fits && size <= options.dense_limit) {
          term.dense.assign(size, 0.0);
          std::vector<int> points(static_cast<std::size_t>(degree), 0);
          for (std::size_t index = 0; index < size; ++index) {
            std::size_t rest = index;
            bool distinct = true;
            for (int i = 0; i < degree; ++i) {
              points[static_cast<std::size_t>(i)] = static_cast<int>(rest % n2);
              rest /= n2;
              for (int j = 0; j < i && distinct; ++j) {
                distinct = points[static_cast<std::size_t>(j)] != points[static_cast<std::size_t>(i)];
              }
            }
            if (distinct) term.dense[index] = tensor.entry_at(h, points);
          }
        }
      }

      const auto branch = static_cast<std::size_t>(term.vertices.back() / branch_size + 1);
      (selection ? selection_ : aggregation_)[branch].push_back(terms_.size());
      terms_.push_back(std::move(term));
    }
  }
  if (options.cache_capacity > 0) cache_ = std::make_unique<LruCache>(options.cache_capacity);
}

double StratifiedObjective::term_cost(const Term& term, std::span<const int> assignment) const {
  std::array<int, kStackDegree> stack;
  std::vector<int> heap;
  const auto points = gather(term.vertices, assignment, stack, heap);

  if (!term.dense.empty()) {
    const auto n2 = static_cast<std::size_t>(model_->point_count());
    std::size_t index = 0;
    for (std::size_t i = points.size(); i-- > 0;) index = index * n2 + static_cast<std::size_t>(points[i]);
    return term.dense[index];
  }
  if (term.tensor->mode() == EvaluationMode::precomputed) return term.tensor->entry_at(term.hyperedge, points);

  if (!cache_) {
    lazy_evaluations_.fetch_add(1, std::memory_order_relaxed);
    return term.tensor->entry_at(term.hyperedge, points);
  }
  thread_local std::string key;
  key.assign(reinterpret_cast<const char*>(&term.id), sizeof(term.id));
  for (int p : points) {
    key.push_back(static_cast<char>(p & 0xff));
    key.push_back(static_cast<char>((p >> 8) & 0xff));
  }
  bool missed = false;
  const double cost =
      cache_->get_or_compute(key, [&] { return term.tensor->entry_at(term.hyperedge, points); }, missed);
  if (missed) lazy_evaluations_.fetch_add(1, std::memory_order_relaxed);
  return cost;
}

double StratifiedObjective::sum_terms(const std::vector<std::size_t>& terms,
                                      std::span<const int> assignment) const {
  double total = 0.0;
  for (std::size_t t : terms) total += term_cost(terms_[t], assignment);
  return total;
}

double StratifiedObjective::selection_cost(int m, std::span<const int> assignment) const {
  return sum_terms(selection_[static_cast<std::size_t>(m)], assignment);
}

double StratifiedObjective::aggregation_cost(int m, std::span<const int> assignment) const {
  return sum_terms(aggregation_[static_cast<std::size_t>(m)], assignment);
}

double StratifiedObjective::full_cost(std::span<const int> mapping) const {
  double total = 0.0;
  for (const auto& term : terms_) total += term_cost(term, mapping);
  return total;
}

namespace {

std::vector<int> joined_prefix(int m, std::span<const int> branch, const PartialAssignment& prior,
                               const HypergraphModel& model) {
  const auto k = branch.size();
  if (m < 1 || k == 0 || prior.committed.size() != static_cast<std::size_t>(m - 1) * k) {
    throw Error(ErrorCode::BranchOrderViolation,
                "branch " + std::to_string(m) + " of size " + std::to_string(k) + " needs a prior of " +
                    std::to_string(static_cast<std::size_t>(std::max(m - 1, 0)) * k) + " points, got " +
                    std::to_string(prior.committed.size()));
  }
  std::vector<int> assignment(prior.committed);
  assignment.insert(assignment.end(), branch.begin(), branch.end());
  check_distinct_points(assignment, model.point_count());
  if (static_cast<int>(assignment.size()) > model.vertex_count()) {
    throw Error(ErrorCode::BranchOrderViolation, "branch " + std::to_string(m) + " is past the last vertex");
  }
  return assignment;
}

}  // namespace

double h1_cost(std::span<const int> first_branch, const HypergraphModel& model) {
  return hm_cost(1, first_branch, PartialAssignment{{}, static_cast<int>(first_branch.size())}, model);
}

double hm_cost(int m, std::span<const int> branch, const PartialAssignment& prior, const HypergraphModel& model) {
  const auto assignment = joined_prefix(m, branch, prior, model);
  StratifiedObjective split(model, static_cast<int>(branch.size()));
  return split.selection_cost(m, assignment);
}

double im_cost(int m, std::span<const int> branch, const PartialAssignment& prior, const HypergraphModel& model) {
  const auto assignment = joined_prefix(m, branch, prior, model);
  StratifiedObjective split(model, static_cast<int>(branch.size()));
  return split.aggregation_cost(m, assignment);
}

double stratified_cost(std::span<const int> mapping, const HypergraphModel& model, int branch_size) {
  check_mapping(mapping, model);
  StratifiedObjective split(model, branch_size);
  double total = 0.0;
  for (int m = 1; m <= split.branch_count(); ++m) {
    total += split.selection_cost(m, mapping);
    total += split.aggregation_cost(m, mapping);
  }
  return total;
}

bool decomposition_check(std::span<const int> mapping, const HypergraphModel& model, int branch_size) {
  return nearly_equal(stratified_cost(mapping, model, branch_size), objective_eval(mapping, model));
}

}  // namespace ehgm
