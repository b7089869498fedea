#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace ehgm {

enum class EvaluationMode { precomputed, lazy };

/// Degree-d dissimilarity costs. Entries are addressed by a hyperedge (a strictly
/// increasing vertex d-tuple) and the point assigned to each of its vertices.
/// Hyperedges that were never declared contribute 0, as do undeclared entries of a
/// precomputed tensor. Costs are finite and nonnegative.
class DissimilarityTensor {
 public:
  /// Lazy entries: `evaluate(hyperedge_index, points)` must be pure.
  using Evaluator = std::function<double(std::size_t hyperedge, std::span<const int> points)>;

  /// Empty precomputed tensor, filled through set().
  explicit DissimilarityTensor(int degree);
  /// Lazily evaluated tensor over a fixed list of hyperedges.
  DissimilarityTensor(int degree, std::vector<std::vector<int>> hyperedges, Evaluator evaluate);

  int degree() const { return degree_; }
  EvaluationMode mode() const { return evaluate_ ? EvaluationMode::lazy : EvaluationMode::precomputed; }

  /// Declared hyperedges, lexicographically sorted.
  const std::vector<std::vector<int>>& hyperedges() const { return hyperedges_; }
  std::optional<std::size_t> find_hyperedge(std::span<const int> vertices) const;

  /// Stores one entry, declaring the hyperedge if needed. Precomputed tensors only.
  void set(std::span<const int> vertices, std::span<const int> points, double cost);

  double entry(std::span<const int> vertices, std::span<const int> points) const;
  /// Same as entry() with the hyperedge already resolved. No validation, hot path.
  double entry_at(std::size_t hyperedge, std::span<const int> points) const;

  /// Stored entries of one hyperedge, keyed by encode_points(). Empty for lazy tensors.
  const std::unordered_map<std::string, double>& stored(std::size_t hyperedge) const;
  std::size_t stored_count() const;

  static std::string encode_points(std::span<const int> points);
  static std::vector<int> decode_points(const std::string& key);

 private:
  int degree_;
  std::vector<std::vector<int>> hyperedges_;
  std::vector<std::unordered_map<std::string, double>> tables_;
  Evaluator evaluate_;
};

/// The full set of dissimilarity tensors for one matching instance: at most one
/// tensor per degree, covering n1 template vertices and n2 candidate points.
class HypergraphModel {
 public:
  HypergraphModel(int vertex_count, int point_count);

  /// Throws DegreeOutOfRange if the degree is outside [1, n1] or a hyperedge
  /// references a vertex outside [0, n1); InvalidArgument on a repeated degree.
  void add_tensor(DissimilarityTensor tensor);

  int vertex_count() const { return vertex_count_; }
  int point_count() const { return point_count_; }
  /// Ascending degree.
  const std::vector<DissimilarityTensor>& tensors() const { return tensors_; }
  const DissimilarityTensor* tensor(int degree) const;

 private:
  int vertex_count_;
  int point_count_;
  std::vector<DissimilarityTensor> tensors_;
};

}  // namespace ehgm
