#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace ehgm {

inline constexpr double kDefaultMinSeparation = 1e-6;

/// Unlabeled candidate points (micrometers). Construction validates that every
/// coordinate is finite and that no two points are closer than `min_separation`.
class PointSet {
 public:
  PointSet() = default;
  explicit PointSet(std::vector<Eigen::Vector3d> points,
                    double min_separation = kDefaultMinSeparation);

  int size() const { return static_cast<int>(points_.size()); }
  const Eigen::Vector3d& operator[](int i) const { return points_[static_cast<std::size_t>(i)]; }
  const std::vector<Eigen::Vector3d>& points() const { return points_; }

 private:
  std::vector<Eigen::Vector3d> points_;
};

/// Template vertices in canonical branch order.
class VertexSet {
 public:
  VertexSet() = default;
  explicit VertexSet(std::vector<std::string> labels);
  /// Unnamed vertices "v0", "v1", ...
  static VertexSet anonymous(int count);

  int size() const { return static_cast<int>(labels_.size()); }
  const std::string& label(int v) const { return labels_[static_cast<std::size_t>(v)]; }
  const std::vector<std::string>& labels() const { return labels_; }
  /// -1 when absent.
  int index_of(const std::string& label) const;

 private:
  std::vector<std::string> labels_;
};

/// The first m·k vertices committed to distinct points.
struct PartialAssignment {
  std::vector<int> committed;
  int branch_size = 1;

  int branch_index() const { return static_cast<int>(committed.size()) / branch_size; }
};

struct FullAssignment {
  std::vector<int> mapping;  // mapping[v] = point index
  double cost = 0.0;

  friend bool operator==(const FullAssignment&, const FullAssignment&) = default;
};

/// Strict total order used for ranking everywhere: cost, then mapping lexicographically.
inline bool ranks_before(const FullAssignment& a, const FullAssignment& b) {
  if (a.cost != b.cost) return a.cost < b.cost;
  return a.mapping < b.mapping;
}

/// Fixed vertex -> point correspondences supplied before the search.
struct SeedSet {
  std::map<int, int> fixed;

  bool empty() const { return fixed.empty(); }
  int size() const { return static_cast<int>(fixed.size()); }
};

/// Throws DuplicatePoint / PointOutOfRange unless `points` are distinct indices in [0, point_count).
void check_distinct_points(std::span<const int> points, int point_count);

}  // namespace ehgm
