#include "ehgm/types.hpp"

#include <cmath>
#include <set>

#include "ehgm/error.hpp"

namespace ehgm {

PointSet::PointSet(std::vector<Eigen::Vector3d> points, double min_separation)
    : points_(std::move(points)) {
  if (points_.empty()) throw Error(ErrorCode::DegenerateInput, "point set is empty");
  for (std::size_t i = 0; i < points_.size(); ++i) {
    if (!points_[i].allFinite()) {
      throw Error(ErrorCode::DegenerateInput, "point " + std::to_string(i) + " has a non-finite coordinate");
    }
  }
  for (std::size_t i = 0; i < points_.size(); ++i) {
    for (std::size_t j = i + 1; j < points_.size(); ++j) {
      if ((points_[i] - points_[j]).norm() < min_separation) {
        throw Error(ErrorCode::DegenerateInput,
                    "points " + std::to_string(i) + " and " + std::to_string(j) + " coincide");
      }
    }
  }
}

VertexSet::VertexSet(std::vector<std::string> labels) : labels_(std::move(labels)) {
  if (labels_.empty()) throw Error(ErrorCode::InvalidArgument, "vertex set is empty");
  std::set<std::string> seen(labels_.begin(), labels_.end());
  if (seen.size() != labels_.size()) throw Error(ErrorCode::InvalidArgument, "vertex labels must be distinct");
}

VertexSet VertexSet::anonymous(int count) {
  std::vector<std::string> labels;
  for (int i = 0; i < count; ++i) labels.push_back("v" + std::to_string(i));
  return VertexSet(std::move(labels));
}

int VertexSet::index_of(const std::string& label) const {
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    if (labels_[i] == label) return static_cast<int>(i);
  }
  return -1;
}

void check_distinct_points(std::span<const int> points, int point_count) {
  std::vector<bool> used(static_cast<std::size_t>(std::max(point_count, 0)), false);
  for (int p : points) {
    if (p < 0 || p >= point_count) {
      throw Error(ErrorCode::PointOutOfRange, "point index " + std::to_string(p) + " outside [0, " +
                                                  std::to_string(point_count) + ")");
    }
    if (used[static_cast<std::size_t>(p)]) {
      throw Error(ErrorCode::DuplicatePoint, "point index " + std::to_string(p) + " used twice");
    }
    used[static_cast<std::size_t>(p)] = true;
  }
}

}  // namespace ehgm
