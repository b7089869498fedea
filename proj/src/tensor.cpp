#include "ehgm/tensor.hpp"

#include <algorithm>
#include <cmath>

#include "ehgm/error.hpp"

namespace ehgm {

namespace {

void check_hyperedge(std::span<const int> vertices, int degree) {
  if (static_cast<int>(vertices.size()) != degree) {
    throw Error(ErrorCode::DimensionMismatch, "hyperedge of size " + std::to_string(vertices.size()) +
                                                  " in a degree-" + std::to_string(degree) + " tensor");
  }
  for (std::size_t i = 0; i < vertices.size(); ++i) {
    if (vertices[i] < 0 || (i > 0 && vertices[i] <= vertices[i - 1])) {
      throw Error(ErrorCode::InvalidArgument, "hyperedge vertices must be strictly increasing and nonnegative");
    }
  }
}

void check_cost(double cost) {
  if (!std::isfinite(cost) || cost < 0.0) {
    throw Error(ErrorCode::NegativeCost, "dissimilarity entries must be finite and nonnegative, got " +
                                             std::to_string(cost));
  }
}

}  // namespace

DissimilarityTensor::DissimilarityTensor(int degree) : degree_(degree) {
  if (degree < 1) throw Error(ErrorCode::DegreeOutOfRange, "degree must be >= 1");
}

DissimilarityTensor::DissimilarityTensor(int degree, std::vector<std::vector<int>> hyperedges,
                                         Evaluator evaluate)
    : degree_(degree), hyperedges_(std::move(hyperedges)), evaluate_(std::move(evaluate)) {
  if (degree < 1) throw Error(ErrorCode::DegreeOutOfRange, "degree must be >= 1");
  if (!evaluate_) throw Error(ErrorCode::InvalidArgument, "lazy tensor needs an evaluator");
  for (const auto& h : hyperedges_) check_hyperedge(h, degree_);
  if (!std::is_sorted(hyperedges_.begin(), hyperedges_.end()) ||
      std::adjacent_find(hyperedges_.begin(), hyperedges_.end()) != hyperedges_.end()) {
    throw Error(ErrorCode::InvalidArgument, "lazy hyperedges must be distinct and lexicographically sorted");
  }
  tables_.resize(hyperedges_.size());
}

std::optional<std::size_t> DissimilarityTensor::find_hyperedge(std::span<const int> vertices) const {
  auto it = std::lower_bound(hyperedges_.begin(), hyperedges_.end(), vertices,
                             [](const std::vector<int>& h, std::span<const int> v) {
                               return std::lexicographical_compare(h.begin(), h.end(), v.begin(), v.end());
                             });
  if (it == hyperedges_.end() || !std::equal(it->begin(), it->end(), vertices.begin(), vertices.end())) {
    return std::nullopt;
  }
  return static_cast<std::size_t>(it - hyperedges_.begin());
}

void DissimilarityTensor::set(std::span<const int> vertices, std::span<const int> points, double cost) {
  if (evaluate_) throw Error(ErrorCode::InvalidArgument, "cannot store entries in a lazy tensor");
  check_hyperedge(vertices, degree_);
  if (points.size() != vertices.size()) {
    throw Error(ErrorCode::DimensionMismatch, "entry needs one point per hyperedge vertex");
  }
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (points[i] < 0) throw Error(ErrorCode::PointOutOfRange, "negative point index");
    for (std::size_t j = 0; j < i; ++j) {
      if (points[i] == points[j]) throw Error(ErrorCode::DuplicatePoint, "entry assigns one point twice");
    }
  }
  check_cost(cost);
  std::size_t index;
  if (auto found = find_hyperedge(vertices)) {
    index = *found;
  } else {
    auto it = std::lower_bound(hyperedges_.begin(), hyperedges_.end(), vertices,
                               [](const std::vector<int>& h, std::span<const int> v) {
                                 return std::lexicographical_compare(h.begin(), h.end(), v.begin(), v.end());
                               });
    index = static_cast<std::size_t>(it - hyperedges_.begin());
    hyperedges_.emplace(it, vertices.begin(), vertices.end());
    tables_.emplace(tables_.begin() + static_cast<std::ptrdiff_t>(index));
  }
  tables_[index][encode_points(points)] = cost;
}

double DissimilarityTensor::entry(std::span<const int> vertices, std::span<const int> points) const {
  if (points.size() != vertices.size()) {
    throw Error(ErrorCode::DimensionMismatch, "entry needs one point per hyperedge vertex");
  }
  auto index = find_hyperedge(vertices);
  if (!index) return 0.0;
  return entry_at(*index, points);
}

double DissimilarityTensor::entry_at(std::size_t hyperedge, std::span<const int> points) const {
  if (evaluate_) {
    const double cost = evaluate_(hyperedge, points);
    check_cost(cost);
    return cost;
  }
  thread_local std::string key;
  key.clear();
  for (int p : points) {
    key.push_back(static_cast<char>(p & 0xff));
    key.push_back(static_cast<char>((p >> 8) & 0xff));
  }
  const auto& table = tables_[hyperedge];
  auto it = table.find(key);
  return it == table.end() ? 0.0 : it->second;
}

const std::unordered_map<std::string, double>& DissimilarityTensor::stored(std::size_t hyperedge) const {
  return tables_.at(hyperedge);
}

std::size_t DissimilarityTensor::stored_count() const {
  std::size_t total = 0;
  for (const auto& t : tables_) total += t.size();
  return total;
}

std::string DissimilarityTensor::encode_points(std::span<const int> points) {
  std::string key;
  key.reserve(points.size() * 2);
  for (int p : points) {
    if (p < 0 || p > 0xffff) throw Error(ErrorCode::PointOutOfRange, "point index does not fit 16 bits");
    key.push_back(static_cast<char>(p & 0xff));
    key.push_back(static_cast<char>((p >> 8) & 0xff));
  }
  return key;
}

std::vector<int> DissimilarityTensor::decode_points(const std::string& key) {
  std::vector<int> points;
  for (std::size_t i = 0; i + 1 < key.size(); i += 2) {
    points.push_back(static_cast<unsigned char>(key[i]) | (static_cast<unsigned char>(key[i + 1]) << 8));
  }
  return points;
}

HypergraphModel::HypergraphModel(int vertex_count, int point_count)
    : vertex_count_(vertex_count), point_count_(point_count) {
  if (vertex_count < 1) throw Error(ErrorCode::InvalidArgument, "model needs at least one vertex");
  if (point_count < 1) throw Error(ErrorCode::InvalidArgument, "model needs at least one point");
}

void HypergraphModel::add_tensor(DissimilarityTensor tensor) {
  if (tensor.degree() > vertex_count_) {
    throw Error(ErrorCode::DegreeOutOfRange, "degree " + std::to_string(tensor.degree()) + " exceeds n1 = " +
                                                 std::to_string(vertex_count_));
  }
  for (const auto& h : tensor.hyperedges()) {
    if (h.back() >= vertex_count_) throw Error(ErrorCode::DegreeOutOfRange, "hyperedge vertex outside [0, n1)");
  }
  if (tensor.mode() == EvaluationMode::precomputed) {
    for (std::size_t h = 0; h < tensor.hyperedges().size(); ++h) {
      for (const auto& [key, cost] : tensor.stored(h)) {
        for (int p : DissimilarityTensor::decode_points(key)) {
          if (p >= point_count_) throw Error(ErrorCode::PointOutOfRange, "entry point outside [0, n2)");
        }
      }
    }
  }
  auto it = std::lower_bound(tensors_.begin(), tensors_.end(), tensor.degree(),
                             [](const DissimilarityTensor& t, int d) { return t.degree() < d; });
  if (it != tensors_.end() && it->degree() == tensor.degree()) {
    throw Error(ErrorCode::InvalidArgument, "a degree-" + std::to_string(tensor.degree()) + " tensor already exists");
  }
  tensors_.insert(it, std::move(tensor));
}

const DissimilarityTensor* HypergraphModel::tensor(int degree) const {
  for (const auto& t : tensors_) {
    if (t.degree() == degree) return &t;
  }
  return nullptr;
}

}  // namespace ehgm
