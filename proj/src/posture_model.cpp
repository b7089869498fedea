#include "ehgm/posture_model.hpp"

#include <cmath>
#include <map>
#include <memory>

#include "ehgm/error.hpp"

namespace ehgm {

namespace {

struct Context {
  std::vector<Eigen::Vector3d> points;
  std::vector<FeatureGroup> groups;
  std::vector<GroupStats> stats;
  // Groups sharing a vertex set (small posture models) score one hyperedge together.
  std::vector<std::vector<std::size_t>> hyperedge_groups;
  Chirality chirality;
  double penalty;
};

double score_group(const Context& context, std::size_t group, std::span<const Eigen::Vector3d> positions) {
  try {
    const auto g = evaluate_group(context.groups[group], positions, context.chirality);
    const auto& s = context.stats[group];
    const double cost = mahalanobis_cost(g, s.mean, s.inverse);
    return std::isfinite(cost) ? cost : context.penalty;
  } catch (const Error& e) {
    if (e.code() != ErrorCode::DegenerateGeometry) throw;
    return context.penalty;
  }
}

double score(const Context& context, std::size_t hyperedge, std::span<const int> points) {
  thread_local std::vector<Eigen::Vector3d> positions;
  positions.clear();
  for (int p : points) positions.push_back(context.points[static_cast<std::size_t>(p)]);
  double total = 0.0;
  for (std::size_t g : context.hyperedge_groups[hyperedge]) total += score_group(context, g, positions);
  return total;
}

}  // namespace

HypergraphModel build_tensors(ModelKind kind, const PointSet& points, const TemplateStats& stats, double z,
                              const BuildOptions& options) {
  if (stats.model != kind) {
    throw Error(ErrorCode::TemplateMismatch, "template was fit for the " + to_string(stats.model) + " model");
  }
  const auto groups = model_groups(kind, stats.pair_count);
  if (groups.size() != stats.group_names.size()) {
    throw Error(ErrorCode::TemplateMismatch, "template lists a different set of feature groups");
  }
  for (std::size_t g = 0; g < groups.size(); ++g) {
    if (groups[g].name != stats.group_names[g] || groups[g].features != stats.feature_names[g]) {
      throw Error(ErrorCode::TemplateMismatch, "template group " + stats.group_names[g] + " does not match " +
                                                   groups[g].name);
    }
  }
  const auto& bin = stats.bins.at(static_cast<std::size_t>(stats.bin_index(z)));
  for (std::size_t g = 0; g < groups.size(); ++g) {
    const auto n = static_cast<Eigen::Index>(groups[g].features.size());
    if (bin[g].mean.size() != n || bin[g].inverse.rows() != n || bin[g].inverse.cols() != n) {
      throw Error(ErrorCode::TemplateMismatch, "template statistics for " + groups[g].name + " have the wrong size");
    }
  }

  const int vertex_count = 2 * stats.pair_count;
  HypergraphModel model(vertex_count, points.size());
  std::map<int, std::map<std::vector<int>, std::vector<std::size_t>>> by_degree;
  for (std::size_t g = 0; g < groups.size(); ++g) by_degree[groups[g].degree()][groups[g].vertices].push_back(g);

  for (const auto& [degree, by_vertices] : by_degree) {
    auto context = std::make_shared<Context>();
    context->points = points.points();
    context->chirality = stats.chirality;
    context->penalty = options.degenerate_penalty;
    std::vector<std::vector<int>> hyperedges;
    for (const auto& [vertices, members] : by_vertices) {
      hyperedges.push_back(vertices);
      auto& local = context->hyperedge_groups.emplace_back();
      for (std::size_t g : members) {
        local.push_back(context->groups.size());
        context->groups.push_back(groups[g]);
        context->stats.push_back(bin[g]);
      }
    }
    model.add_tensor(DissimilarityTensor(
        degree, std::move(hyperedges),
        [context](std::size_t h, std::span<const int> pts) { return score(*context, h, pts); }));
  }
  return model;
}

}  // namespace ehgm
