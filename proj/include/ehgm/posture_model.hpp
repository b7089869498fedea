#pragma once

#include "ehgm/model_fitting.hpp"
#include "ehgm/posture_features.hpp"
#include "ehgm/tensor.hpp"
#include "ehgm/types.hpp"

namespace ehgm {

struct BuildOptions {
  /// Cost of a hyperedge whose features are undefined on the hypothesized points.
  double degenerate_penalty = 1e12;
};

/// Dissimilarity tensors of a posture model over `points`, scored against the
/// template bin holding normalized time `z`. Every tensor is lazy; the solver
/// materializes the ones it selects with (degree <= 2k) up front.
/// Throws TemplateMismatch when the template was fit for another model or size.
HypergraphModel build_tensors(ModelKind kind, const PointSet& points, const TemplateStats& stats, double z,
                              const BuildOptions& options = {});

}  // namespace ehgm
