#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ehgm/model_fitting.hpp"
#include "ehgm/posture_features.hpp"
#include "ehgm/types.hpp"

namespace ehgm {

/// Parameters of a synthetic seam-cell worm: a ribbon of paired nuclei laid
/// along a helical centerline that tightens and lengthens with developmental
/// time z, then moved by a random rigid motion and perturbed by noise.
struct WormSpec {
  int pair_count = 10;
  /// Standard deviation of the per-coordinate Gaussian noise, in micrometers.
  double noise = 0.3;
  /// Normalized developmental time; negative draws it uniformly from [0, 1].
  double z = -1.0;
  /// Unlabeled points scattered around the worm in addition to the nuclei.
  int distractors = 0;
  /// Straight, untwisted centerline with no rigid motion (analytic checks).
  bool straight = false;
};

struct SyntheticInstance {
  PointSet points;
  /// truth[v] = index of vertex v's point in `points`.
  std::vector<int> truth;
  std::vector<std::string> labels;
  std::string embryo_id;
  double time = 0.0;
  double first_twitch = 0.0;
  double hatch = 1.0;

  double z() const { return normalize_time(time, first_twitch, hatch); }
  Posture posture() const { return posture_from_mapping(points, truth); }
  AnnotatedSample annotated() const { return {embryo_id, time, first_twitch, hatch, posture()}; }
};

/// Deterministic in `seed`.
SyntheticInstance generate_instance(const WormSpec& spec, std::uint64_t seed);

/// `count` independent worms, embryo ids "w000", "w001", ...; worm i uses seed + i.
std::vector<SyntheticInstance> generate_corpus(int count, const WormSpec& spec, std::uint64_t seed);

}  // namespace ehgm
