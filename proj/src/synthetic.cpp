#include "ehgm/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <numeric>
#include <random>

#include <Eigen/Geometry>

namespace ehgm {

namespace {

using Eigen::Vector3d;

struct Frame {
  Vector3d center, tangent, normal, binormal;
};

Frame helix_frame(double s, double radius, double rise) {
  const double rho = std::sqrt(radius * radius + rise * rise);
  const double t = s / rho;
  Frame f;
  f.center = {radius * std::cos(t), radius * std::sin(t), rise * t};
  f.tangent = Vector3d(-radius * std::sin(t), radius * std::cos(t), rise) / rho;
  f.normal = {-std::cos(t), -std::sin(t), 0.0};
  f.binormal = f.tangent.cross(f.normal);
  return f;
}

}  // namespace

SyntheticInstance generate_instance(const WormSpec& spec, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);

  SyntheticInstance out;
  const double z = spec.z < 0.0 ? uniform(rng) : spec.z;
  out.first_twitch = 400.0 + 40.0 * (uniform(rng) - 0.5);
  out.hatch = out.first_twitch + 380.0 + 40.0 * uniform(rng);
  out.time = out.first_twitch + z * (out.hatch - out.first_twitch);

  // Shape parameters drift with z: the worm lengthens, narrows and coils tighter.
  const double spacing = 3.6 + 1.4 * z + 0.08 * gauss(rng);
  const double width = 5.0 - 0.8 * z + 0.1 * gauss(rng);
  const double radius = 8.0 - 2.5 * z + 0.25 * gauss(rng);
  const double rise = 1.6 + 0.1 * gauss(rng);
  const double roll = std::numbers::pi / 2 + 0.05 * gauss(rng);
  const double twist = 0.12 + 0.02 * gauss(rng);

  std::vector<Vector3d> nuclei;
  for (int i = 0; i < spec.pair_count; ++i) {
    const double half = 0.5 * width * (1.0 - 0.025 * i);
    Vector3d center, side;
    if (spec.straight) {
      center = {spacing * i, 0.0, 0.0};
      side = {0.0, 1.0, 0.0};
    } else {
      const Frame f = helix_frame(spacing * i, radius, rise);
      const double angle = roll + twist * i;
      center = f.center;
      side = std::cos(angle) * f.normal + std::sin(angle) * f.binormal;
    }
    nuclei.push_back(center + half * side);
    nuclei.push_back(center - half * side);
  }

  if (!spec.straight) {
    const Eigen::Quaterniond q(gauss(rng), gauss(rng), gauss(rng), gauss(rng));
    const Eigen::Matrix3d rotation = q.normalized().toRotationMatrix();
    const Vector3d shift(40.0 * (uniform(rng) - 0.5), 40.0 * (uniform(rng) - 0.5), 40.0 * (uniform(rng) - 0.5));
    for (auto& p : nuclei) p = rotation * p + shift;
  }
  if (spec.noise > 0.0) {
    for (auto& p : nuclei) p += spec.noise * Vector3d(gauss(rng), gauss(rng), gauss(rng));
  }

  Vector3d lo = nuclei.front(), hi = nuclei.front();
  for (const auto& p : nuclei) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  std::vector<Vector3d> all = nuclei;
  for (int d = 0; d < spec.distractors; ++d) {
    Vector3d p;
    for (int c = 0; c < 3; ++c) p[c] = lo[c] - 2.0 + (hi[c] - lo[c] + 4.0) * uniform(rng);
    all.push_back(p);
  }

  std::vector<int> order(all.size());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<Vector3d> shuffled(all.size());
  out.truth.assign(nuclei.size(), -1);
  for (std::size_t slot = 0; slot < order.size(); ++slot) {
    shuffled[slot] = all[static_cast<std::size_t>(order[slot])];
    if (order[slot] < static_cast<int>(nuclei.size())) out.truth[static_cast<std::size_t>(order[slot])] = static_cast<int>(slot);
  }
  out.points = PointSet(std::move(shuffled));
  out.labels = seam_cell_labels(spec.pair_count);
  return out;
}

std::vector<SyntheticInstance> generate_corpus(int count, const WormSpec& spec, std::uint64_t seed) {
  std::vector<SyntheticInstance> corpus;
  for (int i = 0; i < count; ++i) {
    auto instance = generate_instance(spec, seed + static_cast<std::uint64_t>(i));
    char id[16];
    std::snprintf(id, sizeof id, "w%03d", i);
    instance.embryo_id = id;
    corpus.push_back(std::move(instance));
  }
  return corpus;
}

}  // namespace ehgm
