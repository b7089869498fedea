#include "ehgm/posture_features.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Geometry>

#include "ehgm/error.hpp"

namespace ehgm {

namespace {

using Eigen::Vector3d;

constexpr double kNormalFloor = 1e-9;

Vector3d unit(const Vector3d& v, const char* what) {
  const double n = v.norm();
  if (!(n >= kDefaultMinSeparation)) throw Error(ErrorCode::DegenerateGeometry, std::string(what) + " has zero length");
  return v / n;
}

void require_normal(const Vector3d& n, const char* what) {
  if (!(n.norm() >= kNormalFloor)) {
    throw Error(ErrorCode::DegenerateGeometry, std::string(what) + ": consecutive bonds are parallel");
  }
}

double clamp_unit(double x) { return std::clamp(x, -1.0, 1.0); }

double degrees(double radians) { return radians * 180.0 / std::numbers::pi; }

Posture slice(std::span<const Vector3d> positions) {
  Posture p;
  for (std::size_t i = 0; i + 1 < positions.size(); i += 2) {
    p.left.push_back(positions[i]);
    p.right.push_back(positions[i + 1]);
  }
  return p;
}

}  // namespace

Vector3d Posture::midpoint(int i) const {
  return 0.5 * (left[static_cast<std::size_t>(i)] + right[static_cast<std::size_t>(i)]);
}

Posture posture_from_mapping(const PointSet& points, std::span<const int> mapping) {
  if (mapping.size() % 2 != 0) throw Error(ErrorCode::DimensionMismatch, "posture needs an even vertex count");
  Posture p;
  for (std::size_t v = 0; v < mapping.size(); v += 2) {
    p.left.push_back(points[mapping[v]]);
    p.right.push_back(points[mapping[v + 1]]);
  }
  return p;
}

std::vector<Vector3d> posture_points(const Posture& posture) {
  std::vector<Vector3d> out;
  for (int i = 0; i < posture.pair_count(); ++i) {
    out.push_back(posture.left[static_cast<std::size_t>(i)]);
    out.push_back(posture.right[static_cast<std::size_t>(i)]);
  }
  return out;
}

std::vector<std::string> seam_pair_names(int pair_count) {
  if (pair_count == 10) return {"T", "V6", "V5", "V4", "V3", "V2", "V1", "H2", "H1", "H0"};
  if (pair_count == 11) return {"T", "V6", "V5", "Q", "V4", "V3", "V2", "V1", "H2", "H1", "H0"};
  std::vector<std::string> names;
  for (int i = 0; i < pair_count; ++i) names.push_back("P" + std::to_string(i));
  return names;
}

std::vector<std::string> seam_cell_labels(int pair_count) {
  std::vector<std::string> labels;
  for (const auto& name : seam_pair_names(pair_count)) {
    labels.push_back(name + "L");
    labels.push_back(name + "R");
  }
  return labels;
}

double pair_distance(const Vector3d& l, const Vector3d& r) { return (l - r).norm(); }

std::vector<double> side_chord_lengths(std::span<const Vector3d> side) {
  std::vector<double> out;
  for (std::size_t i = 0; i + 1 < side.size(); ++i) out.push_back((side[i + 1] - side[i]).norm());
  return out;
}

double pair_distance_ratio(double pd, double pd_next) {
  if (!(pd_next >= kDefaultMinSeparation)) {
    throw Error(ErrorCode::DegenerateGeometry, "pair distance ratio with a vanishing denominator");
  }
  return pd / pd_next;
}

double midpoint_distance(const Vector3d& m, const Vector3d& m_next) { return (m_next - m).norm(); }

double side_cosine(const Vector3d& l, const Vector3d& l_next, const Vector3d& r, const Vector3d& r_next) {
  return clamp_unit(unit(r_next - r, "right side").dot(unit(l_next - l, "left side")));
}

double lateral_twist(const Vector3d& l, const Vector3d& r, const Vector3d& l_next, const Vector3d& r_next) {
  const Vector3d b1 = unit(l_next - l, "left side");
  const Vector3d b2 = unit(l - r, "pair");
  const Vector3d b3 = unit(r - r_next, "right side");
  const Vector3d n1 = b1.cross(b2);
  const Vector3d n2 = b2.cross(b3);
  require_normal(n1, "lateral twist");
  require_normal(n2, "lateral twist");
  return std::atan2(n1.cross(n2).dot(b2), n1.dot(n2)) / std::numbers::pi;
}

double axial_twist(const Vector3d& l, const Vector3d& r, const Vector3d& l_next, const Vector3d& r_next) {
  const Vector3d b2 = unit(r - l, "pair");
  const Vector3d b3 = unit(r_next - r, "right side");
  const Vector3d b4 = unit(l_next - r_next, "next pair");
  const Vector3d n2 = b2.cross(b3);
  const Vector3d n3 = b3.cross(b4);
  require_normal(n2, "axial twist");
  require_normal(n3, "axial twist");
  return std::atan2(n2.cross(n3).dot(b3), n2.dot(n3)) / std::numbers::pi;
}

double midpoint_bend(const Vector3d& m0, const Vector3d& m1, const Vector3d& m2) {
  const Vector3d u = unit(m0 - m1, "midpoint chord");
  const Vector3d v = unit(m2 - m1, "midpoint chord");
  return degrees(std::acos(clamp_unit(u.dot(v))));
}

double planar_angle(const Vector3d& l0, const Vector3d& r0, const Vector3d& l1, const Vector3d& r1,
                    const Vector3d& l2, const Vector3d& r2) {
  const Vector3d m0 = 0.5 * (l0 + r0);
  const Vector3d m1 = 0.5 * (l1 + r1);
  const Vector3d m2 = 0.5 * (l2 + r2);
  const Vector3d rung = unit(r1 - l1, "pair");
  const Vector3d na = rung.cross(unit(m1 - m0, "midpoint chord"));
  const Vector3d nb = rung.cross(unit(m2 - m1, "midpoint chord"));
  require_normal(na, "planar angle");
  require_normal(nb, "planar angle");
  return degrees(std::acos(clamp_unit(na.normalized().dot(nb.normalized()))));
}

std::array<double, 5> pair_features(const Posture& p, int i, Chirality chirality) {
  const auto a = static_cast<std::size_t>(i);
  const auto b = a + 1;
  const double sign = chirality == Chirality::left ? -1.0 : 1.0;
  return {
      pair_distance_ratio(pair_distance(p.left[a], p.right[a]), pair_distance(p.left[b], p.right[b])),
      midpoint_distance(p.midpoint(i), p.midpoint(i + 1)),
      side_cosine(p.left[a], p.left[b], p.right[a], p.right[b]),
      sign * lateral_twist(p.left[a], p.right[a], p.left[b], p.right[b]),
      sign * axial_twist(p.left[a], p.right[a], p.left[b], p.right[b]),
  };
}

std::array<double, 2> triple_features(const Posture& p, int i) {
  const auto a = static_cast<std::size_t>(i);
  return {
      midpoint_bend(p.midpoint(i), p.midpoint(i + 1), p.midpoint(i + 2)),
      planar_angle(p.left[a], p.right[a], p.left[a + 1], p.right[a + 1], p.left[a + 2], p.right[a + 2]),
  };
}

std::array<double, 7> posture_sums(const Posture& posture, Chirality chirality) {
  std::array<double, 7> sums{};
  for (int i = 0; i + 1 < posture.pair_count(); ++i) {
    const auto f = pair_features(posture, i, chirality);
    for (std::size_t s = 0; s < f.size(); ++s) sums[s] += f[s];
  }
  for (int i = 0; i + 2 < posture.pair_count(); ++i) {
    const auto f = triple_features(posture, i);
    sums[5] += f[0];
    sums[6] += f[1];
  }
  return sums;
}

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::sides: return "sides";
    case ModelKind::pairs: return "pairs";
    case ModelKind::posture: return "posture";
  }
  return "unknown";
}

ModelKind parse_model_kind(const std::string& name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
  if (lower == "sides") return ModelKind::sides;
  if (lower == "pairs") return ModelKind::pairs;
  if (lower == "posture") return ModelKind::posture;
  throw Error(ErrorCode::InvalidArgument, "unknown model kind '" + name + "'");
}

std::vector<FeatureGroup> model_groups(ModelKind kind, int pair_count) {
  if (pair_count < 2) throw Error(ErrorCode::InvalidArgument, "posture models need at least two pairs");
  const auto names = seam_pair_names(pair_count);
  auto span_name = [&](int first, int count) {
    std::string s = names[static_cast<std::size_t>(first)];
    for (int j = 1; j < count; ++j) s += "-" + names[static_cast<std::size_t>(first + j)];
    return s;
  };
  std::vector<FeatureGroup> groups;
  using Kind = FeatureGroup::Kind;

  if (kind == ModelKind::sides) {
    for (int i = 0; i < pair_count; ++i) {
      groups.push_back({Kind::pair_distance, i, "pd:" + span_name(i, 1), {2 * i, 2 * i + 1}, {"pd"}});
      if (i + 1 < pair_count) {
        groups.push_back({Kind::left_chord, i, "left:" + span_name(i, 2), {2 * i, 2 * i + 2}, {"chord"}});
        groups.push_back({Kind::right_chord, i, "right:" + span_name(i, 2), {2 * i + 1, 2 * i + 3}, {"chord"}});
      }
    }
  } else {
    groups.push_back({Kind::pair_distance, 0, "pd:" + span_name(0, 1), {0, 1}, {"pd"}});
    for (int i = 0; i + 1 < pair_count; ++i) {
      groups.push_back({Kind::pair, i, "pair:" + span_name(i, 2), {2 * i, 2 * i + 1, 2 * i + 2, 2 * i + 3},
                        std::vector<std::string>(kPairFeatureNames.begin(), kPairFeatureNames.end())});
    }
    for (int i = 0; i + 2 < pair_count; ++i) {
      groups.push_back({Kind::triple, i, "triple:" + span_name(i, 3),
                        {2 * i, 2 * i + 1, 2 * i + 2, 2 * i + 3, 2 * i + 4, 2 * i + 5},
                        std::vector<std::string>(kTripleFeatureNames.begin(), kTripleFeatureNames.end())});
    }
    if (kind == ModelKind::posture) {
      std::vector<int> all(static_cast<std::size_t>(2 * pair_count));
      for (int v = 0; v < 2 * pair_count; ++v) all[static_cast<std::size_t>(v)] = v;
      groups.push_back({Kind::posture, 0, "posture", all,
                        std::vector<std::string>(kPostureSumNames.begin(), kPostureSumNames.end())});
    }
  }
  std::stable_sort(groups.begin(), groups.end(), [](const FeatureGroup& a, const FeatureGroup& b) {
    if (a.degree() != b.degree()) return a.degree() < b.degree();
    return a.vertices < b.vertices;
  });
  return groups;
}

Eigen::VectorXd evaluate_group(const FeatureGroup& group, std::span<const Vector3d> positions,
                               Chirality chirality) {
  if (static_cast<int>(positions.size()) != group.degree()) {
    throw Error(ErrorCode::DimensionMismatch, "group " + group.name + " needs " + std::to_string(group.degree()) +
                                                  " positions");
  }
  auto to_vector = [](const auto& values) {
    Eigen::VectorXd out(static_cast<Eigen::Index>(values.size()));
    for (std::size_t i = 0; i < values.size(); ++i) out[static_cast<Eigen::Index>(i)] = values[i];
    return out;
  };
  using Kind = FeatureGroup::Kind;
  switch (group.kind) {
    case Kind::pair_distance:
    case Kind::left_chord:
    case Kind::right_chord:
      return Eigen::VectorXd::Constant(1, (positions[0] - positions[1]).norm());
    case Kind::pair: return to_vector(pair_features(slice(positions), 0, chirality));
    case Kind::triple: return to_vector(triple_features(slice(positions), 0));
    case Kind::posture: return to_vector(posture_sums(slice(positions), chirality));
  }
  throw Error(ErrorCode::InvalidArgument, "unknown feature group");
}

Eigen::VectorXd evaluate_group(const FeatureGroup& group, const Posture& posture, Chirality chirality) {
  const auto all = posture_points(posture);
  std::vector<Vector3d> positions;
  for (int v : group.vertices) {
    if (v >= static_cast<int>(all.size())) throw Error(ErrorCode::DimensionMismatch, "posture is too short");
    positions.push_back(all[static_cast<std::size_t>(v)]);
  }
  return evaluate_group(group, positions, chirality);
}

}  // namespace ehgm
