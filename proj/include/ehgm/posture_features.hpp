#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "ehgm/types.hpp"

namespace ehgm {

/// Seam-cell postures: vertex 2i is the left nucleus of pair i, vertex 2i+1
/// the right one, pairs ordered tail to head.
struct Posture {
  std::vector<Eigen::Vector3d> left;
  std::vector<Eigen::Vector3d> right;

  int pair_count() const { return static_cast<int>(left.size()); }
  Eigen::Vector3d midpoint(int i) const;
};

/// Reads a posture off `points` under `mapping` (mapping[v] = point of vertex v).
Posture posture_from_mapping(const PointSet& points, std::span<const int> mapping);
/// Inverse of posture_from_mapping for a posture listed in vertex order.
std::vector<Eigen::Vector3d> posture_points(const Posture& posture);

/// Pair names tail to head: T V6 V5 V4 ... H0, with Q fourth when there are 11 pairs.
std::vector<std::string> seam_pair_names(int pair_count);
/// TL, TR, V6L, V6R, ...
std::vector<std::string> seam_cell_labels(int pair_count);

/// Sign convention for the twist features; `left` negates psi and tau.
enum class Chirality { right, left };

double pair_distance(const Eigen::Vector3d& l, const Eigen::Vector3d& r);
std::vector<double> side_chord_lengths(std::span<const Eigen::Vector3d> side);
/// Throws DegenerateGeometry when the next pair distance is below the separation floor.
double pair_distance_ratio(double pd, double pd_next);
double midpoint_distance(const Eigen::Vector3d& m, const Eigen::Vector3d& m_next);
double side_cosine(const Eigen::Vector3d& l, const Eigen::Vector3d& l_next, const Eigen::Vector3d& r,
                   const Eigen::Vector3d& r_next);
/// Dihedral angles in units of pi, in [-1, 1].
double lateral_twist(const Eigen::Vector3d& l, const Eigen::Vector3d& r, const Eigen::Vector3d& l_next,
                     const Eigen::Vector3d& r_next);
double axial_twist(const Eigen::Vector3d& l, const Eigen::Vector3d& r, const Eigen::Vector3d& l_next,
                   const Eigen::Vector3d& r_next);
/// Interior angle at m1 in degrees: 180 for a straight run, 0 when folded back.
double midpoint_bend(const Eigen::Vector3d& m0, const Eigen::Vector3d& m1, const Eigen::Vector3d& m2);
/// Angle in degrees between the planes spanned by pair i+1's rung and the
/// midpoint chords on either side of it.
double planar_angle(const Eigen::Vector3d& l0, const Eigen::Vector3d& r0, const Eigen::Vector3d& l1,
                    const Eigen::Vector3d& r1, const Eigen::Vector3d& l2, const Eigen::Vector3d& r2);

inline constexpr std::array<const char*, 5> kPairFeatureNames = {"pdr", "md", "phi", "psi", "tau"};
inline constexpr std::array<const char*, 2> kTripleFeatureNames = {"theta", "zeta"};
inline constexpr std::array<const char*, 7> kPostureSumNames = {"sum_pdr", "sum_md",    "sum_phi", "sum_psi",
                                                                "sum_tau", "sum_theta", "sum_zeta"};

/// PDR, MD, phi, psi, tau between pairs i and i+1.
std::array<double, 5> pair_features(const Posture& posture, int i, Chirality chirality = Chirality::right);
/// Theta and zeta over pairs i, i+1, i+2.
std::array<double, 2> triple_features(const Posture& posture, int i);
/// Sums of every pair and triple feature over the whole posture.
std::array<double, 7> posture_sums(const Posture& posture, Chirality chirality = Chirality::right);

enum class ModelKind { sides, pairs, posture };
std::string to_string(ModelKind kind);
/// Throws InvalidArgument for an unknown name.
ModelKind parse_model_kind(const std::string& name);

/// One scored hyperedge: its vertices and the feature vector measured on them.
struct FeatureGroup {
  enum class Kind { pair_distance, left_chord, right_chord, pair, triple, posture };
  Kind kind;
  int first_pair;  // unused for posture
  std::string name;
  std::vector<int> vertices;
  std::vector<std::string> features;

  int degree() const { return static_cast<int>(vertices.size()); }
};

/// Groups of a model over `pair_count` pairs, in ascending (degree, vertices) order.
std::vector<FeatureGroup> model_groups(ModelKind kind, int pair_count);

/// Features of `group` given the positions of its vertices, in vertex order.
/// Throws DegenerateGeometry for undefined angles or ratios.
Eigen::VectorXd evaluate_group(const FeatureGroup& group, std::span<const Eigen::Vector3d> positions,
                               Chirality chirality = Chirality::right);
/// Features of `group` on a full posture.
Eigen::VectorXd evaluate_group(const FeatureGroup& group, const Posture& posture,
                               Chirality chirality = Chirality::right);

}  // namespace ehgm
