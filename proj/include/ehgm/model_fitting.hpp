#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "ehgm/posture_features.hpp"

namespace ehgm {

/// z = (t - s) / (h - s). Throws InvalidTimeline unless h > s.
double normalize_time(double t, double first_twitch, double hatch);

struct AnnotatedSample {
  std::string embryo_id;
  double time = 0.0;
  double first_twitch = 0.0;
  double hatch = 1.0;
  Posture posture;
};

enum class CovarianceNorm {
  sample,   // 1 / (N - 1)
  literal,  // plain sum of centered cross-products
};
std::string to_string(CovarianceNorm norm);
CovarianceNorm parse_covariance_norm(const std::string& name);

/// Column-wise mean of the rows of `samples`. Throws EmptyBin if there are none.
Eigen::VectorXd estimate_mean(const std::vector<Eigen::VectorXd>& samples);
/// Centered scatter around `mean`, normalized per `norm`; a single sample gives
/// the zero matrix. Throws EmptyBin if there are no samples.
Eigen::MatrixXd estimate_covariance(const std::vector<Eigen::VectorXd>& samples, const Eigen::VectorXd& mean,
                                    CovarianceNorm norm = CovarianceNorm::sample);
/// Adds eps * I with eps = max(1e-8, 1e-6 * trace / n).
Eigen::MatrixXd regularize_covariance(const Eigen::MatrixXd& covariance);
/// Inverse of an SPD matrix, symmetrized.
Eigen::MatrixXd spd_inverse(const Eigen::MatrixXd& covariance);

/// (g - mean)^T inverse (g - mean), clamped at 0. Throws DimensionMismatch.
double mahalanobis_cost(const Eigen::VectorXd& g, const Eigen::VectorXd& mean, const Eigen::MatrixXd& inverse);

struct GroupStats {
  Eigen::VectorXd mean;
  Eigen::MatrixXd covariance;  // regularized
  Eigen::MatrixXd inverse;
  int sample_count = 0;
  /// "bin", "merged" or "global": where the samples came from.
  std::string source;
};

/// Time-binned statistics for every feature group of one model.
struct TemplateStats {
  static constexpr int kVersion = 1;

  ModelKind model = ModelKind::pairs;
  int pair_count = 0;
  CovarianceNorm covariance_norm = CovarianceNorm::sample;
  Chirality chirality = Chirality::right;
  /// "corpus" or "prior_frame".
  std::string source = "corpus";
  std::vector<double> bin_edges;
  std::vector<std::string> group_names;
  std::vector<std::vector<std::string>> feature_names;
  std::vector<std::vector<GroupStats>> bins;  // [bin][group]

  int bin_count() const { return static_cast<int>(bins.size()); }
  /// Bin holding z, with z clamped into the edge range.
  int bin_index(double z) const;
};

struct FitOptions {
  double bin_width = 0.1;
  int min_samples = 5;
  CovarianceNorm covariance_norm = CovarianceNorm::sample;
  Chirality chirality = Chirality::right;
  std::optional<std::string> leave_out;
};

/// Fits per-bin means and covariances for every group of `kind`. Bins with
/// fewer than min_samples samples borrow from neighbouring bins, widening
/// until enough samples are found or every bin is merged.
/// Throws InsufficientData for an empty corpus (after the hold-out), a hold-out
/// with fewer than two embryos, or inconsistent pair counts.
TemplateStats fit_templates(const std::vector<AnnotatedSample>& corpus, ModelKind kind,
                            const FitOptions& options = {});

/// Consecutive frames (by time) of each embryo.
std::vector<std::pair<const AnnotatedSample*, const AnnotatedSample*>> frame_transitions(
    const std::vector<AnnotatedSample>& corpus);

/// Single-bin template centred on the features of `prior`, with covariances of
/// frame-to-frame feature differences across `corpus`.
TemplateStats prior_frame_template(const Posture& prior, const std::vector<AnnotatedSample>& corpus,
                                   ModelKind kind, const FitOptions& options = {});

nlohmann::json template_to_json(const TemplateStats& stats);
/// Throws ParseError for a malformed document or unsupported version.
TemplateStats template_from_json(const nlohmann::json& doc);
void save_template(const TemplateStats& stats, const std::string& path);
TemplateStats load_template(const std::string& path);

}  // namespace ehgm
