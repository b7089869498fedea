#include "ehgm/model_fitting.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>

#include <Eigen/Cholesky>

#include "ehgm/error.hpp"

namespace ehgm {

namespace {

using Json = nlohmann::json;

std::vector<double> grid_edges(double width) {
  if (!(width > 0.0) || width > 1.0) throw Error(ErrorCode::InvalidArgument, "bin width must be in (0, 1]");
  const int count = std::max(1, static_cast<int>(std::ceil(1.0 / width - 1e-9)));
  std::vector<double> edges;
  for (int b = 0; b < count; ++b) edges.push_back(b * width);
  edges.push_back(1.0);
  return edges;
}

GroupStats summarize(const std::vector<Eigen::VectorXd>& samples, CovarianceNorm norm, std::string source) {
  GroupStats stats;
  stats.mean = estimate_mean(samples);
  stats.covariance = regularize_covariance(estimate_covariance(samples, stats.mean, norm));
  stats.inverse = spd_inverse(stats.covariance);
  stats.sample_count = static_cast<int>(samples.size());
  stats.source = std::move(source);
  return stats;
}

TemplateStats empty_template(ModelKind kind, int pair_count, const FitOptions& options,
                             const std::vector<FeatureGroup>& groups) {
  TemplateStats stats;
  stats.model = kind;
  stats.pair_count = pair_count;
  stats.covariance_norm = options.covariance_norm;
  stats.chirality = options.chirality;
  for (const auto& g : groups) {
    stats.group_names.push_back(g.name);
    stats.feature_names.push_back(g.features);
  }
  return stats;
}

Json vector_json(const Eigen::VectorXd& v) { return Json(std::vector<double>(v.data(), v.data() + v.size())); }

Json matrix_json(const Eigen::MatrixXd& m) {
  std::vector<double> flat;
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) flat.push_back(m(r, c));
  }
  return flat;
}

Eigen::VectorXd vector_from(const Json& j, std::size_t n) {
  const auto values = j.get<std::vector<double>>();
  if (values.size() != n) throw Error(ErrorCode::ParseError, "template vector has the wrong length");
  Eigen::VectorXd v(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) v[static_cast<Eigen::Index>(i)] = values[i];
  return v;
}

Eigen::MatrixXd matrix_from(const Json& j, std::size_t n) {
  const auto values = j.get<std::vector<double>>();
  if (values.size() != n * n) throw Error(ErrorCode::ParseError, "template matrix has the wrong size");
  Eigen::MatrixXd m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < n; ++c) m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = values[r * n + c];
  }
  return m;
}

}  // namespace

double normalize_time(double t, double first_twitch, double hatch) {
  if (!(hatch > first_twitch)) {
    throw Error(ErrorCode::InvalidTimeline, "hatch time must follow first twitch");
  }
  return (t - first_twitch) / (hatch - first_twitch);
}

std::string to_string(CovarianceNorm norm) { return norm == CovarianceNorm::literal ? "literal" : "sample"; }

CovarianceNorm parse_covariance_norm(const std::string& name) {
  if (name == "literal") return CovarianceNorm::literal;
  if (name == "sample") return CovarianceNorm::sample;
  throw Error(ErrorCode::InvalidArgument, "unknown covariance normalization '" + name + "'");
}

Eigen::VectorXd estimate_mean(const std::vector<Eigen::VectorXd>& samples) {
  if (samples.empty()) throw Error(ErrorCode::EmptyBin, "no samples to average");
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(samples.front().size());
  for (const auto& s : samples) {
    if (s.size() != sum.size()) throw Error(ErrorCode::DimensionMismatch, "samples differ in length");
    sum += s;
  }
  return sum / static_cast<double>(samples.size());
}

Eigen::MatrixXd estimate_covariance(const std::vector<Eigen::VectorXd>& samples, const Eigen::VectorXd& mean,
                                    CovarianceNorm norm) {
  if (samples.empty()) throw Error(ErrorCode::EmptyBin, "no samples for a covariance");
  const Eigen::Index n = mean.size();
  Eigen::MatrixXd scatter = Eigen::MatrixXd::Zero(n, n);
  for (const auto& s : samples) {
    if (s.size() != n) throw Error(ErrorCode::DimensionMismatch, "sample and mean differ in length");
    const Eigen::VectorXd d = s - mean;
    scatter += d * d.transpose();
  }
  if (norm == CovarianceNorm::sample && samples.size() > 1) scatter /= static_cast<double>(samples.size() - 1);
  return scatter;
}

Eigen::MatrixXd regularize_covariance(const Eigen::MatrixXd& covariance) {
  const auto n = static_cast<double>(covariance.rows());
  const double eps = std::max(1e-8, 1e-6 * covariance.trace() / n);
  Eigen::MatrixXd out = covariance;
  out.diagonal().array() += eps;
  return out;
}

Eigen::MatrixXd spd_inverse(const Eigen::MatrixXd& covariance) {
  Eigen::LLT<Eigen::MatrixXd> llt(covariance);
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorCode::DegenerateGeometry, "covariance is not positive definite");
  }
  Eigen::MatrixXd inverse = llt.solve(Eigen::MatrixXd::Identity(covariance.rows(), covariance.cols()));
  return 0.5 * (inverse + inverse.transpose());
}

double mahalanobis_cost(const Eigen::VectorXd& g, const Eigen::VectorXd& mean, const Eigen::MatrixXd& inverse) {
  if (g.size() != mean.size() || inverse.rows() != g.size() || inverse.cols() != g.size()) {
    throw Error(ErrorCode::DimensionMismatch, "feature vector, mean and inverse covariance disagree in size");
  }
  const Eigen::VectorXd d = g - mean;
  return std::max(0.0, d.dot(inverse * d));
}

int TemplateStats::bin_index(double z) const {
  if (bins.empty()) throw Error(ErrorCode::TemplateMismatch, "template has no bins");
  const double clamped = std::clamp(z, bin_edges.front(), bin_edges.back());
  const auto it = std::upper_bound(bin_edges.begin(), bin_edges.end(), clamped);
  const int index = static_cast<int>(it - bin_edges.begin()) - 1;
  return std::clamp(index, 0, bin_count() - 1);
}

TemplateStats fit_templates(const std::vector<AnnotatedSample>& corpus, ModelKind kind, const FitOptions& options) {
  std::vector<const AnnotatedSample*> kept;
  std::set<std::string> embryos;
  for (const auto& s : corpus) embryos.insert(s.embryo_id);
  if (options.leave_out && embryos.size() < 2) {
    throw Error(ErrorCode::InsufficientData, "leave-one-out needs at least two embryos");
  }
  for (const auto& s : corpus) {
    if (!options.leave_out || s.embryo_id != *options.leave_out) kept.push_back(&s);
  }
  if (kept.empty()) throw Error(ErrorCode::InsufficientData, "no training samples");
  const int pair_count = kept.front()->posture.pair_count();
  for (const auto* s : kept) {
    if (s->posture.pair_count() != pair_count) {
      throw Error(ErrorCode::InsufficientData, "training postures differ in pair count");
    }
  }

  const auto groups = model_groups(kind, pair_count);
  TemplateStats stats = empty_template(kind, pair_count, options, groups);
  stats.bin_edges = grid_edges(options.bin_width);
  const int bin_count = static_cast<int>(stats.bin_edges.size()) - 1;
  stats.bins.resize(static_cast<std::size_t>(bin_count));

  // samples[group][bin]; degenerate ground truth is skipped for that group.
  std::vector<std::vector<std::vector<Eigen::VectorXd>>> samples(
      groups.size(), std::vector<std::vector<Eigen::VectorXd>>(static_cast<std::size_t>(bin_count)));
  for (const auto* s : kept) {
    const int bin = stats.bin_index(normalize_time(s->time, s->first_twitch, s->hatch));
    for (std::size_t g = 0; g < groups.size(); ++g) {
      try {
        samples[g][static_cast<std::size_t>(bin)].push_back(evaluate_group(groups[g], s->posture, options.chirality));
      } catch (const Error& e) {
        if (e.code() != ErrorCode::DegenerateGeometry) throw;
      }
    }
  }

  for (int b = 0; b < bin_count; ++b) {
    for (std::size_t g = 0; g < groups.size(); ++g) {
      std::vector<Eigen::VectorXd> pool;
      int radius = 0;
      for (;; ++radius) {
        pool.clear();
        for (int j = std::max(0, b - radius); j <= std::min(bin_count - 1, b + radius); ++j) {
          const auto& bucket = samples[g][static_cast<std::size_t>(j)];
          pool.insert(pool.end(), bucket.begin(), bucket.end());
        }
        const bool everything = b - radius <= 0 && b + radius >= bin_count - 1;
        if (static_cast<int>(pool.size()) >= options.min_samples || everything) break;
      }
      if (pool.empty()) {
        throw Error(ErrorCode::InsufficientData, "no usable samples for group " + groups[g].name);
      }
      const bool everything = b - radius <= 0 && b + radius >= bin_count - 1;
      const char* source = radius == 0 ? "bin" : (everything && bin_count > 1 ? "global" : "merged");
      stats.bins[static_cast<std::size_t>(b)].push_back(summarize(pool, options.covariance_norm, source));
    }
  }
  return stats;
}

std::vector<std::pair<const AnnotatedSample*, const AnnotatedSample*>> frame_transitions(
    const std::vector<AnnotatedSample>& corpus) {
  std::map<std::string, std::vector<const AnnotatedSample*>> by_embryo;
  for (const auto& s : corpus) by_embryo[s.embryo_id].push_back(&s);
  std::vector<std::pair<const AnnotatedSample*, const AnnotatedSample*>> out;
  for (auto& [id, frames] : by_embryo) {
    std::stable_sort(frames.begin(), frames.end(),
                     [](const AnnotatedSample* a, const AnnotatedSample* b) { return a->time < b->time; });
    for (std::size_t i = 1; i < frames.size(); ++i) out.emplace_back(frames[i - 1], frames[i]);
  }
  return out;
}

TemplateStats prior_frame_template(const Posture& prior, const std::vector<AnnotatedSample>& corpus, ModelKind kind,
                                   const FitOptions& options) {
  const auto transitions = frame_transitions(corpus);
  if (transitions.empty()) throw Error(ErrorCode::InsufficientData, "no consecutive frames in the corpus");
  const auto groups = model_groups(kind, prior.pair_count());
  TemplateStats stats = empty_template(kind, prior.pair_count(), options, groups);
  stats.source = "prior_frame";
  stats.bin_edges = {0.0, 1.0};
  stats.bins.resize(1);
  for (const auto& group : groups) {
    std::vector<Eigen::VectorXd> differences;
    for (const auto& [before, after] : transitions) {
      if (before->posture.pair_count() != prior.pair_count() || after->posture.pair_count() != prior.pair_count()) {
        continue;
      }
      try {
        differences.push_back(evaluate_group(group, after->posture, options.chirality) -
                              evaluate_group(group, before->posture, options.chirality));
      } catch (const Error& e) {
        if (e.code() != ErrorCode::DegenerateGeometry) throw;
      }
    }
    if (differences.empty()) throw Error(ErrorCode::InsufficientData, "no usable transitions for " + group.name);
    GroupStats g;
    g.mean = evaluate_group(group, prior, options.chirality);
    const Eigen::VectorXd drift = estimate_mean(differences);
    g.covariance = regularize_covariance(estimate_covariance(differences, drift, options.covariance_norm));
    g.inverse = spd_inverse(g.covariance);
    g.sample_count = static_cast<int>(differences.size());
    g.source = "prior_frame";
    stats.bins[0].push_back(std::move(g));
  }
  return stats;
}

nlohmann::json template_to_json(const TemplateStats& stats) {
  Json doc;
  doc["version"] = TemplateStats::kVersion;
  doc["model"] = to_string(stats.model);
  doc["pair_count"] = stats.pair_count;
  doc["covariance_norm"] = to_string(stats.covariance_norm);
  doc["chirality"] = stats.chirality == Chirality::left ? "left" : "right";
  doc["source"] = stats.source;
  doc["bin_edges"] = stats.bin_edges;
  Json bins = Json::array();
  for (const auto& bin : stats.bins) {
    Json groups = Json::array();
    for (std::size_t g = 0; g < bin.size(); ++g) {
      groups.push_back({{"name", stats.group_names[g]},
                        {"features", stats.feature_names[g]},
                        {"samples", bin[g].sample_count},
                        {"source", bin[g].source},
                        {"mean", vector_json(bin[g].mean)},
                        {"covariance", matrix_json(bin[g].covariance)},
                        {"inverse", matrix_json(bin[g].inverse)}});
    }
    bins.push_back(std::move(groups));
  }
  doc["bins"] = std::move(bins);
  return doc;
}

TemplateStats template_from_json(const nlohmann::json& doc) {
  try {
    if (doc.at("version").get<int>() != TemplateStats::kVersion) {
      throw Error(ErrorCode::ParseError, "unsupported template version " + doc.at("version").dump());
    }
    TemplateStats stats;
    stats.model = parse_model_kind(doc.at("model").get<std::string>());
    stats.pair_count = doc.at("pair_count").get<int>();
    stats.covariance_norm = parse_covariance_norm(doc.at("covariance_norm").get<std::string>());
    stats.chirality = doc.at("chirality").get<std::string>() == "left" ? Chirality::left : Chirality::right;
    stats.source = doc.at("source").get<std::string>();
    stats.bin_edges = doc.at("bin_edges").get<std::vector<double>>();
    const auto& bins = doc.at("bins");
    if (stats.bin_edges.size() != bins.size() + 1 || bins.empty()) {
      throw Error(ErrorCode::ParseError, "bin edges do not match the bin count");
    }
    if (!std::is_sorted(stats.bin_edges.begin(), stats.bin_edges.end()) ||
        std::adjacent_find(stats.bin_edges.begin(), stats.bin_edges.end()) != stats.bin_edges.end()) {
      throw Error(ErrorCode::ParseError, "bin edges must be strictly increasing");
    }
    for (std::size_t b = 0; b < bins.size(); ++b) {
      std::vector<GroupStats> groups;
      const auto& entries = bins[b];
      for (std::size_t g = 0; g < entries.size(); ++g) {
        const auto& e = entries[g];
        const auto name = e.at("name").get<std::string>();
        const auto features = e.at("features").get<std::vector<std::string>>();
        if (b == 0) {
          stats.group_names.push_back(name);
          stats.feature_names.push_back(features);
        } else if (g >= stats.group_names.size() || stats.group_names[g] != name) {
          throw Error(ErrorCode::ParseError, "bins list different groups");
        }
        GroupStats s;
        s.sample_count = e.at("samples").get<int>();
        s.source = e.at("source").get<std::string>();
        s.mean = vector_from(e.at("mean"), features.size());
        s.covariance = matrix_from(e.at("covariance"), features.size());
        s.inverse = matrix_from(e.at("inverse"), features.size());
        groups.push_back(std::move(s));
      }
      if (groups.size() != stats.group_names.size()) throw Error(ErrorCode::ParseError, "bins list different groups");
      stats.bins.push_back(std::move(groups));
    }
    return stats;
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("template: ") + e.what());
  }
}

void save_template(const TemplateStats& stats, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::InvalidArgument, "cannot write " + path);
  out << template_to_json(stats).dump(2) << '\n';
}

TemplateStats load_template(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::InvalidArgument, "cannot read " + path);
  Json doc;
  try {
    doc = Json::parse(in);
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::ParseError, path + ": " + e.what());
  }
  return template_from_json(doc);
}

}  // namespace ehgm
