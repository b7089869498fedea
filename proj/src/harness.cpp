#include "ehgm/harness.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "ehgm/model_fitting.hpp"
#include "ehgm/objective.hpp"
#include "ehgm/oracle.hpp"
#include "ehgm/posture_features.hpp"
#include "ehgm/posture_model.hpp"

namespace ehgm {

using Json = nlohmann::json;

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::ParseError:
      return kExitParse;
    case ErrorCode::InfeasibleSize:
    case ErrorCode::SeedConflict:
    case ErrorCode::SeedNotPrefix:
    case ErrorCode::DegenerateInput:
      return kExitInfeasible;
    case ErrorCode::InvalidArgument:
    case ErrorCode::KNotDivisor:
      return kExitUsage;
    default:
      return kExitError;
  }
}

namespace {

Json optional_number(const std::optional<double>& value) {
  if (!value) return nullptr;
  if (std::isinf(*value)) return *value > 0 ? "inf" : "-inf";
  return *value;
}

std::optional<double> read_optional_number(const Json& value) {
  if (value.is_null()) return std::nullopt;
  if (value.is_string()) {
    const auto text = value.get<std::string>();
    if (text == "inf") return std::numeric_limits<double>::infinity();
    if (text == "-inf") return -std::numeric_limits<double>::infinity();
    throw Error(ErrorCode::ParseError, "expected a number, got '" + text + "'");
  }
  return value.get<double>();
}

Json row_to_json(const EvaluationRow& row, bool timing) {
  Json doc;
  doc["sample"] = row.sample;
  doc["vertex_count"] = row.vertex_count;
  doc["seed_count"] = row.seed_count;
  doc["converged"] = row.converged;
  if (timing) doc["runtime"] = row.runtime;
  doc["has_truth"] = row.has_truth;
  doc["rank"] = row.rank ? Json(*row.rank) : Json(nullptr);
  doc["truth_cost"] = optional_number(row.truth_cost);
  doc["cost_ratio"] = optional_number(row.cost_ratio);
  return doc;
}

EvaluationRow row_from_json(const Json& doc) {
  EvaluationRow row;
  row.sample = doc.at("sample").get<std::string>();
  row.vertex_count = doc.at("vertex_count").get<int>();
  row.seed_count = doc.at("seed_count").get<int>();
  row.converged = doc.at("converged").get<bool>();
  row.runtime = doc.value("runtime", 0.0);
  row.has_truth = doc.at("has_truth").get<bool>();
  if (!doc.at("rank").is_null()) row.rank = doc.at("rank").get<int>();
  row.truth_cost = read_optional_number(doc.at("truth_cost"));
  row.cost_ratio = read_optional_number(doc.at("cost_ratio"));
  return row;
}

Json summary_to_json(const EvaluationSummary& s) {
  Json doc;
  doc["samples"] = s.samples;
  doc["converged"] = s.converged;
  Json top = Json::object();
  for (const auto& [x, fraction] : s.top_x) top["top" + std::to_string(x)] = fraction;
  doc["top_x"] = top;
  doc["median_runtime"] = optional_number(s.median_runtime);
  doc["median_cost_ratio"] = optional_number(s.median_cost_ratio);
  return doc;
}

std::string describe(const FullAssignment& a) {
  std::ostringstream out;
  out << format_double(a.cost) << " [";
  for (std::size_t i = 0; i < a.mapping.size(); ++i) out << (i ? " " : "") << a.mapping[i];
  out << "]";
  return out.str();
}

}  // namespace

Json manifest_to_json(const RunManifest& m) {
  Json doc;
  doc["points"] = m.points_path;
  doc["columns"] = m.columns;
  doc["template"] = m.template_path;
  doc["model"] = m.model;
  doc["z"] = m.z;
  doc["seeds"] = m.seeds;
  doc["k"] = m.branch_size;
  doc["top_k"] = m.top_k;
  doc["time_limit"] = m.time_limit ? Json(*m.time_limit) : Json(nullptr);
  doc["workers"] = m.workers;
  doc["chirality"] = m.chirality;
  doc["random_seed"] = m.random_seed;
  return doc;
}

RunManifest manifest_from_json(const Json& doc) {
  RunManifest m;
  m.points_path = doc.at("points").get<std::string>();
  m.columns = doc.at("columns").get<std::string>();
  m.template_path = doc.at("template").get<std::string>();
  m.model = doc.at("model").get<std::string>();
  m.z = doc.at("z").get<double>();
  m.seeds = doc.at("seeds").get<std::string>();
  m.branch_size = doc.at("k").get<int>();
  m.top_k = doc.at("top_k").get<int>();
  if (!doc.at("time_limit").is_null()) m.time_limit = doc.at("time_limit").get<double>();
  m.workers = doc.at("workers").get<int>();
  m.chirality = doc.at("chirality").get<std::string>();
  m.random_seed = doc.at("random_seed").get<std::uint64_t>();
  return m;
}

double cost_ratio(double truth_cost, double best_cost) {
  if (best_cost == 0.0) return truth_cost == 0.0 ? 1.0 : std::numeric_limits<double>::infinity();
  return truth_cost / best_cost;
}

std::optional<int> rank_of(const std::vector<FullAssignment>& solutions, const std::vector<int>& truth) {
  for (std::size_t i = 0; i < solutions.size(); ++i) {
    if (solutions[i].mapping == truth) return static_cast<int>(i) + 1;
  }
  return std::nullopt;
}

EvaluationRow evaluate_run(const SolverResult& result, const HypergraphModel& model,
                           const std::optional<std::vector<int>>& truth, int seed_count) {
  EvaluationRow row;
  row.vertex_count = model.vertex_count();
  row.seed_count = seed_count;
  row.converged = result.converged_exactly;
  row.runtime = result.stats.wall_seconds;
  row.has_truth = truth.has_value();
  if (truth) {
    row.rank = rank_of(result.solutions, *truth);
    row.truth_cost = objective_eval(*truth, model);
    if (!result.solutions.empty()) row.cost_ratio = cost_ratio(*row.truth_cost, result.solutions.front().cost);
  }
  return row;
}

RunRecord run_match(const RunManifest& manifest) {
  const auto stats = load_template(manifest.template_path);
  const auto table = load_pointset(manifest.points_path, parse_column_map(manifest.columns));
  const auto labels = seam_cell_labels(stats.pair_count);
  const auto model = build_tensors(stats.model, table.points, stats, manifest.z);

  SearchConfig config;
  config.branch_size = manifest.branch_size;
  config.top_k = manifest.top_k;
  config.workers = manifest.workers;
  if (manifest.time_limit) config.time_limit = std::chrono::duration<double>(*manifest.time_limit);
  config.seeds = parse_seeds(manifest.seeds, labels, table);

  RunRecord record;
  record.manifest = manifest;
  record.manifest.model = to_string(stats.model);
  record.manifest.chirality = stats.chirality == Chirality::left ? "left" : "right";
  record.vertex_labels = labels;
  record.point_ids = table.ids;

  const auto result = solve(VertexSet(labels), table.points, model, config);
  record.solutions = result.solutions;
  record.converged = result.converged_exactly;
  record.stats = result.stats;
  record.evaluation = evaluate_run(result, model, ground_truth(table, labels), config.seeds.size());
  record.evaluation.sample = std::filesystem::path(manifest.points_path).stem().string();
  return record;
}

Json record_to_json(const RunRecord& record, bool timing) {
  Json doc;
  doc["manifest"] = manifest_to_json(record.manifest);
  doc["vertex_labels"] = record.vertex_labels;
  doc["point_ids"] = record.point_ids;
  doc["converged"] = record.converged;
  Json solutions = Json::array();
  for (const auto& s : record.solutions) {
    Json points = Json::array();
    for (int p : s.mapping) points.push_back(record.point_ids.empty() ? std::to_string(p) : record.point_ids[static_cast<std::size_t>(p)]);
    solutions.push_back({{"cost", s.cost}, {"mapping", s.mapping}, {"points", points}});
  }
  doc["solutions"] = solutions;
  Json stats;
  stats["nodes_expanded"] = record.stats.nodes_expanded;
  stats["candidates_pruned"] = record.stats.candidates_pruned;
  stats["lazy_entries"] = record.stats.lazy_entries;
  stats["leaves"] = record.stats.leaves;
  if (timing) stats["wall_seconds"] = record.stats.wall_seconds;
  doc["stats"] = stats;
  doc["evaluation"] = row_to_json(record.evaluation, timing);
  return doc;
}

RunRecord record_from_json(const Json& doc) {
  try {
    RunRecord record;
    record.manifest = manifest_from_json(doc.at("manifest"));
    record.vertex_labels = doc.at("vertex_labels").get<std::vector<std::string>>();
    record.point_ids = doc.at("point_ids").get<std::vector<std::string>>();
    record.converged = doc.at("converged").get<bool>();
    for (const auto& s : doc.at("solutions")) {
      record.solutions.push_back({s.at("mapping").get<std::vector<int>>(), s.at("cost").get<double>()});
    }
    const auto& stats = doc.at("stats");
    record.stats.nodes_expanded = stats.at("nodes_expanded").get<std::size_t>();
    record.stats.candidates_pruned = stats.at("candidates_pruned").get<std::size_t>();
    record.stats.lazy_entries = stats.at("lazy_entries").get<std::size_t>();
    record.stats.leaves = stats.at("leaves").get<std::size_t>();
    record.stats.wall_seconds = stats.value("wall_seconds", 0.0);
    record.evaluation = row_from_json(doc.at("evaluation"));
    return record;
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("malformed result document: ") + e.what());
  }
}

void save_record(const RunRecord& record, const std::string& path, bool timing) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::InvalidArgument, "cannot write " + path);
  out << record_to_json(record, timing).dump(2) << '\n';
}

RunRecord load_record(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::InvalidArgument, "cannot read " + path);
  Json doc;
  try {
    doc = Json::parse(in);
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::ParseError, path + ": " + e.what());
  }
  return record_from_json(doc);
}

std::optional<double> median(std::vector<double> values) {
  if (values.empty()) return std::nullopt;
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

EvaluationSummary summarize(const std::vector<EvaluationRow>& rows) {
  EvaluationSummary s;
  s.samples = static_cast<int>(rows.size());
  std::vector<double> runtimes, ratios;
  for (const auto& row : rows) {
    if (row.converged) ++s.converged;
    runtimes.push_back(row.runtime);
    if (row.converged && row.cost_ratio) ratios.push_back(*row.cost_ratio);
  }
  for (int x : kTopX) {
    int hits = 0;
    for (const auto& row : rows) hits += row.rank && *row.rank <= x ? 1 : 0;
    s.top_x[x] = rows.empty() ? 0.0 : static_cast<double>(hits) / static_cast<double>(rows.size());
  }
  s.median_runtime = median(runtimes);
  s.median_cost_ratio = median(ratios);
  return s;
}

EvaluationReport evaluate_corpus(const std::vector<EvaluationRow>& rows) {
  EvaluationReport report;
  report.rows = rows;
  report.overall = summarize(rows);
  std::map<int, std::vector<EvaluationRow>> by_n1, by_seeds;
  for (const auto& row : rows) {
    by_n1[row.vertex_count].push_back(row);
    by_seeds[row.seed_count].push_back(row);
  }
  for (const auto& [n1, group] : by_n1) report.by_vertex_count[n1] = summarize(group);
  for (const auto& [seeds, group] : by_seeds) report.by_seed_count[seeds] = summarize(group);
  return report;
}

Json report_to_json(const EvaluationReport& report) {
  Json doc;
  doc["overall"] = summary_to_json(report.overall);
  Json by_n1 = Json::object(), by_seeds = Json::object();
  for (const auto& [n1, s] : report.by_vertex_count) by_n1[std::to_string(n1)] = summary_to_json(s);
  for (const auto& [seeds, s] : report.by_seed_count) by_seeds[std::to_string(seeds)] = summary_to_json(s);
  doc["by_vertex_count"] = by_n1;
  doc["by_seed_count"] = by_seeds;
  Json rows = Json::array();
  for (const auto& row : report.rows) rows.push_back(row_to_json(row, true));
  doc["rows"] = rows;
  return doc;
}

VerifyReport compare_solutions(std::vector<FullAssignment> solver, std::vector<FullAssignment> oracle) {
  VerifyReport report;
  report.solver = std::move(solver);
  report.oracle = std::move(oracle);
  const std::size_t common = std::min(report.solver.size(), report.oracle.size());
  for (std::size_t i = 0; i < common; ++i) {
    const auto& a = report.solver[i];
    const auto& b = report.oracle[i];
    if (a.mapping != b.mapping || !nearly_equal(a.cost, b.cost)) {
      report.first_divergent_rank = static_cast<int>(i) + 1;
      report.summary = "DISAGREE at rank " + std::to_string(i + 1) + ": solver " + describe(a) + ", oracle " + describe(b);
      return report;
    }
  }
  if (report.solver.size() != report.oracle.size()) {
    report.first_divergent_rank = static_cast<int>(common) + 1;
    report.summary = "DISAGREE at rank " + std::to_string(common + 1) + ": solver returned " +
                     std::to_string(report.solver.size()) + " solutions, oracle " +
                     std::to_string(report.oracle.size());
    return report;
  }
  report.agree = true;
  report.summary = "AGREE (" + std::to_string(common) + " solutions)";
  return report;
}

VerifyReport verify(const HypergraphModel& model, const SearchConfig& config, const SolveFn& solver) {
  if (injective_mapping_count(model.vertex_count(), model.point_count()) > kOracleMappingLimit) {
    throw Error(ErrorCode::TooLarge, "instance exceeds the exhaustive oracle's limit");
  }
  SearchConfig exact = config;
  exact.time_limit.reset();
  const auto result = solver ? solver(model, exact) : solve(model, exact);
  return compare_solutions(result.solutions, top_k_exhaustive(model, config.top_k, config.seeds));
}

}  // namespace ehgm
