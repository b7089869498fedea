#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ehgm/error.hpp"
#include "ehgm/io.hpp"
#include "ehgm/solver.hpp"
#include "ehgm/tensor.hpp"

namespace ehgm {

/// Process exit statuses of the command-line tool.
enum ExitCode : int {
  kExitOk = 0,
  kExitError = 1,
  kExitUsage = 2,
  kExitTimeLimit = 3,
  kExitInfeasible = 4,
  kExitParse = 5,
};
int exit_code_for(ErrorCode code);

/// Everything that determines one matching run.
struct RunManifest {
  std::string points_path;
  std::string columns;  // column map overrides, "id=...,x=..."
  std::string template_path;
  std::string model;  // echoed from the template
  double z = 0.5;     // normalized developmental time
  std::string seeds;  // "TL=3,TR=7"
  int branch_size = 2;
  int top_k = 1;
  std::optional<double> time_limit;  // seconds
  int workers = 1;
  std::string chirality;  // echoed from the template
  std::uint64_t random_seed = 0;
};

nlohmann::json manifest_to_json(const RunManifest& manifest);
RunManifest manifest_from_json(const nlohmann::json& doc);

/// Outcome of one run against its ground truth. rank is 1-based within the
/// returned list; the cost ratio is cost(truth) / cost(best returned).
struct EvaluationRow {
  std::string sample;
  int vertex_count = 0;
  int seed_count = 0;
  bool converged = false;
  double runtime = 0.0;
  bool has_truth = false;
  std::optional<int> rank;
  std::optional<double> truth_cost;
  std::optional<double> cost_ratio;
};

/// cost(truth) / cost(best); 1 when both are zero, +inf when only best is.
double cost_ratio(double truth_cost, double best_cost);
/// 1-based position of `truth` in `solutions`, if present.
std::optional<int> rank_of(const std::vector<FullAssignment>& solutions, const std::vector<int>& truth);

EvaluationRow evaluate_run(const SolverResult& result, const HypergraphModel& model,
                           const std::optional<std::vector<int>>& truth, int seed_count);

/// A run as persisted: manifest echo, labels, solutions, stats and evaluation.
struct RunRecord {
  RunManifest manifest;
  std::vector<std::string> vertex_labels;
  std::vector<std::string> point_ids;
  std::vector<FullAssignment> solutions;
  bool converged = false;
  SearchStats stats;
  EvaluationRow evaluation;
};

/// Loads the manifest's point set and template, builds the model tensors,
/// solves and evaluates against labels found in the point file.
RunRecord run_match(const RunManifest& manifest);

/// Wall-clock fields are dropped when `timing` is false, which makes the
/// document a pure function of the manifest for a single worker.
nlohmann::json record_to_json(const RunRecord& record, bool timing = true);
RunRecord record_from_json(const nlohmann::json& doc);
void save_record(const RunRecord& record, const std::string& path, bool timing = true);
RunRecord load_record(const std::string& path);

struct EvaluationSummary {
  int samples = 0;
  int converged = 0;
  std::map<int, double> top_x;  // x -> fraction of samples with rank <= x
  std::optional<double> median_runtime;
  /// Over converged runs that have a ratio.
  std::optional<double> median_cost_ratio;
};

inline const std::vector<int> kTopX = {1, 2, 3, 5, 10};

struct EvaluationReport {
  std::vector<EvaluationRow> rows;
  EvaluationSummary overall;
  std::map<int, EvaluationSummary> by_vertex_count;
  std::map<int, EvaluationSummary> by_seed_count;
};

std::optional<double> median(std::vector<double> values);
EvaluationSummary summarize(const std::vector<EvaluationRow>& rows);
EvaluationReport evaluate_corpus(const std::vector<EvaluationRow>& rows);
nlohmann::json report_to_json(const EvaluationReport& report);

using SolveFn = std::function<SolverResult(const HypergraphModel&, const SearchConfig&)>;

struct VerifyReport {
  bool agree = false;
  std::vector<FullAssignment> solver;
  std::vector<FullAssignment> oracle;
  std::optional<int> first_divergent_rank;  // 1-based
  std::string summary;
};

/// Compares two ranked lists: equal length, identical mappings, costs within
/// 1e-9 relative.
VerifyReport compare_solutions(std::vector<FullAssignment> solver, std::vector<FullAssignment> oracle);

/// Runs `solver` (the branch and bound by default) and the exhaustive oracle on
/// the same instance and seeds. Throws TooLarge beyond the oracle's guard.
VerifyReport verify(const HypergraphModel& model, const SearchConfig& config, const SolveFn& solver = {});

}  // namespace ehgm
