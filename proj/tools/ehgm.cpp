// Command-line front end: gen, fit, match, verify, eval.

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "ehgm/error.hpp"
#include "ehgm/harness.hpp"
#include "ehgm/io.hpp"
#include "ehgm/model_fitting.hpp"
#include "ehgm/posture_model.hpp"
#include "ehgm/synthetic.hpp"

using namespace ehgm;
namespace fs = std::filesystem;

namespace {

struct GenArgs {
  int count = 1;
  int pairs = 10;
  double noise = 0.3;
  std::optional<double> z;
  int distractors = 0;
  std::uint64_t seed = 1;
  std::string out_dir = ".";
};

struct FitArgs {
  std::string corpus;
  std::string model = "pairs";
  std::string out;
  double bin_width = 0.1;
  int min_samples = 5;
  std::string cov_norm = "sample";
  std::string chirality = "right";
  std::string leave_out;
};

struct MatchArgs {
  RunManifest manifest;
  std::optional<double> time, first_twitch, hatch;
  std::string out;
  bool no_timing = false;
};

Chirality parse_chirality(const std::string& name) {
  if (name == "right") return Chirality::right;
  if (name == "left") return Chirality::left;
  throw Error(ErrorCode::InvalidArgument, "chirality must be 'left' or 'right'");
}

int run_gen(const GenArgs& args) {
  WormSpec spec;
  spec.pair_count = args.pairs;
  spec.noise = args.noise;
  spec.z = args.z.value_or(-1.0);
  spec.distractors = args.distractors;
  fs::create_directories(args.out_dir);
  const auto corpus = generate_corpus(args.count, spec, args.seed);
  nlohmann::json index = nlohmann::json::array();
  std::vector<AnnotatedSample> annotated;
  for (const auto& worm : corpus) {
    PointTable table;
    table.points = worm.points;
    table.labels.assign(static_cast<std::size_t>(worm.points.size()), "");
    for (int i = 0; i < worm.points.size(); ++i) table.ids.push_back(std::to_string(i));
    for (std::size_t v = 0; v < worm.truth.size(); ++v) table.labels[static_cast<std::size_t>(worm.truth[v])] = worm.labels[v];
    const auto path = (fs::path(args.out_dir) / (worm.embryo_id + ".csv")).string();
    save_pointset(path, table);
    index.push_back({{"id", worm.embryo_id},
                     {"points", path},
                     {"time", worm.time},
                     {"first_twitch", worm.first_twitch},
                     {"hatch", worm.hatch},
                     {"z", worm.z()}});
    annotated.push_back(worm.annotated());
  }
  save_corpus((fs::path(args.out_dir) / "corpus.csv").string(), annotated);
  std::ofstream(fs::path(args.out_dir) / "instances.json") << index.dump(2) << '\n';
  std::cout << "wrote " << corpus.size() << " instances to " << args.out_dir << '\n';
  return kExitOk;
}

int run_fit(const FitArgs& args) {
  FitOptions options;
  options.bin_width = args.bin_width;
  options.min_samples = args.min_samples;
  options.covariance_norm = parse_covariance_norm(args.cov_norm);
  options.chirality = parse_chirality(args.chirality);
  if (!args.leave_out.empty()) options.leave_out = args.leave_out;
  const auto corpus = load_corpus(args.corpus);
  const auto stats = fit_templates(corpus, parse_model_kind(args.model), options);
  save_template(stats, args.out);
  std::cout << "fit " << to_string(stats.model) << " template on " << corpus.size() << " postures, "
            << stats.bin_count() << " bins -> " << args.out << '\n';
  return kExitOk;
}

RunManifest resolve_manifest(const MatchArgs& args) {
  RunManifest manifest = args.manifest;
  if (args.time || args.first_twitch || args.hatch) {
    if (!(args.time && args.first_twitch && args.hatch)) {
      throw Error(ErrorCode::InvalidArgument, "--time, --first-twitch and --hatch go together");
    }
    manifest.z = normalize_time(*args.time, *args.first_twitch, *args.hatch);
  }
  return manifest;
}

int run_match_command(const MatchArgs& args) {
  const auto record = run_match(resolve_manifest(args));
  if (!args.out.empty()) save_record(record, args.out, !args.no_timing);
  const auto& e = record.evaluation;
  std::cout << (record.converged ? "converged" : "interrupted") << ", " << record.solutions.size() << " solutions";
  if (!record.solutions.empty()) std::cout << ", best cost " << format_double(record.solutions.front().cost);
  if (e.has_truth) {
    std::cout << ", truth rank " << (e.rank ? std::to_string(*e.rank) : "absent");
    if (e.cost_ratio) std::cout << ", cost ratio " << format_double(*e.cost_ratio);
  }
  std::cout << '\n';
  return record.converged ? kExitOk : kExitTimeLimit;
}

int run_verify(const MatchArgs& args) {
  const auto manifest = resolve_manifest(args);
  const auto stats = load_template(manifest.template_path);
  const auto table = load_pointset(manifest.points_path, parse_column_map(manifest.columns));
  const auto labels = seam_cell_labels(stats.pair_count);
  const auto model = build_tensors(stats.model, table.points, stats, manifest.z);
  SearchConfig config;
  config.branch_size = manifest.branch_size;
  config.top_k = manifest.top_k;
  config.workers = manifest.workers;
  config.seeds = parse_seeds(manifest.seeds, labels, table);
  const auto report = verify(model, config);
  std::cout << report.summary << '\n';
  return report.agree ? kExitOk : kExitError;
}

int run_eval(const std::vector<std::string>& results, const std::string& out) {
  std::vector<EvaluationRow> rows;
  for (const auto& path : results) rows.push_back(load_record(path).evaluation);
  const auto report = evaluate_corpus(rows);
  const auto doc = report_to_json(report);
  if (!out.empty()) std::ofstream(out) << doc.dump(2) << '\n';
  const auto& s = report.overall;
  std::cout << "samples " << s.samples << ", converged " << s.converged;
  for (const auto& [x, fraction] : s.top_x) std::cout << ", top" << x << " " << format_double(100.0 * fraction) << "%";
  if (s.median_cost_ratio) std::cout << ", median CR " << format_double(*s.median_cost_ratio);
  std::cout << '\n';
  return kExitOk;
}

void add_model_options(CLI::App* cmd, MatchArgs& args) {
  auto& m = args.manifest;
  cmd->add_option("--points", m.points_path, "Point set CSV (id,x,y,z[,label])")->required();
  cmd->add_option("--template", m.template_path, "Template JSON from 'fit'")->required();
  cmd->add_option("--columns", m.columns, "Column map overrides, e.g. id=ID,x=X");
  cmd->add_option("--z", m.z, "Normalized developmental time")->check(CLI::Range(0.0, 1.0));
  cmd->add_option("--time", args.time, "Acquisition time (with --first-twitch and --hatch)");
  cmd->add_option("--first-twitch", args.first_twitch);
  cmd->add_option("--hatch", args.hatch);
  cmd->add_option("--seeds", m.seeds, "Fixed correspondences, e.g. TL=3,TR=7");
  cmd->add_option("-k,--branch-size", m.branch_size, "Vertices committed per branch")->check(CLI::PositiveNumber);
  cmd->add_option("--topk", m.top_k, "Number of solutions to return")->check(CLI::PositiveNumber);
  cmd->add_option("--workers", m.workers, "Search threads")->check(CLI::PositiveNumber);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Exact hypergraph matching of seam-cell nuclei"};
  app.require_subcommand(1);

  GenArgs gen;
  auto* gen_cmd = app.add_subcommand("gen", "Generate synthetic worms");
  gen_cmd->add_option("--count", gen.count)->check(CLI::PositiveNumber);
  gen_cmd->add_option("--pairs", gen.pairs)->check(CLI::Range(2, 11));
  gen_cmd->add_option("--noise", gen.noise)->check(CLI::NonNegativeNumber);
  gen_cmd->add_option("--z", gen.z, "Fixed normalized time (default: uniform)")->check(CLI::Range(0.0, 1.0));
  gen_cmd->add_option("--distractors", gen.distractors)->check(CLI::NonNegativeNumber);
  gen_cmd->add_option("--seed", gen.seed);
  gen_cmd->add_option("--out-dir", gen.out_dir);

  FitArgs fit;
  auto* fit_cmd = app.add_subcommand("fit", "Fit a template from annotated postures");
  fit_cmd->add_option("--corpus", fit.corpus, "CSV: embryo,time,first_twitch,hatch,label,x,y,z")->required();
  fit_cmd->add_option("--model", fit.model, "sides, pairs or posture");
  fit_cmd->add_option("--out", fit.out)->required();
  fit_cmd->add_option("--bin-width", fit.bin_width)->check(CLI::Range(1e-6, 1.0));
  fit_cmd->add_option("--min-samples", fit.min_samples)->check(CLI::PositiveNumber);
  fit_cmd->add_option("--cov-norm", fit.cov_norm)->check(CLI::IsMember({"sample", "literal"}));
  fit_cmd->add_option("--chirality", fit.chirality)->check(CLI::IsMember({"left", "right"}));
  fit_cmd->add_option("--leave-out", fit.leave_out, "Embryo id to hold out");

  MatchArgs match;
  auto* match_cmd = app.add_subcommand("match", "Solve one instance");
  add_model_options(match_cmd, match);
  match_cmd->add_option("--time-limit", match.manifest.time_limit, "Seconds")->check(CLI::NonNegativeNumber);
  match_cmd->add_option("--random-seed", match.manifest.random_seed, "Recorded in the manifest");
  match_cmd->add_option("--out", match.out, "Result JSON");
  match_cmd->add_flag("--no-timing", match.no_timing, "Omit wall-clock fields from the result");

  MatchArgs check;
  auto* verify_cmd = app.add_subcommand("verify", "Cross-check the solver against the exhaustive oracle");
  add_model_options(verify_cmd, check);

  std::vector<std::string> results;
  std::string report_out;
  auto* eval_cmd = app.add_subcommand("eval", "Aggregate result files");
  eval_cmd->add_option("results", results, "Result JSON files")->required();
  eval_cmd->add_option("--out", report_out, "Report JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*gen_cmd) return run_gen(gen);
    if (*fit_cmd) return run_fit(fit);
    if (*match_cmd) return run_match_command(match);
    if (*verify_cmd) return run_verify(check);
    if (*eval_cmd) return run_eval(results, report_out);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitError;
  }
  return kExitUsage;
}
