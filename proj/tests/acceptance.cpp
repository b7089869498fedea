// End-to-end acceptance run: one PASS/FAIL line per criterion.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numbers>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Geometry>

#include "ehgm/error.hpp"
#include "ehgm/harness.hpp"
#include "ehgm/io.hpp"
#include "ehgm/model_fitting.hpp"
#include "ehgm/objective.hpp"
#include "ehgm/oracle.hpp"
#include "ehgm/posture_features.hpp"
#include "ehgm/posture_model.hpp"
#include "ehgm/random_model.hpp"
#include "ehgm/solver.hpp"
#include "ehgm/synthetic.hpp"

using namespace ehgm;
using Eigen::Vector3d;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = true;
  std::string detail;
  std::string first_failure;

  void expect(bool ok, const std::string& what) {
    if (ok) return;
    if (pass) first_failure = what;
    pass = false;
  }
};

int report(int number, const std::string& name, const std::function<Outcome()>& body) {
  const auto start = Clock::now();
  Outcome out;
  try {
    out = body();
  } catch (const std::exception& e) {
    out.pass = false;
    out.first_failure = std::string("exception: ") + e.what();
  }
  const double seconds = std::chrono::duration<double>(Clock::now() - start).count();
  char timing[32];
  std::snprintf(timing, sizeof timing, "%.1fs", seconds);
  std::cout << (out.pass ? "PASS" : "FAIL") << " criterion " << number << " " << name << ": " << out.detail << " ["
            << timing << "]";
  if (!out.pass) std::cout << " first failure: " << out.first_failure;
  std::cout << std::endl;
  return out.pass ? 0 : 1;
}

std::vector<int> divisors(int n) {
  std::vector<int> out;
  for (int k = 1; k <= n; ++k) {
    if (n % k == 0) out.push_back(k);
  }
  return out;
}

bool same_lists(const std::vector<FullAssignment>& a, const std::vector<FullAssignment>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].mapping != b[i].mapping || !nearly_equal(a[i].cost, b[i].cost, 1e-9)) return false;
  }
  return true;
}

std::string instance_tag(int n1, int n2, int k, int top_k, int trial) {
  return "instance " + std::to_string(trial) + " (n1=" + std::to_string(n1) + ", n2=" + std::to_string(n2) +
         ", k=" + std::to_string(k) + ", topK=" + std::to_string(top_k) + ")";
}

Outcome oracle_exactness() {
  Outcome out;
  std::mt19937_64 rng(20240601);
  const int trials = 504;
  const int top_ks[] = {1, 3, 5};
  for (int trial = 0; trial < trials; ++trial) {
    const int n1 = 2 + trial % 7;
    const int n2 = n1 + static_cast<int>(rng() % static_cast<unsigned>(10 - n1));
    const auto ks = divisors(n1);
    const int k = ks[rng() % ks.size()];
    const int top_k = top_ks[(trial / 7) % 3];
    RandomModelOptions options;
    options.quantized = trial % 2 == 1;
    options.max_hyperedges_per_degree = 1 + static_cast<int>(rng() % 4);
    const auto model = random_model(n1, n2, rng, options);
    SearchConfig config;
    config.branch_size = k;
    config.top_k = top_k;
    const auto result = solve(model, config);
    const auto oracle = top_k_exhaustive(model, top_k);
    out.expect(result.converged_exactly && same_lists(result.solutions, oracle), instance_tag(n1, n2, k, top_k, trial));
  }
  out.detail = std::to_string(trials) + " random instances, n1 in 2..8, n2 <= 9, topK in {1,3,5}";
  return out;
}

Outcome decomposition_identity() {
  Outcome out;
  std::mt19937_64 rng(77);
  const int trials = 1200;
  for (int trial = 0; trial < trials; ++trial) {
    const int n1 = 1 + trial % 9;
    const int n2 = n1 + static_cast<int>(rng() % 3);
    const auto ks = divisors(n1);
    const int k = ks[rng() % ks.size()];
    RandomModelOptions options;
    options.max_hyperedges_per_degree = 1 + static_cast<int>(rng() % 5);
    const auto model = random_model(n1, n2, rng, options);
    std::vector<int> points(static_cast<std::size_t>(n2));
    std::iota(points.begin(), points.end(), 0);
    std::shuffle(points.begin(), points.end(), rng);
    const std::vector<int> mapping(points.begin(), points.begin() + n1);

    const double f = objective_eval(mapping, model);
    StratifiedObjective objective(model, k, {.materialize = trial % 2 == 0, .cache_capacity = 64});
    double stratified = 0.0;
    for (int m = 1; m <= objective.branch_count(); ++m) {
      stratified += objective.selection_cost(m, mapping) + objective.aggregation_cost(m, mapping);
    }
    out.expect(nearly_equal(stratified, f, 1e-9) && decomposition_check(mapping, model, k),
               "triple " + std::to_string(trial));
  }
  out.detail = std::to_string(trials) + " (mapping, tensors, k) triples";
  return out;
}

Outcome seeded_equivalence() {
  Outcome out;
  std::mt19937_64 rng(31337);
  const int trials = 120;
  for (int trial = 0; trial < trials; ++trial) {
    const int n1 = 2 + trial % 7;
    const int n2 = n1 + static_cast<int>(rng() % static_cast<unsigned>(10 - n1));
    const auto ks = divisors(n1);
    const int k = ks[rng() % ks.size()];
    const int branches = n1 / k;
    const int seeded_branches = 1 + static_cast<int>(rng() % static_cast<unsigned>(branches));
    std::vector<int> points(static_cast<std::size_t>(n2));
    std::iota(points.begin(), points.end(), 0);
    std::shuffle(points.begin(), points.end(), rng);
    SearchConfig config;
    config.branch_size = k;
    config.top_k = 1 + trial % 5;
    for (int v = 0; v < seeded_branches * k; ++v) config.seeds.fixed[v] = points[static_cast<std::size_t>(v)];
    const auto model = random_model(n1, n2, rng);
    const auto result = solve(model, config);
    const auto oracle = top_k_exhaustive(model, config.top_k, config.seeds);
    out.expect(same_lists(result.solutions, oracle), instance_tag(n1, n2, k, config.top_k, trial));
  }
  out.detail = std::to_string(trials) + " instances with random whole-branch seed prefixes";
  return out;
}

Outcome worker_invariance() {
  Outcome out;
  std::mt19937_64 rng(4096);
  const int instances = 20;
  for (int i = 0; i < instances; ++i) {
    const int n1 = i % 2 == 0 ? 8 : 6;
    const int n2 = n1 + 2 + i % 2;
    const int k = 2;
    RandomModelOptions options;
    options.quantized = i % 4 < 2;
    options.max_hyperedges_per_degree = 4;
    const auto model = random_model(n1, n2, rng, options);
    std::vector<SolverResult> results;
    for (int workers : {1, 2, 4}) {
      SearchConfig config;
      config.branch_size = k;
      config.top_k = 5;
      config.workers = workers;
      results.push_back(solve(model, config));
    }
    for (std::size_t w = 1; w < results.size(); ++w) {
      bool identical = results[w].solutions.size() == results[0].solutions.size();
      for (std::size_t s = 0; identical && s < results[0].solutions.size(); ++s) {
        identical = results[w].solutions[s] == results[0].solutions[s];
      }
      out.expect(identical, "instance " + std::to_string(i));
    }
  }
  out.detail = std::to_string(instances) + " instances x workers {1,2,4}, costs and mappings bit-identical";
  return out;
}

// Projection-based dihedral, independent of the library's normal-vector formulas.
double projected_dihedral(const Vector3d& q0, const Vector3d& q1, const Vector3d& q2, const Vector3d& q3) {
  const Vector3d axis = (q2 - q1).normalized();
  Vector3d u = q0 - q1, v = q3 - q2;
  u -= u.dot(axis) * axis;
  v -= v.dot(axis) * axis;
  const Vector3d e1 = u.normalized(), e2 = axis.cross(e1);
  return std::atan2(v.dot(e2), v.dot(e1));
}

bool near_angle_fraction(double a, double b) {
  const double d = std::abs(a - b);
  return std::min(d, 2.0 - d) < 1e-9;
}

Posture move(const Posture& p, const Eigen::Matrix3d& linear, const Vector3d& shift) {
  Posture q;
  for (int i = 0; i < p.pair_count(); ++i) {
    q.left.push_back(linear * p.left[static_cast<std::size_t>(i)] + shift);
    q.right.push_back(linear * p.right[static_cast<std::size_t>(i)] + shift);
  }
  return q;
}

Outcome geometry_suite() {
  Outcome out;
  std::mt19937_64 rng(555);
  std::normal_distribution<double> gauss;
  int checks = 0;

  // Rigid motions, every feature of every model.
  for (int trial = 0; trial < 40; ++trial) {
    WormSpec spec;
    spec.pair_count = trial % 2 == 0 ? 10 : 11;
    spec.noise = 0.5;
    const auto p = generate_instance(spec, rng()).posture();
    const Eigen::Matrix3d rotation =
        Eigen::Quaterniond(gauss(rng), gauss(rng), gauss(rng), gauss(rng)).normalized().toRotationMatrix();
    const auto q = move(p, rotation, Vector3d(50 * gauss(rng), 50 * gauss(rng), 50 * gauss(rng)));
    for (ModelKind kind : {ModelKind::sides, ModelKind::pairs, ModelKind::posture}) {
      for (const auto& group : model_groups(kind, p.pair_count())) {
        const auto a = evaluate_group(group, p), b = evaluate_group(group, q);
        for (Eigen::Index s = 0; s < a.size(); ++s) {
          ++checks;
          out.expect(std::abs(a[s] - b[s]) <= 1e-8 * std::max(1.0, std::abs(a[s])), "rigid motion " + group.name);
        }
      }
    }
    // Reflection flips psi and tau only; the left-handed convention flips them too.
    Eigen::Matrix3d mirror = rotation;
    mirror.col(0) *= -1.0;
    const auto r = move(p, mirror, Vector3d::Zero());
    for (int i = 0; i + 1 < p.pair_count(); ++i) {
      const auto a = pair_features(p, i), b = pair_features(r, i), c = pair_features(p, i, Chirality::left);
      for (int s = 0; s < 3; ++s) out.expect(std::abs(a[s] - b[s]) < 1e-9, "reflection invariance");
      for (int s = 3; s < 5; ++s) {
        out.expect(std::abs(a[s] + b[s]) < 1e-9, "reflection flips twist");
        out.expect(c[s] == -a[s], "chirality flag");
      }
      checks += 10;
    }
  }

  // Ranges on unstructured quads.
  std::uniform_real_distribution<double> u(-10, 10);
  for (int trial = 0; trial < 500; ++trial) {
    Posture p;
    for (int i = 0; i < 3; ++i) {
      p.left.emplace_back(u(rng), u(rng), u(rng));
      p.right.emplace_back(u(rng), u(rng), u(rng));
    }
    const auto f = pair_features(p, 0);
    const auto t = triple_features(p, 0);
    out.expect(f[0] >= 0 && f[1] >= 0, "distance ranges");
    out.expect(std::abs(f[2]) <= 1 && std::abs(f[3]) <= 1 && std::abs(f[4]) <= 1, "phi/psi/tau range");
    out.expect(t[0] >= 0 && t[0] <= 180 && t[1] >= 0 && t[1] <= 180, "theta/zeta range");
    // Twists against the projection oracle.
    out.expect(near_angle_fraction(f[3], -projected_dihedral(p.left[1], p.left[0], p.right[0], p.right[1]) /
                                             std::numbers::pi),
               "psi oracle");
    out.expect(near_angle_fraction(f[4], projected_dihedral(p.left[0], p.right[0], p.right[1], p.left[1]) /
                                             std::numbers::pi),
               "tau oracle");
    checks += 5;
  }

  // Analytic examples.
  out.expect(midpoint_bend({0, 0, 0}, {1, 0, 0}, {0, 0, 0}) == 0.0, "theta fold-back = 0");
  out.expect(std::abs(midpoint_bend({0, 0, 0}, {1, 0, 0}, {2, 0, 0}) - 180.0) < 1e-12, "theta flat = 180");
  out.expect(std::abs(midpoint_bend({0, 0, 0}, {1, 0, 0}, {1, 1, 0}) - 90.0) < 1e-12, "theta right angle = 90");
  out.expect(std::abs(pair_distance({0, 0, 0}, {3, 4, 0}) - 5.0) < 1e-15, "PD 3-4-5");
  out.expect(std::abs(midpoint_distance({0, 0, 0}, {1, 2, 2}) - 3.0) < 1e-15, "MD = 3");
  out.expect(std::abs(lateral_twist({0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {1, 1, 0})) < 1e-12, "psi cis = 0");
  out.expect(std::abs(std::abs(lateral_twist({0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {1, -1, 0})) - 1.0) < 1e-12,
             "psi trans = 1");
  out.expect(std::abs(lateral_twist({0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {1, 0, -1}) - 0.5) < 1e-12, "psi quarter twist");
  WormSpec straight;
  straight.noise = 0.0;
  straight.straight = true;
  straight.z = 0.5;
  const auto sums = posture_sums(generate_instance(straight, 1).posture());
  out.expect(std::abs(sums[3]) < 1e-9 && std::abs(sums[4]) < 1e-9, "straight worm twists = 0");
  out.expect(std::abs(sums[5] - 180.0 * 8) < 1e-9, "straight worm theta = 180 each");
  checks += 11;

  out.detail = std::to_string(checks) + " checks: rigid motion (1e-8), reflection/chirality, ranges, analytic examples";
  return out;
}

Outcome fitting_suite() {
  Outcome out;
  out.expect(normalize_time(400, 400, 800) == 0.0, "z at first twitch");
  out.expect(normalize_time(800, 400, 800) == 1.0, "z at hatch");
  bool threw = false;
  try {
    normalize_time(1, 5, 5);
  } catch (const Error& e) {
    threw = e.code() == ErrorCode::InvalidTimeline;
  }
  out.expect(threw, "invalid timeline");

  std::mt19937_64 rng(9001);
  std::normal_distribution<double> gauss(1.0, 2.0);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 1 + trial % 6;
    const int count = n + 2 + trial % 10;
    std::vector<Eigen::VectorXd> samples;
    for (int i = 0; i < count; ++i) {
      Eigen::VectorXd v(n);
      for (int d = 0; d < n; ++d) v[d] = gauss(rng) * (1 + d);
      samples.push_back(v);
    }
    const Eigen::VectorXd mean = estimate_mean(samples);
    for (CovarianceNorm norm : {CovarianceNorm::sample, CovarianceNorm::literal}) {
      Eigen::MatrixXd want = Eigen::MatrixXd::Zero(n, n);
      for (int a = 0; a < n; ++a) {
        for (int b = 0; b < n; ++b) {
          double acc = 0.0;
          for (const auto& s : samples) acc += (s[a] - mean[a]) * (s[b] - mean[b]);
          want(a, b) = norm == CovarianceNorm::sample ? acc / (count - 1) : acc;
        }
      }
      const auto got = estimate_covariance(samples, mean, norm);
      out.expect((got - want).norm() <= 1e-10 * std::max(1.0, want.norm()), "covariance oracle");
    }
    const auto cov = regularize_covariance(estimate_covariance(samples, mean));
    const auto inverse = spd_inverse(cov);
    out.expect(cov.llt().info() == Eigen::Success, "SPD covariance");
    out.expect(inverse.llt().info() == Eigen::Success && inverse == inverse.transpose(), "SPD inverse");
    out.expect(mahalanobis_cost(mean, mean, inverse) == 0.0, "zero at the mean");
    out.expect(mahalanobis_cost(samples.front(), mean, inverse) >= 0.0, "nonnegative");
  }

  std::vector<AnnotatedSample> corpus;
  for (const auto& w : generate_corpus(30, WormSpec{}, 4)) corpus.push_back(w.annotated());
  const auto dir = fs::temp_directory_path() / "ehgm_acceptance_fit";
  fs::create_directories(dir);
  for (ModelKind kind : {ModelKind::sides, ModelKind::pairs, ModelKind::posture}) {
    FitOptions options;
    options.bin_width = 0.25;
    const auto stats = fit_templates(corpus, kind, options);
    const auto a = dir / "a.json", b = dir / "b.json";
    save_template(stats, a.string());
    const auto loaded = load_template(a.string());
    save_template(loaded, b.string());
    std::ifstream fa(a, std::ios::binary), fb(b, std::ios::binary);
    std::stringstream sa, sb;
    sa << fa.rdbuf();
    sb << fb.rdbuf();
    out.expect(sa.str() == sb.str(), "template bytes round-trip");
    bool exact = true;
    for (std::size_t bin = 0; bin < stats.bins.size(); ++bin) {
      for (std::size_t g = 0; g < stats.bins[bin].size(); ++g) {
        exact = exact && stats.bins[bin][g].mean == loaded.bins[bin][g].mean &&
                stats.bins[bin][g].covariance == loaded.bins[bin][g].covariance &&
                stats.bins[bin][g].inverse == loaded.bins[bin][g].inverse;
      }
    }
    out.expect(exact, "template values bit-exact");
  }
  fs::remove_all(dir);
  out.detail = "time endpoints, covariance oracle (both normalizations), SPD, zero at mean, bit-exact template files";
  return out;
}

Outcome synthetic_end_to_end() {
  Outcome out;
  WormSpec spec;  // nP = 10, sigma = 0.3 um
  const auto worms = generate_corpus(50, spec, 1000);
  std::vector<AnnotatedSample> training;
  for (int i = 0; i < 40; ++i) training.push_back(worms[static_cast<std::size_t>(i)].annotated());
  FitOptions options;
  options.bin_width = 0.25;
  options.min_samples = 15;
  const auto stats = fit_templates(training, ModelKind::pairs, options);

  std::vector<EvaluationRow> rows;
  for (int i = 40; i < 50; ++i) {
    const auto& worm = worms[static_cast<std::size_t>(i)];
    const auto model = build_tensors(ModelKind::pairs, worm.points, stats, worm.z());
    SearchConfig config;
    config.branch_size = 2;
    config.top_k = 10;
    config.workers = 4;
    config.time_limit = std::chrono::duration<double>(120.0);
    const auto result = solve(model, config);
    auto row = evaluate_run(result, model, worm.truth, 0);
    row.sample = worm.embryo_id;
    rows.push_back(row);
  }
  const auto summary = summarize(rows);
  const double top1 = summary.top_x.at(1);
  out.expect(top1 >= 0.8, "top-1 below 80%");
  out.expect(summary.median_cost_ratio.has_value() && std::abs(*summary.median_cost_ratio - 1.0) < 0.005,
             "median cost ratio not 1.00");
  std::ostringstream detail;
  char ratio[16] = "n/a";
  if (summary.median_cost_ratio) std::snprintf(ratio, sizeof ratio, "%.2f", *summary.median_cost_ratio);
  detail << "Pairs, k=2, 40 train / 10 test: top-1 " << static_cast<int>(std::lround(100 * top1)) << "%, top-3 "
         << static_cast<int>(std::lround(100 * summary.top_x.at(3))) << "%, median CR " << ratio << ", "
         << summary.converged << "/10 converged, ranks";
  for (const auto& row : rows) detail << ' ' << (row.rank ? std::to_string(*row.rank) : "-");
  out.detail = detail.str();
  return out;
}

Outcome anytime_behavior() {
  Outcome out;
  const auto dir = fs::temp_directory_path() / "ehgm_acceptance_anytime";
  fs::remove_all(dir);
  fs::create_directories(dir);

  WormSpec spec;
  std::vector<AnnotatedSample> training;
  for (const auto& w : generate_corpus(30, spec, 60)) training.push_back(w.annotated());
  FitOptions options;
  options.bin_width = 0.25;
  options.min_samples = 15;
  const auto stats = fit_templates(training, ModelKind::posture, options);
  const auto template_path = dir / "posture.json";
  save_template(stats, template_path.string());

  spec.distractors = 20;
  spec.noise = 1.0;
  const auto worm = generate_instance(spec, 61);
  PointTable table;
  table.points = worm.points;
  for (int i = 0; i < worm.points.size(); ++i) table.ids.push_back(std::to_string(i));
  const auto points_path = dir / "worm.csv";
  save_pointset(points_path.string(), table);

  const auto result_path = dir / "result.json";
  std::ostringstream command;
  command << '"' << EHGM_CLI_PATH << "\" match --points " << points_path << " --template " << template_path
          << " --z " << format_double(worm.z()) << " -k 2 --topk 3 --time-limit 1 --out " << result_path
          << " > /dev/null 2>&1";
  const int status = std::system(command.str().c_str());
  const int exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  out.expect(exit_code == kExitTimeLimit, "CLI exit code " + std::to_string(exit_code));

  const auto record = load_record(result_path.string());
  out.expect(!record.converged, "reported as converged");
  out.expect(!record.solutions.empty(), "no solutions returned");
  const auto model = build_tensors(ModelKind::posture, worm.points, stats, worm.z());
  for (const auto& s : record.solutions) {
    out.expect(static_cast<int>(s.mapping.size()) == 20, "mapping size");
    check_distinct_points(s.mapping, worm.points.size());
    out.expect(nearly_equal(objective_eval(s.mapping, model), s.cost, 1e-9), "cost re-evaluation");
  }
  out.detail = "n1=20, n2=40 Posture model, 1 s limit: exit " + std::to_string(exit_code) + ", converged=" +
               (record.converged ? "true" : "false") + ", " + std::to_string(record.solutions.size()) +
               " valid solutions re-evaluated";
  fs::remove_all(dir);
  return out;
}

}  // namespace

// With arguments, runs only the listed criteria.
int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"oracle exactness", oracle_exactness},         {"decomposition identity", decomposition_identity},
      {"seeded equivalence", seeded_equivalence},     {"worker invariance", worker_invariance},
      {"geometry suite", geometry_suite},             {"model-fitting suite", fitting_suite},
      {"synthetic end-to-end", synthetic_end_to_end}, {"anytime behavior", anytime_behavior},
  };
  std::vector<int> selected;
  for (int i = 1; i < argc; ++i) selected.push_back(std::atoi(argv[i]));
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int number = static_cast<int>(i) + 1;
    if (!selected.empty() && std::find(selected.begin(), selected.end(), number) == selected.end()) continue;
    failures += report(number, criteria[i].first, criteria[i].second);
  }
  return failures == 0 ? 0 : 1;
}
