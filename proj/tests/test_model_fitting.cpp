#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <Eigen/Cholesky>
#include <Eigen/LU>

#include "ehgm/error.hpp"
#include "ehgm/model_fitting.hpp"
#include "ehgm/synthetic.hpp"

using namespace ehgm;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

ErrorCode code_of(auto&& call) {
  try {
    call();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an ehgm::Error");
  return ErrorCode::InvalidArgument;
}

VectorXd vec(std::initializer_list<double> values) {
  VectorXd v(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (double x : values) v[i++] = x;
  return v;
}

std::vector<VectorXd> random_samples(std::mt19937_64& rng, int count, int dim) {
  std::normal_distribution<double> g(2.0, 3.0);
  std::vector<VectorXd> out;
  for (int i = 0; i < count; ++i) {
    VectorXd v(dim);
    for (int d = 0; d < dim; ++d) v[d] = g(rng) * (d + 1);
    out.push_back(v);
  }
  return out;
}

// Running-mean update, independent of the library's summation.
VectorXd streaming_mean(const std::vector<VectorXd>& samples) {
  VectorXd mean = VectorXd::Zero(samples.front().size());
  for (std::size_t i = 0; i < samples.size(); ++i) mean += (samples[i] - mean) / static_cast<double>(i + 1);
  return mean;
}

// Element-by-element textbook covariance with the 1/(N-1) factor.
MatrixXd textbook_covariance(const std::vector<VectorXd>& samples) {
  const auto n = samples.front().size();
  const auto count = static_cast<double>(samples.size());
  MatrixXd out(n, n);
  for (Eigen::Index a = 0; a < n; ++a) {
    for (Eigen::Index b = 0; b < n; ++b) {
      double ma = 0.0, mb = 0.0;
      for (const auto& s : samples) {
        ma += s[a];
        mb += s[b];
      }
      ma /= count;
      mb /= count;
      double acc = 0.0;
      for (const auto& s : samples) acc += (s[a] - ma) * (s[b] - mb);
      out(a, b) = acc / (count - 1.0);
    }
  }
  return out;
}

std::vector<AnnotatedSample> corpus_of(int count, std::uint64_t seed, WormSpec spec = {}) {
  std::vector<AnnotatedSample> out;
  for (const auto& w : generate_corpus(count, spec, seed)) out.push_back(w.annotated());
  return out;
}

bool same_template(const TemplateStats& a, const TemplateStats& b) {
  return template_to_json(a).dump() == template_to_json(b).dump();
}

}  // namespace

TEST_CASE("normalized time") {
  CHECK(normalize_time(500, 400, 800) == 0.25);
  CHECK(normalize_time(400, 400, 800) == 0.0);
  CHECK(normalize_time(800, 400, 800) == 1.0);
  CHECK(code_of([] { normalize_time(1, 5, 5); }) == ErrorCode::InvalidTimeline);
  CHECK(code_of([] { normalize_time(1, 5, 4); }) == ErrorCode::InvalidTimeline);
}

TEST_CASE("mean estimate") {
  CHECK(estimate_mean({vec({7})})[0] == 7.0);
  CHECK(estimate_mean({vec({1}), vec({3})})[0] == 2.0);
  CHECK(code_of([] { estimate_mean({}); }) == ErrorCode::EmptyBin);
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 50; ++trial) {
    const auto samples = random_samples(rng, 2 + trial, 4);
    CHECK((estimate_mean(samples) - streaming_mean(samples)).norm() < 1e-10);
  }
}

TEST_CASE("covariance estimate") {
  SUBCASE("constant samples: zero, then the ridge") {
    const std::vector<VectorXd> samples(6, vec({1, 2, 3}));
    const MatrixXd cov = estimate_covariance(samples, estimate_mean(samples));
    CHECK(cov.norm() == 0.0);
    const MatrixXd reg = regularize_covariance(cov);
    CHECK(reg.isApprox(1e-8 * MatrixXd::Identity(3, 3)));
  }
  SUBCASE("normalizations") {
    const std::vector<VectorXd> two = {vec({0}), vec({2})};
    CHECK(estimate_covariance(two, estimate_mean(two), CovarianceNorm::literal)(0, 0) == 2.0);
    CHECK(estimate_covariance(two, estimate_mean(two), CovarianceNorm::sample)(0, 0) == 2.0);
    const std::vector<VectorXd> three = {vec({0}), vec({2}), vec({4})};
    CHECK(estimate_covariance(three, estimate_mean(three), CovarianceNorm::literal)(0, 0) == 8.0);
    CHECK(estimate_covariance(three, estimate_mean(three), CovarianceNorm::sample)(0, 0) == 4.0);
  }
  SUBCASE("one sample gives zero") {
    CHECK(estimate_covariance({vec({4, 5})}, vec({4, 5})).norm() == 0.0);
  }
  SUBCASE("matches the textbook estimator") {
    std::mt19937_64 rng(2);
    for (int trial = 0; trial < 30; ++trial) {
      const auto samples = random_samples(rng, 3 + trial, 5);
      const MatrixXd got = estimate_covariance(samples, estimate_mean(samples));
      const MatrixXd want = textbook_covariance(samples);
      CHECK((got - want).norm() <= 1e-9 * want.norm());
    }
  }
  SUBCASE("ridge scales with the trace") {
    MatrixXd m = MatrixXd::Zero(2, 2);
    m(0, 0) = 4.0;
    m(1, 1) = 6.0;
    const MatrixXd reg = regularize_covariance(m);
    CHECK(reg(0, 0) == doctest::Approx(4.0 + 5e-6));
    CHECK(reg(1, 1) == doctest::Approx(6.0 + 5e-6));
  }
}

TEST_CASE("Mahalanobis cost") {
  CHECK(mahalanobis_cost(vec({1, 2}), vec({1, 2}), MatrixXd::Identity(2, 2)) == 0.0);
  CHECK(mahalanobis_cost(vec({3, 4}), vec({0, 0}), MatrixXd::Identity(2, 2)) == 25.0);
  CHECK(code_of([] { mahalanobis_cost(vec({1}), vec({1, 2}), MatrixXd::Identity(2, 2)); }) ==
        ErrorCode::DimensionMismatch);
  CHECK(code_of([] { mahalanobis_cost(vec({1, 2}), vec({1, 2}), MatrixXd::Identity(3, 3)); }) ==
        ErrorCode::DimensionMismatch);

  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const auto samples = random_samples(rng, 12, 4);
    const VectorXd mean = estimate_mean(samples);
    const MatrixXd cov = regularize_covariance(estimate_covariance(samples, mean));
    const MatrixXd inverse = spd_inverse(cov);
    CHECK(inverse.isApprox(inverse.transpose(), 0.0));
    CHECK(cov.llt().info() == Eigen::Success);
    const VectorXd g = random_samples(rng, 1, 4).front();
    // Solve instead of invert, via full-pivot LU.
    const VectorXd x = cov.fullPivLu().solve(g - mean);
    const double want = (g - mean).dot(x);
    const double got = mahalanobis_cost(g, mean, inverse);
    CHECK(got >= 0.0);
    CHECK(got == doctest::Approx(want).epsilon(1e-8));
  }
}

TEST_CASE("option names") {
  CHECK(parse_covariance_norm("literal") == CovarianceNorm::literal);
  CHECK(parse_covariance_norm(to_string(CovarianceNorm::sample)) == CovarianceNorm::sample);
  CHECK(code_of([] { parse_covariance_norm("nope"); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("fitting falls back to neighbouring bins") {
  // Every sample lands at z = 0.05 except one at z = 0.95.
  auto corpus = corpus_of(12, 10);
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    auto& s = corpus[i];
    s.time = s.first_twitch + (i == 0 ? 0.95 : 0.05) * (s.hatch - s.first_twitch);
  }
  FitOptions options;
  options.bin_width = 0.1;
  options.min_samples = 5;
  const auto stats = fit_templates(corpus, ModelKind::sides, options);
  REQUIRE(stats.bin_count() == 10);
  CHECK(stats.bins[0][0].source == "bin");
  CHECK(stats.bins[0][0].sample_count == 11);
  CHECK(stats.bins[1][0].source == "merged");
  CHECK(stats.bins[1][0].sample_count == 11);
  // Bin 9 has to reach all the way back to bin 0.
  CHECK(stats.bins[9][0].source == "global");
  CHECK(stats.bins[9][0].sample_count == 12);
  CHECK(stats.bin_index(-3.0) == 0);
  CHECK(stats.bin_index(7.0) == 9);
  CHECK(stats.bin_index(0.55) == 5);
}

TEST_CASE("a single embryo gives one global template") {
  const auto corpus = corpus_of(1, 20);
  const auto stats = fit_templates(corpus, ModelKind::pairs);
  for (const auto& bin : stats.bins) {
    for (std::size_t g = 0; g < bin.size(); ++g) {
      CHECK(bin[g].source == "global");
      CHECK(bin[g].mean == stats.bins[0][g].mean);
      CHECK(bin[g].sample_count == 1);
    }
  }
}

TEST_CASE("fitting errors") {
  CHECK(code_of([] { fit_templates({}, ModelKind::pairs); }) == ErrorCode::InsufficientData);
  const auto one = corpus_of(1, 21);
  FitOptions hold_out;
  hold_out.leave_out = one.front().embryo_id;
  CHECK(code_of([&] { fit_templates(one, ModelKind::pairs, hold_out); }) == ErrorCode::InsufficientData);
  auto mixed = corpus_of(3, 22);
  WormSpec eleven;
  eleven.pair_count = 11;
  mixed.push_back(generate_instance(eleven, 5).annotated());
  CHECK(code_of([&] { fit_templates(mixed, ModelKind::pairs); }) == ErrorCode::InsufficientData);
  auto bad_time = corpus_of(2, 23);
  bad_time[1].hatch = bad_time[1].first_twitch;
  CHECK(code_of([&] { fit_templates(bad_time, ModelKind::pairs); }) == ErrorCode::InvalidTimeline);
}

TEST_CASE("leave-one-out equals fitting without the embryo") {
  const auto corpus = corpus_of(15, 30);
  FitOptions options;
  options.leave_out = corpus[4].embryo_id;
  const auto held = fit_templates(corpus, ModelKind::pairs, options);
  auto rest = corpus;
  rest.erase(rest.begin() + 4);
  CHECK(same_template(held, fit_templates(rest, ModelKind::pairs)));
  CHECK_FALSE(same_template(held, fit_templates(corpus, ModelKind::pairs)));
}

TEST_CASE("bin means follow the elongation trend") {
  const auto corpus = corpus_of(200, 40);
  FitOptions options;
  options.bin_width = 0.2;
  const auto stats = fit_templates(corpus, ModelKind::posture, options);
  const auto posture_group = stats.group_names.size() - 1;
  REQUIRE(stats.group_names[posture_group] == "posture");
  double previous = -1.0;
  for (const auto& bin : stats.bins) {
    CHECK(bin[posture_group].source == "bin");
    const double sum_md = bin[posture_group].mean[1];
    CHECK(sum_md > previous);
    previous = sum_md;
  }
}

TEST_CASE("scaling the coordinates scales length statistics") {
  const auto corpus = corpus_of(30, 50);
  auto scaled = corpus;
  for (auto& s : scaled) {
    for (auto& p : s.posture.left) p *= 2.0;
    for (auto& p : s.posture.right) p *= 2.0;
  }
  FitOptions options;
  options.bin_width = 1.0;
  const auto a = fit_templates(corpus, ModelKind::pairs, options);
  const auto b = fit_templates(scaled, ModelKind::pairs, options);
  // Group 0 is the tail pair distance; pair groups carry (pdr, md, phi, psi, tau).
  CHECK(b.bins[0][0].mean[0] == doctest::Approx(2.0 * a.bins[0][0].mean[0]));
  CHECK(b.bins[0][0].covariance(0, 0) == doctest::Approx(4.0 * a.bins[0][0].covariance(0, 0)));
  const auto& pa = a.bins[0][1];
  const auto& pb = b.bins[0][1];
  CHECK(pb.mean[0] == doctest::Approx(pa.mean[0]));
  CHECK(pb.mean[1] == doctest::Approx(2.0 * pa.mean[1]));
  CHECK(pb.mean[3] == doctest::Approx(pa.mean[3]));
}

TEST_CASE("a training posture scores zero against a template fit on it alone") {
  const auto corpus = corpus_of(1, 60);
  const auto stats = fit_templates(corpus, ModelKind::pairs);
  const auto groups = model_groups(ModelKind::pairs, stats.pair_count);
  for (std::size_t g = 0; g < groups.size(); ++g) {
    const auto& s = stats.bins[0][g];
    CHECK(mahalanobis_cost(evaluate_group(groups[g], corpus[0].posture), s.mean, s.inverse) == doctest::Approx(0.0));
  }
}

TEST_CASE("template JSON") {
  const auto corpus = corpus_of(25, 70);
  FitOptions options;
  options.bin_width = 0.25;
  options.chirality = Chirality::left;
  const auto stats = fit_templates(corpus, ModelKind::posture, options);

  SUBCASE("fitting is deterministic") {
    CHECK(same_template(stats, fit_templates(corpus, ModelKind::posture, options)));
  }
  SUBCASE("round trip is bit exact") {
    const auto path = std::filesystem::temp_directory_path() / "ehgm_template_roundtrip.json";
    save_template(stats, path.string());
    const auto loaded = load_template(path.string());
    CHECK(loaded.model == stats.model);
    CHECK(loaded.chirality == Chirality::left);
    CHECK(loaded.bin_edges == stats.bin_edges);
    for (int b = 0; b < stats.bin_count(); ++b) {
      for (std::size_t g = 0; g < stats.group_names.size(); ++g) {
        const auto& x = stats.bins[static_cast<std::size_t>(b)][g];
        const auto& y = loaded.bins[static_cast<std::size_t>(b)][g];
        CHECK(x.mean == y.mean);
        CHECK(x.covariance == y.covariance);
        CHECK(x.inverse == y.inverse);
        CHECK(x.sample_count == y.sample_count);
        CHECK(x.source == y.source);
      }
    }
    const auto again = std::filesystem::temp_directory_path() / "ehgm_template_roundtrip2.json";
    save_template(loaded, again.string());
    std::ifstream fa(path), fb(again);
    std::stringstream sa, sb;
    sa << fa.rdbuf();
    sb << fb.rdbuf();
    CHECK(sa.str() == sb.str());
    std::filesystem::remove(path);
    std::filesystem::remove(again);
  }
  SUBCASE("malformed documents") {
    auto doc = template_to_json(stats);
    doc["version"] = 99;
    CHECK(code_of([&] { template_from_json(doc); }) == ErrorCode::ParseError);
    auto missing = template_to_json(stats);
    missing.erase("bins");
    CHECK(code_of([&] { template_from_json(missing); }) == ErrorCode::ParseError);
    CHECK(code_of([] { load_template("/nonexistent/template.json"); }) == ErrorCode::InvalidArgument);
    const auto garbage = std::filesystem::temp_directory_path() / "ehgm_template_garbage.json";
    std::ofstream(garbage) << "{\"version\": 1, ";
    CHECK(code_of([&] { load_template(garbage.string()); }) == ErrorCode::ParseError);
    std::filesystem::remove(garbage);
  }
}

TEST_CASE("prior-frame templates") {
  // Three embryos imaged twice each; the second frame is the first plus a small drift.
  std::vector<AnnotatedSample> corpus;
  std::mt19937_64 rng(80);
  std::normal_distribution<double> g(0.0, 0.2);
  for (const auto& w : generate_corpus(3, WormSpec{}, 81)) {
    auto first = w.annotated();
    auto second = first;
    second.time += 5.0;
    for (auto& p : second.posture.left) p += Eigen::Vector3d(g(rng), g(rng), g(rng));
    for (auto& p : second.posture.right) p += Eigen::Vector3d(g(rng), g(rng), g(rng));
    corpus.push_back(second);  // out of order on purpose
    corpus.push_back(first);
  }
  const auto transitions = frame_transitions(corpus);
  REQUIRE(transitions.size() == 3);
  for (const auto& [a, b] : transitions) CHECK(a->time < b->time);

  const Posture prior = corpus[1].posture;
  const auto stats = prior_frame_template(prior, corpus, ModelKind::pairs);
  CHECK(stats.source == "prior_frame");
  CHECK(stats.bin_count() == 1);
  const auto groups = model_groups(ModelKind::pairs, prior.pair_count());
  for (std::size_t i = 0; i < groups.size(); ++i) {
    CHECK(stats.bins[0][i].mean == evaluate_group(groups[i], prior));
    std::vector<VectorXd> diffs;
    for (const auto& [a, b] : transitions) diffs.push_back(evaluate_group(groups[i], b->posture) - evaluate_group(groups[i], a->posture));
    const MatrixXd want = regularize_covariance(textbook_covariance(diffs));
    CHECK((stats.bins[0][i].covariance - want).norm() <= 1e-9 * std::max(1.0, want.norm()));
  }
  CHECK(code_of([&] { prior_frame_template(prior, corpus_of(3, 82), ModelKind::pairs); }) ==
        ErrorCode::InsufficientData);
}
