// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "relaug/corpus.hpp"
#include "relaug/fsel.hpp"
#include "relaug/jex.hpp"
#include "relaug/pex.hpp"
#include "relaug/pipeline.hpp"
#include "relaug/synthetic.hpp"
#include "test_support.hpp"

namespace relaug {
namespace {

using Clock = std::chrono::steady_clock;

/// Collects failure reasons; a criterion passes when none were recorded.
class Check {
 public:
  void expect(bool condition, const std::string& what) {
    if (!condition && failures_.size() < 5) failures_.push_back(what);
    failed_ |= !condition;
  }
  bool ok() const { return !failed_; }
  std::string summary() const {
    std::string out;
    for (const auto& failure : failures_) out += (out.empty() ? "" : "; ") + failure;
    return out;
  }
  std::string detail;

 private:
  bool failed_ = false;
  std::vector<std::string> failures_;
};

double elapsed_s(Clock::time_point since) {
  return std::chrono::duration<double>(Clock::now() - since).count();
}

std::multiset<std::string> target_multiset(const Table& table, const std::string& target) {
  std::multiset<std::string> values;
  for (const auto& value : table.column(target).values) values.insert(format_cell(value));
  return values;
}

/// Executor outputs over the randomized equivalence suite, kept for the invariant criterion.
struct EquivalenceRun {
  std::size_t corpora = 0;
  std::size_t paths = 0;
  std::set<std::size_t> lengths;
  double seconds = 0.0;
};

void executor_equivalence(Check& check, EquivalenceRun& run, Check& invariants) {
  std::mt19937_64 rng(20240611);
  const auto started = Clock::now();
  for (int trial = 0; trial < 120; ++trial) {
    const auto corpus = testing::random_corpus(rng);
    ++run.corpora;
    const auto expected_targets = target_multiset(corpus.base(), corpus.target_column());
    for (const auto& path : testing::enumerate_paths(corpus, 6)) {
      const auto binary = binary_left_join_path(corpus, path);
      const auto yannakakis = suffix_yannakakis(corpus, path);
      ++run.paths;
      run.lengths.insert(path.length());
      check.expect(binary.table == yannakakis.table, "corpus " + std::to_string(trial) + " differs");

      for (const auto* augmented : {&binary, &yannakakis}) {
        invariants.expect(augmented->table.row_count() == corpus.base().row_count(), "row count changed");
        invariants.expect(target_multiset(augmented->table, corpus.target_column()) == expected_targets,
                          "target multiset changed");
        try {
          check_augmentation_invariants(corpus, *augmented);
        } catch (const std::exception& error) {
          invariants.expect(false, error.what());
        }
      }
    }
  }
  run.seconds = elapsed_s(started);
  check.expect(run.corpora >= 100, "too few corpora");
  check.expect(run.lengths == std::set<std::size_t>{2, 3, 4, 5, 6}, "lengths 2..6 not all exercised");
  check.expect(run.seconds < 60.0, "runtime " + std::to_string(run.seconds) + " s");
  check.detail = std::to_string(run.corpora) + " corpora, " + std::to_string(run.paths) + " paths, " +
                 std::to_string(run.seconds).substr(0, 5) + " s";
  invariants.detail = std::to_string(2 * run.paths) + " materializations";
}

JoinPath chain_path(std::size_t length) {
  JoinPath path;
  path.tables.push_back("t0");
  for (std::size_t i = 1; i < length; ++i) {
    path.tables.push_back("t" + std::to_string(i));
    path.hops.push_back({"t" + std::to_string(i - 1), "k", "t" + std::to_string(i), "id", HopDirection::Forward});
  }
  return path;
}

void hybrid_score(Check& check) {
  struct Case {
    std::vector<double> semantic;
    std::vector<HopStats> hops;
    Weights weights;
  };
  std::vector<Case> cases{
      {{1.0}, {{1.0, 1.0, 1.0}}, {}},
      {{0.0}, {{0.0, 0.0, 0.0}}, {}},
      {{1.0, 1.0, 1.0, 1.0, 1.0, 1.0}, std::vector<HopStats>(6, {1.0, 1.0, 1.0}), {}},
      {{0.0, 0.0, 0.0, 0.0, 0.0, 0.0}, std::vector<HopStats>(6, {0.0, 0.0, 0.0}), {}},
      {{0.8}, {{1.0, 1.0, 1.0}}, {}},
      {{0.5}, {{0.8, 0.5, 1.0}}, {}},
      {{0.9, 0.2}, {{0.7, 0.3, 0.5}, {1.0, 0.1, 0.25}}, {}},
      {{0.0, 1.0}, {{1.0, 0.0, 1.0}, {0.0, 1.0, 0.0}}, {}},
      {{0.35, 0.6, 0.15}, {{0.9, 0.4, 0.2}, {0.6, 0.6, 0.6}, {0.05, 0.95, 0.5}}, {}},
      {{0.7}, {{0.2, 0.9, 0.4}}, {0.5, 0.25, 0.25}},
      {{0.7}, {{0.2, 0.9, 0.4}}, {1.0, 0.0, 0.0}},
      {{0.7}, {{0.2, 0.9, 0.4}}, {0.0, 0.0, 1.0}},
      {{0.1, 0.2, 0.3, 0.4}, {{0.1, 0.2, 0.3}, {0.4, 0.5, 0.6}, {0.7, 0.8, 0.9}, {1.0, 0.0, 0.5}}, {0.2, 0.3, 0.5}},
      {{0.55, 0.45}, {{0.33, 0.66, 0.99}, {0.5, 0.5, 0.5}}, {0.6, 0.2, 0.2}},
      {{1.0, 0.0, 1.0, 0.0, 1.0}, {{1.0, 1.0, 1.0}, {0.0, 0.0, 0.0}, {1.0, 0.5, 0.0}, {0.25, 0.75, 0.5}, {0.9, 0.1, 0.3}},
       {}},
      {{0.12}, {{0.98, 0.02, 0.5}}, {0.1, 0.8, 0.1}},
      {{0.25, 0.5, 0.75}, {{0.0, 0.0, 1.0}, {0.0, 1.0, 0.0}, {1.0, 0.0, 0.0}}, {0.25, 0.25, 0.5}},
      {{0.99, 0.98, 0.97, 0.96, 0.95, 0.94}, std::vector<HopStats>(6, {0.5, 0.5, 0.5}), {}},
      {{0.3, 0.3}, {{0.6, 0.6, 0.6}, {0.6, 0.6, 0.6}}, {0.4, 0.4, 0.2}},
      {{0.01, 0.02, 0.03}, {{0.04, 0.05, 0.06}, {0.07, 0.08, 0.09}, {0.1, 0.11, 0.12}}, {0.7, 0.2, 0.1}},
  };
  for (std::size_t i = 0; i < cases.size(); ++i) {
    const auto& c = cases[i];
    double semantic = 0.0;
    double statistical = 0.0;
    for (const double s : c.semantic) semantic += s;
    for (const auto& h : c.hops) {
      statistical += c.weights.coverage * h.coverage + c.weights.uniqueness * h.uniqueness +
                     c.weights.size_ratio * h.size_ratio;
    }
    const double expected = (semantic + statistical) / (2.0 * static_cast<double>(c.semantic.size()));
    const auto scored = path_score(chain_path(c.semantic.size() + 1), c.semantic, c.hops, c.weights);
    check.expect(std::abs(scored.score - expected) <= 1e-9, "case " + std::to_string(i));
  }
  check.expect(std::abs(path_score(chain_path(2), cases[0].semantic, cases[0].hops, {}).score - 1.0) <= 1e-9,
               "all-ones bound");
  check.expect(path_score(chain_path(2), cases[1].semantic, cases[1].hops, {}).score == 0.0, "all-zeros bound");

  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::size_t randomized = 0;
  for (int trial = 0; trial < 150; ++trial) {
    const auto corpus = testing::random_corpus(rng);
    TableScoreSet scores;
    for (const auto& name : corpus.candidate_tables()) scores.scores[name] = unit(rng);
    double w1 = unit(rng);
    double w2 = unit(rng) * (1.0 - w1);
    const Weights weights{w1, w2, 1.0 - w1 - w2};
    for (const auto& path : testing::enumerate_paths(corpus, 7)) {
      const auto scored = path_score(corpus, path, scores, weights);
      check.expect(scored.score >= 0.0 && scored.score <= 1.0, "score out of [0,1]");
      ++randomized;
    }
  }
  check.detail = std::to_string(cases.size()) + " hand-built, " + std::to_string(randomized) + " randomized paths";
}

void heap_oracle(Check& check) {
  std::mt19937_64 rng(4242);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::size_t comparisons = 0;
  for (int trial = 0; trial < 300; ++trial) {
    testing::RandomCorpusOptions options;
    options.extra_edges = trial % 4;
    const auto corpus = testing::random_corpus(rng, options);
    TableScoreSet scores;
    // Coarse scores make ties, which exercise the tie-breakers.
    for (const auto& name : corpus.candidate_tables()) scores.scores[name] = std::round(unit(rng) * 4.0) / 4.0;
    for (const std::size_t budget : {1ul, 2ul, 5ul, 10ul, 50ul}) {
      for (const std::size_t max_length : {2ul, 4ul, 7ul}) {
        const ExploreOptions explore_options{max_length, budget, {}};
        const auto actual = explore(corpus, scores, explore_options);
        const auto expected = testing::exhaustive_top_paths(corpus, scores, explore_options);
        bool same = actual.size() == expected.size();
        for (std::size_t i = 0; same && i < actual.size(); ++i) {
          same = actual[i].path == expected[i].path && actual[i].score == expected[i].score;
        }
        check.expect(same, "trial " + std::to_string(trial) + " budget " + std::to_string(budget));
        ++comparisons;
      }
    }
  }
  check.detail = std::to_string(comparisons) + " graph/budget combinations";
}

void statistics_oracles(Check& check) {
  std::mt19937_64 rng(31337);
  std::uniform_int_distribution<std::size_t> size(2, 1000);
  std::bernoulli_distribution coin(0.5);
  std::size_t arrays = 0;
  double worst = 0.0;
  for (int trial = 0; trial < 600; ++trial) {
    const auto n = size(rng);
    const auto feature = testing::random_numeric_column(rng, "x", n, coin(rng), 0.1);
    const bool classification = coin(rng);
    const auto target = testing::random_numeric_column(rng, "y", n, classification || coin(rng), 0.05);
    const auto task = classification ? Task::Classification : Task::Regression;
    const double mi_error =
        std::abs(mutual_information(feature, target, task) - testing::brute_mutual_information(feature, target, task));
    const double r_error = std::abs(pearson_abs(feature, target) - testing::brute_pearson_abs(feature, target));
    worst = std::max({worst, mi_error, r_error});
    check.expect(mi_error <= 1e-9, "MI trial " + std::to_string(trial));
    check.expect(r_error <= 1e-9, "Pearson trial " + std::to_string(trial));
    ++arrays;
  }
  Column x{"x", ColumnType::Integer, {}};
  for (int i = 0; i < 1000; ++i) x.values.emplace_back(static_cast<std::int64_t>(i % 2));
  const double ln2 = mutual_information(x, x, Task::Classification);
  check.expect(std::abs(ln2 - std::log(2.0)) <= 1e-9, "balanced binary pair");
  check.expect(format_metric(ln2) == "0.6931", "ln 2 rendering");
  std::ostringstream detail;
  detail << arrays << " arrays, max error " << worst << ", MI(x,x) = " << format_metric(ln2);
  check.detail = detail.str();
}

void borda(Check& check) {
  const std::vector<RankedFeature> by_mi{{"a", 0.9}, {"b", 0.5}, {"c", 0.1}};
  const std::vector<RankedFeature> by_pearson{{"b", 0.8}, {"c", 0.4}, {"a", 0.2}};
  check.expect(borda_merge({by_mi, by_pearson}) == std::vector<std::string>{"b", "a", "c"}, "worked example");
  check.expect(borda_merge({by_pearson, by_mi}) == std::vector<std::string>{"b", "a", "c"}, "list order");

  const std::vector<RankedFeature> tied{{"x", 0.5}, {"y", 0.5}, {"z", 0.5}, {"w", 0.1}};
  const std::vector<RankedFeature> other{{"w", 0.9}, {"z", 0.6}, {"x", 0.3}, {"y", 0.2}};
  auto permuted = tied;
  const auto reference = borda_merge({tied, other});
  std::sort(permuted.begin(), permuted.begin() + 3, [](const auto& l, const auto& r) { return l.name < r.name; });
  do {
    check.expect(borda_merge({permuted, other}) == reference, "tie permutation");
  } while (std::next_permutation(permuted.begin(), permuted.begin() + 3,
                                 [](const auto& l, const auto& r) { return l.name < r.name; }));
  check.expect(borda_merge({tied, other}) == borda_merge({tied, other}), "repeatability");
  check.detail = "merged order b, a, c";
}

void speedup_trend(Check& check) {
  const auto started = Clock::now();
  SyntheticOptions options;
  options.tables = 6;
  options.rows = 100000;
  options.selectivity = 0.01;
  options.seed = 1;
  const auto corpus = make_synthetic_corpus(options);
  const auto report = bench_join_strategies(corpus, chain_prefix_paths(corpus), 5);
  const auto& medians = report.median_speedup_by_length;
  std::ostringstream detail;
  detail.precision(3);
  double previous = 0.0;
  for (const auto& [length, speedup] : medians) {
    detail << "l=" << length << ": " << speedup << "x  ";
    if (length == 2) check.expect(speedup >= 0.9 && speedup <= 1.1, "l=2 outside 1.0 +- 10%");
    if (length >= 4) check.expect(speedup >= 1.2, "l=" + std::to_string(length) + " below 1.2x");
    check.expect(speedup >= previous, "median speedup decreased at l=" + std::to_string(length));
    previous = speedup;
  }
  const double seconds = elapsed_s(started);
  check.expect(medians.size() == 5, "expected lengths 2..6");
  check.expect(seconds < 300.0, "runtime");
  detail << "(" << static_cast<int>(seconds) << " s)";
  check.detail = detail.str();
}

RunConfig pipeline_config(const std::filesystem::path& dataset, const std::string& label) {
  RunConfig config;
  config.dataset_dir = dataset;
  config.out_dir = testing::scratch_dir(label);
  config.max_len = 4;
  config.paths = 6;
  config.features = 5;
  config.prefilter = 30;
  return config;
}

std::filesystem::path planted_dataset() {
  SyntheticOptions options;
  options.tables = 4;
  options.rows = 600;
  options.selectivity = 0.9;
  options.seed = 3;
  const auto dir = testing::scratch_dir("acceptance_dataset");
  generate_synthetic(options, dir);
  return dir;
}

void determinism(Check& check, const std::filesystem::path& dataset) {
  const auto first = pipeline_config(dataset, "acceptance_det_a");
  auto second = pipeline_config(dataset, "acceptance_det_b");
  second.threads = 1;
  run_pipeline(first);
  run_pipeline(second);
  for (const auto* name : {artifacts::kAugmented, artifacts::kPaths, artifacts::kSelection}) {
    const auto a = testing::slurp(first.out_dir / name);
    check.expect(!a.empty() && a == testing::slurp(second.out_dir / name), std::string(name) + " differs");
  }
  check.detail = "augmented.csv, paths.json, selection.json identical";
}

void llm_budget(Check& check, const std::filesystem::path& dataset) {
  const auto report = run_pipeline(pipeline_config(dataset, "acceptance_calls"));
  std::ostringstream detail;
  for (const auto& [kind, count] : report.llm_calls) {
    detail << kind << "=" << count << " ";
    check.expect(count == 1, kind + " made " + std::to_string(count) + " calls");
  }
  check.expect(report.llm_calls.size() == 3, "missing call counters");
  check.detail = detail.str();
}

void ablation(Check& check, const std::filesystem::path& dataset) {
  auto none = pipeline_config(dataset, "acceptance_none");
  none.method = SelectionMethod::None;
  run_pipeline(none);
  const auto consolidated = testing::slurp(none.out_dir / artifacts::kConsolidated);
  check.expect(!consolidated.empty() && testing::slurp(none.out_dir / artifacts::kAugmented) == consolidated,
               "none differs from consolidated");

  auto stats_only = pipeline_config(dataset, "acceptance_stats");
  stats_only.method = SelectionMethod::StatsOnly;
  const auto stats_report = run_pipeline(stats_only);
  check.expect(stats_report.llm_calls.at("feature_ranking") == 0, "stats_only called the LLM");

  const auto script = testing::scratch_dir("acceptance_script") / "echo.json";
  {
    std::ofstream out(script);
    out << nlohmann::json{{"feature_ranking", std::string(llm::StubProvider::kEcho)}}.dump();
  }
  auto echo = pipeline_config(dataset, "acceptance_echo");
  echo.stub_script = script;
  const auto echo_report = run_pipeline(echo);
  check.expect(echo_report.llm_calls.at("feature_ranking") == 1, "hybrid skipped the LLM");
  check.expect(testing::slurp(echo.out_dir / artifacts::kAugmented) ==
                   testing::slurp(stats_only.out_dir / artifacts::kAugmented),
               "echo hybrid differs from stats_only");
  const auto echo_selection = nlohmann::json::parse(testing::slurp(echo.out_dir / artifacts::kSelection));
  const auto stats_selection = nlohmann::json::parse(testing::slurp(stats_only.out_dir / artifacts::kSelection));
  check.expect(echo_selection.at("selected") == stats_selection.at("selected"), "selected features differ");
  check.detail = "none, stats_only and echo-hybrid variants";
}

}  // namespace
}  // namespace relaug

int main() {
  using namespace relaug;
  struct Criterion {
    std::string name;
    Check check;
  };
  std::vector<Criterion> results;
  const auto record = [&](const std::string& name, const std::function<void(Check&)>& body) {
    Criterion criterion{name, {}};
    try {
      body(criterion.check);
    } catch (const std::exception& error) {
      criterion.check.expect(false, std::string("exception: ") + error.what());
    }
    results.push_back(std::move(criterion));
  };

  EquivalenceRun run;
  Check invariants;
  record("executor equivalence", [&](Check& check) { executor_equivalence(check, run, invariants); });
  results.push_back({"augmentation invariants", invariants});
  record("hybrid score correctness", hybrid_score);
  record("top-k heap oracle", heap_oracle);
  record("statistics oracles", statistics_oracles);
  record("borda determinism", borda);
  record("speedup trend", speedup_trend);
  const auto dataset = planted_dataset();
  record("determinism", [&](Check& check) { determinism(check, dataset); });
  record("llm call budget", [&](Check& check) { llm_budget(check, dataset); });
  record("ablation plumbing", [&](Check& check) { ablation(check, dataset); });

  bool all = true;
  for (const auto& [name, check] : results) {
    all &= check.ok();
    std::cout << (check.ok() ? "PASS" : "FAIL") << "  " << name << "  [" << check.detail << "]";
    if (!check.ok()) std::cout << "  " << check.summary();
    std::cout << "\n";
  }
  return all ? 0 : 1;
}
