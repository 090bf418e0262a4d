#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "relaug/corpus.hpp"
#include "relaug/fdg.hpp"
#include "relaug/jex.hpp"
#include "relaug/llm.hpp"

namespace relaug {

enum class SelectionMethod { Hybrid, StatsOnly, LlmOnly, None };

std::string_view to_string(SelectionMethod method);
/// Accepts both `stats-only` and `stats_only` spellings.
SelectionMethod selection_method_from_string(std::string_view name);

struct FeatureStats {
  std::string feature;
  double mutual_info = 0.0;  ///< nats
  double pearson_abs = 0.0;
  std::size_t valid_rows = 0;  ///< rows where feature and target are both non-null
};

/// Discrete plug-in mutual information in nats over rows where both columns are non-null.
///
/// Numeric columns with at most 10 distinct values use one bin per value; otherwise 10 quantile bins,
/// bin(v) = floor(10 * #{values < v} / n). Text and boolean columns are categorical. A classification
/// target is categorical; a regression target is binned like a numeric feature. Fewer than two valid
/// rows gives 0.
double mutual_information(const Column& feature, const Column& target, Task task);

/// |Pearson correlation| over pairwise-complete rows. Integers, floats and booleans are numeric; a text
/// target with exactly two classes is encoded 0/1 in sorted order. Anything else, or zero variance, gives 0.
double pearson_abs(const Column& feature, const Column& target);

FeatureStats feature_stats(const Column& feature, const Column& target, Task task);

struct RankedFeature {
  std::string name;
  double statistic = 0.0;
};

/// Borda count: in a ranking of m features position p (0-based) earns m-1-p points; adjacent entries with an
/// equal statistic share the mean of their points. Ordered by total points desc, then name asc.
/// Throws std::invalid_argument if the rankings do not cover the same features.
std::vector<std::string> borda_merge(const std::vector<std::vector<RankedFeature>>& rankings);

/// Features sorted by `statistic` desc, then by name.
std::vector<RankedFeature> rank_by(const std::vector<FeatureStats>& stats, double FeatureStats::*statistic);

struct FsPromptContext {
  Task task = Task::Classification;
  std::string target;
  std::string task_description;
  std::vector<std::string> base_features;  ///< listed as context, never selectable
  bool include_statistics = true;          ///< false renders the names-and-descriptions-only variant
};

/// `descriptions[i]` belongs to `features[i]`; empty means absent.
llm::ChatPrompt build_fs_prompt(std::span<const FeatureStats> features, const std::vector<std::string>& descriptions,
                                const FsPromptContext& context);

/// Fixed 4-decimal rendering (round half to even on the exact binary value).
std::string format_metric(double value);

struct FeatureRanking {
  std::vector<std::string> statistical_order;
  std::vector<std::string> llm_order;
  std::vector<std::string> selected;
  SelectionMethod method = SelectionMethod::Hybrid;
};

struct SelectionOptions {
  std::size_t features = 10;    ///< kappa
  std::size_t prefilter = 100;  ///< K
  SelectionMethod method = SelectionMethod::Hybrid;
  std::size_t token_budget = 100000;
  std::string model = std::string(llm::kDefaultModel);
};

struct SelectionResult {
  FeatureRanking ranking;
  std::vector<FeatureStats> stats;  ///< every candidate, consolidated column order
  Table table;                      ///< base columns then the selected features
};

/// Ranks the consolidated table's foreign features and keeps the top `features`. Hybrid and LLM-only make
/// exactly one completion call (none when there are no candidates).
SelectionResult select_features(const ConsolidatedTable& consolidated, const Corpus& corpus,
                                const DescriptorSet& descriptors, llm::Gateway& gateway,
                                const SelectionOptions& options, std::vector<std::string>* warnings = nullptr);

/// Applies the LLM ranking repair rules: unknown and repeated names are dropped, missing candidates are
/// appended in `statistical_order`.
std::vector<std::string> repair_ranking(const std::vector<std::string>& answer,
                                        const std::vector<std::string>& candidates);

/// Description of a qualified `<table>.<column>` feature, empty when absent.
std::string feature_description(const Corpus& corpus, const DescriptorSet& descriptors, std::string_view feature);

nlohmann::json selection_to_json(const SelectionResult& result, const ConsolidatedTable& consolidated);

}  // namespace relaug
