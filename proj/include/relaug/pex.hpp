#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "relaug/corpus.hpp"
#include "relaug/fdg.hpp"
#include "relaug/llm.hpp"

namespace relaug {

/// Forward follows an edge FK -> PK; reverse walks it PK -> FK.
enum class HopDirection { Forward, Reverse };

std::string_view to_string(HopDirection direction);

/// One step of a join path: rows of the anchor table look up rows of the lookup table by key.
struct Hop {
  std::string anchor_table;
  std::string anchor_column;
  std::string lookup_table;
  std::string lookup_column;
  HopDirection direction = HopDirection::Forward;

  friend bool operator==(const Hop&, const Hop&) = default;
};

/// Simple chain rooted at the base table; tables[i] and tables[i+1] are linked by hops[i].
struct JoinPath {
  std::vector<std::string> tables;
  std::vector<Hop> hops;

  std::size_t length() const { return tables.size(); }
  friend bool operator==(const JoinPath&, const JoinPath&) = default;
};

struct HopStats {
  double coverage = 0.0;
  double uniqueness = 0.0;
  double size_ratio = 0.0;

  friend bool operator==(const HopStats&, const HopStats&) = default;
};

struct ScoredPath {
  JoinPath path;
  double s_sem = 0.0;
  double s_stat = 0.0;
  double score = 0.0;
  std::vector<HopStats> per_hop;

  friend bool operator==(const ScoredPath&, const ScoredPath&) = default;
};

/// Weights of coverage, uniqueness and size ratio in the statistical score. Must be >= 0 and sum to 1.
struct Weights {
  double coverage = 1.0 / 3.0;
  double uniqueness = 1.0 / 3.0;
  double size_ratio = 1.0 / 3.0;

  /// Throws std::invalid_argument unless each weight is >= 0 and the sum is 1 within 1e-9.
  void validate() const;
};

/// Semantic relevance per candidate table, normalized to [0,1].
struct TableScoreSet {
  std::map<std::string, double, std::less<>> scores;
  std::set<std::string, std::less<>> prefiltered_out;
  bool fallback = false;  ///< the LLM answer was unusable; retained tables got 0.5

  /// 0 for tables without a score.
  double score(std::string_view table) const;
};

/// Renders the table-scoring prompt with `candidates` (every candidate table when nullopt) in manifest order.
llm::ChatPrompt build_table_scoring_prompt(const Corpus& corpus, const DescriptorSet& descriptors,
                                           const std::optional<std::vector<std::string>>& candidates = std::nullopt);

/// Candidates kept for the scoring prompt. All of them when the prompt fits `token_budget`; otherwise the
/// largest cosine-ranked prefix that fits. Returned in manifest order.
std::vector<std::string> prefilter_tables(const Corpus& corpus, const DescriptorSet& descriptors,
                                          llm::Gateway& gateway, std::size_t token_budget);

struct TableScoringOptions {
  std::size_t token_budget = 100000;
  std::string model = std::string(llm::kDefaultModel);
};

/// One completion call. Scores are clamped to [0,100] then divided by 100; missing tables score 0.
TableScoreSet score_tables(const Corpus& corpus, const DescriptorSet& descriptors, llm::Gateway& gateway,
                           const TableScoringOptions& options = {}, std::vector<std::string>* warnings = nullptr);

HopStats hop_stats(const Corpus& corpus, const Hop& hop);

/// Hybrid score from per-table semantic scores (tables beyond the base) and per-hop statistics.
ScoredPath path_score(JoinPath path, std::span<const double> table_scores, std::span<const HopStats> hops,
                      const Weights& weights);
ScoredPath path_score(const Corpus& corpus, JoinPath path, const TableScoreSet& table_scores, const Weights& weights);

/// Final ranking order: score desc, shorter first, then (table, hop) sequence ascending position by position.
bool ranks_before(const ScoredPath& lhs, const ScoredPath& rhs);

struct ExploreOptions {
  std::size_t max_length = 7;
  std::size_t budget = 10;
  Weights weights;
};

/// BFS over the undirected view of the join graph from the base table. Keeps the best `budget` paths of
/// length 2..max_length in a bounded heap and returns them in ranking order.
std::vector<ScoredPath> explore(const Corpus& corpus, const TableScoreSet& table_scores, const ExploreOptions& options,
                                std::vector<std::string>* warnings = nullptr);

/// Every hop leaving `table` in either direction, sorted by (neighbor, anchor column, lookup column, direction).
std::vector<Hop> adjacent_hops(const Corpus& corpus, std::string_view table);

nlohmann::json to_json(const ScoredPath& path);
nlohmann::json paths_to_json(const std::vector<ScoredPath>& paths);
/// Parses paths.json and checks every hop against the corpus join graph.
std::vector<ScoredPath> paths_from_json(const Corpus& corpus, const nlohmann::json& document);

nlohmann::json to_json(const TableScoreSet& scores);

}  // namespace relaug
