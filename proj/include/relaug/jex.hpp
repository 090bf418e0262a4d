#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "relaug/corpus.hpp"
#include "relaug/pex.hpp"
#include "relaug/table.hpp"

namespace relaug {

/// Base columns verbatim (first `base_column_count` columns), then `<table>.<column>` features reached
/// through `source_path`. Row-aligned with the base table.
struct AugmentedTable {
  Table table;
  std::size_t base_column_count = 0;
  JoinPath source_path;
};

/// Row counts of the intermediate relations an executor built, one entry per hop.
struct JoinTrace {
  std::vector<std::size_t> intermediate_rows;
};

enum class Executor { Yannakakis, Binary };

std::string_view to_string(Executor executor);

/// Keeps the first row (by row order) for every distinct non-null key; null-key rows are dropped.
Table dedup_on_key(const Table& table, std::string_view key);

/// Sequential left outer joins R_i = R_{i-1} LEFT JOIN dedup(T_i). Each intermediate is materialized.
AugmentedTable binary_left_join_path(const Corpus& corpus, const JoinPath& path, JoinTrace* trace = nullptr);

/// Row ids that survive the semi-join reduction of each suffix table (index 0 is T_1), in row order.
/// Level i keeps, per key, the first row of T_i whose lookup key is an anchor value of a surviving row of
/// level i-1 (of the base table for level 0).
std::vector<std::vector<std::size_t>> reduce_suffix(const Corpus& corpus, const JoinPath& path);

/// Semi-join reduces the suffix T_1..T_{l-1} outward from the base, joins the reduced suffix bottom-up
/// into S' (unique on T_1's join key), then left-joins the base with S'. Length-2 paths take the binary plan.
AugmentedTable suffix_yannakakis(const Corpus& corpus, const JoinPath& path, JoinTrace* trace = nullptr);

AugmentedTable materialize(const Corpus& corpus, const JoinPath& path, Executor executor, JoinTrace* trace = nullptr);

/// Materializes every path, up to `threads` at a time; output order follows `paths`.
std::vector<AugmentedTable> materialize_all(const Corpus& corpus, const std::vector<JoinPath>& paths, Executor executor,
                                            std::size_t threads);

/// Throws InvariantViolation unless the row count equals |base|, the base columns are identical and the
/// target multiset is unchanged.
void check_augmentation_invariants(const Corpus& corpus, const AugmentedTable& augmented);

struct FeatureProvenance {
  std::size_t path_rank = 0;  ///< 1-based rank of the winning path
  double null_ratio = 0.0;
};

struct ConsolidatedTable {
  Table table;
  std::size_t base_column_count = 0;
  std::map<std::string, FeatureProvenance> provenance;

  /// Names of the foreign feature columns, table order.
  std::vector<std::string> foreign_features() const;
};

/// Unions the foreign features of all paths; a feature reached by several paths keeps the column with the
/// lowest null ratio, then the higher path score, then the better path rank. `augmented[i]` belongs to
/// `paths[i]`, which is in rank order.
ConsolidatedTable consolidate(const std::vector<AugmentedTable>& augmented, const std::vector<ScoredPath>& paths);

/// Provenance plus the column types needed to reload consolidated.csv exactly.
nlohmann::json consolidation_to_json(const ConsolidatedTable& consolidated);
ConsolidatedTable consolidated_from_files(const std::string& base_table, const std::string& csv_file,
                                          const nlohmann::json& provenance);

struct BenchEntry {
  std::size_t path_rank = 0;
  std::size_t length = 0;
  double binary_ms = 0.0;
  double yannakakis_ms = 0.0;
  double speedup = 0.0;
};

struct BenchReport {
  std::vector<BenchEntry> entries;
  std::map<std::size_t, double> median_speedup_by_length;
};

/// Times both executors on every path (median of `repetitions` interleaved runs each) after checking that
/// they produce identical tables. Throws InvariantViolation on any difference.
BenchReport bench_join_strategies(const Corpus& corpus, const std::vector<JoinPath>& paths, std::size_t repetitions);

nlohmann::json to_json(const BenchReport& report);

double median(std::vector<double> values);

}  // namespace relaug
