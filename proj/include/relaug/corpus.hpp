#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "relaug/table.hpp"

namespace relaug {

enum class Task { Classification, Regression };

std::string_view to_string(Task task);
Task task_from_string(std::string_view name);

/// `from_table.from_column` is a foreign key referencing `to_table.to_column`.
struct JoinEdge {
  std::string from_table;
  std::string from_column;
  std::string to_table;
  std::string to_column;

  friend bool operator==(const JoinEdge&, const JoinEdge&) = default;
};

struct ColumnStats {
  std::size_t row_count = 0;
  std::size_t null_count = 0;
  std::size_t distinct_count = 0;  ///< distinct non-null values, compared as join keys
  double null_rate = 0.0;

  friend bool operator==(const ColumnStats&, const ColumnStats&) = default;
};

struct CorpusSpec {
  std::vector<Table> tables;
  std::vector<JoinEdge> edges;
  std::string base_table;
  std::string target_column;
  Task task = Task::Classification;
  std::optional<std::string> dataset_description;
  std::optional<std::string> task_description;
};

/// Immutable set of tables plus the PK-FK join graph. Safe for concurrent reads, including column_stats.
class Corpus {
 public:
  /// Validates `spec`; throws DatasetError on unknown tables/columns, duplicate table names, self-loop
  /// edges or a classification target with fewer than two classes.
  explicit Corpus(CorpusSpec spec);

  Corpus(Corpus&&) noexcept = default;
  Corpus& operator=(Corpus&&) noexcept = default;

  /// Tables in manifest order.
  const std::vector<Table>& tables() const { return spec_.tables; }
  const std::vector<JoinEdge>& edges() const { return spec_.edges; }
  const Table& table(std::string_view name) const;
  bool has_table(std::string_view name) const;

  const Table& base() const { return table(spec_.base_table); }
  const std::string& base_table() const { return spec_.base_table; }
  const std::string& target_column() const { return spec_.target_column; }
  Task task() const { return spec_.task; }
  const std::optional<std::string>& dataset_description() const { return spec_.dataset_description; }
  const std::optional<std::string>& task_description() const { return spec_.task_description; }

  /// Non-base tables, manifest order.
  std::vector<std::string> candidate_tables() const;

  /// Memoized per (table, column). Throws DatasetError for unknown table/column.
  ColumnStats column_stats(std::string_view table, std::string_view column) const;

 private:
  struct StatsCache {
    std::mutex mutex;
    std::map<std::pair<std::string, std::string>, ColumnStats, std::less<>> entries;
  };

  CorpusSpec spec_;
  std::map<std::string, std::size_t, std::less<>> index_;
  std::unique_ptr<StatsCache> cache_ = std::make_unique<StatsCache>();
};

/// Computes the statistics directly, without the cache.
ColumnStats compute_column_stats(const Column& column);

/// Loads `<dir>/graph.json` and one `<table>.csv` per listed table.
Corpus load_dataset(const std::filesystem::path& directory);

/// Writes a corpus back out as a dataset directory (manifest plus one CSV per table).
void write_dataset(const Corpus& corpus, const std::filesystem::path& directory);

struct GraphDiagnostic {
  enum class Severity { Violation, Warning };
  Severity severity = Severity::Violation;
  std::string message;
};

/// Violations for missing columns or mismatched key types; warnings for key pairs with no common value.
std::vector<GraphDiagnostic> validate_graph(const Corpus& corpus);

}  // namespace relaug
