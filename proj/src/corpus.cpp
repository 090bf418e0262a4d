#include "relaug/corpus.hpp"

#include <unordered_set>

#include "json.hpp"
#include "relaug/csv.hpp"

namespace relaug {

using nlohmann::json;

std::string_view to_string(Task task) { return task == Task::Classification ? "classification" : "regression"; }

Task task_from_string(std::string_view name) {
  if (name == "classification") return Task::Classification;
  if (name == "regression") return Task::Regression;
  throw DatasetError("unknown task '" + std::string(name) + "'");
}

ColumnStats compute_column_stats(const Column& column) {
  ColumnStats stats;
  stats.row_count = column.values.size();
  std::unordered_set<JoinKey, JoinKeyHash> distinct;
  for (const auto& value : column.values) {
    if (const auto key = join_key(value)) {
      distinct.insert(*key);
    } else {
      ++stats.null_count;
    }
  }
  stats.distinct_count = distinct.size();
  stats.null_rate = static_cast<double>(stats.null_count) / static_cast<double>(std::max<std::size_t>(stats.row_count, 1));
  return stats;
}

Corpus::Corpus(CorpusSpec spec) : spec_(std::move(spec)) {
  for (std::size_t i = 0; i < spec_.tables.size(); ++i) {
    if (!index_.emplace(spec_.tables[i].name(), i).second) {
      throw DatasetError("duplicate table name '" + spec_.tables[i].name() + "'");
    }
  }
  if (!has_table(spec_.base_table)) {
    throw DatasetError("unknown base table '" + spec_.base_table + "'");
  }
  const auto& base_table = base();
  if (!base_table.find_column(spec_.target_column)) {
    throw DatasetError("unknown column '" + spec_.target_column + "' (target) in base table '" + spec_.base_table + "'");
  }
  for (const auto& edge : spec_.edges) {
    if (edge.from_table == edge.to_table) {
      throw DatasetError("self-loop edge on table '" + edge.from_table + "'");
    }
    for (const auto& [table_name, column_name] :
         {std::pair{&edge.from_table, &edge.from_column}, std::pair{&edge.to_table, &edge.to_column}}) {
      if (!has_table(*table_name)) {
        throw DatasetError("edge references unknown table '" + *table_name + "'");
      }
      if (!table(*table_name).find_column(*column_name)) {
        throw DatasetError("edge references unknown column '" + *column_name + "' in table '" + *table_name + "'");
      }
    }
  }
  if (spec_.task == Task::Classification) {
    const auto stats = compute_column_stats(base_table.column(spec_.target_column));
    if (stats.distinct_count < 2) {
      throw DatasetError("classification target '" + spec_.target_column + "' has fewer than 2 classes");
    }
  }
}

const Table& Corpus::table(std::string_view name) const {
  const auto it = index_.find(name);
  if (it == index_.end()) {
    throw DatasetError("unknown table '" + std::string(name) + "'");
  }
  return spec_.tables[it->second];
}

bool Corpus::has_table(std::string_view name) const { return index_.find(name) != index_.end(); }

std::vector<std::string> Corpus::candidate_tables() const {
  std::vector<std::string> names;
  for (const auto& table : spec_.tables) {
    if (table.name() != spec_.base_table) {
      names.push_back(table.name());
    }
  }
  return names;
}

ColumnStats Corpus::column_stats(std::string_view table_name, std::string_view column_name) const {
  const auto& column = table(table_name).column(column_name);
  {
    std::lock_guard lock(cache_->mutex);
    const auto it = cache_->entries.find(std::pair{std::string(table_name), std::string(column_name)});
    if (it != cache_->entries.end()) {
      return it->second;
    }
  }
  // Computed outside the lock; concurrent first requests produce identical values.
  const auto stats = compute_column_stats(column);
  std::lock_guard lock(cache_->mutex);
  cache_->entries.emplace(std::pair{std::string(table_name), std::string(column_name)}, stats);
  return stats;
}

Corpus load_dataset(const std::filesystem::path& directory) {
  const auto manifest_path = directory / "graph.json";
  if (!std::filesystem::exists(manifest_path)) {
    throw DatasetError("missing manifest '" + manifest_path.string() + "'");
  }
  json manifest;
  try {
    manifest = json::parse(csv::read_file(manifest_path));
  } catch (const json::exception& error) {
    throw DatasetError("malformed manifest: " + std::string(error.what()));
  }

  CorpusSpec spec;
  try {
    spec.base_table = manifest.at("base_table").get<std::string>();
    spec.target_column = manifest.at("target").get<std::string>();
    spec.task = task_from_string(manifest.at("task").get<std::string>());
    if (manifest.contains("dataset_description")) {
      spec.dataset_description = manifest["dataset_description"].get<std::string>();
    }
    if (manifest.contains("task_description")) {
      spec.task_description = manifest["task_description"].get<std::string>();
    }
    std::unordered_set<std::string> seen;
    for (const auto& entry : manifest.at("tables")) {
      auto name = entry.get<std::string>();
      if (!seen.insert(name).second) {
        throw DatasetError("duplicate table name '" + name + "'");
      }
      const auto file = directory / (name + ".csv");
      spec.tables.push_back(csv::read_table(file, name));
    }
    for (const auto& entry : manifest.at("edges")) {
      spec.edges.push_back(JoinEdge{entry.at("from_table").get<std::string>(), entry.at("from_column").get<std::string>(),
                                    entry.at("to_table").get<std::string>(), entry.at("to_column").get<std::string>()});
    }
  } catch (const json::exception& error) {
    throw DatasetError("malformed manifest: " + std::string(error.what()));
  }
  return Corpus(std::move(spec));
}

void write_dataset(const Corpus& corpus, const std::filesystem::path& directory) {
  std::filesystem::create_directories(directory);
  json manifest;
  manifest["base_table"] = corpus.base_table();
  manifest["target"] = corpus.target_column();
  manifest["task"] = std::string(to_string(corpus.task()));
  manifest["tables"] = json::array();
  for (const auto& table : corpus.tables()) {
    manifest["tables"].push_back(table.name());
    csv::write_table(table, directory / (table.name() + ".csv"));
  }
  manifest["edges"] = json::array();
  for (const auto& edge : corpus.edges()) {
    manifest["edges"].push_back(
        {{"from_table", edge.from_table}, {"from_column", edge.from_column}, {"to_table", edge.to_table}, {"to_column", edge.to_column}});
  }
  if (corpus.dataset_description()) manifest["dataset_description"] = *corpus.dataset_description();
  if (corpus.task_description()) manifest["task_description"] = *corpus.task_description();
  csv::write_file_atomic(directory / "graph.json", manifest.dump(2) + "\n");
}

std::vector<GraphDiagnostic> validate_graph(const Corpus& corpus) {
  std::vector<GraphDiagnostic> diagnostics;
  for (const auto& edge : corpus.edges()) {
    const auto label = edge.from_table + "." + edge.from_column + " -> " + edge.to_table + "." + edge.to_column;
    if (!corpus.has_table(edge.from_table) || !corpus.has_table(edge.to_table)) {
      diagnostics.push_back({GraphDiagnostic::Severity::Violation, label + ": unknown table"});
      continue;
    }
    const auto& from_table = corpus.table(edge.from_table);
    const auto& to_table = corpus.table(edge.to_table);
    const auto from_index = from_table.find_column(edge.from_column);
    const auto to_index = to_table.find_column(edge.to_column);
    if (!from_index || !to_index) {
      diagnostics.push_back({GraphDiagnostic::Severity::Violation, label + ": unknown column"});
      continue;
    }
    const auto& from = from_table.columns()[*from_index];
    const auto& to = to_table.columns()[*to_index];
    if (from.type != to.type) {
      diagnostics.push_back({GraphDiagnostic::Severity::Violation, label + ": type mismatch (" +
                                                                       std::string(to_string(from.type)) + " vs " +
                                                                       std::string(to_string(to.type)) + ")"});
      continue;
    }
    std::unordered_set<JoinKey, JoinKeyHash> referenced;
    for (const auto& value : to.values) {
      if (const auto key = join_key(value)) referenced.insert(*key);
    }
    bool overlap = false;
    for (const auto& value : from.values) {
      const auto key = join_key(value);
      if (key && referenced.contains(*key)) {
        overlap = true;
        break;
      }
    }
    if (!overlap) {
      diagnostics.push_back({GraphDiagnostic::Severity::Warning, label + ": join keys share no value"});
    }
  }
  return diagnostics;
}

}  // namespace relaug
