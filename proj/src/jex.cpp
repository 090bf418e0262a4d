#include "relaug/jex.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <thread>
#include <unordered_map>
#include <unordered_set>

#include "relaug/csv.hpp"

namespace relaug {

using nlohmann::json;

namespace {

constexpr std::ptrdiff_t kNoMatch = -1;

using KeyIndex = std::unordered_map<JoinKey, std::size_t, JoinKeyHash>;
using KeySet = std::unordered_set<JoinKey, JoinKeyHash>;

std::string qualified(std::string_view table, std::string_view column) {
  std::string out(table);
  out += '.';
  out += column;
  return out;
}

std::size_t column_index(const Table& table, std::string_view column) {
  if (const auto index = table.find_column(column)) return *index;
  throw DatasetError("unknown column '" + std::string(column) + "' in table '" + table.name() + "'");
}

void check_path(const Corpus& corpus, const JoinPath& path) {
  if (path.length() < 2 || path.hops.size() + 1 != path.length() || path.tables.front() != corpus.base_table()) {
    throw std::invalid_argument("join path must start at the base table and have one hop per extra table");
  }
  for (std::size_t i = 0; i < path.hops.size(); ++i) {
    if (path.hops[i].anchor_table != path.tables[i] || path.hops[i].lookup_table != path.tables[i + 1]) {
      throw std::invalid_argument("join path hop " + std::to_string(i) + " does not link consecutive tables");
    }
  }
}

/// Foreign feature names of a path in output order; throws on a collision with a base column or each other.
std::vector<std::string> output_feature_names(const Corpus& corpus, const JoinPath& path) {
  std::unordered_set<std::string> seen;
  for (const auto& column : corpus.base().columns()) seen.insert(column.name);
  std::vector<std::string> names;
  for (std::size_t i = 1; i < path.length(); ++i) {
    const auto& table = corpus.table(path.tables[i]);
    for (const auto& column : table.columns()) {
      if (column.name == path.hops[i - 1].lookup_column) continue;
      auto name = qualified(table.name(), column.name);
      if (!seen.insert(name).second) {
        throw DatasetError("feature column '" + name + "' collides with an existing column");
      }
      names.push_back(std::move(name));
    }
  }
  return names;
}

std::vector<Value> gather(const std::vector<Value>& source, const std::vector<std::ptrdiff_t>& rows) {
  std::vector<Value> out(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r] != kNoMatch) out[r] = source[static_cast<std::size_t>(rows[r])];
  }
  return out;
}

struct ReducedLevel {
  std::vector<std::size_t> rows;  // surviving row ids of T_i, row order
  KeyIndex index;                 // lookup key -> position in rows
};

std::vector<ReducedLevel> reduce_levels(const Corpus& corpus, const JoinPath& path) {
  const auto& base = corpus.base();
  KeySet reachable;
  {
    const auto& anchor = base.columns()[column_index(base, path.hops[0].anchor_column)].values;
    reachable.reserve(anchor.size());
    for (const auto& value : anchor) {
      if (const auto key = join_key(value)) reachable.insert(*key);
    }
  }

  std::vector<ReducedLevel> levels(path.length() - 1);
  for (std::size_t level = 0; level < levels.size(); ++level) {
    const auto& hop = path.hops[level];
    const auto& table = corpus.table(hop.lookup_table);
    const auto& lookup = table.columns()[column_index(table, hop.lookup_column)].values;
    auto& reduced = levels[level];
    for (std::size_t r = 0; r < lookup.size(); ++r) {
      const auto key = join_key(lookup[r]);
      if (!key || !reachable.contains(*key)) continue;
      if (reduced.index.emplace(*key, reduced.rows.size()).second) {
        reduced.rows.push_back(r);
      }
    }
    if (level + 1 < levels.size()) {
      const auto& anchor = table.columns()[column_index(table, path.hops[level + 1].anchor_column)].values;
      reachable.clear();
      for (const auto r : reduced.rows) {
        if (const auto key = join_key(anchor[r])) reachable.insert(*key);
      }
    }
  }
  return levels;
}

}  // namespace

std::string_view to_string(Executor executor) { return executor == Executor::Yannakakis ? "yannakakis" : "binary"; }

Table dedup_on_key(const Table& table, std::string_view key) {
  const auto& keys = table.columns()[column_index(table, key)].values;
  KeySet seen;
  std::vector<std::size_t> kept;
  for (std::size_t r = 0; r < keys.size(); ++r) {
    const auto value = join_key(keys[r]);
    if (value && seen.insert(*value).second) kept.push_back(r);
  }
  std::vector<Column> columns;
  columns.reserve(table.column_count());
  for (const auto& column : table.columns()) {
    Column out{column.name, column.type, {}};
    out.values.reserve(kept.size());
    for (const auto r : kept) out.values.push_back(column.values[r]);
    columns.push_back(std::move(out));
  }
  return Table(table.name(), std::move(columns));
}

AugmentedTable binary_left_join_path(const Corpus& corpus, const JoinPath& path, JoinTrace* trace) {
  check_path(corpus, path);
  output_feature_names(corpus, path);
  const auto& base = corpus.base();
  const auto rows = base.row_count();

  // Working relation: every column joined so far, lookup keys included (later hops may anchor on them).
  std::vector<Column> relation = base.columns();
  std::vector<bool> emitted(relation.size(), true);

  for (std::size_t i = 0; i < path.hops.size(); ++i) {
    const auto& hop = path.hops[i];
    const auto deduped = dedup_on_key(corpus.table(hop.lookup_table), hop.lookup_column);
    const auto& lookup = deduped.columns()[column_index(deduped, hop.lookup_column)].values;
    KeyIndex index;
    index.reserve(lookup.size());
    for (std::size_t r = 0; r < lookup.size(); ++r) {
      index.emplace(*join_key(lookup[r]), r);
    }

    const auto anchor_name = i == 0 ? hop.anchor_column : qualified(hop.anchor_table, hop.anchor_column);
    const auto anchor_it = std::find_if(relation.begin(), relation.end(), [&](const Column& c) { return c.name == anchor_name; });
    if (anchor_it == relation.end()) {
      throw DatasetError("unknown column '" + hop.anchor_column + "' in table '" + hop.anchor_table + "'");
    }
    std::vector<std::ptrdiff_t> match(rows, kNoMatch);
    for (std::size_t r = 0; r < rows; ++r) {
      const auto key = join_key(anchor_it->values[r]);
      if (!key) continue;
      const auto found = index.find(*key);
      if (found != index.end()) match[r] = static_cast<std::ptrdiff_t>(found->second);
    }

    std::vector<Column> next = relation;
    for (const auto& column : deduped.columns()) {
      next.push_back(Column{qualified(deduped.name(), column.name), column.type, gather(column.values, match)});
      emitted.push_back(column.name != hop.lookup_column);
    }
    relation = std::move(next);
    if (trace) trace->intermediate_rows.push_back(rows);
  }

  std::vector<Column> output;
  for (std::size_t c = 0; c < relation.size(); ++c) {
    if (emitted[c]) output.push_back(std::move(relation[c]));
  }
  return AugmentedTable{Table(base.name(), std::move(output)), base.column_count(), path};
}

std::vector<std::vector<std::size_t>> reduce_suffix(const Corpus& corpus, const JoinPath& path) {
  check_path(corpus, path);
  std::vector<std::vector<std::size_t>> rows;
  for (auto& level : reduce_levels(corpus, path)) rows.push_back(std::move(level.rows));
  return rows;
}

AugmentedTable suffix_yannakakis(const Corpus& corpus, const JoinPath& path, JoinTrace* trace) {
  check_path(corpus, path);
  if (path.length() == 2) {
    return binary_left_join_path(corpus, path, trace);
  }
  output_feature_names(corpus, path);
  const auto& base = corpus.base();
  const auto levels = reduce_levels(corpus, path);
  if (trace) {
    for (const auto& level : levels) trace->intermediate_rows.push_back(level.rows.size());
  }

  // Bottom-up over the reduced suffix: suffix[l][p] holds, for row p of level l, the matched row id of every
  // level l' >= l (index l' - l), or kNoMatch. Level 0 is S'.
  const auto depth = levels.size();
  std::vector<std::vector<std::vector<std::ptrdiff_t>>> suffix(depth);
  for (std::size_t l = depth; l-- > 0;) {
    const auto& level = levels[l];
    auto& current = suffix[l];
    current.assign(depth - l, std::vector<std::ptrdiff_t>(level.rows.size(), kNoMatch));
    for (std::size_t p = 0; p < level.rows.size(); ++p) {
      current[0][p] = static_cast<std::ptrdiff_t>(level.rows[p]);
    }
    if (l + 1 == depth) continue;

    const auto& table = corpus.table(path.tables[l + 1]);
    const auto& anchor = table.columns()[column_index(table, path.hops[l + 1].anchor_column)].values;
    const auto& below = suffix[l + 1];
    for (std::size_t p = 0; p < level.rows.size(); ++p) {
      const auto key = join_key(anchor[level.rows[p]]);
      if (!key) continue;
      const auto found = levels[l + 1].index.find(*key);
      if (found == levels[l + 1].index.end()) continue;
      for (std::size_t d = 0; d < below.size(); ++d) {
        current[d + 1][p] = below[d][found->second];
      }
    }
    suffix[l + 1].clear();
  }

  // Left join of the base with S' on T_1's join key.
  const auto rows = base.row_count();
  const auto& base_anchor = base.columns()[column_index(base, path.hops[0].anchor_column)].values;
  std::vector<std::ptrdiff_t> base_match(rows, kNoMatch);
  for (std::size_t r = 0; r < rows; ++r) {
    const auto key = join_key(base_anchor[r]);
    if (!key) continue;
    const auto found = levels[0].index.find(*key);
    if (found != levels[0].index.end()) base_match[r] = static_cast<std::ptrdiff_t>(found->second);
  }

  std::vector<Column> output = base.columns();
  std::vector<std::ptrdiff_t> table_rows(rows);
  for (std::size_t l = 0; l < depth; ++l) {
    for (std::size_t r = 0; r < rows; ++r) {
      table_rows[r] = base_match[r] == kNoMatch ? kNoMatch : suffix[0][l][static_cast<std::size_t>(base_match[r])];
    }
    const auto& table = corpus.table(path.tables[l + 1]);
    for (const auto& column : table.columns()) {
      if (column.name == path.hops[l].lookup_column) continue;
      output.push_back(Column{qualified(table.name(), column.name), column.type, gather(column.values, table_rows)});
    }
  }
  return AugmentedTable{Table(base.name(), std::move(output)), base.column_count(), path};
}

AugmentedTable materialize(const Corpus& corpus, const JoinPath& path, Executor executor, JoinTrace* trace) {
  return executor == Executor::Yannakakis ? suffix_yannakakis(corpus, path, trace)
                                          : binary_left_join_path(corpus, path, trace);
}

std::vector<AugmentedTable> materialize_all(const Corpus& corpus, const std::vector<JoinPath>& paths, Executor executor,
                                            std::size_t threads) {
  std::vector<AugmentedTable> results(paths.size());
  std::vector<std::exception_ptr> errors(paths.size());
  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (auto i = next++; i < paths.size(); i = next++) {
      try {
        results[i] = materialize(corpus, paths[i], executor);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const auto workers = std::clamp<std::size_t>(threads, 1, std::max<std::size_t>(paths.size(), 1));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < workers; ++t) pool.emplace_back(worker);
  }
  for (const auto& error : errors) {
    if (error) std::rethrow_exception(error);
  }
  return results;
}

void check_augmentation_invariants(const Corpus& corpus, const AugmentedTable& augmented) {
  const auto& base = corpus.base();
  if (augmented.table.row_count() != base.row_count()) {
    throw InvariantViolation("augmented table has " + std::to_string(augmented.table.row_count()) + " rows, base has " +
                             std::to_string(base.row_count()));
  }
  if (augmented.base_column_count != base.column_count()) {
    throw InvariantViolation("augmented table does not carry every base column");
  }
  for (std::size_t c = 0; c < base.column_count(); ++c) {
    if (!(augmented.table.columns()[c] == base.columns()[c])) {
      throw InvariantViolation("base column '" + base.columns()[c].name + "' changed during augmentation");
    }
  }
  const auto target_counts = [](const Column& column) {
    std::map<std::string, std::size_t> counts;
    for (const auto& value : column.values) ++counts[is_null(value) ? std::string("\x01null") : format_cell(value)];
    return counts;
  };
  if (target_counts(augmented.table.column(corpus.target_column())) != target_counts(base.column(corpus.target_column()))) {
    throw InvariantViolation("target distribution changed during augmentation");
  }
}

std::vector<std::string> ConsolidatedTable::foreign_features() const {
  std::vector<std::string> names;
  for (std::size_t c = base_column_count; c < table.column_count(); ++c) names.push_back(table.columns()[c].name);
  return names;
}

ConsolidatedTable consolidate(const std::vector<AugmentedTable>& augmented, const std::vector<ScoredPath>& paths) {
  if (augmented.empty()) {
    throw InvariantViolation("consolidate needs at least one augmented table");
  }
  if (augmented.size() != paths.size()) {
    throw InvariantViolation("consolidate: one scored path per augmented table required");
  }
  const auto& first = augmented.front();
  for (const auto& candidate : augmented) {
    if (candidate.table.row_count() != first.table.row_count() || candidate.base_column_count != first.base_column_count) {
      throw InvariantViolation("consolidate: augmented tables are not row-aligned");
    }
    for (std::size_t c = 0; c < first.base_column_count; ++c) {
      if (!(candidate.table.columns()[c] == first.table.columns()[c])) {
        throw InvariantViolation("consolidate: augmented tables disagree on base column '" +
                                 first.table.columns()[c].name + "'");
      }
    }
  }

  struct Choice {
    std::size_t path;
    std::size_t column;
    double null_ratio;
  };
  std::vector<std::string> order;
  std::map<std::string, Choice> chosen;
  for (std::size_t i = 0; i < augmented.size(); ++i) {
    const auto& columns = augmented[i].table.columns();
    for (std::size_t c = augmented[i].base_column_count; c < columns.size(); ++c) {
      const Choice candidate{i, c, null_ratio(columns[c])};
      const auto [it, inserted] = chosen.emplace(columns[c].name, candidate);
      if (inserted) {
        order.push_back(columns[c].name);
        continue;
      }
      const auto& incumbent = it->second;
      const bool better = candidate.null_ratio < incumbent.null_ratio ||
                          (candidate.null_ratio == incumbent.null_ratio && paths[i].score > paths[incumbent.path].score);
      if (better) it->second = candidate;
    }
  }

  ConsolidatedTable result;
  result.base_column_count = first.base_column_count;
  std::vector<Column> columns(first.table.columns().begin(), first.table.columns().begin() + static_cast<std::ptrdiff_t>(first.base_column_count));
  for (const auto& name : order) {
    const auto& choice = chosen.at(name);
    columns.push_back(augmented[choice.path].table.columns()[choice.column]);
    result.provenance[name] = FeatureProvenance{choice.path + 1, choice.null_ratio};
  }
  result.table = Table(first.table.name(), std::move(columns));
  return result;
}

json consolidation_to_json(const ConsolidatedTable& consolidated) {
  json columns = json::array();
  for (const auto& column : consolidated.table.columns()) {
    columns.push_back({{"name", column.name}, {"type", to_string(column.type)}});
  }
  json features = json::object();
  for (const auto& [name, provenance] : consolidated.provenance) {
    features[name] = {{"path_rank", provenance.path_rank}, {"null_ratio", provenance.null_ratio}};
  }
  return {{"base_column_count", consolidated.base_column_count}, {"columns", columns}, {"features", features}};
}

ConsolidatedTable consolidated_from_files(const std::string& base_table, const std::string& csv_file,
                                          const json& provenance) {
  ConsolidatedTable result;
  try {
    std::vector<ColumnType> types;
    for (const auto& column : provenance.at("columns")) {
      types.push_back(column_type_from_string(column.at("type").get<std::string>()));
    }
    result.table = csv::read_table(csv_file, base_table, types);
    result.base_column_count = provenance.at("base_column_count").get<std::size_t>();
    for (const auto& [name, entry] : provenance.at("features").items()) {
      result.provenance[name] = FeatureProvenance{entry.at("path_rank").get<std::size_t>(), entry.at("null_ratio").get<double>()};
    }
  } catch (const json::exception& error) {
    throw DatasetError("malformed consolidation.json: " + std::string(error.what()));
  }
  const auto& columns = provenance.at("columns");
  for (std::size_t c = 0; c < result.table.column_count(); ++c) {
    if (result.table.columns()[c].name != columns[c].at("name").get<std::string>()) {
      throw DatasetError("consolidated.csv header does not match consolidation.json");
    }
  }
  return result;
}

double median(std::vector<double> values) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const auto mid = values.size() / 2;
  return values.size() % 2 == 1 ? values[mid] : 0.5 * (values[mid - 1] + values[mid]);
}

BenchReport bench_join_strategies(const Corpus& corpus, const std::vector<JoinPath>& paths, std::size_t repetitions) {
  using Clock = std::chrono::steady_clock;
  const auto time_ms = [&](const JoinPath& path, Executor executor) {
    const auto started = Clock::now();
    const auto result = materialize(corpus, path, executor);
    return std::chrono::duration<double, std::milli>(Clock::now() - started).count();
  };

  BenchReport report;
  std::map<std::size_t, std::vector<double>> by_length;
  for (std::size_t i = 0; i < paths.size(); ++i) {
    const auto& path = paths[i];
    if (!(binary_left_join_path(corpus, path).table == suffix_yannakakis(corpus, path).table)) {
      throw InvariantViolation("executors disagree on path " + std::to_string(i + 1));
    }
    std::vector<double> binary;
    std::vector<double> yannakakis;
    for (std::size_t rep = 0; rep < std::max<std::size_t>(repetitions, 1); ++rep) {
      binary.push_back(time_ms(path, Executor::Binary));
      yannakakis.push_back(time_ms(path, Executor::Yannakakis));
    }
    BenchEntry entry;
    entry.path_rank = i + 1;
    entry.length = path.length();
    entry.binary_ms = median(binary);
    entry.yannakakis_ms = median(yannakakis);
    entry.speedup = entry.yannakakis_ms > 0.0 ? entry.binary_ms / entry.yannakakis_ms : 1.0;
    by_length[entry.length].push_back(entry.speedup);
    report.entries.push_back(entry);
  }
  for (auto& [length, speedups] : by_length) {
    report.median_speedup_by_length[length] = median(std::move(speedups));
  }
  return report;
}

json to_json(const BenchReport& report) {
  json paths = json::array();
  for (const auto& entry : report.entries) {
    paths.push_back({{"path_rank", entry.path_rank},
                     {"length", entry.length},
                     {"binary_ms", entry.binary_ms},
                     {"yannakakis_ms", entry.yannakakis_ms},
                     {"speedup", entry.speedup}});
  }
  json by_length = json::object();
  for (const auto& [length, speedup] : report.median_speedup_by_length) {
    by_length[std::to_string(length)] = speedup;
  }
  return {{"paths", paths}, {"median_speedup_by_length", by_length}};
}

}  // namespace relaug
