#include "relaug/synthetic.hpp"

#include <random>
#include <set>
#include <stdexcept>
#include <string>

#include "relaug/csv.hpp"

namespace relaug {

namespace {

constexpr double kLabelNoise = 0.1;
constexpr std::int64_t kCategories = 10;

std::string leaf_name(std::size_t i) { return "t" + std::to_string(i); }

Column key_column(std::string name, std::size_t rows) {
  Column column{std::move(name), ColumnType::Integer, {}};
  column.values.reserve(rows);
  for (std::size_t r = 0; r < rows; ++r) column.values.emplace_back(static_cast<std::int64_t>(r));
  return column;
}

class Generator {
 public:
  explicit Generator(const SyntheticOptions& options) : options_(options), rng_(options.seed) {}

  /// Foreign keys into a table of `rows` rows; dangling keys sit past the key range.
  Column foreign_keys(std::string name, double selectivity) {
    std::bernoulli_distribution hit(selectivity);
    std::uniform_int_distribution<std::int64_t> row(0, static_cast<std::int64_t>(options_.rows) - 1);
    Column column{std::move(name), ColumnType::Integer, {}};
    column.values.reserve(options_.rows);
    for (std::size_t r = 0; r < options_.rows; ++r) {
      const bool matched = hit(rng_);
      const auto target = row(rng_);
      column.values.emplace_back(matched ? target : target + static_cast<std::int64_t>(options_.rows));
    }
    return column;
  }

  Column gaussian(std::string name) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Column column{std::move(name), ColumnType::Float, {}};
    column.values.reserve(options_.rows);
    for (std::size_t r = 0; r < options_.rows; ++r) column.values.emplace_back(normal(rng_));
    return column;
  }

  Column category(std::string name) {
    std::uniform_int_distribution<std::int64_t> pick(0, kCategories - 1);
    Column column{std::move(name), ColumnType::Integer, {}};
    column.values.reserve(options_.rows);
    for (std::size_t r = 0; r < options_.rows; ++r) column.values.emplace_back(pick(rng_));
    return column;
  }

  /// Labels from the signal reached by each base row, or coin flips where no signal is reached.
  Column labels(const std::vector<std::optional<double>>& reached) {
    std::bernoulli_distribution flip(kLabelNoise);
    std::bernoulli_distribution coin(0.5);
    Column column{"y", ColumnType::Integer, {}};
    column.values.reserve(reached.size());
    for (const auto& signal : reached) {
      const bool noisy = flip(rng_);
      const bool fair = coin(rng_);
      const bool label = signal ? ((*signal > 0.0) != noisy) : fair;
      column.values.emplace_back(static_cast<std::int64_t>(label ? 1 : 0));
    }
    return column;
  }

 private:
  const SyntheticOptions& options_;
  std::mt19937_64 rng_;
};

/// Follows a foreign-key column into a table whose ids equal row indices; nullopt for dangling keys.
std::optional<std::size_t> follow(const Column& keys, std::size_t row, std::size_t rows) {
  const auto key = std::get<std::int64_t>(keys.values[row]);
  if (key < 0 || static_cast<std::size_t>(key) >= rows) return std::nullopt;
  return static_cast<std::size_t>(key);
}

Corpus make_chain(const SyntheticOptions& options, Generator& generator) {
  const auto leaves = options.tables - 1;
  const auto rows = options.rows;

  std::vector<std::vector<Column>> leaf_columns(leaves + 1);
  for (std::size_t i = 1; i <= leaves; ++i) {
    auto& columns = leaf_columns[i];
    columns.push_back(key_column("id", rows));
    if (i < leaves) columns.push_back(generator.foreign_keys(leaf_name(i + 1) + "_id", options.selectivity));
    columns.push_back(generator.gaussian("a" + std::to_string(i)));
    columns.push_back(generator.category("b" + std::to_string(i)));
    if (i == options.planted_hop) columns.push_back(generator.gaussian("signal"));
  }

  std::vector<Column> base;
  base.push_back(key_column("id", rows));
  base.push_back(generator.foreign_keys(leaf_name(1) + "_id", options.selectivity));
  base.push_back(generator.gaussian("x0"));

  std::vector<std::optional<double>> reached(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    std::optional<std::size_t> row = follow(base[1], r, rows);
    for (std::size_t i = 1; row && i < options.planted_hop; ++i) row = follow(leaf_columns[i][1], *row, rows);
    if (row) reached[r] = std::get<double>(leaf_columns[options.planted_hop].back().values[*row]);
  }
  base.push_back(generator.labels(reached));

  CorpusSpec spec;
  spec.base_table = "base";
  spec.target_column = "y";
  spec.task = Task::Classification;
  spec.dataset_description = "Synthetic chain of " + std::to_string(options.tables) + " tables";
  spec.task_description = "predicting the binary label y";
  spec.tables.emplace_back("base", std::move(base));
  for (std::size_t i = 1; i <= leaves; ++i) spec.tables.emplace_back(leaf_name(i), std::move(leaf_columns[i]));
  spec.edges.push_back({"base", leaf_name(1) + "_id", leaf_name(1), "id"});
  for (std::size_t i = 1; i < leaves; ++i) {
    spec.edges.push_back({leaf_name(i), leaf_name(i + 1) + "_id", leaf_name(i + 1), "id"});
  }
  return Corpus(std::move(spec));
}

Corpus make_star(const SyntheticOptions& options, Generator& generator) {
  const auto leaves = options.tables - 1;
  const auto rows = options.rows;

  std::vector<Column> base;
  base.push_back(key_column("id", rows));
  for (std::size_t i = 1; i <= leaves; ++i) {
    base.push_back(generator.foreign_keys(leaf_name(i) + "_id", options.selectivity));
  }
  base.push_back(generator.gaussian("x0"));

  std::vector<std::vector<Column>> leaf_columns(leaves + 1);
  for (std::size_t i = 1; i <= leaves; ++i) {
    auto& columns = leaf_columns[i];
    columns.push_back(key_column("id", rows));
    columns.push_back(generator.gaussian("a" + std::to_string(i)));
    columns.push_back(generator.category("b" + std::to_string(i)));
    if (i == 1) columns.push_back(generator.gaussian("signal"));
  }

  std::vector<std::optional<double>> reached(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    if (const auto row = follow(base[1], r, rows)) reached[r] = std::get<double>(leaf_columns[1].back().values[*row]);
  }
  base.push_back(generator.labels(reached));

  CorpusSpec spec;
  spec.base_table = "base";
  spec.target_column = "y";
  spec.task = Task::Classification;
  spec.dataset_description = "Synthetic star of " + std::to_string(options.tables) + " tables";
  spec.task_description = "predicting the binary label y";
  spec.tables.emplace_back("base", std::move(base));
  for (std::size_t i = 1; i <= leaves; ++i) {
    spec.tables.emplace_back(leaf_name(i), std::move(leaf_columns[i]));
    spec.edges.push_back({"base", leaf_name(i) + "_id", leaf_name(i), "id"});
  }
  return Corpus(std::move(spec));
}

}  // namespace

std::string_view to_string(SyntheticKind kind) { return kind == SyntheticKind::Chain ? "chain" : "star"; }

SyntheticKind synthetic_kind_from_string(std::string_view name) {
  if (name == "chain") return SyntheticKind::Chain;
  if (name == "star") return SyntheticKind::Star;
  throw std::invalid_argument("unknown synthetic kind '" + std::string(name) + "'");
}

Corpus make_synthetic_corpus(const SyntheticOptions& options) {
  if (options.tables < 2) throw std::invalid_argument("synthetic corpus needs at least 2 tables");
  if (options.rows < 2) throw std::invalid_argument("synthetic corpus needs at least 2 rows");
  if (!(options.selectivity >= 0.0 && options.selectivity <= 1.0)) {
    throw std::invalid_argument("selectivity must lie in [0,1]");
  }
  if (options.kind == SyntheticKind::Chain && (options.planted_hop < 1 || options.planted_hop >= options.tables)) {
    throw std::invalid_argument("planted hop must lie in [1, tables-1]");
  }
  Generator generator(options);
  return options.kind == SyntheticKind::Chain ? make_chain(options, generator) : make_star(options, generator);
}

void generate_synthetic(const SyntheticOptions& options, const std::filesystem::path& directory) {
  write_dataset(make_synthetic_corpus(options), directory);
}

std::vector<JoinPath> chain_prefix_paths(const Corpus& corpus) {
  std::vector<JoinPath> prefixes;
  JoinPath path;
  path.tables.push_back(corpus.base_table());
  std::set<std::string> visited{corpus.base_table()};
  for (bool extended = true; extended;) {
    extended = false;
    for (const auto& edge : corpus.edges()) {
      if (edge.from_table != path.tables.back() || visited.contains(edge.to_table)) continue;
      path.hops.push_back({edge.from_table, edge.from_column, edge.to_table, edge.to_column, HopDirection::Forward});
      path.tables.push_back(edge.to_table);
      visited.insert(edge.to_table);
      prefixes.push_back(path);
      extended = true;
      break;
    }
  }
  return prefixes;
}

}  // namespace relaug
