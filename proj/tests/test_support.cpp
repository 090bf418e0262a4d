#include "test_support.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <tuple>
#include <unistd.h>

namespace relaug::testing {

namespace {

std::string table_name(std::size_t i) { return "t" + std::to_string(i); }

bool numeric(ColumnType type) {
  return type == ColumnType::Integer || type == ColumnType::Float || type == ColumnType::Boolean;
}

/// 0..k-1 codes: one per distinct value (<= 10 distinct) or the share of strictly smaller values in tenths.
std::vector<int> numeric_codes(const std::vector<double>& values) {
  std::vector<double> sorted = values;
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> distinct = sorted;
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  std::vector<int> codes;
  for (const double v : values) {
    if (distinct.size() <= 10) {
      codes.push_back(static_cast<int>(std::lower_bound(distinct.begin(), distinct.end(), v) - distinct.begin()));
    } else {
      const auto smaller = static_cast<std::size_t>(std::lower_bound(sorted.begin(), sorted.end(), v) - sorted.begin());
      codes.push_back(static_cast<int>(std::floor(10.0 * static_cast<double>(smaller) / static_cast<double>(values.size()))));
    }
  }
  return codes;
}

std::vector<int> category_codes(const std::vector<std::string>& values) {
  std::map<std::string, int> ids;
  std::vector<int> codes;
  for (const auto& v : values) codes.push_back(ids.emplace(v, static_cast<int>(ids.size())).first->second);
  return codes;
}

std::string category_text(const Value& value) {
  // Tag with the alternative so 1 and "1" stay distinct categories.
  return std::to_string(value.index()) + ":" + format_cell(value);
}

}  // namespace

Corpus random_corpus(std::mt19937_64& rng, const RandomCorpusOptions& options) {
  std::uniform_int_distribution<std::size_t> table_count(options.min_tables, options.max_tables);
  const auto n = table_count(rng);

  std::vector<JoinEdge> edges;
  const auto add_edge = [&](std::size_t a, std::size_t b) {
    const auto name = "ref" + std::to_string(edges.size());
    if (std::bernoulli_distribution(0.5)(rng)) std::swap(a, b);
    edges.push_back({table_name(a), name, table_name(b), "id"});
  };
  for (std::size_t i = 1; i < n; ++i) add_edge(i, std::uniform_int_distribution<std::size_t>(0, i - 1)(rng));
  for (std::size_t e = 0; e < options.extra_edges && n > 1; ++e) {
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    const auto a = pick(rng);
    auto b = pick(rng);
    if (a == b) b = (a + 1) % n;
    add_edge(a, b);
  }

  std::bernoulli_distribution null(options.null_rate);
  std::uniform_int_distribution<std::int64_t> key(0, options.key_domain - 1);
  std::normal_distribution<double> normal(0.0, 1.0);
  const std::vector<std::string> colors{"red", "green", "blue"};
  std::uniform_int_distribution<std::size_t> color(0, colors.size() - 1);
  const auto keys = [&](std::string name, std::size_t rows) {
    Column column{std::move(name), ColumnType::Integer, {}};
    for (std::size_t r = 0; r < rows; ++r) {
      if (null(rng)) {
        column.values.emplace_back(Null{});
      } else {
        column.values.emplace_back(key(rng));
      }
    }
    return column;
  };

  CorpusSpec spec;
  spec.base_table = table_name(0);
  spec.target_column = "y";
  for (std::size_t i = 0; i < n; ++i) {
    const auto rows = i == 0 ? std::uniform_int_distribution<std::size_t>(2, options.max_rows)(rng)
                             : std::uniform_int_distribution<std::size_t>(0, options.max_rows)(rng);
    std::vector<Column> columns;
    columns.push_back(keys("id", rows));
    for (const auto& edge : edges) {
      if (edge.from_table == table_name(i)) columns.push_back(keys(edge.from_column, rows));
    }
    Column f{"f", ColumnType::Float, {}};
    Column c{"c", ColumnType::Text, {}};
    for (std::size_t r = 0; r < rows; ++r) {
      if (null(rng)) {
        f.values.emplace_back(Null{});
      } else {
        f.values.emplace_back(normal(rng));
      }
      if (null(rng)) {
        c.values.emplace_back(Null{});
      } else {
        c.values.emplace_back(colors[color(rng)]);
      }
    }
    columns.push_back(std::move(f));
    columns.push_back(std::move(c));
    if (i == 0) {
      Column y{"y", ColumnType::Integer, {}};
      for (std::size_t r = 0; r < rows; ++r) {
        y.values.emplace_back(static_cast<std::int64_t>(r < 2 ? r : std::bernoulli_distribution(0.5)(rng)));
      }
      columns.push_back(std::move(y));
    }
    spec.tables.emplace_back(table_name(i), std::move(columns));
  }
  spec.edges = std::move(edges);
  return Corpus(std::move(spec));
}

std::vector<JoinPath> enumerate_paths(const Corpus& corpus, std::size_t max_length) {
  std::map<std::string, std::set<std::tuple<std::string, std::string, std::string, int>>> steps;
  for (const auto& edge : corpus.edges()) {
    steps[edge.from_table].insert({edge.to_table, edge.from_column, edge.to_column, 0});
    steps[edge.to_table].insert({edge.from_table, edge.to_column, edge.from_column, 1});
  }

  std::vector<JoinPath> out;
  JoinPath path{{corpus.base_table()}, {}};
  std::function<void()> dfs = [&] {
    if (path.length() >= max_length) return;
    const auto from = path.tables.back();
    for (const auto& [to, anchor, lookup, reverse] : steps[from]) {
      if (std::find(path.tables.begin(), path.tables.end(), to) != path.tables.end()) continue;
      path.tables.push_back(to);
      path.hops.push_back({from, anchor, to, lookup, reverse ? HopDirection::Reverse : HopDirection::Forward});
      out.push_back(path);
      dfs();
      path.tables.pop_back();
      path.hops.pop_back();
    }
  };
  dfs();
  return out;
}

std::vector<ScoredPath> exhaustive_top_paths(const Corpus& corpus, const TableScoreSet& scores,
                                             const ExploreOptions& options) {
  std::vector<ScoredPath> all;
  for (auto& path : enumerate_paths(corpus, options.max_length)) {
    all.push_back(path_score(corpus, std::move(path), scores, options.weights));
  }
  using Step = std::tuple<std::string, std::string, std::string, int>;
  const auto sequence = [](const JoinPath& path) {
    std::vector<Step> steps{{path.tables[0], "", "", -1}};
    for (std::size_t i = 0; i < path.hops.size(); ++i) {
      steps.emplace_back(path.tables[i + 1], path.hops[i].anchor_column, path.hops[i].lookup_column,
                         path.hops[i].direction == HopDirection::Forward ? 0 : 1);
    }
    return steps;
  };
  std::sort(all.begin(), all.end(), [&](const ScoredPath& a, const ScoredPath& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.path.length() != b.path.length()) return a.path.length() < b.path.length();
    return sequence(a.path) < sequence(b.path);
  });
  if (all.size() > options.budget) all.resize(options.budget);
  return all;
}

double brute_mutual_information(const Column& feature, const Column& target, Task task) {
  std::vector<std::size_t> rows;
  for (std::size_t r = 0; r < feature.values.size(); ++r) {
    if (!is_null(feature.values[r]) && !is_null(target.values[r])) rows.push_back(r);
  }
  if (rows.size() < 2) return 0.0;

  const auto codes = [&](const Column& column, bool categorical) {
    if (categorical) {
      std::vector<std::string> values;
      for (const auto r : rows) values.push_back(category_text(column.values[r]));
      return category_codes(values);
    }
    std::vector<double> values;
    for (const auto r : rows) values.push_back(*numeric_value(column.values[r]));
    return numeric_codes(values);
  };
  const bool feature_numeric = feature.type == ColumnType::Integer || feature.type == ColumnType::Float;
  const bool target_numeric = target.type == ColumnType::Integer || target.type == ColumnType::Float;
  const auto x = codes(feature, !feature_numeric);
  const auto y = codes(target, task == Task::Classification || !target_numeric);

  const int kx = *std::max_element(x.begin(), x.end()) + 1;
  const int ky = *std::max_element(y.begin(), y.end()) + 1;
  std::vector<std::vector<double>> table(kx, std::vector<double>(ky, 0.0));
  for (std::size_t i = 0; i < rows.size(); ++i) table[x[i]][y[i]] += 1.0;

  const double n = static_cast<double>(rows.size());
  std::vector<double> row_sum(kx, 0.0);
  std::vector<double> col_sum(ky, 0.0);
  for (int a = 0; a < kx; ++a) {
    for (int b = 0; b < ky; ++b) {
      row_sum[a] += table[a][b];
      col_sum[b] += table[a][b];
    }
  }
  double mi = 0.0;
  for (int a = 0; a < kx; ++a) {
    for (int b = 0; b < ky; ++b) {
      if (table[a][b] == 0.0) continue;
      const double pxy = table[a][b] / n;
      mi += pxy * std::log(pxy / ((row_sum[a] / n) * (col_sum[b] / n)));
    }
  }
  return std::max(0.0, mi);
}

double brute_pearson_abs(const Column& feature, const Column& target) {
  if (!numeric(feature.type)) return 0.0;
  std::vector<std::string> classes;
  if (target.type == ColumnType::Text) {
    std::set<std::string> seen;
    for (const auto& v : target.values) {
      if (!is_null(v)) seen.insert(std::get<std::string>(v));
    }
    if (seen.size() != 2) return 0.0;
    classes.assign(seen.begin(), seen.end());
  }
  std::vector<double> xs;
  std::vector<double> ys;
  for (std::size_t r = 0; r < feature.values.size(); ++r) {
    if (is_null(feature.values[r]) || is_null(target.values[r])) continue;
    xs.push_back(*numeric_value(feature.values[r]));
    ys.push_back(classes.empty() ? *numeric_value(target.values[r])
                                 : (std::get<std::string>(target.values[r]) == classes[0] ? 0.0 : 1.0));
  }
  const auto n = xs.size();
  if (n < 2) return 0.0;
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  if (sxx <= 0.0 || syy <= 0.0) return 0.0;
  return std::min(1.0, std::abs(sxy / std::sqrt(sxx * syy)));
}

Column random_numeric_column(std::mt19937_64& rng, std::string name, std::size_t rows, bool integer,
                             double null_rate) {
  std::bernoulli_distribution null(null_rate);
  std::uniform_int_distribution<int> spread(1, 40);
  std::uniform_int_distribution<std::int64_t> small(0, spread(rng));
  std::normal_distribution<double> normal(0.0, 3.0);
  Column column{std::move(name), integer ? ColumnType::Integer : ColumnType::Float, {}};
  for (std::size_t r = 0; r < rows; ++r) {
    if (null(rng)) {
      column.values.emplace_back(Null{});
    } else if (integer) {
      column.values.emplace_back(small(rng));
    } else {
      column.values.emplace_back(normal(rng));
    }
  }
  return column;
}

std::filesystem::path scratch_dir(const std::string& label) {
  const auto dir = std::filesystem::temp_directory_path() / ("relaug_" + label + "_" + std::to_string(::getpid()));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

Corpus retail_corpus() {
  const auto ints = [](std::string name, std::vector<std::int64_t> values) {
    Column column{std::move(name), ColumnType::Integer, {}};
    for (const auto v : values) column.values.emplace_back(v);
    return column;
  };
  const auto texts = [](std::string name, std::vector<std::string> values) {
    Column column{std::move(name), ColumnType::Text, {}};
    for (auto& v : values) column.values.emplace_back(std::move(v));
    return column;
  };
  const auto reals = [](std::string name, std::vector<double> values) {
    Column column{std::move(name), ColumnType::Float, {}};
    for (const auto v : values) column.values.emplace_back(v);
    return column;
  };

  CorpusSpec spec;
  spec.base_table = "customers";
  spec.target_column = "churn";
  spec.task = Task::Classification;
  spec.dataset_description = "Retail customers with their orders and home regions";
  spec.task_description = "predicting customer churn";
  spec.tables.emplace_back("customers", std::vector<Column>{ints("id", {1, 2, 3, 4, 5, 6}),
                                                            ints("region_id", {10, 20, 10, 30, 20, 10}),
                                                            ints("age", {34, 51, 29, 45, 62, 38}),
                                                            ints("churn", {0, 1, 0, 1, 1, 0})});
  spec.tables.emplace_back("orders", std::vector<Column>{ints("order_id", {100, 101, 102, 103, 104, 105, 106}),
                                                         ints("customer_id", {1, 1, 2, 3, 5, 5, 9}),
                                                         reals("amount", {12.5, 40.0, 7.25, 99.0, 5.5, 18.0, 60.0}),
                                                         texts("channel", {"web", "store", "web", "web", "phone",
                                                                           "store", "web"})});
  spec.tables.emplace_back("regions", std::vector<Column>{ints("id", {10, 20, 30}),
                                                          texts("name", {"north", "south", "east"}),
                                                          ints("population", {1200, 800, 450})});
  spec.edges.push_back({"orders", "customer_id", "customers", "id"});
  spec.edges.push_back({"customers", "region_id", "regions", "id"});
  return Corpus(std::move(spec));
}

std::string slurp(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

}  // namespace relaug::testing
