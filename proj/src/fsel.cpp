#include "relaug/fsel.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <stdexcept>

namespace relaug {

using nlohmann::json;

namespace {

constexpr std::size_t kBins = 10;

constexpr std::string_view kHybridSystemHead = "You are a data science expert performing feature selection for ";
constexpr std::string_view kHybridSystemTail =
    ". Given feature names and descriptions, the target variable, and statistical measures, rank features by "
    "importance for predicting the target. You have access to two statistical metrics for each feature:\n"
    "(1) mutual_info: Non-linear predictive power (mutual information measures dependency with target);\n"
    "(2) pearson_corr: Measures linear relationship strength.\n"
    "\n"
    "Integration Strategy:\n"
    "- Features with high statistical scores across multiple metrics should be ranked high.\n"
    "- Features with consistently low statistical scores should be ranked low unless they are semantically "
    "critical for the task.\n"
    "- When statistical evidence and semantic reasoning agree, rank with high confidence accordingly.\n"
    "- When statistical evidence conflicts with semantic intuition, prioritize statistical evidence as it reflects "
    "actual data patterns.\n"
    "- For cryptic or uninformative feature names, with no comprehensive descriptions, rely primarily on "
    "statistical evidence.\n"
    "\n"
    "Requirements:\n"
    "(1) Rank all features provided—no exceptions;\n"
    "(2) Return a JSON array: [\"most_important\",...,\"least_important\"]";

constexpr std::string_view kLlmOnlySystemTail =
    ". Given feature names and descriptions and the target variable, rank features by importance for predicting "
    "the target.\n"
    "\n"
    "Requirements:\n"
    "(1) Rank all features provided—no exceptions;\n"
    "(2) Return a JSON array: [\"most_important\",...,\"least_important\"]";

bool is_numeric(ColumnType type) { return type == ColumnType::Integer || type == ColumnType::Float; }

/// Integer codes for `values`: one per category, or quantile bins for numeric columns.
std::vector<int> discretize(const std::vector<const Value*>& values, bool categorical) {
  const auto n = values.size();
  std::vector<int> codes(n);
  if (categorical) {
    std::map<Value, int> ids;
    for (std::size_t i = 0; i < n; ++i) {
      codes[i] = ids.emplace(*values[i], static_cast<int>(ids.size())).first->second;
    }
    return codes;
  }

  std::vector<std::pair<double, std::size_t>> sorted(n);
  for (std::size_t i = 0; i < n; ++i) sorted[i] = {*numeric_value(*values[i]), i};
  std::sort(sorted.begin(), sorted.end());
  std::size_t distinct = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (i == 0 || sorted[i].first != sorted[i - 1].first) ++distinct;
  }
  int value_id = -1;
  std::size_t first_of_value = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (i == 0 || sorted[i].first != sorted[i - 1].first) {
      ++value_id;
      first_of_value = i;
    }
    codes[sorted[i].second] =
        distinct <= kBins ? value_id : static_cast<int>(kBins * first_of_value / n);
  }
  return codes;
}

std::optional<double> target_numeric(const Value& value, const std::vector<std::string>& text_classes) {
  if (const auto* text = std::get_if<std::string>(&value)) {
    if (text_classes.size() != 2) return std::nullopt;
    return *text == text_classes[0] ? 0.0 : 1.0;
  }
  return numeric_value(value);
}

std::vector<std::string> text_classes(const Column& target) {
  if (target.type != ColumnType::Text) return {};
  std::set<std::string> classes;
  for (const auto& value : target.values) {
    if (const auto* text = std::get_if<std::string>(&value)) classes.insert(*text);
  }
  return {classes.begin(), classes.end()};
}

}  // namespace

std::string_view to_string(SelectionMethod method) {
  switch (method) {
    case SelectionMethod::Hybrid:
      return "hybrid";
    case SelectionMethod::StatsOnly:
      return "stats_only";
    case SelectionMethod::LlmOnly:
      return "llm_only";
    case SelectionMethod::None:
      return "none";
  }
  return "hybrid";
}

SelectionMethod selection_method_from_string(std::string_view name) {
  if (name == "hybrid") return SelectionMethod::Hybrid;
  if (name == "stats-only" || name == "stats_only") return SelectionMethod::StatsOnly;
  if (name == "llm-only" || name == "llm_only") return SelectionMethod::LlmOnly;
  if (name == "none") return SelectionMethod::None;
  throw std::invalid_argument("unknown selection method '" + std::string(name) + "'");
}

double mutual_information(const Column& feature, const Column& target, Task task) {
  std::vector<const Value*> xs;
  std::vector<const Value*> ys;
  const auto rows = std::min(feature.values.size(), target.values.size());
  for (std::size_t r = 0; r < rows; ++r) {
    if (is_null(feature.values[r]) || is_null(target.values[r])) continue;
    xs.push_back(&feature.values[r]);
    ys.push_back(&target.values[r]);
  }
  const auto n = xs.size();
  if (n < 2) return 0.0;

  const auto x = discretize(xs, !is_numeric(feature.type));
  const auto y = discretize(ys, task == Task::Classification || !is_numeric(target.type));

  std::vector<std::pair<int, int>> pairs(n);
  std::map<int, std::size_t> x_counts;
  std::map<int, std::size_t> y_counts;
  for (std::size_t i = 0; i < n; ++i) {
    pairs[i] = {x[i], y[i]};
    ++x_counts[x[i]];
    ++y_counts[y[i]];
  }
  std::sort(pairs.begin(), pairs.end());

  const auto total = static_cast<double>(n);
  double mi = 0.0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && pairs[j] == pairs[i]) ++j;
    const auto joint = static_cast<double>(j - i);
    const auto px = static_cast<double>(x_counts[pairs[i].first]);
    const auto py = static_cast<double>(y_counts[pairs[i].second]);
    mi += joint / total * std::log(joint * total / (px * py));
    i = j;
  }
  return std::max(mi, 0.0);
}

double pearson_abs(const Column& feature, const Column& target) {
  if (feature.type == ColumnType::Text) return 0.0;
  const auto classes = text_classes(target);
  if (target.type == ColumnType::Text && classes.size() != 2) return 0.0;

  // Welford-style co-moment accumulation.
  double count = 0.0;
  double mean_x = 0.0;
  double mean_y = 0.0;
  double m2_x = 0.0;
  double m2_y = 0.0;
  double co_moment = 0.0;
  const auto rows = std::min(feature.values.size(), target.values.size());
  for (std::size_t r = 0; r < rows; ++r) {
    const auto fx = numeric_value(feature.values[r]);
    const auto fy = target_numeric(target.values[r], classes);
    if (!fx || !fy) continue;
    count += 1.0;
    const double dx = *fx - mean_x;
    mean_x += dx / count;
    const double dy = *fy - mean_y;
    mean_y += dy / count;
    m2_x += dx * (*fx - mean_x);
    m2_y += dy * (*fy - mean_y);
    co_moment += dx * (*fy - mean_y);
  }
  if (count < 2.0 || m2_x <= 0.0 || m2_y <= 0.0) return 0.0;
  return std::min(1.0, std::abs(co_moment / std::sqrt(m2_x * m2_y)));
}

FeatureStats feature_stats(const Column& feature, const Column& target, Task task) {
  FeatureStats stats;
  stats.feature = feature.name;
  const auto rows = std::min(feature.values.size(), target.values.size());
  for (std::size_t r = 0; r < rows; ++r) {
    stats.valid_rows += (!is_null(feature.values[r]) && !is_null(target.values[r])) ? 1 : 0;
  }
  stats.mutual_info = mutual_information(feature, target, task);
  stats.pearson_abs = pearson_abs(feature, target);
  return stats;
}

std::vector<std::string> borda_merge(const std::vector<std::vector<RankedFeature>>& rankings) {
  if (rankings.empty()) return {};
  std::set<std::string> universe;
  for (const auto& entry : rankings.front()) universe.insert(entry.name);
  if (universe.size() != rankings.front().size()) {
    throw std::invalid_argument("borda_merge: duplicate feature in ranking");
  }
  std::map<std::string, double> points;
  for (const auto& ranking : rankings) {
    std::set<std::string> names;
    for (const auto& entry : ranking) names.insert(entry.name);
    if (names != universe || ranking.size() != universe.size()) {
      throw std::invalid_argument("borda_merge: rankings cover different feature sets");
    }
    const auto m = static_cast<double>(ranking.size());
    for (std::size_t p = 0; p < ranking.size();) {
      std::size_t q = p;
      while (q + 1 < ranking.size() && ranking[q + 1].statistic == ranking[p].statistic) ++q;
      // Mean of (m-1-p) .. (m-1-q).
      const double shared = m - 1.0 - 0.5 * static_cast<double>(p + q);
      for (std::size_t i = p; i <= q; ++i) points[ranking[i].name] += shared;
      p = q + 1;
    }
  }
  std::vector<std::string> order(universe.begin(), universe.end());
  std::stable_sort(order.begin(), order.end(),
                   [&](const std::string& a, const std::string& b) { return points[a] > points[b]; });
  return order;
}

std::vector<RankedFeature> rank_by(const std::vector<FeatureStats>& stats, double FeatureStats::*statistic) {
  std::vector<RankedFeature> ranked;
  for (const auto& entry : stats) ranked.push_back({entry.feature, entry.*statistic});
  std::sort(ranked.begin(), ranked.end(), [](const RankedFeature& a, const RankedFeature& b) {
    return a.statistic != b.statistic ? a.statistic > b.statistic : a.name < b.name;
  });
  return ranked;
}

std::string format_metric(double value) {
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), "%.4f", value);
  return buffer;
}

llm::ChatPrompt build_fs_prompt(std::span<const FeatureStats> features, const std::vector<std::string>& descriptions,
                                const FsPromptContext& context) {
  llm::ChatPrompt prompt;
  prompt.kind = llm::PromptKind::FeatureRanking;
  prompt.system = std::string(kHybridSystemHead) + context.task_description +
                  std::string(context.include_statistics ? kHybridSystemTail : kLlmOnlySystemTail);

  std::string user = "Task: " + context.task_description + " (" + std::string(to_string(context.task)) + ").\n";
  user += "Target: " + context.target + ".\n";
  if (!context.base_features.empty()) {
    user += "Base table features (context only, always kept): ";
    for (std::size_t i = 0; i < context.base_features.size(); ++i) {
      user += (i > 0 ? ", " : "") + context.base_features[i];
    }
    user += "\n";
  }
  user += context.include_statistics ? "Features with statistical context:\n[" : "Features:\n[";
  json listed = json::array();
  for (std::size_t i = 0; i < features.size(); ++i) {
    const auto description = i < descriptions.size() ? descriptions[i] : std::string{};
    user += i > 0 ? ",\n " : "";
    user += "{\"name\": " + json(features[i].feature).dump() + ", \"desc\": " + json(description).dump();
    if (context.include_statistics) {
      user += ", \"mutual_info\": " + format_metric(features[i].mutual_info) +
              ", \"pearson_corr\": " + format_metric(features[i].pearson_abs);
    }
    user += "}";
    listed.push_back({{"name", features[i].feature}, {"desc", description}});
  }
  user += "]\n";

  prompt.user = std::move(user);
  prompt.context = {{"target", context.target}, {"features", std::move(listed)}};
  return prompt;
}

std::vector<std::string> repair_ranking(const std::vector<std::string>& answer,
                                        const std::vector<std::string>& candidates) {
  const std::set<std::string> known(candidates.begin(), candidates.end());
  std::set<std::string> placed;
  std::vector<std::string> order;
  for (const auto& name : answer) {
    if (known.contains(name) && placed.insert(name).second) order.push_back(name);
  }
  for (const auto& name : candidates) {
    if (placed.insert(name).second) order.push_back(name);
  }
  return order;
}

std::string feature_description(const Corpus& corpus, const DescriptorSet& descriptors, std::string_view feature) {
  // Longest table-name prefix wins so dotted table names resolve.
  std::string_view best_table;
  for (const auto& table : corpus.tables()) {
    const auto& name = table.name();
    if (feature.size() > name.size() + 1 && feature.substr(0, name.size()) == name && feature[name.size()] == '.' &&
        name.size() > best_table.size()) {
      best_table = name;
    }
  }
  if (best_table.empty()) return {};
  return std::string(descriptors.description(best_table, feature.substr(best_table.size() + 1)));
}

SelectionResult select_features(const ConsolidatedTable& consolidated, const Corpus& corpus,
                                const DescriptorSet& descriptors, llm::Gateway& gateway,
                                const SelectionOptions& options, std::vector<std::string>* warnings) {
  if (options.features < 1) throw std::invalid_argument("select_features: features (kappa) must be >= 1");
  if (options.prefilter < options.features) throw std::invalid_argument("select_features: prefilter K must be >= kappa");

  const auto& table = consolidated.table;
  const auto& target = table.column(corpus.target_column());
  SelectionResult result;
  result.ranking.method = options.method;

  for (const auto& name : consolidated.foreign_features()) {
    auto stats = feature_stats(table.column(name), target, corpus.task());
    if (stats.valid_rows < 2 && warnings) {
      warnings->push_back("feature '" + name + "' has fewer than 2 rows with a target; statistics set to 0");
    }
    result.stats.push_back(std::move(stats));
  }
  result.ranking.statistical_order = borda_merge(
      {rank_by(result.stats, &FeatureStats::mutual_info), rank_by(result.stats, &FeatureStats::pearson_abs)});

  if (options.method == SelectionMethod::None) {
    result.ranking.selected = consolidated.foreign_features();
    result.table = table;
    return result;
  }

  const auto& order = result.ranking.statistical_order;
  if (options.method != SelectionMethod::StatsOnly && !order.empty()) {
    std::map<std::string, const FeatureStats*> by_name;
    for (const auto& stats : result.stats) by_name[stats.feature] = &stats;

    FsPromptContext context;
    context.task = corpus.task();
    context.target = corpus.target_column();
    context.task_description = corpus.task_description().value_or("predicting " + corpus.target_column());
    for (std::size_t c = 0; c < consolidated.base_column_count; ++c) {
      if (table.columns()[c].name != corpus.target_column()) context.base_features.push_back(table.columns()[c].name);
    }
    context.include_statistics = options.method == SelectionMethod::Hybrid;

    auto count = std::min(options.prefilter, order.size());
    const auto render = [&](std::size_t n) {
      std::vector<FeatureStats> shown;
      std::vector<std::string> descriptions;
      for (std::size_t i = 0; i < n; ++i) {
        shown.push_back(*by_name.at(order[i]));
        descriptions.push_back(feature_description(corpus, descriptors, order[i]));
      }
      return build_fs_prompt(shown, descriptions, context);
    };
    auto prompt = render(count);
    while (count > 1 && llm::estimate_tokens(prompt.system) + llm::estimate_tokens(prompt.user) > options.token_budget) {
      count = std::max<std::size_t>(1, count * 9 / 10);
      prompt = render(count);
    }
    if (count < std::min(options.prefilter, order.size()) && warnings) {
      warnings->push_back("feature ranking prompt over budget; prefilter reduced to " + std::to_string(count));
    }
    prompt.model = options.model;
    const std::vector<std::string> candidates(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(count));

    std::optional<std::vector<std::string>> answer;
    try {
      auto parsed = gateway.complete_json(prompt);
      if (parsed.is_object()) {
        for (auto& [key, value] : parsed.items()) {
          if (value.is_array()) {
            parsed = value;
            break;
          }
        }
      }
      if (parsed.is_array()) {
        answer.emplace();
        for (const auto& item : parsed) {
          if (item.is_string()) answer->push_back(item.get<std::string>());
        }
      }
    } catch (const llm::LlmError& error) {
      if (error.kind() != llm::LlmError::Kind::Parse) throw;
    }

    if (answer) {
      result.ranking.llm_order = repair_ranking(*answer, candidates);
    } else {
      if (warnings) warnings->push_back("feature ranking answer unusable; falling back to statistical order");
      result.ranking.method = SelectionMethod::StatsOnly;
    }
  }

  const auto& source = result.ranking.method == SelectionMethod::StatsOnly ? order : result.ranking.llm_order;
  const auto keep = std::min(options.features, source.size());
  result.ranking.selected.assign(source.begin(), source.begin() + static_cast<std::ptrdiff_t>(keep));

  std::vector<Column> columns(table.columns().begin(),
                              table.columns().begin() + static_cast<std::ptrdiff_t>(consolidated.base_column_count));
  for (const auto& name : result.ranking.selected) columns.push_back(table.column(name));
  result.table = Table(table.name(), std::move(columns));
  return result;
}

json selection_to_json(const SelectionResult& result, const ConsolidatedTable& consolidated) {
  json features = json::object();
  for (const auto& stats : result.stats) {
    json entry = {{"mutual_info", stats.mutual_info},
                  {"pearson_abs", stats.pearson_abs},
                  {"valid_rows", stats.valid_rows},
                  {"null_ratio", null_ratio(consolidated.table.column(stats.feature))}};
    const auto it = consolidated.provenance.find(stats.feature);
    entry["provenance_path"] = it == consolidated.provenance.end() ? json(nullptr) : json(it->second.path_rank);
    features[stats.feature] = std::move(entry);
  }
  return {{"method", to_string(result.ranking.method)},
          {"statistical_order", result.ranking.statistical_order},
          {"llm_order", result.ranking.llm_order},
          {"selected", result.ranking.selected},
          {"features", features}};
}

}  // namespace relaug
