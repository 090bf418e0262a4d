#include "relaug/pex.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <stdexcept>
#include <tuple>

namespace relaug {

using nlohmann::json;

namespace {

constexpr std::string_view kScoringSystemHead = "You are a data science expert performing semantic table relevance assessment for ";
constexpr std::string_view kScoringSystemTail =
    ". Given table schemas and foreign key relationships, feature names and descriptions, and the target variable, "
    "score each candidate table's relevance to the prediction target.\n"
    "\n"
    "Requirements:\n"
    "(1) Score all candidate tables—no exceptions;\n"
    "(2) Score range [0, 100]: 100 = highly relevant, 0 = irrelevant;\n"
    "(3) Return a JSON object:\n"
    "{table_1: score_1, table_2: score_2,...}.";

std::string task_text(const Corpus& corpus) {
  if (corpus.task_description()) return *corpus.task_description();
  return "predicting " + corpus.target_column() + " (" + std::string(to_string(corpus.task())) + ")";
}

std::string render_schema(const Table& table, const DescriptorSet& descriptors) {
  std::string out = table.name() + ": [";
  for (std::size_t c = 0; c < table.columns().size(); ++c) {
    const auto& column = table.columns()[c];
    if (c > 0) out += ", ";
    out += column.name + " (" + std::string(to_string(column.type));
    const auto description = descriptors.description(table.name(), column.name);
    if (!description.empty()) {
      out += ", ";
      out += description;
    }
    out += ")";
  }
  return out + "]";
}

std::string schema_text(const Table& table, const DescriptorSet& descriptors) {
  std::string out = table.name();
  for (const auto& column : table.columns()) {
    out += " " + column.name;
    const auto description = descriptors.description(table.name(), column.name);
    if (!description.empty()) {
      out += " ";
      out += description;
    }
  }
  return out;
}

std::vector<std::string> in_manifest_order(const Corpus& corpus, const std::set<std::string, std::less<>>& names) {
  std::vector<std::string> out;
  for (const auto& name : corpus.candidate_tables()) {
    if (names.contains(name)) out.push_back(name);
  }
  return out;
}

std::size_t prompt_tokens(const llm::ChatPrompt& prompt) {
  return llm::estimate_tokens(prompt.system) + llm::estimate_tokens(prompt.user);
}

/// Position-by-position comparison key for one step of a path.
auto step_key(const JoinPath& path, std::size_t position) {
  static const std::string kEmpty;
  const auto& table = path.tables[position];
  if (position == 0) {
    return std::tie(table, kEmpty, kEmpty);
  }
  const auto& hop = path.hops[position - 1];
  return std::tie(table, hop.anchor_column, hop.lookup_column);
}

std::optional<double> score_value(const json& value) {
  if (value.is_number()) return value.get<double>();
  if (value.is_string()) return parse_float(value.get<std::string>());
  return std::nullopt;
}

}  // namespace

std::string_view to_string(HopDirection direction) { return direction == HopDirection::Forward ? "forward" : "reverse"; }

void Weights::validate() const {
  if (coverage < 0.0 || uniqueness < 0.0 || size_ratio < 0.0) {
    throw std::invalid_argument("path weights must be non-negative");
  }
  if (std::abs(coverage + uniqueness + size_ratio - 1.0) > 1e-9) {
    throw std::invalid_argument("path weights must sum to 1");
  }
}

double TableScoreSet::score(std::string_view table) const {
  const auto it = scores.find(table);
  return it == scores.end() ? 0.0 : it->second;
}

llm::ChatPrompt build_table_scoring_prompt(const Corpus& corpus, const DescriptorSet& descriptors,
                                           const std::optional<std::vector<std::string>>& candidates) {
  const auto names = candidates ? in_manifest_order(corpus, {candidates->begin(), candidates->end()})
                                : corpus.candidate_tables();
  const auto task = task_text(corpus);

  llm::ChatPrompt prompt;
  prompt.kind = llm::PromptKind::TableScoring;
  prompt.system = std::string(kScoringSystemHead) + task + std::string(kScoringSystemTail);

  std::string user = "Task: " + task + ".\nTarget: " + corpus.target_column() + ".\nBase table:\n";
  user += render_schema(corpus.base(), descriptors) + "\n";
  user += "Candidate tables:\n";
  json tables = json::array();
  for (std::size_t i = 0; i < names.size(); ++i) {
    const auto& table = corpus.table(names[i]);
    user += render_schema(table, descriptors) + (i + 1 < names.size() ? ",\n" : "\n");
    tables.push_back({{"name", table.name()}, {"text", schema_text(table, descriptors)}});
  }

  std::set<std::string, std::less<>> shown(names.begin(), names.end());
  shown.insert(corpus.base_table());
  std::string relationships;
  for (const auto& edge : corpus.edges()) {
    if (shown.contains(edge.from_table) && shown.contains(edge.to_table)) {
      relationships += edge.from_table + "." + edge.from_column + " -> " + edge.to_table + "." + edge.to_column + "\n";
    }
  }
  if (!relationships.empty()) {
    user += "Foreign key relationships:\n" + relationships;
  }
  user += "Score all candidate tables: ";
  for (std::size_t i = 0; i < names.size(); ++i) {
    user += (i > 0 ? ", " : "") + names[i];
  }
  user += "\n";

  prompt.user = std::move(user);
  prompt.context = {{"target", corpus.target_column()}, {"task_description", task}, {"tables", std::move(tables)}};
  return prompt;
}

std::vector<std::string> prefilter_tables(const Corpus& corpus, const DescriptorSet& descriptors,
                                          llm::Gateway& gateway, std::size_t token_budget) {
  const auto all = corpus.candidate_tables();
  if (prompt_tokens(build_table_scoring_prompt(corpus, descriptors, all)) <= token_budget) {
    return all;
  }

  const auto query = gateway.embed(corpus.target_column() + " " + task_text(corpus));
  std::vector<std::pair<double, std::string>> ranked;
  for (const auto& name : all) {
    const auto embedding = gateway.embed(schema_text(corpus.table(name), descriptors));
    ranked.emplace_back(llm::cosine(embedding, query), name);
  }
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    return a.first != b.first ? a.first > b.first : a.second < b.second;
  });

  // The rendered prompt grows with every retained table, so the fitting prefixes form a range [0, k].
  std::size_t lo = 0;
  std::size_t hi = ranked.size();
  const auto prefix = [&](std::size_t k) {
    std::vector<std::string> names;
    for (std::size_t i = 0; i < k; ++i) names.push_back(ranked[i].second);
    return names;
  };
  while (lo < hi) {
    const auto mid = (lo + hi + 1) / 2;
    const auto names = prefix(mid);
    if (prompt_tokens(build_table_scoring_prompt(corpus, descriptors, names)) <= token_budget) {
      lo = mid;
    } else {
      hi = mid - 1;
    }
  }
  const auto kept = prefix(lo);
  return in_manifest_order(corpus, {kept.begin(), kept.end()});
}

TableScoreSet score_tables(const Corpus& corpus, const DescriptorSet& descriptors, llm::Gateway& gateway,
                           const TableScoringOptions& options, std::vector<std::string>* warnings) {
  const auto retained = prefilter_tables(corpus, descriptors, gateway, options.token_budget);
  TableScoreSet result;
  for (const auto& name : corpus.candidate_tables()) {
    result.scores[name] = 0.0;
  }
  const std::set<std::string, std::less<>> kept(retained.begin(), retained.end());
  for (const auto& name : corpus.candidate_tables()) {
    if (!kept.contains(name)) result.prefiltered_out.insert(name);
  }
  if (!result.prefiltered_out.empty() && warnings) {
    warnings->push_back("table scoring prompt over budget: " + std::to_string(result.prefiltered_out.size()) +
                        " tables prefiltered by embedding similarity");
  }

  auto prompt = build_table_scoring_prompt(corpus, descriptors, retained);
  prompt.model = options.model;

  json answer;
  try {
    answer = gateway.complete_json(prompt);
  } catch (const llm::LlmError& error) {
    if (error.kind() != llm::LlmError::Kind::Parse) throw;
  }
  if (!answer.is_object()) {
    if (warnings) warnings->push_back("table scoring answer unusable; every retained table scored 0.5");
    result.fallback = true;
    for (const auto& name : retained) result.scores[name] = 0.5;
    return result;
  }
  for (const auto& name : retained) {
    const auto it = answer.find(name);
    if (it == answer.end()) continue;
    if (const auto value = score_value(*it)) {
      result.scores[name] = std::clamp(*value, 0.0, 100.0) / 100.0;
    }
  }
  return result;
}

HopStats hop_stats(const Corpus& corpus, const Hop& hop) {
  const auto& anchor = corpus.table(hop.anchor_table);
  const auto& lookup = corpus.table(hop.lookup_table);
  const auto anchor_stats = corpus.column_stats(hop.anchor_table, hop.anchor_column);
  const auto lookup_stats = corpus.column_stats(hop.lookup_table, hop.lookup_column);
  const auto anchor_rows = static_cast<double>(anchor.row_count());
  const auto lookup_rows = static_cast<double>(lookup.row_count());

  HopStats stats;
  stats.coverage = 1.0 - anchor_stats.null_rate;
  stats.uniqueness = lookup.row_count() == 0 ? 0.0 : static_cast<double>(lookup_stats.distinct_count) / lookup_rows;
  stats.size_ratio = (anchor.row_count() == 0 || lookup.row_count() == 0)
                         ? 0.0
                         : std::min(anchor_rows, lookup_rows) / std::max(anchor_rows, lookup_rows);
  return stats;
}

ScoredPath path_score(JoinPath path, std::span<const double> table_scores, std::span<const HopStats> hops,
                      const Weights& weights) {
  weights.validate();
  if (path.length() < 2 || hops.size() != path.length() - 1 || table_scores.size() != path.length() - 1) {
    throw std::invalid_argument("path_score: need one table score and one hop per table beyond the base");
  }
  ScoredPath scored;
  for (const double score : table_scores) {
    scored.s_sem += score;
  }
  for (const auto& hop : hops) {
    scored.s_stat += weights.coverage * hop.coverage + weights.uniqueness * hop.uniqueness +
                     weights.size_ratio * hop.size_ratio;
  }
  scored.score = (scored.s_sem + scored.s_stat) / (2.0 * static_cast<double>(path.length() - 1));
  scored.per_hop.assign(hops.begin(), hops.end());
  scored.path = std::move(path);
  return scored;
}

ScoredPath path_score(const Corpus& corpus, JoinPath path, const TableScoreSet& table_scores, const Weights& weights) {
  std::vector<double> semantic;
  std::vector<HopStats> hops;
  for (std::size_t i = 1; i < path.tables.size(); ++i) {
    semantic.push_back(table_scores.score(path.tables[i]));
  }
  for (const auto& hop : path.hops) {
    hops.push_back(hop_stats(corpus, hop));
  }
  return path_score(std::move(path), semantic, hops, weights);
}

bool ranks_before(const ScoredPath& lhs, const ScoredPath& rhs) {
  if (lhs.score != rhs.score) return lhs.score > rhs.score;
  if (lhs.path.length() != rhs.path.length()) return lhs.path.length() < rhs.path.length();
  for (std::size_t i = 0; i < lhs.path.length(); ++i) {
    const auto a = step_key(lhs.path, i);
    const auto b = step_key(rhs.path, i);
    if (a != b) return a < b;
    if (i > 0 && lhs.path.hops[i - 1].direction != rhs.path.hops[i - 1].direction) {
      return lhs.path.hops[i - 1].direction < rhs.path.hops[i - 1].direction;
    }
  }
  return false;
}

std::vector<Hop> adjacent_hops(const Corpus& corpus, std::string_view table) {
  std::vector<Hop> hops;
  for (const auto& edge : corpus.edges()) {
    if (edge.from_table == table) {
      hops.push_back({edge.from_table, edge.from_column, edge.to_table, edge.to_column, HopDirection::Forward});
    }
    if (edge.to_table == table) {
      hops.push_back({edge.to_table, edge.to_column, edge.from_table, edge.from_column, HopDirection::Reverse});
    }
  }
  const auto key = [](const Hop& hop) {
    return std::tie(hop.lookup_table, hop.anchor_column, hop.lookup_column, hop.direction);
  };
  std::sort(hops.begin(), hops.end(), [&](const Hop& a, const Hop& b) { return key(a) < key(b); });
  hops.erase(std::unique(hops.begin(), hops.end()), hops.end());
  return hops;
}

std::vector<ScoredPath> explore(const Corpus& corpus, const TableScoreSet& table_scores, const ExploreOptions& options,
                                std::vector<std::string>* warnings) {
  if (options.max_length < 2) throw std::invalid_argument("explore: max_length must be >= 2");
  if (options.budget < 1) throw std::invalid_argument("explore: budget must be >= 1");
  options.weights.validate();

  std::map<std::string, std::vector<Hop>, std::less<>> adjacency;
  for (const auto& table : corpus.tables()) {
    adjacency.emplace(table.name(), adjacent_hops(corpus, table.name()));
  }
  if (adjacency[corpus.base_table()].empty()) {
    if (warnings) warnings->push_back("base table '" + corpus.base_table() + "' has no join edges");
    return {};
  }

  // Max-heap under ranks_before, so the front is the worst retained path.
  std::vector<ScoredPath> heap;
  const auto offer = [&](ScoredPath candidate) {
    if (heap.size() < options.budget) {
      heap.push_back(std::move(candidate));
      std::push_heap(heap.begin(), heap.end(), ranks_before);
    } else if (ranks_before(candidate, heap.front())) {
      std::pop_heap(heap.begin(), heap.end(), ranks_before);
      heap.back() = std::move(candidate);
      std::push_heap(heap.begin(), heap.end(), ranks_before);
    }
  };

  std::deque<JoinPath> frontier;
  frontier.push_back(JoinPath{{corpus.base_table()}, {}});
  while (!frontier.empty()) {
    auto current = std::move(frontier.front());
    frontier.pop_front();
    for (const auto& hop : adjacency[current.tables.back()]) {
      if (std::find(current.tables.begin(), current.tables.end(), hop.lookup_table) != current.tables.end()) {
        continue;
      }
      JoinPath extended = current;
      extended.tables.push_back(hop.lookup_table);
      extended.hops.push_back(hop);
      offer(path_score(corpus, extended, table_scores, options.weights));
      if (extended.length() < options.max_length) {
        frontier.push_back(std::move(extended));
      }
    }
  }

  std::sort(heap.begin(), heap.end(), ranks_before);
  return heap;
}

json to_json(const ScoredPath& path) {
  json hops = json::array();
  for (const auto& hop : path.path.hops) {
    hops.push_back({{"anchor_table", hop.anchor_table},
                    {"anchor_column", hop.anchor_column},
                    {"lookup_table", hop.lookup_table},
                    {"lookup_column", hop.lookup_column},
                    {"direction", to_string(hop.direction)}});
  }
  json per_hop = json::array();
  for (const auto& stats : path.per_hop) {
    per_hop.push_back({{"cov", stats.coverage}, {"uniq", stats.uniqueness}, {"sratio", stats.size_ratio}});
  }
  return {{"tables", path.path.tables}, {"hops", hops},        {"s_sem", path.s_sem},
          {"s_stat", path.s_stat},      {"score", path.score}, {"per_hop", per_hop}};
}

json paths_to_json(const std::vector<ScoredPath>& paths) {
  json out = json::array();
  for (const auto& path : paths) out.push_back(to_json(path));
  return out;
}

std::vector<ScoredPath> paths_from_json(const Corpus& corpus, const json& document) {
  std::vector<ScoredPath> paths;
  try {
    for (const auto& entry : document) {
      ScoredPath scored;
      scored.path.tables = entry.at("tables").get<std::vector<std::string>>();
      for (const auto& hop : entry.at("hops")) {
        const auto direction = hop.at("direction").get<std::string>();
        if (direction != "forward" && direction != "reverse") {
          throw DatasetError("paths.json: unknown hop direction '" + direction + "'");
        }
        scored.path.hops.push_back({hop.at("anchor_table").get<std::string>(), hop.at("anchor_column").get<std::string>(),
                                    hop.at("lookup_table").get<std::string>(), hop.at("lookup_column").get<std::string>(),
                                    direction == "forward" ? HopDirection::Forward : HopDirection::Reverse});
      }
      for (const auto& stats : entry.at("per_hop")) {
        scored.per_hop.push_back({stats.at("cov").get<double>(), stats.at("uniq").get<double>(), stats.at("sratio").get<double>()});
      }
      scored.s_sem = entry.at("s_sem").get<double>();
      scored.s_stat = entry.at("s_stat").get<double>();
      scored.score = entry.at("score").get<double>();
      paths.push_back(std::move(scored));
    }
  } catch (const json::exception& error) {
    throw DatasetError("malformed paths.json: " + std::string(error.what()));
  }

  for (const auto& scored : paths) {
    const auto& path = scored.path;
    if (path.length() < 2 || path.hops.size() + 1 != path.length() || path.tables.front() != corpus.base_table()) {
      throw DatasetError("paths.json: path is not rooted at the base table or has mismatched hops");
    }
    for (std::size_t i = 0; i < path.hops.size(); ++i) {
      const auto& hop = path.hops[i];
      if (hop.anchor_table != path.tables[i] || hop.lookup_table != path.tables[i + 1]) {
        throw DatasetError("paths.json: hop " + std::to_string(i) + " does not connect consecutive tables");
      }
      const auto hops = adjacent_hops(corpus, hop.anchor_table);
      if (std::find(hops.begin(), hops.end(), hop) == hops.end()) {
        throw DatasetError("paths.json: hop " + hop.anchor_table + "." + hop.anchor_column + " -> " + hop.lookup_table +
                           "." + hop.lookup_column + " is not an edge of the join graph");
      }
    }
  }
  return paths;
}

json to_json(const TableScoreSet& scores) {
  json out = {{"scores", json::object()}, {"prefiltered_out", json::array()}, {"fallback", scores.fallback}};
  for (const auto& [name, score] : scores.scores) out["scores"][name] = score;
  for (const auto& name : scores.prefiltered_out) out["prefiltered_out"].push_back(name);
  return out;
}

}  // namespace relaug
