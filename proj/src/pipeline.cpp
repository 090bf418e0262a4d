#include "relaug/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>
#include <thread>

#include "relaug/csv.hpp"

namespace relaug {

using nlohmann::json;

namespace {

void write_json(const std::filesystem::path& file, const json& document) {
  csv::write_file_atomic(file, document.dump(2) + "\n");
}

json read_json(const std::filesystem::path& file) {
  if (!std::filesystem::exists(file)) {
    throw DatasetError("missing artifact '" + file.string() + "'; run the earlier stages first");
  }
  try {
    return json::parse(csv::read_file(file));
  } catch (const json::exception& error) {
    throw DatasetError("malformed artifact '" + file.string() + "': " + error.what());
  }
}

template <typename F>
auto timed(std::map<std::string, double>& timings, const std::string& stage, F&& body) {
  const auto started = std::chrono::steady_clock::now();
  auto result = body();
  timings[stage] = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started).count();
  return result;
}

}  // namespace

void RunConfig::validate() const {
  if (max_len < 2) throw std::invalid_argument("max-len must be >= 2");
  if (paths < 1) throw std::invalid_argument("paths must be >= 1");
  if (features < 1) throw std::invalid_argument("features must be >= 1");
  if (prefilter < features) throw std::invalid_argument("prefilter must be >= features");
  weights.validate();
  if (llm == LlmBackend::Remote && endpoint.empty()) {
    throw std::invalid_argument("remote LLM needs an endpoint (--endpoint or RELAUG_LLM_ENDPOINT)");
  }
}

std::size_t RunConfig::worker_threads() const {
  if (threads > 0) return threads;
  return std::max<std::size_t>(1, std::thread::hardware_concurrency());
}

json RunConfig::to_json() const {
  json document = {{"dataset", dataset_dir.string()},
                   {"out", out_dir.string()},
                   {"max_len", max_len},
                   {"paths", paths},
                   {"features", features},
                   {"prefilter", prefilter},
                   {"weights", {weights.coverage, weights.uniqueness, weights.size_ratio}},
                   {"llm", llm == LlmBackend::Stub ? "stub" : "remote"},
                   {"model", model},
                   {"method", to_string(method)},
                   {"executor", to_string(executor)},
                   {"threads", worker_threads()},
                   {"seed", seed},
                   {"token_budget", token_budget}};
  if (stub_script) document["stub_script"] = stub_script->string();
  if (llm == LlmBackend::Remote) document["endpoint"] = endpoint;
  return document;
}

std::unique_ptr<llm::Gateway> make_gateway(const RunConfig& config) {
  std::shared_ptr<llm::ChatProvider> chat;
  if (config.llm == LlmBackend::Remote) {
    chat = std::make_shared<llm::RemoteProvider>(llm::RemoteConfig{config.endpoint, config.api_key});
  } else if (config.stub_script) {
    chat = std::make_shared<llm::StubProvider>(llm::StubProvider::from_script(*config.stub_script));
  } else {
    chat = std::make_shared<llm::StubProvider>();
  }
  auto gateway = std::make_unique<llm::Gateway>(std::move(chat));
  if (!config.out_dir.empty()) {
    std::filesystem::create_directories(config.out_dir);
    gateway->enable_audit_log(config.out_dir / artifacts::kAuditLog);
  }
  return gateway;
}

Corpus load_validated_dataset(const RunConfig& config, std::vector<std::string>& warnings) {
  auto corpus = load_dataset(config.dataset_dir);
  std::string violations;
  for (const auto& diagnostic : validate_graph(corpus)) {
    if (diagnostic.severity == GraphDiagnostic::Severity::Violation) {
      violations += (violations.empty() ? "" : "; ") + diagnostic.message;
    } else {
      warnings.push_back(diagnostic.message);
    }
  }
  if (!violations.empty()) throw DatasetError("invalid join graph: " + violations);
  return corpus;
}

DescriptorSet stage_describe(const RunConfig& config, const Corpus& corpus, llm::Gateway& gateway,
                             std::vector<std::string>& warnings) {
  std::filesystem::create_directories(config.out_dir);
  FdgOptions options;
  options.cache_file = config.out_dir / artifacts::kDescriptions;
  options.token_budget = config.token_budget;
  options.model = config.model;
  return generate_descriptions(corpus, gateway, options, &warnings);
}

DescriptorSet load_descriptors(const RunConfig& config, const Corpus& corpus) {
  if (auto cached = read_description_cache(corpus, config.out_dir / artifacts::kDescriptions)) return *cached;
  return absent_descriptors(corpus);
}

std::vector<ScoredPath> stage_explore(const RunConfig& config, const Corpus& corpus, llm::Gateway& gateway,
                                      std::vector<std::string>& warnings) {
  std::filesystem::create_directories(config.out_dir);
  const auto descriptors = load_descriptors(config, corpus);
  const auto scores = score_tables(corpus, descriptors, gateway, {config.token_budget, config.model}, &warnings);
  write_json(config.out_dir / artifacts::kTableScores, to_json(scores));

  ExploreOptions options;
  options.max_length = config.max_len;
  options.budget = config.paths;
  options.weights = config.weights;
  auto paths = explore(corpus, scores, options, &warnings);
  write_json(config.out_dir / artifacts::kPaths, paths_to_json(paths));
  return paths;
}

ConsolidatedTable stage_execute(const RunConfig& config, const Corpus& corpus, std::vector<std::string>& warnings) {
  const auto paths = paths_from_json(corpus, read_json(config.out_dir / artifacts::kPaths));

  ConsolidatedTable consolidated;
  if (paths.empty()) {
    warnings.push_back("no join paths; the consolidated table is the base table");
    consolidated.table = corpus.base();
    consolidated.base_column_count = corpus.base().column_count();
  } else {
    std::vector<JoinPath> plain;
    for (const auto& path : paths) plain.push_back(path.path);
    const auto augmented = materialize_all(corpus, plain, config.executor, config.worker_threads());
    for (const auto& table : augmented) check_augmentation_invariants(corpus, table);
    consolidated = consolidate(augmented, paths);
  }

  csv::write_table(consolidated.table, config.out_dir / artifacts::kConsolidated);
  write_json(config.out_dir / artifacts::kConsolidation, consolidation_to_json(consolidated));
  return consolidated;
}

SelectionResult stage_select(const RunConfig& config, const Corpus& corpus, llm::Gateway& gateway,
                             std::vector<std::string>& warnings) {
  const auto consolidated = consolidated_from_files(corpus.base_table(),
                                                    (config.out_dir / artifacts::kConsolidated).string(),
                                                    read_json(config.out_dir / artifacts::kConsolidation));
  const auto descriptors = load_descriptors(config, corpus);

  SelectionOptions options;
  options.features = config.features;
  options.prefilter = config.prefilter;
  options.method = config.method;
  options.token_budget = config.token_budget;
  options.model = config.model;
  auto result = select_features(consolidated, corpus, descriptors, gateway, options, &warnings);

  csv::write_table(result.table, config.out_dir / artifacts::kAugmented);
  write_json(config.out_dir / artifacts::kSelection, selection_to_json(result, consolidated));
  return result;
}

json RunReport::to_json() const {
  json calls = json::object();
  for (const auto& [kind, count] : llm_calls) calls[kind] = count;
  return {{"config", config},
          {"timings_ms", timings_ms},
          {"path_count", path_count},
          {"feature_counts", {{"consolidated", consolidated_features}, {"selected", selected_features}}},
          {"llm_calls", calls},
          {"warnings", warnings}};
}

RunReport run_pipeline(const RunConfig& config) {
  config.validate();
  RunReport report;
  report.config = config.to_json();

  const auto corpus = load_validated_dataset(config, report.warnings);
  const auto gateway = make_gateway(config);
  const auto started = std::chrono::steady_clock::now();

  timed(report.timings_ms, "fdg", [&] { return stage_describe(config, corpus, *gateway, report.warnings); });
  const auto online_started = std::chrono::steady_clock::now();
  const auto paths =
      timed(report.timings_ms, "path_explorer", [&] { return stage_explore(config, corpus, *gateway, report.warnings); });
  const auto consolidated =
      timed(report.timings_ms, "join_executor", [&] { return stage_execute(config, corpus, report.warnings); });
  const auto selection = timed(report.timings_ms, "feature_selector",
                               [&] { return stage_select(config, corpus, *gateway, report.warnings); });

  const auto now = std::chrono::steady_clock::now();
  report.timings_ms["online_total"] = std::chrono::duration<double, std::milli>(now - online_started).count();
  report.timings_ms["total"] = std::chrono::duration<double, std::milli>(now - started).count();
  report.path_count = paths.size();
  report.consolidated_features = consolidated.foreign_features().size();
  report.selected_features = selection.ranking.selected.size();
  for (const auto kind : {llm::PromptKind::Descriptions, llm::PromptKind::TableScoring, llm::PromptKind::FeatureRanking}) {
    report.llm_calls[std::string(llm::to_string(kind))] = gateway->completion_calls(kind);
  }

  write_json(config.out_dir / artifacts::kReport, report.to_json());
  return report;
}

}  // namespace relaug
