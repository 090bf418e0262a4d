#include <cstdlib>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"
#include "relaug/csv.hpp"
#include "relaug/pipeline.hpp"
#include "relaug/synthetic.hpp"

namespace {

using nlohmann::json;
using namespace relaug;

Weights parse_weights(const std::string& text) {
  std::vector<double> parts;
  std::stringstream stream(text);
  std::string item;
  while (std::getline(stream, item, ',')) {
    std::size_t used = 0;
    const double value = std::stod(item, &used);
    if (used != item.size()) throw std::invalid_argument("bad weight '" + item + "'");
    parts.push_back(value);
  }
  if (parts.size() != 3) throw std::invalid_argument("--weights expects three comma-separated numbers");
  return {parts[0], parts[1], parts[2]};
}

void print_warnings(const std::vector<std::string>& warnings) {
  for (const auto& warning : warnings) std::cerr << "relaug: warning: " << warning << "\n";
}

void require(const std::filesystem::path& path, const char* flag) {
  if (path.empty()) throw std::invalid_argument(std::string(flag) + " is required");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"relaug: LLM-guided feature augmentation over relational tables"};
  app.fallthrough();
  app.require_subcommand(1);
  app.set_config("--config", "", "TOML or INI file with option defaults");

  RunConfig config;
  std::string dataset;
  std::string out;
  std::string weights = "0.333333333333333333,0.333333333333333333,0.333333333333333333";
  std::string llm = "stub";
  std::string method = "hybrid";
  std::string executor = "yannakakis";
  std::string stub_script;
  std::size_t repetitions = 5;
  SyntheticOptions synthetic;
  std::string kind = "chain";
  bool bench_defaults = true;

  app.add_option("--dataset", dataset, "Dataset directory (graph.json plus one CSV per table)");
  app.add_option("--out", out, "Output directory for artifacts");
  app.add_option("--max-len", config.max_len, "Maximum join path length")->capture_default_str();
  app.add_option("--paths", config.paths, "Join paths to keep")->capture_default_str();
  app.add_option("--features", config.features, "Features to select")->capture_default_str();
  app.add_option("--prefilter", config.prefilter, "Features shown to the ranking prompt")->capture_default_str();
  app.add_option("--weights", weights, "Coverage, uniqueness and size-ratio weights (a,b,c)");
  app.add_option("--llm", llm, "LLM backend")->check(CLI::IsMember({"stub", "remote"}))->capture_default_str();
  app.add_option("--model", config.model, "Model identifier")->capture_default_str();
  app.add_option("--method", method, "Feature selection method")
      ->check(CLI::IsMember({"hybrid", "stats-only", "stats_only", "llm-only", "llm_only", "none"}))
      ->capture_default_str();
  app.add_option("--executor", executor, "Join executor")
      ->check(CLI::IsMember({"yannakakis", "binary"}))
      ->capture_default_str();
  app.add_option("--threads", config.threads, "Worker threads (0: hardware concurrency)")->capture_default_str();
  app.add_option("--seed", config.seed, "Seed for synthetic generation")->capture_default_str();
  app.add_option("--token-budget", config.token_budget, "Prompt token budget")->capture_default_str();
  app.add_option("--stub-script", stub_script, "JSON file of canned stub answers per prompt kind");
  app.add_option("--endpoint", config.endpoint, "Chat-completions URL")->envname("RELAUG_LLM_ENDPOINT");
  app.add_option("--api-key", config.api_key, "API key")->envname("RELAUG_LLM_API_KEY");
  app.add_option("--repetitions", repetitions, "Timed repetitions per executor (bench)")->capture_default_str();
  app.add_option("--kind", kind, "Synthetic schema (gen, bench)")->check(CLI::IsMember({"chain", "star"}));
  auto* tables_option = app.add_option("--tables", synthetic.tables, "Synthetic table count (gen, bench)");
  auto* rows_option = app.add_option("--rows", synthetic.rows, "Rows per synthetic table (gen, bench)");
  auto* selectivity_option =
      app.add_option("--selectivity", synthetic.selectivity, "Probability a synthetic foreign key matches");
  app.add_option("--planted-hop", synthetic.planted_hop, "Hop distance of the planted signal (gen)");

  auto* run = app.add_subcommand("run", "Run every stage and write report.json");
  auto* describe = app.add_subcommand("describe", "Generate feature descriptions");
  auto* explore_cmd = app.add_subcommand("explore", "Score tables and enumerate join paths");
  auto* execute = app.add_subcommand("execute", "Materialize and consolidate the join paths");
  auto* select = app.add_subcommand("select", "Select features and write augmented.csv");
  auto* bench = app.add_subcommand("bench", "Time the binary and Yannakakis executors");
  auto* gen = app.add_subcommand("gen", "Write a synthetic dataset to --out");

  CLI11_PARSE(app, argc, argv);

  try {
    config.dataset_dir = dataset;
    config.out_dir = out;
    config.weights = parse_weights(weights);
    config.llm = llm == "remote" ? LlmBackend::Remote : LlmBackend::Stub;
    config.method = selection_method_from_string(method);
    config.executor = executor == "binary" ? Executor::Binary : Executor::Yannakakis;
    if (!stub_script.empty()) config.stub_script = stub_script;
    synthetic.kind = synthetic_kind_from_string(kind);
    synthetic.seed = config.seed;
    bench_defaults = tables_option->count() == 0 && rows_option->count() == 0 && selectivity_option->count() == 0;

    if (*gen) {
      require(config.out_dir, "--out");
      generate_synthetic(synthetic, config.out_dir);
      std::cout << json{{"dataset", config.out_dir.string()}, {"kind", kind}, {"tables", synthetic.tables},
                        {"rows", synthetic.rows}, {"selectivity", synthetic.selectivity}, {"seed", synthetic.seed}}
                       .dump(2)
                << "\n";
      return EXIT_SUCCESS;
    }

    if (*bench) {
      std::vector<std::string> warnings;
      std::optional<Corpus> corpus;
      std::vector<JoinPath> paths;
      if (!config.dataset_dir.empty()) {
        config.validate();
        corpus.emplace(load_validated_dataset(config, warnings));
        auto gateway = make_gateway(RunConfig{});
        const auto scores = score_tables(*corpus, absent_descriptors(*corpus), *gateway, {}, &warnings);
        for (auto& scored : explore(*corpus, scores, {config.max_len, config.paths, config.weights}, &warnings)) {
          paths.push_back(std::move(scored.path));
        }
      } else {
        if (bench_defaults) {
          synthetic.rows = 100000;
          synthetic.selectivity = 0.01;
        }
        corpus.emplace(make_synthetic_corpus(synthetic));
        paths = synthetic.kind == SyntheticKind::Chain ? chain_prefix_paths(*corpus) : std::vector<JoinPath>{};
      }
      const auto report = to_json(bench_join_strategies(*corpus, paths, repetitions));
      if (!config.out_dir.empty()) {
        std::filesystem::create_directories(config.out_dir);
        csv::write_file_atomic(config.out_dir / "bench.json", report.dump(2) + "\n");
      }
      print_warnings(warnings);
      std::cout << report.dump(2) << "\n";
      return EXIT_SUCCESS;
    }

    require(config.dataset_dir, "--dataset");
    require(config.out_dir, "--out");
    config.validate();

    if (*run) {
      const auto report = run_pipeline(config);
      print_warnings(report.warnings);
      std::cout << report.to_json().dump(2) << "\n";
      return EXIT_SUCCESS;
    }

    std::vector<std::string> warnings;
    const auto corpus = load_validated_dataset(config, warnings);
    json summary;
    if (*describe) {
      auto gateway = make_gateway(config);
      const auto descriptors = stage_describe(config, corpus, *gateway, warnings);
      summary = {{"descriptions", descriptors.size()},
                 {"absent", descriptors.count(DescriptorSource::Absent)},
                 {"llm_calls", gateway->completion_calls()}};
    } else if (*explore_cmd) {
      auto gateway = make_gateway(config);
      summary = {{"paths", stage_explore(config, corpus, *gateway, warnings).size()},
                 {"llm_calls", gateway->completion_calls()}};
    } else if (*execute) {
      summary = {{"features", stage_execute(config, corpus, warnings).foreign_features().size()}};
    } else if (*select) {
      auto gateway = make_gateway(config);
      const auto result = stage_select(config, corpus, *gateway, warnings);
      summary = {{"selected", result.ranking.selected},
                 {"method", to_string(result.ranking.method)},
                 {"llm_calls", gateway->completion_calls()}};
    }
    print_warnings(warnings);
    std::cout << summary.dump(2) << "\n";
    return EXIT_SUCCESS;
  } catch (const std::exception& error) {
    std::cerr << "relaug: error: " << error.what() << "\n";
    return EXIT_FAILURE;
  }
}
