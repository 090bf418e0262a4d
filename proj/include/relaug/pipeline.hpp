#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "relaug/corpus.hpp"
#include "relaug/fdg.hpp"
#include "relaug/fsel.hpp"
#include "relaug/jex.hpp"
#include "relaug/llm.hpp"
#include "relaug/pex.hpp"

namespace relaug {

enum class LlmBackend { Stub, Remote };

struct RunConfig {
  std::filesystem::path dataset_dir;
  std::filesystem::path out_dir;
  std::size_t max_len = 7;
  std::size_t paths = 10;
  std::size_t features = 10;
  std::size_t prefilter = 100;
  Weights weights;
  LlmBackend llm = LlmBackend::Stub;
  std::string model = std::string(llm::kDefaultModel);
  SelectionMethod method = SelectionMethod::Hybrid;
  Executor executor = Executor::Yannakakis;
  std::size_t threads = 0;  ///< 0 means hardware concurrency
  std::uint64_t seed = 0;
  std::size_t token_budget = 100000;
  std::optional<std::filesystem::path> stub_script;
  std::string endpoint;
  std::string api_key;

  /// Throws std::invalid_argument unless max_len >= 2, paths >= 1, features >= 1, prefilter >= features and
  /// the weights are valid.
  void validate() const;
  std::size_t worker_threads() const;
  /// Echo for report.json; the API key is never included.
  nlohmann::json to_json() const;
};

namespace artifacts {
inline constexpr const char* kDescriptions = "descriptions.json";
inline constexpr const char* kTableScores = "table_scores.json";
inline constexpr const char* kPaths = "paths.json";
inline constexpr const char* kConsolidated = "consolidated.csv";
inline constexpr const char* kConsolidation = "consolidation.json";
inline constexpr const char* kAugmented = "augmented.csv";
inline constexpr const char* kSelection = "selection.json";
inline constexpr const char* kReport = "report.json";
inline constexpr const char* kAuditLog = "llm_audit.jsonl";
}  // namespace artifacts

std::unique_ptr<llm::Gateway> make_gateway(const RunConfig& config);

/// Loads the dataset and aborts with DatasetError on any graph violation; graph warnings are appended.
Corpus load_validated_dataset(const RunConfig& config, std::vector<std::string>& warnings);

/// Each stage reads what earlier stages left in `out_dir` and writes its own artifacts there.
DescriptorSet stage_describe(const RunConfig& config, const Corpus& corpus, llm::Gateway& gateway,
                             std::vector<std::string>& warnings);
std::vector<ScoredPath> stage_explore(const RunConfig& config, const Corpus& corpus, llm::Gateway& gateway,
                                      std::vector<std::string>& warnings);
ConsolidatedTable stage_execute(const RunConfig& config, const Corpus& corpus, std::vector<std::string>& warnings);
SelectionResult stage_select(const RunConfig& config, const Corpus& corpus, llm::Gateway& gateway,
                             std::vector<std::string>& warnings);

/// Descriptions cached by the describe stage, or all-absent when there is no usable cache.
DescriptorSet load_descriptors(const RunConfig& config, const Corpus& corpus);

struct RunReport {
  nlohmann::json config;
  std::map<std::string, double> timings_ms;
  std::size_t path_count = 0;
  std::size_t consolidated_features = 0;
  std::size_t selected_features = 0;
  std::map<std::string, std::size_t> llm_calls;
  std::vector<std::string> warnings;

  nlohmann::json to_json() const;
};

/// describe -> explore -> execute -> select, then report.json.
RunReport run_pipeline(const RunConfig& config);

}  // namespace relaug
